//! Design and analysis tools for radio-frequency (Paul) ion traps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crystal;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod pseudo;
pub mod recool;
pub mod surface;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};
pub use surface::{Electrode, PlanarGeometry, RectPatch, Role, Strip, Vec3};
pub use units::{constants, Frequency, IonSpecies};
