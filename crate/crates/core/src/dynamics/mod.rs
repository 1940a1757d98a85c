//! Time-domain ion motion in rf fields, micromotion and sideband analysis.

mod field;
mod integrate;
mod micromotion;
mod spectrum;

pub use field::{
    DriveConfig, DrivenGeometry, FieldPhasors, QuadrupoleField, RfField, UniformRfField,
};
pub use integrate::{integrate, propagate, IntegratorConfig, State, Trajectory};
pub use micromotion::{
    bessel_j, degrees, excess_micromotion, fluorescence_loss, modulation_index,
    phase_imbalance_micromotion, sideband_spectrum, MicromotionReport, PhaseImbalanceReport,
    SidebandSpectrum,
};
pub use spectrum::{spectral_decompose, SecularLine, SpectralReport, MIN_SECULAR_CYCLES};
