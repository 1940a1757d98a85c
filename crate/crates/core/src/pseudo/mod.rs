//! Pseudopotential of an rf drive: nulls, secular modes, principal axes and well depth.

pub mod closed_form;
mod depth;
mod grid;
mod model;
mod modes;

pub use depth::{trap_depth, DepthSearch, TrapDepthResult};
pub use grid::{sample_grid, write_grid_csv, GridRegion, GridSample};
pub use model::{
    quadrupole_radial_frequency, PseudoModel, QuadrupoleTrapModel, RfDrive, RfPhasors,
};
pub use modes::{
    axis_angle, cooling_geometry_check, intrinsic_axes, secular_modes, IntrinsicAxes, Mode,
    ModeOverlap, ModeSolution, DEFAULT_OVERLAP_THRESHOLD, DEGENERACY_TOLERANCE,
};
