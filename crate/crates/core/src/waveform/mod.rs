//! Multizone axial potentials: per-channel basis potentials along the trap
//! axis, voltage solutions for target wells, transport and separation sequences.

mod basis;
mod sequence;
mod solve;

pub use basis::{control_channels, mirror_channels, AxialBasis, Channel, Taylor};
pub use sequence::{separation_ramp, transport_sequence, Adiabaticity, VoltageSequence};
pub use solve::{
    diagnose, solve_well, Matching, SolveOptions, WellDiagnostics, WellSolution, WellSpec,
    DEFAULT_RAIL, DEFAULT_TOLERANCE,
};
