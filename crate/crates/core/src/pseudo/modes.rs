use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::model::PseudoModel;
use crate::error::{Error, Result};
use crate::surface::{Mat3, Vec3};

/// Relative frequency difference below which two modes count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Relative eigenvalue magnitude treated as zero curvature.
const FLAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Angular frequency (rad/s); zero for an unconfined direction.
    pub omega: f64,
    pub axis: Vec3,
    pub confined: bool,
    /// Angle between the axis and the surface normal, in [0, π/2].
    /// `None` when the mode is part of a degenerate pair.
    pub axis_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub position: Vec3,
    /// Sorted by ascending frequency.
    pub modes: Vec<Mode>,
    /// Index pairs of degenerate confined modes.
    pub degenerate: Vec<(usize, usize)>,
}

impl ModeSolution {
    /// Build from a curvature matrix `∂²U/∂rᵢ∂rⱼ` (J/m²) for a particle of mass `mass`.
    pub fn from_curvature(position: Vec3, curvature: &Mat3, mass: f64) -> Result<Self> {
        let sym = (curvature + curvature.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let scale = eig.eigenvalues.amax();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut modes = Vec::with_capacity(3);
        for &i in &order {
            let l = eig.eigenvalues[i];
            let axis: Vec3 = eig.eigenvectors.column(i).into_owned();
            let flat = l.abs() <= FLAT_TOLERANCE * scale || scale == 0.0;
            if l < 0.0 && !flat {
                return Err(Error::Unstable {
                    eigenvalue: l,
                    direction: [axis.x, axis.y, axis.z],
                });
            }
            modes.push(Mode {
                omega: if flat { 0.0 } else { (l / mass).sqrt() },
                axis: canonical_sign(axis),
                confined: !flat,
                axis_angle: Some(axis_angle(&axis)),
            });
        }
        let mut degenerate = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, b) = (&modes[i], &modes[j]);
                if a.confined
                    && b.confined
                    && (a.omega - b.omega).abs() <= DEGENERACY_TOLERANCE * a.omega.max(b.omega)
                {
                    degenerate.push((i, j));
                }
            }
        }
        for &(i, j) in &degenerate {
            modes[i].axis_angle = None;
            modes[j].axis_angle = None;
        }
        Ok(Self {
            position,
            modes,
            degenerate,
        })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn is_degenerate(&self, index: usize) -> bool {
        self.degenerate
            .iter()
            .any(|&(i, j)| i == index || j == index)
    }

    /// Modes whose axis lies mostly in the radial (x, y) plane.
    pub fn radial(&self) -> Vec<&Mode> {
        self.modes
            .iter()
            .filter(|m| m.axis.z.abs() < FRAC_1_SQRT_2)
            .collect()
    }
}

fn canonical_sign(v: Vec3) -> Vec3 {
    // largest component positive
    let i = v.iamax();
    if v[i] < 0.0 {
        -v
    } else {
        v
    }
}

/// Angle of `axis` from the surface normal folded into [0, π/2].
pub fn axis_angle(axis: &Vec3) -> f64 {
    let c = (axis.y.abs() / axis.norm()).min(1.0);
    c.acos().clamp(0.0, FRAC_PI_2)
}

/// Secular modes at `point` of `q Φ_pp + q Φ_static`, optionally including an
/// additional static potential given by its Hessian (V/m²).
pub fn secular_modes(
    model: &PseudoModel,
    point: &Vec3,
    extra_hessian: Option<&Mat3>,
) -> Result<ModeSolution> {
    let mut h = model.total_derivatives(point)?.hessian;
    if let Some(extra) = extra_hessian {
        h += extra * model.species().charge();
    }
    ModeSolution::from_curvature(*point, &h, model.species().mass())
}

/// Modes after raising all control electrodes (and the ground plane) by `offset`.
/// The equilibrium is re-found starting from `null`.
pub fn intrinsic_axes(model: &PseudoModel, null: &Vec3, offset: f64) -> Result<IntrinsicAxes> {
    let shifted = model.clone().with_control_offset(offset);
    let position = if offset == 0.0 {
        *null
    } else {
        shifted.find_equilibrium(null)?
    };
    let modes = secular_modes(&shifted, &position, None)?;
    let radial = modes.radial();
    let (rotation, splitting) = match radial.as_slice() {
        [a, b, ..] => {
            let lower = if a.omega <= b.omega { a } else { b };
            (axis_angle(&lower.axis), (a.omega - b.omega).abs())
        }
        _ => (0.0, 0.0),
    };
    Ok(IntrinsicAxes {
        modes,
        rotation,
        splitting,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicAxes {
    pub modes: ModeSolution,
    /// Angle of the lower radial mode axis from the surface normal (rad).
    pub rotation: f64,
    /// Radial frequency splitting (rad/s).
    pub splitting: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOverlap {
    pub mode: usize,
    pub omega: f64,
    pub overlap: f64,
    pub weak: bool,
    pub degenerate: bool,
    pub confined: bool,
}

impl ModeOverlap {
    pub fn flagged(&self) -> bool {
        self.confined && (self.weak || self.degenerate)
    }
}

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.05;

/// Projection of a cooling beam onto each principal axis.
pub fn cooling_geometry_check(
    modes: &ModeSolution,
    beam: &Vec3,
    threshold: f64,
) -> Result<Vec<ModeOverlap>> {
    if !((beam.norm() - 1.0).abs() < 1e-9) {
        return Err(Error::Validation(format!(
            "beam direction must be a unit vector, |k| = {}",
            beam.norm()
        )));
    }
    Ok(modes
        .modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let overlap = beam.dot(&m.axis);
            ModeOverlap {
                mode: i,
                omega: m.omega,
                overlap,
                weak: overlap.abs() < threshold,
                degenerate: modes.is_degenerate(i),
                confined: m.confined,
            }
        })
        .collect())
}
