//! Axis-aligned rectangular patches in the grounded plane.
//!
//! A patch at 1 V produces a potential equal to the solid angle it subtends
//! divided by 2π. For a rectangle the solid angle splits into four
//! corner terms `atan(X Z / (h r))`, with `X`, `Z` the corner offsets from
//! the observation point, `h` its height and `r` the distance to the corner.
//! Derivatives are taken by forward-mode automatic differentiation of that
//! closed form.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use num_dual::{gradient, hessian, third_partial_derivative_vec, DualNum};
use serde::{Deserialize, Serialize};

use super::strip::check_half_space;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPatch {
    x: (f64, f64),
    z: (f64, f64),
}

impl RectPatch {
    pub fn new(x: (f64, f64), z: (f64, f64)) -> Result<Self> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok(x) || !ok(z) {
            return Err(Error::Validation(format!(
                "rectangle extents must be finite with positive area, got x {x:?}, z {z:?}"
            )));
        }
        Ok(Self { x, z })
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x
    }

    pub fn z_range(&self) -> (f64, f64) {
        self.z
    }

    pub fn area(&self) -> f64 {
        (self.x.1 - self.x.0) * (self.z.1 - self.z.0)
    }

    pub(crate) fn translated(&self, dx: f64, dz: f64) -> Self {
        Self {
            x: (self.x.0 + dx, self.x.1 + dx),
            z: (self.z.0 + dz, self.z.1 + dz),
        }
    }

    pub(crate) fn scaled(&self, s: f64) -> Self {
        Self {
            x: (self.x.0 * s, self.x.1 * s),
            z: (self.z.0 * s, self.z.1 * s),
        }
    }

    fn unit<D: DualNum<Primitive = f64>>(&self, x: D, y: D, z: D) -> D {
        let corner = |cx: f64, cz: f64| {
            let dx = D::from(cx) - x.clone();
            let dz = D::from(cz) - z.clone();
            let r =
                (dx.clone() * dx.clone() + dz.clone() * dz.clone() + y.clone() * y.clone()).sqrt();
            (dx * dz / (y.clone() * r)).atan()
        };
        let (x1, x2) = self.x;
        let (z1, z2) = self.z;
        (corner(x2, z2) - corner(x1, z2) - corner(x2, z1) + corner(x1, z1)) / TAU
    }

    /// Potential at `p` for 1 V on the patch.
    pub fn unit_potential(&self, p: &Vector3<f64>) -> Result<f64> {
        check_point(p)?;
        Ok(self.unit(p.x, p.y, p.z))
    }

    pub fn unit_gradient(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        check_point(p)?;
        Ok(gradient(|v| self.unit(v[0], v[1], v[2]), p).1)
    }

    /// Value, gradient and Hessian of the unit potential.
    pub fn unit_derivatives(&self, p: &Vector3<f64>) -> Result<(f64, Vector3<f64>, Matrix3<f64>)> {
        check_point(p)?;
        Ok(hessian(|v| self.unit(v[0], v[1], v[2]), p))
    }

    /// Third-derivative tensor of the unit potential: `t[i][(j, k)] = ∂ᵢ∂ⱼ∂ₖΦ`.
    pub fn unit_third(&self, p: &Vector3<f64>) -> Result<[Matrix3<f64>; 3]> {
        check_point(p)?;
        let xs = [p.x, p.y, p.z];
        let mut t = [Matrix3::zeros(); 3];
        for i in 0..3 {
            for j in i..3 {
                for k in j..3 {
                    let (.., d3) =
                        third_partial_derivative_vec(|v| self.unit(v[0], v[1], v[2]), &xs, i, j, k);
                    for (a, b, c) in [
                        (i, j, k),
                        (i, k, j),
                        (j, i, k),
                        (j, k, i),
                        (k, i, j),
                        (k, j, i),
                    ] {
                        t[a][(b, c)] = d3;
                    }
                }
            }
        }
        Ok(t)
    }
}

fn check_point(p: &Vector3<f64>) -> Result<()> {
    check_half_space(p.x, p.y)?;
    if !p.z.is_finite() {
        return Err(Error::Domain(format!("non-finite z = {}", p.z)));
    }
    Ok(())
}
