//! Infinite strips in the grounded plane `y = 0`, extending along `z`.
//!
//! The unit potential of a strip `lo < x < hi` is the difference of two
//! arctangents. Its derivatives are taken from the holomorphic function
//! `G(w) = (log(w - hi) - log(w - lo)) / π`, `w = x + iy`, whose imaginary
//! part is the potential up to a constant:
//! `∂ₓᵏ ∂ᵧˡ Φ = Im(iˡ G⁽ᵏ⁺ˡ⁾(w))`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strip between `lo` and `hi` along x. One edge may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    lo: f64,
    hi: f64,
}

pub(crate) fn check_half_space(x: f64, y: f64) -> Result<()> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("non-finite point ({x}, {y})")));
    }
    if y <= 0.0 {
        return Err(Error::Domain(format!(
            "y = {y} is not above the electrode plane"
        )));
    }
    Ok(())
}

impl Strip {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::Validation(format!(
                "strip edges must satisfy lo < hi, got ({lo}, {hi})"
            )));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY || (lo.is_infinite() && hi.is_infinite())
        {
            return Err(Error::Validation(
                "at most one strip edge may be infinite".into(),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub(crate) fn translated(&self, dx: f64) -> Self {
        Self {
            lo: self.lo + dx,
            hi: self.hi + dx,
        }
    }

    pub(crate) fn scaled(&self, s: f64) -> Self {
        Self {
            lo: self.lo * s,
            hi: self.hi * s,
        }
    }

    /// Potential at `(x, y)` for 1 V on the strip.
    pub fn unit_potential(&self, x: f64, y: f64) -> Result<f64> {
        check_half_space(x, y)?;
        let v = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => ((x - self.lo) / y).atan() - ((x - self.hi) / y).atan(),
            (false, true) => FRAC_PI_2 - ((x - self.hi) / y).atan(),
            (true, false) => FRAC_PI_2 + ((x - self.lo) / y).atan(),
            (false, false) => unreachable!("validated at construction"),
        };
        Ok(v / PI)
    }

    /// n-th complex derivative of `G`, n ≥ 1.
    fn g_derivative(&self, w: Complex64, n: i32) -> Complex64 {
        let factorial: f64 = (1..n).map(f64::from).product();
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let mut acc = Complex64::new(0.0, 0.0);
        if self.hi.is_finite() {
            acc += (w - self.hi).powi(-n);
        }
        if self.lo.is_finite() {
            acc -= (w - self.lo).powi(-n);
        }
        acc * (sign * factorial / PI)
    }

    /// `∂ₓᵏ∂ᵧˡ` of the unit potential for k + l = n ≥ 1, indexed by l.
    fn partials(&self, x: f64, y: f64, n: i32) -> Vec<f64> {
        let g = self.g_derivative(Complex64::new(x, y), n);
        let mut rot = Complex64::new(1.0, 0.0);
        (0..=n)
            .map(|_| {
                let v = (rot * g).im;
                rot *= Complex64::i();
                v
            })
            .collect()
    }

    /// Gradient of the unit potential `(∂ₓΦ, ∂ᵧΦ)`.
    pub fn unit_gradient(&self, x: f64, y: f64) -> Result<Vector2<f64>> {
        check_half_space(x, y)?;
        let d = self.partials(x, y, 1);
        Ok(Vector2::new(d[0], d[1]))
    }

    /// Electric field `-∇Φ` for 1 V on the strip.
    pub fn unit_field(&self, x: f64, y: f64) -> Result<Vector2<f64>> {
        Ok(-self.unit_gradient(x, y)?)
    }

    /// Second derivatives of the unit potential.
    pub fn unit_hessian(&self, x: f64, y: f64) -> Result<Matrix2<f64>> {
        check_half_space(x, y)?;
        let d = self.partials(x, y, 2);
        Ok(Matrix2::new(d[0], d[1], d[1], d[2]))
    }

    /// Third derivatives `[Φxxx, Φxxy, Φxyy, Φyyy]` of the unit potential.
    pub fn unit_third(&self, x: f64, y: f64) -> Result<[f64; 4]> {
        check_half_space(x, y)?;
        let d = self.partials(x, y, 3);
        Ok([d[0], d[1], d[2], d[3]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rules() {
        assert!(Strip::new(0.0, 1.0).is_ok());
        assert!(Strip::new(f64::NEG_INFINITY, 1.0).is_ok());
        assert!(Strip::new(0.0, f64::INFINITY).is_ok());
        assert!(Strip::new(1.0, 1.0).is_err());
        assert!(Strip::new(2.0, 1.0).is_err());
        assert!(Strip::new(f64::NEG_INFINITY, f64::INFINITY).is_err());
        assert!(Strip::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn rejects_plane_and_below() {
        let s = Strip::new(-1.0, 1.0).unwrap();
        assert!(matches!(s.unit_potential(0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(s.unit_field(0.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(
            s.unit_hessian(f64::NAN, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn surface_limit_and_decay() {
        let s = Strip::new(-1.0, 1.0).unwrap();
        let v = s.unit_potential(0.0, 1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
        let far = s.unit_potential(0.3, 1e9).unwrap();
        assert!(far.abs() < 1e-8);
        // outside the strip, on the plane, the potential goes to zero
        assert!(s.unit_potential(5.0, 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn semi_infinite_branches_agree_with_wide_finite_strip() {
        let left = Strip::new(f64::NEG_INFINITY, 0.5).unwrap();
        let right = Strip::new(0.5, f64::INFINITY).unwrap();
        let (x, y) = (0.2, 0.7);
        let sum = left.unit_potential(x, y).unwrap() + right.unit_potential(x, y).unwrap();
        assert!((sum - 1.0).abs() < 1e-15);
        let wide = Strip::new(-1e9, 0.5).unwrap();
        assert!(
            (wide.unit_potential(x, y).unwrap() - left.unit_potential(x, y).unwrap()).abs() < 1e-9
        );
        let gl = left.unit_gradient(x, y).unwrap();
        let gr = right.unit_gradient(x, y).unwrap();
        assert!((gl + gr).norm() < 1e-15);
    }
}
