//! Analytic electrostatics of electrodes embedded in a grounded plane.
//!
//! The plane is `y = 0` and ions live in `y > 0`. Electrodes are infinite
//! strips along `z` or axis-aligned rectangles. Gaps between electrodes are
//! not modelled: everything not covered by an electrode is at 0 V.

mod file;
mod patch;
mod strip;

pub use file::{FileError, GeometryFile, TrapSection, FORMAT_VERSION};
pub use patch::RectPatch;
pub use strip::Strip;

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Rf,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Strip(Strip),
    Rect(RectPatch),
}

impl Shape {
    pub fn x_range(&self) -> (f64, f64) {
        match self {
            Shape::Strip(s) => (s.lo(), s.hi()),
            Shape::Rect(r) => r.x_range(),
        }
    }

    pub fn z_range(&self) -> (f64, f64) {
        match self {
            Shape::Strip(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Shape::Rect(r) => r.z_range(),
        }
    }
}

/// Potential value with its first and second derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Mat3,
}

impl Derivatives {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            gradient: Vec3::zeros(),
            hessian: Mat3::zeros(),
        }
    }

    fn scaled(self, s: f64) -> Self {
        Self {
            value: self.value * s,
            gradient: self.gradient * s,
            hessian: self.hessian * s,
        }
    }

    fn add(&mut self, other: &Self) {
        self.value += other.value;
        self.gradient += other.gradient;
        self.hessian += other.hessian;
    }

    /// Electric field `-∇Φ`.
    pub fn field(&self) -> Vec3 {
        -self.gradient
    }
}

/// Third-derivative tensor `t[i][(j, k)] = ∂ᵢ∂ⱼ∂ₖΦ`.
pub type Third = [Mat3; 3];

/// A biased region of the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Electrode {
    pub label: String,
    pub role: Role,
    pub shape: Shape,
    /// Static bias (V). For rf electrodes this is a dc offset on top of the drive.
    pub bias: f64,
    /// Drive phase (rad) of rf electrodes, in `[0, 2π)`.
    pub rf_phase: f64,
}

impl Electrode {
    pub fn strip(
        label: impl Into<String>,
        role: Role,
        lo: f64,
        hi: f64,
        bias: f64,
    ) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            role,
            shape: Shape::Strip(Strip::new(lo, hi)?),
            bias,
            rf_phase: 0.0,
        })
    }

    pub fn rect(
        label: impl Into<String>,
        role: Role,
        x: (f64, f64),
        z: (f64, f64),
        bias: f64,
    ) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            role,
            shape: Shape::Rect(RectPatch::new(x, z)?),
            bias,
            rf_phase: 0.0,
        })
    }

    pub fn with_phase(mut self, phase: f64) -> Result<Self> {
        if !(0.0..TAU).contains(&phase) {
            return Err(Error::Validation(format!(
                "rf phase must lie in [0, 2π), got {phase}"
            )));
        }
        self.rf_phase = phase;
        Ok(self)
    }

    pub fn unit_potential(&self, p: &Vec3) -> Result<f64> {
        match &self.shape {
            Shape::Strip(s) => s.unit_potential(p.x, p.y),
            Shape::Rect(r) => r.unit_potential(p),
        }
    }

    pub fn unit_gradient(&self, p: &Vec3) -> Result<Vec3> {
        match &self.shape {
            Shape::Strip(s) => {
                let g = s.unit_gradient(p.x, p.y)?;
                Ok(Vec3::new(g.x, g.y, 0.0))
            }
            Shape::Rect(r) => r.unit_gradient(p),
        }
    }

    pub fn unit_derivatives(&self, p: &Vec3) -> Result<Derivatives> {
        match &self.shape {
            Shape::Strip(s) => {
                let value = s.unit_potential(p.x, p.y)?;
                let g = s.unit_gradient(p.x, p.y)?;
                let h = s.unit_hessian(p.x, p.y)?;
                let mut hessian = Mat3::zeros();
                hessian.fixed_view_mut::<2, 2>(0, 0).copy_from(&h);
                Ok(Derivatives {
                    value,
                    gradient: Vec3::new(g.x, g.y, 0.0),
                    hessian,
                })
            }
            Shape::Rect(r) => {
                let (value, gradient, hessian) = r.unit_derivatives(p)?;
                Ok(Derivatives {
                    value,
                    gradient,
                    hessian,
                })
            }
        }
    }

    pub fn unit_third(&self, p: &Vec3) -> Result<Third> {
        match &self.shape {
            Shape::Strip(s) => {
                let [xxx, xxy, xyy, yyy] = s.unit_third(p.x, p.y)?;
                let mut t = [Mat3::zeros(); 3];
                t[0][(0, 0)] = xxx;
                t[0][(0, 1)] = xxy;
                t[0][(1, 0)] = xxy;
                t[0][(1, 1)] = xyy;
                t[1][(0, 0)] = xxy;
                t[1][(0, 1)] = xyy;
                t[1][(1, 0)] = xyy;
                t[1][(1, 1)] = yyy;
                Ok(t)
            }
            Shape::Rect(r) => r.unit_third(p),
        }
    }

    /// Potential from this electrode at its own bias.
    pub fn potential(&self, p: &Vec3) -> Result<f64> {
        Ok(self.bias * self.unit_potential(p)?)
    }

    /// Field `-∇Φ` from this electrode at its own bias (V/m).
    pub fn field(&self, p: &Vec3) -> Result<Vec3> {
        Ok(-self.unit_gradient(p)? * self.bias)
    }

    pub fn hessian(&self, p: &Vec3) -> Result<Mat3> {
        Ok(self.unit_derivatives(p)?.hessian * self.bias)
    }

    fn overlaps(&self, other: &Electrode) -> bool {
        let open = |(a, b): (f64, f64), (c, d): (f64, f64)| a.max(c) < b.min(d);
        open(self.shape.x_range(), other.shape.x_range())
            && open(self.shape.z_range(), other.shape.z_range())
    }
}

/// A set of non-overlapping electrodes in the grounded plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarGeometry {
    electrodes: Vec<Electrode>,
}

impl PlanarGeometry {
    pub fn new(electrodes: Vec<Electrode>) -> Result<Self> {
        if electrodes.is_empty() {
            return Err(Error::Validation("geometry has no electrodes".into()));
        }
        for (i, a) in electrodes.iter().enumerate() {
            if !a.bias.is_finite() {
                return Err(Error::Validation(format!(
                    "electrode `{}` has a non-finite bias",
                    a.label
                )));
            }
            if !(0.0..TAU).contains(&a.rf_phase) {
                return Err(Error::Validation(format!(
                    "electrode `{}`: rf phase outside [0, 2π)",
                    a.label
                )));
            }
            for b in &electrodes[i + 1..] {
                if a.label == b.label {
                    return Err(Error::Validation(format!(
                        "duplicate electrode label `{}`",
                        a.label
                    )));
                }
                if a.overlaps(b) {
                    return Err(Error::Validation(format!(
                        "electrodes `{}` and `{}` overlap",
                        a.label, b.label
                    )));
                }
            }
        }
        Ok(Self { electrodes })
    }

    /// Two rf strips `(-d, 0)` and `(d, ∞)`.
    pub fn four_wire(d: f64) -> Result<Self> {
        check_d(d)?;
        Self::new(vec![
            Electrode::strip("rf1", Role::Rf, -d, 0.0, 0.0)?,
            Electrode::strip("rf2", Role::Rf, d, f64::INFINITY, 0.0)?,
        ])
    }

    /// Two rf strips `(-3d/2, -d/2)` and `(d/2, 3d/2)`.
    pub fn five_wire(d: f64) -> Result<Self> {
        check_d(d)?;
        Self::new(vec![
            Electrode::strip("rf1", Role::Rf, -1.5 * d, -0.5 * d, 0.0)?,
            Electrode::strip("rf2", Role::Rf, 0.5 * d, 1.5 * d, 0.0)?,
        ])
    }

    /// Five-wire rf strips flanked on both sides by `segments` control pads of
    /// length `pitch` along z and width `width` in x, centred on z = 0. Pads are
    /// labelled `L0, L1, …` and `R0, R1, …` from negative to positive z.
    pub fn segmented_five_wire(d: f64, pitch: f64, segments: usize, width: f64) -> Result<Self> {
        check_d(d)?;
        if segments == 0 || !(pitch > 0.0 && width > 0.0) {
            return Err(Error::Validation(
                "need at least one segment with positive pitch and width".into(),
            ));
        }
        let mut electrodes = Self::five_wire(d)?.electrodes;
        // edges written as multiples of pitch/2 so mirrored pads are exact mirrors
        let edge = |k: usize| (2.0 * k as f64 - segments as f64) * 0.5 * pitch;
        for side in ["L", "R"] {
            let x = if side == "L" {
                (-1.5 * d - width, -1.5 * d)
            } else {
                (1.5 * d, 1.5 * d + width)
            };
            for k in 0..segments {
                let z = (edge(k), edge(k + 1));
                electrodes.push(Electrode::rect(
                    format!("{side}{k}"),
                    Role::Control,
                    x,
                    z,
                    0.0,
                )?);
            }
        }
        Self::new(electrodes)
    }

    pub fn electrodes(&self) -> &[Electrode] {
        &self.electrodes
    }

    pub fn len(&self) -> usize {
        self.electrodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.electrodes.is_empty()
    }

    pub fn electrode(&self, label: &str) -> Option<&Electrode> {
        self.electrodes.iter().find(|e| e.label == label)
    }

    pub fn rf_indices(&self) -> Vec<usize> {
        self.indices(Role::Rf)
    }

    pub fn control_indices(&self) -> Vec<usize> {
        self.indices(Role::Control)
    }

    fn indices(&self, role: Role) -> Vec<usize> {
        (0..self.electrodes.len())
            .filter(|&i| self.electrodes[i].role == role)
            .collect()
    }

    /// Own biases, in electrode order.
    pub fn biases(&self) -> Vec<f64> {
        self.electrodes.iter().map(|e| e.bias).collect()
    }

    pub fn with_biases(&self, biases: &[f64]) -> Result<Self> {
        self.check_biases(biases)?;
        let mut g = self.clone();
        for (e, &b) in g.electrodes.iter_mut().zip(biases) {
            e.bias = b;
        }
        Ok(g)
    }

    /// Set the rf phase of one electrode.
    pub fn with_phase(&self, label: &str, phase: f64) -> Result<Self> {
        let mut g = self.clone();
        let e = g
            .electrodes
            .iter_mut()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::Validation(format!("no electrode `{label}`")))?;
        *e = e.clone().with_phase(phase)?;
        Ok(g)
    }

    /// Smallest finite width among the rf electrodes, used as the natural length scale.
    pub fn length_scale(&self) -> f64 {
        let widths = self
            .electrodes
            .iter()
            .filter(|e| e.role == Role::Rf)
            .filter_map(|e| {
                let (a, b) = e.shape.x_range();
                (a.is_finite() && b.is_finite()).then_some(b - a)
            });
        let min = widths.fold(f64::INFINITY, f64::min);
        if min.is_finite() {
            min
        } else {
            // no bounded rf electrode; fall back to any bounded edge spacing
            self.electrodes
                .iter()
                .flat_map(|e| {
                    let (a, b) = e.shape.x_range();
                    [a, b]
                })
                .filter(|v| v.is_finite() && *v != 0.0)
                .map(f64::abs)
                .fold(f64::INFINITY, f64::min)
                .min(1.0)
        }
    }

    /// Rigid translation along x and z.
    pub fn translated(&self, dx: f64, dz: f64) -> Self {
        let mut g = self.clone();
        for e in &mut g.electrodes {
            e.shape = match e.shape {
                Shape::Strip(s) => Shape::Strip(s.translated(dx)),
                Shape::Rect(r) => Shape::Rect(r.translated(dx, dz)),
            };
        }
        g
    }

    /// Scale all coordinates by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        assert!(s > 0.0);
        let mut g = self.clone();
        for e in &mut g.electrodes {
            e.shape = match e.shape {
                Shape::Strip(st) => Shape::Strip(st.scaled(s)),
                Shape::Rect(r) => Shape::Rect(r.scaled(s)),
            };
        }
        g
    }

    fn check_biases(&self, biases: &[f64]) -> Result<()> {
        if biases.len() != self.electrodes.len() {
            return Err(Error::Validation(format!(
                "expected {} biases, got {}",
                self.electrodes.len(),
                biases.len()
            )));
        }
        Ok(())
    }

    /// Superposed potential for the given per-electrode biases.
    pub fn potential(&self, biases: &[f64], p: &Vec3) -> Result<f64> {
        self.check_biases(biases)?;
        let mut acc = 0.0;
        for (e, &b) in self.electrodes.iter().zip(biases) {
            let u = e.unit_potential(p)?;
            if b != 0.0 {
                acc += b * u;
            }
        }
        Ok(acc)
    }

    /// Superposed potential, gradient and Hessian for the given biases.
    pub fn derivatives(&self, biases: &[f64], p: &Vec3) -> Result<Derivatives> {
        self.check_biases(biases)?;
        let mut acc = Derivatives::zero();
        for (e, &b) in self.electrodes.iter().zip(biases) {
            let d = e.unit_derivatives(p)?;
            if b != 0.0 {
                acc.add(&d.scaled(b));
            }
        }
        Ok(acc)
    }

    pub fn field(&self, biases: &[f64], p: &Vec3) -> Result<Vec3> {
        self.check_biases(biases)?;
        let mut e = Vec3::zeros();
        for (el, &b) in self.electrodes.iter().zip(biases) {
            let g = el.unit_gradient(p)?;
            if b != 0.0 {
                e -= g * b;
            }
        }
        Ok(e)
    }

    /// Potential at the electrodes' own biases.
    pub fn static_potential(&self, p: &Vec3) -> Result<f64> {
        self.potential(&self.biases(), p)
    }
}

fn check_d(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "electrode spacing d must be positive, got {d}"
        )))
    }
}
