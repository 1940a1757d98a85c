use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pseudo::{PseudoModel, QuadrupoleTrapModel, RfDrive};
use crate::surface::{PlanarGeometry, Vec3};
use crate::units::IonSpecies;

/// Field at a point split as `E(t) = E_c cos Ωt + E_s sin Ωt + E_static`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPhasors {
    pub in_phase: Vec3,
    pub quadrature: Vec3,
    pub static_field: Vec3,
}

impl FieldPhasors {
    pub fn at(&self, phase: f64) -> Vec3 {
        self.in_phase * phase.cos() + self.quadrature * phase.sin() + self.static_field
    }
}

/// A field source oscillating at a single rf frequency.
pub trait RfField {
    fn omega_rf(&self) -> f64;

    fn phasors(&self, p: &Vec3) -> Result<FieldPhasors>;

    /// Static potential (V), used for secular energy bookkeeping.
    fn static_potential(&self, _p: &Vec3) -> Result<f64> {
        Ok(0.0)
    }

    /// Whether the ion must stay above the `y = 0` electrode plane.
    fn bounded_by_surface(&self) -> bool {
        false
    }

    fn field(&self, p: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.phasors(p)?.at(self.omega_rf() * t))
    }

    /// Pseudopotential plus static potential energy (J).
    fn effective_energy(&self, species: &IonSpecies, p: &Vec3) -> Result<f64> {
        let ph = self.phasors(p)?;
        let q = species.charge();
        let pp = q * q * (ph.in_phase.norm_squared() + ph.quadrature.norm_squared())
            / (4.0 * species.mass() * self.omega_rf().powi(2));
        Ok(pp + q * self.static_potential(p)?)
    }
}

/// Spatially uniform `E₀ cos Ωt` plus an optional static field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRfField {
    pub amplitude: Vec3,
    pub omega_rf: f64,
    pub static_field: Vec3,
}

impl UniformRfField {
    pub fn new(amplitude: Vec3, omega_rf: f64) -> Result<Self> {
        if !(omega_rf.is_finite() && omega_rf > 0.0) {
            return Err(Error::Validation(format!(
                "rf frequency must be positive, got {omega_rf}"
            )));
        }
        Ok(Self {
            amplitude,
            omega_rf,
            static_field: Vec3::zeros(),
        })
    }
}

impl RfField for UniformRfField {
    fn omega_rf(&self) -> f64 {
        self.omega_rf
    }

    fn phasors(&self, _p: &Vec3) -> Result<FieldPhasors> {
        Ok(FieldPhasors {
            in_phase: self.amplitude,
            quadrature: Vec3::zeros(),
            static_field: self.static_field,
        })
    }

    fn static_potential(&self, p: &Vec3) -> Result<f64> {
        Ok(-self.static_field.dot(p))
    }
}

/// Ideal linear quadrupole with an optional uniform stray field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupoleField {
    pub model: QuadrupoleTrapModel,
    pub stray_field: Vec3,
}

impl From<QuadrupoleTrapModel> for QuadrupoleField {
    fn from(model: QuadrupoleTrapModel) -> Self {
        Self {
            model,
            stray_field: Vec3::zeros(),
        }
    }
}

impl RfField for QuadrupoleField {
    fn omega_rf(&self) -> f64 {
        self.model.omega_rf
    }

    fn phasors(&self, p: &Vec3) -> Result<FieldPhasors> {
        Ok(FieldPhasors {
            in_phase: self.model.field_amplitude(p),
            quadrature: Vec3::zeros(),
            static_field: self.stray_field,
        })
    }

    fn static_potential(&self, p: &Vec3) -> Result<f64> {
        Ok(-self.stray_field.dot(p))
    }
}

/// Drive applied to a planar geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Amplitude per rf electrode (V), in geometry rf order.
    pub rf_amplitudes: Vec<f64>,
    pub omega_rf: f64,
    /// Phase per rf electrode (rad).
    pub rf_phases: Vec<f64>,
    /// Static bias per electrode (V), all electrodes in geometry order.
    pub biases: Vec<f64>,
    pub stray_field: Vec3,
}

impl DriveConfig {
    /// Common amplitude on every rf electrode, phases and biases from the geometry.
    pub fn uniform(geometry: &PlanarGeometry, drive: &RfDrive) -> Self {
        let rf = geometry.rf_indices();
        Self {
            rf_amplitudes: vec![drive.amplitude(); rf.len()],
            omega_rf: drive.omega_rf(),
            rf_phases: rf
                .iter()
                .map(|&i| geometry.electrodes()[i].rf_phase)
                .collect(),
            biases: geometry.biases(),
            stray_field: Vec3::zeros(),
        }
    }

    pub fn validate(&self, geometry: &PlanarGeometry) -> Result<()> {
        let n_rf = geometry.rf_indices().len();
        if !(self.omega_rf.is_finite() && self.omega_rf > 0.0) {
            return Err(Error::Validation(format!(
                "rf frequency must be positive, got {}",
                self.omega_rf
            )));
        }
        if self.rf_amplitudes.len() != n_rf || self.rf_phases.len() != n_rf {
            return Err(Error::Validation(format!(
                "drive lists {} amplitudes and {} phases for {n_rf} rf electrodes",
                self.rf_amplitudes.len(),
                self.rf_phases.len()
            )));
        }
        if self.biases.len() != geometry.len() {
            return Err(Error::Validation(format!(
                "drive lists {} biases for {} electrodes",
                self.biases.len(),
                geometry.len()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.rf_amplitudes) || !finite(&self.rf_phases) || !finite(&self.biases) {
            return Err(Error::Validation("drive values must be finite".into()));
        }
        if let Some(&first) = self.rf_phases.first() {
            for &p in &self.rf_phases {
                let d = p - first;
                if !(d > -PI && d <= PI) {
                    return Err(Error::Validation(format!(
                        "rf phase difference {d} outside (-π, π]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Wrap a phase difference into (-π, π].
    pub fn wrap_phase(phase: f64) -> f64 {
        let w = phase.rem_euclid(TAU);
        if w > PI {
            w - TAU
        } else {
            w
        }
    }
}

/// Planar geometry under a [`DriveConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenGeometry {
    geometry: PlanarGeometry,
    drive: DriveConfig,
    rf: Vec<usize>,
}

impl DrivenGeometry {
    pub fn new(geometry: PlanarGeometry, drive: DriveConfig) -> Result<Self> {
        drive.validate(&geometry)?;
        let rf = geometry.rf_indices();
        Ok(Self {
            geometry,
            drive,
            rf,
        })
    }

    pub fn geometry(&self) -> &PlanarGeometry {
        &self.geometry
    }

    pub fn drive(&self) -> &DriveConfig {
        &self.drive
    }

    /// Matching pseudopotential model, for equilibrium and mode analysis.
    pub fn pseudo_model(&self, species: IonSpecies) -> Result<PseudoModel> {
        let peak = self
            .drive
            .rf_amplitudes
            .iter()
            .map(|a| a.abs())
            .fold(0.0, f64::max);
        let drive = RfDrive::new(peak, self.drive.omega_rf)?;
        Ok(PseudoModel::new(self.geometry.clone(), drive, species)?
            .with_rf_amplitudes(&self.drive.rf_amplitudes)?
            .with_rf_phases(&self.drive.rf_phases)?
            .with_static_biases(&self.drive.biases)?
            .with_stray_field(self.drive.stray_field))
    }
}

impl RfField for DrivenGeometry {
    fn omega_rf(&self) -> f64 {
        self.drive.omega_rf
    }

    fn phasors(&self, p: &Vec3) -> Result<FieldPhasors> {
        let mut out = FieldPhasors {
            in_phase: Vec3::zeros(),
            quadrature: Vec3::zeros(),
            static_field: self.drive.stray_field + self.geometry.field(&self.drive.biases, p)?,
        };
        for (k, &i) in self.rf.iter().enumerate() {
            let g = self.geometry.electrodes()[i].unit_gradient(p)?;
            let (a, phi) = (self.drive.rf_amplitudes[k], self.drive.rf_phases[k]);
            // a cos(Ωt + φ) = a cos φ cos Ωt - a sin φ sin Ωt
            out.in_phase -= g * (a * phi.cos());
            out.quadrature += g * (a * phi.sin());
        }
        Ok(out)
    }

    fn static_potential(&self, p: &Vec3) -> Result<f64> {
        Ok(self.geometry.potential(&self.drive.biases, p)? - self.drive.stray_field.dot(p))
    }

    fn bounded_by_surface(&self) -> bool {
        true
    }
}
