use nalgebra::{Matrix6x3, SymmetricEigen, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{Derivatives, Mat3, PlanarGeometry, Role, Vec3};
use crate::units::constants::ELEMENTARY_CHARGE;
use crate::units::{Frequency, IonSpecies};

/// rf amplitude and angular drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfDrive {
    amplitude: f64,
    omega_rf: f64,
}

impl RfDrive {
    pub fn new(amplitude: f64, omega_rf: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::Validation(format!(
                "rf amplitude must be positive, got {amplitude}"
            )));
        }
        if !(omega_rf.is_finite() && omega_rf > 0.0) {
            return Err(Error::Validation(format!(
                "rf frequency must be positive, got {omega_rf}"
            )));
        }
        Ok(Self {
            amplitude,
            omega_rf,
        })
    }

    pub fn with_frequency(amplitude: f64, freq: Frequency) -> Result<Self> {
        Self::new(amplitude, freq.angular())
    }

    /// Amplitude (V).
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Ω_rf (rad/s).
    pub fn omega_rf(&self) -> f64 {
        self.omega_rf
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RfTerm {
    electrode: usize,
    amplitude: f64,
    phase: f64,
}

/// Field quantities of the rf drive written as `E(t) = E_c cos Ωt + E_s sin Ωt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfPhasors {
    pub in_phase: Vec3,
    pub quadrature: Vec3,
    /// `∂E_c/∂r` (row = field component).
    pub in_phase_jacobian: Mat3,
    pub quadrature_jacobian: Mat3,
}

impl RfPhasors {
    pub fn magnitude(&self) -> f64 {
        (self.in_phase.norm_squared() + self.quadrature.norm_squared()).sqrt()
    }
}

/// Pseudopotential of a planar electrode layout under an rf drive, plus any
/// static contributions from electrode biases and a uniform stray field.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoModel {
    geometry: PlanarGeometry,
    drive: RfDrive,
    species: IonSpecies,
    rf: Vec<RfTerm>,
    static_biases: Vec<f64>,
    stray_field: Vec3,
}

impl PseudoModel {
    /// Every rf electrode is driven at the drive amplitude with its own phase.
    /// Static biases are taken from the geometry.
    pub fn new(geometry: PlanarGeometry, drive: RfDrive, species: IonSpecies) -> Result<Self> {
        let rf: Vec<RfTerm> = geometry
            .rf_indices()
            .into_iter()
            .map(|i| RfTerm {
                electrode: i,
                amplitude: drive.amplitude,
                phase: geometry.electrodes()[i].rf_phase,
            })
            .collect();
        if rf.is_empty() {
            return Err(Error::Validation("geometry has no rf electrodes".into()));
        }
        let static_biases = geometry.biases();
        Ok(Self {
            geometry,
            drive,
            species,
            rf,
            static_biases,
            stray_field: Vec3::zeros(),
        })
    }

    /// Override the per-electrode rf amplitudes, in rf-electrode order.
    pub fn with_rf_amplitudes(mut self, amplitudes: &[f64]) -> Result<Self> {
        if amplitudes.len() != self.rf.len() {
            return Err(Error::Validation(format!(
                "expected {} rf amplitudes, got {}",
                self.rf.len(),
                amplitudes.len()
            )));
        }
        for (t, &a) in self.rf.iter_mut().zip(amplitudes) {
            t.amplitude = a;
        }
        Ok(self)
    }

    /// Override rf phases (rad), in rf-electrode order.
    pub fn with_rf_phases(mut self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.rf.len() {
            return Err(Error::Validation(format!(
                "expected {} rf phases, got {}",
                self.rf.len(),
                phases.len()
            )));
        }
        for (t, &p) in self.rf.iter_mut().zip(phases) {
            t.phase = p;
        }
        Ok(self)
    }

    /// Replace the static bias vector (one entry per electrode).
    pub fn with_static_biases(mut self, biases: &[f64]) -> Result<Self> {
        if biases.len() != self.geometry.len() {
            return Err(Error::Validation(format!(
                "expected {} static biases, got {}",
                self.geometry.len(),
                biases.len()
            )));
        }
        self.static_biases = biases.to_vec();
        Ok(self)
    }

    /// Uniform static stray field (V/m).
    pub fn with_stray_field(mut self, field: Vec3) -> Self {
        self.stray_field = field;
        self
    }

    /// Raise every control electrode and the surrounding ground plane by
    /// `offset` volts relative to the rf electrodes. Up to an irrelevant
    /// constant this is a static `-offset` on each rf electrode.
    pub fn with_control_offset(mut self, offset: f64) -> Self {
        for t in &self.rf {
            self.static_biases[t.electrode] -= offset;
        }
        self
    }

    pub fn geometry(&self) -> &PlanarGeometry {
        &self.geometry
    }

    pub fn drive(&self) -> RfDrive {
        self.drive
    }

    pub fn species(&self) -> IonSpecies {
        self.species
    }

    pub fn static_biases(&self) -> &[f64] {
        &self.static_biases
    }

    pub fn stray_field(&self) -> Vec3 {
        self.stray_field
    }

    pub fn rf_amplitudes(&self) -> Vec<f64> {
        self.rf.iter().map(|t| t.amplitude).collect()
    }

    pub fn rf_phases(&self) -> Vec<f64> {
        self.rf.iter().map(|t| t.phase).collect()
    }

    /// Natural length of the layout.
    pub fn length_scale(&self) -> f64 {
        self.geometry.length_scale()
    }

    /// Characteristic rf field magnitude `V / L`.
    pub fn field_scale(&self) -> f64 {
        let a = self
            .rf
            .iter()
            .map(|t| t.amplitude.abs())
            .fold(0.0, f64::max);
        a / self.length_scale()
    }

    /// `q² / (4 m Ω²)`: pseudo-energy per squared field amplitude (J m²/V²).
    pub fn energy_coefficient(&self) -> f64 {
        let q = self.species.charge();
        q * q / (4.0 * self.species.mass() * self.drive.omega_rf.powi(2))
    }

    /// Characteristic pseudo-energy of the layout (J).
    pub fn energy_scale(&self) -> f64 {
        self.energy_coefficient() * self.field_scale().powi(2)
    }

    pub fn rf_phasors(&self, p: &Vec3) -> Result<RfPhasors> {
        let mut out = RfPhasors {
            in_phase: Vec3::zeros(),
            quadrature: Vec3::zeros(),
            in_phase_jacobian: Mat3::zeros(),
            quadrature_jacobian: Mat3::zeros(),
        };
        for t in &self.rf {
            let d = self.geometry.electrodes()[t.electrode].unit_derivatives(p)?;
            // a cos(Ωt + φ) = a cos φ cos Ωt - a sin φ sin Ωt
            let (c, s) = (t.amplitude * t.phase.cos(), -t.amplitude * t.phase.sin());
            out.in_phase -= d.gradient * c;
            out.quadrature -= d.gradient * s;
            out.in_phase_jacobian -= d.hessian * c;
            out.quadrature_jacobian -= d.hessian * s;
        }
        Ok(out)
    }

    /// rf field amplitude |E₀| (V/m); for phase-shifted drives the rms-equivalent amplitude.
    pub fn rf_field_magnitude(&self, p: &Vec3) -> Result<f64> {
        Ok(self.rf_phasors(p)?.magnitude())
    }

    /// Pseudopotential energy `q²|E₀|²/(4mΩ²)` in joules.
    pub fn pseudo_energy(&self, p: &Vec3) -> Result<f64> {
        let ph = self.rf_phasors(p)?;
        Ok(self.energy_coefficient() * (ph.in_phase.norm_squared() + ph.quadrature.norm_squared()))
    }

    /// Pseudopotential energy in eV.
    pub fn pseudopotential_ev(&self, p: &Vec3) -> Result<f64> {
        Ok(self.pseudo_energy(p)? / ELEMENTARY_CHARGE)
    }

    /// Pseudo-energy with analytic gradient and Hessian (J, J/m, J/m²).
    pub fn pseudo_derivatives(&self, p: &Vec3) -> Result<Derivatives> {
        let c = self.energy_coefficient();
        let mut value = 0.0;
        let mut gradient = Vec3::zeros();
        let mut hessian = Mat3::zeros();
        // per phasor: E = -Σ aₑ ∇uₑ, J = -Σ aₑ ∇∇uₑ, ∂ⱼ∂ₖEᵢ = -Σ aₑ ∂ᵢ∂ⱼ∂ₖuₑ
        let mut fields = [Vec3::zeros(); 2];
        let mut jacobians = [Mat3::zeros(); 2];
        let mut thirds = [[Mat3::zeros(); 3]; 2];
        for t in &self.rf {
            let e = &self.geometry.electrodes()[t.electrode];
            let d = e.unit_derivatives(p)?;
            let third = e.unit_third(p)?;
            for (k, a) in [t.amplitude * t.phase.cos(), -t.amplitude * t.phase.sin()]
                .into_iter()
                .enumerate()
            {
                if a == 0.0 {
                    continue;
                }
                fields[k] -= d.gradient * a;
                jacobians[k] -= d.hessian * a;
                for i in 0..3 {
                    thirds[k][i] -= third[i] * a;
                }
            }
        }
        for k in 0..2 {
            let (e, j, t) = (&fields[k], &jacobians[k], &thirds[k]);
            value += e.norm_squared();
            gradient += j.transpose() * e * 2.0;
            hessian += j.transpose() * j * 2.0;
            for i in 0..3 {
                hessian += t[i] * (2.0 * e[i]);
            }
        }
        Ok(Derivatives {
            value: c * value,
            gradient: gradient * c,
            hessian: hessian * c,
        })
    }

    /// Static electric potential (V) with derivatives, from electrode biases and the stray field.
    pub fn static_derivatives(&self, p: &Vec3) -> Result<Derivatives> {
        let mut d = self.geometry.derivatives(&self.static_biases, p)?;
        d.value -= self.stray_field.dot(p);
        d.gradient -= self.stray_field;
        Ok(d)
    }

    /// Total effective potential energy `q Φ_pp + q Φ_static` (J) with derivatives.
    pub fn total_derivatives(&self, p: &Vec3) -> Result<Derivatives> {
        let pp = self.pseudo_derivatives(p)?;
        let st = self.static_derivatives(p)?;
        let q = self.species.charge();
        Ok(Derivatives {
            value: pp.value + q * st.value,
            gradient: pp.gradient + st.gradient * q,
            hessian: pp.hessian + st.hessian * q,
        })
    }

    pub fn total_energy(&self, p: &Vec3) -> Result<f64> {
        let pp = self.pseudo_energy(p)?;
        let st = self.geometry.potential(&self.static_biases, p)? - self.stray_field.dot(p);
        Ok(pp + self.species.charge() * st)
    }

    /// Damped Gauss-Newton search for a zero of the rf field.
    ///
    /// Converges when `|E₀| < 1e-9 · V/L`.
    pub fn find_rf_null(&self, guess: &Vec3) -> Result<Vec3> {
        self.find_rf_null_with_tolerance(guess, 1e-9 * self.field_scale(), 100)
    }

    pub fn find_rf_null_with_tolerance(
        &self,
        guess: &Vec3,
        tol: f64,
        max_iter: usize,
    ) -> Result<Vec3> {
        let residual = |p: &Vec3| -> Result<(Vector6<f64>, Matrix6x3<f64>)> {
            let ph = self.rf_phasors(p)?;
            let mut r = Vector6::zeros();
            r.fixed_rows_mut::<3>(0).copy_from(&ph.in_phase);
            r.fixed_rows_mut::<3>(3).copy_from(&ph.quadrature);
            let mut j = Matrix6x3::zeros();
            j.fixed_view_mut::<3, 3>(0, 0)
                .copy_from(&ph.in_phase_jacobian);
            j.fixed_view_mut::<3, 3>(3, 0)
                .copy_from(&ph.quadrature_jacobian);
            Ok((r, j))
        };
        // far from the electrodes the field decays to zero without a true null
        let reach = 100.0 * self.length_scale();
        let mut p = *guess;
        let (mut r, mut jac) = residual(&p)?;
        let mut norm = r.norm();
        let mut polish = 0;
        for _ in 0..max_iter {
            if norm < tol {
                // a few more Newton steps cost little and pin the position down
                polish += 1;
                if polish > 3 {
                    break;
                }
            }
            if (p - guess).norm() > reach {
                break;
            }
            let svd = jac.svd(true, true);
            let cutoff = 1e-10 * svd.singular_values.max();
            let step = -svd
                .pseudo_inverse(cutoff)
                .map_err(|e| Error::Optimization(e.into()))?
                * r;
            let mut scale = 1.0;
            // stay in the half-space
            while p.y + scale * step.y <= 0.1 * p.y {
                scale *= 0.5;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let trial = p + step * scale;
                if let Ok((rt, jt)) = residual(&trial) {
                    if rt.norm() < norm {
                        p = trial;
                        r = rt;
                        jac = jt;
                        norm = r.norm();
                        accepted = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if norm < tol && (p - guess).norm() <= reach {
            return Ok(p);
        }
        Err(Error::Search {
            iterations: max_iter,
            residual: norm,
            best: [p.x, p.y, p.z],
        })
    }

    /// Minimum of the total effective potential near `guess`.
    ///
    /// Directions with vanishing curvature (for example along infinite
    /// strips without axial confinement) are left untouched.
    pub fn find_equilibrium(&self, guess: &Vec3) -> Result<Vec3> {
        let len = self.length_scale();
        let force_scale =
            (self.energy_scale() + self.species.charge().abs() * self.static_scale()) / len;
        let mut p = *guess;
        let mut d = self.total_derivatives(&p)?;
        for _ in 0..200 {
            let eig = SymmetricEigen::new(d.hessian);
            let lmax = eig.eigenvalues.amax();
            let mut step = Vec3::zeros();
            for i in 0..3 {
                let l = eig.eigenvalues[i];
                if l.abs() > 1e-9 * lmax {
                    let v = eig.eigenvectors.column(i);
                    step -= v * (v.dot(&d.gradient) / l.abs());
                }
            }
            if d.gradient.norm() < 1e-10 * force_scale && step.norm() < 1e-10 * len {
                return Ok(p);
            }
            if step.norm() > 0.25 * p.y {
                step *= 0.25 * p.y / step.norm();
            }
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..50 {
                let trial = p + step * scale;
                if trial.y > 0.0 {
                    let dt = self.total_derivatives(&trial)?;
                    if dt.value <= d.value + 1e-15 * d.value.abs() {
                        p = trial;
                        d = dt;
                        accepted = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if d.gradient.norm() < 1e-8 * force_scale {
            return Ok(p);
        }
        Err(Error::Search {
            iterations: 200,
            residual: d.gradient.norm(),
            best: [p.x, p.y, p.z],
        })
    }

    fn static_scale(&self) -> f64 {
        let b = self
            .static_biases
            .iter()
            .map(|b| b.abs())
            .fold(0.0, f64::max);
        b + self.stray_field.norm() * self.length_scale()
    }

    /// Whether |E₀| is mirror symmetric about the plane `x = x0` (sampled check).
    pub fn is_mirror_symmetric(&self, x0: f64, height: f64) -> bool {
        let pts = [
            (0.31, 0.57),
            (0.83, 1.21),
            (1.7, 0.42),
            (0.12, 2.3),
            (2.4, 1.6),
        ];
        pts.iter().all(|&(a, b)| {
            let p = Vec3::new(x0 + a * height, b * height, 0.0);
            let m = Vec3::new(x0 - a * height, b * height, 0.0);
            match (self.pseudo_energy(&p), self.pseudo_energy(&m)) {
                (Ok(u), Ok(v)) => (u - v).abs() <= 1e-9 * (u.abs() + v.abs()),
                _ => false,
            }
        })
    }

    /// Role-filtered electrode labels, convenient for reports.
    pub fn labels(&self, role: Role) -> Vec<&str> {
        self.geometry
            .electrodes()
            .iter()
            .filter(|e| e.role == role)
            .map(|e| e.label.as_str())
            .collect()
    }
}

/// Ideal linear quadrupole `Φ = ½ V₀ cos Ωt (1 + (x² - y²)/R²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupoleTrapModel {
    pub r: f64,
    pub v0: f64,
    pub omega_rf: f64,
    pub species: IonSpecies,
}

impl QuadrupoleTrapModel {
    pub fn new(r: f64, v0: f64, omega_rf: f64, species: IonSpecies) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Validation(format!(
                "trap scale R must be positive, got {r}"
            )));
        }
        RfDrive::new(v0, omega_rf)?;
        Ok(Self {
            r,
            v0,
            omega_rf,
            species,
        })
    }

    /// rf field amplitude at `p` (multiply by cos Ωt for the instantaneous field).
    pub fn field_amplitude(&self, p: &Vec3) -> Vec3 {
        let k = self.v0 / (self.r * self.r);
        Vec3::new(-k * p.x, k * p.y, 0.0)
    }

    /// Stability parameter `q_M = 2√2 ω_r / Ω`.
    pub fn stability_parameter(&self) -> f64 {
        2.0 * 2f64.sqrt() * quadrupole_radial_frequency(self) / self.omega_rf
    }
}

/// `ω_r = q V₀ / (√2 m Ω R²)`.
pub fn quadrupole_radial_frequency(model: &QuadrupoleTrapModel) -> f64 {
    model.species.charge().abs() * model.v0
        / (2f64.sqrt() * model.species.mass() * model.omega_rf * model.r * model.r)
}
