use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::field::{DriveConfig, DrivenGeometry, RfField};
use super::integrate::{integrate, IntegratorConfig, State};
use super::spectrum::tone_amplitude;
use crate::error::{Error, Result};
use crate::pseudo::secular_modes;
use crate::surface::{PlanarGeometry, Vec3};
use crate::units::IonSpecies;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicromotionReport {
    /// Secular displacement from the rf null `x_d` (m).
    pub displacement: f64,
    /// Excess micromotion amplitude `x_μm` (m).
    pub amplitude: f64,
    /// Modulation index, once a beam is specified.
    pub beta: Option<f64>,
}

impl MicromotionReport {
    pub fn with_beam(mut self, wavelength: f64, theta: f64) -> Result<Self> {
        self.beta = Some(modulation_index(self.amplitude, wavelength, theta)?);
        Ok(self)
    }
}

/// Displacement and micromotion caused by a uniform stray field in a trap
/// with radial frequency `omega_r`.
pub fn excess_micromotion(
    e_dc: f64,
    omega_r: f64,
    omega_rf: f64,
    species: &IonSpecies,
) -> Result<MicromotionReport> {
    if !(omega_r > 0.0 && omega_rf > 0.0) {
        return Err(Error::Validation(format!(
            "frequencies must be positive (ω_r = {omega_r}, Ω = {omega_rf})"
        )));
    }
    let displacement = (species.charge() * e_dc).abs() / (species.mass() * omega_r * omega_r);
    Ok(MicromotionReport {
        displacement,
        amplitude: 2f64.sqrt() * omega_r / omega_rf * displacement,
        beta: None,
    })
}

/// `β = 2π x_μm cos θ / λ`, with θ the angle between the beam and the micromotion.
pub fn modulation_index(amplitude: f64, wavelength: f64, theta: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::Validation(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok((TAU * amplitude * theta.cos() / wavelength).abs())
}

/// Fractional drop of on-resonance fluorescence, `β²/2`; only meaningful for β < 1.
pub fn fluorescence_loss(beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!(
            "small-modulation estimate needs 0 ≤ β < 1, got {beta}"
        )));
    }
    Ok(beta * beta / 2.0)
}

/// `J_0(x) ..= J_nmax(x)` by downward (Miller) recurrence.
pub fn bessel_j(x: f64, nmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = nmax.max(ax.ceil() as usize);
    let start = 2 * ((top + 30 + (40.0 * top as f64).sqrt() as usize) / 2);
    let (mut next, mut cur) = (0.0, 1e-30);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for (n, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// Relative line strengths of a phase-modulated carrier, `J_n(β)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandSpectrum {
    pub beta: f64,
    /// Intensity of order `n = 0, 1, 2, …`; orders ±n are equal.
    pub orders: Vec<f64>,
}

impl SidebandSpectrum {
    pub fn carrier(&self) -> f64 {
        self.orders[0]
    }

    pub fn intensity(&self, n: i64) -> f64 {
        self.orders
            .get(n.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.orders[0] + 2.0 * self.orders[1..].iter().sum::<f64>()
    }
}

pub fn sideband_spectrum(beta: f64) -> Result<SidebandSpectrum> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Validation(format!(
            "modulation index must be non-negative, got {beta}"
        )));
    }
    let nmax = (beta + 20.0 + 5.0 * beta.sqrt()).ceil() as usize;
    let orders = bessel_j(beta, nmax).into_iter().map(|j| j * j).collect();
    Ok(SidebandSpectrum { beta, orders })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseImbalanceReport {
    pub equilibrium: Vec3,
    /// Micromotion amplitude extracted from the integrated trajectory (m).
    pub amplitude: f64,
    /// `q |E_rf| / (m Ω²)` at the equilibrium (m).
    pub predicted_amplitude: f64,
    pub beta: f64,
}

/// Residual micromotion at the pseudopotential minimum of a drive whose rf
/// electrodes are not in phase.
pub fn phase_imbalance_micromotion(
    geometry: &PlanarGeometry,
    drive: &DriveConfig,
    species: &IonSpecies,
    guess: &Vec3,
    wavelength: f64,
    theta: f64,
) -> Result<PhaseImbalanceReport> {
    if geometry.rf_indices().len() < 2 {
        return Err(Error::Validation(
            "phase imbalance needs at least two rf electrodes".into(),
        ));
    }
    let field = DrivenGeometry::new(geometry.clone(), drive.clone())?;
    let model = field.pseudo_model(*species)?;
    let eq = model.find_equilibrium(guess)?;
    let modes = secular_modes(&model, &eq, None)?;
    let slowest = modes
        .modes
        .iter()
        .filter(|m| m.confined)
        .map(|m| m.omega)
        .fold(f64::INFINITY, f64::min);
    if !slowest.is_finite() {
        return Err(Error::Validation(
            "no confined mode at the equilibrium".into(),
        ));
    }
    let omega = drive.omega_rf;
    let ph = field.phasors(&eq)?;
    let k = species.charge_to_mass() / (omega * omega);
    // start on the driven orbit so little secular motion is excited
    let initial = State {
        position: eq - ph.in_phase * k,
        velocity: -ph.quadrature * (k * omega),
    };
    let cycles = (400.0f64).max(60.0 * omega / slowest).ceil();
    let config = IntegratorConfig {
        max_excursion: 0.5 * eq.y,
        ..IntegratorConfig::default()
    };
    let traj = integrate(&field, species, initial, cycles * TAU / omega, &config)?;
    let dt = traj.sample_interval();
    let amplitude = (0..3)
        .map(|c| {
            let x: Vec<f64> = traj.positions.iter().map(|p| p[c]).collect();
            tone_amplitude(&x, dt, omega).norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    let predicted_amplitude =
        k.abs() * (ph.in_phase.norm_squared() + ph.quadrature.norm_squared()).sqrt();
    Ok(PhaseImbalanceReport {
        equilibrium: eq,
        amplitude,
        predicted_amplitude,
        beta: modulation_index(amplitude, wavelength, theta)?,
    })
}

/// Degrees to radians, for phase sweeps.
pub fn degrees(d: f64) -> f64 {
    d * PI / 180.0
}
