use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::basis::AxialBasis;
use super::solve::{curvature_for, solve_targets, SolveOptions, Target, WellDiagnostics, WellSpec};
use crate::error::{Error, Result};
use crate::units::IonSpecies;

/// Secular phase accumulated per step and over the whole sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adiabaticity {
    /// Step duration × ω_z (rad).
    pub step_radians: f64,
    /// Total duration × ω_z (rad).
    pub path_radians: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageSequence {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub voltages: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub diagnostics: Vec<WellDiagnostics>,
    /// Largest |ω_achieved/ω_target - 1| over the steps, for constant-frequency sequences.
    pub max_omega_deviation: Option<f64>,
    pub adiabaticity: Option<Adiabaticity>,
}

impl VoltageSequence {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Comma-separated `step,time,V_<label>…,z0_achieved,omega_z_achieved`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let cols: Vec<String> = self.labels.iter().map(|l| format!("V_{l}")).collect();
        writeln!(
            w,
            "step,time,{},z0_achieved,omega_z_achieved",
            cols.join(",")
        )?;
        for (k, (t, v)) in self.times.iter().zip(&self.voltages).enumerate() {
            let vs: Vec<String> = v.iter().map(|x| format!("{x:.9}")).collect();
            let d = &self.diagnostics[k];
            let z0 = d
                .center
                .map_or_else(|| "nan".to_string(), |z| format!("{z:e}"));
            writeln!(w, "{k},{t:e},{},{z0},{:e}", vs.join(","), d.omega_z)?;
        }
        Ok(())
    }
}

fn uniform_times(n: usize, duration: f64) -> Vec<f64> {
    (0..n)
        .map(|k| duration * k as f64 / (n - 1) as f64)
        .collect()
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Validation(format!(
            "sequence duration must be positive, got {duration}"
        )));
    }
    Ok(())
}

/// Carry a well of fixed `omega_z` from `z_start` to `z_end` in `steps` equally spaced centres.
#[allow(clippy::too_many_arguments)]
pub fn transport_sequence(
    basis: &AxialBasis,
    species: &IonSpecies,
    z_start: f64,
    z_end: f64,
    steps: usize,
    omega_z: f64,
    duration: f64,
    options: &SolveOptions,
) -> Result<VoltageSequence> {
    if steps < 2 {
        return Err(Error::Validation(format!(
            "a transport needs at least 2 steps, got {steps}"
        )));
    }
    check_duration(duration)?;
    if !(omega_z > 0.0) {
        return Err(Error::Validation(
            "transport needs a confining well (ω_z > 0)".into(),
        ));
    }
    let last = (steps - 1) as f64;
    let mut seq = VoltageSequence {
        labels: basis.labels(),
        times: uniform_times(steps, duration),
        voltages: Vec::with_capacity(steps),
        residuals: Vec::with_capacity(steps),
        diagnostics: Vec::with_capacity(steps),
        max_omega_deviation: None,
        adiabaticity: Some(Adiabaticity {
            step_radians: duration / last * omega_z,
            path_radians: duration * omega_z,
        }),
    };
    let mut worst = 0.0f64;
    for k in 0..steps {
        // written symmetrically so reversed endpoints give the mirrored list exactly
        let z0 = ((last - k as f64) * z_start + k as f64 * z_end) / last;
        let spec = WellSpec::new(z0, omega_z, *species)?;
        let sol = super::solve_well(basis, &spec, options).map_err(|e| at_step(e, k))?;
        worst = worst.max((sol.diagnostics.omega_z / omega_z - 1.0).abs());
        seq.voltages.push(sol.voltages);
        seq.residuals.push(sol.residual);
        seq.diagnostics.push(sol.diagnostics);
    }
    seq.max_omega_deviation = Some(worst);
    Ok(seq)
}

/// Morph a single well at `z0` through a pure quartic point into a symmetric double well.
///
/// Stage `i` of `stages` (odd, ≥ 3) asks for curvature `c₀(1 - 2i/(stages-1))`, where
/// `c₀` gives `omega_z`, together with zero slope, zero cubic term and quartic `kappa4`.
#[allow(clippy::too_many_arguments)]
pub fn separation_ramp(
    basis: &AxialBasis,
    species: &IonSpecies,
    z0: f64,
    omega_z: f64,
    kappa4: f64,
    stages: usize,
    duration: f64,
    options: &SolveOptions,
) -> Result<VoltageSequence> {
    if stages < 3 || stages.is_multiple_of(2) {
        return Err(Error::Validation(format!(
            "a separation ramp needs an odd number of stages (at least 3) so one lands on the quartic point, got {stages}"
        )));
    }
    check_duration(duration)?;
    if !(omega_z > 0.0 && kappa4 > 0.0) {
        return Err(Error::Validation(
            "separation needs ω_z > 0 and κ₄ > 0".into(),
        ));
    }
    let c0 = curvature_for(species, omega_z);
    let last = (stages - 1) as f64;
    let mut seq = VoltageSequence {
        labels: basis.labels(),
        times: uniform_times(stages, duration),
        voltages: Vec::with_capacity(stages),
        residuals: Vec::with_capacity(stages),
        diagnostics: Vec::with_capacity(stages),
        max_omega_deviation: None,
        adiabaticity: None,
    };
    for k in 0..stages {
        let c = c0 * (last - 2.0 * k as f64) / last;
        let targets = [
            Target {
                order: 1,
                value: 0.0,
            },
            Target { order: 2, value: c },
            Target {
                order: 3,
                value: 0.0,
            },
            Target {
                order: 4,
                value: 24.0 * kappa4,
            },
        ];
        let sol = solve_targets(basis, z0, &targets, c0.abs(), species, options)
            .map_err(|e| at_step(e, k))?;
        seq.voltages.push(sol.voltages);
        seq.residuals.push(sol.residual);
        seq.diagnostics.push(sol.diagnostics);
    }
    Ok(seq)
}

fn at_step(e: Error, k: usize) -> Error {
    match e {
        Error::Infeasible { residual, .. } => Error::Infeasible {
            residual,
            step: Some(k),
        },
        other => other,
    }
}
