use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::AxialBasis;
use crate::error::{Error, Result};
use crate::units::constants::ELEMENTARY_CHARGE;
use crate::units::IonSpecies;

pub const DEFAULT_RAIL: f64 = 10.0;
/// Scaled residual above which a target counts as unreachable. The slope row is
/// in units of pitch, so this is also the tolerated centre error.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellSpec {
    pub z0: f64,
    /// Target axial frequency (rad/s); zero for a pure quartic well.
    pub omega_z: f64,
    /// Quartic coefficient of `Φ ≈ … + κ₄ (z - z₀)⁴` (V/m⁴).
    pub kappa4: Option<f64>,
    pub species: IonSpecies,
}

impl WellSpec {
    pub fn new(z0: f64, omega_z: f64, species: IonSpecies) -> Result<Self> {
        Self::with_quartic(z0, omega_z, None, species)
    }

    pub fn with_quartic(
        z0: f64,
        omega_z: f64,
        kappa4: Option<f64>,
        species: IonSpecies,
    ) -> Result<Self> {
        if !z0.is_finite() || !(omega_z >= 0.0 && omega_z.is_finite()) {
            return Err(Error::Validation(format!(
                "need finite z0 and ω_z ≥ 0 (z0 = {z0}, ω_z = {omega_z})"
            )));
        }
        if omega_z == 0.0 && !kappa4.is_some_and(|k| k > 0.0) {
            return Err(Error::Validation(
                "a well with ω_z = 0 needs a positive quartic coefficient".into(),
            ));
        }
        if kappa4.is_some_and(|k| !k.is_finite()) {
            return Err(Error::Validation(
                "quartic coefficient must be finite".into(),
            ));
        }
        Ok(Self {
            z0,
            omega_z,
            kappa4,
            species,
        })
    }

    /// Second derivative of the potential (V/m²) that gives `omega_z`.
    pub fn curvature(&self) -> f64 {
        curvature_for(&self.species, self.omega_z)
    }
}

pub(crate) fn curvature_for(species: &IonSpecies, omega: f64) -> f64 {
    species.mass() * omega * omega / species.charge()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Matching {
    /// Match slope, curvature and (optionally) quartic derivatives at the centre.
    Taylor,
    /// Least squares against the target polynomial over `|z - z₀| ≤ half_width`.
    Window { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Symmetric voltage limit (V).
    pub rail: f64,
    pub tolerance: f64,
    pub matching: Matching,
    /// Relative weight of the voltage-norm penalty that selects among exact solutions.
    pub regularization: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rail: DEFAULT_RAIL,
            tolerance: DEFAULT_TOLERANCE,
            matching: Matching::Taylor,
            regularization: 1e-10,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rail > 0.0 && self.tolerance > 0.0 && self.regularization > 0.0) {
            return Err(Error::Validation(
                "rail, tolerance and regularization must be positive".into(),
            ));
        }
        if let Matching::Window { half_width } = self.matching {
            if !(half_width > 0.0) {
                return Err(Error::Validation(
                    "matching window must have positive width".into(),
                ));
            }
        }
        Ok(())
    }
}

/// What the composed potential actually does, measured by direct evaluation of
/// the electrodes rather than from the basis fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellDiagnostics {
    pub target: f64,
    /// Local minimum nearest the target, if any.
    pub center: Option<f64>,
    /// Frequency from the curvature at `center` (0 if unconfined).
    pub omega_z: f64,
    /// Second derivative at the target (V/m²).
    pub curvature: f64,
    /// Quartic coefficient at the target (V/m⁴).
    pub quartic: f64,
    /// All local minima within two pitches of the target, ascending.
    pub minima: Vec<f64>,
    /// Barrier between the two minima that straddle the target (eV).
    pub barrier_ev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellSolution {
    pub voltages: Vec<f64>,
    /// Scaled mismatch of the matched coefficients.
    pub residual: f64,
    /// Channels pinned at a rail.
    pub at_rail: Vec<usize>,
    pub diagnostics: WellDiagnostics,
}

/// Constraint on the n-th derivative at the centre.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Target {
    pub order: usize,
    pub value: f64,
}

pub fn solve_well(
    basis: &AxialBasis,
    spec: &WellSpec,
    options: &SolveOptions,
) -> Result<WellSolution> {
    let c = spec.curvature();
    let mut targets = vec![
        Target {
            order: 1,
            value: 0.0,
        },
        Target { order: 2, value: c },
    ];
    if let Some(k4) = spec.kappa4 {
        targets.push(Target {
            order: 4,
            value: 24.0 * k4,
        });
    }
    let reference = if c != 0.0 {
        c.abs()
    } else {
        12.0 * spec.kappa4.unwrap_or(0.0) * basis.pitch * basis.pitch
    };
    solve_targets(basis, spec.z0, &targets, reference, &spec.species, options)
}

pub(crate) fn solve_targets(
    basis: &AxialBasis,
    z0: f64,
    targets: &[Target],
    reference: f64,
    species: &IonSpecies,
    options: &SolveOptions,
) -> Result<WellSolution> {
    options.validate()?;
    if !basis.redundant.is_empty() {
        return Err(Error::DegenerateBasis(basis.redundant.clone()));
    }
    let (a, b) = match options.matching {
        Matching::Taylor => taylor_system(basis, z0, targets, reference)?,
        Matching::Window { half_width } => {
            window_system(basis, z0, targets, reference, half_width)?
        }
    };
    let (voltages, at_rail) = bounded_least_squares(&a, &b, options.rail, options.regularization)?;
    let residual = (&a * DVector::from_column_slice(&voltages) - &b).norm();
    if residual > options.tolerance {
        return Err(Error::Infeasible {
            residual,
            step: None,
        });
    }
    let diagnostics = diagnose(basis, &voltages, z0, species)?;
    Ok(WellSolution {
        voltages,
        residual,
        at_rail,
        diagnostics,
    })
}

fn taylor_system(
    basis: &AxialBasis,
    z0: f64,
    targets: &[Target],
    reference: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let t = basis.taylor(z0)?;
    let p = basis.pitch;
    let n = basis.len();
    let mut a = DMatrix::zeros(targets.len(), n);
    let mut b = DVector::zeros(targets.len());
    for (r, tg) in targets.iter().enumerate() {
        // row n in units where a unit mismatch changes the n-th term by the reference curvature at one pitch
        let s = p.powi(tg.order as i32 - 2) / reference;
        for c in 0..n {
            a[(r, c)] = t.channels[c][tg.order] * s;
        }
        b[r] = (tg.value - t.background[tg.order]) * s;
    }
    Ok((a, b))
}

fn window_system(
    basis: &AxialBasis,
    z0: f64,
    targets: &[Target],
    reference: f64,
    half_width: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let rows: Vec<usize> = (0..basis.z.len())
        .filter(|&k| (basis.z[k] - z0).abs() <= half_width)
        .collect();
    if rows.len() < 5 {
        return Err(Error::Validation(format!(
            "matching window of ±{half_width:e} m holds only {} grid points",
            rows.len()
        )));
    }
    let t = basis.taylor(z0)?;
    let target_poly = |dz: f64| -> f64 {
        targets
            .iter()
            .filter(|tg| tg.order >= 2)
            .map(|tg| {
                tg.value * dz.powi(tg.order as i32) / (1..=tg.order).product::<usize>() as f64
            })
            .sum()
    };
    let s = 1.0 / (reference * basis.pitch * basis.pitch * (rows.len() as f64).sqrt());
    let n = basis.len();
    let mut a = DMatrix::zeros(rows.len(), n);
    let mut b = DVector::zeros(rows.len());
    for (r, &k) in rows.iter().enumerate() {
        for c in 0..n {
            a[(r, c)] = (basis.samples[c][k] - t.channels[c][0]) * s;
        }
        b[r] = (target_poly(basis.z[k] - z0) - (basis.background[k] - t.background[0])) * s;
    }
    Ok((a, b))
}

/// Minimise `½|Au - b|² + ½ε|u|²` subject to `|uᵢ| ≤ rail` by a primal active-set method.
fn bounded_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rail: f64,
    rel_eps: f64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let n = a.ncols();
    let mean_diag = (a.transpose() * a).trace() / n as f64;
    let eps = rel_eps * mean_diag.max(f64::MIN_POSITIVE);
    let mut u = DVector::<f64>::zeros(n);
    let mut fixed = vec![false; n];
    for _ in 0..(20 * n + 50) {
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let target = if free.is_empty() {
            DVector::zeros(0)
        } else {
            free_subproblem(a, b, &u, &free, &fixed, eps)?
        };
        let step: DVector<f64> = DVector::from_iterator(
            free.len(),
            free.iter().enumerate().map(|(k, &i)| target[k] - u[i]),
        );
        let scale = 1.0 + u.amax();
        if step.amax() <= 1e-14 * scale {
            let grad = a.transpose() * (a * &u - b) + &u * eps;
            let mut worst: Option<(usize, f64)> = None;
            for i in (0..n).filter(|&i| fixed[i]) {
                // moving off the bound must not reduce the objective
                let violation = if u[i] > 0.0 { grad[i] } else { -grad[i] };
                if violation > 1e-14 * scale.max(grad.amax())
                    && worst.is_none_or(|(_, v)| violation > v)
                {
                    worst = Some((i, violation));
                }
            }
            match worst {
                Some((i, _)) => fixed[i] = false,
                None => {
                    let at_rail = (0..n).filter(|&i| fixed[i]).collect();
                    return Ok((u.iter().copied().collect(), at_rail));
                }
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (k, &i) in free.iter().enumerate() {
            let p = step[k];
            if p != 0.0 {
                let reach = (rail.copysign(p) - u[i]) / p;
                if reach < alpha {
                    alpha = reach.max(0.0);
                    blocking = Some(i);
                }
            }
        }
        for (k, &i) in free.iter().enumerate() {
            u[i] += alpha * step[k];
        }
        if let Some(i) = blocking {
            u[i] = rail.copysign(u[i]);
            fixed[i] = true;
        }
    }
    Err(Error::Optimization(
        "bounded least squares did not settle".into(),
    ))
}

fn free_subproblem(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    u: &DVector<f64>,
    free: &[usize],
    fixed: &[bool],
    eps: f64,
) -> Result<DVector<f64>> {
    let m = a.nrows();
    let nf = free.len();
    let mut rhs = DVector::zeros(m + nf);
    for r in 0..m {
        let pinned: f64 = (0..a.ncols())
            .filter(|&i| fixed[i])
            .map(|i| a[(r, i)] * u[i])
            .sum();
        rhs[r] = b[r] - pinned;
    }
    let mut mat = DMatrix::zeros(m + nf, nf);
    for (k, &i) in free.iter().enumerate() {
        for r in 0..m {
            mat[(r, k)] = a[(r, i)];
        }
        mat[(m + k, k)] = eps.sqrt();
    }
    mat.svd(true, true)
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Optimization(format!("least-squares solve failed: {e}")))
}

fn golden<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Measure the well produced by channel voltages `v` around `target`.
pub fn diagnose(
    basis: &AxialBasis,
    v: &[f64],
    target: f64,
    species: &IonSpecies,
) -> Result<WellDiagnostics> {
    let biases = basis.electrode_biases(v)?;
    let phi = |z: f64| basis.potential_at(&biases, z);
    let p = basis.pitch;
    let span = 2.0 * p;
    let n = 400;
    let zs: Vec<f64> = (0..=n)
        .map(|k| target - span + 2.0 * span * k as f64 / n as f64)
        .collect();
    let vals = zs.iter().map(|&z| phi(z)).collect::<Result<Vec<f64>>>()?;
    let tol = 1e-9 * p;
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    for k in 1..n {
        if vals[k] <= vals[k - 1] && vals[k] < vals[k + 1] {
            minima.push(golden(phi, zs[k - 1], zs[k + 1], tol)?);
        } else if vals[k] >= vals[k - 1] && vals[k] > vals[k + 1] {
            maxima.push(golden(|z| phi(z).map(|x| -x), zs[k - 1], zs[k + 1], tol)?);
        }
    }
    let center = minima
        .iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));

    let second = |z: f64, h: f64| -> Result<f64> {
        Ok((phi(z + h)? - 2.0 * phi(z)? + phi(z - h)?) / (h * h))
    };
    let curvature = second(target, 1e-3 * p)?;
    let h4 = 0.05 * p;
    let fourth = (phi(target + 2.0 * h4)? - 4.0 * phi(target + h4)? + 6.0 * phi(target)?
        - 4.0 * phi(target - h4)?
        + phi(target - 2.0 * h4)?)
        / h4.powi(4);
    let omega_z = match center {
        Some(z) => {
            let k = second(z, 1e-3 * p)? * species.charge() / species.mass();
            if k > 0.0 {
                k.sqrt()
            } else {
                0.0
            }
        }
        None => 0.0,
    };
    let left = minima
        .iter()
        .copied()
        .filter(|&z| z < target)
        .fold(None, |acc: Option<f64>, z| {
            Some(acc.map_or(z, |a| a.max(z)))
        });
    let right = minima
        .iter()
        .copied()
        .filter(|&z| z > target)
        .fold(None, |acc: Option<f64>, z| {
            Some(acc.map_or(z, |a| a.min(z)))
        });
    let barrier_ev = match (left, right) {
        (Some(l), Some(r)) => {
            let top = maxima
                .iter()
                .copied()
                .filter(|&z| z > l && z < r)
                .map(&phi)
                .collect::<Result<Vec<f64>>>()?;
            let peak = top.into_iter().fold(f64::NEG_INFINITY, f64::max);
            peak.is_finite()
                .then(|| -> Result<f64> {
                    let floor = phi(l)?.max(phi(r)?);
                    Ok((peak - floor) * species.charge() / ELEMENTARY_CHARGE)
                })
                .transpose()?
        }
        _ => None,
    };
    Ok(WellDiagnostics {
        target,
        center,
        omega_z,
        curvature,
        quartic: fourth / 24.0,
        minima,
        barrier_ev,
    })
}
