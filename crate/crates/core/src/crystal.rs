//! Axial equilibria and normal modes of ion chains in a harmonic well.
//!
//! Positions are solved in units of `s = (q²/(4πε₀ m ω_z²))^(1/3)`, where the
//! potential energy becomes `Σ uᵢ²/2 + Σ_{i<j} 1/|uᵢ - uⱼ|`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::constants::VACUUM_PERMITTIVITY;
use crate::units::IonSpecies;

pub const DEFAULT_MAX_IONS: usize = 50;

/// Radial-to-axial frequency ratio below which a linear chain is flagged.
pub const RADIAL_RATIO: f64 = 10.0;

const GRADIENT_TOLERANCE: f64 = 1e-10;

pub fn length_scale(species: &IonSpecies, omega_z: f64) -> Result<f64> {
    if !(omega_z.is_finite() && omega_z > 0.0) {
        return Err(Error::Validation(format!(
            "axial frequency must be positive, got {omega_z}"
        )));
    }
    let q = species.charge();
    Ok((q * q / (4.0 * PI * VACUUM_PERMITTIVITY * species.mass() * omega_z * omega_z)).cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub species: IonSpecies,
    pub n: usize,
    pub omega_z: f64,
    /// Radial secular frequency, if known, for the linear-chain validity flag.
    pub omega_r: Option<f64>,
}

impl ChainConfig {
    pub fn new(species: IonSpecies, n: usize, omega_z: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("a chain needs at least one ion".into()));
        }
        length_scale(&species, omega_z)?;
        Ok(Self {
            species,
            n,
            omega_z,
            omega_r: None,
        })
    }

    pub fn with_radial_frequency(mut self, omega_r: f64) -> Self {
        self.omega_r = Some(omega_r);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSolution {
    pub config: ChainConfig,
    pub length_scale: f64,
    /// Sorted positions in units of the length scale.
    pub scaled_positions: Vec<f64>,
    /// Sorted positions (m).
    pub positions: Vec<f64>,
    pub spacings: Vec<f64>,
    /// Gradient norm at the solution, dimensionless.
    pub residual: f64,
    /// `Some(false)` when the radial frequency is not well above the axial one.
    pub radial_ok: Option<bool>,
}

fn gradient(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut g = u[i];
        for j in 0..n {
            if j != i {
                let d = u[i] - u[j];
                g -= d.signum() / (d * d);
            }
        }
        g
    })
}

fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] -= c;
            }
        }
    }
    h
}

fn energy(u: &[f64]) -> f64 {
    let mut e = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            e += 1.0 / (u[i] - u[j]).abs();
        }
    }
    e
}

fn ordered(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] < w[1])
}

pub fn equilibrium(config: &ChainConfig) -> Result<ChainSolution> {
    equilibrium_with_cap(config, DEFAULT_MAX_IONS)
}

/// Newton iteration with backtracking from an evenly spaced start spanning ≈ N^0.56.
pub fn equilibrium_with_cap(config: &ChainConfig, max_ions: usize) -> Result<ChainSolution> {
    let n = config.n;
    if n > max_ions {
        return Err(Error::Validation(format!(
            "{n} ions exceeds the cap of {max_ions}"
        )));
    }
    let s = length_scale(&config.species, config.omega_z)?;
    let half = 0.9 * (n as f64).powf(0.56);
    let mut u: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n)
            .map(|i| half * (2.0 * i as f64 / (n - 1) as f64 - 1.0))
            .collect()
    };
    let mut g = gradient(&u);
    let mut iterations = 0;
    while g.norm() >= GRADIENT_TOLERANCE {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::Optimization(format!(
                "chain of {n} did not converge, gradient {:e} at {u:?}",
                g.norm()
            )));
        }
        let step = hessian(&u)
            .cholesky()
            .ok_or_else(|| Error::Optimization("chain Hessian lost positive definiteness".into()))?
            .solve(&g);
        let e0 = energy(&u);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a - t * b).collect();
            if ordered(&trial) && energy(&trial) <= e0 + 1e-14 * e0.abs() {
                u = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::Optimization(format!("line search stalled at {u:?}")));
            }
        }
        g = gradient(&u);
    }
    // remove the last rounding asymmetry
    let shift = u.iter().sum::<f64>() / n as f64;
    let u: Vec<f64> = u.iter().map(|x| x - shift).collect();
    let positions: Vec<f64> = u.iter().map(|x| x * s).collect();
    let spacings = positions.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ChainSolution {
        config: *config,
        length_scale: s,
        residual: gradient(&u).norm(),
        scaled_positions: u,
        positions,
        spacings,
        radial_ok: config.omega_r.map(|wr| wr >= RADIAL_RATIO * config.omega_z),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModes {
    /// Ascending angular frequencies (rad/s).
    pub frequencies: Vec<f64>,
    /// Unit participation vectors, one per mode.
    pub vectors: Vec<Vec<f64>>,
}

/// Axial normal modes. All ions share one mass, so mass weighting is a common factor.
pub fn normal_modes(solution: &ChainSolution) -> Result<ChainModes> {
    let h = hessian(&solution.scaled_positions);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frequencies = Vec::with_capacity(order.len());
    let mut vectors = Vec::with_capacity(order.len());
    for i in order {
        let l = eig.eigenvalues[i];
        if l <= 0.0 {
            return Err(Error::Optimization(format!(
                "indefinite chain Hessian (eigenvalue {l:e})"
            )));
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        if v.iter().sum::<f64>() < 0.0 || (v.iter().sum::<f64>() == 0.0 && v[0] < 0.0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        frequencies.push(solution.config.omega_z * l.sqrt());
        vectors.push(v);
    }
    Ok(ChainModes {
        frequencies,
        vectors,
    })
}

/// Positions followed by the mode table, as comma-separated values.
pub fn write_chain_csv<W: Write>(
    mut w: W,
    solution: &ChainSolution,
    modes: &ChainModes,
) -> io::Result<()> {
    writeln!(w, "ion,position_m,position_s")?;
    for (i, (p, u)) in solution
        .positions
        .iter()
        .zip(&solution.scaled_positions)
        .enumerate()
    {
        writeln!(w, "{i},{p:e},{u:.12}")?;
    }
    writeln!(w)?;
    let header: Vec<String> = (0..solution.positions.len())
        .map(|i| format!("b{i}"))
        .collect();
    writeln!(w, "mode,frequency_hz,{}", header.join(","))?;
    for (k, (f, v)) in modes.frequencies.iter().zip(&modes.vectors).enumerate() {
        let cols: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
        writeln!(w, "{k},{:e},{}", f / (2.0 * PI), cols.join(","))?;
    }
    Ok(())
}
