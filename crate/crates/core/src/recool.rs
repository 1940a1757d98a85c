//! Doppler recooling thermometry: the fluorescence transient of a hot ion under a
//! red-detuned cooling beam, and a single-parameter fit for its initial temperature.
//!
//! The motion is one-dimensional and semiclassical. At each instant the ion oscillates
//! harmonically with amplitude set by its energy, and the scattering rate is averaged
//! over the oscillation phase in closed form.

use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::constants::{BOLTZMANN, HBAR};
use crate::units::IonSpecies;

/// Gauss-Laguerre nodes used for the thermal average over initial energies.
pub const ENSEMBLE_NODES: usize = 20;
/// Curves whose normalized samples all lie within this of their mean carry no temperature information.
pub const FLAT_TOLERANCE: f64 = 1e-9;
const MIN_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    /// Natural linewidth Γ (rad/s).
    pub linewidth: f64,
    /// |k| (1/m).
    pub wavevector: f64,
    /// Laser minus atomic frequency (rad/s).
    pub detuning: f64,
    /// On-resonance saturation parameter s₀.
    pub saturation: f64,
    /// Projection of the beam on the mode being cooled.
    pub cos_theta: f64,
}

impl LaserParams {
    pub fn new(
        linewidth: f64,
        wavevector: f64,
        detuning: f64,
        saturation: f64,
        cos_theta: f64,
    ) -> Result<Self> {
        let l = Self {
            linewidth,
            wavevector,
            detuning,
            saturation,
            cos_theta,
        };
        l.validate()?;
        Ok(l)
    }

    /// Beam from a vacuum wavelength, linewidth and detuning given in Hz (not rad/s).
    pub fn from_wavelength(
        wavelength: f64,
        linewidth_hz: f64,
        detuning_hz: f64,
        saturation: f64,
        cos_theta: f64,
    ) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::Validation(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        let tau = std::f64::consts::TAU;
        Self::new(
            tau * linewidth_hz,
            tau / wavelength,
            tau * detuning_hz,
            saturation,
            cos_theta,
        )
    }

    fn validate(&self) -> Result<()> {
        let finite = [
            self.linewidth,
            self.wavevector,
            self.detuning,
            self.saturation,
            self.cos_theta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite
            || !(self.linewidth > 0.0)
            || !(self.wavevector > 0.0)
            || !(self.saturation > 0.0)
        {
            return Err(Error::Validation(
                "laser needs finite Γ > 0, k > 0 and s₀ > 0".into(),
            ));
        }
        if !(self.cos_theta.abs() > 0.0 && self.cos_theta.abs() <= 1.0) {
            return Err(Error::Validation(format!(
                "beam projection |cos θ| must lie in (0, 1], got {}",
                self.cos_theta
            )));
        }
        Ok(())
    }

    fn scaled_detuning(&self) -> f64 {
        2.0 * self.detuning / self.linewidth
    }

    fn width_sq(&self) -> f64 {
        1.0 + self.saturation
    }
}

/// Two-level scattering rate (photons/s) for an ion moving at `v` along the mode.
pub fn scattering_rate(v: f64, laser: &LaserParams) -> f64 {
    let x = 2.0 * (laser.detuning - laser.wavevector * v * laser.cos_theta) / laser.linewidth;
    0.5 * laser.linewidth * laser.saturation / (1.0 + laser.saturation + x * x)
}

/// Scattering rate `⟨R⟩` and `⟨v R⟩` averaged over one harmonic orbit of velocity amplitude `v_max`.
///
/// With `x = a - b cos φ` the Lorentzian is `Im[1/(w - b cos φ)]/c` for `w = a - ic`, and the
/// orbit average of `1/(w - b cos φ)` is `1/√(w² - b²)` on the branch that tends to `1/w`.
pub fn orbit_average(v_max: f64, laser: &LaserParams) -> (f64, f64) {
    let c = laser.width_sq().sqrt();
    let a = laser.scaled_detuning();
    let b = 2.0 * laser.wavevector * v_max * laser.cos_theta / laser.linewidth;
    let w = Complex64::new(a, -c);
    let s = (w - b).sqrt() * (w + b).sqrt();
    let pref = 0.5 * laser.linewidth * laser.saturation / c;
    let rate = pref * (1.0 / s).im;
    // ⟨cos φ/(w - b cos φ)⟩ = (w/S - 1)/b, rearranged to avoid cancellation at small b
    let vr = pref * v_max * (b / (s * (w + s))).im;
    (rate, vr)
}

/// Equilibrium oscillation energy (J) where recoil heating balances linearized Doppler cooling.
pub fn doppler_energy(laser: &LaserParams) -> Result<f64> {
    laser.validate()?;
    refuse_heating(laser)?;
    let x = laser.scaled_detuning();
    let c2 = laser.cos_theta * laser.cos_theta;
    Ok(HBAR * laser.linewidth * (1.0 + c2) * (x * x + laser.width_sq()) / (8.0 * c2 * -x))
}

pub fn doppler_temperature(laser: &LaserParams) -> Result<f64> {
    Ok(doppler_energy(laser)? / BOLTZMANN)
}

fn refuse_heating(laser: &LaserParams) -> Result<()> {
    if laser.detuning >= 0.0 {
        return Err(Error::Unsupported(format!(
            "detuning {} rad/s is not red of resonance; a blue or resonant beam heats the ion",
            laser.detuning
        )));
    }
    Ok(())
}

/// Rate of change of the oscillation energy (W).
fn energy_rate(e: f64, species: &IonSpecies, laser: &LaserParams) -> (f64, f64) {
    let m = species.mass();
    let v_max = (2.0 * e.max(0.0) / m).sqrt();
    let (rate, vr) = orbit_average(v_max, laser);
    let k = laser.wavevector;
    let c2 = laser.cos_theta * laser.cos_theta;
    // absorption kicks projected on the mode, emission kicks counted along it
    let recoil = HBAR * HBAR * k * k * (1.0 + c2) * rate / (2.0 * m);
    (HBAR * k * laser.cos_theta * vr + recoil, rate)
}

/// Linearized cooling rate (1/s) near zero energy.
fn cold_damping(species: &IonSpecies, laser: &LaserParams) -> f64 {
    let x = laser.scaled_detuning();
    let d = x * x + laser.width_sq();
    let k = laser.wavevector;
    2.0 * HBAR * k * k * laser.cos_theta.powi(2) * laser.saturation * x.abs()
        / (species.mass() * d * d)
}

/// Time-binned fluorescence: `rates[i]` is the mean rate over the bin centred on `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoolCurve {
    pub times: Vec<f64>,
    pub rates: Vec<f64>,
    /// Inverse variances of `rates`.
    pub weights: Vec<f64>,
    pub bin_width: f64,
}

impl RecoolCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.rates.len() != n || self.weights.len() != n {
            return Err(Error::Validation(
                "times, rates and weights differ in length".into(),
            ));
        }
        if n < MIN_BINS {
            return Err(Error::Validation(format!(
                "a recooling fit needs at least {MIN_BINS} bins, got {n}"
            )));
        }
        let w = self.bin_width;
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Validation(format!(
                "bin width must be positive, got {w}"
            )));
        }
        if self.times[0] - 0.5 * w < -1e-9 * w {
            return Err(Error::Validation(
                "bins must start at or after the laser turn-on (t = 0)".into(),
            ));
        }
        if self
            .times
            .windows(2)
            .any(|p| ((p[1] - p[0]) - w).abs() > 1e-6 * w)
        {
            return Err(Error::Validation(
                "bins must be uniform and contiguous".into(),
            ));
        }
        if self.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Validation(
                "fluorescence rates must be finite and non-negative".into(),
            ));
        }
        if self.weights.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Validation(
                "weights must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    /// Reads `t_seconds,counts,bin_width` rows, where `t_seconds` is the start of each bin.
    /// Shot-noise weights follow from the counts.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut rates = Vec::new();
        let mut weights = Vec::new();
        let mut width: Option<f64> = None;
        let mut header = false;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if !header {
                let cols: Vec<&str> = t.split(',').map(str::trim).collect();
                if cols != ["t_seconds", "counts", "bin_width"] {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected header `t_seconds,counts,bin_width`, got `{t}`"),
                    });
                }
                header = true;
                continue;
            }
            let vals = t
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let [start, counts, w] = vals[..] else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 3 columns, got {}", vals.len()),
                });
            };
            if !(w > 0.0) || !(counts >= 0.0) {
                return Err(Error::Parse {
                    line: line_no,
                    message: "counts must be non-negative and bin width positive".into(),
                });
            }
            match width {
                None => width = Some(w),
                Some(w0) if (w - w0).abs() > 1e-9 * w0 => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("bin width {w} differs from {w0}; bins must be uniform"),
                    })
                }
                _ => {}
            }
            times.push(start + 0.5 * w);
            rates.push(counts / w);
            // Poisson variance, floored at one count so empty bins keep a finite weight
            weights.push(w * w / counts.max(1.0));
        }
        let curve = Self {
            times,
            rates,
            weights,
            bin_width: width.unwrap_or(0.0),
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Writes the curve as `t_seconds,counts,bin_width` with expected counts per bin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_seconds,counts,bin_width")?;
        for (t, r) in self.times.iter().zip(&self.rates) {
            writeln!(
                w,
                "{:e},{:e},{:e}",
                t - 0.5 * self.bin_width,
                r * self.bin_width,
                self.bin_width
            )?;
        }
        Ok(())
    }

    /// Rates divided by the mean of the final tenth of the bins (at least three).
    pub fn normalized(&self) -> Vec<f64> {
        let tail = tail_mean(&self.rates);
        self.rates.iter().map(|r| r / tail).collect()
    }
}

fn tail_mean(r: &[f64]) -> f64 {
    let k = (r.len() / 10).max(3).min(r.len());
    r[r.len() - k..].iter().sum::<f64>() / k as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recooling {
    pub curve: RecoolCurve,
    /// Oscillation energy at the end of each bin (J).
    pub energies: Vec<f64>,
    pub equilibrium_energy: f64,
    /// Whether the final energy lies within a factor two of equilibrium.
    pub settled: bool,
    pub warnings: Vec<String>,
}

/// Evolve one ion from oscillation energy `e0` for `duration`, binned into `bins` intervals.
pub fn simulate_recooling(
    e0: f64,
    omega_z: f64,
    species: &IonSpecies,
    laser: &LaserParams,
    duration: f64,
    bins: usize,
) -> Result<Recooling> {
    if !(e0 >= 0.0 && e0.is_finite()) {
        return Err(Error::Validation(format!(
            "initial energy must be finite and ≥ 0, got {e0}"
        )));
    }
    if !(duration > 0.0 && duration.is_finite()) || bins == 0 {
        return Err(Error::Validation(
            "duration must be positive and bins non-zero".into(),
        ));
    }
    let warnings = check_weak_binding(omega_z, laser)?;
    let e_eq = doppler_energy(laser)?;
    let width = duration / bins as f64;
    let (rates, energies) = evolve(e0, species, laser, 0.0, width, bins);
    let last = *energies.last().unwrap_or(&e0);
    let settled = last <= 2.0 * e_eq && last >= 0.5 * e_eq;
    let mut warnings = warnings;
    if !settled {
        warnings.push(format!(
            "final energy {last:.3e} J is not within a factor 2 of the Doppler equilibrium {e_eq:.3e} J; lengthen the record"
        ));
    }
    let weights = rates
        .iter()
        .map(|r| width / r.max(f64::MIN_POSITIVE))
        .collect();
    Ok(Recooling {
        curve: RecoolCurve {
            times: (0..bins).map(|i| (i as f64 + 0.5) * width).collect(),
            rates,
            weights,
            bin_width: width,
        },
        energies,
        equilibrium_energy: e_eq,
        settled,
        warnings,
    })
}

fn check_weak_binding(omega_z: f64, laser: &LaserParams) -> Result<Vec<String>> {
    laser.validate()?;
    refuse_heating(laser)?;
    if !(omega_z > 0.0 && omega_z.is_finite()) {
        return Err(Error::Validation(format!(
            "ω_z must be positive, got {omega_z}"
        )));
    }
    let mut w = Vec::new();
    if omega_z >= laser.linewidth / 10.0 {
        w.push(format!(
            "ω_z = {omega_z:.3e} rad/s is not small against Γ = {:.3e} rad/s; the weak-binding model is unreliable",
            laser.linewidth
        ));
    }
    Ok(w)
}

/// Warns when another mode is not well above `omega_z`, so heating would not be effectively 1D.
pub fn one_dimensional_warning(omega_z: f64, other_modes: &[f64]) -> Option<String> {
    let lowest = other_modes.iter().copied().fold(f64::INFINITY, f64::min);
    (lowest < 2.0 * omega_z).then(|| {
        format!("mode at {lowest:.3e} rad/s is within a factor 2 of ω_z = {omega_z:.3e} rad/s; heating may not be one-dimensional")
    })
}

/// RK4 on (energy, photon count); returns bin-mean rates and end-of-bin energies.
fn evolve(
    e0: f64,
    species: &IonSpecies,
    laser: &LaserParams,
    start: f64,
    width: f64,
    bins: usize,
) -> (Vec<f64>, Vec<f64>) {
    let max_dt = 0.05 / cold_damping(species, laser);
    let f = |e: f64| energy_rate(e, species, laser);
    let mut e = e0;
    let step = |e: &mut f64, dt: f64| -> f64 {
        let (k1, r1) = f(*e);
        let (k2, r2) = f(*e + 0.5 * dt * k1);
        let (k3, r3) = f(*e + 0.5 * dt * k2);
        let (k4, r4) = f(*e + dt * k3);
        *e = (*e + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(0.0);
        dt / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
    };
    if start > 0.0 {
        let n = (start / max_dt).ceil() as usize;
        for _ in 0..n {
            step(&mut e, start / n as f64);
        }
    }
    let sub = (width / max_dt).ceil().max(1.0) as usize;
    let dt = width / sub as f64;
    let mut rates = Vec::with_capacity(bins);
    let mut energies = Vec::with_capacity(bins);
    for _ in 0..bins {
        let mut photons = 0.0;
        for _ in 0..sub {
            photons += step(&mut e, dt);
        }
        rates.push(photons / width);
        energies.push(e);
    }
    (rates, energies)
}

/// Gauss-Laguerre nodes and weights for `∫₀^∞ e^{-x} f(x) dx` (Golub-Welsch).
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            (2 * r + 1) as f64
        } else if r.abs_diff(c) == 1 {
            r.max(c) as f64
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Thermal-ensemble curve: a 1D oscillator at temperature `t0` has exponentially distributed energy.
pub fn ensemble_curve(
    t0: f64,
    omega_z: f64,
    species: &IonSpecies,
    laser: &LaserParams,
    duration: f64,
    bins: usize,
) -> Result<RecoolCurve> {
    if !(duration > 0.0 && duration.is_finite()) || bins == 0 {
        return Err(Error::Validation(
            "duration must be positive and bins non-zero".into(),
        ));
    }
    let width = duration / bins as f64;
    let rates = ensemble_rates(t0, omega_z, species, laser, 0.0, width, bins)?;
    Ok(RecoolCurve {
        times: (0..bins).map(|i| (i as f64 + 0.5) * width).collect(),
        weights: rates
            .iter()
            .map(|r| width / r.max(f64::MIN_POSITIVE))
            .collect(),
        rates,
        bin_width: width,
    })
}

fn ensemble_rates(
    t0: f64,
    omega_z: f64,
    species: &IonSpecies,
    laser: &LaserParams,
    start: f64,
    width: f64,
    bins: usize,
) -> Result<Vec<f64>> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::Validation(format!(
            "temperature must be positive, got {t0}"
        )));
    }
    check_weak_binding(omega_z, laser)?;
    let (x, w) = gauss_laguerre(ENSEMBLE_NODES);
    let mut out = vec![0.0; bins];
    for (xi, wi) in x.iter().zip(&w) {
        let (r, _) = evolve(BOLTZMANN * t0 * xi, species, laser, start, width, bins);
        out.iter_mut().zip(&r).for_each(|(o, v)| *o += wi * v);
    }
    Ok(out)
}

fn parallel_map(xs: &[f64], f: &(impl Fn(f64) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(xs.len())
        .max(1);
    let chunk = xs.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = xs
            .chunks(chunk)
            .map(|c| scope.spawn(move || c.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()))
            .collect();
        let mut out = Vec::with_capacity(xs.len());
        for h in handles {
            out.extend(h.join().expect("fit worker panicked")?);
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSetup {
    pub species: IonSpecies,
    pub omega_z: f64,
    pub laser: LaserParams,
    /// Search range as multiples of the Doppler temperature.
    pub range: (f64, f64),
}

impl FitSetup {
    pub fn new(species: IonSpecies, omega_z: f64, laser: LaserParams) -> Self {
        Self {
            species,
            omega_z,
            laser,
            range: (0.3, 3.0e4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    /// Best-fit initial temperature (K).
    pub temperature: f64,
    /// One-sigma interval from the χ² curvature in log temperature, taking weights as inverse variances.
    pub interval: (f64, f64),
    pub chi_squared: f64,
    pub doppler_temperature: f64,
    /// The fitted curve differs from an already-cold ion's by less than 1% anywhere.
    pub low_sensitivity: bool,
    pub warnings: Vec<String>,
}

/// Weighted least-squares fit of the initial temperature, the only free parameter.
///
/// Data and model are both normalized to their late-time mean, so the detection
/// efficiency drops out.
pub fn fit_temperature(curve: &RecoolCurve, setup: &FitSetup) -> Result<TemperatureFit> {
    curve.validate()?;
    let warnings = check_weak_binding(setup.omega_z, &setup.laser)?;
    let (lo, hi) = setup.range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Validation(format!(
            "bad temperature range ({lo}, {hi})"
        )));
    }
    let tail = tail_mean(&curve.rates);
    if !(tail > 0.0) {
        return Err(Error::DegenerateFit(
            "late-time fluorescence is zero".into(),
        ));
    }
    let data: Vec<f64> = curve.rates.iter().map(|r| r / tail).collect();
    let weights: Vec<f64> = curve.weights.iter().map(|w| w * tail * tail).collect();
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    if data.iter().all(|d| (d / mean - 1.0).abs() < FLAT_TOLERANCE) {
        return Err(Error::DegenerateFit(
            "fluorescence is flat; the curve carries no information about the initial temperature"
                .into(),
        ));
    }

    let t_d = doppler_temperature(&setup.laser)?;
    let start = curve.times[0] - 0.5 * curve.bin_width;
    let n = curve.len();
    let model = |ln_t: f64| -> Result<Vec<f64>> {
        let r = ensemble_rates(
            ln_t.exp(),
            setup.omega_z,
            &setup.species,
            &setup.laser,
            start,
            curve.bin_width,
            n,
        )?;
        let tm = tail_mean(&r);
        Ok(r.iter().map(|v| v / tm).collect())
    };
    let chi2 = |ln_t: f64| -> Result<f64> {
        let m = model(ln_t)?;
        Ok(data
            .iter()
            .zip(&m)
            .zip(&weights)
            .map(|((d, m), w)| w * (d - m).powi(2))
            .sum())
    };

    let (a, b) = ((lo * t_d).ln(), (hi * t_d).ln());
    let scan = 48;
    let grid: Vec<f64> = (0..=scan)
        .map(|i| a + (b - a) * i as f64 / scan as f64)
        .collect();
    let values = parallel_map(&grid, &chi2)?;
    let k = (0..=scan)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap_or(0);
    let (mut l, mut r) = (grid[k.saturating_sub(1)], grid[(k + 1).min(scan)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (r - g * (r - l), l + g * (r - l));
    let (mut fc, mut fd) = (chi2(c)?, chi2(d)?);
    while r - l > 1e-5 {
        if fc < fd {
            r = d;
            d = c;
            fd = fc;
            c = r - g * (r - l);
            fc = chi2(c)?;
        } else {
            l = c;
            c = d;
            fc = fd;
            d = l + g * (r - l);
            fd = chi2(d)?;
        }
    }
    let best = 0.5 * (l + r);
    let f0 = chi2(best)?;
    let h = 0.02;
    let curv = (chi2(best + h)? - 2.0 * f0 + chi2(best - h)?) / (h * h);
    let sigma = if curv > 0.0 {
        (2.0 / curv).sqrt()
    } else {
        f64::INFINITY
    };

    let fitted = model(best)?;
    let cold = model(t_d.ln())?;
    let low_sensitivity = fitted.iter().zip(&cold).all(|(p, q)| (p - q).abs() < 0.01);
    let mut warnings = warnings;
    if k == 0 || k == scan {
        warnings.push("best fit lies at the edge of the search range".into());
    }
    Ok(TemperatureFit {
        temperature: best.exp(),
        interval: ((best - sigma).exp(), (best + sigma).exp()),
        chi_squared: f0,
        doppler_temperature: t_d,
        low_sensitivity,
        warnings,
    })
}
