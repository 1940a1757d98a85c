use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::integrate::Trajectory;
use crate::error::{Error, Result};

/// Secular cycles needed to resolve a line.
pub const MIN_SECULAR_CYCLES: f64 = 50.0;
const PADDING: usize = 8;
/// Lines weaker than this fraction of the strongest spectral amplitude are ignored.
const LINE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularLine {
    pub coordinate: usize,
    /// rad/s
    pub omega: f64,
    /// m
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Dominant line below Ω/2 for each coordinate that has one.
    pub secular: Vec<SecularLine>,
    /// Amplitude of the component at exactly Ω_rf, per coordinate (m).
    pub micromotion: [f64; 3],
    pub frequencies_hz: Vec<f64>,
    /// Single-sided amplitude spectra (m) per coordinate, Hann windowed.
    pub amplitudes: [Vec<f64>; 3],
}

impl SpectralReport {
    pub fn micromotion_amplitude(&self) -> f64 {
        self.micromotion.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Distinct secular frequencies (rad/s), merged within 1%.
    pub fn secular_frequencies(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let mut w: Vec<f64> = self.secular.iter().map(|l| l.omega).collect();
        w.sort_by(f64::total_cmp);
        for f in w {
            if out.last().is_none_or(|&g| (f - g).abs() > 0.01 * g) {
                out.push(f);
            }
        }
        out
    }

    /// Fraction of spectral power between two frequencies (Hz), over all coordinates.
    pub fn band_fraction(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        let mut band = 0.0;
        let mut total = 0.0;
        for a in &self.amplitudes {
            for (f, v) in self.frequencies_hz.iter().zip(a) {
                total += v * v;
                if *f >= lo_hz && *f <= hi_hz {
                    band += v * v;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            band / total
        }
    }

    /// Comma-separated `frequency_hz,amplitude_m,amplitude_x_m,amplitude_y_m,amplitude_z_m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "frequency_hz,amplitude_m,amplitude_x_m,amplitude_y_m,amplitude_z_m"
        )?;
        for (k, f) in self.frequencies_hz.iter().enumerate() {
            let [x, y, z] = [
                self.amplitudes[0][k],
                self.amplitudes[1][k],
                self.amplitudes[2][k],
            ];
            let total = (x * x + y * y + z * z).sqrt();
            writeln!(w, "{f:e},{total:e},{x:e},{y:e},{z:e}")?;
        }
        Ok(())
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| 0.5 * (1.0 - (TAU * k as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Windowed complex amplitude of `x` at angular frequency `omega`.
pub(crate) fn tone_amplitude(x: &[f64], dt: f64, omega: f64) -> Complex64 {
    let w = hann(x.len());
    let norm: f64 = w.iter().sum();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, (&v, &wk)) in x.iter().zip(&w).enumerate() {
        acc += Complex64::from_polar(wk * (v - mean), -omega * k as f64 * dt);
    }
    acc * (2.0 / norm)
}

/// Hann-windowed periodogram of each coordinate with log-parabolic peak interpolation.
pub fn spectral_decompose(traj: &Trajectory) -> Result<SpectralReport> {
    let n = traj.len();
    if n < 16 {
        return Err(Error::Resolution {
            required: 16.0 * traj.sample_interval(),
        });
    }
    let dt = traj.sample_interval();
    let duration = dt * (n - 1) as f64;
    let nfft = n.next_power_of_two() * PADDING;
    let df = 1.0 / (nfft as f64 * dt);
    let window = hann(n);
    let norm: f64 = window.iter().sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let half = nfft / 2 + 1;
    let frequencies_hz: Vec<f64> = (0..half).map(|k| k as f64 * df).collect();

    let spectrum = |x: &[f64]| {
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        for k in 0..n {
            buf[k] = Complex64::new((x[k] - mean) * window[k], 0.0);
        }
        fft.process(&mut buf);
        buf[..half]
            .iter()
            .map(|z| 2.0 * z.norm() / norm)
            .collect::<Vec<f64>>()
    };
    let mut amplitudes: [Vec<f64>; 3] = Default::default();
    // spectra with the rf tone removed, so its leakage is not mistaken for a line
    let mut residual: [Vec<f64>; 3] = Default::default();
    let mut micromotion = [0.0; 3];
    for c in 0..3 {
        let x: Vec<f64> = traj.positions.iter().map(|p| p[c]).collect();
        amplitudes[c] = spectrum(&x);
        let tone = tone_amplitude(&x, dt, traj.omega_rf);
        micromotion[c] = tone.norm();
        let cleaned: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(k, v)| v - (tone * Complex64::from_polar(1.0, traj.omega_rf * k as f64 * dt)).re)
            .collect();
        residual[c] = spectrum(&cleaned);
    }

    let global = amplitudes.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let f_rf = traj.omega_rf / TAU;
    let lo = 3.0 / duration;
    let mut secular = Vec::new();
    for (c, a) in residual.iter().enumerate() {
        let band: Vec<usize> = (1..half - 1)
            .filter(|&k| frequencies_hz[k] > lo && frequencies_hz[k] < 0.5 * f_rf)
            .collect();
        let Some(&k) = band.iter().max_by(|&&i, &&j| a[i].total_cmp(&a[j])) else {
            continue;
        };
        // a maximum on the band edge is leakage from outside, not a line
        let interior = k != band[0] && k != band[band.len() - 1];
        if !interior || global == 0.0 || a[k] < LINE_THRESHOLD * global {
            continue;
        }
        let (l, m, r) = (
            a[k - 1].max(1e-300).ln(),
            a[k].ln(),
            a[k + 1].max(1e-300).ln(),
        );
        let denom = l - 2.0 * m + r;
        let delta = if denom < 0.0 {
            0.5 * (l - r) / denom
        } else {
            0.0
        };
        let f = (k as f64 + delta.clamp(-0.5, 0.5)) * df;
        if duration * f < MIN_SECULAR_CYCLES {
            return Err(Error::Resolution {
                required: MIN_SECULAR_CYCLES / f,
            });
        }
        secular.push(SecularLine {
            coordinate: c,
            omega: 2.0 * PI * f,
            amplitude: a[k],
        });
    }
    Ok(SpectralReport {
        secular,
        micromotion,
        frequencies_hz,
        amplitudes,
    })
}
