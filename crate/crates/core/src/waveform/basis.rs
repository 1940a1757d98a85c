use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{PlanarGeometry, Role, Shape, Vec3};

const FIT_POINTS: usize = 7;
/// |Σ∇u_rf|·y₀ below this counts as lying on the rf null.
const NULL_TOLERANCE: f64 = 1e-6;
const REDUNDANCY_TOLERANCE: f64 = 1e-9;

/// One independently driven voltage: a set of electrodes tied together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub label: String,
    pub electrodes: Vec<usize>,
}

/// Unit-voltage potentials of each channel along the line `(x₀, y₀, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialBasis {
    pub x0: f64,
    pub y0: f64,
    pub z: Vec<f64>,
    pub channels: Vec<Channel>,
    /// `samples[c][k]`: potential of channel `c` at 1 V on grid point `k`.
    pub samples: Vec<Vec<f64>>,
    /// Potential of every electrode outside the channels, at its own bias.
    pub background: Vec<f64>,
    /// Typical channel length along z (m).
    pub pitch: f64,
    /// Whether the line sits on the rf null of an in-phase, equal-amplitude drive.
    pub null_verified: bool,
    /// Channels whose samples are linear combinations of earlier ones.
    pub redundant: Vec<String>,
    geometry: PlanarGeometry,
}

/// Potential and its first four z derivatives at a point, per channel plus background.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    /// `channels[c][n]` is the n-th derivative (V/mⁿ per applied volt).
    pub channels: Vec<[f64; 5]>,
    pub background: [f64; 5],
}

/// Every rectangular control electrode as its own channel.
pub fn control_channels(geometry: &PlanarGeometry) -> Vec<Channel> {
    geometry
        .electrodes()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.role == Role::Control && matches!(e.shape, Shape::Rect(_)))
        .map(|(i, e)| Channel {
            label: e.label.clone(),
            electrodes: vec![i],
        })
        .collect()
}

/// Rectangular control electrodes grouped with their mirror image about `x = x0`.
pub fn mirror_channels(geometry: &PlanarGeometry, x0: f64) -> Vec<Channel> {
    let es = geometry.electrodes();
    let scale = geometry.length_scale();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * scale;
    let mut used = vec![false; es.len()];
    let mut out = Vec::new();
    for ch in control_channels(geometry) {
        let i = ch.electrodes[0];
        if used[i] {
            continue;
        }
        used[i] = true;
        let (xa, xb) = es[i].shape.x_range();
        let (za, zb) = es[i].shape.z_range();
        let partner = control_channels(geometry)
            .into_iter()
            .map(|c| c.electrodes[0])
            .find(|&j| {
                let (ya, yb) = es[j].shape.x_range();
                let (wa, wb) = es[j].shape.z_range();
                !used[j]
                    && close(ya, 2.0 * x0 - xb)
                    && close(yb, 2.0 * x0 - xa)
                    && close(wa, za)
                    && close(wb, zb)
            });
        match partner {
            Some(j) => {
                used[j] = true;
                out.push(Channel {
                    label: format!("{}+{}", es[i].label, es[j].label),
                    electrodes: vec![i, j],
                });
            }
            None => out.push(ch),
        }
    }
    out
}

impl AxialBasis {
    /// Basis with one channel per rectangular control electrode.
    pub fn new(geometry: &PlanarGeometry, z: Vec<f64>, x0: f64, y0: f64) -> Result<Self> {
        Self::with_channels(geometry, control_channels(geometry), z, x0, y0)
    }

    pub fn with_channels(
        geometry: &PlanarGeometry,
        channels: Vec<Channel>,
        z: Vec<f64>,
        x0: f64,
        y0: f64,
    ) -> Result<Self> {
        if channels.len() < 3 {
            return Err(Error::Validation(format!(
                "axial control needs at least 3 channels, got {}",
                channels.len()
            )));
        }
        if z.len() < FIT_POINTS
            || !z.windows(2).all(|w| w[0] < w[1])
            || z.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Validation(format!(
                "z grid must be finite, strictly increasing and have at least {FIT_POINTS} points"
            )));
        }
        if !(y0 > 0.0 && y0.is_finite() && x0.is_finite()) {
            return Err(Error::Domain(format!(
                "axial line must lie above the plane, got x0 = {x0}, y0 = {y0}"
            )));
        }
        let es = geometry.electrodes();
        let mut member = vec![false; es.len()];
        for ch in &channels {
            if ch.electrodes.is_empty() {
                return Err(Error::Validation(format!(
                    "channel `{}` has no electrodes",
                    ch.label
                )));
            }
            for &i in &ch.electrodes {
                if i >= es.len() || member[i] {
                    return Err(Error::Validation(format!(
                        "channel `{}`: bad or repeated electrode {i}",
                        ch.label
                    )));
                }
                member[i] = true;
            }
        }
        let point = |zk: f64| Vec3::new(x0, y0, zk);
        let mut samples = Vec::with_capacity(channels.len());
        for ch in &channels {
            let s = z
                .iter()
                .map(|&zk| {
                    ch.electrodes
                        .iter()
                        .map(|&i| es[i].unit_potential(&point(zk)))
                        .sum::<Result<f64>>()
                })
                .collect::<Result<Vec<f64>>>()?;
            samples.push(s);
        }
        let background = z
            .iter()
            .map(|&zk| {
                es.iter()
                    .zip(&member)
                    .filter(|(e, m)| !**m && e.bias != 0.0)
                    .map(|(e, _)| e.potential(&point(zk)))
                    .sum::<Result<f64>>()
            })
            .collect::<Result<Vec<f64>>>()?;

        let mut lengths: Vec<f64> = channels
            .iter()
            .map(|c| {
                let (a, b) = es[c.electrodes[0]].shape.z_range();
                b - a
            })
            .collect();
        lengths.sort_by(f64::total_cmp);
        let pitch = lengths[lengths.len() / 2];

        let rf = geometry.rf_indices();
        let null_verified = !rf.is_empty()
            && [z[0], z[z.len() / 2], z[z.len() - 1]].iter().all(|&zk| {
                let g: Result<Vec3> = rf.iter().map(|&i| es[i].unit_gradient(&point(zk))).sum();
                g.map(|g| g.norm() * y0 < NULL_TOLERANCE).unwrap_or(false)
            });

        let redundant = redundant_channels(&channels, &samples);
        Ok(Self {
            x0,
            y0,
            z,
            channels,
            samples,
            background,
            pitch,
            null_verified,
            redundant,
            geometry: geometry.clone(),
        })
    }

    pub fn geometry(&self) -> &PlanarGeometry {
        &self.geometry
    }

    pub fn labels(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.label.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Composed potential on the grid for channel voltages `v` (background included).
    pub fn compose(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        Ok((0..self.z.len())
            .map(|k| {
                self.background[k]
                    + v.iter()
                        .zip(&self.samples)
                        .map(|(a, s)| a * s[k])
                        .sum::<f64>()
            })
            .collect())
    }

    /// Per-electrode biases for channel voltages `v`; electrodes outside the channels keep their own.
    pub fn electrode_biases(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut b = self.geometry.biases();
        for (ch, &a) in self.channels.iter().zip(v) {
            for &i in &ch.electrodes {
                b[i] = a;
            }
        }
        Ok(b)
    }

    /// Composed potential evaluated directly from the electrodes, off the grid.
    pub fn potential_at(&self, biases: &[f64], z: f64) -> Result<f64> {
        self.geometry
            .potential(biases, &Vec3::new(self.x0, self.y0, z))
    }

    /// Derivatives at `z0` from a 7-point polynomial fit on the nearest grid samples.
    pub fn taylor(&self, z0: f64) -> Result<Taylor> {
        let n = self.z.len();
        if !(z0 >= self.z[0] && z0 <= self.z[n - 1]) {
            return Err(Error::Domain(format!(
                "z0 = {z0:e} m outside the sampled range [{:e}, {:e}] m",
                self.z[0],
                self.z[n - 1]
            )));
        }
        let i = self.z.partition_point(|&v| v < z0);
        let start = i.saturating_sub(FIT_POINTS / 2).min(n - FIT_POINTS);
        let idx = start..start + FIT_POINTS;
        let h = (self.z[start + FIT_POINTS - 1] - self.z[start]) / (FIT_POINTS - 1) as f64;
        let vander = SMatrix::<f64, FIT_POINTS, FIT_POINTS>::from_fn(|r, c| {
            ((self.z[start + r] - z0) / h).powi(c as i32)
        });
        let lu = vander.lu();
        let fit = |values: &[f64]| -> Result<[f64; 5]> {
            let rhs =
                SVector::<f64, FIT_POINTS>::from_iterator(values[idx.clone()].iter().copied());
            let c = lu
                .solve(&rhs)
                .ok_or_else(|| Error::Optimization("singular local fit".into()))?;
            let mut d = [0.0; 5];
            let mut fact = 1.0;
            for (k, dk) in d.iter_mut().enumerate() {
                if k > 0 {
                    fact *= k as f64;
                }
                *dk = fact * c[k] / h.powi(k as i32);
            }
            Ok(d)
        };
        Ok(Taylor {
            channels: self.samples.iter().map(|s| fit(s)).collect::<Result<_>>()?,
            background: fit(&self.background)?,
        })
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.channels.len() {
            return Err(Error::Validation(format!(
                "expected {} channel voltages, got {}",
                self.channels.len(),
                v.len()
            )));
        }
        Ok(())
    }
}

/// Gram-Schmidt over the sample vectors; channels adding no new direction are redundant.
fn redundant_channels(channels: &[Channel], samples: &[Vec<f64>]) -> Vec<String> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for (ch, s) in channels.iter().zip(samples) {
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            out.push(ch.label.clone());
            continue;
        }
        let mut r: Vec<f64> = s.iter().map(|v| v / norm).collect();
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
                r.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
            }
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn < REDUNDANCY_TOLERANCE {
            out.push(ch.label.clone());
        } else {
            basis.push(r.iter().map(|v| v / rn).collect());
        }
    }
    out
}
