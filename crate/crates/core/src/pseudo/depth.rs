use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::model::PseudoModel;
use crate::error::{Error, Result};
use crate::surface::Vec3;
use crate::units::constants::ELEMENTARY_CHARGE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthSearch {
    /// Scan along the vertical ray through the null.
    SymmetryRay,
    /// Minimax flood over a planar grid.
    GridScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapDepthResult {
    pub null: Vec3,
    pub saddle: Vec3,
    /// `Φ_pp(saddle) - Φ_pp(null)` in eV.
    pub depth_ev: f64,
    /// Unit vector of the negative-curvature direction, pointing away from the null.
    pub escape_direction: Vec3,
    /// Corners `(x, y)` of the region that was searched.
    pub search_box: [[f64; 2]; 2],
    pub method: DepthSearch,
}

/// Depth of the pseudopotential well around `null`, taken at the lowest escape saddle found.
pub fn trap_depth(model: &PseudoModel, null: &Vec3) -> Result<TrapDepthResult> {
    let h = null.y;
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "null height must be positive, got {h}"
        )));
    }
    let mut found = Vec::new();
    let mut last_err = None;
    if model.is_mirror_symmetric(null.x, h) {
        match ray_saddle(model, null) {
            Ok(r) => found.push(r),
            Err(e) => last_err = Some(e),
        }
    }
    if found.is_empty() {
        match grid_saddle(model, null) {
            Ok(r) => found.push(r),
            Err(e) => last_err = Some(e),
        }
    }
    found
        .into_iter()
        .min_by(|a, b| a.depth_ev.total_cmp(&b.depth_ev))
        .ok_or_else(|| {
            last_err.unwrap_or(Error::Search {
                iterations: 0,
                residual: f64::NAN,
                best: [null.x, null.y, null.z],
            })
        })
}

const RAY_EXTENT: f64 = 10.0;
const RAY_SAMPLES: usize = 2000;
const BOX_FACTOR: f64 = 5.0;

fn ray_saddle(model: &PseudoModel, null: &Vec3) -> Result<TrapDepthResult> {
    let h = null.y;
    let at = |y: f64| model.pseudo_energy(&Vec3::new(null.x, y, null.z));
    let dy = (RAY_EXTENT - 1.0) * h / RAY_SAMPLES as f64;
    let mut prev = at(h)?;
    let mut cur = at(h + dy)?;
    for i in 2..=RAY_SAMPLES {
        let next = at(h + i as f64 * dy)?;
        if cur > prev && cur >= next {
            let guess = Vec3::new(null.x, h + (i - 1) as f64 * dy, null.z);
            let saddle = refine_saddle(model, &guess)?;
            return finish(
                model,
                null,
                saddle,
                [[null.x, h], [null.x, RAY_EXTENT * h]],
                DepthSearch::SymmetryRay,
            );
        }
        prev = cur;
        cur = next;
    }
    Err(Error::Search {
        iterations: RAY_SAMPLES,
        residual: f64::NAN,
        best: [null.x, RAY_EXTENT * h, null.z],
    })
}

/// Lowest-barrier escape from the null cell to the edge of a grid box,
/// found by a minimax (bottleneck) flood fill.
fn grid_saddle(model: &PseudoModel, null: &Vec3) -> Result<TrapDepthResult> {
    const NX: usize = 161;
    const NY: usize = 101;
    let h = null.y;
    let (x0, x1) = (null.x - BOX_FACTOR * h, null.x + BOX_FACTOR * h);
    let (y0, y1) = (0.02 * h, BOX_FACTOR * h);
    let xs: Vec<f64> = (0..NX)
        .map(|i| x0 + (x1 - x0) * i as f64 / (NX - 1) as f64)
        .collect();
    let ys: Vec<f64> = (0..NY)
        .map(|j| y0 + (y1 - y0) * j as f64 / (NY - 1) as f64)
        .collect();
    let mut u = vec![0.0; NX * NY];
    for j in 0..NY {
        for i in 0..NX {
            u[j * NX + i] = model.pseudo_energy(&Vec3::new(xs[i], ys[j], null.z))?;
        }
    }
    let nearest = |v: f64, grid: &[f64]| {
        grid.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0)
    };
    let start = nearest(null.y, &ys) * NX + nearest(null.x, &xs);
    // key: bits of a non-negative f64 preserve ordering
    let mut level = vec![f64::INFINITY; NX * NY];
    let mut peak = vec![start; NX * NY];
    let mut heap = BinaryHeap::new();
    level[start] = u[start];
    heap.push(Reverse((u[start].to_bits(), start)));
    let mut escape = None;
    while let Some(Reverse((bits, k))) = heap.pop() {
        let l = f64::from_bits(bits);
        if l > level[k] {
            continue;
        }
        let (i, j) = (k % NX, k / NX);
        if i == 0 || j == 0 || i == NX - 1 || j == NY - 1 {
            escape = Some(k);
            break;
        }
        for (ni, nj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
            let n = nj * NX + ni;
            let (nl, np) = if u[n] > l { (u[n], n) } else { (l, peak[k]) };
            if nl < level[n] {
                level[n] = nl;
                peak[n] = np;
                heap.push(Reverse((nl.to_bits(), n)));
            }
        }
    }
    let search_box = [[x0, y0], [x1, y1]];
    let k = escape.map(|e| peak[e]).ok_or_else(|| Error::Search {
        iterations: NX * NY,
        residual: f64::NAN,
        best: [null.x, null.y, null.z],
    })?;
    let guess = Vec3::new(xs[k % NX], ys[k / NX], null.z);
    let saddle = refine_saddle(model, &guess)?;
    finish(model, null, saddle, search_box, DepthSearch::GridScan)
}

/// Newton iteration on `∇Φ_pp = 0`, ignoring flat directions.
fn refine_saddle(model: &PseudoModel, guess: &Vec3) -> Result<Vec3> {
    let len = model.length_scale();
    let tol = 1e-11 * model.energy_scale() / len;
    let mut p = *guess;
    for _ in 0..100 {
        let d = model.pseudo_derivatives(&p)?;
        let eig = SymmetricEigen::new(d.hessian);
        let lmax = eig.eigenvalues.amax();
        let mut step = Vec3::zeros();
        for i in 0..3 {
            let l = eig.eigenvalues[i];
            if l.abs() > 1e-9 * lmax {
                let v = eig.eigenvectors.column(i);
                step -= v * (v.dot(&d.gradient) / l);
            }
        }
        if d.gradient.norm() < tol || step.norm() < 1e-14 * len {
            return Ok(p);
        }
        let limit = 0.2 * p.y;
        if step.norm() > limit {
            step *= limit / step.norm();
        }
        p += step;
    }
    let g = model.pseudo_derivatives(&p)?.gradient.norm();
    if g < 1e3 * tol {
        return Ok(p);
    }
    Err(Error::Search {
        iterations: 100,
        residual: g,
        best: [p.x, p.y, p.z],
    })
}

fn finish(
    model: &PseudoModel,
    null: &Vec3,
    saddle: Vec3,
    search_box: [[f64; 2]; 2],
    method: DepthSearch,
) -> Result<TrapDepthResult> {
    let d = model.pseudo_derivatives(&saddle)?;
    let eig = SymmetricEigen::new(d.hessian);
    let lmax = eig.eigenvalues.amax();
    let negative: Vec<usize> = (0..3)
        .filter(|&i| eig.eigenvalues[i] < -1e-9 * lmax)
        .collect();
    if negative.len() != 1 {
        return Err(Error::Search {
            iterations: 0,
            residual: d.gradient.norm(),
            best: [saddle.x, saddle.y, saddle.z],
        });
    }
    let mut dir: Vec3 = eig.eigenvectors.column(negative[0]).into_owned();
    if dir.dot(&(saddle - null)) < 0.0 {
        dir = -dir;
    }
    let depth = (d.value - model.pseudo_energy(null)?) / ELEMENTARY_CHARGE;
    Ok(TrapDepthResult {
        null: *null,
        saddle,
        depth_ev: depth.max(0.0),
        escape_direction: dir,
        search_box,
        method,
    })
}
