//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss-Legendre over [a, b] with `panels` panels of `n` nodes.
pub fn quad1d(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(lo + 0.5 * h * (xi + 1.0)) * 0.5 * h;
        }
    }
    acc
}

/// Potential of a 1 V rectangle [x0,x1]×[z0,z1] at (x, y, z) by direct
/// quadrature of the half-space Dirichlet Green's function kernel
/// y / (2π |r - r'|³).
pub fn rect_potential_quadrature(x0: f64, x1: f64, z0: f64, z1: f64, p: [f64; 3]) -> f64 {
    let [x, y, z] = p;
    // panel count scales with the patch size relative to the height
    let size = (x1 - x0).max(z1 - z0);
    let panels = ((4.0 * size / y).ceil() as usize).clamp(4, 64);
    quad1d(
        |xp| {
            quad1d(
                |zp| {
                    let r2 = (x - xp).powi(2) + y * y + (z - zp).powi(2);
                    y / (2.0 * PI * r2 * r2.sqrt())
                },
                z0,
                z1,
                panels,
                12,
            )
        },
        x0,
        x1,
        panels,
        12,
    )
}

/// Central-difference gradient of a scalar function of three variables.
pub fn fd_gradient(f: &impl Fn([f64; 3]) -> f64, p: [f64; 3], h: f64) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..3 {
        let mut a = p;
        let mut b = p;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2.0 * h);
    }
    g
}

/// Central-difference Hessian.
pub fn fd_hessian(f: &impl Fn([f64; 3]) -> f64, p: [f64; 3], h: f64) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let eval = |si: f64, sj: f64| {
                let mut q = p;
                q[i] += si * h;
                q[j] += sj * h;
                f(q)
            };
            out[i][j] = if i == j {
                let mut a = p;
                let mut b = p;
                a[i] += h;
                b[i] -= h;
                (f(a) - 2.0 * f(p) + f(b)) / (h * h)
            } else {
                (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * h * h)
            };
        }
    }
    out
}

/// Golden-section minimisation on [a, b].
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
