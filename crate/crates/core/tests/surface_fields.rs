mod common;

use common::{fd_gradient, fd_hessian, rect_potential_quadrature};
use iontrap::surface::{Electrode, PlanarGeometry, RectPatch, Role, Strip, Vec3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_strip(rng: &mut StdRng) -> Strip {
    match rng.random_range(0..3) {
        0 => {
            let lo = rng.random_range(-2.0..1.0);
            Strip::new(lo, lo + rng.random_range(0.1..2.0)).unwrap()
        }
        1 => Strip::new(f64::NEG_INFINITY, rng.random_range(-1.0..1.0)).unwrap(),
        _ => Strip::new(rng.random_range(-1.0..1.0), f64::INFINITY).unwrap(),
    }
}

#[test]
fn strip_field_matches_finite_differences() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..200 {
        let s = random_strip(&mut rng);
        let (x, y) = (rng.random_range(-2.0..2.0), rng.random_range(0.2..2.0));
        let f = |p: [f64; 3]| s.unit_potential(p[0], p[1]).unwrap();
        let g = fd_gradient(&f, [x, y, 0.0], 1e-5);
        let e = s.unit_field(x, y).unwrap();
        let scale = e.norm().max(1e-3);
        assert!((e.x + g[0]).abs() < 1e-6 * scale, "{:?} {:?}", e, g);
        assert!((e.y + g[1]).abs() < 1e-6 * scale);
    }
}

#[test]
fn strip_hessian_matches_finite_differences_and_is_traceless() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let s = random_strip(&mut rng);
        let (x, y) = (rng.random_range(-2.0..2.0), rng.random_range(0.3..2.0));
        let h = s.unit_hessian(x, y).unwrap();
        assert!((h[(0, 1)] - h[(1, 0)]).abs() == 0.0);
        assert!(h.trace().abs() <= 1e-12 * h.norm());
        // differentiate the analytic gradient: second-order accurate, no cancellation
        let step = 1e-5;
        for j in 0..2 {
            let (dx, dy) = if j == 0 { (step, 0.0) } else { (0.0, step) };
            let gp = s.unit_gradient(x + dx, y + dy).unwrap();
            let gm = s.unit_gradient(x - dx, y - dy).unwrap();
            let col = (gp - gm) / (2.0 * step);
            for i in 0..2 {
                assert!(
                    (col[i] - h[(i, j)]).abs() < 1e-5 * h.norm().max(1e-3),
                    "{col:?} {h:?}"
                );
            }
        }
    }
}

#[test]
fn strip_third_derivatives_match_finite_differences() {
    let s = Strip::new(-0.7, 0.4).unwrap();
    let (x, y) = (0.3, 0.6);
    let t = s.unit_third(x, y).unwrap();
    let h = 1e-5;
    let dxh = (s.unit_hessian(x + h, y).unwrap() - s.unit_hessian(x - h, y).unwrap()) / (2.0 * h);
    let dyh = (s.unit_hessian(x, y + h).unwrap() - s.unit_hessian(x, y - h).unwrap()) / (2.0 * h);
    let tol = 1e-6 * t.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!((t[0] - dxh[(0, 0)]).abs() < tol);
    assert!((t[1] - dxh[(0, 1)]).abs() < tol);
    assert!((t[2] - dxh[(1, 1)]).abs() < tol);
    assert!((t[3] - dyh[(1, 1)]).abs() < tol);
    assert!((t[1] - dyh[(0, 0)]).abs() < tol);
}

#[test]
fn four_wire_null_and_quadrupole() {
    let d = 40e-6;
    let g = PlanarGeometry::four_wire(d).unwrap();
    let e = g.field(&[1.0, 1.0], &Vec3::new(0.0, d, 0.0)).unwrap();
    assert!(e.norm() < 1e-9 / d, "{}", e.norm());
    let h = g
        .derivatives(&[1.0, 1.0], &Vec3::new(0.0, d, 0.0))
        .unwrap()
        .hessian;
    let eig = h
        .fixed_view::<2, 2>(0, 0)
        .into_owned()
        .symmetric_eigenvalues();
    assert!((eig[0] + eig[1]).abs() < 1e-12 * eig.amax());
    assert!(eig[0] * eig[1] < 0.0);

    let f = PlanarGeometry::five_wire(d).unwrap();
    let e5 = f
        .field(&[1.0, 1.0], &Vec3::new(0.0, 3f64.sqrt() * d / 2.0, 0.0))
        .unwrap();
    assert!(e5.norm() < 1e-9 / d, "{}", e5.norm());
}

#[test]
fn four_wire_is_sum_of_its_strips() {
    let d = 1.0;
    let g = PlanarGeometry::four_wire(d).unwrap();
    let a = Strip::new(-d, 0.0).unwrap();
    let b = Strip::new(d, f64::INFINITY).unwrap();
    let p = Vec3::new(0.31, 0.77, 0.0);
    let direct = 2.5 * (a.unit_potential(p.x, p.y).unwrap() + b.unit_potential(p.x, p.y).unwrap());
    assert!((g.potential(&[2.5, 2.5], &p).unwrap() - direct).abs() < 1e-15);
}

fn mixed_geometry() -> PlanarGeometry {
    PlanarGeometry::new(vec![
        Electrode::strip("rf1", Role::Rf, -1.5, -0.5, 0.0).unwrap(),
        Electrode::strip("rf2", Role::Rf, 0.5, 1.5, 0.0).unwrap(),
        Electrode::strip("gnd", Role::Control, -0.5, 0.5, 0.0).unwrap(),
        Electrode::rect("c1", Role::Control, (1.5, 3.0), (-1.0, 0.0), 0.0).unwrap(),
        Electrode::rect("c2", Role::Control, (1.5, 3.0), (0.0, 1.0), 0.0).unwrap(),
        Electrode::rect("c3", Role::Control, (-3.0, -1.5), (-0.5, 0.7), 0.0).unwrap(),
    ])
    .unwrap()
}

#[test]
fn harmonicity_on_random_points() {
    let g = mixed_geometry();
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let p = Vec3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(0.2..2.0),
            rng.random_range(-2.0..2.0),
        );
        for (i, e) in g.electrodes().iter().enumerate() {
            let d = e.unit_derivatives(&p).unwrap();
            let lap = d.hessian.trace();
            let scale = d.hessian.norm().max(1e-12);
            assert!(lap.abs() < 1e-10 * scale, "electrode {i}: {lap} vs {scale}");
            // numerical Laplacian of the closed form
            let f = |q: [f64; 3]| e.unit_potential(&Vec3::new(q[0], q[1], q[2])).unwrap();
            let fd = fd_hessian(&f, [p.x, p.y, p.z], 1e-3);
            let num_lap = fd[0][0] + fd[1][1] + fd[2][2];
            assert!(num_lap.abs() < 1e-4 * scale.max(d.value.abs()), "{num_lap}");
        }
    }
}

#[test]
fn patch_derivatives_match_finite_differences() {
    let r = RectPatch::new((-0.4, 1.1), (-0.9, 0.3)).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..50 {
        let p = [
            rng.random_range(-2.0..2.0),
            rng.random_range(0.3..2.0),
            rng.random_range(-2.0..2.0),
        ];
        let f = |q: [f64; 3]| r.unit_potential(&Vec3::new(q[0], q[1], q[2])).unwrap();
        let (_, g, h) = r.unit_derivatives(&Vec3::new(p[0], p[1], p[2])).unwrap();
        let gf = fd_gradient(&f, p, 1e-5);
        let hf = fd_hessian(&f, p, 1e-4);
        for i in 0..3 {
            assert!((g[i] - gf[i]).abs() < 1e-7 * g.norm().max(1e-3));
            for j in 0..3 {
                assert!((h[(i, j)] - hf[i][j]).abs() < 1e-5 * h.norm().max(1e-3));
            }
        }
    }
}

#[test]
fn patch_far_field_and_on_axis_against_quadrature() {
    // far above the centre: solid angle ≈ area · y / r³
    let r = RectPatch::new((-0.5, 0.5), (-0.25, 0.25)).unwrap();
    let p = Vec3::new(0.0, 20.0, 0.0);
    let closed = r.unit_potential(&p).unwrap();
    let quad = rect_potential_quadrature(-0.5, 0.5, -0.25, 0.25, [0.0, 20.0, 0.0]);
    assert!((closed - quad).abs() < 1e-6 * quad);
    let dipole = r.area() / (2.0 * std::f64::consts::PI * 400.0);
    assert!((closed - dipole).abs() < 1e-3 * dipole);

    // square, on axis at half-side height: 4 atan(1/√3) / 2π = 1/3
    let sq = RectPatch::new((-1.0, 1.0), (-1.0, 1.0)).unwrap();
    let v = sq.unit_potential(&Vec3::new(0.0, 1.0, 0.0)).unwrap();
    let q = rect_potential_quadrature(-1.0, 1.0, -1.0, 1.0, [0.0, 1.0, 0.0]);
    assert!((v - 1.0 / 3.0).abs() < 1e-15);
    assert!((q - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn long_rectangle_is_a_strip() {
    let strip = Strip::new(-20e-6, 35e-6).unwrap();
    let rect = RectPatch::new((-20e-6, 35e-6), (-1e6, 1e6)).unwrap();
    for &(x, y) in &[(0.0, 1e-5), (3e-5, 4e-5), (-1e-4, 1e-3), (1e-6, 1e-6)] {
        let a = strip.unit_potential(x, y).unwrap();
        let b = rect.unit_potential(&Vec3::new(x, y, 1e-5)).unwrap();
        assert!((a - b).abs() < 1e-6 * a.abs(), "{a} {b}");
    }
}

#[test]
fn superposition_and_scale_covariance() {
    let g = mixed_geometry();
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..50 {
        let u: Vec<f64> = (0..g.len())
            .map(|_| rng.random_range(-10.0..10.0))
            .collect();
        let v: Vec<f64> = (0..g.len())
            .map(|_| rng.random_range(-10.0..10.0))
            .collect();
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let p = Vec3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(0.1..2.0),
            rng.random_range(-2.0..2.0),
        );
        let sum = g.potential(&u, &p).unwrap() + g.potential(&v, &p).unwrap();
        let joint = g.potential(&w, &p).unwrap();
        assert!((sum - joint).abs() <= 1e-14 * (sum.abs() + 1.0));

        let lambda = rng.random_range(0.01..100.0);
        let scaled = g.scaled(lambda);
        let a = g.potential(&u, &p).unwrap();
        let b = scaled.potential(&u, &(p * lambda)).unwrap();
        assert!((a - b).abs() < 1e-12 * (a.abs() + 1.0), "{a} {b}");
    }
}
