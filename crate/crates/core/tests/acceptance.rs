//! Acceptance suite. Runs every criterion under its time budget, prints one
//! line per criterion and exits nonzero if any fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{golden_min, rect_potential_quadrature};
use iontrap::constants::VACUUM_PERMITTIVITY;
use iontrap::crystal::{equilibrium, normal_modes, ChainConfig};
use iontrap::diagnostics::{heating_rate, stray_field, DielectricGap, HeatingModel};
use iontrap::dynamics::{
    bessel_j, excess_micromotion, fluorescence_loss, integrate, sideband_spectrum,
    spectral_decompose, QuadrupoleField, State, UniformRfField,
};
use iontrap::pseudo::{
    quadrupole_radial_frequency, secular_modes, trap_depth, PseudoModel, QuadrupoleTrapModel,
    RfDrive,
};
use iontrap::recool::{
    doppler_energy, doppler_temperature, ensemble_curve, fit_temperature, simulate_recooling,
    FitSetup, LaserParams,
};
use iontrap::surface::{RectPatch, Strip};
use iontrap::waveform::{
    mirror_channels, separation_ramp, solve_well, AxialBasis, SolveOptions, WellSpec,
};
use iontrap::{IonSpecies, PlanarGeometry, Vec3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn mg() -> IonSpecies {
    IonSpecies::from_label("24Mg+").unwrap()
}

fn four_wire_model(d: f64, drive: RfDrive, species: IonSpecies) -> PseudoModel {
    PseudoModel::new(PlanarGeometry::four_wire(d).unwrap(), drive, species).unwrap()
}

fn quadrupole_frequency() -> Outcome {
    let m = QuadrupoleTrapModel::new(50e-6, 50.0, TAU * 100e6, mg()).unwrap();
    let f = quadrupole_radial_frequency(&m) / TAU;
    // ω = q V₀ / (√2 m Ω R²)
    let s = mg();
    let direct = s.charge() * 50.0 / (2f64.sqrt() * s.mass() * TAU * 100e6 * 50e-6 * 50e-6) / TAU;
    ensure(rel(f, direct) < 1e-12, || {
        format!("{f} Hz vs formula {direct} Hz")
    })?;
    ensure(rel(f, 14e6) < 0.03, || format!("{:.4} MHz", f / 1e6))?;
    Ok(format!("{:.4} MHz", f / 1e6))
}

fn four_wire_worked_example() -> Outcome {
    let d = 40e-6;
    let m = four_wire_model(d, RfDrive::new(103.2, TAU * 87e6).unwrap(), mg());
    let null = m
        .find_rf_null(&Vec3::new(0.2 * d, 0.7 * d, 0.0))
        .map_err(|e| e.to_string())?;
    let modes = secular_modes(&m, &null, None).map_err(|e| e.to_string())?;
    let radial: Vec<f64> = modes
        .modes
        .iter()
        .filter(|m| m.confined)
        .map(|m| m.omega / TAU)
        .collect();
    ensure(radial.len() == 2, || {
        format!("{} confined modes", radial.len())
    })?;
    for f in &radial {
        ensure(rel(*f, 16.9e6) < 0.01, || format!("{f} Hz"))?;
    }
    let depth = trap_depth(&m, &null).map_err(|e| e.to_string())?.depth_ev;
    ensure(rel(depth, 0.203) < 0.01, || format!("depth {depth} eV"))?;
    Ok(format!(
        "{:.4} MHz, {:.2} meV",
        radial[0] / 1e6,
        depth * 1e3
    ))
}

fn null_and_saddle_heights() -> Outcome {
    let d = 40e-6;
    let drive = RfDrive::new(103.2, TAU * 87e6).unwrap();
    let cases = [
        (
            "four-wire",
            PlanarGeometry::four_wire(d).unwrap(),
            d,
            d * (2.0 + 5f64.sqrt()).sqrt(),
        ),
        (
            "five-wire",
            PlanarGeometry::five_wire(d).unwrap(),
            3f64.sqrt() / 2.0 * d,
            d * (0.75 + 3f64.sqrt()).sqrt(),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, g, null_y, saddle_y) in cases {
        let m = PseudoModel::new(g, drive, mg()).unwrap();
        let null = m
            .find_rf_null(&Vec3::new(0.1 * d, 0.8 * d, 0.0))
            .map_err(|e| e.to_string())?;
        let saddle = trap_depth(&m, &null).map_err(|e| e.to_string())?.saddle;
        // independent 1D maximisation on the symmetry line
        let scan = golden_min(
            |y| -m.pseudo_energy(&Vec3::new(0.0, y, 0.0)).unwrap(),
            1.1 * null_y,
            5.0 * d,
            1e-15,
        );
        let errs = [
            rel(null.y, null_y),
            null.x.abs() / d,
            rel(saddle.y, saddle_y),
            saddle.x.abs() / d,
            rel(scan, saddle_y),
        ];
        let e = errs.iter().cloned().fold(0.0, f64::max);
        ensure(e < 1e-6, || format!("{name}: errors {errs:?}"))?;
        worst = worst.max(e);
    }
    Ok(format!("worst relative error {worst:.1e}"))
}

fn closed_form_cross_check() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = rng.random_range(20e-6..200e-6);
        let u = rng.random_range(20.0..400.0);
        let omega = TAU * rng.random_range(20e6..200e6);
        let species = IonSpecies::new(rng.random_range(6.0..200.0), 1).unwrap();
        let drive = RfDrive::new(u, omega).unwrap();
        let k = species.charge() * u / (species.mass() * omega * PI * d * d);
        for (g, expect, guess) in [
            (PlanarGeometry::four_wire(d).unwrap(), k / 2f64.sqrt(), 0.8),
            (
                PlanarGeometry::five_wire(d).unwrap(),
                k * (2.0f64 / 3.0).sqrt(),
                0.7,
            ),
        ] {
            let m = PseudoModel::new(g, drive, species).unwrap();
            let null = m
                .find_rf_null(&Vec3::new(0.05 * d, guess * d, 0.0))
                .map_err(|e| e.to_string())?;
            let modes = secular_modes(&m, &null, None).map_err(|e| e.to_string())?;
            for w in modes.modes.iter().filter(|m| m.confined) {
                let e = rel(w.omega, expect);
                ensure(e < 1e-4, || {
                    format!(
                        "d = {d:e}, U = {u}, mass = {}: {} vs {expect}",
                        species.mass_u(),
                        w.omega
                    )
                })?;
                worst = worst.max(e);
            }
        }
    }
    Ok(format!("40 layouts, worst {worst:.1e}"))
}

fn dynamics_validation() -> Outcome {
    let m = QuadrupoleTrapModel::new(50e-6, 45.0, TAU * 100e6, mg()).unwrap();
    let q = m.stability_parameter();
    ensure(q < 0.4, || format!("q = {q}"))?;
    let wr = quadrupole_radial_frequency(&m);
    let start = State::at_rest(Vec3::new(0.3e-6, -0.2e-6, 0.0));
    let traj = integrate(
        &QuadrupoleField::from(m),
        &mg(),
        start,
        80.0 * TAU / wr,
        &Default::default(),
    )
    .map_err(|e| e.to_string())?;
    let lines = spectral_decompose(&traj)
        .map_err(|e| e.to_string())?
        .secular_frequencies();
    ensure(!lines.is_empty(), || "no secular line".into())?;
    let secular = rel(lines[0], wr);
    ensure(secular < 0.05, || format!("secular {} vs {wr}", lines[0]))?;

    let omega = TAU * 50e6;
    let e0 = 500.0;
    let field = UniformRfField::new(Vec3::new(e0, 0.0, 0.0), omega).unwrap();
    let traj = integrate(
        &field,
        &mg(),
        State::at_rest(Vec3::zeros()),
        40.0 * TAU / omega,
        &Default::default(),
    )
    .map_err(|e| e.to_string())?;
    let expected = mg().charge() * e0 / (mg().mass() * omega * omega);
    let (lo, hi) = traj
        .positions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.x), b.max(p.x))
        });
    let amp = rel((hi - lo) / 2.0, expected);
    ensure(amp < 0.01, || {
        format!("amplitude {} vs {expected}", (hi - lo) / 2.0)
    })?;
    Ok(format!(
        "q = {q:.3}, secular off by {secular:.1e}, amplitude off by {amp:.1e}"
    ))
}

fn excess_micromotion_numbers() -> Outcome {
    let r = excess_micromotion(500.0, TAU * 10e6, TAU * 100e6, &mg()).map_err(|e| e.to_string())?;
    ensure(rel(r.displacement, 500e-9) < 0.02, || {
        format!("x_d = {:e}", r.displacement)
    })?;
    ensure(rel(r.amplitude, 70e-9) < 0.05, || {
        format!("x_mm = {:e}", r.amplitude)
    })?;
    Ok(format!(
        "x_d = {:.1} nm, x_mm = {:.1} nm",
        r.displacement * 1e9,
        r.amplitude * 1e9
    ))
}

fn sideband_landmarks() -> Outcome {
    let j = bessel_j(1.43, 1);
    // power series oracle
    let series = |n: i32, x: f64| {
        (0..40)
            .map(|k| {
                let f: f64 = (1..=k).map(f64::from).product::<f64>()
                    * (1..=k + n).map(f64::from).product::<f64>();
                (-1f64).powi(k) * (x / 2.0).powi(2 * k + n) / f
            })
            .sum::<f64>()
    };
    ensure(
        (j[0] - series(0, 1.43)).abs() < 1e-12 && (j[1] - series(1, 1.43)).abs() < 1e-12,
        || format!("J0, J1 = {j:?}"),
    )?;
    ensure(rel(j[0].abs(), j[1].abs()) < 0.01, || {
        format!("|J0| = {}, |J1| = {}", j[0], j[1])
    })?;
    for b in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let deficit = 1.0 - sideband_spectrum(b).map_err(|e| e.to_string())?.carrier();
        ensure(rel(deficit, b * b / 2.0) < 0.05, || {
            format!("β = {b}: deficit {deficit}")
        })?;
    }
    let loss = fluorescence_loss(0.25).map_err(|e| e.to_string())?;
    ensure(loss < 0.05, || format!("loss {loss}"))?;
    Ok(format!(
        "J0(1.43) = {:.4}, J1(1.43) = {:.4}, loss(0.25) = {loss:.4}",
        j[0], j[1]
    ))
}

fn ion_chain() -> Outcome {
    let wz = TAU * 1e6;
    let s = mg();
    let scale = (s.charge().powi(2) / (4.0 * PI * VACUUM_PERMITTIVITY * s.mass() * wz * wz)).cbrt();
    let three = equilibrium(&ChainConfig::new(s, 3, wz).unwrap()).map_err(|e| e.to_string())?;
    for d in &three.spacings {
        ensure(rel(*d, 1.25f64.cbrt() * scale) < 1e-6, || {
            format!("spacing {d:e}")
        })?;
    }
    let modes3 = normal_modes(&three).map_err(|e| e.to_string())?;
    ensure(rel(modes3.frequencies[0], wz) < 1e-9, || {
        format!("lowest {}", modes3.frequencies[0])
    })?;
    let two = normal_modes(
        &equilibrium(&ChainConfig::new(s, 2, wz).unwrap()).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure(rel(two.frequencies[0], wz) < 1e-9, || {
        format!("N = 2 lowest {}", two.frequencies[0])
    })?;
    ensure(rel(two.frequencies[1], 3f64.sqrt() * wz) < 1e-6, || {
        format!("stretch {}", two.frequencies[1])
    })?;
    Ok(format!(
        "s = {:.3} um, s3 = {:.3} um",
        scale * 1e6,
        three.spacings[0] * 1e6
    ))
}

fn stray_field_branches() -> Outcome {
    let (a, v, r) = (8e-6, 1.0, 40e-6);
    let thin =
        stray_field(&DielectricGap::new(a, 0.0, v, r).unwrap()).map_err(|e| e.to_string())?;
    let bare = a * v / (PI * r * r);
    ensure(thin.field == bare, || format!("{} vs {bare}", thin.field))?;
    let thick =
        stray_field(&DielectricGap::new(a, a / PI, v, r).unwrap()).map_err(|e| e.to_string())?;
    let expect = bare * 4.0 / PI * (-1.0f64).exp();
    ensure(rel(thick.field, expect) < 1e-15, || {
        format!("{} vs {expect}", thick.field)
    })?;
    Ok(format!(
        "{:.1} V/m, suppressed {:.4}",
        thin.field, thick.suppression
    ))
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn heating_scaling() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..50 {
        let (alpha, beta) = (rng.random_range(0.5..6.0), rng.random_range(0.5..2.0));
        let (r0, w0) = (rng.random_range(1e-5..1e-4), rng.random_range(1e6..1e8));
        let m =
            HeatingModel::with_exponents(3e-11, r0, w0, alpha, beta).map_err(|e| e.to_string())?;
        let rs: Vec<f64> = (0..9).map(|k| r0 * 1.5f64.powi(k - 4)).collect();
        let sr: Vec<f64> = rs
            .iter()
            .map(|&r| m.spectral_density(r, w0).unwrap())
            .collect();
        let ws: Vec<f64> = (0..9).map(|k| w0 * 1.7f64.powi(k - 4)).collect();
        let sw: Vec<f64> = ws
            .iter()
            .map(|&w| m.spectral_density(r0, w).unwrap())
            .collect();
        ensure((log_slope(&rs, &sr) + alpha).abs() < 1e-6, || {
            format!("alpha {alpha}")
        })?;
        ensure((log_slope(&ws, &sw) + beta).abs() < 1e-6, || {
            format!("beta {beta}")
        })?;
    }
    let quartic = HeatingModel::with_exponents(1e-10, 40e-6, 1e7, 4.0, 1.0).unwrap();
    let ratio = quartic.spectral_density(4e-6, 1e7).unwrap()
        / quartic.spectral_density(40e-6, 1e7).unwrap();
    ensure(rel(ratio, 1e4) < 1e-12, || format!("R^-4 ratio {ratio}"))?;

    // user-supplied anchors: 40 um traps heating at 1e4 quanta/s or faster
    let mut slowest = f64::INFINITY;
    for (rate, f0) in [(1e4, 2.8e6), (3e4, 1e6), (1e5, 5e6)] {
        let w = TAU * f0;
        let m =
            HeatingModel::from_heating_rate(rate, &mg(), 40e-6, w).map_err(|e| e.to_string())?;
        let small = heating_rate(m.spectral_density(10e-6, w).unwrap(), &mg(), w)
            .map_err(|e| e.to_string())?;
        ensure(small > 1e6, || {
            format!("anchor {rate}: {small:e} quanta/s at 10 um")
        })?;
        slowest = slowest.min(small);
    }
    Ok(format!(
        "slopes recovered, slowest 10 um rate {slowest:.3e} /s"
    ))
}

fn waveform_round_trip() -> Outcome {
    const D: f64 = 100e-6;
    const PITCH: f64 = 150e-6;
    let omega = TAU * 1e6;
    let y0 = 3f64.sqrt() / 2.0 * D;
    let g = PlanarGeometry::segmented_five_wire(D, PITCH, 13, 300e-6).unwrap();
    let grid: Vec<f64> = (0..=600)
        .map(|k| -1.2e-3 + 2.4e-3 * k as f64 / 600.0)
        .collect();
    let basis = AxialBasis::with_channels(&g, mirror_channels(&g, 0.0), grid, 0.0, y0)
        .map_err(|e| e.to_string())?;
    let species = mg();

    // independent axial potential: electrode-by-electrode sum
    let direct = |v: &[f64], z: f64| -> f64 {
        let mut bias = g.biases();
        for (ch, &a) in basis.channels.iter().zip(v) {
            for &i in &ch.electrodes {
                bias[i] = a;
            }
        }
        g.electrodes()
            .iter()
            .zip(&bias)
            .map(|(e, &s)| s * e.unit_potential(&Vec3::new(0.0, y0, z)).unwrap())
            .sum()
    };
    let minimum = |v: &[f64], guess: f64, half: f64| {
        let n = 400;
        let zs: Vec<f64> = (0..=n)
            .map(|k| guess - half + 2.0 * half * k as f64 / n as f64)
            .collect();
        let k = (0..=n)
            .min_by(|&a, &b| direct(v, zs[a]).total_cmp(&direct(v, zs[b])))
            .unwrap();
        let step = 2.0 * half / n as f64;
        golden_min(|z| direct(v, z), zs[k] - step, zs[k] + step, 1e-13)
    };
    let h = 1e-3 * PITCH;
    let curvature =
        |v: &[f64], z: f64| (direct(v, z + h) - 2.0 * direct(v, z) + direct(v, z - h)) / (h * h);

    let mut worst = (0.0f64, 0.0f64);
    for z0 in [-600e-6, -450e-6, -75e-6, 0.0, 200e-6, 375e-6, 600e-6] {
        let sol = solve_well(
            &basis,
            &WellSpec::new(z0, omega, species).unwrap(),
            &SolveOptions::default(),
        )
        .map_err(|e| format!("z0 = {z0:e}: {e}"))?;
        let z = minimum(&sol.voltages, z0, 2.0 * PITCH);
        let w = (species.charge() * curvature(&sol.voltages, z) / species.mass()).sqrt();
        ensure((z - z0).abs() < 1e-3 * PITCH, || {
            format!("z0 = {z0:e}: minimum at {z:e}")
        })?;
        ensure(rel(w, omega) < 0.01, || format!("z0 = {z0:e}: omega {w}"))?;
        worst = (
            worst.0.max((z - z0).abs() / PITCH),
            worst.1.max(rel(w, omega)),
        );
    }

    let c0 = species.mass() * omega * omega / species.charge();
    let k4 = 0.3 * c0 / (PITCH * PITCH);
    let ramp = separation_ramp(
        &basis,
        &species,
        0.0,
        omega,
        k4,
        5,
        10e-6,
        &SolveOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let flat = ramp
        .voltages
        .iter()
        .zip(&ramp.diagnostics)
        .find(|(v, d)| curvature(v, 0.0).abs() < 1e-3 * c0 && d.quartic > 0.0);
    let (v, _) = flat.ok_or("no zero-curvature stage with positive quartic")?;
    // fourth difference on a stencil wide enough to beat rounding
    let h4 = 0.05 * PITCH;
    let quartic = (direct(v, 2.0 * h4) - 4.0 * direct(v, h4) + 6.0 * direct(v, 0.0)
        - 4.0 * direct(v, -h4)
        + direct(v, -2.0 * h4))
        / h4.powi(4);
    ensure(quartic > 0.0, || format!("independent quartic {quartic}"))?;
    let last = ramp.diagnostics.last().unwrap();
    ensure(last.minima.len() == 2, || {
        format!("final minima {:?}", last.minima)
    })?;
    Ok(format!(
        "centre error {:.1e} pitch, frequency error {:.1e}, split into {:?} um",
        worst.0,
        worst.1,
        last.minima
            .iter()
            .map(|z| (z * 1e7).round() / 10.0)
            .collect::<Vec<_>>()
    ))
}

fn recooling() -> Outcome {
    let omega_z = TAU * 2e6;
    let laser = |det: f64, s0: f64| {
        LaserParams::from_wavelength(280e-9, 41.4e6, det * 41.4e6, s0, 0.5f64.sqrt()).unwrap()
    };

    let l = laser(-0.25, 1.0);
    let e_eq = doppler_energy(&l).map_err(|e| e.to_string())?;
    let mut prev = f64::INFINITY;
    for k in 0..12 {
        let e0 = e_eq * 10f64.powf(0.4 * k as f64);
        let r = simulate_recooling(e0, omega_z, &mg(), &l, 2e-6, 1)
            .map_err(|e| e.to_string())?
            .curve
            .rates[0];
        ensure(r < prev, || {
            format!("initial rate not falling at E0 = {e0:e} J")
        })?;
        prev = r;
    }

    let l = laser(-0.5, 0.3);
    let td = doppler_temperature(&l).map_err(|e| e.to_string())?;
    let setup = FitSetup::new(mg(), omega_z, l);
    let mut worst: f64 = 0.0;
    for mult in [30.0, 300.0, 3000.0] {
        let t = mult * td;
        let c = ensemble_curve(t, omega_z, &mg(), &l, 2e-3, 100).map_err(|e| e.to_string())?;
        let fit = fit_temperature(&c, &setup).map_err(|e| e.to_string())?;
        let e = rel(fit.temperature, t);
        ensure(e < 0.1, || format!("{t} K fitted as {} K", fit.temperature))?;
        worst = worst.max(e);
    }
    Ok(format!(
        "monotone over 4.4 decades of E0, worst fit error {worst:.1e}"
    ))
}

fn patch_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x0 = rng.random_range(-1.0..1.0);
        let z0 = rng.random_range(-1.0..1.0);
        let (wx, wz) = (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let p = [
            rng.random_range(-2.0..2.0),
            rng.random_range(0.3..3.0),
            rng.random_range(-2.0..2.0),
        ];
        let patch = RectPatch::new((x0, x0 + wx), (z0, z0 + wz)).unwrap();
        let closed = patch
            .unit_potential(&Vec3::new(p[0], p[1], p[2]))
            .map_err(|e| e.to_string())?;
        let quad = rect_potential_quadrature(x0, x0 + wx, z0, z0 + wz, p);
        let e = rel(closed, quad);
        ensure(e < 1e-6, || {
            format!("patch ({x0}, {z0}) {wx}x{wz} at {p:?}: {closed} vs {quad}")
        })?;
        worst = worst.max(e);
    }
    let strip = Strip::new(-20e-6, 35e-6).unwrap();
    let rect = RectPatch::new((-20e-6, 35e-6), (-1e6, 1e6)).unwrap();
    for &(x, y) in &[
        (0.0, 1e-5),
        (3e-5, 4e-5),
        (-1e-4, 1e-3),
        (1e-6, 1e-6),
        (5e-4, 2e-4),
    ] {
        let a = strip.unit_potential(x, y).map_err(|e| e.to_string())?;
        let b = rect
            .unit_potential(&Vec3::new(x, y, 1e-5))
            .map_err(|e| e.to_string())?;
        ensure(rel(b, a) < 1e-6, || {
            format!("strip limit at ({x}, {y}): {a} vs {b}")
        })?;
    }
    Ok(format!("100 pairs, worst {worst:.1e}"))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn criteria() -> &'static [Criterion] {
    static LIST: OnceLock<Vec<Criterion>> = OnceLock::new();
    let c = |name, secs, run| Criterion {
        name,
        budget: Duration::from_secs(secs),
        run,
    };
    LIST.get_or_init(|| {
        vec![
            c("quadrupole frequency", 1, quadrupole_frequency),
            c("four-wire worked example", 5, four_wire_worked_example),
            c("null and saddle heights", 5, null_and_saddle_heights),
            c("closed-form cross-check", 30, closed_form_cross_check),
            c("dynamics validation", 120, dynamics_validation),
            c("excess micromotion numbers", 1, excess_micromotion_numbers),
            c("sideband landmarks", 1, sideband_landmarks),
            c("ion chain", 5, ion_chain),
            c("stray-field branches", 1, stray_field_branches),
            c("heating scaling", 1, heating_scaling),
            c("waveform round trip", 60, waveform_round_trip),
            c("recooling", 120, recooling),
            c("rectangle-patch oracle", 60, patch_oracle),
        ]
    })
}

fn main() -> ExitCode {
    let mut failed = 0;
    for (i, c) in criteria().iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > c.budget => Err(format!("took {took:.2?}, budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {} ({took:.2?}): {detail}", i + 1, c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {} ({took:.2?}): {detail}", i + 1, c.name);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria().len() - failed,
        criteria().len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
