use std::f64::consts::TAU;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iontrap"))
}

fn example(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn four_wire_example_reproduces_frequency_and_depth() {
    let v = json(&["analyze", &example("four_wire.toml"), "--format", "json"]);
    let confined: Vec<f64> = v["modes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["confined"].as_bool().unwrap())
        .map(|m| m["frequency_mhz"].as_f64().unwrap())
        .collect();
    assert_eq!(confined.len(), 2);
    for f in confined {
        assert!((f / 16.9 - 1.0).abs() < 0.01, "{f} MHz");
    }
    let depth = v["depth"]["depth_mev"].as_f64().unwrap();
    assert!((depth / 203.0 - 1.0).abs() < 0.01, "{depth} meV");
    let y = v["null"]["position_um"][1].as_f64().unwrap();
    assert!((y - 40.0).abs() < 1e-4);
    let text = stdout(&run(&["analyze", &example("four_wire.toml")]));
    assert!(text.contains("frequency_mhz: 16.99"));
    assert!(text.contains("depth_mev: 204.5"));
}

#[test]
fn report_formats_agree_field_for_field() {
    let g = example("four_wire.toml");
    let v = json(&["analyze", &g, "--format", "json"]);
    let csv = stdout(&run(&["analyze", &g, "--format", "csv"]));
    let text = stdout(&run(&["analyze", &g]));
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let (key, value) = line.split_once(',').unwrap();
        let value = value.trim_matches('"');
        let mut node = &v;
        for part in key.split('.') {
            node = match part.parse::<usize>() {
                Ok(i) if node.is_array() => &node[i],
                _ => &node[part],
            };
        }
        let expected = match node {
            Value::String(s) => s.clone(),
            Value::Null => "none".into(),
            other => other.to_string(),
        };
        assert_eq!(value, expected, "{key}");
        assert!(
            text.contains(&expected),
            "text report lacks {key} = {expected}"
        );
        rows += 1;
    }
    assert!(rows > 20);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (scratch("a.csv"), scratch("b.csv"));
    for p in [&a, &b] {
        let o = run(&[
            "grid",
            &example("five_wire.toml"),
            "--x",
            "-30,30",
            "--y",
            "10,80",
            "--nx",
            "7",
            "--ny",
            "9",
            "-o",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // the temporary sibling used for the atomic write is gone
    let leftovers: Vec<_> = fs::read_dir(a.parent().unwrap())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn bad_input_exits_with_code_2() {
    let empty = scratch("empty.toml");
    fs::write(&empty, "format_version = 1\n").unwrap();
    let o = run(&["analyze", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));

    let broken = scratch("broken.toml");
    fs::write(
        &broken,
        "format_version = 1\n\n[[electrode]]\nlabel = \"a\"\nrole = \"sideways\"\nx = [0.0, 1.0]\n",
    )
    .unwrap();
    let o = run(&["analyze", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    assert_eq!(
        run(&["analyze", "/nonexistent/layout.toml"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["analyze"]).status.code(), Some(2));
    let o = run(&[
        "analyze",
        &example("four_wire.toml"),
        "--species",
        "Unobtainium+",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn five_wire_flags_degenerate_axes() {
    let v = json(&["analyze", &example("five_wire.toml"), "--format", "json"]);
    let warnings: Vec<&str> = v["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w.as_str().unwrap())
        .collect();
    assert!(
        warnings
            .iter()
            .any(|w| w.contains("degenerate principal axes")),
        "{warnings:?}"
    );
    assert!(!v["cooling"]["flagged_modes"].as_array().unwrap().is_empty());
}

#[test]
fn every_example_analyzes() {
    for name in ["four_wire.toml", "five_wire.toml", "segmented_5zone.toml"] {
        let o = run(&["analyze", &example(name)]);
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

fn grid_rows(text: &str) -> Vec<[f64; 4]> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|f| f.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3]]
        })
        .collect()
}

#[test]
fn vertical_grid_peaks_at_the_escape_saddle() {
    let o = run(&[
        "grid",
        &example("four_wire.toml"),
        "--x",
        "0,0",
        "--nx",
        "1",
        "--y",
        "45,150",
        "--ny",
        "1051",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows = grid_rows(&text);
    assert_eq!(rows.len(), 1051);
    assert!(rows.iter().all(|r| r[3] >= 0.0));
    let top = rows.iter().max_by(|a, b| a[3].total_cmp(&b[3])).unwrap();
    let s4w = 40e-6 * (2.0 + 5f64.sqrt()).sqrt();
    assert!(
        (top[1] - s4w).abs() <= 0.1e-6 + 1e-12,
        "{} vs {s4w}",
        top[1]
    );
    assert!(text.lines().any(|l| l.starts_with("# null,")));
    let saddle: Vec<f64> = text
        .lines()
        .find(|l| l.starts_with("# saddle,"))
        .unwrap()
        .split(',')
        .skip(1)
        .map(|f| f.parse().unwrap())
        .collect();
    assert!((saddle[1] / s4w - 1.0).abs() < 1e-6);
}

#[test]
fn single_point_grid() {
    let o = run(&[
        "grid",
        &example("four_wire.toml"),
        "--x",
        "3,3",
        "--y",
        "30,30",
        "--nx",
        "1",
        "--ny",
        "1",
    ]);
    assert!(o.status.success());
    let rows = grid_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][0] - 3e-6).abs() < 1e-18 && (rows[0][1] - 30e-6).abs() < 1e-18);
    let o = run(&[
        "grid",
        &example("four_wire.toml"),
        "--x",
        "0,1",
        "--y",
        "-1,5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn uniform_field_dynamics_matches_driven_amplitude() {
    let v = json(&[
        "dynamics",
        "uniform",
        "--field",
        "500",
        "--rf-mhz",
        "50",
        "--species",
        "24Mg+",
        "--format",
        "json",
    ]);
    let q = 1.602_176_634e-19;
    let m = 24.0 * 1.660_539_066_60e-27;
    let w = TAU * 50e6;
    let expected_nm = q * 500.0 / (m * w * w) * 1e9;
    let measured = v["measured_amplitude_nm"].as_f64().unwrap();
    assert!(
        (measured / expected_nm - 1.0).abs() < 0.01,
        "{measured} vs {expected_nm}"
    );
}

#[test]
fn trajectory_export() {
    let path = scratch("traj.csv");
    let o = run(&[
        "dynamics",
        "quadrupole",
        "--radius",
        "50",
        "--voltage",
        "45",
        "--rf-mhz",
        "100",
        "--species",
        "24Mg+",
        "--trajectory",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,x,y,z,vx,vy,vz\n"));
    assert!(stdout(&o).contains("secular_lines_mhz"));
}

#[test]
fn transport_between_equal_endpoints_is_constant() {
    let g = example("segmented_5zone.toml");
    let base = [
        "waveform",
        "transport",
        &g,
        "--omega-mhz",
        "1",
        "--duration",
        "10",
        "--from",
        "30",
        "--to",
        "30",
        "--steps",
        "6",
    ];
    let o = run(&base);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--tie-mirrors"));

    let mut args = base.to_vec();
    args.push("--tie-mirrors");
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[2..], rows[0][2..]);
    }
    args.extend(["--rail", "0.01"]);
    assert_eq!(run(&args).status.code(), Some(1));
}

#[test]
fn separation_reaches_a_double_well() {
    let v = json(&[
        "waveform",
        "separate",
        &example("segmented_5zone.toml"),
        "--omega-mhz",
        "1",
        "--duration",
        "20",
        "--tie-mirrors",
        "--format",
        "json",
    ]);
    let last = v["diagnostics"].as_array().unwrap().last().unwrap();
    let minima = last["minima"].as_array().unwrap();
    assert_eq!(minima.len(), 2);
    let (a, b) = (minima[0].as_f64().unwrap(), minima[1].as_f64().unwrap());
    assert!((a + b).abs() < 1e-3 * 150e-6);
    assert!(last["barrier_ev"].as_f64().unwrap() > 0.0);
}

#[test]
fn recool_fit_recovers_the_injected_temperature() {
    let laser = [
        "--species",
        "24Mg+",
        "--omega-mhz",
        "2",
        "--wavelength-nm",
        "280",
        "--linewidth-mhz",
        "41.4",
        "--detuning-mhz",
        "-20.7",
        "--saturation",
        "0.3",
    ];
    let curve = scratch("curve.csv");
    let mut args = vec![
        "recool-sim",
        "--temperature",
        "0.2",
        "--duration",
        "2000",
        "--bins",
        "100",
        "-o",
        curve.to_str().unwrap(),
    ];
    args.extend(laser);
    assert!(run(&args).status.success());
    let mut args = vec!["recool-fit", curve.to_str().unwrap(), "--format", "json"];
    args.extend(laser);
    let v = json(&args);
    let t = v["temperature_mk"].as_f64().unwrap();
    assert!((t / 200.0 - 1.0).abs() < 0.1, "{t} mK");
    assert_eq!(v["low_sensitivity"], Value::Bool(false));

    let mut args = vec!["recool-fit", curve.to_str().unwrap(), "--detuning-mhz=5"];
    args.extend(&laser[..8]);
    assert_eq!(run(&args).status.code(), Some(1));
}
