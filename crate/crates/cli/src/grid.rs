use std::path::PathBuf;

use clap::Args;
use iontrap::pseudo::{sample_grid, trap_depth, write_grid_csv, GridRegion};
use iontrap::Vec3;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig, Format};
use crate::setup::{load_geometry, model, null_guess, pair, DriveArgs};

#[derive(Debug, Args)]
pub struct GridArgs {
    pub geometry: PathBuf,
    #[command(flatten)]
    pub drive: DriveArgs,
    /// x range lo,hi (um).
    #[arg(long, value_parser = pair, allow_hyphen_values = true)]
    pub x: [f64; 2],
    /// y range lo,hi (um), above the electrode plane.
    #[arg(long, value_parser = pair, allow_hyphen_values = true)]
    pub y: [f64; 2],
    /// Axial position of the sampling plane (um).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub z: f64,
    #[arg(long, default_value_t = 41)]
    pub nx: usize,
    #[arg(long, default_value_t = 41)]
    pub ny: usize,
    /// csv (default) writes the grid; json adds the annotations; text prints a summary.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(args: &GridArgs) -> CliResult<()> {
    if args.nx == 0 || args.ny == 0 {
        return Err(CliError::Usage(
            "grid resolution must be at least 1 in each direction".into(),
        ));
    }
    if !(args.y[0] > 0.0 && args.y[1] > 0.0) {
        return Err(CliError::Usage(format!(
            "y range {:?} um must lie above the electrode plane (y > 0)",
            args.y
        )));
    }
    let file = load_geometry(&args.geometry)?;
    let model = model(&args.drive, &file)?;
    let region = GridRegion {
        x: (args.x[0] * 1e-6, args.x[1] * 1e-6),
        y: (args.y[0] * 1e-6, args.y[1] * 1e-6),
        z: args.z * 1e-6,
        nx: args.nx,
        ny: args.ny,
    };
    let samples = sample_grid(&model, &region)?;

    // landmarks are annotations only; a grid is still useful without them
    let mut notes: Vec<(&str, Vec3)> = Vec::new();
    match model.find_rf_null(&null_guess(&file)) {
        Ok(null) => {
            notes.push(("null", null));
            match trap_depth(&model, &null) {
                Ok(d) => notes.push(("saddle", d.saddle)),
                Err(e) => eprintln!("warning: saddle not annotated: {e}"),
            }
        }
        Err(e) => eprintln!("warning: null not annotated: {e}"),
    }

    let content = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_grid_csv(&mut buf, &samples, &notes).expect("writing to memory");
            String::from_utf8(buf).expect("ascii output")
        }
        other => {
            let (lo, hi) = samples
                .iter()
                .map(|s| s.value_ev)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(v), b.max(v))
                });
            let annotations: serde_json::Map<String, serde_json::Value> = notes
                .iter()
                .map(|(k, p)| (k.to_string(), json!([p.x, p.y, p.z])))
                .collect();
            let mut v = json!({
                "points": samples.len(),
                "min_ev": sig(lo),
                "max_ev": sig(hi),
                "annotations_m": annotations,
            });
            if other == Format::Json {
                v["samples"] = samples
                    .iter()
                    .map(|s| json!([s.point.x, s.point.y, s.point.z, s.value_ev]))
                    .collect();
            }
            render("Pseudopotential grid", &v, other)
        }
    };
    emit(args.output.as_deref(), &content)
}
