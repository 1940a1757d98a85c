use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use iontrap::surface::GeometryFile;
use iontrap::waveform::{
    control_channels, mirror_channels, separation_ramp, transport_sequence, AxialBasis,
    SolveOptions, VoltageSequence, DEFAULT_RAIL, DEFAULT_TOLERANCE,
};
use iontrap::{Error, Frequency, IonSpecies};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig, Format};
use crate::setup::{load_geometry, species};

#[derive(Debug, Args)]
pub struct WaveformArgs {
    #[command(subcommand)]
    pub kind: Kind,
}

#[derive(Debug, Args)]
pub struct Common {
    pub geometry: PathBuf,
    #[arg(long)]
    pub species: Option<String>,
    /// Secular frequency of the well (MHz).
    #[arg(long)]
    pub omega_mhz: f64,
    /// Sequence duration (us).
    #[arg(long)]
    pub duration: f64,
    /// Height of the axial line (um); defaults to the file's axial_height.
    #[arg(long)]
    pub height: Option<f64>,
    /// Lateral position of the axial line (um).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,
    /// Drive each control pad and its mirror image across the axial line as one channel.
    #[arg(long)]
    pub tie_mirrors: bool,
    /// Voltage limit (V).
    #[arg(long, default_value_t = DEFAULT_RAIL)]
    pub rail: f64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Axial sample spacing (um); defaults to 1/40 of the pad pitch.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// csv (default) writes the voltage table; json the full sequence; text a summary.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Kind {
    /// Carry a well between two axial positions at fixed frequency.
    Transport {
        #[command(flatten)]
        common: Common,
        /// Start position (um).
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        /// End position (um).
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Split one well into two through a pure quartic stage.
    Separate {
        #[command(flatten)]
        common: Common,
        /// Centre of the well (um).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        at: f64,
        /// Quartic coefficient κ₄ in units of c₀/p², where c₀ gives the starting frequency and p is the pad pitch.
        #[arg(long, default_value_t = 0.3)]
        quartic: f64,
        /// Number of stages (odd, at least 3).
        #[arg(long, default_value_t = 5)]
        stages: usize,
    },
}

fn basis(c: &Common, file: &GeometryFile) -> CliResult<AxialBasis> {
    let g = &file.geometry;
    let height = c
        .height
        .map(|h| h * 1e-6)
        .or(file.trap.axial_height)
        .ok_or_else(|| {
            CliError::Usage("no axial height given (use --height or [trap] axial_height)".into())
        })?;
    let x0 = c.x0 * 1e-6;
    let channels = if c.tie_mirrors {
        mirror_channels(g, x0)
    } else {
        control_channels(g)
    };
    let (mut lo, mut hi, mut lengths) = (f64::INFINITY, f64::NEG_INFINITY, Vec::new());
    for ch in &channels {
        for &i in &ch.electrodes {
            let (a, b) = g.electrodes()[i].shape.z_range();
            lo = lo.min(a);
            hi = hi.max(b);
            lengths.push(b - a);
        }
    }
    if lengths.is_empty() {
        return Err(CliError::Usage(
            "layout has no rectangular control electrodes".into(),
        ));
    }
    lengths.sort_by(f64::total_cmp);
    let step = c
        .grid_step
        .map(|s| s * 1e-6)
        .unwrap_or(lengths[lengths.len() / 2] / 40.0);
    if !(step > 0.0) {
        return Err(CliError::Usage("grid step must be positive".into()));
    }
    let n = ((hi - lo) / step).ceil() as usize + 1;
    let z = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let b = AxialBasis::with_channels(g, channels, z, x0, height)?;
    if !b.null_verified {
        eprintln!("warning: the axial line does not sit on the rf null; micromotion will accompany transport");
    }
    Ok(b)
}

fn options(c: &Common) -> SolveOptions {
    SolveOptions {
        rail: c.rail,
        tolerance: c.tolerance,
        ..SolveOptions::default()
    }
}

fn hint(e: Error, tied: bool) -> CliError {
    match e {
        Error::DegenerateBasis(ref labels) if !tied => CliError::Usage(format!(
            "{e}; pads {labels:?} duplicate others along this line, try --tie-mirrors"
        )),
        other => other.into(),
    }
}

pub fn run(args: &WaveformArgs) -> CliResult<()> {
    let (common, seq, title) = match &args.kind {
        Kind::Transport {
            common,
            from,
            to,
            steps,
        } => {
            let file = load_geometry(&common.geometry)?;
            let sp = species(common.species.as_deref(), Some(&file))?;
            let b = basis(common, &file)?;
            let seq = transport_sequence(
                &b,
                &sp,
                from * 1e-6,
                to * 1e-6,
                *steps,
                omega(common)?,
                common.duration * 1e-6,
                &options(common),
            )
            .map_err(|e| hint(e, common.tie_mirrors))?;
            (common, seq, "Transport waveform")
        }
        Kind::Separate {
            common,
            at,
            quartic,
            stages,
        } => {
            let file = load_geometry(&common.geometry)?;
            let sp = species(common.species.as_deref(), Some(&file))?;
            let b = basis(common, &file)?;
            let w = omega(common)?;
            let c0 = curvature(&sp, w);
            let kappa4 = quartic * c0 / (b.pitch * b.pitch);
            let seq = separation_ramp(
                &b,
                &sp,
                at * 1e-6,
                w,
                kappa4,
                *stages,
                common.duration * 1e-6,
                &options(common),
            )
            .map_err(|e| hint(e, common.tie_mirrors))?;
            (common, seq, "Separation waveform")
        }
    };
    let content = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            seq.write_csv(&mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("utf-8 output")
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&seq).expect("sequence serialises");
            s.push('\n');
            s
        }
        Format::Text => render(title, &summary(&seq), Format::Text),
    };
    emit(common.output.as_deref(), &content)
}

fn omega(c: &Common) -> CliResult<f64> {
    Ok(Frequency::from_mhz(c.omega_mhz)?.angular())
}

fn curvature(sp: &IonSpecies, w: f64) -> f64 {
    sp.mass() * w * w / sp.charge()
}

fn summary(seq: &VoltageSequence) -> serde_json::Value {
    let peak = seq
        .voltages
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = seq.residuals.iter().copied().fold(0.0f64, f64::max);
    let mut v = json!({
        "steps": seq.len(),
        "channels": seq.labels,
        "peak_voltage_v": sig(peak),
        "worst_residual": sig(worst),
        "centres_um": seq.diagnostics.iter().map(|d| d.center.map(|z| sig(z * 1e6))).collect::<Vec<_>>(),
        "frequencies_mhz": seq.diagnostics.iter().map(|d| sig(d.omega_z / TAU / 1e6)).collect::<Vec<_>>(),
    });
    if let Some(dev) = seq.max_omega_deviation {
        v["max_frequency_deviation"] = json!(sig(dev));
    }
    if let Some(a) = seq.adiabaticity {
        v["secular_phase_per_step_rad"] = json!(sig(a.step_radians));
        v["secular_phase_total_rad"] = json!(sig(a.path_radians));
    }
    if let Some(last) = seq.diagnostics.last() {
        v["final_minima_um"] = json!(last.minima.iter().map(|z| sig(z * 1e6)).collect::<Vec<_>>());
        if let Some(b) = last.barrier_ev {
            v["final_barrier_mev"] = json!(sig(b * 1e3));
        }
    }
    v
}
