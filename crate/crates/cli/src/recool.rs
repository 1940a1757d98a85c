use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use iontrap::recool::{
    doppler_temperature, ensemble_curve, fit_temperature, FitSetup, LaserParams, RecoolCurve,
};
use iontrap::{Frequency, IonSpecies};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig, Format};

#[derive(Debug, Clone, Args)]
pub struct LaserArgs {
    #[arg(long)]
    pub species: String,
    /// Secular frequency of the heated mode (MHz).
    #[arg(long)]
    pub omega_mhz: f64,
    /// Cooling wavelength (nm).
    #[arg(long)]
    pub wavelength_nm: f64,
    /// Natural linewidth Γ/2π (MHz).
    #[arg(long)]
    pub linewidth_mhz: f64,
    /// Detuning δ/2π (MHz); must be negative.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_mhz: f64,
    /// Saturation parameter s₀.
    #[arg(long, default_value_t = 1.0)]
    pub saturation: f64,
    /// Projection of the beam on the mode.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub cos_theta: f64,
}

impl LaserArgs {
    fn setup(&self) -> CliResult<FitSetup> {
        let species = IonSpecies::from_label(&self.species)?;
        let laser = LaserParams::from_wavelength(
            self.wavelength_nm * 1e-9,
            self.linewidth_mhz * 1e6,
            self.detuning_mhz * 1e6,
            self.saturation,
            self.cos_theta,
        )?;
        Ok(FitSetup::new(
            species,
            Frequency::from_mhz(self.omega_mhz)?.angular(),
            laser,
        ))
    }
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub laser: LaserArgs,
    /// Initial temperature of the thermal ensemble (K).
    #[arg(long)]
    pub temperature: f64,
    /// Record length (us).
    #[arg(long)]
    pub duration: f64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// csv (default) writes t_seconds,counts,bin_width; json the curve; text a summary.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Fluorescence record with header t_seconds,counts,bin_width.
    pub curve: PathBuf,
    #[command(flatten)]
    pub laser: LaserArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn simulate(args: &SimArgs) -> CliResult<()> {
    let s = args.laser.setup()?;
    let curve = ensemble_curve(
        args.temperature,
        s.omega_z,
        &s.species,
        &s.laser,
        args.duration * 1e-6,
        args.bins,
    )?;
    let content = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("ascii output")
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&curve).expect("curve serialises");
            s.push('\n');
            s
        }
        Format::Text => {
            let n = curve.normalized();
            let v = json!({
                "bins": curve.len(),
                "bin_width_us": sig(curve.bin_width * 1e6),
                "doppler_temperature_mk": sig(doppler_temperature(&s.laser)? * 1e3),
                "first_bin_normalized": sig(n[0]),
                "steady_rate_per_s": sig(curve.rates[curve.len() - 1]),
            });
            render("Recooling simulation", &v, Format::Text)
        }
    };
    emit(args.output.as_deref(), &content)
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let s = args.laser.setup()?;
    let f = File::open(&args.curve).map_err(|source| CliError::Io {
        path: args.curve.clone(),
        source,
    })?;
    let curve = RecoolCurve::read_csv(BufReader::new(f)).map_err(|source| CliError::File {
        path: args.curve.clone(),
        source,
    })?;
    let r = fit_temperature(&curve, &s)?;
    let v = json!({
        "temperature_mk": sig(r.temperature * 1e3),
        "interval_mk": [sig(r.interval.0 * 1e3), sig(r.interval.1 * 1e3)],
        "doppler_temperature_mk": sig(r.doppler_temperature * 1e3),
        "chi_squared": sig(r.chi_squared),
        "low_sensitivity": r.low_sensitivity,
        "warnings": r.warnings,
    });
    emit(
        args.output.as_deref(),
        &render("Recooling fit", &v, args.format),
    )
}
