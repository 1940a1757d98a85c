use std::f64::consts::{PI, SQRT_2, TAU};
use std::path::PathBuf;

use clap::Args;
use iontrap::diagnostics::{heating_rate, stray_field_unchecked, DielectricGap, HeatingModel};
use iontrap::pseudo::{
    cooling_geometry_check, secular_modes, trap_depth, DEFAULT_OVERLAP_THRESHOLD,
};
use iontrap::Vec3;
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{emit, render, sig, sig3, Format};
use crate::setup::{load_geometry, model, null_guess, triple, DriveArgs};

/// Stability parameter above which the pseudopotential picture is flagged.
const Q_LIMIT: f64 = 0.4;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Electrode layout (TOML).
    pub geometry: PathBuf,
    #[command(flatten)]
    pub drive: DriveArgs,
    /// Cooling beam direction x,y,z (normalised internally).
    #[arg(long, value_parser = triple)]
    pub beam: Option<[f64; 3]>,
    /// Exposed dielectric: gap width (um), thickness (um), electrode voltage (V).
    #[arg(long, value_parser = triple)]
    pub gap: Option<[f64; 3]>,
    /// Heating calibration: rate (quanta/s), height (um), secular frequency (MHz).
    #[arg(long, value_parser = triple)]
    pub heating_anchor: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Report {
    geometry: GeometrySummary,
    drive: DriveSummary,
    null: NullSummary,
    modes: Vec<ModeSummary>,
    depth: DepthSummary,
    cooling: CoolingSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    stray_field: Option<StraySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heating: Option<HeatingSummary>,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct GeometrySummary {
    file: String,
    electrodes: usize,
    rf_electrodes: usize,
    control_electrodes: usize,
}

#[derive(Debug, Serialize)]
struct DriveSummary {
    species: String,
    rf_amplitude_v: f64,
    rf_frequency_mhz: f64,
}

#[derive(Debug, Serialize)]
struct NullSummary {
    position_um: [f64; 3],
    rf_field_v_per_m: f64,
}

#[derive(Debug, Serialize)]
struct ModeSummary {
    frequency_mhz: f64,
    axis: [f64; 3],
    confined: bool,
    angle_from_normal_deg: Option<f64>,
    stability_q: f64,
}

#[derive(Debug, Serialize)]
struct DepthSummary {
    depth_mev: f64,
    saddle_um: [f64; 3],
    method: String,
}

#[derive(Debug, Serialize)]
struct CoolingSummary {
    beam: [f64; 3],
    overlaps: Vec<f64>,
    flagged_modes: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct StraySummary {
    field_v_per_m: f64,
    suppression: f64,
}

#[derive(Debug, Serialize)]
struct HeatingSummary {
    spectral_density_v2_per_m2_hz: f64,
    rate_quanta_per_s: f64,
    at_frequency_mhz: f64,
}

fn um(v: &Vec3) -> [f64; 3] {
    sig3([v.x * 1e6, v.y * 1e6, v.z * 1e6])
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let file = load_geometry(&args.geometry)?;
    let model = model(&args.drive, &file)?;
    let species = model.species();
    let drive = model.drive();
    let geometry = model.geometry();
    let mut warnings = Vec::new();

    let null = model.find_rf_null(&null_guess(&file))?;
    let modes = secular_modes(&model, &null, None)?;
    let depth = trap_depth(&model, &null)?;

    let omega_rf = drive.omega_rf();
    let mode_rows: Vec<ModeSummary> = modes
        .modes
        .iter()
        .map(|m| ModeSummary {
            frequency_mhz: sig(m.omega / TAU / 1e6),
            axis: sig3([m.axis.x, m.axis.y, m.axis.z]),
            confined: m.confined,
            angle_from_normal_deg: m.axis_angle.map(|a| sig(a * 180.0 / PI)),
            stability_q: sig(2.0 * SQRT_2 * m.omega / omega_rf),
        })
        .collect();
    for (i, m) in mode_rows.iter().enumerate() {
        if m.stability_q > Q_LIMIT {
            warnings.push(format!(
                "mode {i}: stability parameter q = {} exceeds {Q_LIMIT}; the pseudopotential approximation is marginal",
                m.stability_q
            ));
        }
        if !m.confined {
            warnings.push(format!("mode {i} is not confined by the rf (axis {:?}); axial confinement must come from static potentials", m.axis));
        }
    }

    let beam_raw = args.beam.or(file.trap.beam).unwrap_or([1.0, 0.0, 1.0]);
    let beam = Vec3::from(beam_raw);
    if !(beam.norm() > 0.0) {
        return Err(crate::error::CliError::Usage(
            "beam direction must be non-zero".into(),
        ));
    }
    let beam = beam.normalize();
    let overlaps = cooling_geometry_check(&modes, &beam, DEFAULT_OVERLAP_THRESHOLD)?;
    for &(i, j) in &modes.degenerate {
        warnings.push(format!(
            "modes {i} and {j} are degenerate at {} MHz: their axes are undefined, so one beam cannot be relied on to cool both (degenerate principal axes)",
            mode_rows[i].frequency_mhz
        ));
    }
    for o in overlaps
        .iter()
        .filter(|o| o.confined && o.weak && !o.degenerate)
    {
        warnings.push(format!(
            "mode {} ({} MHz) overlaps the cooling beam by only {:.3} and will not be Doppler cooled",
            o.mode,
            mode_rows[o.mode].frequency_mhz,
            o.overlap
        ));
    }

    let height = null.y;
    let stray_field = match args.gap {
        Some([a, t, v]) => {
            let s = stray_field_unchecked(&DielectricGap::new(a * 1e-6, t * 1e-6, v, height)?)?;
            warnings.extend(s.warnings.iter().map(|w| format!("stray field: {w}")));
            Some(StraySummary {
                field_v_per_m: sig(s.field),
                suppression: sig(s.suppression),
            })
        }
        None => None,
    };
    let heating = match args.heating_anchor {
        Some([rate, r0, f0]) => {
            let hm = HeatingModel::from_heating_rate(rate, &species, r0 * 1e-6, TAU * f0 * 1e6)?;
            let omega = modes
                .modes
                .iter()
                .filter(|m| m.confined)
                .map(|m| m.omega)
                .fold(f64::INFINITY, f64::min);
            let s_e = hm.spectral_density(height, omega)?;
            Some(HeatingSummary {
                spectral_density_v2_per_m2_hz: sig(s_e),
                rate_quanta_per_s: sig(heating_rate(s_e, &species, omega)?),
                at_frequency_mhz: sig(omega / TAU / 1e6),
            })
        }
        None => None,
    };

    let report = Report {
        geometry: GeometrySummary {
            file: args.geometry.display().to_string(),
            electrodes: geometry.electrodes().len(),
            rf_electrodes: geometry.rf_indices().len(),
            control_electrodes: geometry.electrodes().len() - geometry.rf_indices().len(),
        },
        drive: DriveSummary {
            species: args
                .drive
                .species
                .clone()
                .or(file.trap.species.clone())
                .unwrap_or_default(),
            rf_amplitude_v: sig(drive.amplitude()),
            rf_frequency_mhz: sig(omega_rf / TAU / 1e6),
        },
        null: NullSummary {
            position_um: um(&null),
            rf_field_v_per_m: sig(model.rf_field_magnitude(&null)?),
        },
        modes: mode_rows,
        depth: DepthSummary {
            depth_mev: sig(depth.depth_ev * 1e3),
            saddle_um: um(&depth.saddle),
            method: format!("{:?}", depth.method),
        },
        cooling: CoolingSummary {
            beam: sig3([beam.x, beam.y, beam.z]),
            overlaps: overlaps.iter().map(|o| sig(o.overlap)).collect(),
            flagged_modes: overlaps
                .iter()
                .filter(|o| o.flagged())
                .map(|o| o.mode)
                .collect(),
        },
        stray_field,
        heating,
        warnings,
    };
    let value = serde_json::to_value(&report).expect("report serialises");
    emit(
        args.output.as_deref(),
        &render("Trap analysis", &value, args.format),
    )
}
