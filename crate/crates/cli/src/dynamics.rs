use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use iontrap::dynamics::{
    integrate, spectral_decompose, DriveConfig, DrivenGeometry, IntegratorConfig, QuadrupoleField,
    RfField, State, Trajectory, UniformRfField,
};
use iontrap::pseudo::{quadrupole_radial_frequency, secular_modes, QuadrupoleTrapModel};
use iontrap::{Frequency, IonSpecies, Vec3};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig, Format};
use crate::setup::{self, load_geometry, null_guess, triple, DriveArgs};

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[command(subcommand)]
    pub scenario: Scenario,
    /// Length of the run in rf periods.
    #[arg(long, default_value_t = 400.0, global = true)]
    pub cycles: f64,
    /// Also write the sampled trajectory (t,x,y,z,vx,vy,vz) here.
    #[arg(long, global = true)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Scenario {
    /// Spatially uniform rf field E₀ cos Ωt; compares the driven amplitude with qE₀/(mΩ²).
    Uniform {
        /// Field amplitude (V/m) along x.
        #[arg(long)]
        field: f64,
        #[arg(long)]
        rf_mhz: f64,
        #[arg(long)]
        species: String,
    },
    /// Ideal linear quadrupole; compares the secular line with the pseudopotential frequency.
    Quadrupole {
        /// Electrode distance R (um).
        #[arg(long)]
        radius: f64,
        /// rf amplitude V₀ (V).
        #[arg(long)]
        voltage: f64,
        #[arg(long)]
        rf_mhz: f64,
        #[arg(long)]
        species: String,
        /// Initial displacement x,y,z (um).
        #[arg(long, value_parser = triple, default_value = "0.3,-0.2,0", allow_hyphen_values = true)]
        offset: [f64; 3],
    },
    /// Surface trap from a layout file, started displaced from the rf null.
    Trap {
        geometry: PathBuf,
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long, value_parser = triple, default_value = "0.3,0.2,0", allow_hyphen_values = true)]
        offset: [f64; 3],
    },
}

fn run_traj<F: RfField>(
    field: &F,
    species: &IonSpecies,
    start: Vec3,
    cycles: f64,
) -> CliResult<Trajectory> {
    if !(cycles >= 10.0) {
        return Err(CliError::Usage(format!(
            "need at least 10 rf periods, got {cycles}"
        )));
    }
    let config = IntegratorConfig {
        max_excursion: 1e-2,
        ..IntegratorConfig::default()
    };
    let duration = cycles * TAU / field.omega_rf();
    Ok(integrate(
        field,
        species,
        State::at_rest(start),
        duration,
        &config,
    )?)
}

fn lines(traj: &Trajectory) -> CliResult<(Value, Vec<f64>, f64)> {
    let s = spectral_decompose(traj)?;
    let f: Vec<f64> = s
        .secular_frequencies()
        .iter()
        .map(|w| sig(w / TAU / 1e6))
        .collect();
    Ok((json!(f), f, s.micromotion_amplitude()))
}

pub fn run(args: &DynamicsArgs) -> CliResult<()> {
    let (summary, traj) = match &args.scenario {
        Scenario::Uniform {
            field,
            rf_mhz,
            species,
        } => {
            let sp = IonSpecies::from_label(species)?;
            let omega = Frequency::from_mhz(*rf_mhz)?.angular();
            let f = UniformRfField::new(Vec3::new(*field, 0.0, 0.0), omega)?;
            let traj = run_traj(&f, &sp, Vec3::zeros(), args.cycles)?;
            let predicted = sp.charge().abs() * field.abs() / (sp.mass() * omega * omega);
            let (_, _, measured) = lines(&traj)?;
            let v = json!({
                "scenario": "uniform",
                "predicted_amplitude_nm": sig(predicted * 1e9),
                "measured_amplitude_nm": sig(measured * 1e9),
                "relative_error": sig(measured / predicted - 1.0),
            });
            (v, traj)
        }
        Scenario::Quadrupole {
            radius,
            voltage,
            rf_mhz,
            species,
            offset,
        } => {
            let sp = IonSpecies::from_label(species)?;
            let omega = Frequency::from_mhz(*rf_mhz)?.angular();
            let m = QuadrupoleTrapModel::new(radius * 1e-6, *voltage, omega, sp)?;
            let q = m.stability_parameter();
            let wr = quadrupole_radial_frequency(&m);
            let f = QuadrupoleField::from(m);
            let traj = run_traj(&f, &sp, Vec3::from(*offset) * 1e-6, args.cycles)?;
            let (json_lines, found, mm) = lines(&traj)?;
            let mut v = json!({
                "scenario": "quadrupole",
                "stability_q": sig(q),
                "pseudopotential_mhz": sig(wr / TAU / 1e6),
                "secular_lines_mhz": json_lines,
                "micromotion_amplitude_nm": sig(mm * 1e9),
            });
            if let Some(first) = found.first() {
                v["relative_error"] = json!(sig(first / (wr / TAU / 1e6) - 1.0));
            }
            (v, traj)
        }
        Scenario::Trap {
            geometry,
            drive,
            offset,
        } => {
            let file = load_geometry(geometry)?;
            let model = setup::model(drive, &file)?;
            let null = model.find_rf_null(&null_guess(&file))?;
            let modes = secular_modes(&model, &null, None)?;
            let rf_drive = setup::drive(drive, &file)?;
            let driven = DrivenGeometry::new(
                file.geometry.clone(),
                DriveConfig::uniform(&file.geometry, &rf_drive),
            )?;
            let traj = run_traj(
                &driven,
                &model.species(),
                null + Vec3::from(*offset) * 1e-6,
                args.cycles,
            )?;
            let (json_lines, _, mm) = lines(&traj)?;
            let predicted: Vec<f64> = modes
                .modes
                .iter()
                .filter(|m| m.confined)
                .map(|m| sig(m.omega / TAU / 1e6))
                .collect();
            let v = json!({
                "scenario": "trap",
                "null_um": [sig(null.x * 1e6), sig(null.y * 1e6), sig(null.z * 1e6)],
                "pseudopotential_modes_mhz": predicted,
                "secular_lines_mhz": json_lines,
                "micromotion_amplitude_nm": sig(mm * 1e9),
            });
            (v, traj)
        }
    };
    if let Some(path) = &args.trajectory {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).expect("writing to memory");
        emit(Some(path), &String::from_utf8(buf).expect("ascii output"))?;
    }
    emit(
        args.output.as_deref(),
        &render("Trajectory", &summary, args.format),
    )
}
