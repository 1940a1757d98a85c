use std::path::Path;

use clap::Args;
use iontrap::pseudo::{PseudoModel, RfDrive};
use iontrap::surface::{FileError, GeometryFile};
use iontrap::{Frequency, IonSpecies, Vec3};

use crate::error::{CliError, CliResult};

/// Species and rf drive, each falling back to the geometry file's `[trap]` section.
#[derive(Debug, Clone, Args)]
pub struct DriveArgs {
    /// Ion species label, e.g. 24Mg+.
    #[arg(long)]
    pub species: Option<String>,
    /// rf amplitude (V).
    #[arg(long)]
    pub rf_amplitude: Option<f64>,
    /// rf drive frequency (MHz).
    #[arg(long)]
    pub rf_mhz: Option<f64>,
}

pub fn load_geometry(path: &Path) -> CliResult<GeometryFile> {
    GeometryFile::read(path).map_err(|e| match e {
        FileError::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        FileError::Parse(source) => CliError::File {
            path: path.to_path_buf(),
            source,
        },
    })
}

pub fn species(label: Option<&str>, file: Option<&GeometryFile>) -> CliResult<IonSpecies> {
    let label = label
        .map(str::to_string)
        .or_else(|| file.and_then(|f| f.trap.species.clone()))
        .ok_or_else(|| {
            CliError::Usage("no species given (use --species or a [trap] species entry)".into())
        })?;
    Ok(IonSpecies::from_label(&label)?)
}

pub fn drive(args: &DriveArgs, file: &GeometryFile) -> CliResult<RfDrive> {
    let amplitude = args
        .rf_amplitude
        .or(file.trap.rf_amplitude)
        .ok_or_else(|| {
            CliError::Usage(
                "no rf amplitude given (use --rf-amplitude or [trap] rf_amplitude)".into(),
            )
        })?;
    let mhz = args.rf_mhz.or(file.trap.rf_frequency_mhz).ok_or_else(|| {
        CliError::Usage("no rf frequency given (use --rf-mhz or [trap] rf_frequency_mhz)".into())
    })?;
    Ok(RfDrive::with_frequency(
        amplitude,
        Frequency::from_mhz(mhz)?,
    )?)
}

pub fn model(args: &DriveArgs, file: &GeometryFile) -> CliResult<PseudoModel> {
    let sp = species(args.species.as_deref(), Some(file))?;
    Ok(PseudoModel::new(
        file.geometry.clone(),
        drive(args, file)?,
        sp,
    )?)
}

/// Start of the rf-null search: the file's guess, or above the middle of the rf electrodes.
pub fn null_guess(file: &GeometryFile) -> Vec3 {
    if let Some([x, y]) = file.trap.null_guess {
        return Vec3::new(x, y, 0.0);
    }
    Vec3::new(0.0, file.geometry.length_scale(), 0.0)
}

/// Comma-separated list of numbers, as taken by several options.
pub fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    vals.try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

pub fn pair(s: &str) -> Result<[f64; 2], String> {
    parse_list::<2>(s)
}

pub fn triple(s: &str) -> Result<[f64; 3], String> {
    parse_list::<3>(s)
}
