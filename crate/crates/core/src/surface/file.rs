//! Text format for electrode layouts.
//!
//! ```toml
//! format_version = 1
//!
//! [units]
//! length = "um"      # m | mm | um | nm
//! voltage = "V"      # V | mV
//!
//! [trap]             # optional analysis defaults
//! species = "24Mg+"
//! rf_amplitude = 103.2
//! rf_frequency_mhz = 87.0
//!
//! [[electrode]]
//! label = "rf1"
//! role = "rf"        # rf | control
//! x = [-40.0, 0.0]   # inf / -inf allowed for one edge of a strip
//! z = "infinite"     # or [z0, z1] for a rectangle
//! bias = "driven"    # or a static voltage
//! rf_phase = 0.0     # radians, rf electrodes only
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::{Electrode, PlanarGeometry, Role, Shape};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    format_version: Spanned<u32>,
    #[serde(default)]
    units: RawUnits,
    trap: Option<TrapSection>,
    #[serde(default)]
    electrode: Vec<Spanned<RawElectrode>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnits {
    #[serde(default = "default_length")]
    length: String,
    #[serde(default = "default_voltage")]
    voltage: String,
}

impl Default for RawUnits {
    fn default() -> Self {
        Self {
            length: default_length(),
            voltage: default_voltage(),
        }
    }
}

fn default_length() -> String {
    "um".into()
}

fn default_voltage() -> String {
    "V".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElectrode {
    label: String,
    role: Role,
    x: [f64; 2],
    z: Option<ZExtent>,
    bias: Option<BiasSpec>,
    rf_phase: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ZExtent {
    Keyword(String),
    Range([f64; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BiasSpec {
    Volts(f64),
    Keyword(String),
}

/// Optional analysis defaults carried alongside a layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub species: Option<String>,
    /// rf amplitude (V, in the file's voltage unit).
    pub rf_amplitude: Option<f64>,
    pub rf_frequency_mhz: Option<f64>,
    /// Cooling beam direction (need not be normalised).
    pub beam: Option<[f64; 3]>,
    /// Starting point (x, y) for the rf-null search, in the file's length unit.
    pub null_guess: Option<[f64; 2]>,
    /// Height above the plane for axial waveform work, in the file's length unit.
    pub axial_height: Option<f64>,
}

/// A parsed layout file with everything converted to SI.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFile {
    pub geometry: PlanarGeometry,
    pub trap: TrapSection,
}

fn length_factor(unit: &str) -> Option<f64> {
    match unit {
        "m" => Some(1.0),
        "mm" => Some(1e-3),
        "um" | "µm" | "micron" => Some(1e-6),
        "nm" => Some(1e-9),
        _ => None,
    }
}

fn voltage_factor(unit: &str) -> Option<f64> {
    match unit {
        "V" | "v" => Some(1.0),
        "mV" => Some(1e-3),
        _ => None,
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

impl GeometryFile {
    pub fn parse(src: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(src).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(src, s.start)).unwrap_or(1),
            message: e.message().to_string(),
        })?;
        let version_line = line_of(src, raw.format_version.span().start);
        if *raw.format_version.get_ref() != FORMAT_VERSION {
            return Err(Error::Parse {
                line: version_line,
                message: format!(
                    "unsupported format_version {}, expected {FORMAT_VERSION}",
                    raw.format_version.get_ref()
                ),
            });
        }
        let unit_err = |what: &str, u: &str| Error::Parse {
            line: 1,
            message: format!("unknown {what} unit `{u}`"),
        };
        let len = length_factor(&raw.units.length)
            .ok_or_else(|| unit_err("length", &raw.units.length))?;
        let volt = voltage_factor(&raw.units.voltage)
            .ok_or_else(|| unit_err("voltage", &raw.units.voltage))?;

        if raw.electrode.is_empty() {
            return Err(Error::Parse {
                line: line_of(src, src.len()),
                message: "geometry defines no electrodes".into(),
            });
        }

        let mut electrodes = Vec::with_capacity(raw.electrode.len());
        for spanned in &raw.electrode {
            let line = line_of(src, spanned.span().start);
            let e = spanned.get_ref();
            let at_line = |err: Error| Error::Parse {
                line,
                message: format!("electrode `{}`: {}", e.label, strip_prefix(&err)),
            };
            let x = (e.x[0] * len, e.x[1] * len);
            let bias = match &e.bias {
                None => 0.0,
                Some(BiasSpec::Volts(v)) => v * volt,
                Some(BiasSpec::Keyword(k)) if k == "driven" => {
                    if e.role != Role::Rf {
                        return Err(at_line(Error::Validation(
                            "only rf electrodes can be `driven`".into(),
                        )));
                    }
                    0.0
                }
                Some(BiasSpec::Keyword(k)) => {
                    return Err(at_line(Error::Validation(format!(
                        "bias must be a number or \"driven\", got `{k}`"
                    ))))
                }
            };
            let mut electrode = match &e.z {
                None => Electrode::strip(&e.label, e.role, x.0, x.1, bias),
                Some(ZExtent::Keyword(k)) if k == "infinite" => {
                    Electrode::strip(&e.label, e.role, x.0, x.1, bias)
                }
                Some(ZExtent::Keyword(k)) => {
                    return Err(at_line(Error::Validation(format!(
                        "z must be [z0, z1] or \"infinite\", got `{k}`"
                    ))))
                }
                Some(ZExtent::Range(z)) => {
                    Electrode::rect(&e.label, e.role, x, (z[0] * len, z[1] * len), bias)
                }
            }
            .map_err(at_line)?;
            if let Some(phase) = e.rf_phase {
                if e.role != Role::Rf && phase != 0.0 {
                    return Err(at_line(Error::Validation(
                        "rf_phase given for a control electrode".into(),
                    )));
                }
                electrode = electrode.with_phase(phase).map_err(at_line)?;
            }
            electrodes.push(electrode);
        }

        let geometry = PlanarGeometry::new(electrodes).map_err(|err| Error::Parse {
            line: line_of(src, raw.electrode[0].span().start),
            message: strip_prefix(&err),
        })?;

        let mut trap = raw.trap.unwrap_or_default();
        trap.rf_amplitude = trap.rf_amplitude.map(|v| v * volt);
        trap.null_guess = trap.null_guess.map(|[x, y]| [x * len, y * len]);
        trap.axial_height = trap.axial_height.map(|h| h * len);
        Ok(Self { geometry, trap })
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> std::result::Result<Self, FileError> {
        let src = std::fs::read_to_string(path)?;
        Ok(Self::parse(&src)?)
    }

    /// Serialise in micrometres and volts.
    pub fn to_toml(&self) -> String {
        let um = |v: f64| {
            if v.is_infinite() {
                if v > 0.0 {
                    "inf".to_string()
                } else {
                    "-inf".to_string()
                }
            } else {
                format!("{:?}", v * 1e6)
            }
        };
        let mut out = format!(
            "format_version = {FORMAT_VERSION}\n\n[units]\nlength = \"um\"\nvoltage = \"V\"\n"
        );
        let t = &self.trap;
        if *t != TrapSection::default() {
            out.push_str("\n[trap]\n");
            if let Some(s) = &t.species {
                let _ = writeln!(out, "species = {s:?}");
            }
            if let Some(v) = t.rf_amplitude {
                let _ = writeln!(out, "rf_amplitude = {v:?}");
            }
            if let Some(v) = t.rf_frequency_mhz {
                let _ = writeln!(out, "rf_frequency_mhz = {v:?}");
            }
            if let Some([a, b, c]) = t.beam {
                let _ = writeln!(out, "beam = [{a:?}, {b:?}, {c:?}]");
            }
            if let Some([x, y]) = t.null_guess {
                let _ = writeln!(out, "null_guess = [{}, {}]", um(x), um(y));
            }
            if let Some(h) = t.axial_height {
                let _ = writeln!(out, "axial_height = {}", um(h));
            }
        }
        for e in self.geometry.electrodes() {
            let role = match e.role {
                Role::Rf => "rf",
                Role::Control => "control",
            };
            let _ = write!(
                out,
                "\n[[electrode]]\nlabel = {:?}\nrole = \"{role}\"\n",
                e.label
            );
            match &e.shape {
                Shape::Strip(s) => {
                    let _ = write!(
                        out,
                        "x = [{}, {}]\nz = \"infinite\"\n",
                        um(s.lo()),
                        um(s.hi())
                    );
                }
                Shape::Rect(r) => {
                    let (x0, x1) = r.x_range();
                    let (z0, z1) = r.z_range();
                    let _ = write!(
                        out,
                        "x = [{}, {}]\nz = [{}, {}]\n",
                        um(x0),
                        um(x1),
                        um(z0),
                        um(z1)
                    );
                }
            }
            if e.role == Role::Rf && e.bias == 0.0 {
                out.push_str("bias = \"driven\"\n");
            } else {
                let _ = writeln!(out, "bias = {:?}", e.bias);
            }
            if e.role == Role::Rf {
                let _ = writeln!(out, "rf_phase = {:?}", e.rf_phase);
            }
        }
        out
    }
}

fn strip_prefix(err: &Error) -> String {
    match err {
        Error::Validation(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Failure to load a layout file from disk.
#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] Error),
}
