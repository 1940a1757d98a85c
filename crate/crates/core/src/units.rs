//! Physical constants, ion species and frequency conventions.
//!
//! Everything is SI internally. Reporting code converts to MHz, µm, meV.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
pub mod constants {
    /// Elementary charge (C).
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Unified atomic mass unit (kg).
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    /// Vacuum permittivity (F/m).
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    /// Reduced Planck constant (J s).
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Speed of light (m/s).
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    /// Boltzmann constant (J/K).
    pub const BOLTZMANN: f64 = 1.380_649e-23;
}

use constants::*;

/// A trapped charged particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    mass: f64,
    charge_number: i32,
}

/// Built-in species, mass number times `u`.
const SPECIES_TABLE: &[(&str, f64, i32)] = &[
    ("9Be+", 9.0, 1),
    ("24Mg+", 24.0, 1),
    ("25Mg+", 25.0, 1),
    ("26Mg+", 26.0, 1),
    ("40Ca+", 40.0, 1),
    ("43Ca+", 43.0, 1),
    ("88Sr+", 88.0, 1),
    ("111Cd+", 111.0, 1),
    ("137Ba+", 137.0, 1),
    ("171Yb+", 171.0, 1),
    ("174Yb+", 174.0, 1),
];

impl IonSpecies {
    /// Species with mass in atomic mass units and charge in units of `e`.
    pub fn new(mass_u: f64, charge_number: i32) -> Result<Self> {
        if !(mass_u.is_finite() && mass_u > 0.0) {
            return Err(Error::Validation(format!(
                "ion mass must be positive, got {mass_u} u"
            )));
        }
        if charge_number == 0 {
            return Err(Error::Validation("ion charge must be nonzero".into()));
        }
        Ok(Self {
            mass: mass_u * ATOMIC_MASS_UNIT,
            charge_number,
        })
    }

    /// Look up a built-in species such as `"24Mg+"`.
    pub fn from_label(label: &str) -> Result<Self> {
        let wanted = label.trim();
        SPECIES_TABLE
            .iter()
            .find(|(name, _, _)| name.eq_ignore_ascii_case(wanted))
            .map(|&(_, m, z)| Self::new(m, z).expect("table entries are valid"))
            .ok_or_else(|| Error::UnknownSpecies(label.to_string()))
    }

    pub fn known_labels() -> impl Iterator<Item = &'static str> {
        SPECIES_TABLE.iter().map(|(name, _, _)| *name)
    }

    /// Mass in kg.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn mass_u(&self) -> f64 {
        self.mass / ATOMIC_MASS_UNIT
    }

    pub fn charge_number(&self) -> i32 {
        self.charge_number
    }

    /// Charge in coulombs (signed).
    pub fn charge(&self) -> f64 {
        self.charge_number as f64 * ELEMENTARY_CHARGE
    }

    /// q/m in C/kg.
    pub fn charge_to_mass(&self) -> f64 {
        self.charge() / self.mass
    }
}

impl fmt::Display for IonSpecies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} u, {:+}e", self.mass_u(), self.charge_number)
    }
}

/// Cyclic frequency (Hz) to angular frequency (rad/s).
pub fn hz_to_angular(hz: f64) -> f64 {
    TAU * hz
}

/// Angular frequency (rad/s) to cyclic frequency (Hz).
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// A non-negative frequency.
///
/// The value is kept in the representation it was constructed from, so
/// reading it back in that representation is exact. `f * 2π / 2π` is not an
/// identity in binary floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    Angular(f64),
    Cyclic(f64),
}

impl Frequency {
    pub fn from_angular(omega: f64) -> Result<Self> {
        check_frequency(omega)?;
        Ok(Frequency::Angular(omega))
    }

    pub fn from_hz(hz: f64) -> Result<Self> {
        check_frequency(hz)?;
        Ok(Frequency::Cyclic(hz))
    }

    pub fn from_mhz(mhz: f64) -> Result<Self> {
        Self::from_hz(mhz * 1e6)
    }

    /// rad/s
    pub fn angular(self) -> f64 {
        match self {
            Frequency::Angular(w) => w,
            Frequency::Cyclic(f) => hz_to_angular(f),
        }
    }

    /// Hz
    pub fn hz(self) -> f64 {
        match self {
            Frequency::Angular(w) => angular_to_hz(w),
            Frequency::Cyclic(f) => f,
        }
    }

    pub fn mhz(self) -> f64 {
        self.hz() * 1e-6
    }

    /// Same frequency re-expressed as an angular value.
    pub fn to_angular(self) -> Self {
        Frequency::Angular(self.angular())
    }

    /// Same frequency re-expressed as a cyclic value.
    pub fn to_cyclic(self) -> Self {
        Frequency::Cyclic(self.hz())
    }
}

fn check_frequency(v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "frequency must be finite and non-negative, got {v}"
        )))
    }
}
