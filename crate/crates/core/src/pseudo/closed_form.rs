//! Closed-form results for the symmetric four- and five-wire layouts with
//! rf strips at amplitude `U` and everything else grounded.

use std::f64::consts::PI;

use super::model::RfDrive;
use crate::units::constants::ELEMENTARY_CHARGE;
use crate::units::IonSpecies;

fn q_over_m_omega(species: &IonSpecies, drive: &RfDrive) -> f64 {
    species.charge().abs() * drive.amplitude() / (species.mass() * drive.omega_rf())
}

/// `q² U² / (4 m Ω²)` in eV·m².
fn energy_prefactor(species: &IonSpecies, drive: &RfDrive) -> f64 {
    let q = species.charge();
    q * q * drive.amplitude().powi(2)
        / (4.0 * species.mass() * drive.omega_rf().powi(2))
        / ELEMENTARY_CHARGE
}

pub fn four_wire_null_height(d: f64) -> f64 {
    d
}

pub fn five_wire_null_height(d: f64) -> f64 {
    3f64.sqrt() * d / 2.0
}

/// Degenerate radial frequency (rad/s).
pub fn four_wire_frequency(species: &IonSpecies, drive: &RfDrive, d: f64) -> f64 {
    q_over_m_omega(species, drive) / (2f64.sqrt() * PI * d * d)
}

pub fn five_wire_frequency(species: &IonSpecies, drive: &RfDrive, d: f64) -> f64 {
    (2.0f64 / 3.0).sqrt() * q_over_m_omega(species, drive) / (PI * d * d)
}

/// Height of the escape saddle above the surface.
pub fn four_wire_saddle_height(d: f64) -> f64 {
    d * (2.0 + 5f64.sqrt()).sqrt()
}

pub fn five_wire_saddle_height(d: f64) -> f64 {
    d * (0.75 + 3f64.sqrt()).sqrt()
}

/// Well depth in eV.
pub fn four_wire_depth_ev(species: &IonSpecies, drive: &RfDrive, d: f64) -> f64 {
    energy_prefactor(species, drive) * 2.0 / (PI * PI * d * d * (11.0 + 5.0 * 5f64.sqrt()))
}

pub fn five_wire_depth_ev(species: &IonSpecies, drive: &RfDrive, d: f64) -> f64 {
    energy_prefactor(species, drive) / (PI * PI * d * d * (7.0 + 4.0 * 3f64.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_four_wire_numbers() {
        let mg = IonSpecies::from_label("24Mg+").unwrap();
        let drive = RfDrive::new(103.2, 2.0 * PI * 87e6).unwrap();
        let f = four_wire_frequency(&mg, &drive, 40e-6) / (2.0 * PI);
        assert!((f / 16.9e6 - 1.0).abs() < 0.01, "{f}");
        let w = four_wire_depth_ev(&mg, &drive, 40e-6);
        assert!((w / 0.203 - 1.0).abs() < 0.01, "{w}");
    }
}
