//! Design-rule estimators: stray fields from exposed dielectric, anomalous
//! heating scaling and Johnson-noise comparison.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::constants::HBAR;
use crate::units::IonSpecies;

/// Ion height relative to gap width above which the far-field formula is trusted.
pub const FAR_FIELD_RATIO: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DielectricGap {
    /// Gap width (m).
    pub a: f64,
    /// Electrode thickness (m).
    pub t: f64,
    /// Potential of the charged dielectric strip (V).
    pub v_s: f64,
    /// Ion height (m).
    pub r: f64,
}

impl DielectricGap {
    pub fn new(a: f64, t: f64, v_s: f64, r: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite())
            || !(t >= 0.0 && t.is_finite())
            || !(r > 0.0 && r.is_finite())
        {
            return Err(Error::Validation(format!(
                "need a > 0, t ≥ 0, R > 0 (a = {a}, t = {t}, R = {r})"
            )));
        }
        if !v_s.is_finite() {
            return Err(Error::Validation("strip potential must be finite".into()));
        }
        Ok(Self { a, t, v_s, r })
    }

    pub fn far_field_valid(&self) -> bool {
        self.r >= FAR_FIELD_RATIO * self.a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrayField {
    /// |E| at the ion (V/m).
    pub field: f64,
    /// Suppression relative to a zero-thickness electrode.
    pub suppression: f64,
    pub warnings: Vec<String>,
}

/// Field of a charged gap bottom seen by an ion at height R. Refuses ion heights
/// comparable to the gap width; see [`stray_field_unchecked`].
pub fn stray_field(gap: &DielectricGap) -> Result<StrayField> {
    if !gap.far_field_valid() {
        return Err(Error::Unsupported(format!(
            "ion height {:e} m is below {FAR_FIELD_RATIO} gap widths ({:e} m)",
            gap.r, gap.a
        )));
    }
    stray_field_unchecked(gap)
}

/// As [`stray_field`], but evaluates near-field geometries and reports them as warnings.
pub fn stray_field_unchecked(gap: &DielectricGap) -> Result<StrayField> {
    let bare = gap.a * gap.v_s.abs() / (PI * gap.r * gap.r);
    let threshold = gap.a / PI;
    let suppression = if gap.t == 0.0 {
        1.0
    } else if gap.t >= threshold {
        4.0 / PI * (-PI * gap.t / gap.a).exp()
    } else {
        return Err(Error::Unsupported(format!(
            "electrode thickness {:e} m lies between 0 and a/π = {threshold:e} m, where no estimate is defined; \
             evaluate at t = 0 or t = a/π to bracket it",
            gap.t
        )));
    };
    let mut warnings = Vec::new();
    if !gap.far_field_valid() {
        warnings.push(format!(
            "ion height {:e} m is not much larger than the gap width {:e} m; estimate is unreliable",
            gap.r, gap.a
        ));
    }
    Ok(StrayField {
        field: bare * suppression,
        suppression,
        warnings,
    })
}

/// Power-law model `S_E = S_E0 (R/R₀)^(-α) (ω/ω₀)^(-β_h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingModel {
    /// (V/m)²/Hz at the reference point.
    pub s_e0: f64,
    pub r0: f64,
    pub omega0: f64,
    pub alpha: f64,
    pub beta_h: f64,
}

impl HeatingModel {
    pub const DEFAULT_ALPHA: f64 = 3.5;
    pub const DEFAULT_BETA: f64 = 1.0;

    pub fn new(s_e0: f64, r0: f64, omega0: f64) -> Result<Self> {
        Self::with_exponents(s_e0, r0, omega0, Self::DEFAULT_ALPHA, Self::DEFAULT_BETA)
    }

    pub fn with_exponents(
        s_e0: f64,
        r0: f64,
        omega0: f64,
        alpha: f64,
        beta_h: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("S_E0", s_e0),
            ("R0", r0),
            ("ω0", omega0),
            ("α", alpha),
            ("β_h", beta_h),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            s_e0,
            r0,
            omega0,
            alpha,
            beta_h,
        })
    }

    /// Anchor the model on a measured heating rate (quanta/s) of `species` at (R₀, ω₀).
    pub fn from_heating_rate(
        rate: f64,
        species: &IonSpecies,
        r0: f64,
        omega0: f64,
    ) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::Validation(format!(
                "heating rate must be positive, got {rate}"
            )));
        }
        let q = species.charge();
        Self::new(
            rate * 4.0 * species.mass() * HBAR * omega0 / (q * q),
            r0,
            omega0,
        )
    }

    pub fn spectral_density(&self, r: f64, omega: f64) -> Result<f64> {
        if !(r > 0.0 && omega > 0.0) {
            return Err(Error::Validation(format!(
                "need R > 0 and ω > 0 (R = {r}, ω = {omega})"
            )));
        }
        Ok(self.s_e0 * (r / self.r0).powf(-self.alpha) * (omega / self.omega0).powf(-self.beta_h))
    }
}

/// Motional heating rate (quanta/s) `q² S_E / (4 m ħ ω)`.
pub fn heating_rate(s_e: f64, species: &IonSpecies, omega: f64) -> Result<f64> {
    if !(s_e >= 0.0 && omega > 0.0) {
        return Err(Error::Validation(format!(
            "need S_E ≥ 0 and ω > 0 (S_E = {s_e}, ω = {omega})"
        )));
    }
    let q = species.charge();
    Ok(q * q * s_e / (4.0 * species.mass() * HBAR * omega))
}

/// Ratio of Johnson-limited spectral densities at `r1` and `r2`, `(R₁/R₂)^(-2)`.
pub fn johnson_comparison(r1: f64, r2: f64) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Validation(format!(
            "distances must be positive ({r1}, {r2})"
        )));
    }
    Ok((r1 / r2).powi(-2))
}

/// Inputs for [`design_report`]; every section is optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignInputs {
    pub title: String,
    pub species: Option<IonSpecies>,
    pub ion_height: Option<f64>,
    pub secular_frequency: Option<f64>,
    pub depth_ev: Option<f64>,
    pub gap: Option<DielectricGap>,
    pub heating: Option<HeatingModel>,
}

/// Plain-text summary of stray-field, heating and depth estimates.
pub fn design_report(inputs: &DesignInputs) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {}",
        if inputs.title.is_empty() {
            "Design summary"
        } else {
            &inputs.title
        }
    );
    if let Some(h) = inputs.ion_height {
        let _ = writeln!(out, "ion height: {:.3} um", h * 1e6);
    }
    if let Some(w) = inputs.secular_frequency {
        let _ = writeln!(out, "secular frequency: {:.4} MHz", w / (2.0 * PI) / 1e6);
    }
    if let Some(d) = inputs.depth_ev {
        let _ = writeln!(out, "trap depth: {:.2} meV", d * 1e3);
    }
    if let Some(gap) = &inputs.gap {
        match stray_field_unchecked(gap) {
            Ok(s) => {
                let _ = writeln!(
                    out,
                    "stray field from exposed dielectric: {:.4e} V/m (thickness suppression {:.3})",
                    s.field, s.suppression
                );
                for w in &s.warnings {
                    let _ = writeln!(out, "  warning: {w}");
                }
            }
            Err(e) => {
                let _ = writeln!(out, "stray field: not estimated ({e})");
            }
        }
    }
    if let (Some(model), Some(r), Some(w)) =
        (&inputs.heating, inputs.ion_height, inputs.secular_frequency)
    {
        if let Ok(s) = model.spectral_density(r, w) {
            let _ = writeln!(
                out,
                "field noise S_E: {s:.3e} (V/m)^2/Hz (alpha = {}, beta = {})",
                model.alpha, model.beta_h
            );
            if let Some(sp) = &inputs.species {
                if let Ok(rate) = heating_rate(s, sp, w) {
                    let _ = writeln!(out, "heating rate: {rate:.3e} quanta/s");
                }
            }
            if let Ok(j) = johnson_comparison(r, model.r0) {
                let anomalous = (r / model.r0).powf(-model.alpha);
                let _ = writeln!(
                    out,
                    "relative to the reference height: anomalous x{anomalous:.3}, Johnson-limited x{j:.3}"
                );
            }
        }
    }
    out
}
