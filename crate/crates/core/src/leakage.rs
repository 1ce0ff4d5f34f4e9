//! Leakage-light models and their pairwise overlaps.

use std::f64::consts::FRAC_PI_4;

use crate::error::{invalid, Error, Result};
use crate::profile::{integrate, PhaseProfile};
use crate::states::{encoded_overlap, PolarizationAngles};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LeakageModel {
    /// Vacuum plus a component that reveals the setting completely.
    FullInfo,
    /// Coherent state carrying the full encoded polarization.
    StaticCoherent,
    /// Coherent state whose azimuth follows the modulator phase profile.
    TimeDependentCoherent,
}

impl LeakageModel {
    pub fn tag(self) -> &'static str {
        match self {
            LeakageModel::FullInfo => "model1",
            LeakageModel::StaticCoherent => "model2",
            LeakageModel::TimeDependentCoherent => "model3",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "model1" => Some(LeakageModel::FullInfo),
            "model2" => Some(LeakageModel::StaticCoherent),
            "model3" => Some(LeakageModel::TimeDependentCoherent),
            _ => None,
        }
    }

    pub const ALL: [LeakageModel; 3] = [LeakageModel::FullInfo, LeakageModel::StaticCoherent, LeakageModel::TimeDependentCoherent];
}

/// Leakage state attached to one preparation setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageSpec {
    pub model: LeakageModel,
    /// Total mean photon number `|alpha|^2`.
    pub intensity_alpha_sq: f64,
    pub encoded_angles: PolarizationAngles,
    pub profile: PhaseProfile,
    /// Integration window `Delta` in ps.
    pub duration_delta: f64,
}

impl LeakageSpec {
    pub fn new(model: LeakageModel, intensity_alpha_sq: f64, encoded_angles: PolarizationAngles) -> Self {
        Self { model, intensity_alpha_sq, encoded_angles, profile: PhaseProfile::default(), duration_delta: 500.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity_alpha_sq >= 0.0 && self.intensity_alpha_sq.is_finite()) {
            return Err(invalid(format!("leakage intensity {} must be nonnegative", self.intensity_alpha_sq)));
        }
        if self.model == LeakageModel::TimeDependentCoherent && !(self.duration_delta > 0.0 && self.duration_delta.is_finite()) {
            return Err(invalid(format!("leakage duration {} must be positive", self.duration_delta)));
        }
        Ok(())
    }
}

/// Quadrature tolerance for the time-dependent overlap exponent.
const QUAD_TOL: f64 = 1e-12;

/// `<chi_a | chi_b>` for two leakage states of the same model and intensity.
pub fn leakage_overlap(a: &LeakageSpec, b: &LeakageSpec) -> Result<C64> {
    a.validate()?;
    b.validate()?;
    if a.model != b.model {
        return Err(Error::IncompatibleLeakage(format!("{} vs {}", a.model.tag(), b.model.tag())));
    }
    if a.intensity_alpha_sq != b.intensity_alpha_sq {
        return Err(Error::IncompatibleLeakage(format!("intensity {} vs {}", a.intensity_alpha_sq, b.intensity_alpha_sq)));
    }
    let n = a.intensity_alpha_sq;
    if a == b || n == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(match a.model {
        LeakageModel::FullInfo => {
            let same = a.encoded_angles == b.encoded_angles;
            C64::new(if same { 1.0 } else { (-n).exp() }, 0.0)
        }
        LeakageModel::StaticCoherent => (-(C64::new(1.0, 0.0) - encoded_overlap(a.encoded_angles, b.encoded_angles)) * n).exp(),
        LeakageModel::TimeDependentCoherent => {
            if a.profile != b.profile || a.duration_delta != b.duration_delta {
                return Err(Error::IncompatibleLeakage("profile or duration differs".into()));
            }
            let exponent = time_dependent_exponent(a.encoded_angles.phi, b.encoded_angles.phi, &a.profile, a.duration_delta);
            (-exponent * (n / a.duration_delta)).exp()
        }
    })
}

/// `int_{-Delta/2}^{Delta/2} (1 - u_a(t)^dagger u_b(t)) dt` for equatorial
/// leakage with azimuth `f(t) phi`.
pub fn time_dependent_exponent(phi_a: f64, phi_b: f64, profile: &PhaseProfile, delta: f64) -> C64 {
    let integrand = |s: f64| C64::new(1.0, 0.0) - time_dependent_inner(phi_a, phi_b, profile, s);
    // Shift to slice time s = t + Delta/2 so the profile knots apply directly.
    integrate(&integrand, 0.0, delta, &profile.knots(), QUAD_TOL)
}

/// `u_a(t)^dagger u_b(t)` at slice time `s` (profile time origin).
pub fn time_dependent_inner(phi_a: f64, phi_b: f64, profile: &PhaseProfile, s: f64) -> C64 {
    let f = profile.fraction(s);
    let a = PolarizationAngles { theta: FRAC_PI_4, phi: f * phi_a };
    let b = PolarizationAngles { theta: FRAC_PI_4, phi: f * phi_b };
    encoded_overlap(a, b)
}
