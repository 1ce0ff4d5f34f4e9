//! Polarization states and protocol state sets.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{invalid, Result};
use crate::C64;

/// Bloch-sphere polarization `cos(theta)|H> + sin(theta) e^{i phi}|V>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationAngles {
    pub theta: f64,
    pub phi: f64,
}

/// Wraps an azimuth into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

impl PolarizationAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !theta.is_finite() {
            return Err(invalid(format!("theta {theta} outside [0, pi]")));
        }
        if !phi.is_finite() || phi <= -PI || phi > PI {
            return Err(invalid(format!("phi {phi} outside (-pi, pi]")));
        }
        Ok(Self { theta, phi })
    }

    /// Equatorial state at azimuth `phi` (wrapped).
    pub fn equatorial(phi: f64) -> Self {
        Self { theta: FRAC_PI_4, phi: wrap_phase(phi) }
    }

    /// Jones vector `(H, V)` components.
    pub fn jones(&self) -> [C64; 2] {
        [C64::new(self.theta.cos(), 0.0), C64::from_polar(self.theta.sin(), self.phi)]
    }
}

/// `<a|b>` for two polarization qubits.
pub fn encoded_overlap(a: PolarizationAngles, b: PolarizationAngles) -> C64 {
    let (ca, sa) = (a.theta.cos(), a.theta.sin());
    let (cb, sb) = (b.theta.cos(), b.theta.sin());
    C64::new(ca * cb, 0.0) + C64::from_polar(sa * sb, b.phi - a.phi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    ThreeState,
    Bb84,
    /// Two key states at `phis[0]`, `phis[1]`, test states at the rest.
    NState(Vec<f64>),
    /// Key basis `{H, V}` with test state `D`.
    HvKeyDTest,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::ThreeState => "three_state",
            Protocol::Bb84 => "bb84",
            Protocol::NState(_) => "n_state",
            Protocol::HvKeyDTest => "hv_d",
        }
    }
}

/// One preparation setting: basis `i`, bit `x` and the physical polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub basis: u8,
    pub bit: u8,
    pub angles: PolarizationAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// States of `protocol` in order: key bit 0, key bit 1, then test states.
///
/// A flaw `delta` shifts every test azimuth by `delta`. `test_phi` replaces
/// the test azimuths with `{phi, -phi}` (only `phi` for three states).
pub fn protocol_states(protocol: &Protocol, flaw_delta: f64, test_phi: Option<f64>) -> Result<Vec<PolarizationAngles>> {
    if !flaw_delta.is_finite() || flaw_delta.abs() >= FRAC_PI_4 {
        return Err(invalid(format!("flaw delta {flaw_delta} must satisfy |delta| < pi/4")));
    }
    let (key, mut test): (Vec<PolarizationAngles>, Vec<f64>) = match protocol {
        Protocol::ThreeState => (vec![PolarizationAngles::equatorial(0.0), PolarizationAngles::equatorial(PI)], vec![FRAC_PI_2]),
        Protocol::Bb84 => (
            vec![PolarizationAngles::equatorial(0.0), PolarizationAngles::equatorial(PI)],
            vec![FRAC_PI_2, -FRAC_PI_2],
        ),
        Protocol::NState(phis) => {
            if phis.len() < 3 {
                return Err(invalid("n_state needs at least three azimuths"));
            }
            let wrapped: Vec<f64> = phis.iter().map(|&p| wrap_phase(p)).collect();
            for i in 0..wrapped.len() {
                for j in 0..i {
                    if (wrapped[i] - wrapped[j]).abs() < 1e-12 {
                        return Err(invalid(format!("duplicate azimuth {}", phis[i])));
                    }
                }
            }
            (wrapped[..2].iter().map(|&p| PolarizationAngles::equatorial(p)).collect(), wrapped[2..].to_vec())
        }
        Protocol::HvKeyDTest => (vec![PolarizationAngles { theta: 0.0, phi: 0.0 }, PolarizationAngles { theta: FRAC_PI_2, phi: 0.0 }], Vec::new()),
    };
    if let Some(phi) = test_phi {
        if matches!(protocol, Protocol::HvKeyDTest) {
            return Err(invalid("test azimuth override is not defined for the H/V key protocol"));
        }
        test = match test.len() {
            1 => vec![phi],
            2 => vec![phi, -phi],
            _ => return Err(invalid("test azimuth override needs one or two test states")),
        };
    }
    let mut out = key;
    if matches!(protocol, Protocol::HvKeyDTest) {
        out.push(PolarizationAngles { theta: FRAC_PI_4, phi: wrap_phase(flaw_delta) });
    } else {
        out.extend(test.into_iter().map(|p| PolarizationAngles::equatorial(p + flaw_delta)));
    }
    Ok(out)
}

/// Labeled settings for one party.
///
/// Bob's key bits are relabeled (`y -> 1 - y`) so that a singlet announcement
/// marks `x = y` as correct.
pub fn party_settings(states: &[PolarizationAngles], party: Party) -> Vec<Setting> {
    states
        .iter()
        .enumerate()
        .map(|(k, &angles)| {
            if k < 2 {
                let bit = match party {
                    Party::Alice => k as u8,
                    Party::Bob => 1 - k as u8,
                };
                Setting { basis: 0, bit, angles }
            } else {
                Setting { basis: 1, bit: (k - 2) as u8, angles }
            }
        })
        .collect()
}

/// Index of the key-basis setting with logical bit `bit`.
pub fn key_index(settings: &[Setting], bit: u8) -> Option<usize> {
    settings.iter().position(|s| s.basis == 0 && s.bit == bit)
}
