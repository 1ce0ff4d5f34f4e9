//! Shor-Preskill style key-rate formulas.

use crate::error::{invalid, Result};

/// `h2(x)` in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("binary entropy argument {x} outside [0, 1]")));
    }
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(x) + term(1.0 - x))
}

/// Key rate together with the quantities that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateResult {
    /// Clamped at zero.
    pub rate: f64,
    /// Unclamped value, kept for trend plots.
    pub raw_rate: f64,
    pub e_ph_bound: f64,
    pub e_bit: f64,
    /// Key-basis pass probability entering the privacy-amplification term.
    pub p_pass_key: f64,
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} outside [0, 1]")))
    }
}

/// `max(0, p [1 - h2(e_ph) - h2(e_bit)])`.
pub fn key_rate_single_photon(p_pass_key: f64, e_bit: f64, e_ph: f64) -> Result<KeyRateResult> {
    check_prob("e_ph", e_ph)?;
    if !(p_pass_key >= 0.0 && p_pass_key.is_finite()) {
        return Err(invalid(format!("key-basis pass probability {p_pass_key} must be nonnegative")));
    }
    let raw = p_pass_key * (1.0 - binary_entropy(e_ph)? - binary_entropy(e_bit)?);
    Ok(KeyRateResult { rate: raw.max(0.0), raw_rate: raw, e_ph_bound: e_ph, e_bit, p_pass_key })
}

/// `max(0, p11 [1 - h2(e_ph)] - q h2(e_bit))`.
pub fn key_rate_decoy(q_key: f64, e_bit: f64, p11_lower: f64, e_ph_upper: f64) -> Result<KeyRateResult> {
    check_prob("e_ph", e_ph_upper)?;
    for (name, v) in [("q_key", q_key), ("p11_lower", p11_lower)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} = {v} must be nonnegative")));
        }
    }
    let raw = p11_lower * (1.0 - binary_entropy(e_ph_upper)?) - q_key * binary_entropy(e_bit)?;
    Ok(KeyRateResult { rate: raw.max(0.0), raw_rate: raw, e_ph_bound: e_ph_upper, e_bit, p_pass_key: p11_lower })
}
