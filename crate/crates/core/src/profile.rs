//! Fraction of the encoding phase picked up by leakage light crossing the
//! modulator while the voltage pulse is on.

use crate::error::{invalid, Result};
use crate::C64;

/// Modulator transit time `L` and voltage pulse width `w`, both in ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProfile {
    pub pm_length_l: f64,
    pub pulse_width_w: f64,
}

impl PhaseProfile {
    pub fn new(pm_length_l: f64, pulse_width_w: f64) -> Result<Self> {
        if !(pm_length_l > 0.0 && pm_length_l.is_finite()) {
            return Err(invalid(format!("modulator length L = {pm_length_l} must be positive")));
        }
        if !(pulse_width_w >= 0.0 && pulse_width_w.is_finite()) {
            return Err(invalid(format!("pulse width w = {pulse_width_w} must be nonnegative")));
        }
        Ok(Self { pm_length_l, pulse_width_w })
    }

    /// Total support length `w + 2L`.
    pub fn support(&self) -> f64 {
        self.pulse_width_w + 2.0 * self.pm_length_l
    }

    pub fn peak(&self) -> f64 {
        (self.pulse_width_w / (2.0 * self.pm_length_l)).min(1.0)
    }

    /// Breakpoints of the piecewise-linear profile, sorted.
    pub fn knots(&self) -> [f64; 4] {
        let l = self.pm_length_l;
        let w = self.pulse_width_w;
        let mut k = [0.0, w, 2.0 * l, 2.0 * l + w];
        k.sort_by(f64::total_cmp);
        k
    }

    pub fn fraction(&self, t: f64) -> f64 {
        fractional_phase_profile(t, self)
    }
}

impl Default for PhaseProfile {
    fn default() -> Self {
        Self { pm_length_l: 150.0, pulse_width_w: 200.0 }
    }
}

/// `f(t)`: overlap of the slice crossing at `t` with the voltage pulse,
/// as a fraction of the transit time.
pub fn fractional_phase_profile(t: f64, profile: &PhaseProfile) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let l = profile.pm_length_l;
    let w = profile.pulse_width_w;
    let hi = (t + l).min((t + 2.0 * l + w) / 2.0);
    let lo = t.max((t + 2.0 * l) / 2.0);
    ((hi - lo) / l).clamp(0.0, 1.0)
}

/// Adaptive Simpson quadrature of a complex integrand over `[a, b]`, split at
/// `breaks` so every panel sees a smooth piece.
pub(crate) fn integrate(f: &dyn Fn(f64) -> C64, a: f64, b: f64, breaks: &[f64], tol: f64) -> C64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let pieces = (pts.len() - 1).max(1) as f64;
    pts.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
            let whole = (fhi + flo + fmid * 4.0) * ((hi - lo) / 6.0);
            simpson(f, lo, hi, flo, fmid, fhi, whole, tol / pieces, 50)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> C64, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
