//! Brute-force photon-number oracles for the relay statistics.
//!
//! These expand the optical state in Fock space and enumerate every loss and
//! click outcome, so they share no arithmetic with the closed forms in
//! [`crate::detection`] beyond the optical layout.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::detection::{dark_pattern_prob, misaligned_jones, BellAnalyzer, ChannelParams, PASS_PATTERNS};
use crate::error::{invalid, Result};
use crate::states::PolarizationAngles;
use crate::C64;

type Occupation = [u8; 4];

/// Input modes `[a_H, a_V, b_H, b_V]` to detector modes
/// `[c m0, c m1, d m0, d m1]`, as an explicit 4x4 matrix.
fn relay_matrix(bsm: &BellAnalyzer) -> DMatrix<C64> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    // Beamsplitter on (a, b) per polarization: rows (c_H, c_V, d_H, d_V).
    let bs = DMatrix::from_row_slice(
        4,
        4,
        &[h, C64::default(), h, C64::default(), C64::default(), h, C64::default(), h, h, C64::default(), -h, C64::default(), C64::default(), h, C64::default(), -h],
    );
    // Polarizing splitter in the analyzer frame on both ports.
    let mut pbs = DMatrix::zeros(4, 4);
    for port in 0..2 {
        for k in 0..2 {
            for p in 0..2 {
                pbs[(2 * port + k, 2 * port + p)] = bsm.frame[k][p].conj();
            }
        }
    }
    pbs * bs
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial_pmf(n: u32, k: u32, p: f64) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k)) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Applies `sum_u amp_u o_u^dagger` to a polynomial in creation operators.
fn apply_creation(state: &HashMap<Occupation, C64>, amp: &DVector<C64>) -> HashMap<Occupation, C64> {
    let mut out: HashMap<Occupation, C64> = HashMap::new();
    for (occ, &c) in state {
        for u in 0..4 {
            if amp[u] == C64::default() {
                continue;
            }
            let mut next = *occ;
            next[u] += 1;
            *out.entry(next).or_default() += c * amp[u];
        }
    }
    out
}

/// Pass probability for Fock inputs `|n_a>` and `|n_b>` in the given
/// polarizations, enumerating binomial loss and every output occupation with
/// at most `truncation` surviving photons.
pub fn fock_oracle_pass_prob(
    alice: (PolarizationAngles, u32),
    bob: (PolarizationAngles, u32),
    params: &ChannelParams,
    bsm: &BellAnalyzer,
    truncation: u32,
) -> Result<f64> {
    if truncation < 1 {
        return Err(invalid("truncation must be at least one photon"));
    }
    params.validate()?;
    let u = relay_matrix(bsm);
    let va = misaligned_jones(alice.0, params.misalignment);
    let vb = bob.0.jones();
    let amp_a = &u * DVector::from_vec(vec![va[0], va[1], C64::default(), C64::default()]);
    let amp_b = &u * DVector::from_vec(vec![C64::default(), C64::default(), vb[0], vb[1]]);

    let mut total = 0.0;
    for ka in 0..=alice.1 {
        for kb in 0..=bob.1 {
            if ka + kb > truncation {
                continue;
            }
            let weight = binomial_pmf(alice.1, ka, params.eta_a()) * binomial_pmf(bob.1, kb, params.eta_b());
            if weight == 0.0 {
                continue;
            }
            let mut state = HashMap::from([([0u8; 4], C64::new(1.0, 0.0))]);
            for _ in 0..ka {
                state = apply_creation(&state, &amp_a);
            }
            for _ in 0..kb {
                state = apply_creation(&state, &amp_b);
            }
            let norm = factorial(ka) * factorial(kb);
            for (occ, c) in state {
                let p = c.norm_sqr() * occ.iter().map(|&n| factorial(u32::from(n))).product::<f64>() / norm;
                let occupied = occ.map(|n| n > 0);
                let pass: f64 = PASS_PATTERNS.iter().map(|pat| dark_pattern_prob(&occupied, pat, params.dark_count_prob)).sum();
                total += weight * p * pass;
            }
        }
    }
    Ok(total)
}

/// Phase-randomized coherent inputs as a Poisson mixture of Fock inputs with
/// `m + n <= max_photons`.
pub fn poisson_mixture_pass_prob(
    a: PolarizationAngles,
    b: PolarizationAngles,
    mu: f64,
    nu: f64,
    params: &ChannelParams,
    bsm: &BellAnalyzer,
    max_photons: u32,
) -> Result<f64> {
    let poisson = |lambda: f64, k: u32| (-lambda).exp() * lambda.powi(k as i32) / factorial(k);
    let mut total = 0.0;
    for m in 0..=max_photons {
        for n in 0..=(max_photons - m) {
            let y = fock_oracle_pass_prob((a, m), (b, n), params, bsm, max_photons.max(1))?;
            total += poisson(mu, m) * poisson(nu, n) * y;
        }
    }
    Ok(total)
}
