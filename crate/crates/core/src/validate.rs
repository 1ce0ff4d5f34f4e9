//! Self-validation suite behind the `validate` subcommand.
//!
//! Each check compares a production code path against an independent
//! construction: brute-force Fock sums, planted decoy yields, LP vertex
//! enumeration, direct quadrature and explicit eavesdropping attacks.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoy::{bound_single_photon_yields_with, poisson_weight, WeightFn};
use crate::detection::{single_photon_pass, wcp_pass, BellAnalyzer, ChannelParams, DetectionTable};
use crate::error::Result;
use crate::gram::{signal_gram, PartyGram};
use crate::leakage::{time_dependent_exponent, LeakageModel, LeakageSpec};
use crate::oracle::{fock_oracle_pass_prob, poisson_mixture_pass_prob};
use crate::profile::PhaseProfile;
use crate::security::{max_phase_error_with, Detection, PhaseErrorProblem};
use crate::states::{party_settings, protocol_states, wrap_phase, Party, PolarizationAngles, Protocol, Setting};
use crate::{LinearProgram, SolverTolerances, Status, C64};
use conic::{solve_lp_with, Relation, Sense, VarBounds};

/// Certificate thresholds every production solve must meet.
pub const GAP_LIMIT: f64 = 1e-7;
pub const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual or violation observed.
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {:<22} residual={:.3e}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.residual, c.detail)?;
        }
        Ok(())
    }
}

/// Knobs for the suite; the weight function is a mutation hook.
#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub seed: u64,
    pub tolerances: SolverTolerances,
    /// Photon-number weight handed to the decoy LPs.
    pub decoy_weight: WeightFn,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { seed: 0x5eed, tolerances: SolverTolerances::default(), decoy_weight: poisson_weight }
    }
}

pub fn run_validation(opts: &ValidateOptions) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let checks = vec![
        phase_profile_check(),
        fock_oracle_check(&mut rng),
        wcp_oracle_check(&mut rng),
        decoy_bracket_check(&mut rng, opts.decoy_weight),
        lp_vertex_check(&mut rng),
        planted_eve_check(&mut rng, &opts.tolerances),
        certificate_check(&opts.tolerances),
    ];
    ValidationReport { checks }
}

fn check(name: &'static str, result: Result<(bool, f64, String)>) -> Check {
    match result {
        Ok((passed, residual, detail)) => Check { name, passed, residual, detail },
        Err(e) => Check { name, passed: false, residual: f64::NAN, detail: format!("error: {e}") },
    }
}

fn random_angles(rng: &mut ChaCha8Rng) -> PolarizationAngles {
    PolarizationAngles { theta: rng.random_range(0.0..=FRAC_PI_2), phi: rng.random_range(-PI..PI) }
}

fn random_channel(rng: &mut ChaCha8Rng) -> ChannelParams {
    ChannelParams {
        distance_a_km: rng.random_range(0.0..60.0),
        distance_b_km: rng.random_range(0.0..60.0),
        loss_db_per_km: 0.2,
        detector_efficiency: rng.random_range(0.2..1.0),
        dark_count_prob: rng.random_range(0.0..1e-3),
        misalignment: rng.random_range(0.0..0.05),
    }
}

fn random_analyzer(rng: &mut ChaCha8Rng) -> BellAnalyzer {
    let m0 = random_angles(rng);
    BellAnalyzer::new(m0, PolarizationAngles { theta: FRAC_PI_2 - m0.theta, phi: wrap_phase(m0.phi + PI) })
}

fn phase_profile_check() -> Check {
    check(
        "phase-profile",
        (|| {
            let p = PhaseProfile::new(150.0, 200.0)?;
            // Independent f(t): midpoint rule over the transit window.
            let oracle = |t: f64| {
                if t < 0.0 {
                    return 0.0;
                }
                let (l, w) = (p.pm_length_l, p.pulse_width_w);
                let n = 10_000;
                let hits = (0..n).filter(|k| {
                    let s = t + l * (*k as f64 + 0.5) / n as f64;
                    s >= (t + 2.0 * l) / 2.0 && s <= (t + 2.0 * l + w) / 2.0
                });
                hits.count() as f64 / n as f64
            };
            let exact = (p.fraction(250.0) - 2.0 / 3.0).abs().max((p.support() - 500.0).abs()).max((p.peak() - 2.0 / 3.0).abs());
            let grid = (0..=60).map(|k| -50.0 + 10.0 * k as f64).map(|t| (p.fraction(t) - oracle(t)).abs()).fold(0.0, f64::max);
            let (phi_a, phi_b, delta) = (0.4, -2.1, 500.0);
            let n = 200_000;
            let h = delta / n as f64;
            let direct: C64 = (0..n)
                .map(|k| {
                    let f = p.fraction((k as f64 + 0.5) * h);
                    (C64::new(1.0, 0.0) - (C64::new(1.0, 0.0) + C64::from_polar(1.0, f * (phi_b - phi_a))) / 2.0) * h
                })
                .sum();
            let quad = time_dependent_exponent(phi_a, phi_b, &p, delta);
            let quad_err = (quad - direct).norm() / delta;
            let passed = exact <= 1e-9 && grid <= 2e-4 && quad_err <= 1e-6;
            Ok((passed, exact, format!("grid oracle {grid:.1e}, overlap quadrature {quad_err:.1e}")))
        })(),
    )
}

fn fock_oracle_check(rng: &mut ChaCha8Rng) -> Check {
    check(
        "fock-oracle",
        (|| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let (a, b, params, bsm) = (random_angles(rng), random_angles(rng), random_channel(rng), random_analyzer(rng));
                let fast = single_photon_pass(a, b, &params, &bsm);
                let slow = fock_oracle_pass_prob((a, 1), (b, 1), &params, &bsm, 2)?;
                worst = worst.max((fast - slow).abs());
            }
            Ok((worst <= 1e-10, worst, "50 random single-photon settings".into()))
        })(),
    )
}

fn wcp_oracle_check(rng: &mut ChaCha8Rng) -> Check {
    check(
        "wcp-oracle",
        (|| {
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let (a, b, params, bsm) = (random_angles(rng), random_angles(rng), random_channel(rng), random_analyzer(rng));
                let (mu, nu) = (rng.random_range(1e-5..1e-3), rng.random_range(1e-5..1e-3));
                let fast = wcp_pass(a, b, mu, nu, &params, &bsm, 128);
                let slow = poisson_mixture_pass_prob(a, b, mu, nu, &params, &bsm, 4)?;
                worst = worst.max((fast - slow).abs());
            }
            Ok((worst <= 1e-9, worst, "20 random settings at mu, nu <= 1e-3".into()))
        })(),
    )
}

/// Observed gains of planted yields `y[m][n]`, summed well past the LP cutoff.
pub fn planted_gains(yields: &[Vec<f64>], intensities: &[f64]) -> Vec<f64> {
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let mut q = Vec::new();
    for &mu in intensities {
        for &nu in intensities {
            let mut total = 0.0;
            for (m, row) in yields.iter().enumerate() {
                for (n, y) in row.iter().enumerate() {
                    total += (-mu - nu).exp() * mu.powi(m as i32) * nu.powi(n as i32) / (fact(m) * fact(n)) * y;
                }
            }
            q.push(total.clamp(0.0, 1.0));
        }
    }
    q
}

fn decoy_bracket_check(rng: &mut ChaCha8Rng, weight: WeightFn) -> Check {
    check(
        "decoy-brackets",
        (|| {
            let ints = [0.05, 0.1, 0.6];
            let states = protocol_states(&Protocol::ThreeState, 0.0, None)?;
            let alice = party_settings(&states[..1], Party::Alice);
            let bob = party_settings(&states[..1], Party::Bob);
            let (mut misses, mut worst) = (0usize, 0.0f64);
            for _ in 0..100 {
                let yields: Vec<Vec<f64>> = (0..=24).map(|_| (0..=24).map(|_| rng.random::<f64>()).collect()).collect();
                let table = DetectionTable::from_values(ints.to_vec(), ints.to_vec(), alice.clone(), bob.clone(), planted_gains(&yields, &ints))?;
                match bound_single_photon_yields_with(&table, 10, weight) {
                    Ok(b) => {
                        let (lo, hi) = b.get(0, 0);
                        let miss = (lo - yields[1][1]).max(yields[1][1] - hi).max(0.0);
                        worst = worst.max(miss);
                        if miss > 1e-7 {
                            misses += 1;
                        }
                    }
                    Err(_) => misses += 1,
                }
            }
            Ok((misses == 0, worst, format!("{misses} of 100 planted tables not bracketed")))
        })(),
    )
}

fn lp_vertex_check(rng: &mut ChaCha8Rng) -> Check {
    check(
        "lp-vertex-enumeration",
        (|| {
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let c: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                let rows: Vec<(Vec<f64>, f64)> = (0..8).map(|_| ((0..5).map(|_| rng.random_range(-1.0..1.0)).collect(), rng.random_range(0.2..1.5))).collect();
                let mut lp = LinearProgram::new(c.clone());
                for v in 0..5 {
                    lp.set_bounds(v, VarBounds::unit());
                }
                for (a, b) in &rows {
                    lp.add_row(a.clone(), Relation::Le, *b);
                }
                let sol = solve_lp_with(&lp, Sense::Maximize, &SolverTolerances::default())?;
                worst = worst.max((sol.primal_value - vertex_optimum(&c, &rows)).abs());
            }
            Ok((worst <= 1e-7, worst, "20 random 5-variable, 8-row LPs".into()))
        })(),
    )
}

/// Best objective over all basic feasible points of `a x <= b`, `0 <= x <= 1`.
pub fn vertex_optimum(c: &[f64], rows: &[(Vec<f64>, f64)]) -> f64 {
    let n = c.len();
    let mut planes: Vec<(Vec<f64>, f64)> = rows.to_vec();
    for v in 0..n {
        let mut e = vec![0.0; n];
        e[v] = 1.0;
        planes.push((e.clone(), 1.0));
        planes.push((e, 0.0));
    }
    let feasible = |x: &DVector<f64>| rows.iter().all(|(a, b)| a.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9) && x.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v));
    let mut best = f64::NEG_INFINITY;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let m = DMatrix::from_fn(n, n, |r, k| planes[pick[r]].0[k]);
        let rhs = DVector::from_fn(n, |r, _| planes[pick[r]].1);
        if let Some(x) = m.lu().solve(&rhs) {
            if x.iter().all(|v| v.is_finite()) && feasible(&x) {
                best = best.max(c.iter().zip(x.iter()).map(|(p, q)| p * q).sum());
            }
        }
        // Next n-subset in lexicographic order.
        let mut i = n;
        while i > 0 && pick[i - 1] == planes.len() - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        pick[i - 1] += 1;
        for j in i..n {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// Columns are vectors whose pairwise inner products reproduce `gram`.
pub fn gram_vectors(gram: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = gram.clone().symmetric_eigen();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 1e-13).collect();
    DMatrix::from_fn(keep.len(), gram.ncols(), |r, c| eig.eigenvectors[(c, keep[r])].conj() * eig.eigenvalues[keep[r]].sqrt())
}

/// Random pass operator `0 <= M <= I` on a `d`-dimensional space.
pub fn random_pass_operator(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = a.adjoint() * &a;
    let top = m.clone().symmetric_eigen().eigenvalues.max();
    m * C64::new(rng.random_range(0.2..1.0) / top, 0.0)
}

/// Planted statistics and the attack's true phase error: virtual key qubits
/// entangled with the key-basis signals, parity error measured in X x X.
pub fn planted_attack(alice: &PartyGram, bob: &PartyGram, m: &DMatrix<C64>) -> (Vec<f64>, f64) {
    let (va, vb) = (gram_vectors(&alice.matrix()), gram_vectors(&bob.matrix()));
    let joint = |i: usize, j: usize| -> DVector<C64> { va.column(i).kronecker(&vb.column(j)) };
    let (na, nb) = (alice.settings.len(), bob.settings.len());
    let mut p = Vec::with_capacity(na * nb);
    for i in 0..na {
        for j in 0..nb {
            let v = joint(i, j);
            p.push((v.adjoint() * m * &v)[(0, 0)].re);
        }
    }
    let key = |settings: &[Setting], bit| settings.iter().position(|s| s.basis == 0 && s.bit == bit).expect("key setting");
    let elem = |x: u8, y: u8, x2: u8, y2: u8| {
        let bra = joint(key(&alice.settings, x2), key(&bob.settings, y2));
        let ket = joint(key(&alice.settings, x), key(&bob.settings, y));
        (bra.adjoint() * m * ket)[(0, 0)]
    };
    let mass: f64 = [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|&(x, y)| elem(x, y, x, y).re).sum();
    let e_ph = 0.5 + (elem(0, 0, 1, 1) + elem(0, 1, 1, 0)).re / mass;
    (p, e_ph)
}

fn random_parties(rng: &mut ChaCha8Rng) -> Result<(PartyGram, PartyGram)> {
    let protocol = if rng.random::<bool>() { Protocol::Bb84 } else { Protocol::ThreeState };
    let phi = rng.random_range(0.3..2.8);
    let states = protocol_states(&protocol, 0.0, Some(phi))?;
    let model = LeakageModel::ALL[rng.random_range(0..3)];
    let alpha_sq = rng.random_range(0.0..0.2);
    let make = |who| {
        let settings = party_settings(&states, who);
        let specs: Vec<LeakageSpec> = settings.iter().map(|s| LeakageSpec::new(model, alpha_sq, s.angles)).collect();
        PartyGram::from_specs(settings, &specs)
    };
    Ok((make(Party::Alice)?, make(Party::Bob)?))
}

fn planted_eve_check(rng: &mut ChaCha8Rng, tol: &SolverTolerances) -> Check {
    check(
        "planted-eve",
        (|| {
            let (mut worst, mut done) = (f64::NEG_INFINITY, 0);
            while done < 20 {
                let (alice, bob) = random_parties(rng)?;
                let d = gram_vectors(&alice.matrix()).nrows() * gram_vectors(&bob.matrix()).nrows();
                let m = random_pass_operator(rng, d);
                let (p, truth) = planted_attack(&alice, &bob, &m);
                // The reported bound saturates at 1/2; such attacks test nothing.
                if truth > 0.5 {
                    continue;
                }
                let problem = PhaseErrorProblem { gram: signal_gram(&alice, &bob), detection: Detection::Exact(p), use_mismatch: true };
                let bound = max_phase_error_with(&problem, tol)?;
                worst = worst.max(truth - bound.e_ph_upper);
                done += 1;
            }
            Ok((worst <= 1e-6, worst.max(0.0), "20 explicit attacks; residual is max(true - bound)".into()))
        })(),
    )
}

fn certificate_check(tol: &SolverTolerances) -> Check {
    check(
        "solver-certificates",
        (|| {
            let (mut gap, mut res, mut bad) = (0.0f64, 0.0f64, 0usize);
            for model in LeakageModel::ALL {
                let states = protocol_states(&Protocol::Bb84, 0.0, None)?;
                let make = |who| {
                    let settings = party_settings(&states, who);
                    let specs: Vec<LeakageSpec> = settings.iter().map(|s| LeakageSpec::new(model, 1e-4, s.angles)).collect();
                    PartyGram::from_specs(settings, &specs)
                };
                let (alice, bob) = (make(Party::Alice)?, make(Party::Bob)?);
                let stats = crate::detection::single_photon_pass_probs(&alice.settings, &bob.settings, &ChannelParams::symmetric(10.0))?;
                let problem = PhaseErrorProblem { gram: signal_gram(&alice, &bob), detection: Detection::Exact(stats.p_pass), use_mismatch: true };
                let b = max_phase_error_with(&problem, tol)?;
                gap = gap.max(b.duality_gap.abs());
                res = res.max(b.max_residual);
                if b.status != Status::Optimal || b.duality_gap.abs() > GAP_LIMIT || b.max_residual > RESIDUAL_LIMIT {
                    bad += 1;
                }
            }
            Ok((bad == 0, gap.max(res), format!("BB84 at 10 km, three models: gap {gap:.1e}, residual {res:.1e}")))
        })(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_enumeration_on_a_cube() {
        assert!((vertex_optimum(&[1.0, 1.0], &[(vec![1.0, 1.0], 1.5)]) - 1.5).abs() < 1e-12);
        assert!((vertex_optimum(&[1.0, -1.0], &[]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_vectors_reproduce_the_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.3, 0.4), C64::new(0.3, -0.4), C64::new(1.0, 0.0)]);
        let v = gram_vectors(&g);
        assert!((v.adjoint() * &v - g).norm() < 1e-12);
    }

    #[test]
    fn planted_gains_of_constant_yield() {
        let y = vec![vec![0.25; 30]; 30];
        for q in planted_gains(&y, &[0.1, 0.6]) {
            assert!((q - 0.25).abs() < 1e-12);
        }
    }
}
