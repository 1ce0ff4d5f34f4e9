//! Linear-programming relaxation of the phase-error problem over Pauli
//! transmission rates.
//!
//! Every joint signal is split as `a |qubit> |R> + b |perp>` where `|R>` is a
//! fixed joint leakage reference. The pass functional on the qubit subspace is
//! parametrized by `q_mn = Tr(U^dag P U sigma_m (x) sigma_n (x) |R><R|)`; the
//! remainder of each constraint is replaced by the interval spanned by the
//! negative and positive parts of its residual operator. For a single pass
//! constraint that interval is `[lambda_min(M), lambda_max(M)]` with
//! `M = [[0, a b*], [a* b, |b|^2]]`.
//!
//! Box rows `|q_mn| <= q_II` hold because `I (x) I +- sigma_m (x) sigma_n` is
//! positive semidefinite, and `q_II <= 4` because the pass operator is below
//! the identity.

use conic::{solve_lp, Relation, Sense, Status, VarBounds};
use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::gram::PartyGram;
use crate::security::{Detection, PhaseErrorBound};
use crate::states::Setting;
use crate::{LinearProgram, C64};

const PAULI: usize = 4;

/// Decomposition of one joint signal state.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitLeakageSplit {
    /// Amplitude on the qubit subspace.
    pub a: C64,
    /// Amplitude on the orthogonal leakage subspace (chosen real).
    pub b: C64,
    /// Normalized joint qubit coefficients in the key frames, index `2 qa + qb`.
    pub qubit_part: [C64; 4],
}

/// Eigenvalues of `[[0, a b*], [a* b, |b|^2]]`.
pub fn m_matrix_eigbounds(a: C64, b: C64) -> (f64, f64) {
    let b2 = b.norm_sqr();
    let root = (b2 * b2 + 4.0 * a.norm_sqr() * b2).sqrt();
    ((b2 - root) / 2.0, (b2 + root) / 2.0)
}

/// The leakage Gram of the single-photon toy: key states leak vacuum, test
/// states leak `sqrt(eps)|vac> + sqrt(1 - eps)|1>`.
pub fn toy_leakage(settings: &[Setting], epsilon: f64) -> Result<DMatrix<C64>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!("toy leakage epsilon {epsilon} outside [0, 1]")));
    }
    let n = settings.len();
    let leaky = |k: usize| settings[k].basis != 0;
    Ok(DMatrix::from_fn(n, n, |r, c| {
        let v = if r == c || (leaky(r) && leaky(c)) {
            1.0
        } else if leaky(r) || leaky(c) {
            epsilon.sqrt()
        } else {
            1.0
        };
        C64::new(v, 0.0)
    }))
}

/// Concrete vectors for one party: qubit coefficients in the key frame and
/// leakage vectors reproducing the leakage Gram.
struct PartyVectors {
    qubit: Vec<[C64; 2]>,
    leak: Vec<Vec<C64>>,
    reference: Vec<C64>,
}

impl PartyVectors {
    fn new(party: &PartyGram) -> Result<Self> {
        let s = &party.settings;
        let k0 = s.iter().position(|x| x.basis == 0).ok_or_else(|| invalid("no key-basis setting"))?;
        let k1 = s.iter().rposition(|x| x.basis == 0).filter(|&k| k != k0).ok_or_else(|| invalid("need two key-basis settings"))?;
        let frame = [s[k0].angles.jones(), s[k1].angles.jones()];
        let dot = |u: &[C64; 2], v: &[C64; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
        if dot(&frame[0], &frame[1]).norm() > 1e-9 {
            return Err(invalid("key-basis states must be orthogonal for the qubit decomposition"));
        }
        let qubit = s.iter().map(|x| {
            let j = x.angles.jones();
            [dot(&frame[0], &j), dot(&frame[1], &j)]
        }).collect();

        let eig = party.leakage.clone().symmetric_eigen();
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
        let keep: Vec<usize> = (0..s.len()).filter(|&k| eig.eigenvalues[k] > 1e-13 * top).collect();
        // Columns of sqrt(Lambda) V^dag are vectors with Gram matrix V Lambda V^dag.
        let leak: Vec<Vec<C64>> = (0..s.len())
            .map(|c| keep.iter().map(|&l| eig.eigenvectors[(c, l)].conj() * eig.eigenvalues[l].sqrt()).collect())
            .collect();
        let mut reference: Vec<C64> = leak[k0].iter().zip(&leak[k1]).map(|(x, y)| x + y).collect();
        let norm = reference.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(invalid("key-basis leakage states cancel; the reference state is undefined"));
        }
        reference.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { qubit, leak, reference })
    }

    fn dim(&self) -> usize {
        self.reference.len()
    }
}

/// Joint vectors in the ordering `(qa, qb, la, lb)`.
struct JointSpace {
    da: usize,
    db: usize,
    states: Vec<Vec<C64>>,
    /// Columns `|q> (x) |R>` spanning the qubit subspace.
    embed: DMatrix<C64>,
    splits: Vec<QubitLeakageSplit>,
}

impl JointSpace {
    fn new(alice: &PartyGram, bob: &PartyGram) -> Result<Self> {
        let va = PartyVectors::new(alice)?;
        let vb = PartyVectors::new(bob)?;
        let (da, db) = (va.dim(), vb.dim());
        let leak_dim = da * db;
        let full = 4 * leak_dim;
        let reference: Vec<C64> = (0..leak_dim).map(|l| va.reference[l / db] * vb.reference[l % db]).collect();
        let embed = DMatrix::from_fn(full, 4, |row, q| if row / leak_dim == q { reference[row % leak_dim] } else { C64::default() });
        let mut states = Vec::new();
        let mut splits = Vec::new();
        for a in 0..va.qubit.len() {
            for b in 0..vb.qubit.len() {
                let mut v = vec![C64::default(); full];
                for q in 0..4 {
                    let amp = va.qubit[a][q / 2] * vb.qubit[b][q % 2];
                    for la in 0..da {
                        for lb in 0..db {
                            v[q * leak_dim + la * db + lb] = amp * va.leak[a][la] * vb.leak[b][lb];
                        }
                    }
                }
                let overlap: C64 = (0..leak_dim).map(|l| reference[l].conj() * va.leak[a][l / db] * vb.leak[b][l % db]).sum();
                let b_amp = (0..leak_dim)
                    .map(|l| (va.leak[a][l / db] * vb.leak[b][l % db] - overlap * reference[l]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let mut qubit_part = [C64::default(); 4];
                for (q, slot) in qubit_part.iter_mut().enumerate() {
                    *slot = va.qubit[a][q / 2] * vb.qubit[b][q % 2];
                }
                splits.push(QubitLeakageSplit { a: overlap, b: C64::new(b_amp, 0.0), qubit_part });
                states.push(v);
            }
        }
        Ok(Self { da, db, states, embed, splits })
    }

    fn outer(&self, p: usize, q: usize) -> DMatrix<C64> {
        let n = self.states[p].len();
        DMatrix::from_fn(n, n, |r, c| self.states[p][r] * self.states[q][c].conj())
    }
}

fn pauli(m: usize) -> [[C64; 2]; 2] {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::default(), C64::new(0.0, 1.0));
    match m {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

/// Splits Hermitian `op` into Pauli coefficients on the qubit subspace and the
/// `(negative, positive)` eigenvalue sums of the remainder.
fn decompose(space: &JointSpace, op: &DMatrix<C64>) -> ([f64; 16], f64, f64) {
    let p = &space.embed;
    let qq = p.adjoint() * op * p;
    let rest = op - p * &qq * p.adjoint();
    let rest = (&rest + rest.adjoint()) * C64::new(0.5, 0.0);
    let eig = rest.symmetric_eigen();
    let (mut neg, mut pos) = (0.0, 0.0);
    for &l in eig.eigenvalues.iter() {
        if l > 0.0 {
            pos += l;
        } else {
            neg += l;
        }
    }
    let mut coef = [0.0; 16];
    for m in 0..PAULI {
        for n in 0..PAULI {
            let (sm, sn) = (pauli(m), pauli(n));
            let mut tr = C64::default();
            for r in 0..4 {
                for c in 0..4 {
                    tr += qq[(r, c)] * sm[c / 2][r / 2] * sn[c % 2][r % 2];
                }
            }
            coef[m * PAULI + n] = tr.re / 4.0;
        }
    }
    (coef, neg, pos)
}

pub fn qubit_leakage_splits(alice: &PartyGram, bob: &PartyGram) -> Result<Vec<QubitLeakageSplit>> {
    Ok(JointSpace::new(alice, bob)?.splits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PereiraProblem {
    pub alice: PartyGram,
    pub bob: PartyGram,
    pub detection: Detection,
    pub use_mismatch: bool,
}

/// The relaxed program plus the constants that turn its optimum into `e_ph`.
#[derive(Debug, Clone)]
pub struct PereiraLp {
    pub lp: LinearProgram,
    /// Key-basis pass mass `D`.
    pub denominator: f64,
    /// Positive part of the objective's residual operator.
    pub objective_slack: f64,
    pub splits: Vec<QubitLeakageSplit>,
}

/// Narrower two-sided rows are widened to this (a relaxation) so the LP keeps
/// an interior in double precision.
pub const MIN_SLAB: f64 = 1e-6;

pub fn build_pereira_lp(problem: &PereiraProblem) -> Result<PereiraLp> {
    let Detection::Exact(p_pass) = &problem.detection else {
        return Err(invalid("the Pauli-rate relaxation takes exact single-photon statistics"));
    };
    let (na, nb) = (problem.alice.settings.len(), problem.bob.settings.len());
    if p_pass.len() != na * nb {
        return Err(invalid(format!("{} pass probabilities for {} joint settings", p_pass.len(), na * nb)));
    }
    if let Some(p) = p_pass.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(invalid(format!("pass probability {p} outside [0, 1]")));
    }
    let space = JointSpace::new(&problem.alice, &problem.bob)?;
    let label = |j: usize| (problem.alice.settings[j / nb], problem.bob.settings[j % nb]);
    let key = |x: u8, y: u8| {
        (0..na * nb).find(|&j| {
            let (a, b) = label(j);
            a.basis == 0 && b.basis == 0 && a.bit == x && b.bit == y
        })
    };
    let mut keys = [[0usize; 2]; 2];
    for x in 0..2u8 {
        for y in 0..2u8 {
            keys[x as usize][y as usize] = key(x, y).ok_or_else(|| invalid("missing key-basis setting pair"))?;
        }
    }
    let denominator: f64 = keys.iter().flatten().map(|&j| p_pass[j]).sum();
    if denominator <= 0.0 {
        return Err(Error::Inconsistent("no key-basis round can pass".into()));
    }

    let mut target = space.outer(keys[0][0], keys[1][1]) + space.outer(keys[0][1], keys[1][0]);
    target = (&target + target.adjoint()) * C64::new(0.5, 0.0);
    let (obj, _, objective_slack) = decompose(&space, &target);
    // Variables are the Pauli rates divided by the key-basis pass mass, so
    // the optimum stays of order one at long distances.
    let mut lp = LinearProgram::new(obj.to_vec());
    let mut key_coef = [0.0; 16];
    let mut key_hi = 0.0;
    for j in 0..na * nb {
        let (a, b) = label(j);
        if !problem.use_mismatch && a.basis != b.basis {
            continue;
        }
        let (coef, neg, pos) = decompose(&space, &space.outer(j, j));
        let (lo, hi) = ((p_pass[j] - pos) / denominator, (p_pass[j] - neg) / denominator);
        if keys.iter().flatten().any(|&k| k == j) {
            key_coef.iter_mut().zip(&coef).for_each(|(s, c)| *s += c);
            key_hi += hi;
        }
        if pos - neg < 1e-14 {
            lp.add_row(coef.to_vec(), Relation::Eq, lo);
        } else if hi - lo < MIN_SLAB {
            let (mid, half) = (0.5 * (lo + hi), 0.5 * MIN_SLAB);
            lp.add_row(coef.to_vec(), Relation::Ge, mid - half);
            lp.add_row(coef.to_vec(), Relation::Le, mid + half);
        } else {
            lp.add_row(coef.to_vec(), Relation::Ge, lo);
            lp.add_row(coef.to_vec(), Relation::Le, hi);
        }
    }
    // The key rows sum to a multiple of q_II whenever both key frames are
    // orthogonal, which caps every rate far below the trivial 4 / D.
    let mut cap = 4.0 / denominator;
    if key_coef[0] > 1e-9 && key_coef[1..].iter().all(|c| c.abs() < 1e-12) {
        cap = cap.min(2.0 * key_hi / key_coef[0]);
    }
    lp.set_bounds(0, VarBounds::interval(0.0, cap));
    for v in 1..16 {
        lp.set_bounds(v, VarBounds::interval(-cap, cap));
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; 16];
            row[v] = sign;
            row[0] = -1.0;
            lp.add_row(row, Relation::Le, 0.0);
        }
    }
    debug_assert_eq!(space.da * space.db * 4, space.states[0].len());
    Ok(PereiraLp { lp, denominator, objective_slack, splits: space.splits })
}

/// Trace bound for the lowered program: each boxed variable and its
/// complement, plus every inequality slack at its largest.
fn trace_bound(lp: &LinearProgram) -> f64 {
    let boxes: f64 = lp.bounds.iter().map(|b| 2.0 * (b.upper.unwrap_or(0.0) - b.lower.unwrap_or(0.0))).sum();
    let cap = lp.bounds[0].upper.unwrap_or(0.0);
    let slacks: f64 = lp.rows.iter().map(|r| r.coefficients.iter().map(|c| cap * c.abs()).sum::<f64>() + r.bound.abs()).sum();
    boxes + slacks
}

pub fn pereira_phase_error(lp: &PereiraLp) -> Result<PhaseErrorBound> {
    let sol = solve_lp(&lp.lp, Sense::Maximize)?;
    let mut out = PhaseErrorBound {
        e_ph_upper: 0.5,
        status: sol.status,
        duality_gap: sol.duality_gap,
        max_residual: sol.max_residual,
        dual_cone_violation: sol.dual_cone_violation,
        iterations: sol.iterations,
        gram_equalities: 0,
        rank: 0,
    };
    match sol.status {
        Status::Optimal => {
            let re_t = sol.certified_bound(trace_bound(&lp.lp)) + lp.objective_slack / lp.denominator;
            out.e_ph_upper = (0.5 + re_t).clamp(0.0, 0.5);
            Ok(out)
        }
        Status::Infeasible => Err(Error::Inconsistent("Pauli-rate constraints are infeasible".into())),
        Status::Unbounded | Status::NumericalFailure => Ok(out),
    }
}
