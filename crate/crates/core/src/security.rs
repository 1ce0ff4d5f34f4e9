//! Phase-error maximization over Gram matrices of Eve's conditional states.
//!
//! Each joint signal state `|psi_j>` evolves into `|e_j^P>|P> + |e_j^F>|F>`
//! under Eve's attack, so `<psi_j'|psi_j> = <e_j'^P|e_j^P> + <e_j'^F|e_j^F>`
//! and `<e_j^P|e_j^P>` is the pass probability of setting `j`. With Bob's key
//! bit relabeled on a singlet announcement the target Bell state is `Phi^-`
//! and
//!
//! ```text
//! e_ph = 1/2 + Re(<e_00^P|e_11^P> + <e_01^P|e_10^P>) / D,   D = sum_xy <e_xy^P|e_xy^P>.
//! ```
//!
//! The ratio is linearized exactly: with `tau = s / D` for a fixed scale `s`,
//! the variables `W_P = Y_P / D` and `W_F = s Y_F / D` turn every constraint
//! into a linear one (`s W_P + W_F = tau G`, `(L/s) tau <= W_P[j,j] <= (U/s) tau`,
//! `sum_key W_P[k,k] = 1`) and the objective into `1/2 + Re T(W_P)`.
//!
//! Both blocks are written as `F X F^dag` with `G = F F^dag` restricted to the
//! numerical range of `G`. The Gram constraint then reads
//! `s A + B = tau I`, which keeps the program strictly feasible and well
//! scaled even when the eigenvalues of `G` span many orders of magnitude.

use conic::{real_embedding_to_hermitian, solve_sdp_with, LinearForm, Relation, Sense, Status};
use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::gram::SignalGram;
use crate::{SemidefiniteProgram, SolverTolerances, C64};

/// Observed pass statistics aligned with the Gram labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Detection {
    /// Exact single-photon pass probabilities.
    Exact(Vec<f64>),
    /// Decoy-state intervals `(lower, upper)`.
    Interval(Vec<(f64, f64)>),
}

impl Detection {
    fn interval(&self, j: usize) -> (f64, f64) {
        match self {
            Detection::Exact(p) => (p[j], p[j]),
            Detection::Interval(b) => b[j],
        }
    }

    fn len(&self) -> usize {
        match self {
            Detection::Exact(p) => p.len(),
            Detection::Interval(b) => b.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseErrorProblem {
    pub gram: SignalGram,
    pub detection: Detection,
    /// Include Gram entries and statistics of mismatched-basis settings.
    pub use_mismatch: bool,
}

/// Eigenvalues below this fraction of the largest are treated as zero when
/// confining Eve's Gram blocks to the range of the signal Gram.
pub const RANGE_TOLERANCE: f64 = 1e-12;

/// The assembled SDP and what is needed to interpret its solution.
#[derive(Debug, Clone)]
pub struct PhaseErrorSdp {
    pub sdp: SemidefiniteProgram,
    /// Joint indices (into the full Gram) kept in the program.
    pub kept: Vec<usize>,
    /// Square-root factor `F` of the kept signal Gram (kept x rank).
    pub factor: DMatrix<C64>,
    pub scale: f64,
    /// Number of Gram equality constraints.
    pub gram_equalities: usize,
    /// Bound on the total trace of any feasible point, `None` when the
    /// key-basis lower bounds are all zero.
    pub trace_bound: Option<f64>,
}

impl PhaseErrorSdp {
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Eve's pass and fail Gram blocks `(Y_P, Y_F)` in physical normalization.
    pub fn recover(&self, matrix: &DMatrix<f64>, scalars: &[f64]) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
        let r = self.rank();
        let z = real_embedding_to_hermitian(matrix)?;
        let tau = scalars[0];
        if tau <= 0.0 {
            return Err(Error::Solver("normalization scalar is not positive".into()));
        }
        let v = &self.factor;
        let a = z.view((0, 0), (r, r)).into_owned();
        let b = z.view((r, r), (r, r)).into_owned();
        let yp = v * a * v.adjoint() * C64::new(self.scale / tau, 0.0);
        let yf = v * b * v.adjoint() * C64::new(1.0 / tau, 0.0);
        Ok((yp, yf))
    }
}

/// Real-embedded linear form of `Tr(H Z)` for a Hermitian `H` given by its
/// entries on the complex variable `Z` of side `n`.
struct FormBuilder {
    n: usize,
    form: LinearForm<f64>,
}

impl FormBuilder {
    fn new(n: usize) -> Self {
        Self { n, form: LinearForm::new() }
    }

    fn put(&mut self, i: usize, j: usize, m: f64) {
        if i == j {
            self.form.add(i, i, m);
        } else {
            self.form.add(i, j, m / 2.0);
        }
    }

    /// Adds `H[p][q] Z[q][p]` (real part, symmetrized over the embedding).
    fn entry(&mut self, p: usize, q: usize, h: C64) {
        let n = self.n;
        if h.re != 0.0 {
            self.put(q, p, h.re / 2.0);
            self.put(q + n, p + n, h.re / 2.0);
        }
        if h.im != 0.0 {
            self.put(q + n, p, -h.im / 2.0);
            self.put(q, p + n, h.im / 2.0);
        }
    }

    /// Adds `Tr(H Z_block)` for a dense Hermitian `h` on the block at `offset`.
    fn dense(&mut self, h: &DMatrix<C64>, offset: usize, scale: f64) {
        let cut = 1e-15 * h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for p in 0..h.nrows() {
            for q in 0..h.ncols() {
                let z = h[(p, q)];
                if z.norm() > cut {
                    self.entry(offset + p, offset + q, z * scale);
                }
            }
        }
    }

    fn scalar(&mut self, k: usize, w: f64) {
        self.form.add_scalar(k, w);
    }
}

/// `F = V sqrt(Lambda)` over the eigenvalues of `g` above the range tolerance.
fn gram_factor(g: &DMatrix<C64>) -> DMatrix<C64> {
    let n = g.nrows();
    let eig = g.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > RANGE_TOLERANCE * top).collect();
    DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])] * eig.eigenvalues[keep[c]].sqrt())
}

/// Basis-matched joint indices, or all of them with mismatch statistics.
fn kept_indices(gram: &SignalGram, use_mismatch: bool) -> Vec<usize> {
    (0..gram.dim()).filter(|&j| use_mismatch || gram.labels[j].0.basis == gram.labels[j].1.basis).collect()
}

fn key_positions(gram: &SignalGram, kept: &[usize]) -> Result<[[usize; 2]; 2]> {
    let mut out = [[usize::MAX; 2]; 2];
    for (pos, &j) in kept.iter().enumerate() {
        let (a, b) = gram.labels[j];
        if a.basis == 0 && b.basis == 0 {
            out[a.bit as usize][b.bit as usize] = pos;
        }
    }
    if out.iter().flatten().any(|&p| p == usize::MAX) {
        return Err(invalid("signal Gram lacks a key-basis setting pair"));
    }
    Ok(out)
}

pub fn build_phase_error_sdp(problem: &PhaseErrorProblem) -> Result<PhaseErrorSdp> {
    let gram = &problem.gram;
    if problem.detection.len() != gram.dim() {
        return Err(invalid(format!("{} detection entries for {} joint settings", problem.detection.len(), gram.dim())));
    }
    for j in 0..gram.dim() {
        let (lo, hi) = problem.detection.interval(j);
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(invalid(format!("pass probability bounds ({lo}, {hi}) outside [0, 1]")));
        }
        if lo > hi {
            return Err(invalid(format!("pass probability lower bound {lo} exceeds upper bound {hi}")));
        }
    }
    let kept = kept_indices(gram, problem.use_mismatch);
    let key = key_positions(gram, &kept)?;
    let keys = [key[0][0], key[0][1], key[1][0], key[1][1]];
    let bounds: Vec<(f64, f64)> = kept.iter().map(|&j| problem.detection.interval(j)).collect();
    let scale: f64 = keys.iter().map(|&k| 0.5 * (bounds[k].0 + bounds[k].1)).sum();
    if scale <= 0.0 {
        return Err(Error::Inconsistent("no key-basis round can pass".into()));
    }

    let n = kept.len();
    let g = gram.restrict(&kept).entries;
    let v = gram_factor(&g);
    let r = v.ncols();
    let zn = 2 * r;
    let tau = 0usize;

    // Objective: 1/2 + Re(W[k00, k11] + W[k01, k10]).
    let mut t_full = DMatrix::<C64>::zeros(n, n);
    for (p, q) in [(key[0][0], key[1][1]), (key[0][1], key[1][0])] {
        t_full[(q, p)] += C64::new(0.5, 0.0);
        t_full[(p, q)] += C64::new(0.5, 0.0);
    }
    let reduce = |h: &DMatrix<C64>| v.adjoint() * h * &v;
    let t_red = reduce(&t_full);
    let mut obj = FormBuilder::new(zn);
    obj.dense(&t_red, 0, 1.0);
    let mut sdp = SemidefiniteProgram::new(2 * zn, obj.form).with_scalars(1);
    sdp.objective_offset = 0.5;

    // s A + B = tau I, one real equation per real degree of freedom.
    let mut gram_equalities = 0;
    for a in 0..r {
        for b in a..r {
            let mut re = FormBuilder::new(zn);
            let mut im = FormBuilder::new(zn);
            let pairs = if a == b { vec![(a, a, C64::new(1.0, 0.0), C64::new(0.0, 0.0))] } else {
                // Re W[a,b] = Tr((E_ba + E_ab)/2 W); Im W[a,b] = Tr(-i (E_ba - E_ab)/2 W).
                vec![(b, a, C64::new(0.5, 0.0), C64::new(0.0, -0.5)), (a, b, C64::new(0.5, 0.0), C64::new(0.0, 0.5))]
            };
            for &(p, q, hre, him) in &pairs {
                re.entry(p, q, hre * scale);
                re.entry(r + p, r + q, hre);
                if a != b {
                    im.entry(p, q, him * scale);
                    im.entry(r + p, r + q, him);
                }
            }
            if a == b {
                re.scalar(tau, -1.0);
            }
            sdp.add_constraint(re.form, Relation::Eq, 0.0);
            gram_equalities += 1;
            if a != b {
                sdp.add_constraint(im.form, Relation::Eq, 0.0);
                gram_equalities += 1;
            }
        }
    }

    // Pass-probability bounds on the diagonal of W_P.
    let diag_form = |j: usize| {
        let mut h = DMatrix::<C64>::zeros(n, n);
        h[(j, j)] = C64::new(1.0, 0.0);
        let mut f = FormBuilder::new(zn);
        f.dense(&reduce(&h), 0, 1.0);
        f
    };
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        if lo == hi {
            let mut f = diag_form(j);
            f.scalar(tau, -lo / scale);
            sdp.add_constraint(f.form, Relation::Eq, 0.0);
        } else {
            let mut f = diag_form(j);
            f.scalar(tau, -lo / scale);
            sdp.add_constraint(f.form, Relation::Ge, 0.0);
            let mut f = diag_form(j);
            f.scalar(tau, -hi / scale);
            sdp.add_constraint(f.form, Relation::Le, 0.0);
        }
    }

    // Normalization of the key-basis pass mass.
    let mut h = DMatrix::<C64>::zeros(n, n);
    for &k in &keys {
        h[(k, k)] = C64::new(1.0, 0.0);
    }
    let mut norm = FormBuilder::new(zn);
    norm.dense(&reduce(&h), 0, 1.0);
    sdp.add_constraint(norm.form, Relation::Eq, 1.0);

    // 0 <= e_ph <= 1/2.
    let mut lo = FormBuilder::new(zn);
    lo.dense(&t_red, 0, 1.0);
    sdp.add_constraint(lo.form, Relation::Ge, -0.5);
    let mut hi = FormBuilder::new(zn);
    hi.dense(&t_red, 0, 1.0);
    sdp.add_constraint(hi.form, Relation::Le, 0.0);

    let key_lower: f64 = keys.iter().map(|&k| bounds[k].0).sum();
    let trace_bound = (key_lower > 0.0).then(|| {
        let tau_max = scale / key_lower;
        let max_hi = bounds.iter().fold(0.0f64, |m, b| m.max(b.1));
        // Tr A <= tau r / s and Tr B <= tau r; the real embedding doubles traces.
        let psd = 2.0 * tau_max * r as f64 * (1.0 / scale + 1.0);
        let slacks = 2.0 * n as f64 * tau_max * max_hi / scale + 1.0;
        psd + tau_max + slacks
    });

    Ok(PhaseErrorSdp { sdp, kept, factor: v, scale, gram_equalities, trace_bound })
}

/// Certified upper bound on the phase error and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseErrorBound {
    /// Dual-certified bound clipped to `[0, 1/2]`; `1/2` after a solver failure.
    pub e_ph_upper: f64,
    pub status: Status,
    pub duality_gap: f64,
    pub max_residual: f64,
    pub dual_cone_violation: f64,
    pub iterations: usize,
    pub gram_equalities: usize,
    pub rank: usize,
}

impl PhaseErrorBound {
    pub(crate) fn conservative(status: Status) -> Self {
        Self {
            e_ph_upper: 0.5,
            status,
            duality_gap: f64::NAN,
            max_residual: f64::NAN,
            dual_cone_violation: f64::NAN,
            iterations: 0,
            gram_equalities: 0,
            rank: 0,
        }
    }
}

pub fn max_phase_error(problem: &PhaseErrorProblem) -> Result<PhaseErrorBound> {
    max_phase_error_with(problem, &SolverTolerances::default())
}

pub fn max_phase_error_with(problem: &PhaseErrorProblem, tol: &SolverTolerances) -> Result<PhaseErrorBound> {
    let built = match build_phase_error_sdp(problem) {
        Ok(b) => b,
        // Without any key-basis passes there is no key; the phase error is moot.
        Err(Error::Inconsistent(_)) => return Ok(PhaseErrorBound::conservative(Status::Optimal)),
        Err(e) => return Err(e),
    };
    let sol = solve_sdp_with(&built.sdp, Sense::Maximize, tol)?;
    let mut out = PhaseErrorBound {
        e_ph_upper: 0.5,
        status: sol.status,
        duality_gap: sol.duality_gap,
        max_residual: sol.max_residual,
        dual_cone_violation: sol.dual_cone_violation,
        iterations: sol.iterations,
        gram_equalities: built.gram_equalities,
        rank: built.rank(),
    };
    match sol.status {
        Status::Optimal => {
            let bound = match built.trace_bound {
                Some(t) => sol.certified_bound(t),
                None if sol.dual_cone_violation == 0.0 => sol.dual_value,
                None => 0.5,
            };
            out.e_ph_upper = bound.clamp(0.0, 0.5);
            Ok(out)
        }
        Status::Infeasible => Err(Error::Inconsistent("phase-error constraints are infeasible for the given Gram and statistics".into())),
        Status::Unbounded | Status::NumericalFailure => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{single_photon_pass_probs, ChannelParams};
    use crate::gram::{signal_gram, PartyGram};
    use crate::states::{party_settings, protocol_states, Party, Protocol};
    use conic::PrimalPoint;

    fn qubit_problem(protocol: Protocol, delta: f64, params: &ChannelParams, use_mismatch: bool) -> PhaseErrorProblem {
        let states = protocol_states(&protocol, delta, None).unwrap();
        let a = party_settings(&states, Party::Alice);
        let b = party_settings(&states, Party::Bob);
        let n = a.len();
        let ga = PartyGram::with_leakage(a.clone(), DMatrix::from_element(n, n, C64::new(1.0, 0.0))).unwrap();
        let gb = PartyGram::with_leakage(b.clone(), DMatrix::from_element(n, n, C64::new(1.0, 0.0))).unwrap();
        let stats = single_photon_pass_probs(&a, &b, params).unwrap();
        PhaseErrorProblem { gram: signal_gram(&ga, &gb), detection: Detection::Exact(stats.p_pass), use_mismatch }
    }

    #[test]
    fn ideal_bb84_has_no_phase_error() {
        let p = qubit_problem(Protocol::Bb84, 0.0, &ChannelParams::ideal(), false);
        let b = max_phase_error(&p).unwrap();
        assert_eq!(b.status, Status::Optimal);
        assert!(b.e_ph_upper < 1e-6, "{}", b.e_ph_upper);
        assert_eq!(b.gram_equalities, b.rank * b.rank);
    }

    #[test]
    fn lossy_three_state_is_bounded_below_half() {
        let p = qubit_problem(Protocol::ThreeState, 0.0, &ChannelParams::symmetric(20.0), true);
        let b = max_phase_error(&p).unwrap();
        assert_eq!(b.status, Status::Optimal);
        assert!(b.e_ph_upper < 0.1, "{}", b.e_ph_upper);
    }

    #[test]
    fn certain_pass_empties_the_fail_block() {
        let states = protocol_states(&Protocol::Bb84, 0.0, None).unwrap();
        let a = party_settings(&states[..2], Party::Alice);
        let b = party_settings(&states[..2], Party::Bob);
        let labels = a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect();
        let gram = SignalGram { labels, entries: DMatrix::identity(4, 4) };
        let p = PhaseErrorProblem { gram, detection: Detection::Exact(vec![1.0; 4]), use_mismatch: false };
        let built = build_phase_error_sdp(&p).unwrap();
        let sol = solve_sdp_with(&built.sdp, Sense::Maximize, &SolverTolerances::default()).unwrap();
        let PrimalPoint::Matrix { matrix, scalars } = &sol.primal_point else { panic!("expected a matrix point") };
        let (yp, yf) = built.recover(matrix, scalars.as_slice()).unwrap();
        for j in 0..4 {
            assert!((yp[(j, j)].re - 1.0).abs() < 1e-6);
            assert!(yf[(j, j)].re.abs() < 1e-6);
        }
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let mut p = qubit_problem(Protocol::Bb84, 0.0, &ChannelParams::ideal(), false);
        p.detection = Detection::Exact(vec![0.5; 3]);
        assert!(build_phase_error_sdp(&p).is_err());
        p.detection = Detection::Interval(vec![(0.6, 0.4); 16]);
        assert!(build_phase_error_sdp(&p).is_err());
    }

    #[test]
    fn rank_deficient_gram_is_reduced() {
        let p = qubit_problem(Protocol::Bb84, 0.0, &ChannelParams::symmetric(5.0), false);
        let built = build_phase_error_sdp(&p).unwrap();
        assert_eq!(built.kept.len(), 8);
        assert_eq!(built.rank(), 4);
        assert_eq!(built.gram_equalities, 16);
    }
}
