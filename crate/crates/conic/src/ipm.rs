//! Infeasible-start primal-dual path following on `S^n_+ x R^p_+`.

use nalgebra::{DMatrix, DVector};

use crate::{lit, Scalar, Tolerances};

/// One equality row. `psd` lists every nonzero of the symmetric coefficient
/// matrix in both orientations, so `<A, X> = sum v X[r][c]` over the list.
#[derive(Debug, Clone)]
pub(crate) struct ConeRow<T> {
    pub psd: Vec<(usize, usize, T)>,
    pub lp: Vec<(usize, T)>,
}

impl<T> Default for ConeRow<T> {
    fn default() -> Self {
        Self { psd: Vec::new(), lp: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConeProblem<T> {
    pub psd_dim: usize,
    pub lp_dim: usize,
    pub c_psd: DMatrix<T>,
    pub c_lp: DVector<T>,
    pub rows: Vec<ConeRow<T>>,
    pub b: DVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct ConeResult<T> {
    pub outcome: Outcome,
    pub x_psd: DMatrix<T>,
    pub x_lp: DVector<T>,
    pub y: DVector<T>,
    pub primal_obj: T,
    pub dual_obj: T,
    pub max_residual: T,
    pub dual_cone_violation: T,
    pub iterations: usize,
}

impl<T: Scalar> ConeProblem<T> {
    fn apply(&self, x_psd: &DMatrix<T>, x_lp: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|row| row_dot(row, x_psd, x_lp)))
    }

    fn adjoint(&self, y: &DVector<T>) -> (DMatrix<T>, DVector<T>) {
        let mut m = DMatrix::zeros(self.psd_dim, self.psd_dim);
        let mut v = DVector::zeros(self.lp_dim);
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == T::zero() {
                continue;
            }
            for &(r, c, a) in &row.psd {
                m[(r, c)] += yi * a;
            }
            for &(k, a) in &row.lp {
                v[k] += yi * a;
            }
        }
        (m, v)
    }

    fn objective(&self, x_psd: &DMatrix<T>, x_lp: &DVector<T>) -> T {
        self.c_psd.dot(x_psd) + self.c_lp.dot(x_lp)
    }

    /// Exact dual slack `C - A^T y`, reduced to its most negative eigenvalue
    /// or entry (returned as a nonnegative violation).
    fn dual_cone_violation(&self, y: &DVector<T>) -> T {
        let (aty, aty_lp) = self.adjoint(y);
        let mut worst = T::zero();
        if self.psd_dim > 0 {
            let s = symmetrize(&(&self.c_psd - aty));
            worst = worst.max(-min_eig(&s));
        }
        for k in 0..self.lp_dim {
            worst = worst.max(aty_lp[k] - self.c_lp[k]);
        }
        worst
    }
}

fn row_dot<T: Scalar>(row: &ConeRow<T>, x_psd: &DMatrix<T>, x_lp: &DVector<T>) -> T {
    let mut acc = T::zero();
    for &(r, c, a) in &row.psd {
        acc += a * x_psd[(r, c)];
    }
    for &(k, a) in &row.lp {
        acc += a * x_lp[k];
    }
    acc
}

fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

fn min_eig<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b))
}

fn max_abs<T: Scalar>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::zero(), |a, b| a.max(b.abs()))
}

fn big<T: Scalar>() -> T {
    lit(1e30)
}

/// Largest `alpha` keeping `X + alpha dX` PSD, given the Cholesky factor of `X`.
fn psd_step<T: Scalar>(l: &DMatrix<T>, d: &DMatrix<T>) -> T {
    if l.nrows() == 0 {
        return big();
    }
    let Some(z) = l.solve_lower_triangular(d) else { return T::zero() };
    let Some(w) = l.solve_lower_triangular(&z.transpose()) else { return T::zero() };
    let lam = min_eig(&symmetrize(&w));
    if lam >= T::zero() {
        big()
    } else {
        -T::one() / lam
    }
}

fn lp_step<T: Scalar>(x: &DVector<T>, d: &DVector<T>) -> T {
    x.iter().zip(d.iter()).filter(|(_, &di)| di < T::zero()).fold(big(), |acc, (&xi, &di)| acc.min(-xi / di))
}

struct Direction<T> {
    dx: DMatrix<T>,
    dx_lp: DVector<T>,
    dy: DVector<T>,
    ds: DMatrix<T>,
    ds_lp: DVector<T>,
}

/// Schur complement `M_ij = <A_i, X A_j S^-1> + sum_k a_ik a_jk x_k / s_k`.
fn schur<T: Scalar>(p: &ConeProblem<T>, x: &DMatrix<T>, s_inv: &DMatrix<T>, x_lp: &DVector<T>, s_lp: &DVector<T>) -> DMatrix<T> {
    let m = p.rows.len();
    let n = p.psd_dim;
    let mut out = DMatrix::zeros(m, m);
    let mut rows_j: Vec<usize> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    let mut scatter = DVector::zeros(p.lp_dim);
    for j in 0..m {
        let row = &p.rows[j];
        if !row.psd.is_empty() {
            // T_j = A_j S^-1 restricted to the rows A_j touches, then G_j = X T_j.
            rows_j.clear();
            for &(r, _, _) in &row.psd {
                if slot[r] == usize::MAX {
                    slot[r] = rows_j.len();
                    rows_j.push(r);
                }
            }
            let mut t = DMatrix::zeros(rows_j.len(), n);
            for &(r, c, a) in &row.psd {
                let k = slot[r];
                for col in 0..n {
                    t[(k, col)] += a * s_inv[(c, col)];
                }
            }
            let mut xsub = DMatrix::zeros(n, rows_j.len());
            for (k, &r) in rows_j.iter().enumerate() {
                xsub.set_column(k, &x.column(r));
            }
            let g = xsub * t;
            for &r in &rows_j {
                slot[r] = usize::MAX;
            }
            for i in j..m {
                let mut acc = T::zero();
                for &(a_r, a_c, v) in &p.rows[i].psd {
                    acc += v * g[(a_c, a_r)];
                }
                out[(i, j)] += acc;
            }
        }
        if !row.lp.is_empty() {
            for &(k, a) in &row.lp {
                scatter[k] += a * x_lp[k] / s_lp[k];
            }
            for i in j..m {
                let mut acc = T::zero();
                for &(k, a) in &p.rows[i].lp {
                    acc += a * scatter[k];
                }
                out[(i, j)] += acc;
            }
            for &(k, _) in &row.lp {
                scatter[k] = T::zero();
            }
        }
    }
    for j in 0..m {
        for i in (j + 1)..m {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

/// Cholesky of the Schur complement, adding diagonal regularization when the
/// matrix is numerically singular.
fn factor_schur<T: Scalar>(m: &DMatrix<T>) -> Option<nalgebra::Cholesky<T, nalgebra::Dyn>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch);
    }
    let scale = (0..m.nrows()).fold(T::zero(), |a, i| a.max(m[(i, i)].abs())).max(lit(1e-300));
    let mut delta = scale * lit(1e-14);
    for _ in 0..12 {
        let mut reg = m.clone();
        for i in 0..m.nrows() {
            reg[(i, i)] += delta;
        }
        if let Some(ch) = reg.cholesky() {
            return Some(ch);
        }
        delta *= lit(10.0);
    }
    None
}

pub(crate) fn solve_cone<T: Scalar>(p: &ConeProblem<T>, tol: &Tolerances<T>) -> ConeResult<T> {
    let n = p.psd_dim;
    let q = p.lp_dim;
    let m = p.rows.len();
    let nu: T = lit((n + q).max(1) as f64);

    // Identity-scaled start, sized from the data norms.
    let sqrt_nu = nu.sqrt();
    let mut xi = sqrt_nu.max(lit(10.0));
    let mut eta = xi;
    let c_norm = (p.c_psd.norm_squared() + p.c_lp.norm_squared()).sqrt();
    for (row, &bi) in p.rows.iter().zip(p.b.iter()) {
        let a_norm = row.psd.iter().map(|e| e.2 * e.2).chain(row.lp.iter().map(|e| e.1 * e.1)).fold(T::zero(), |a, b| a + b).sqrt();
        xi = xi.max(sqrt_nu * (T::one() + bi.abs()) / (T::one() + a_norm));
        eta = eta.max(a_norm);
    }
    eta = eta.max(c_norm);

    let mut x = DMatrix::<T>::identity(n, n) * xi;
    let mut x_lp = DVector::<T>::from_element(q, xi);
    let mut s = DMatrix::<T>::identity(n, n) * eta;
    let mut s_lp = DVector::<T>::from_element(q, eta);
    let mut y = DVector::<T>::zeros(m);

    // Residuals are measured relative to the data scale.
    let b_scale = T::one() + max_abs(p.b.iter().copied());
    let c_scale = T::one() + max_abs(p.c_psd.iter().copied()).max(max_abs(p.c_lp.iter().copied()));

    let mut stalled = 0usize;
    let mut outcome = Outcome::Stalled;
    let mut iterations = 0usize;
    let mut last_resid = T::zero();

    for iter in 0..=tol.max_iterations {
        iterations = iter;
        let (aty, aty_lp) = p.adjoint(&y);
        let rd = &p.c_psd - &aty - &s;
        let rd_lp = &p.c_lp - &aty_lp - &s_lp;
        let ax = p.apply(&x, &x_lp);
        let rp = &p.b - &ax;
        let pobj = p.objective(&x, &x_lp);
        let dobj = p.b.dot(&y);
        let err_p = max_abs(rp.iter().copied()) / b_scale;
        let err_d = max_abs(rd.iter().copied()).max(max_abs(rd_lp.iter().copied())) / c_scale;
        last_resid = err_p.max(err_d);

        if (pobj - dobj).abs() <= tol.gap && err_p <= tol.feasibility && err_d <= tol.feasibility {
            outcome = Outcome::Optimal;
            break;
        }
        // Farkas rays: y / b'y certifies primal infeasibility, X / (-C.X)
        // certifies dual infeasibility.
        if dobj > T::zero() {
            let ray = ((&aty + &s).norm_squared() + (&aty_lp + &s_lp).norm_squared()).sqrt();
            if ray / dobj < tol.infeasibility {
                outcome = Outcome::PrimalInfeasible;
                break;
            }
        }
        if pobj < T::zero() {
            let ray = ax.norm();
            if ray / (-pobj) < tol.infeasibility {
                outcome = Outcome::DualInfeasible;
                break;
            }
        }
        if iter == tol.max_iterations {
            break;
        }

        let mu = (x.dot(&s) + x_lp.dot(&s_lp)) / nu;
        let Some(chol_s) = s.clone().cholesky() else { break };
        let Some(chol_x) = x.clone().cholesky() else { break };
        let s_inv = chol_s.inverse();
        let l_s = chol_s.l();
        let l_x = chol_x.l();

        let mmat = schur(p, &x, &s_inv, &x_lp, &s_lp);
        let Some(mchol) = factor_schur(&mmat) else { break };

        let xrds = &x * &rd * &s_inv;
        let xrds_lp = x_lp.component_mul(&rd_lp).component_div(&s_lp);

        let direction = |rc: &DMatrix<T>, rc_lp: &DVector<T>| -> Direction<T> {
            let h = &rp - p.apply(&(rc - &xrds), &(rc_lp - &xrds_lp));
            // Refine against the operator itself; the formed Schur matrix
            // loses accuracy once S becomes ill-conditioned.
            let mut dy = mchol.solve(&h);
            for _ in 0..5 {
                let (a_psd, a_lp) = p.adjoint(&dy);
                let m_dy = p.apply(&symmetrize(&(&x * &a_psd * &s_inv)), &x_lp.component_mul(&a_lp).component_div(&s_lp));
                dy += mchol.solve(&(&h - m_dy));
            }
            let (atdy, atdy_lp) = p.adjoint(&dy);
            let ds = &rd - atdy;
            let ds_lp = &rd_lp - atdy_lp;
            let dx = rc - symmetrize(&(&x * &ds * &s_inv));
            let dx_lp = rc_lp - x_lp.component_mul(&ds_lp).component_div(&s_lp);
            Direction { dx, dx_lp, dy, ds, ds_lp }
        };

        // Predictor.
        let aff = direction(&(-&x), &(-&x_lp));
        let ap_aff = T::one().min(psd_step(&l_x, &aff.dx).min(lp_step(&x_lp, &aff.dx_lp)));
        let ad_aff = T::one().min(psd_step(&l_s, &aff.ds).min(lp_step(&s_lp, &aff.ds_lp)));
        let mu_aff = ((&x + &aff.dx * ap_aff).dot(&(&s + &aff.ds * ad_aff))
            + (&x_lp + &aff.dx_lp * ap_aff).dot(&(&s_lp + &aff.ds_lp * ad_aff)))
            / nu;
        let ratio = (mu_aff / mu).max(T::zero()).min(T::one());
        let expo = lit::<T>(3.0).min((ap_aff.min(ad_aff) * ap_aff.min(ad_aff) * lit(3.0)).max(T::one()));
        let sigma = ratio.powf(expo).min(T::one());

        // Corrector.
        let rc = &s_inv * (sigma * mu) - &x - symmetrize(&(&aff.dx * &aff.ds * &s_inv));
        let rc_lp = s_lp.map(|v| sigma * mu / v) - &x_lp - aff.dx_lp.component_mul(&aff.ds_lp).component_div(&s_lp);
        let dir = direction(&rc, &rc_lp);

        let tau = (lit::<T>(0.9) + lit::<T>(0.09) * ap_aff.min(ad_aff)).min(lit(0.99));
        let ap = T::one().min(tau * psd_step(&l_x, &dir.dx).min(lp_step(&x_lp, &dir.dx_lp)));
        let ad = T::one().min(tau * psd_step(&l_s, &dir.ds).min(lp_step(&s_lp, &dir.ds_lp)));

        x = symmetrize(&(&x + &dir.dx * ap));
        x_lp += &dir.dx_lp * ap;
        y += &dir.dy * ad;
        s = symmetrize(&(&s + &dir.ds * ad));
        s_lp += &dir.ds_lp * ad;

        if ap.max(ad) < lit(1e-10) {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        } else {
            stalled = 0;
        }
    }

    let primal_obj = p.objective(&x, &x_lp);
    let dual_obj = p.b.dot(&y);
    let dual_cone_violation = p.dual_cone_violation(&y);
    ConeResult { outcome, x_psd: x, x_lp, y, primal_obj, dual_obj, max_residual: last_resid, dual_cone_violation, iterations }
}
