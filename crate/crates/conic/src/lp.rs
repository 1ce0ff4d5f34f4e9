use nalgebra::{DMatrix, DVector};

use crate::ipm::{solve_cone, ConeProblem, ConeRow, Outcome};
use crate::{ConicError, ConicSolution, LinearProgram, PrimalPoint, Relation, Scalar, Sense, Status, Tolerances};

/// How an original variable is expressed through nonnegative cone variables.
#[derive(Debug, Clone, Copy)]
enum Lift<T> {
    /// `x = offset + u`.
    Shift { offset: T, u: usize },
    /// `x = offset - u`.
    Reflect { offset: T, u: usize },
    /// `x = u_plus - u_minus`.
    Split { plus: usize, minus: usize },
}

impl<T: Scalar> Lift<T> {
    fn offset(&self) -> T {
        match *self {
            Lift::Shift { offset, .. } | Lift::Reflect { offset, .. } => offset,
            Lift::Split { .. } => T::zero(),
        }
    }

    fn terms(&self, a: T) -> [(usize, T); 2] {
        match *self {
            Lift::Shift { u, .. } => [(u, a), (usize::MAX, T::zero())],
            Lift::Reflect { u, .. } => [(u, -a), (usize::MAX, T::zero())],
            Lift::Split { plus, minus } => [(plus, a), (minus, -a)],
        }
    }

    fn value(&self, u: &DVector<T>) -> T {
        match *self {
            Lift::Shift { offset, u: k } => offset + u[k],
            Lift::Reflect { offset, u: k } => offset - u[k],
            Lift::Split { plus, minus } => u[plus] - u[minus],
        }
    }
}

pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>, sense: Sense) -> Result<ConicSolution<T>, ConicError> {
    solve_lp_with(lp, sense, &Tolerances::default())
}

/// Solves the LP with bounds and inequalities lowered to a standard-form
/// cone program over the nonnegative orthant.
///
/// Dual multipliers are reported for the lowered equality rows: first one per
/// original row, then one per doubly-bounded variable (its upper bound row).
pub fn solve_lp_with<T: Scalar>(lp: &LinearProgram<T>, sense: Sense, tol: &Tolerances<T>) -> Result<ConicSolution<T>, ConicError> {
    lp.validate()?;
    if lp.rows.is_empty() && lp.bounds.iter().all(|b| b.lower.is_none() || b.upper.is_none()) && lp.num_vars() == 0 {
        return Err(ConicError::NoConstraints);
    }

    let mut dim = 0usize;
    let mut lifts = Vec::with_capacity(lp.num_vars());
    let mut box_rows = Vec::new();
    for b in &lp.bounds {
        let lift = match (b.lower, b.upper) {
            (Some(lo), Some(hi)) => {
                let u = dim;
                box_rows.push((u, dim + 1, hi - lo));
                dim += 2;
                Lift::Shift { offset: lo, u }
            }
            (Some(lo), None) => {
                dim += 1;
                Lift::Shift { offset: lo, u: dim - 1 }
            }
            (None, Some(hi)) => {
                dim += 1;
                Lift::Reflect { offset: hi, u: dim - 1 }
            }
            (None, None) => {
                dim += 2;
                Lift::Split { plus: dim - 2, minus: dim - 1 }
            }
        };
        lifts.push(lift);
    }

    let mut rows = Vec::new();
    let mut b = Vec::new();
    for r in &lp.rows {
        let mut row = ConeRow::default();
        let mut shift = T::zero();
        for (lift, &a) in lifts.iter().zip(&r.coefficients) {
            if a == T::zero() {
                continue;
            }
            shift += a * lift.offset();
            for (k, v) in lift.terms(a) {
                if k != usize::MAX {
                    row.lp.push((k, v));
                }
            }
        }
        match r.relation {
            Relation::Le => {
                row.lp.push((dim, T::one()));
                dim += 1;
            }
            Relation::Ge => {
                row.lp.push((dim, -T::one()));
                dim += 1;
            }
            Relation::Eq => {}
        }
        rows.push(row);
        b.push(r.bound - shift);
    }
    for &(u, w, width) in &box_rows {
        rows.push(ConeRow { psd: Vec::new(), lp: vec![(u, T::one()), (w, T::one())] });
        b.push(width);
    }
    if rows.is_empty() {
        // Only one-sided bounds: add a vacuous row so the solver has a system.
        rows.push(ConeRow::default());
        b.push(T::zero());
    }

    let sign = match sense {
        Sense::Minimize => T::one(),
        Sense::Maximize => -T::one(),
    };
    let mut c = DVector::zeros(dim);
    let mut offset = T::zero();
    for (lift, &cj) in lifts.iter().zip(&lp.objective) {
        offset += cj * lift.offset();
        for (k, v) in lift.terms(cj) {
            if k != usize::MAX {
                c[k] += sign * v;
            }
        }
    }

    let problem = ConeProblem {
        psd_dim: 0,
        lp_dim: dim,
        c_psd: DMatrix::zeros(0, 0),
        c_lp: c,
        rows,
        b: DVector::from_vec(b),
    };
    let res = solve_cone(&problem, tol);
    let x = DVector::from_iterator(lifts.len(), lifts.iter().map(|l| l.value(&res.x_lp)));

    let status = match res.outcome {
        Outcome::Optimal => Status::Optimal,
        Outcome::PrimalInfeasible => Status::Infeasible,
        Outcome::DualInfeasible => Status::Unbounded,
        Outcome::Stalled => Status::NumericalFailure,
    };
    let primal_value = sign * res.primal_obj + offset;
    let dual_value = sign * res.dual_obj + offset;
    Ok(ConicSolution {
        status,
        sense,
        primal_value,
        dual_value,
        primal_point: PrimalPoint::Vector(x),
        dual_multipliers: res.y * sign,
        duality_gap: (primal_value - dual_value).abs(),
        max_residual: res.max_residual,
        dual_cone_violation: res.dual_cone_violation,
        iterations: res.iterations,
    })
}
