use nalgebra::{DMatrix, DVector};

use crate::ipm::{solve_cone, ConeProblem, ConeRow, Outcome};
use crate::{ConicError, ConicSolution, LinearForm, PrimalPoint, Relation, Scalar, SemidefiniteProgram, Sense, Status, Tolerances};

pub fn solve_sdp<T: Scalar>(sdp: &SemidefiniteProgram<T>, sense: Sense) -> Result<ConicSolution<T>, ConicError> {
    solve_sdp_with(sdp, sense, &Tolerances::default())
}

/// Solves the SDP. Dual multipliers come one per constraint, in order.
///
/// A `1 x 1` matrix variable is just a nonnegative scalar, so that case is
/// solved on the orthant alone.
pub fn solve_sdp_with<T: Scalar>(sdp: &SemidefiniteProgram<T>, sense: Sense, tol: &Tolerances<T>) -> Result<ConicSolution<T>, ConicError> {
    sdp.validate()?;
    let scalar_only = sdp.dim == 1;
    let psd_dim = if scalar_only { 0 } else { sdp.dim };
    // Orthant layout: [G (if 1x1)] [scalars] [slacks].
    let scalar_base = usize::from(scalar_only);
    let slacks = sdp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let lp_dim = scalar_base + sdp.scalar_vars + slacks;

    let lower = |form: &LinearForm<T>, row: &mut ConeRow<T>| {
        for &(r, c, v) in &form.matrix {
            if scalar_only {
                row.lp.push((0, v));
            } else {
                row.psd.push((r, c, v));
                if r != c {
                    row.psd.push((c, r, v));
                }
            }
        }
        for &(k, w) in &form.scalars {
            row.lp.push((scalar_base + k, w));
        }
    };

    let mut rows = Vec::with_capacity(sdp.constraints.len());
    let mut b = Vec::with_capacity(sdp.constraints.len());
    let mut next_slack = scalar_base + sdp.scalar_vars;
    for con in &sdp.constraints {
        let mut row = ConeRow::default();
        lower(&con.form, &mut row);
        match con.relation {
            Relation::Le => row.lp.push((next_slack, T::one())),
            Relation::Ge => row.lp.push((next_slack, -T::one())),
            Relation::Eq => {}
        }
        if con.relation != Relation::Eq {
            next_slack += 1;
        }
        rows.push(row);
        b.push(con.bound);
    }

    let sign = match sense {
        Sense::Minimize => T::one(),
        Sense::Maximize => -T::one(),
    };
    let mut obj = ConeRow::default();
    lower(&sdp.objective, &mut obj);
    let mut c_psd = DMatrix::zeros(psd_dim, psd_dim);
    let mut c_lp = DVector::zeros(lp_dim);
    for &(r, c, v) in &obj.psd {
        c_psd[(r, c)] += sign * v;
    }
    for &(k, v) in &obj.lp {
        c_lp[k] += sign * v;
    }

    let problem = ConeProblem { psd_dim, lp_dim, c_psd, c_lp, rows, b: DVector::from_vec(b) };
    let res = solve_cone(&problem, tol);

    let matrix = if scalar_only { DMatrix::from_element(1, 1, res.x_lp[0]) } else { res.x_psd.clone() };
    let scalars = DVector::from_iterator(sdp.scalar_vars, (0..sdp.scalar_vars).map(|k| res.x_lp[scalar_base + k]));
    let status = match res.outcome {
        Outcome::Optimal => Status::Optimal,
        Outcome::PrimalInfeasible => Status::Infeasible,
        Outcome::DualInfeasible => Status::Unbounded,
        Outcome::Stalled => Status::NumericalFailure,
    };
    let primal_value = sign * res.primal_obj + sdp.objective_offset;
    let dual_value = sign * res.dual_obj + sdp.objective_offset;
    Ok(ConicSolution {
        status,
        sense,
        primal_value,
        dual_value,
        primal_point: PrimalPoint::Matrix { matrix, scalars },
        dual_multipliers: res.y * sign,
        duality_gap: (primal_value - dual_value).abs(),
        max_residual: res.max_residual,
        dual_cone_violation: res.dual_cone_violation,
        iterations: res.iterations,
    })
}
