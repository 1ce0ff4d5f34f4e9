use nalgebra::{DMatrix, DVector};

use crate::{Scalar, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrimalPoint<T> {
    Vector(DVector<T>),
    Matrix { matrix: DMatrix<T>, scalars: DVector<T> },
}

impl<T: Scalar> PrimalPoint<T> {
    pub fn as_vector(&self) -> Option<&DVector<T>> {
        match self {
            PrimalPoint::Vector(v) => Some(v),
            PrimalPoint::Matrix { .. } => None,
        }
    }

    pub fn as_matrix(&self) -> Option<(&DMatrix<T>, &DVector<T>)> {
        match self {
            PrimalPoint::Vector(_) => None,
            PrimalPoint::Matrix { matrix, scalars } => Some((matrix, scalars)),
        }
    }
}

/// Result of an LP or SDP solve, expressed in the caller's sense.
///
/// For a maximization `dual_value` is an upper bound on the optimum once the
/// dual multipliers are exactly dual feasible; `dual_cone_violation` measures
/// how far they are from that (the most negative eigenvalue or entry of the
/// dual slack recomputed from the multipliers, as a nonnegative number).
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution<T> {
    pub status: Status,
    pub sense: Sense,
    pub primal_value: T,
    pub dual_value: T,
    pub primal_point: PrimalPoint<T>,
    /// One multiplier per constraint of the lowered cone program.
    pub dual_multipliers: DVector<T>,
    pub duality_gap: T,
    /// Largest scaled equality residual, as in [`crate::Tolerances::feasibility`].
    pub max_residual: T,
    pub dual_cone_violation: T,
    pub iterations: usize,
}

impl<T: Scalar> ConicSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Dual bound made rigorous for any primal feasible point whose total
    /// trace (PSD trace plus the sum of the nonnegative scalars and slacks)
    /// is at most `trace_bound`.
    ///
    /// Weak duality gives `primal <= dual + violation * trace` for a
    /// maximization, and the mirror image for a minimization.
    pub fn certified_bound(&self, trace_bound: T) -> T {
        let slack = self.dual_cone_violation * trace_bound;
        match self.sense {
            Sense::Maximize => self.dual_value + slack,
            Sense::Minimize => self.dual_value - slack,
        }
    }
}
