//! Dense, small-scale linear and semidefinite programming.
//!
//! Both problem classes are lowered onto one cone program
//! `min <C, X>  s.t.  <A_i, X> = b_i,  X in S^n_+ x R^p_+`
//! and solved by a Mehrotra predictor-corrector interior-point method using
//! the HKM search direction. Inequalities become equalities with a
//! nonnegative slack in the orthant block.
//!
//! Every solve reports a dual objective together with the exact dual-cone
//! violation of the returned multipliers, so callers can turn the dual value
//! into a rigorous bound (see [`ConicSolution::certified_bound`]).
//!
//! All routines are generic over the scalar type; `f64` is what the rest of
//! the workspace uses.

mod dump;
mod embed;
mod error;
mod ipm;
mod lp;
mod problem;
mod sdp;
mod solution;

pub use dump::{parse_dump, write_lp, write_sdp, DumpedProblem};
pub use embed::{hermitian_real_embedding, is_hermitian, min_eigenvalue, real_embedding_to_hermitian};
pub use error::ConicError;
pub use lp::{solve_lp, solve_lp_with};
pub use problem::{LinearForm, LinearProgram, LpRow, Relation, SdpConstraint, SemidefiniteProgram, Sense, VarBounds};
pub use sdp::{solve_sdp, solve_sdp_with};
pub use solution::{ConicSolution, PrimalPoint, Status};

pub use nalgebra::{Complex, DMatrix, DVector};

/// Real scalar usable by the solvers (`f32`, `f64`).
pub trait Scalar:
    nalgebra::RealField + Copy + num_traits::FromPrimitive + num_traits::ToPrimitive + std::fmt::Display
{
}

impl<T> Scalar for T where
    T: nalgebra::RealField + Copy + num_traits::FromPrimitive + num_traits::ToPrimitive + std::fmt::Display
{
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub(crate) fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Stopping rules shared by the LP and SDP paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Absolute bound on |primal objective - dual objective|.
    pub gap: T,
    /// Bound on the largest primal (dual) equality residual, divided by
    /// `1 + max abs` of the right-hand side (cost).
    pub feasibility: T,
    /// Farkas-ray threshold used to declare infeasibility or unboundedness.
    pub infeasibility: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            gap: lit(1e-7),
            feasibility: lit(1e-8),
            infeasibility: lit(1e-8),
            max_iterations: 200,
        }
    }
}

/// Double-precision aliases.
pub type LinearProgramF64 = LinearProgram<f64>;
pub type SemidefiniteProgramF64 = SemidefiniteProgram<f64>;
pub type ConicSolutionF64 = ConicSolution<f64>;
