use nalgebra::DMatrix;

use crate::{lit, ConicError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Closed interval for one LP variable; `None` is an infinite end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarBounds<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T: Scalar> VarBounds<T> {
    /// `[0, 1]`, the default for probability variables.
    pub fn unit() -> Self {
        Self { lower: Some(T::zero()), upper: Some(T::one()) }
    }

    pub fn interval(lower: T, upper: T) -> Self {
        Self { lower: Some(lower), upper: Some(upper) }
    }

    pub fn nonnegative() -> Self {
        Self { lower: Some(T::zero()), upper: None }
    }

    pub fn free() -> Self {
        Self { lower: None, upper: None }
    }

    pub fn contains(&self, v: T, slack: T) -> bool {
        self.lower.is_none_or(|lo| v >= lo - slack) && self.upper.is_none_or(|hi| v <= hi + slack)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow<T> {
    pub coefficients: Vec<T>,
    pub relation: Relation,
    pub bound: T,
}

/// `objective . x` subject to row relations and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub rows: Vec<LpRow<T>>,
    pub bounds: Vec<VarBounds<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    /// New program whose variables all live in `[0, 1]`.
    pub fn new(objective: Vec<T>) -> Self {
        let bounds = vec![VarBounds::unit(); objective.len()];
        Self { objective, rows: Vec::new(), bounds }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<T>, relation: Relation, bound: T) -> &mut Self {
        self.rows.push(LpRow { coefficients, relation, bound });
        self
    }

    pub fn set_bounds(&mut self, index: usize, bounds: VarBounds<T>) -> &mut Self {
        self.bounds[index] = bounds;
        self
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.objective.len();
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(ConicError::NonFinite("objective"));
        }
        if self.bounds.len() != n {
            return Err(ConicError::DimensionMismatch { row: usize::MAX, expected: n, found: self.bounds.len() });
        }
        for (row, r) in self.rows.iter().enumerate() {
            if r.coefficients.len() != n {
                return Err(ConicError::DimensionMismatch { row, expected: n, found: r.coefficients.len() });
            }
            if r.coefficients.iter().any(|v| !v.is_finite()) || !r.bound.is_finite() {
                return Err(ConicError::NonFinite("constraint row"));
            }
        }
        for (index, b) in self.bounds.iter().enumerate() {
            if let (Some(lo), Some(hi)) = (b.lower, b.upper) {
                if lo > hi {
                    return Err(ConicError::EmptyBounds { index });
                }
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for r in &self.rows {
            let lhs = r.coefficients.iter().zip(x).fold(T::zero(), |acc, (a, v)| acc + *a * *v);
            let v = match r.relation {
                Relation::Le => lhs - r.bound,
                Relation::Ge => r.bound - lhs,
                Relation::Eq => (lhs - r.bound).abs(),
            };
            worst = worst.max(v);
        }
        for (b, v) in self.bounds.iter().zip(x) {
            if let Some(lo) = b.lower {
                worst = worst.max(lo - *v);
            }
            if let Some(hi) = b.upper {
                worst = worst.max(*v - hi);
            }
        }
        worst
    }
}

/// Linear functional `<A, X> + sum_k w_k s_k` on a symmetric matrix `X` and
/// nonnegative scalars `s`.
///
/// `matrix` holds upper-triangle entries `(r, c, v)` with `r <= c`; an
/// off-diagonal entry stands for both `A[r][c]` and `A[c][r]`, so it
/// contributes `2 v X[r][c]`. Repeated entries add up.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm<T> {
    pub matrix: Vec<(usize, usize, T)>,
    pub scalars: Vec<(usize, T)>,
}

impl<T: Scalar> LinearForm<T> {
    pub fn new() -> Self {
        Self { matrix: Vec::new(), scalars: Vec::new() }
    }

    /// Adds `v` to `A[r][c]` and `A[c][r]` (once when `r == c`).
    pub fn add(&mut self, r: usize, c: usize, v: T) -> &mut Self {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        self.matrix.push((r, c, v));
        self
    }

    pub fn add_scalar(&mut self, index: usize, w: T) -> &mut Self {
        self.scalars.push((index, w));
        self
    }

    /// Builds the form from a dense symmetric matrix, rejecting asymmetry
    /// above `1e-12`.
    pub fn from_dense(a: &DMatrix<T>) -> Result<Self, ConicError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(ConicError::DimensionMismatch { row: 0, expected: n, found: a.ncols() });
        }
        let tol: T = lit(1e-12);
        let mut form = Self::new();
        for r in 0..n {
            for c in r..n {
                let dev = (a[(r, c)] - a[(c, r)]).abs();
                if dev > tol {
                    return Err(ConicError::NotSymmetric { row: r, col: c, deviation: dev.to_f64().unwrap_or(f64::NAN) });
                }
                let v = (a[(r, c)] + a[(c, r)]) * lit(0.5);
                if v != T::zero() {
                    form.matrix.push((r, c, v));
                }
            }
        }
        Ok(form)
    }

    /// Dense symmetric coefficient matrix of side `dim`.
    pub fn to_dense(&self, dim: usize) -> DMatrix<T> {
        let mut a = DMatrix::zeros(dim, dim);
        for &(r, c, v) in &self.matrix {
            a[(r, c)] += v;
            if r != c {
                a[(c, r)] += v;
            }
        }
        a
    }

    pub fn evaluate(&self, x: &DMatrix<T>, scalars: &[T]) -> T {
        let mut acc = T::zero();
        for &(r, c, v) in &self.matrix {
            acc += if r == c { v * x[(r, c)] } else { v * (x[(r, c)] + x[(c, r)]) };
        }
        for &(k, w) in &self.scalars {
            acc += w * scalars[k];
        }
        acc
    }

    fn check(&self, dim: usize, scalar_vars: usize) -> Result<(), ConicError> {
        for &(r, c, v) in &self.matrix {
            if r >= dim || c >= dim {
                return Err(ConicError::IndexOutOfRange { index: r.max(c), dim });
            }
            if !v.is_finite() {
                return Err(ConicError::NonFinite("matrix coefficient"));
            }
        }
        for &(k, w) in &self.scalars {
            if k >= scalar_vars {
                return Err(ConicError::IndexOutOfRange { index: k, dim: scalar_vars });
            }
            if !w.is_finite() {
                return Err(ConicError::NonFinite("scalar coefficient"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConstraint<T> {
    pub form: LinearForm<T>,
    pub relation: Relation,
    pub bound: T,
}

/// `objective(G, s) + objective_offset` over `G` PSD of side `dim` and
/// `scalar_vars` nonnegative scalars, subject to `form_i(G, s) {<=,>=,=} b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemidefiniteProgram<T> {
    pub dim: usize,
    pub scalar_vars: usize,
    pub objective: LinearForm<T>,
    pub objective_offset: T,
    pub constraints: Vec<SdpConstraint<T>>,
}

impl<T: Scalar> SemidefiniteProgram<T> {
    pub fn new(dim: usize, objective: LinearForm<T>) -> Self {
        Self { dim, scalar_vars: 0, objective, objective_offset: T::zero(), constraints: Vec::new() }
    }

    pub fn with_scalars(mut self, scalar_vars: usize) -> Self {
        self.scalar_vars = scalar_vars;
        self
    }

    pub fn add_constraint(&mut self, form: LinearForm<T>, relation: Relation, bound: T) -> &mut Self {
        self.constraints.push(SdpConstraint { form, relation, bound });
        self
    }

    pub fn count(&self, relation: Relation) -> usize {
        self.constraints.iter().filter(|c| c.relation == relation).count()
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        if self.dim == 0 {
            return Err(ConicError::EmptyDimension);
        }
        if self.constraints.is_empty() {
            return Err(ConicError::NoConstraints);
        }
        self.objective.check(self.dim, self.scalar_vars)?;
        if !self.objective_offset.is_finite() {
            return Err(ConicError::NonFinite("objective offset"));
        }
        for c in &self.constraints {
            c.form.check(self.dim, self.scalar_vars)?;
            if !c.bound.is_finite() {
                return Err(ConicError::NonFinite("constraint bound"));
            }
        }
        Ok(())
    }

    /// Largest constraint violation at `(g, s)`; PSD-ness is not included.
    pub fn max_violation(&self, g: &DMatrix<T>, s: &[T]) -> T {
        self.constraints.iter().fold(T::zero(), |worst, c| {
            let lhs = c.form.evaluate(g, s);
            let v = match c.relation {
                Relation::Le => lhs - c.bound,
                Relation::Ge => c.bound - lhs,
                Relation::Eq => (lhs - c.bound).abs(),
            };
            worst.max(v)
        })
    }
}
