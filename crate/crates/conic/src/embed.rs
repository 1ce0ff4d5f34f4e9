use nalgebra::{Complex, DMatrix};

use crate::{lit, ConicError, Scalar};

fn modulus<T: Scalar>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

pub fn is_hermitian<T: Scalar>(h: &DMatrix<Complex<T>>, tol: T) -> bool {
    h.nrows() == h.ncols()
        && (0..h.nrows()).all(|r| (r..h.ncols()).all(|c| modulus(h[(r, c)] - h[(c, r)].conj()) <= tol))
}

/// Real symmetric image `[[Re H, -Im H], [Im H, Re H]]` of a Hermitian matrix.
///
/// The map preserves positive semidefiniteness both ways and
/// `Tr(emb(A) emb(B)) = 2 Re Tr(A B)`.
pub fn hermitian_real_embedding<T: Scalar>(h: &DMatrix<Complex<T>>) -> Result<DMatrix<T>, ConicError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(ConicError::DimensionMismatch { row: 0, expected: n, found: h.ncols() });
    }
    let tol: T = lit(1e-12);
    for r in 0..n {
        for c in r..n {
            let dev = modulus(h[(r, c)] - h[(c, r)].conj());
            if dev > tol {
                return Err(ConicError::NotHermitian { row: r, col: c, deviation: dev.to_f64().unwrap_or(f64::NAN) });
            }
        }
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            out[(r, c)] = z.re;
            out[(r + n, c + n)] = z.re;
            out[(r, c + n)] = -z.im;
            out[(r + n, c)] = z.im;
        }
    }
    Ok(out)
}

/// Hermitian matrix represented by a `2n x 2n` real symmetric matrix, taking
/// the average over the two copies of each block.
pub fn real_embedding_to_hermitian<T: Scalar>(x: &DMatrix<T>) -> Result<DMatrix<Complex<T>>, ConicError> {
    let m = x.nrows();
    if x.ncols() != m || !m.is_multiple_of(2) {
        return Err(ConicError::DimensionMismatch { row: 0, expected: m, found: x.ncols() });
    }
    let n = m / 2;
    let half: T = lit(0.5);
    Ok(DMatrix::from_fn(n, n, |r, c| {
        let re = (x[(r, c)] + x[(r + n, c + n)]) * half;
        let im = (x[(r + n, c)] - x[(r, c + n)]) * half;
        Complex::new(re, im)
    }))
}

/// Smallest eigenvalue of a Hermitian matrix (via its real embedding).
pub fn min_eigenvalue<T: Scalar>(h: &DMatrix<Complex<T>>) -> Result<T, ConicError> {
    let e = hermitian_real_embedding(h)?;
    if e.nrows() == 0 {
        return Err(ConicError::EmptyDimension);
    }
    Ok(e.symmetric_eigen().eigenvalues.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn pauli_y_embedding() {
        let y = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let e = hermitian_real_embedding(&y).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(e, expected);
        let spec = e.symmetric_eigen().eigenvalues;
        let mut v: Vec<f64> = spec.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        for (a, b) in v.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(matches!(hermitian_real_embedding(&m), Err(ConicError::NotHermitian { .. })));
        assert!(!is_hermitian(&m, 1e-12));
    }

    #[test]
    fn round_trip() {
        let h = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, -0.3), c(0.5, 0.3), c(1.0, 0.0)]);
        let back = real_embedding_to_hermitian(&hermitian_real_embedding(&h).unwrap()).unwrap();
        assert!((back - &h).norm() < 1e-15);
        let lam = min_eigenvalue(&h).unwrap();
        let disc = ((2.0f64 - 1.0).powi(2) / 4.0 + 0.34).sqrt();
        assert!((lam - (1.5 - disc)).abs() < 1e-12);
    }
}
