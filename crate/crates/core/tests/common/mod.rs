//! Oracles shared by the integration tests. Nothing here calls the code it
//! is used to check.

#![allow(dead_code)]

use mdi_leak::gram::PartyGram;
use mdi_leak::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `P(m; mu)` by the running product, no factorial table.
pub fn poisson(mu: f64, m: usize) -> f64 {
    (1..=m).fold((-mu).exp(), |acc, k| acc * mu / k as f64)
}

/// Gains `Q_{mu,nu}` of a planted yield table `y[m][n]`, in intensity-major order.
pub fn gains(yields: &[Vec<f64>], intensities: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for &mu in intensities {
        for &nu in intensities {
            let mut q = 0.0;
            for (m, row) in yields.iter().enumerate() {
                for (n, &y) in row.iter().enumerate() {
                    q += poisson(mu, m) * poisson(nu, n) * y;
                }
            }
            out.push(q.min(1.0));
        }
    }
    out
}

/// Columns `v_i` with `v_i^dagger v_j = G_ij`, from the eigendecomposition.
pub fn factor(g: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = g.clone().symmetric_eigen();
    let n = g.nrows();
    let mut v = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        for r in 0..n {
            // Row k of V is sqrt(lam_k) times the conjugated eigenvector.
            v[(k, r)] = eig.eigenvectors[(r, k)].conj() * lam;
        }
    }
    v
}

/// Random `0 <= M <= I` of dimension `d` with top eigenvalue in `[0.2, 1)`.
pub fn pass_operator(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = a.adjoint() * &a;
    let top = m.clone().symmetric_eigen().eigenvalues.max();
    m * C64::new(rng.random_range(0.2..1.0) / top, 0.0)
}

/// Pass probabilities per setting pair and the true phase error of the attack
/// that applies `M` to the joint signal space.
///
/// The virtual state is `sum_{x,y} |x>|y> |psi_x>|psi_y>` over key settings
/// with logical bits; the phase error is the probability of even X-parity on
/// the two virtual qubits after a pass.
pub fn planted_truth(alice: &PartyGram, bob: &PartyGram, m: &DMatrix<C64>) -> (Vec<f64>, f64) {
    let (va, vb) = (factor(&alice.matrix()), factor(&bob.matrix()));
    let sig = |i: usize, j: usize| -> DVector<C64> { va.column(i).kronecker(&vb.column(j)) };
    let mut p = Vec::new();
    for i in 0..alice.settings.len() {
        for j in 0..bob.settings.len() {
            let v = sig(i, j);
            p.push((v.adjoint() * m * &v)[(0, 0)].re);
        }
    }
    let key = |g: &PartyGram, bit: u8| g.settings.iter().position(|s| s.basis == 0 && s.bit == bit).unwrap();
    // Unnormalized post-pass density on the virtual qubits, basis |x y>.
    let rho = DMatrix::from_fn(4, 4, |r, c| {
        let ket = sig(key(alice, (r / 2) as u8), key(bob, (r % 2) as u8));
        let bra = sig(key(alice, (c / 2) as u8), key(bob, (c % 2) as u8));
        (bra.adjoint() * m * ket)[(0, 0)]
    });
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]);
    let minus = DVector::from_vec(vec![C64::new(h, 0.0), C64::new(-h, 0.0)]);
    let prob = |a: &DVector<C64>, b: &DVector<C64>| {
        let v = a.kronecker(b);
        (v.adjoint() * &rho * &v)[(0, 0)].re
    };
    let even = prob(&plus, &plus) + prob(&minus, &minus);
    let total = even + prob(&plus, &minus) + prob(&minus, &plus);
    (p, even / total)
}
