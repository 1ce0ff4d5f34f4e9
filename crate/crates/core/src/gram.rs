//! Joint signal Gram matrix of Alice's and Bob's prepared states.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::leakage::{leakage_overlap, LeakageSpec};
use crate::states::{encoded_overlap, Setting};
use crate::C64;

/// Gram matrix of one party's signal states (encoded qubit times leakage).
#[derive(Debug, Clone, PartialEq)]
pub struct PartyGram {
    pub settings: Vec<Setting>,
    /// `<chi_r | chi_c>` for the leakage states.
    pub leakage: DMatrix<C64>,
}

impl PartyGram {
    /// Leakage overlaps from one spec per setting.
    pub fn from_specs(settings: Vec<Setting>, specs: &[LeakageSpec]) -> Result<Self> {
        if settings.len() != specs.len() {
            return Err(Error::InvalidParameter("one leakage spec per setting required".into()));
        }
        let n = settings.len();
        let mut leakage = DMatrix::from_element(n, n, C64::new(1.0, 0.0));
        for r in 0..n {
            for c in (r + 1)..n {
                let v = leakage_overlap(&specs[r], &specs[c])?;
                leakage[(r, c)] = v;
                leakage[(c, r)] = v.conj();
            }
        }
        Ok(Self { settings, leakage })
    }

    /// Leakage overlaps supplied directly (e.g. a toy model's Fock states).
    pub fn with_leakage(settings: Vec<Setting>, leakage: DMatrix<C64>) -> Result<Self> {
        let n = settings.len();
        if leakage.nrows() != n || leakage.ncols() != n {
            return Err(Error::InvalidParameter("leakage overlap matrix has the wrong size".into()));
        }
        if !conic::is_hermitian(&leakage, 1e-12) {
            return Err(Error::InvalidParameter("leakage overlap matrix is not Hermitian".into()));
        }
        Ok(Self { settings, leakage })
    }

    /// Pure qubit Gram (no leakage).
    pub fn encoded(&self) -> DMatrix<C64> {
        let n = self.settings.len();
        DMatrix::from_fn(n, n, |r, c| encoded_overlap(self.settings[r].angles, self.settings[c].angles))
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        self.encoded().component_mul(&self.leakage)
    }
}

/// Joint Gram over `(a, b)` setting pairs in row-major order `a * n_b + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGram {
    pub labels: Vec<(Setting, Setting)>,
    pub entries: DMatrix<C64>,
}

impl SignalGram {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        conic::min_eigenvalue(&self.entries).unwrap_or(f64::NAN)
    }

    /// Restriction to the listed joint indices.
    pub fn restrict(&self, keep: &[usize]) -> SignalGram {
        SignalGram {
            labels: keep.iter().map(|&k| self.labels[k]).collect(),
            entries: DMatrix::from_fn(keep.len(), keep.len(), |r, c| self.entries[(keep[r], keep[c])]),
        }
    }

    pub fn index_of(&self, a: (u8, u8), b: (u8, u8)) -> Option<usize> {
        self.labels.iter().position(|(sa, sb)| (sa.basis, sa.bit) == a && (sb.basis, sb.bit) == b)
    }
}

pub fn signal_gram(alice: &PartyGram, bob: &PartyGram) -> SignalGram {
    let ga = alice.matrix();
    let gb = bob.matrix();
    let nb = bob.settings.len();
    let n = alice.settings.len() * nb;
    let entries = DMatrix::from_fn(n, n, |r, c| ga[(r / nb, c / nb)] * gb[(r % nb, c % nb)]);
    let labels = alice.settings.iter().flat_map(|&a| bob.settings.iter().map(move |&b| (a, b))).collect();
    SignalGram { labels, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::LeakageModel;
    use crate::states::{party_settings, protocol_states, Party, Protocol};

    fn party(model: LeakageModel, n: f64, who: Party) -> PartyGram {
        let states = protocol_states(&Protocol::Bb84, 0.0, None).unwrap();
        let settings = party_settings(&states, who);
        let specs: Vec<LeakageSpec> = settings.iter().map(|s| LeakageSpec::new(model, n, s.angles)).collect();
        PartyGram::from_specs(settings, &specs).unwrap()
    }

    #[test]
    fn zero_leakage_gives_encoded_gram() {
        let a = party(LeakageModel::StaticCoherent, 0.0, Party::Alice);
        assert_eq!(a.matrix(), a.encoded());
    }

    #[test]
    fn joint_gram_invariants() {
        for m in LeakageModel::ALL {
            let g = signal_gram(&party(m, 1e-3, Party::Alice), &party(m, 1e-3, Party::Bob));
            assert_eq!(g.dim(), 16);
            for k in 0..16 {
                assert!((g.entries[(k, k)] - C64::new(1.0, 0.0)).norm() < 1e-14);
            }
            assert!(conic::is_hermitian(&g.entries, 1e-14));
            assert!(g.min_eigenvalue() >= -1e-10);
            assert!(g.entries.iter().all(|z| z.norm() <= 1.0 + 1e-14));
        }
    }
}
