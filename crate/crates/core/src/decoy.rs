//! Decoy-state linear programs bounding the single-photon pass probabilities.
//!
//! Bounds are pass probabilities given that Alice sent the `m`-photon and Bob
//! the `n`-photon component of their pulses, each accompanied by its leakage
//! state; the leakage light does not change the linear relations.

use conic::{solve_lp, Relation, Sense, Status};
use rayon::prelude::*;

use crate::detection::DetectionTable;
use crate::error::{invalid, Error, Result};
use crate::LinearProgram;

/// Poisson weight of the `(m, n)` photon-number pair.
pub type WeightFn = fn(mu: f64, nu: f64, m: usize, n: usize) -> f64;

pub fn poisson_weight(mu: f64, nu: f64, m: usize, n: usize) -> f64 {
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    (-(mu + nu)).exp() * mu.powi(m as i32) * nu.powi(n as i32) / (fact(m) * fact(n))
}

/// Rows whose photon-number tail is below this are imposed as equalities;
/// a thinner slab leaves the LP without an interior in double precision.
pub const MERGE_TAIL: f64 = 1e-9;

/// Variable index of `p_{m,n}`.
pub fn var_index(n_max: usize, m: usize, n: usize) -> usize {
    m * (n_max + 1) + n
}

/// LP over `p_{m,n}`, `0 <= m, n <= n_max`, whose objective selects `target`.
pub fn build_decoy_lp(table: &DetectionTable, setting: (usize, usize), n_max: usize, target: (usize, usize)) -> Result<LinearProgram> {
    build_decoy_lp_with(table, setting, n_max, target, poisson_weight)
}

/// [`build_decoy_lp`] with a caller-supplied weight function.
pub fn build_decoy_lp_with(table: &DetectionTable, setting: (usize, usize), n_max: usize, target: (usize, usize), weight: WeightFn) -> Result<LinearProgram> {
    if target.0 > n_max || target.1 > n_max {
        return Err(invalid(format!("target {target:?} exceeds the photon cutoff {n_max}")));
    }
    let (a, b) = setting;
    if a >= table.alice.len() || b >= table.bob.len() {
        return Err(invalid(format!("setting {setting:?} not in the detection table")));
    }
    let nv = (n_max + 1) * (n_max + 1);
    let mut objective = vec![0.0; nv];
    objective[var_index(n_max, target.0, target.1)] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for (k, &mu) in table.intensities_a.iter().enumerate() {
        for (l, &nu) in table.intensities_b.iter().enumerate() {
            let q = table.get(k, l, a, b);
            let mut row = vec![0.0; nv];
            for m in 0..=n_max {
                for n in 0..=n_max {
                    row[var_index(n_max, m, n)] = weight(mu, nu, m, n);
                }
            }
            let tail = 1.0 - row.iter().sum::<f64>();
            if tail < MERGE_TAIL {
                lp.add_row(row, Relation::Eq, (q - 0.5 * tail.max(0.0)).max(0.0));
            } else {
                lp.add_row(row.clone(), Relation::Le, q);
                lp.add_row(row, Relation::Ge, q - tail);
            }
        }
    }
    Ok(lp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoyBounds {
    pub n_max: usize,
    pub n_alice: usize,
    pub n_bob: usize,
    /// `(p_lower, p_upper)` per setting pair, row-major.
    pub bounds: Vec<(f64, f64)>,
    /// Largest duality gap among the solves.
    pub max_gap: f64,
    pub max_residual: f64,
}

impl DecoyBounds {
    pub fn get(&self, a: usize, b: usize) -> (f64, f64) {
        self.bounds[a * self.n_bob + b]
    }
}

/// Rigorous trace bound for the lowered decoy LP: every shifted variable and
/// its box complement sum to one, and each row slack is at most one.
fn trace_bound(lp: &LinearProgram) -> f64 {
    lp.num_vars() as f64 + lp.rows.len() as f64
}

fn certified(lp: &LinearProgram, sense: Sense) -> Result<(f64, f64, f64)> {
    let sol = solve_lp(lp, sense)?;
    match sol.status {
        Status::Optimal => Ok((sol.certified_bound(trace_bound(lp)), sol.duality_gap, sol.max_residual)),
        Status::Infeasible => Err(Error::Inconsistent("decoy linear program is infeasible; the detection table is inconsistent".into())),
        s => Err(Error::Solver(format!("decoy linear program ended with {s:?}"))),
    }
}

pub fn bound_single_photon_yields(table: &DetectionTable, n_max: usize) -> Result<DecoyBounds> {
    bound_single_photon_yields_with(table, n_max, poisson_weight)
}

pub fn bound_single_photon_yields_with(table: &DetectionTable, n_max: usize, weight: WeightFn) -> Result<DecoyBounds> {
    if n_max < 1 {
        return Err(invalid("photon cutoff must be at least 1"));
    }
    let (na, nb) = (table.alice.len(), table.bob.len());
    let results: Vec<Result<(f64, f64, f64, f64)>> = (0..na * nb)
        .into_par_iter()
        .map(|idx| {
            let lp = build_decoy_lp_with(table, (idx / nb, idx % nb), n_max, (1, 1), weight)?;
            let (lo, gap_lo, res_lo) = certified(&lp, Sense::Minimize)?;
            let (hi, gap_hi, res_hi) = certified(&lp, Sense::Maximize)?;
            let lo = lo.clamp(0.0, 1.0);
            let hi = hi.clamp(lo, 1.0);
            Ok((lo, hi, gap_lo.max(gap_hi), res_lo.max(res_hi)))
        })
        .collect();
    let mut bounds = Vec::with_capacity(na * nb);
    let (mut max_gap, mut max_residual) = (0.0f64, 0.0f64);
    for r in results {
        let (lo, hi, gap, res) = r?;
        bounds.push((lo, hi));
        max_gap = max_gap.max(gap);
        max_residual = max_residual.max(res);
    }
    Ok(DecoyBounds { n_max, n_alice: na, n_bob: nb, bounds, max_gap, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{party_settings, protocol_states, Party, Protocol};

    fn table(ints: &[f64], q: f64) -> DetectionTable {
        let states = protocol_states(&Protocol::ThreeState, 0.0, None).unwrap();
        let s = party_settings(&states[..2], Party::Alice);
        let cells = ints.len() * ints.len() * 4;
        DetectionTable::from_values(ints.to_vec(), ints.to_vec(), s.clone(), s, vec![q; cells]).unwrap()
    }

    #[test]
    fn lp_shape_matches_grid() {
        let t = table(&[0.05, 0.1, 0.6], 0.01);
        let lp = build_decoy_lp(&t, (0, 0), 10, (1, 1)).unwrap();
        assert_eq!(lp.rows.len(), 9);
        assert!(lp.rows.iter().all(|r| r.relation == Relation::Eq));
        assert_eq!(lp.num_vars(), 121);
        assert!(lp.bounds.iter().all(|b| *b == conic::VarBounds::unit()));
    }

    #[test]
    fn smallest_instance() {
        let t = table(&[0.0], 0.0);
        let lp = build_decoy_lp(&t, (0, 0), 0, (0, 0)).unwrap();
        assert_eq!(lp.rows.len(), 1);
        assert_eq!(lp.num_vars(), 1);
        assert!(build_decoy_lp(&t, (0, 0), 0, (1, 1)).is_err());
    }

    #[test]
    fn weight_formula() {
        assert!((poisson_weight(0.1, 0.1, 1, 1) - (-0.2f64).exp() * 0.01).abs() < 1e-17);
    }

    #[test]
    fn zero_table_bounds_are_tiny() {
        let b = bound_single_photon_yields(&table(&[0.05, 0.1, 0.6], 0.0), 10).unwrap();
        for &(lo, hi) in &b.bounds {
            assert!(lo >= 0.0 && hi <= 1e-6, "{lo} {hi}");
        }
    }

    #[test]
    fn vacuum_only_statistics_leave_single_photons_free() {
        let b = bound_single_photon_yields(&table(&[0.0], 0.0), 1).unwrap();
        let (lo, hi) = b.get(0, 0);
        assert!(lo.abs() < 1e-7 && (hi - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inconsistent_table_is_rejected() {
        let states = protocol_states(&Protocol::ThreeState, 0.0, None).unwrap();
        let s = party_settings(&states[..2], Party::Alice);
        let mut q = vec![0.0; 2 * 2 * 4];
        // Vacuum pair says p_00 = 1, the bright pair says almost nothing passes.
        for cell in 0..4 {
            q[cell] = 1.0;
        }
        let t = DetectionTable::from_values(vec![0.0, 5.0], vec![0.0, 5.0], s.clone(), s, q).unwrap();
        assert!(matches!(bound_single_photon_yields(&t, 3), Err(Error::Inconsistent(_))));
    }
}
