use conic::{solve_lp, solve_sdp, LinearForm, LinearProgram, Relation, SemidefiniteProgram, Sense, Status};
use proptest::prelude::*;

fn lp_strategy() -> impl Strategy<Value = LinearProgram<f64>> {
    (2usize..5, 1usize..6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), m),
            prop::collection::vec(0.05f64..1.0, m),
        )
            .prop_map(|(objective, rows, slack)| {
                let mut lp = LinearProgram::new(objective);
                // Rows pass through the box centre with positive slack, so the
                // feasible set is never empty.
                for (a, s) in rows.into_iter().zip(slack) {
                    let centre: f64 = a.iter().sum::<f64>() * 0.5;
                    lp.add_row(a, Relation::Le, centre + s);
                }
                lp
            })
    })
}

/// The LP restated over a diagonal matrix variable.
fn as_diagonal_sdp(lp: &LinearProgram<f64>) -> SemidefiniteProgram<f64> {
    let n = lp.num_vars();
    let mut obj = LinearForm::new();
    for (j, &c) in lp.objective.iter().enumerate() {
        obj.add(j, j, c);
    }
    let mut sdp = SemidefiniteProgram::new(n, obj);
    for r in &lp.rows {
        let mut f = LinearForm::new();
        for (j, &a) in r.coefficients.iter().enumerate() {
            f.add(j, j, a);
        }
        sdp.add_constraint(f, r.relation, r.bound);
    }
    for j in 0..n {
        let mut f = LinearForm::new();
        f.add(j, j, 1.0);
        sdp.add_constraint(f, Relation::Le, 1.0);
        for k in (j + 1)..n {
            let mut f = LinearForm::new();
            f.add(j, k, 1.0);
            sdp.add_constraint(f, Relation::Eq, 0.0);
        }
    }
    sdp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weak_duality_and_feasibility(lp in lp_strategy()) {
        let sol = solve_lp(&lp, Sense::Maximize).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        prop_assert!(sol.dual_value + 1e-9 >= sol.primal_value);
        prop_assert!(lp.max_violation(sol.primal_point.as_vector().unwrap().as_slice()) <= 1e-8);
    }

    #[test]
    fn objective_scaling(lp in lp_strategy(), scale in 0.1f64..20.0) {
        let base = solve_lp(&lp, Sense::Maximize).unwrap();
        let mut scaled = lp.clone();
        for c in &mut scaled.objective {
            *c *= scale;
        }
        let sol = solve_lp(&scaled, Sense::Maximize).unwrap();
        let tol = 1e-7 * scale.max(1.0) * (1.0 + base.primal_value.abs());
        prop_assert!((sol.primal_value - scale * base.primal_value).abs() <= tol);
        prop_assert!((sol.dual_value - scale * base.dual_value).abs() <= tol);
    }

    #[test]
    fn diagonal_sdp_agrees_with_lp(lp in lp_strategy()) {
        let a = solve_lp(&lp, Sense::Maximize).unwrap();
        let b = solve_sdp(&as_diagonal_sdp(&lp), Sense::Maximize).unwrap();
        prop_assert_eq!(b.status, Status::Optimal);
        prop_assert!((a.primal_value - b.primal_value).abs() <= 1e-6);
        let (g, _) = b.primal_point.as_matrix().unwrap();
        prop_assert!(g.clone().symmetric_eigen().eigenvalues.min() >= -1e-9);
    }
}
