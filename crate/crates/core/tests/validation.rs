use mdi_leak::decoy::poisson_weight;
use mdi_leak::validate::{run_validation, ValidateOptions};

fn passed(report: &mdi_leak::validate::ValidationReport, name: &str) -> bool {
    report.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name}")).passed
}

#[test]
fn default_suite_passes() {
    let report = run_validation(&ValidateOptions::default());
    assert!(report.all_passed(), "{report}");
    assert_eq!(report.checks.len(), 7);
}

fn inflated_weight(mu: f64, nu: f64, m: usize, n: usize) -> f64 {
    let w = poisson_weight(mu, nu, m, n);
    if (m, n) == (1, 1) { 1.1 * w } else { w }
}

#[test]
fn mutated_decoy_weight_is_caught() {
    let report = run_validation(&ValidateOptions { decoy_weight: inflated_weight, ..Default::default() });
    assert!(!passed(&report, "decoy-brackets"), "{report}");
    assert!(passed(&report, "fock-oracle"));
}

#[test]
fn loose_gap_tolerance_is_caught() {
    let mut opts = ValidateOptions::default();
    opts.tolerances.gap = 1e-3;
    let report = run_validation(&opts);
    assert!(!passed(&report, "solver-certificates"), "{report}");
}
