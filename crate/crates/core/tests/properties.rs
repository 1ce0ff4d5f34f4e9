mod common;

use mdi_leak::detection::{single_photon_pass_probs, ChannelParams};
use mdi_leak::gram::{signal_gram, PartyGram};
use mdi_leak::leakage::{leakage_overlap, LeakageModel, LeakageSpec};
use mdi_leak::pereira::{build_pereira_lp, pereira_phase_error, toy_leakage, PereiraProblem};
use mdi_leak::report::write_csv;
use mdi_leak::scenario::{run_scenario, Leakage, RunOptions, ScenarioConfig};
use mdi_leak::security::{max_phase_error, Detection, PhaseErrorProblem};
use mdi_leak::states::{party_settings, protocol_states, Party, PolarizationAngles, Protocol};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = LeakageModel> {
    prop::sample::select(LeakageModel::ALL.to_vec())
}

fn protocol() -> impl Strategy<Value = Protocol> {
    prop::sample::select(vec![Protocol::Bb84, Protocol::ThreeState])
}

fn parties(protocol: &Protocol, model: LeakageModel, alpha_sq: f64, phi: Option<f64>) -> (PartyGram, PartyGram) {
    let states = protocol_states(protocol, 0.0, phi).unwrap();
    let party = |who| {
        let settings = party_settings(&states, who);
        let specs: Vec<LeakageSpec> = settings.iter().map(|s| LeakageSpec::new(model, alpha_sq, s.angles)).collect();
        PartyGram::from_specs(settings, &specs).unwrap()
    };
    (party(Party::Alice), party(Party::Bob))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leakage_overlaps_are_contractions(m in model(), n in 0.0..2.0f64, pa in -3.1..3.1f64, pb in -3.1..3.1f64) {
        let a = LeakageSpec::new(m, n, PolarizationAngles::equatorial(pa));
        let b = LeakageSpec::new(m, n, PolarizationAngles::equatorial(pb));
        let v = leakage_overlap(&a, &b).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-12);
        prop_assert!((leakage_overlap(&b, &a).unwrap() - v.conj()).norm() < 1e-12);
    }

    #[test]
    fn joint_gram_is_psd(p in protocol(), m in model(), n in 0.0..0.5f64, phi in 0.2..3.0f64) {
        let (a, b) = parties(&p, m, n, Some(phi));
        let g = signal_gram(&a, &b);
        prop_assert!(g.min_eigenvalue() > -1e-12);
        for k in 0..g.dim() {
            prop_assert!((g.entries[(k, k)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_error_bound_is_monotone_in_leakage(p in protocol(), m in model(), n in 1e-5..1e-2f64) {
        // A larger leak only enlarges Eve's feasible set.
        let bound = |n: f64| {
            let (a, b) = parties(&p, m, n, None);
            let stats = single_photon_pass_probs(&a.settings, &b.settings, &ChannelParams::symmetric(10.0)).unwrap();
            let problem = PhaseErrorProblem { gram: signal_gram(&a, &b), detection: Detection::Exact(stats.p_pass), use_mismatch: true };
            max_phase_error(&problem).unwrap().e_ph_upper
        };
        prop_assert!(bound(n) <= bound(2.0 * n) + 1e-6);
    }

    #[test]
    fn sdp_bound_never_exceeds_pereira(eps in 0.999..1.0f64, d in 0.0..40.0f64) {
        let states = protocol_states(&Protocol::HvKeyDTest, 0.0, None).unwrap();
        let (sa, sb) = (party_settings(&states, Party::Alice), party_settings(&states, Party::Bob));
        let ga = PartyGram::with_leakage(sa.clone(), toy_leakage(&sa, eps).unwrap()).unwrap();
        let gb = PartyGram::with_leakage(sb.clone(), toy_leakage(&sb, eps).unwrap()).unwrap();
        let params = ChannelParams { detector_efficiency: 1.0, dark_count_prob: 1e-6, ..ChannelParams::symmetric(d) };
        let p = single_photon_pass_probs(&sa, &sb, &params).unwrap().p_pass;
        let sdp = max_phase_error(&PhaseErrorProblem { gram: signal_gram(&ga, &gb), detection: Detection::Exact(p.clone()), use_mismatch: true }).unwrap();
        let lp = pereira_phase_error(&build_pereira_lp(&PereiraProblem { alice: ga, bob: gb, detection: Detection::Exact(p), use_mismatch: true }).unwrap()).unwrap();
        prop_assert!(sdp.e_ph_upper <= lp.e_ph_upper + 1e-6, "sdp {} lp {}", sdp.e_ph_upper, lp.e_ph_upper);
    }
}

#[test]
fn rate_decreases_with_distance() {
    let cfg = ScenarioConfig {
        leakage: vec![Leakage::Model(LeakageModel::StaticCoherent)],
        alpha_sq: vec![1e-5],
        distances_km: (0..=8).map(|k| 15.0 * k as f64).collect(),
        ..Default::default()
    };
    let rows = run_scenario(&cfg, &RunOptions::default()).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].rate <= w[0].rate, "{} km {} > {} km {}", w[1].point.distance_km, w[1].rate, w[0].point.distance_km, w[0].rate);
    }
    assert!(rows[0].rate > 0.0);
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let cfg = ScenarioConfig {
        leakage: LeakageModel::ALL.iter().map(|&m| Leakage::Model(m)).collect(),
        alpha_sq: vec![1e-4],
        distances_km: vec![0.0, 25.0, 50.0],
        ..Default::default()
    };
    let bytes = |jobs| {
        let rows = run_scenario(&cfg, &RunOptions { conservative: false, jobs }).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        buf
    };
    let one = bytes(1);
    assert_eq!(one, bytes(4));
    assert_eq!(one, bytes(1));
}
