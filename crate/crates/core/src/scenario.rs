//! Sweeps over protocol, leakage, distance and test-state settings.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::decoy::bound_single_photon_yields;
use crate::detection::{single_photon_pass_probs, wcp_detection_table, ChannelParams, DEFAULT_PHASE_GRID};
use crate::error::{invalid, Error, Result};
use crate::gram::{signal_gram, PartyGram, SignalGram};
use crate::keyrate::{key_rate_decoy, key_rate_single_photon};
use crate::leakage::{LeakageModel, LeakageSpec};
use crate::pereira::{build_pereira_lp, pereira_phase_error, toy_leakage, PereiraProblem};
use crate::profile::PhaseProfile;
use crate::security::{max_phase_error_with, Detection, PhaseErrorBound, PhaseErrorProblem};
use crate::states::{party_settings, protocol_states, Party, Protocol, Setting};
use crate::{SolverTolerances, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    SinglePhoton,
    DecoyWcp,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Source::SinglePhoton => "single_photon",
            Source::DecoyWcp => "decoy_wcp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sdp,
    Pereira,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Sdp => "sdp",
            Method::Pereira => "pereira",
        }
    }
}

/// Which leakage states accompany the prepared qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leakage {
    Model(LeakageModel),
    /// Vacuum leakage on key states and `sqrt(eps)|vac> + sqrt(1-eps)|1>` on
    /// the test state, with H/V key states and a diagonal test state.
    Toy,
}

impl Leakage {
    pub fn tag(self) -> &'static str {
        match self {
            Leakage::Model(m) => m.tag(),
            Leakage::Toy => "toy",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        if s == "toy" {
            return Some(Leakage::Toy);
        }
        LeakageModel::from_tag(s).map(Leakage::Model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub protocol: Protocol,
    pub source: Source,
    pub leakage: Vec<Leakage>,
    /// Leakage intensities for models 1 to 3.
    pub alpha_sq: Vec<f64>,
    /// Toy-model vacuum weights.
    pub epsilon: Vec<f64>,
    /// Distance from each party to the relay.
    pub distances_km: Vec<f64>,
    pub intensities: Vec<f64>,
    /// Prepend a vacuum decoy to `intensities`.
    pub vacuum_decoy: bool,
    pub flaw_delta: f64,
    /// Test-state azimuths to scan; empty keeps the protocol's own.
    pub test_phi: Vec<f64>,
    pub use_mismatch: bool,
    pub methods: Vec<Method>,
    pub loss_db_per_km: f64,
    pub detector_efficiency: f64,
    pub dark_count_prob: f64,
    pub misalignment: f64,
    pub profile: PhaseProfile,
    pub duration_delta: f64,
    pub photon_cutoff: usize,
    pub phase_grid: usize,
    pub tolerances: SolverTolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let channel = ChannelParams::symmetric(0.0);
        Self {
            protocol: Protocol::Bb84,
            source: Source::SinglePhoton,
            leakage: vec![Leakage::Model(LeakageModel::TimeDependentCoherent)],
            alpha_sq: vec![0.0],
            epsilon: vec![1.0],
            distances_km: vec![0.0],
            intensities: vec![0.05, 0.1, 0.6],
            vacuum_decoy: false,
            flaw_delta: 0.0,
            test_phi: Vec::new(),
            use_mismatch: true,
            methods: vec![Method::Sdp],
            loss_db_per_km: channel.loss_db_per_km,
            detector_efficiency: channel.detector_efficiency,
            dark_count_prob: channel.dark_count_prob,
            misalignment: channel.misalignment,
            profile: PhaseProfile::default(),
            duration_delta: 500.0,
            photon_cutoff: 10,
            phase_grid: DEFAULT_PHASE_GRID,
            tolerances: SolverTolerances::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, n: usize| if n == 0 { Err(invalid(format!("{name} must not be empty"))) } else { Ok(()) };
        nonempty("leakage_model", self.leakage.len())?;
        nonempty("distances_km", self.distances_km.len())?;
        nonempty("method", self.methods.len())?;
        if self.leakage.iter().any(|l| matches!(l, Leakage::Model(_))) {
            nonempty("alpha_sq", self.alpha_sq.len())?;
        }
        if self.leakage.contains(&Leakage::Toy) {
            nonempty("epsilon", self.epsilon.len())?;
            if self.protocol != Protocol::ThreeState {
                return Err(invalid("the toy leakage is defined for the three-state protocol"));
            }
            if !self.test_phi.is_empty() {
                return Err(invalid("test_phi cannot be combined with the toy leakage"));
            }
        }
        if let Some(d) = self.distances_km.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return Err(invalid(format!("distance {d} must be nonnegative")));
        }
        if let Some(a) = self.alpha_sq.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(invalid(format!("alpha_sq {a} must be nonnegative")));
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(invalid(format!("epsilon {e} outside [0, 1]")));
        }
        if let Some(p) = self.test_phi.iter().find(|p| !p.is_finite()) {
            return Err(invalid(format!("test_phi {p} is not finite")));
        }
        if self.source == Source::DecoyWcp {
            if self.methods.contains(&Method::Pereira) {
                return Err(invalid("the pereira method takes single-photon statistics only"));
            }
            if self.intensities.is_empty() {
                return Err(invalid("decoy source needs at least one intensity"));
            }
            if let Some(v) = self.intensities.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(invalid(format!("intensity {v} must be positive")));
            }
            if self.photon_cutoff < 1 {
                return Err(invalid("photon_cutoff must be at least 1"));
            }
        }
        self.channel(0.0).validate()?;
        protocol_states(&self.protocol, self.flaw_delta, None)?;
        Ok(())
    }

    pub fn channel(&self, distance_km: f64) -> ChannelParams {
        ChannelParams {
            distance_a_km: distance_km,
            distance_b_km: distance_km,
            loss_db_per_km: self.loss_db_per_km,
            detector_efficiency: self.detector_efficiency,
            dark_count_prob: self.dark_count_prob,
            misalignment: self.misalignment,
        }
    }

    /// Intensities actually sent, signal last.
    pub fn decoy_intensities(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.intensities.len() + 1);
        if self.vacuum_decoy {
            v.push(0.0);
        }
        v.extend_from_slice(&self.intensities);
        v
    }

    /// Sweep points in emission order: method, leakage, leakage strength,
    /// test azimuth, then distance.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let phis: Vec<Option<f64>> = if self.test_phi.is_empty() { vec![None] } else { self.test_phi.iter().map(|&p| Some(p)).collect() };
        let mut out = Vec::new();
        for &method in &self.methods {
            for &leakage in &self.leakage {
                let strengths = if leakage == Leakage::Toy { &self.epsilon } else { &self.alpha_sq };
                for &strength in strengths {
                    for &test_phi in &phis {
                        for &distance_km in &self.distances_km {
                            out.push(SweepPoint { method, leakage, strength, test_phi, distance_km });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One coordinate of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub method: Method,
    pub leakage: Leakage,
    /// `|alpha|^2` for models 1 to 3, `epsilon` for the toy.
    pub strength: f64,
    pub test_phi: Option<f64>,
    pub distance_km: f64,
}

impl std::fmt::Display for SweepPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "method={} leakage={} strength={} distance_km={}", self.method.tag(), self.leakage.tag(), self.strength, self.distance_km)?;
        if let Some(p) = self.test_phi {
            write!(f, " test_phi={p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub protocol: String,
    pub n_states: usize,
    pub source: Source,
    pub point: SweepPoint,
    pub e_bit: f64,
    pub e_ph_upper: f64,
    /// Key-basis pass probability (single photon) or lower-bounded
    /// single-photon pass mass (decoy).
    pub p_pass_key: f64,
    pub raw_rate: f64,
    pub rate: f64,
    pub solver_status: Status,
    pub solver_gap: f64,
    pub solver_residual: f64,
}

/// Runtime switches that do not change the physics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Replace a failed solve by `e_ph = 1/2` instead of aborting.
    pub conservative: bool,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

struct Built {
    alice: PartyGram,
    bob: PartyGram,
}

fn build_parties(cfg: &ScenarioConfig, point: &SweepPoint) -> Result<Built> {
    let protocol = if point.leakage == Leakage::Toy { Protocol::HvKeyDTest } else { cfg.protocol.clone() };
    let states = protocol_states(&protocol, cfg.flaw_delta, point.test_phi)?;
    let party = |who: Party| -> Result<PartyGram> {
        let settings = party_settings(&states, who);
        match point.leakage {
            Leakage::Toy => {
                let leak = toy_leakage(&settings, point.strength)?;
                PartyGram::with_leakage(settings, leak)
            }
            Leakage::Model(model) => {
                let specs: Vec<LeakageSpec> = settings
                    .iter()
                    .map(|s| LeakageSpec {
                        profile: cfg.profile,
                        duration_delta: cfg.duration_delta,
                        ..LeakageSpec::new(model, point.strength, s.angles)
                    })
                    .collect();
                PartyGram::from_specs(settings, &specs)
            }
        }
    };
    Ok(Built { alice: party(Party::Alice)?, bob: party(Party::Bob)? })
}

/// Joint signal Gram of the states prepared at `point`.
pub fn point_gram(cfg: &ScenarioConfig, point: &SweepPoint) -> Result<SignalGram> {
    let built = build_parties(cfg, point)?;
    Ok(signal_gram(&built.alice, &built.bob))
}

/// Joint indices `(correct, wrong)` of the key-basis pairs.
fn key_pairs(alice: &[Setting], bob: &[Setting]) -> (Vec<usize>, Vec<usize>) {
    let (mut good, mut bad) = (Vec::new(), Vec::new());
    for (i, a) in alice.iter().enumerate() {
        for (j, b) in bob.iter().enumerate() {
            if a.basis == 0 && b.basis == 0 {
                let idx = i * bob.len() + j;
                if a.bit == b.bit {
                    good.push(idx);
                } else {
                    bad.push(idx);
                }
            }
        }
    }
    (good, bad)
}

fn check_bound(bound: PhaseErrorBound, point: &SweepPoint, opts: &RunOptions) -> Result<PhaseErrorBound> {
    if bound.status == Status::Optimal || opts.conservative {
        return Ok(PhaseErrorBound { e_ph_upper: if bound.status == Status::Optimal { bound.e_ph_upper } else { 0.5 }, ..bound });
    }
    Err(Error::Solver(format!("phase-error solve ended with {:?} at {point}", bound.status)))
}

/// Key rate as a function of the phase-error bound.
type RateFn = Box<dyn Fn(f64) -> Result<crate::keyrate::KeyRateResult>>;

pub fn evaluate_point(cfg: &ScenarioConfig, point: &SweepPoint, opts: &RunOptions) -> Result<ResultRow> {
    let built = build_parties(cfg, point)?;
    let (alice, bob) = (&built.alice.settings, &built.bob.settings);
    let params = cfg.channel(point.distance_km);
    let (good, bad) = key_pairs(alice, bob);
    let tag_err = |e: Error| match e {
        Error::Solver(m) if !m.contains(" at ") => Error::Solver(format!("{m} at {point}")),
        Error::Inconsistent(m) => Error::Inconsistent(format!("{m} at {point}")),
        other => other,
    };

    let (detection, e_bit, key_mass, finish): (Detection, f64, f64, RateFn) = match cfg.source {
        Source::SinglePhoton => {
            let stats = single_photon_pass_probs(alice, bob, &params)?;
            let pass: f64 = good.iter().chain(&bad).map(|&j| stats.p_pass[j]).sum();
            let err: f64 = bad.iter().map(|&j| stats.p_pass[j]).sum();
            let e_bit = if pass > 0.0 { err / pass } else { 0.0 };
            (Detection::Exact(stats.p_pass), e_bit, pass, Box::new(move |e_ph| key_rate_single_photon(pass, e_bit, e_ph)))
        }
        Source::DecoyWcp => {
            let ints = cfg.decoy_intensities();
            let table = wcp_detection_table(alice, bob, &ints, &ints, &params, cfg.phase_grid)?;
            let sig = ints.len() - 1;
            let q = |j: usize| table.get(sig, sig, j / bob.len(), j % bob.len());
            let q_key: f64 = good.iter().chain(&bad).map(|&j| q(j)).sum();
            let e_bit = if q_key > 0.0 { bad.iter().map(|&j| q(j)).sum::<f64>() / q_key } else { 0.0 };
            let bounds = bound_single_photon_yields(&table, cfg.photon_cutoff).map_err(tag_err)?;
            let mu = ints[sig];
            let weight = mu * mu * (-2.0 * mu).exp();
            let p11 = weight * good.iter().chain(&bad).map(|&j| bounds.bounds[j].0).sum::<f64>();
            (Detection::Interval(bounds.bounds), e_bit, p11, Box::new(move |e_ph| key_rate_decoy(q_key, e_bit, p11, e_ph)))
        }
    };

    let bound = match point.method {
        Method::Sdp => {
            let problem = PhaseErrorProblem { gram: signal_gram(&built.alice, &built.bob), detection, use_mismatch: cfg.use_mismatch };
            max_phase_error_with(&problem, &cfg.tolerances).map_err(tag_err)?
        }
        Method::Pereira => {
            let problem = PereiraProblem { alice: built.alice.clone(), bob: built.bob.clone(), detection, use_mismatch: cfg.use_mismatch };
            match build_pereira_lp(&problem) {
                Ok(lp) => pereira_phase_error(&lp).map_err(tag_err)?,
                Err(Error::Inconsistent(_)) => PhaseErrorBound::conservative(Status::Optimal),
                Err(e) => return Err(e),
            }
        }
    };
    let bound = check_bound(bound, point, opts)?;
    let rate = finish(bound.e_ph_upper)?;
    Ok(ResultRow {
        protocol: cfg.protocol.name().to_string(),
        n_states: alice.len(),
        source: cfg.source,
        point: *point,
        e_bit,
        e_ph_upper: bound.e_ph_upper,
        p_pass_key: key_mass,
        raw_rate: rate.raw_rate,
        rate: rate.rate,
        solver_status: bound.status,
        solver_gap: bound.duality_gap,
        solver_residual: bound.max_residual,
    })
}

/// Evaluates every sweep point; rows come back in [`ScenarioConfig::sweep_points`] order.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let points = cfg.sweep_points();
    let work = || points.par_iter().map(|p| evaluate_point(cfg, p, opts)).collect::<Result<Vec<_>>>();
    if opts.jobs == 0 {
        return work();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start {} workers: {e}", opts.jobs)))?;
    pool.install(work)
}

/// `points` evenly spaced test azimuths covering `[0, pi]`; the test pair
/// `{phi, -phi}` makes negative azimuths redundant.
pub fn phi_grid(points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0];
    }
    (0..points).map(|k| PI * k as f64 / (points - 1) as f64).collect()
}
