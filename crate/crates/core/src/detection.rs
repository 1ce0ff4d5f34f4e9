//! Bell-state measurement statistics for single photons and phase-randomized
//! weak coherent pulses.
//!
//! The relay mixes Alice's and Bob's modes on a 50:50 beamsplitter
//! (`c = (a + b)/sqrt 2`, `d = (a - b)/sqrt 2`), splits each output port in
//! the key-basis polarization frame `{m0, m1}` and watches four threshold
//! detectors `[c m0, c m1, d m0, d m1]`. A round passes only for the singlet
//! signature: exactly `{c m0, d m1}` or `{c m1, d m0}` click.
//!
//! Detector efficiency is folded into the channel transmittance and every
//! detector has an independent dark-count probability per gate.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::states::{PolarizationAngles, Setting};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub distance_a_km: f64,
    pub distance_b_km: f64,
    pub loss_db_per_km: f64,
    pub detector_efficiency: f64,
    pub dark_count_prob: f64,
    /// Probability that the source rotates a key state into its orthogonal partner.
    pub misalignment: f64,
}

impl ChannelParams {
    /// Equal Alice-relay and Bob-relay distances with the default hardware.
    pub fn symmetric(distance_km: f64) -> Self {
        Self { distance_a_km: distance_km, distance_b_km: distance_km, ..Self::default() }
    }

    /// Lossless, unit-efficiency, noiseless channel.
    pub fn ideal() -> Self {
        Self {
            distance_a_km: 0.0,
            distance_b_km: 0.0,
            loss_db_per_km: 0.0,
            detector_efficiency: 1.0,
            dark_count_prob: 0.0,
            misalignment: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {v} must lie in [0, 1]")))
            }
        };
        prob("detector_efficiency", self.detector_efficiency)?;
        prob("dark_count_prob", self.dark_count_prob)?;
        prob("misalignment", self.misalignment)?;
        for (name, v) in [("distance_a_km", self.distance_a_km), ("distance_b_km", self.distance_b_km), ("loss_db_per_km", self.loss_db_per_km)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} = {v} must be nonnegative")));
            }
        }
        Ok(())
    }

    /// Overall detection probability of one of Alice's photons.
    pub fn eta_a(&self) -> f64 {
        transmittance(self.distance_a_km, self.loss_db_per_km) * self.detector_efficiency
    }

    pub fn eta_b(&self) -> f64 {
        transmittance(self.distance_b_km, self.loss_db_per_km) * self.detector_efficiency
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            distance_a_km: 0.0,
            distance_b_km: 0.0,
            loss_db_per_km: 0.2,
            detector_efficiency: 0.5,
            dark_count_prob: 1e-6,
            misalignment: 0.0,
        }
    }
}

pub fn transmittance(distance_km: f64, loss_db_per_km: f64) -> f64 {
    10f64.powf(-loss_db_per_km * distance_km / 10.0)
}

/// Polarization frame of the relay's polarizing splitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellAnalyzer {
    pub frame: [[C64; 2]; 2],
}

/// Click patterns that announce a pass.
pub const PASS_PATTERNS: [[usize; 2]; 2] = [[0, 3], [1, 2]];

impl BellAnalyzer {
    pub fn new(m0: PolarizationAngles, m1: PolarizationAngles) -> Self {
        Self { frame: [m0.jones(), m1.jones()] }
    }

    /// Frame aligned with the key-basis states of `settings`.
    pub fn aligned_with(settings: &[Setting]) -> Result<Self> {
        let find = |bit| {
            settings
                .iter()
                .find(|s| s.basis == 0 && s.bit == bit)
                .map(|s| s.angles)
                .ok_or_else(|| invalid("settings lack a key-basis state"))
        };
        Ok(Self::new(find(0)?, find(1)?))
    }

    fn components(&self, v: [C64; 2]) -> [C64; 2] {
        let f = &self.frame;
        [f[0][0].conj() * v[0] + f[0][1].conj() * v[1], f[1][0].conj() * v[0] + f[1][1].conj() * v[1]]
    }

    /// Output-mode amplitudes of one photon entering from Alice's side.
    pub fn alice_modes(&self, v: [C64; 2]) -> [C64; 4] {
        let [p, q] = self.components(v);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [p * h, q * h, p * h, q * h]
    }

    pub fn bob_modes(&self, v: [C64; 2]) -> [C64; 4] {
        let [p, q] = self.components(v);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [p * h, q * h, -p * h, -q * h]
    }
}

/// Alice's Jones vector after a source rotation with `sin^2 = misalignment`.
pub fn misaligned_jones(angles: PolarizationAngles, misalignment: f64) -> [C64; 2] {
    let v = angles.jones();
    if misalignment == 0.0 {
        return v;
    }
    let s = misalignment.sqrt();
    let c = (1.0 - misalignment).sqrt();
    [v[0] * c - v[1] * s, v[0] * s + v[1] * c]
}

/// Probability that exactly the detectors in `pattern` click when the modes
/// in `occupied` carry light that is surely detected.
pub fn dark_pattern_prob(occupied: &[bool; 4], pattern: &[usize; 2], dark: f64) -> f64 {
    let mut p = 1.0;
    for u in 0..4 {
        let in_pattern = pattern.contains(&u);
        p *= match (occupied[u], in_pattern) {
            (true, true) => 1.0,
            (true, false) => return 0.0,
            (false, true) => dark,
            (false, false) => 1.0 - dark,
        };
    }
    p
}

fn pass_given_occupied(occupied: &[bool; 4], dark: f64) -> f64 {
    PASS_PATTERNS.iter().map(|p| dark_pattern_prob(occupied, p, dark)).sum()
}

fn single_mode(u: usize) -> [bool; 4] {
    let mut o = [false; 4];
    o[u] = true;
    o
}

/// Pass probability for one photon from each side.
pub fn single_photon_pass(a: PolarizationAngles, b: PolarizationAngles, params: &ChannelParams, bsm: &BellAnalyzer) -> f64 {
    let ea = params.eta_a();
    let eb = params.eta_b();
    let d = params.dark_count_prob;
    let am = bsm.alice_modes(misaligned_jones(a, params.misalignment));
    let bm = bsm.bob_modes(b.jones());

    let mut both = 0.0;
    for u in 0..4 {
        for v in u..4 {
            let p = if u == v { 2.0 * (am[u] * bm[u]).norm_sqr() } else { (am[u] * bm[v] + am[v] * bm[u]).norm_sqr() };
            if p == 0.0 {
                continue;
            }
            let mut occ = [false; 4];
            occ[u] = true;
            occ[v] = true;
            both += p * pass_given_occupied(&occ, d);
        }
    }
    let only = |modes: &[C64; 4]| (0..4).map(|u| modes[u].norm_sqr() * pass_given_occupied(&single_mode(u), d)).sum::<f64>();
    let none = pass_given_occupied(&[false; 4], d);
    ea * eb * both + ea * (1.0 - eb) * only(&am) + (1.0 - ea) * eb * only(&bm) + (1.0 - ea) * (1.0 - eb) * none
}

/// Single-photon pass probabilities for every setting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePhotonStats {
    pub alice: Vec<Setting>,
    pub bob: Vec<Setting>,
    /// Row-major over `(alice, bob)` setting indices.
    pub p_pass: Vec<f64>,
}

impl SinglePhotonStats {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.p_pass[a * self.bob.len() + b]
    }
}

pub fn single_photon_pass_probs(alice: &[Setting], bob: &[Setting], params: &ChannelParams) -> Result<SinglePhotonStats> {
    params.validate()?;
    let bsm = BellAnalyzer::aligned_with(alice)?;
    let p_pass = alice.iter().flat_map(|a| bob.iter().map(move |b| (a, b))).map(|(a, b)| single_photon_pass(a.angles, b.angles, params, &bsm)).collect();
    Ok(SinglePhotonStats { alice: alice.to_vec(), bob: bob.to_vec(), p_pass })
}

pub const DEFAULT_PHASE_GRID: usize = 128;
pub const MIN_PHASE_GRID: usize = 16;

/// Pass probability for coherent pulses of mean photon numbers `mu`, `nu`,
/// averaged over the relative phase on a uniform grid.
pub fn wcp_pass(a: PolarizationAngles, b: PolarizationAngles, mu: f64, nu: f64, params: &ChannelParams, bsm: &BellAnalyzer, grid: usize) -> f64 {
    let sa = (params.eta_a() * mu).sqrt();
    let sb = (params.eta_b() * nu).sqrt();
    let am = bsm.alice_modes(misaligned_jones(a, params.misalignment)).map(|z| z * sa);
    let bm = bsm.bob_modes(b.jones()).map(|z| z * sb);
    let keep = 1.0 - params.dark_count_prob;
    let mut total = 0.0;
    for k in 0..grid {
        let phase = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / grid as f64);
        let click: [f64; 4] = std::array::from_fn(|u| 1.0 - keep * (-(am[u] + bm[u] * phase).norm_sqr()).exp());
        total += PASS_PATTERNS
            .iter()
            .map(|pat| (0..4).map(|u| if pat.contains(&u) { click[u] } else { 1.0 - click[u] }).product::<f64>())
            .sum::<f64>();
    }
    total / grid as f64
}

/// Observed pass probabilities `Q` for every intensity pair and setting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTable {
    pub intensities_a: Vec<f64>,
    pub intensities_b: Vec<f64>,
    pub alice: Vec<Setting>,
    pub bob: Vec<Setting>,
    /// Indexed by [`DetectionTable::index`].
    pub q: Vec<f64>,
}

impl DetectionTable {
    pub fn index(&self, k: usize, l: usize, a: usize, b: usize) -> usize {
        ((k * self.intensities_b.len() + l) * self.alice.len() + a) * self.bob.len() + b
    }

    pub fn get(&self, k: usize, l: usize, a: usize, b: usize) -> f64 {
        self.q[self.index(k, l, a, b)]
    }

    /// Table built from explicit values, checked for shape and range.
    pub fn from_values(intensities_a: Vec<f64>, intensities_b: Vec<f64>, alice: Vec<Setting>, bob: Vec<Setting>, q: Vec<f64>) -> Result<Self> {
        let expected = intensities_a.len() * intensities_b.len() * alice.len() * bob.len();
        if q.len() != expected {
            return Err(invalid(format!("detection table has {} entries, expected {expected}", q.len())));
        }
        if let Some(v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("detection probability {v} outside [0, 1]")));
        }
        Ok(Self { intensities_a, intensities_b, alice, bob, q })
    }
}

pub fn wcp_detection_table(
    alice: &[Setting],
    bob: &[Setting],
    intensities_a: &[f64],
    intensities_b: &[f64],
    params: &ChannelParams,
    phase_grid_points: usize,
) -> Result<DetectionTable> {
    params.validate()?;
    if phase_grid_points < MIN_PHASE_GRID {
        return Err(invalid(format!("phase grid of {phase_grid_points} points is below the minimum {MIN_PHASE_GRID}")));
    }
    if let Some(v) = intensities_a.iter().chain(intensities_b).find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(invalid(format!("intensity {v} must be nonnegative")));
    }
    let bsm = BellAnalyzer::aligned_with(alice)?;
    let (na, nb, ni) = (alice.len(), bob.len(), intensities_b.len());
    let cells = intensities_a.len() * ni * na * nb;
    let q = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let b = idx % nb;
            let a = (idx / nb) % na;
            let l = (idx / (nb * na)) % ni;
            let k = idx / (nb * na * ni);
            wcp_pass(alice[a].angles, bob[b].angles, intensities_a[k], intensities_b[l], params, &bsm, phase_grid_points)
        })
        .collect();
    Ok(DetectionTable {
        intensities_a: intensities_a.to_vec(),
        intensities_b: intensities_b.to_vec(),
        alice: alice.to_vec(),
        bob: bob.to_vec(),
        q,
    })
}
