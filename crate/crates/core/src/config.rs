//! Line-oriented `key = value` scenario files.
//!
//! Blank lines and `#` comments are ignored. List values are comma
//! separated; a numeric list item may also be a range `start:stop:step`
//! (stop included when hit). Angles accept a `pi` suffix, as in `0.5pi`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::profile::PhaseProfile;
use crate::scenario::{phi_grid, Leakage, Method, ScenarioConfig, Source};
use crate::states::Protocol;

const KEYS: &[&str] = &[
    "protocol",
    "n_state_phi",
    "source",
    "leakage_model",
    "alpha_sq",
    "epsilon",
    "distances_km",
    "intensities",
    "vacuum_decoy",
    "flaw_delta",
    "test_phi",
    "use_mismatch",
    "method",
    "loss_db_per_km",
    "detector_efficiency",
    "dark_count_prob",
    "misalignment",
    "pm_length_ps",
    "pulse_width_ps",
    "duration_delta_ps",
    "photon_cutoff",
    "phase_grid",
    "tol_gap",
    "tol_feas",
    "max_iterations",
];

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn scalar(line: usize, key: &str, v: &str) -> Result<f64> {
    let t = v.trim();
    let parsed = match t.strip_suffix("pi") {
        Some("") => Ok(PI),
        Some(head) => head.trim().trim_end_matches('*').trim().parse::<f64>().map(|x| x * PI),
        None => t.parse::<f64>(),
    };
    match parsed {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(err(line, format!("{key}: `{t}` is not a finite number"))),
    }
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(scalar(line, key, x)?),
            [a, b, s] => {
                let (a, b, s) = (scalar(line, key, a)?, scalar(line, key, b)?, scalar(line, key, s)?);
                if s <= 0.0 || b < a {
                    return Err(err(line, format!("{key}: range `{item}` needs start <= stop and a positive step")));
                }
                let n = ((b - a) / s + 1e-9).floor() as usize;
                out.extend((0..=n).map(|k| a + s * k as f64));
            }
            _ => return Err(err(line, format!("{key}: cannot read `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(err(line, format!("{key} must not be empty")));
    }
    Ok(out)
}

fn words(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(err(line, format!("{key}: `{other}` is not a boolean"))),
    }
}

fn count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|_| err(line, format!("{key}: `{}` is not a nonnegative integer", v.trim())))
}

/// Parses a scenario file with a single protocol. Missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut all = parse_scenarios(text)?;
    if all.len() != 1 {
        return Err(Error::InvalidParameter(format!("expected one protocol, found {}", all.len())));
    }
    Ok(all.remove(0))
}

/// Parses a scenario file; a protocol list yields one config per protocol,
/// otherwise identical.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioConfig>> {
    let mut cfg = ScenarioConfig::default();
    let mut seen = HashSet::new();
    let mut protocol: Option<(usize, String)> = None;
    let mut n_state_phi: Option<Vec<f64>> = None;
    let (mut pm_length, mut pulse_width) = (cfg.profile.pm_length_l, cfg.profile.pulse_width_w);
    let mut profile_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(err(line, format!("expected `key = value`, found `{body}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(line, format!("unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
        match key {
            "protocol" => protocol = Some((line, value.to_string())),
            "n_state_phi" => n_state_phi = Some(list(line, key, value)?),
            "source" => {
                cfg.source = match value {
                    "single_photon" => Source::SinglePhoton,
                    "decoy_wcp" => Source::DecoyWcp,
                    other => return Err(err(line, format!("unknown source `{other}`"))),
                }
            }
            "leakage_model" => {
                cfg.leakage = words(value)
                    .into_iter()
                    .map(|w| Leakage::from_tag(w).ok_or_else(|| err(line, format!("unknown leakage model `{w}`"))))
                    .collect::<Result<_>>()?;
            }
            "method" => {
                cfg.methods = words(value)
                    .into_iter()
                    .map(|w| match w {
                        "sdp" => Ok(Method::Sdp),
                        "pereira" => Ok(Method::Pereira),
                        other => Err(err(line, format!("unknown method `{other}`"))),
                    })
                    .collect::<Result<_>>()?;
            }
            "alpha_sq" => cfg.alpha_sq = list(line, key, value)?,
            "epsilon" => cfg.epsilon = list(line, key, value)?,
            "distances_km" => cfg.distances_km = list(line, key, value)?,
            "intensities" => cfg.intensities = list(line, key, value)?,
            "test_phi" => {
                cfg.test_phi = match value.strip_prefix("grid") {
                    Some(n) => phi_grid(count(line, key, n.trim_start_matches(':'))?),
                    None => list(line, key, value)?,
                }
            }
            "vacuum_decoy" => cfg.vacuum_decoy = boolean(line, key, value)?,
            "use_mismatch" => cfg.use_mismatch = boolean(line, key, value)?,
            "flaw_delta" => cfg.flaw_delta = scalar(line, key, value)?,
            "loss_db_per_km" => cfg.loss_db_per_km = scalar(line, key, value)?,
            "detector_efficiency" => cfg.detector_efficiency = scalar(line, key, value)?,
            "dark_count_prob" => cfg.dark_count_prob = scalar(line, key, value)?,
            "misalignment" => cfg.misalignment = scalar(line, key, value)?,
            "pm_length_ps" => (pm_length, profile_line) = (scalar(line, key, value)?, line),
            "pulse_width_ps" => (pulse_width, profile_line) = (scalar(line, key, value)?, line),
            "duration_delta_ps" => cfg.duration_delta = scalar(line, key, value)?,
            "photon_cutoff" => cfg.photon_cutoff = count(line, key, value)?,
            "phase_grid" => cfg.phase_grid = count(line, key, value)?,
            "tol_gap" => cfg.tolerances.gap = scalar(line, key, value)?,
            "tol_feas" => cfg.tolerances.feasibility = scalar(line, key, value)?,
            "max_iterations" => cfg.tolerances.max_iterations = count(line, key, value)?,
            _ => unreachable!("key list and match arms disagree"),
        }
    }

    let mut protocols = Vec::new();
    if let Some((line, names)) = protocol {
        for name in words(&names) {
            let p = match name {
                "three_state" => Protocol::ThreeState,
                "bb84" => Protocol::Bb84,
                "n_state" => Protocol::NState(n_state_phi.take().ok_or_else(|| err(line, "protocol n_state needs n_state_phi"))?),
                other => return Err(err(line, format!("unknown protocol `{other}`"))),
            };
            if protocols.contains(&p) {
                return Err(err(line, format!("protocol `{name}` listed twice")));
            }
            protocols.push(p);
        }
        if protocols.is_empty() {
            return Err(err(line, "protocol must not be empty"));
        }
    } else {
        protocols.push(cfg.protocol.clone());
    }
    if n_state_phi.is_some() {
        return Err(Error::InvalidParameter("n_state_phi is only read for protocol n_state".into()));
    }
    cfg.profile = PhaseProfile::new(pm_length, pulse_width).map_err(|e| err(profile_line, e.to_string()))?;
    if cfg.tolerances.gap <= 0.0 || cfg.tolerances.feasibility <= 0.0 {
        return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
    }
    protocols
        .into_iter()
        .map(|p| {
            let c = ScenarioConfig { protocol: p, ..cfg.clone() };
            c.validate()?;
            Ok(c)
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    parse_config(&read(path.as_ref())?)
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<ScenarioConfig>> {
    parse_scenarios(&read(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_an_empty_file() {
        assert_eq!(parse_config("# nothing\n\n").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn lists_ranges_and_angles() {
        let text = "protocol = three_state\nleakage_model = model1, model3\nalpha_sq = 0, 1e-5\ndistances_km = 0:20:10, 35\ntest_phi = 0.5pi, 0.25 pi\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.protocol, Protocol::ThreeState);
        assert_eq!(cfg.distances_km, vec![0.0, 10.0, 20.0, 35.0]);
        assert_eq!(cfg.leakage.len(), 2);
        assert!((cfg.test_phi[0] - PI / 2.0).abs() < 1e-15);
        assert!((cfg.test_phi[1] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn phi_grid_shorthand() {
        let cfg = parse_config("test_phi = grid:33").unwrap();
        assert_eq!(cfg.test_phi.len(), 33);
        assert!((cfg.test_phi[16] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("protocol = bb84\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = parse_config("alpha_sq = 1\nalpha_sq = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        assert!(parse_config("distances_km = ten").is_err());
        assert!(parse_config("distances_km =").is_err());
        assert!(parse_config("protocol = n_state").is_err());
        assert!(parse_config("leakage_model = model4").is_err());
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn n_state_reads_its_azimuths() {
        let cfg = parse_config("protocol = n_state\nn_state_phi = 0, pi, 0.5pi\nleakage_model = model2").unwrap();
        assert_eq!(cfg.protocol.name(), "n_state");
        assert!(parse_config("n_state_phi = 0, pi").is_err());
    }

    #[test]
    fn protocol_list_expands() {
        let all = parse_scenarios("protocol = bb84, three_state\nalpha_sq = 1e-5").unwrap();
        assert_eq!(all.iter().map(|c| c.protocol.name()).collect::<Vec<_>>(), vec!["bb84", "three_state"]);
        assert!(all.iter().all(|c| c.alpha_sq == vec![1e-5]));
        assert!(parse_config("protocol = bb84, three_state").is_err());
        assert!(parse_scenarios("protocol = bb84, bb84").is_err());
    }

    #[test]
    fn validation_runs_after_parsing() {
        assert!(parse_config("source = decoy_wcp\nmethod = pereira").is_err());
        assert!(parse_config("detector_efficiency = 1.5").is_err());
        assert!(parse_config("tol_gap = 0").is_err());
    }
}
