//! `mdi-leak`: key rates of MDI-QKD under polarization leakage.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdi_leak::config::load_scenarios;
use mdi_leak::presets::{preset, PRESETS};
use mdi_leak::profile::PhaseProfile;
use mdi_leak::report::write_csv;
use mdi_leak::scenario::{point_gram, run_scenario, ResultRow, RunOptions, ScenarioConfig};
use mdi_leak::validate::{run_validation, ValidateOptions};
use mdi_leak::Error;

#[derive(Parser)]
#[command(name = "mdi-leak", version, about = "Key rates for MDI-QKD with a polarization leakage side-channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report e_ph = 1/2 for failed solves instead of exiting with status 2.
    #[arg(long, global = true)]
    conservative: bool,
    /// Absolute duality-gap tolerance; overrides the config.
    #[arg(long, global = true)]
    tol_gap: Option<f64>,
    /// Scaled feasibility tolerance; overrides the config.
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Print a key-rate table for a scenario file or preset name.
    Keyrate { config: String },
    /// Run a scenario and emit one CSV row per sweep point.
    Sweep { config: String },
    /// Tabulate the fractional phase profile f(t) at 1 ps steps.
    PhaseProfile {
        /// Modulator transit length L in ps.
        #[arg(long = "L", allow_hyphen_values = true)]
        l: f64,
        /// Voltage pulse width w in ps.
        #[arg(long = "w", allow_hyphen_values = true)]
        w: f64,
    },
    /// Run the built-in oracle checks.
    Validate {
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Print the joint signal Gram matrix of every sweep point.
    DumpGram { config: String },
}

enum Failure {
    Other(String),
    Solver(String),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Invalid(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Other(m) | Failure::Solver(m) | Failure::Invalid(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Solver(_) | Error::Conic(_) | Error::Inconsistent(_) => Failure::Solver(msg),
            Error::InvalidParameter(_) | Error::IncompatibleLeakage(_) | Error::Config { .. } => Failure::Invalid(msg),
            Error::Io { .. } | Error::Csv(_) => Failure::Other(msg),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// A path to a scenario file, or the name of a shipped preset.
fn load(arg: &str, common: &Common) -> Outcome<Vec<ScenarioConfig>> {
    let mut cfgs = if Path::new(arg).exists() {
        load_scenarios(arg).map_err(|e| Failure::Invalid(format!("{arg}: {e}")))?
    } else if let Some(parsed) = preset(arg) {
        parsed.map_err(|e| Failure::Invalid(format!("preset {arg}: {e}")))?
    } else {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        return Err(Failure::Invalid(format!("{arg}: no such file or preset (presets: {})", names.join(", "))));
    };
    for cfg in &mut cfgs {
        if let Some(g) = common.tol_gap {
            cfg.tolerances.gap = g;
        }
        if let Some(f) = common.tol_feas {
            cfg.tolerances.feasibility = f;
        }
        if !(cfg.tolerances.gap > 0.0 && cfg.tolerances.feasibility > 0.0) {
            return Err(Failure::Invalid("solver tolerances must be positive".into()));
        }
    }
    Ok(cfgs)
}

fn run_all(cfgs: &[ScenarioConfig], common: &Common) -> Outcome<Vec<ResultRow>> {
    let opts = RunOptions { conservative: common.conservative, jobs: common.jobs };
    let mut rows = Vec::new();
    for cfg in cfgs {
        rows.extend(run_scenario(cfg, &opts)?);
    }
    Ok(rows)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Outcome<()> {
    let result = match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(bytes).map_err(|e| format!("stdout: {e}")),
    };
    result.map_err(Failure::Other)
}

/// Run conditions that the CSV columns do not carry.
fn metadata(cfgs: &[ScenarioConfig], common: &Common, source: &str) -> String {
    let cfg = &cfgs[0];
    let t = &cfg.tolerances;
    let mut m = String::new();
    let _ = writeln!(m, "generator = mdi-leak {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "config = {source}");
    let _ = writeln!(m, "protocols = {}", cfgs.iter().map(|c| c.protocol.name()).collect::<Vec<_>>().join(", "));
    let _ = writeln!(m, "tol_gap = {:e}", t.gap);
    let _ = writeln!(m, "tol_feas = {:e}", t.feasibility);
    let _ = writeln!(m, "max_iterations = {}", t.max_iterations);
    let _ = writeln!(m, "conservative = {}", common.conservative);
    let _ = writeln!(m, "flaw_convention = test azimuths shifted by flaw_delta = {}", cfg.flaw_delta);
    let _ = writeln!(m, "misalignment_convention = source-side rotation, sin^2 = {}", cfg.misalignment);
    let _ = writeln!(m, "decoy_bounds = single-photon pass probabilities given both parties also sent their leakage states");
    let _ = writeln!(m, "rate_clamp = rate is max(raw_rate, 0)");
    m
}

fn sweep(arg: &str, common: &Common) -> Outcome<()> {
    let cfgs = load(arg, common)?;
    let rows = run_all(&cfgs, common)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(&buf, common.out.as_deref())?;
    if let Some(out) = &common.out {
        let mut meta = out.clone().into_os_string();
        meta.push(".meta");
        std::fs::write(&meta, metadata(&cfgs, common, arg)).map_err(|e| Failure::Other(format!("{}: {e}", Path::new(&meta).display())))?;
    }
    Ok(())
}

fn keyrate(arg: &str, common: &Common) -> Outcome<()> {
    let cfgs = load(arg, common)?;
    let rows = run_all(&cfgs, common)?;
    let mut s = format!(
        "{:<12} {:<8} {:<7} {:>10} {:>8} {:>8} {:>11} {:>11} {:>12} {}\n",
        "protocol", "method", "leakage", "strength", "phi/pi", "km", "e_bit", "e_ph", "rate", "status"
    );
    for r in &rows {
        let p = &r.point;
        let phi = p.test_phi.map(|v| format!("{:.4}", v / std::f64::consts::PI)).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<12} {:<8} {:<7} {:>10.3e} {:>8} {:>8.1} {:>11.4e} {:>11.4e} {:>12.5e} {:?}",
            r.protocol,
            p.method.tag(),
            p.leakage.tag(),
            p.strength,
            phi,
            p.distance_km,
            r.e_bit,
            r.e_ph_upper,
            r.rate,
            r.solver_status
        );
    }
    emit(s.as_bytes(), common.out.as_deref())
}

fn phase_profile(l: f64, w: f64, common: &Common) -> Outcome<()> {
    let profile = PhaseProfile::new(l, w).map_err(|e| Failure::Invalid(e.to_string()))?;
    let mut s = String::from("t_ps,f\n");
    let end = profile.support().ceil() as i64;
    for t in 0..=end {
        let _ = writeln!(s, "{t},{:.15e}", profile.fraction(t as f64));
    }
    emit(s.as_bytes(), common.out.as_deref())
}

fn validate(seed: u64, common: &Common) -> Outcome<()> {
    let mut opts = ValidateOptions { seed, ..Default::default() };
    if let Some(g) = common.tol_gap {
        opts.tolerances.gap = g;
    }
    if let Some(f) = common.tol_feas {
        opts.tolerances.feasibility = f;
    }
    if !(opts.tolerances.gap > 0.0 && opts.tolerances.feasibility > 0.0) {
        return Err(Failure::Invalid("solver tolerances must be positive".into()));
    }
    let report = run_validation(&opts);
    emit(report.to_string().as_bytes(), common.out.as_deref())?;
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Failure::Other(format!("validation failed: {}", failed.join(", "))))
    }
}

fn dump_gram(arg: &str, common: &Common) -> Outcome<()> {
    let cfgs = load(arg, common)?;
    let mut s = String::new();
    for cfg in &cfgs {
        let mut seen = Vec::new();
        for point in cfg.sweep_points() {
            // The Gram depends on neither distance nor method.
            let key = (point.leakage, point.strength.to_bits(), point.test_phi.map(f64::to_bits));
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            let gram = point_gram(cfg, &point)?;
            let phi = point.test_phi.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "# protocol={} leakage={} strength={} test_phi={phi} dim={} min_eig={:.6e}",
                cfg.protocol.name(),
                point.leakage.tag(),
                point.strength,
                gram.dim(),
                gram.min_eigenvalue()
            );
            for r in 0..gram.dim() {
                let row: Vec<String> = (0..gram.dim()).map(|c| format!("{:.17e}:{:.17e}", gram.entries[(r, c)].re, gram.entries[(r, c)].im)).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
    }
    emit(s.as_bytes(), common.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the invalid-input status; 2 means solver failure.
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let c = &cli.common;
    let result = match &cli.command {
        Command::Keyrate { config } => keyrate(config, c),
        Command::Sweep { config } => sweep(config, c),
        Command::PhaseProfile { l, w } => phase_profile(*l, *w, c),
        Command::Validate { seed } => validate(*seed, c),
        Command::DumpGram { config } => dump_gram(config, c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mdi-leak: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
