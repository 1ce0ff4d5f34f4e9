//! CSV emission and reading of sweep results.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::scenario::{Leakage, Method, ResultRow, Source, SweepPoint};
use crate::Status;

pub const HEADER: [&str; 16] = [
    "protocol",
    "n_states",
    "source",
    "method",
    "leakage",
    "strength",
    "test_phi",
    "distance_km",
    "e_bit",
    "e_ph_upper",
    "p_pass_key",
    "raw_rate",
    "rate",
    "solver_status",
    "solver_gap",
    "solver_residual",
];

/// Fifteen significant digits.
fn num(x: f64) -> String {
    format!("{x:.14e}")
}

fn status_tag(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::Infeasible => "infeasible",
        Status::Unbounded => "unbounded",
        Status::NumericalFailure => "numerical_failure",
    }
}

fn status_from_tag(s: &str) -> Option<Status> {
    Some(match s {
        "optimal" => Status::Optimal,
        "infeasible" => Status::Infeasible,
        "unbounded" => Status::Unbounded,
        "numerical_failure" => Status::NumericalFailure,
        _ => return None,
    })
}

fn record(r: &ResultRow) -> Vec<String> {
    let p = &r.point;
    vec![
        r.protocol.clone(),
        r.n_states.to_string(),
        r.source.tag().into(),
        p.method.tag().into(),
        p.leakage.tag().into(),
        num(p.strength),
        p.test_phi.map(num).unwrap_or_default(),
        num(p.distance_km),
        num(r.e_bit),
        num(r.e_ph_upper),
        num(r.p_pass_key),
        num(r.raw_rate),
        num(r.rate),
        status_tag(r.solver_status).into(),
        num(r.solver_gap),
        num(r.solver_residual),
    ]
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush().map_err(|source| Error::Io { path: "<csv>".into(), source })?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io { path: path.display().to_string(), source };
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    std::fs::write(path, buf).map_err(io)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(HEADER) {
        return Err(invalid("CSV header does not match the result schema"));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| invalid(format!("column {} value `{}` is not a number", HEADER[i], &rec[i]))) };
        let source = match &rec[2] {
            "single_photon" => Source::SinglePhoton,
            "decoy_wcp" => Source::DecoyWcp,
            s => return Err(invalid(format!("unknown source `{s}`"))),
        };
        let method = match &rec[3] {
            "sdp" => Method::Sdp,
            "pereira" => Method::Pereira,
            s => return Err(invalid(format!("unknown method `{s}`"))),
        };
        let leakage = Leakage::from_tag(&rec[4]).ok_or_else(|| invalid(format!("unknown leakage `{}`", &rec[4])))?;
        let test_phi = if rec[6].is_empty() { None } else { Some(f(6)?) };
        rows.push(ResultRow {
            protocol: rec[0].to_string(),
            n_states: rec[1].parse().map_err(|_| invalid(format!("bad state count `{}`", &rec[1])))?,
            source,
            point: SweepPoint { method, leakage, strength: f(5)?, test_phi, distance_km: f(7)? },
            e_bit: f(8)?,
            e_ph_upper: f(9)?,
            p_pass_key: f(10)?,
            raw_rate: f(11)?,
            rate: f(12)?,
            solver_status: status_from_tag(&rec[13]).ok_or_else(|| invalid(format!("unknown status `{}`", &rec[13])))?,
            solver_gap: f(14)?,
            solver_residual: f(15)?,
        });
    }
    Ok(rows)
}
