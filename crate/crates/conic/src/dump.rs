//! Line-oriented text dump of LP and SDP instances.
//!
//! ```text
//! kind sdp
//! dim 2
//! scalars 0
//! sense max
//! objective 0 1:0.5 2:0.5
//! = 1 0:1
//! = 1 3:1
//! ```
//!
//! Matrix entries are indexed row-major over the full symmetric matrix
//! (`r * dim + c`); scalar `k` has index `dim * dim + k`. LP instances use
//! `vars n`, one `bound i lo hi` line per variable (`inf` for open ends) and
//! plain variable indices. Each constraint line is a relation, the right-hand
//! side and the nonzero entries.

use std::fmt::Write as _;

use crate::{ConicError, LinearForm, LinearProgram, Relation, Scalar, SemidefiniteProgram, Sense, VarBounds};

#[derive(Debug, Clone, PartialEq)]
pub enum DumpedProblem {
    Lp { program: LinearProgram<f64>, sense: Sense },
    Sdp { program: SemidefiniteProgram<f64>, sense: Sense },
}

fn sense_word(sense: Sense) -> &'static str {
    match sense {
        Sense::Maximize => "max",
        Sense::Minimize => "min",
    }
}

fn form_entries<T: Scalar>(form: &LinearForm<T>, dim: usize) -> Vec<(usize, T)> {
    let dense = form.to_dense(dim);
    let mut out = Vec::new();
    for r in 0..dim {
        for c in 0..dim {
            if dense[(r, c)] != T::zero() {
                out.push((r * dim + c, dense[(r, c)]));
            }
        }
    }
    let mut scalars: Vec<(usize, T)> = Vec::new();
    for &(k, w) in &form.scalars {
        match scalars.iter_mut().find(|e| e.0 == k) {
            Some(e) => e.1 += w,
            None => scalars.push((k, w)),
        }
    }
    scalars.sort_by_key(|e| e.0);
    out.extend(scalars.into_iter().filter(|e| e.1 != T::zero()).map(|(k, w)| (dim * dim + k, w)));
    out
}

fn push_entries<T: Scalar>(line: &mut String, entries: impl IntoIterator<Item = (usize, T)>) {
    for (i, v) in entries {
        let _ = write!(line, " {i}:{}", fmt_num(v));
    }
}

fn fmt_num<T: Scalar>(v: T) -> String {
    format!("{:e}", v.to_f64().unwrap_or(f64::NAN))
}

pub fn write_sdp<T: Scalar>(sdp: &SemidefiniteProgram<T>, sense: Sense) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kind sdp\ndim {}\nscalars {}\nsense {}", sdp.dim, sdp.scalar_vars, sense_word(sense));
    let mut line = format!("objective {}", fmt_num(sdp.objective_offset));
    push_entries(&mut line, form_entries(&sdp.objective, sdp.dim));
    s.push_str(&line);
    s.push('\n');
    for c in &sdp.constraints {
        let mut line = format!("{} {}", c.relation.symbol(), fmt_num(c.bound));
        push_entries(&mut line, form_entries(&c.form, sdp.dim));
        s.push_str(&line);
        s.push('\n');
    }
    s
}

pub fn write_lp<T: Scalar>(lp: &LinearProgram<T>, sense: Sense) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kind lp\nvars {}\nsense {}", lp.num_vars(), sense_word(sense));
    let end = |v: Option<T>, neg: bool| match v {
        Some(x) => fmt_num(x),
        None if neg => "-inf".to_string(),
        None => "inf".to_string(),
    };
    for (i, b) in lp.bounds.iter().enumerate() {
        let _ = writeln!(s, "bound {i} {} {}", end(b.lower, true), end(b.upper, false));
    }
    let nonzero = |v: &[T]| v.iter().enumerate().filter(|e| *e.1 != T::zero()).map(|(i, &x)| (i, x)).collect::<Vec<_>>();
    let mut line = "objective 0".to_string();
    push_entries(&mut line, nonzero(&lp.objective));
    s.push_str(&line);
    s.push('\n');
    for r in &lp.rows {
        let mut line = format!("{} {}", r.relation.symbol(), fmt_num(r.bound));
        push_entries(&mut line, nonzero(&r.coefficients));
        s.push_str(&line);
        s.push('\n');
    }
    s
}

fn perr(line: usize, message: impl Into<String>) -> ConicError {
    ConicError::Parse { line, message: message.into() }
}

fn parse_num(tok: &str, line: usize) -> Result<f64, ConicError> {
    match tok {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| perr(line, format!("bad number `{tok}`"))),
    }
}

fn parse_entries<'a>(toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<(usize, f64)>, ConicError> {
    toks.map(|t| {
        let (i, v) = t.split_once(':').ok_or_else(|| perr(line, format!("expected index:value, got `{t}`")))?;
        let i = i.parse().map_err(|_| perr(line, format!("bad index `{i}`")))?;
        Ok((i, parse_num(v, line)?))
    })
    .collect()
}

fn parse_relation(tok: &str, line: usize) -> Result<Relation, ConicError> {
    match tok {
        "<=" => Ok(Relation::Le),
        ">=" => Ok(Relation::Ge),
        "=" => Ok(Relation::Eq),
        _ => Err(perr(line, format!("unknown relation `{tok}`"))),
    }
}

/// Builds an SDP form from full row-major entries; off-diagonal pairs are
/// folded onto the upper triangle.
fn sdp_form(entries: &[(usize, f64)], dim: usize, scalars: usize, line: usize) -> Result<LinearForm<f64>, ConicError> {
    let mut form = LinearForm::new();
    for &(i, v) in entries {
        if i < dim * dim {
            let (r, c) = (i / dim, i % dim);
            if r == c {
                form.add(r, c, v);
            } else if r < c {
                form.add(r, c, v * 0.5);
            } else {
                form.add(c, r, v * 0.5);
            }
        } else if i < dim * dim + scalars {
            form.add_scalar(i - dim * dim, v);
        } else {
            return Err(perr(line, format!("index {i} out of range")));
        }
    }
    Ok(form)
}

pub fn parse_dump(text: &str) -> Result<DumpedProblem, ConicError> {
    let mut kind = None;
    let mut dim = 0usize;
    let mut scalars = 0usize;
    let mut vars = 0usize;
    let mut sense = Sense::Minimize;
    let mut sdp: Option<SemidefiniteProgram<f64>> = None;
    let mut lp: Option<LinearProgram<f64>> = None;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut toks = raw.split_whitespace();
        let Some(head) = toks.next() else { continue };
        if head.starts_with('#') {
            continue;
        }
        let mut arg = || toks.next().ok_or_else(|| perr(line, "missing argument"));
        match head {
            "kind" => kind = Some(arg()?.to_string()),
            "dim" => dim = arg()?.parse().map_err(|_| perr(line, "bad dim"))?,
            "scalars" => scalars = arg()?.parse().map_err(|_| perr(line, "bad scalar count"))?,
            "vars" => vars = arg()?.parse().map_err(|_| perr(line, "bad variable count"))?,
            "sense" => {
                sense = match arg()? {
                    "max" => Sense::Maximize,
                    "min" => Sense::Minimize,
                    other => return Err(perr(line, format!("unknown sense `{other}`"))),
                }
            }
            "bound" => {
                let p = lp.get_or_insert_with(|| LinearProgram::new(vec![0.0; vars]));
                let i: usize = arg()?.parse().map_err(|_| perr(line, "bad index"))?;
                let lo = parse_num(arg()?, line)?;
                let hi = parse_num(arg()?, line)?;
                if i >= p.num_vars() {
                    return Err(perr(line, format!("index {i} out of range")));
                }
                let b = VarBounds { lower: lo.is_finite().then_some(lo), upper: hi.is_finite().then_some(hi) };
                p.set_bounds(i, b);
            }
            "objective" => {
                let offset = parse_num(arg()?, line)?;
                let entries = parse_entries(toks, line)?;
                match kind.as_deref() {
                    Some("sdp") => {
                        let mut p = SemidefiniteProgram::new(dim, sdp_form(&entries, dim, scalars, line)?).with_scalars(scalars);
                        p.objective_offset = offset;
                        sdp = Some(p);
                    }
                    Some("lp") => {
                        let p = lp.get_or_insert_with(|| LinearProgram::new(vec![0.0; vars]));
                        for (i, v) in entries {
                            *p.objective.get_mut(i).ok_or_else(|| perr(line, format!("index {i} out of range")))? += v;
                        }
                    }
                    _ => return Err(perr(line, "objective before kind")),
                }
            }
            rel => {
                let relation = parse_relation(rel, line)?;
                let bound = parse_num(arg()?, line)?;
                let entries = parse_entries(toks, line)?;
                match kind.as_deref() {
                    Some("sdp") => {
                        let form = sdp_form(&entries, dim, scalars, line)?;
                        sdp.as_mut().ok_or_else(|| perr(line, "constraint before objective"))?.add_constraint(form, relation, bound);
                    }
                    Some("lp") => {
                        let p = lp.get_or_insert_with(|| LinearProgram::new(vec![0.0; vars]));
                        let mut coeffs = vec![0.0; vars];
                        for (i, v) in entries {
                            *coeffs.get_mut(i).ok_or_else(|| perr(line, format!("index {i} out of range")))? += v;
                        }
                        p.add_row(coeffs, relation, bound);
                    }
                    _ => return Err(perr(line, "constraint before kind")),
                }
            }
        }
    }
    match kind.as_deref() {
        Some("sdp") => Ok(DumpedProblem::Sdp { program: sdp.ok_or_else(|| perr(0, "missing objective"))?, sense }),
        Some("lp") => Ok(DumpedProblem::Lp { program: lp.unwrap_or_else(|| LinearProgram::new(vec![0.0; vars])), sense }),
        _ => Err(perr(0, "missing kind")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sdp_round_trip_preserves_values() {
        let mut obj = LinearForm::new();
        obj.add(0, 1, 0.5).add_scalar(0, 2.0);
        let mut sdp = SemidefiniteProgram::new(2, obj).with_scalars(1);
        sdp.objective_offset = 0.25;
        let mut f = LinearForm::new();
        f.add(0, 0, 1.0).add(1, 0, -0.3).add_scalar(0, 1.0);
        sdp.add_constraint(f, Relation::Le, 1.5);
        let text = write_sdp(&sdp, Sense::Maximize);
        let DumpedProblem::Sdp { program, sense } = parse_dump(&text).unwrap() else { panic!("kind") };
        assert_eq!(sense, Sense::Maximize);
        assert_eq!(program.objective.to_dense(2), sdp.objective.to_dense(2));
        assert_eq!(program.constraints[0].form.to_dense(2), sdp.constraints[0].form.to_dense(2));
        assert_eq!(program.objective_offset, 0.25);
        assert_eq!(write_sdp(&program, sense), text);
    }

    #[test]
    fn lp_round_trip() {
        let mut lp = LinearProgram::new(vec![1.0, -2.0]);
        lp.set_bounds(1, VarBounds::free());
        lp.add_row(vec![1.0, 1.0], Relation::Ge, 0.5);
        let text = write_lp(&lp, Sense::Minimize);
        let DumpedProblem::Lp { program, .. } = parse_dump(&text).unwrap() else { panic!("kind") };
        assert_eq!(program, lp);
    }

    #[test]
    fn malformed_entry_is_reported_with_line() {
        let err = parse_dump("kind lp\nvars 1\nobjective 0 0:1\n<= 1 0-1\n").unwrap_err();
        assert!(matches!(err, ConicError::Parse { line: 4, .. }));
    }
}
