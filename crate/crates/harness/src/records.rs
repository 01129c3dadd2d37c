//! Tab-separated run records and their per-problem aggregates.
//!
//! Per-run file columns: `problem param run generation bf d id id_fit`.
//! Aggregated file columns: `k iterations bf d id`, one file per problem.
//! Reals use six significant digits (C `%g`); undefined values are `NaN`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::config::ProblemKind;
use crate::HarnessError;

pub const RECORD_HEADER: [&str; 8] = ["problem", "param", "run", "generation", "bf", "d", "id", "id_fit"];
pub const AGGREGATE_HEADER: [&str; 5] = ["k", "iterations", "bf", "d", "id"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub problem: ProblemKind,
    pub param: usize,
    pub run: usize,
    pub generation: usize,
    pub bf: f64,
    pub d: f64,
    pub id: f64,
    pub id_fit: f64,
}

/// `%g` with six significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    const P: i32 = 6;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..P).contains(&exp) {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_records(records: &[RunRecord]) -> String {
    let mut out = RECORD_HEADER.join("\t");
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.problem,
            r.param,
            r.run,
            r.generation,
            format_real(r.bf),
            format_real(r.d),
            format_real(r.id),
            format_real(r.id_fit),
        );
    }
    out
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T, HarnessError> {
    field
        .parse()
        .map_err(|_| HarnessError::Records(format!("line {line}: bad {name} value {field:?}")))
}

pub fn read_records(text: &str) -> Result<Vec<RunRecord>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.split('\t').eq(RECORD_HEADER) => {}
        _ => return Err(HarnessError::Records("missing or wrong header row".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != RECORD_HEADER.len() {
            return Err(HarnessError::Records(format!(
                "line {lineno}: expected {} fields, found {}",
                RECORD_HEADER.len(),
                f.len()
            )));
        }
        out.push(RunRecord {
            problem: ProblemKind::parse(f[0])
                .map_err(|_| HarnessError::Records(format!("line {lineno}: unknown problem {:?}", f[0])))?,
            param: parse_field(f[1], lineno, "param")?,
            run: parse_field(f[2], lineno, "run")?,
            generation: parse_field(f[3], lineno, "generation")?,
            bf: parse_field(f[4], lineno, "bf")?,
            d: parse_field(f[5], lineno, "d")?,
            id: parse_field(f[6], lineno, "id")?,
            id_fit: parse_field(f[7], lineno, "id_fit")?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub param: usize,
    pub iterations: usize,
    pub bf: f64,
    pub d: f64,
    pub id: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Means across runs per `(problem, param, generation)`. NaN ids are left
/// out of the id mean. Every run must cover every generation.
pub fn aggregate(records: &[RunRecord]) -> Result<BTreeMap<ProblemKind, Vec<AggregateRow>>, HarnessError> {
    type Cell<'a> = BTreeMap<(usize, usize), &'a RunRecord>;
    let mut grouped: BTreeMap<(ProblemKind, usize), Cell<'_>> = BTreeMap::new();
    for r in records {
        let cell = grouped.entry((r.problem, r.param)).or_default();
        if cell.insert((r.generation, r.run), r).is_some() {
            return Err(HarnessError::Records(format!(
                "duplicate record for {} param {} run {} generation {}",
                r.problem, r.param, r.run, r.generation
            )));
        }
    }

    let mut missing = Vec::new();
    let mut out: BTreeMap<ProblemKind, Vec<AggregateRow>> = BTreeMap::new();
    for (&(problem, param), cells) in &grouped {
        let last_gen = cells.keys().map(|&(g, _)| g).max().unwrap_or(0);
        let runs: Vec<usize> = {
            let mut r: Vec<usize> = cells.keys().map(|&(_, r)| r).collect();
            r.sort_unstable();
            r.dedup();
            r
        };
        let rows = out.entry(problem).or_default();
        for generation in 0..=last_gen {
            let present: Vec<&RunRecord> = runs
                .iter()
                .filter_map(|&run| match cells.get(&(generation, run)) {
                    Some(r) => Some(*r),
                    None => {
                        missing.push(format!("{problem}/{param}/run {run}/generation {generation}"));
                        None
                    }
                })
                .collect();
            rows.push(AggregateRow {
                param,
                iterations: generation,
                bf: mean(present.iter().map(|r| r.bf)),
                d: mean(present.iter().map(|r| r.d)),
                id: mean(present.iter().map(|r| r.id).filter(|v| !v.is_nan())),
            });
        }
    }
    if !missing.is_empty() {
        return Err(HarnessError::MissingCells(missing));
    }
    Ok(out)
}

pub fn write_aggregate(rows: &[AggregateRow]) -> String {
    let mut out = AGGREGATE_HEADER.join("\t");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.param,
            r.iterations,
            format_real(r.bf),
            format_real(r.d),
            format_real(r.id)
        );
    }
    out
}

pub fn read_aggregate(text: &str) -> Result<Vec<AggregateRow>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.split('\t').eq(AGGREGATE_HEADER) => {}
        _ => return Err(HarnessError::Records("missing or wrong aggregate header".into())),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != AGGREGATE_HEADER.len() {
                return Err(HarnessError::Records(format!(
                    "line {}: wrong field count",
                    i + 1
                )));
            }
            Ok(AggregateRow {
                param: parse_field(f[0], i + 1, "k")?,
                iterations: parse_field(f[1], i + 1, "iterations")?,
                bf: parse_field(f[2], i + 1, "bf")?,
                d: parse_field(f[3], i + 1, "d")?,
                id: parse_field(f[4], i + 1, "id")?,
            })
        })
        .collect()
}
