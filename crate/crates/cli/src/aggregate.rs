//! Per-run metric rows and their cross-run summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::CliError;

pub const METRICS_HEADER: &str = "evaluations,qd_score,coverage,max_fitness";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub evaluations: usize,
    pub qd_score: f64,
    pub coverage: f64,
    pub max_fitness: f64,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.evaluations, r.qd_score, r.coverage, r.max_fitness).expect("string write");
    }
    out
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(CliError::Invalid(format!("metrics file must start with `{METRICS_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || CliError::Invalid(format!("metrics row {}: `{line}`", i + 1));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad());
            }
            let num = |k: usize| fields[k].parse::<f64>().map_err(|_| bad());
            Ok(MetricsRow {
                evaluations: fields[0].parse().map_err(|_| bad())?,
                qd_score: num(1)?,
                coverage: num(2)?,
                max_fitness: num(3)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatePoint {
    pub evaluations: usize,
    pub runs: usize,
    pub qd_score: Quartiles,
    pub coverage: Quartiles,
    pub max_fitness: Quartiles,
}

/// Quantile of sorted data with linear interpolation between order
/// statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Quartiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Quartiles {
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
    }
}

/// Quartiles at every evaluation count logged by all runs.
pub fn aggregate(runs: &[Vec<MetricsRow>]) -> Vec<AggregatePoint> {
    let mut by_budget: BTreeMap<usize, Vec<&MetricsRow>> = BTreeMap::new();
    for rows in runs {
        for r in rows {
            by_budget.entry(r.evaluations).or_default().push(r);
        }
    }
    by_budget
        .into_iter()
        .filter(|(_, rows)| rows.len() == runs.len())
        .map(|(evaluations, rows)| {
            let pick = |f: fn(&MetricsRow) -> f64| quartiles(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            AggregatePoint {
                evaluations,
                runs: rows.len(),
                qd_score: pick(|r| r.qd_score),
                coverage: pick(|r| r.coverage),
                max_fitness: pick(|r| r.max_fitness),
            }
        })
        .collect()
}
