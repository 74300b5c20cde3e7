//! Benchmark harness: runs solver configurations over instance suites under
//! wall-clock limits, records anytime cost traces, and summarizes results
//! against baseline costs.
//!
//! Two aggregates are reported per (dataset, time limit) group:
//!
//! - `total_regret`: the sum over instances of `cost - baseline_cost`,
//!   where the baseline map supplies the best-known cost per
//!   (dataset, k, time limit);
//! - `avg_cost`: the floored mean best-cost over the group's instances,
//!   the headline number used by the summary tables this crate's fixtures
//!   are checked against.
//!
//! File formats: records go to CSV with the exact column set
//! `family,k,num_vars,num_clauses,time_limit_s,seed,workers,best_cost,time_to_best_s,iterations`
//! (traces are JSON-only); baselines are CSV with columns
//! `dataset,k,time_limit_s,cost`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::build_incidence;
use crate::engine::{self, EngineError, SolveConfig};
use crate::formula::{preprocess, FormulaError};
use crate::generators::{self, Family, GeneratorError};
use crate::oracle::{self, OracleError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed csv at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("no baseline cost for ({dataset}, k={k}, {time_limit_s}s)")]
    MissingBaseline {
        dataset: String,
        k: u32,
        time_limit_s: f64,
    },
    #[error("recorded cost failed re-verification for {dataset} k={k}")]
    VerificationFailed { dataset: String, k: u32 },
}

/// One benchmark measurement: an instance, a time limit, and the solve
/// outcome. The stored assignment is re-verified before a record is
/// created, so `best_cost` is trustworthy by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub family: String,
    pub k: u32,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub time_limit_s: f64,
    pub seed: u64,
    pub workers: usize,
    pub best_cost: usize,
    pub time_to_best_s: f64,
    pub iterations: u64,
    /// Improvement trace as (elapsed seconds, cost) pairs; serialized in
    /// JSON output only.
    #[serde(default)]
    pub trace: Vec<(f64, usize)>,
}

/// Per-(dataset, time limit) summary against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub solver: String,
    pub dataset: String,
    pub time_limit_s: f64,
    /// Sum over instances of (cost - baseline cost).
    pub total_regret: i64,
    /// Floored mean best-cost over the group's instances.
    pub avg_cost: i64,
}

/// Baseline costs keyed by (dataset, k, time limit in milliseconds).
/// Milliseconds keep the key hashable while tolerating fractional seconds.
pub type BaselineMap = HashMap<(String, u32, u64), i64>;

fn millis(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

/// One row of a baseline or recorded-cost table.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub dataset: String,
    pub k: u32,
    pub time_limit_s: f64,
    pub cost: i64,
}

/// Reads a `dataset,k,time_limit_s,cost` table.
pub fn read_cost_rows<R: BufRead>(reader: R) -> Result<Vec<CostRow>, BenchError> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 {
            if trimmed != "dataset,k,time_limit_s,cost" {
                return Err(BenchError::Csv {
                    line: 1,
                    message: format!("unexpected header `{trimmed}`"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(BenchError::Csv {
                line: idx + 1,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse_err = |what: &str| BenchError::Csv {
            line: idx + 1,
            message: format!("bad {what}"),
        };
        rows.push(CostRow {
            dataset: fields[0].to_string(),
            k: fields[1].parse().map_err(|_| parse_err("k"))?,
            time_limit_s: fields[2].parse().map_err(|_| parse_err("time_limit_s"))?,
            cost: fields[3].parse().map_err(|_| parse_err("cost"))?,
        });
    }
    Ok(rows)
}

pub fn baseline_from_rows(rows: &[CostRow]) -> BaselineMap {
    rows.iter()
        .map(|r| {
            (
                (r.dataset.clone(), r.k, millis(r.time_limit_s)),
                r.cost,
            )
        })
        .collect()
}

/// Loads a baseline CSV file into a lookup map.
pub fn load_baseline(path: &Path) -> Result<BaselineMap, BenchError> {
    let rows = read_cost_rows(BufReader::new(File::open(path)?))?;
    Ok(baseline_from_rows(&rows))
}

/// Runs the solver over `family` instances `k = 1..=count`, once per time
/// limit, in ascending `k`. Every record's cost is re-verified against its
/// assignment before being kept.
pub fn run_suite(
    family: Family,
    count: u32,
    cfg: &SolveConfig,
    time_limits: &[Duration],
    workers: usize,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::new();
    if count == 0 {
        return Ok(records);
    }
    for k in 1..=count {
        let formula = generators::generate(family, k)?;
        let num_vars = formula.num_vars();
        let num_clauses = formula.num_clauses();
        let cf = preprocess(formula);
        let w = build_incidence(&cf);
        for &limit in time_limits {
            let run_cfg = SolveConfig {
                time_limit: limit,
                ..cfg.clone()
            };
            let report = if workers > 1 {
                engine::portfolio_solve(&cf, &w, &run_cfg, workers, |_, _, _| {})?
            } else {
                engine::solve(&cf, &w, &run_cfg, |_, _, _| {})?
            };
            if !oracle::verify(cf.source(), &report.best_assignment, report.best_cost)? {
                return Err(BenchError::VerificationFailed {
                    dataset: family.name().to_string(),
                    k,
                });
            }
            records.push(BenchRecord {
                family: family.name().to_string(),
                k,
                num_vars,
                num_clauses,
                time_limit_s: limit.as_secs_f64(),
                seed: run_cfg.seed,
                workers,
                best_cost: report.best_cost,
                time_to_best_s: report
                    .trace
                    .last()
                    .map_or(0.0, |imp| imp.elapsed.as_secs_f64()),
                iterations: report.iterations,
                trace: report
                    .trace
                    .iter()
                    .map(|imp| (imp.elapsed.as_secs_f64(), imp.cost))
                    .collect(),
            });
        }
    }
    Ok(records)
}

/// Summarizes records per (dataset, time limit) against the baseline map.
/// Errors if any record has no baseline entry. Rows come out sorted by
/// dataset, then time limit.
pub fn regret(
    records: &[BenchRecord],
    baseline: &BaselineMap,
    solver: &str,
) -> Result<Vec<RegretRow>, BenchError> {
    let mut groups: HashMap<(String, u64), (f64, i64, i64, i64)> = HashMap::new();
    for record in records {
        let key = (record.family.clone(), record.k, millis(record.time_limit_s));
        let base = *baseline
            .get(&key)
            .ok_or_else(|| BenchError::MissingBaseline {
                dataset: record.family.clone(),
                k: record.k,
                time_limit_s: record.time_limit_s,
            })?;
        let entry = groups
            .entry((record.family.clone(), millis(record.time_limit_s)))
            .or_insert((record.time_limit_s, 0, 0, 0));
        entry.1 += record.best_cost as i64 - base;
        entry.2 += record.best_cost as i64;
        entry.3 += 1;
    }
    let mut rows: Vec<RegretRow> = groups
        .into_iter()
        .map(
            |((dataset, _), (time_limit_s, total_regret, cost_sum, n))| RegretRow {
                solver: solver.to_string(),
                dataset,
                time_limit_s,
                total_regret,
                avg_cost: cost_sum.div_euclid(n),
            },
        )
        .collect();
    rows.sort_by(|a, b| {
        (&a.dataset, millis(a.time_limit_s)).cmp(&(&b.dataset, millis(b.time_limit_s)))
    });
    Ok(rows)
}

pub const RECORD_CSV_HEADER: &str =
    "family,k,num_vars,num_clauses,time_limit_s,seed,workers,best_cost,time_to_best_s,iterations";

pub fn write_records_csv<W: Write>(records: &[BenchRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "{RECORD_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.family,
            r.k,
            r.num_vars,
            r.num_clauses,
            r.time_limit_s,
            r.seed,
            r.workers,
            r.best_cost,
            r.time_to_best_s,
            r.iterations
        )?;
    }
    Ok(())
}

/// Parses records written by [`write_records_csv`]. Traces are not part of
/// the CSV format and come back empty.
pub fn read_records_csv<R: BufRead>(reader: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 {
            if trimmed != RECORD_CSV_HEADER {
                return Err(BenchError::Csv {
                    line: 1,
                    message: format!("unexpected header `{trimmed}`"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 10 {
            return Err(BenchError::Csv {
                line: idx + 1,
                message: format!("expected 10 fields, got {}", fields.len()),
            });
        }
        let err = |what: &str| BenchError::Csv {
            line: idx + 1,
            message: format!("bad {what}"),
        };
        records.push(BenchRecord {
            family: fields[0].to_string(),
            k: fields[1].parse().map_err(|_| err("k"))?,
            num_vars: fields[2].parse().map_err(|_| err("num_vars"))?,
            num_clauses: fields[3].parse().map_err(|_| err("num_clauses"))?,
            time_limit_s: fields[4].parse().map_err(|_| err("time_limit_s"))?,
            seed: fields[5].parse().map_err(|_| err("seed"))?,
            workers: fields[6].parse().map_err(|_| err("workers"))?,
            best_cost: fields[7].parse().map_err(|_| err("best_cost"))?,
            time_to_best_s: fields[8].parse().map_err(|_| err("time_to_best_s"))?,
            iterations: fields[9].parse().map_err(|_| err("iterations"))?,
            trace: Vec::new(),
        });
    }
    Ok(records)
}

pub const REGRET_CSV_HEADER: &str = "solver,dataset,time_limit_s,total_regret,avg_cost";

pub fn write_regret_csv<W: Write>(rows: &[RegretRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "{REGRET_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.solver, r.dataset, r.time_limit_s, r.total_regret, r.avg_cost
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Picks the format from a path extension; defaults to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

pub fn emit_records(
    records: &[BenchRecord],
    format: OutputFormat,
    path: &Path,
) -> Result<(), BenchError> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_records_csv(records, &mut out)?,
        OutputFormat::Json => serde_json::to_writer_pretty(&mut out, records)?,
    }
    out.flush()?;
    Ok(())
}

pub fn emit_regret(
    rows: &[RegretRow],
    format: OutputFormat,
    path: &Path,
) -> Result<(), BenchError> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_regret_csv(rows, &mut out)?,
        OutputFormat::Json => serde_json::to_writer_pretty(&mut out, rows)?,
    }
    out.flush()?;
    Ok(())
}
