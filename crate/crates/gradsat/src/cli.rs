//! The `gradsat` command-line interface.
//!
//! Subcommands: `solve` (anytime solving with MaxSAT-evaluation-style
//! `o`/`s`/`v` output), `generate` (instance families to DIMACS files),
//! `oracle` (exact optimum by enumeration), `verify` (check a claimed
//! cost), and `bench` (suite runs with CSV/JSON output and regret
//! summaries).
//!
//! Solve output contract: every strict improvement prints `o <cost>`; on
//! termination one `s SATISFIABLE` (cost 0) or `s UNKNOWN` line, then a
//! `v` line with signed literals for all variables. Diagnostics go to
//! stderr, so stdout is byte-deterministic for a fixed seed and one
//! worker. Exit codes: 10 when a satisfying assignment was found, 20 when
//! solved best-effort, 1 on errors. On SIGINT the current best `s`/`v` is
//! printed before exiting.

use std::error::Error;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::{Parser, Subcommand};

use crate::bench::{self, OutputFormat};
use crate::encoding::{build_incidence, Assignment};
use crate::engine::{self, SolveConfig, SolveReport};
use crate::formula::{parse_dimacs, preprocess, write_dimacs};
use crate::generators::{self, Family};
use crate::oracle;

/// Environment variable supplying the default worker count.
pub const THREADS_ENV: &str = "GRADSAT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "gradsat",
    version,
    about = "Anytime MaxSAT solving by gradient descent on a continuous relaxation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a DIMACS CNF file, streaming improvements as `o <cost>` lines.
    Solve {
        /// Input file in DIMACS CNF format.
        path: PathBuf,
        /// Wall-clock limit in seconds.
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        /// RNG seed for the initial relaxation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Adam learning rate.
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        /// Parallel portfolio size (defaults to $GRADSAT_THREADS, then 1).
        #[arg(long)]
        workers: Option<usize>,
        /// Re-randomize after this many iterations without improvement.
        #[arg(long)]
        restart_after: Option<u64>,
        /// Stop as soon as this cost is reached.
        #[arg(long)]
        target_cost: Option<usize>,
        /// Stop after this many optimizer steps.
        #[arg(long)]
        max_iters: Option<u64>,
        /// Write the improvement trace to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write instances of a family as DIMACS files.
    Generate {
        /// Instance family: php, gt, par, or cb.
        family: Family,
        /// Instance index (k >= 1).
        #[arg(value_parser = clap::value_parser!(u32).range(1..))]
        k: Option<u32>,
        /// Generate the whole suite k = 1..=N instead of a single index.
        #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
        suite: Option<u32>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compute the exact optimum of a small instance by enumeration.
    Oracle {
        path: PathBuf,
        /// Refuse instances with more variables than this.
        #[arg(long, default_value_t = oracle::DEFAULT_VAR_CAP)]
        cap: u32,
    },
    /// Check that an assignment file attains a claimed cost.
    Verify {
        path: PathBuf,
        /// File with whitespace-separated signed literals (`v` prefixes and
        /// `0` terminators are ignored; unmentioned variables are false).
        assignment: PathBuf,
        claimed: usize,
    },
    /// Run the solver over an instance suite and record results.
    Bench {
        /// Instance family: php, gt, par, or cb.
        family: Family,
        /// Number of instances (k = 1..=count).
        #[arg(long, default_value_t = 3)]
        count: u32,
        /// Comma-separated time limits in seconds.
        #[arg(long, value_delimiter = ',', default_value = "60")]
        time_limits: Vec<f64>,
        /// Baseline cost CSV (dataset,k,time_limit_s,cost); enables the
        /// regret summary.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Output path for records (.csv or .json).
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        /// Portfolio size per solve (defaults to $GRADSAT_THREADS, then 1).
        #[arg(long)]
        workers: Option<usize>,
        /// Stop each solve once this cost is reached.
        #[arg(long)]
        target_cost: Option<usize>,
    },
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_sigint(_sig: libc::c_int) {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

fn install_sigint_handler() {
    unsafe {
        libc::signal(
            libc::SIGINT,
            on_sigint as extern "C" fn(libc::c_int) as libc::sighandler_t,
        );
    }
}

fn default_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

/// Parses CLI arguments from the process environment and runs the selected
/// command, returning the process exit code.
pub fn run() -> i32 {
    dispatch(Cli::parse())
}

/// Runs an already-parsed invocation.
pub fn dispatch(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve {
            path,
            time_limit,
            seed,
            lr,
            workers,
            restart_after,
            target_cost,
            max_iters,
            trace,
        } => cmd_solve(
            &path,
            time_limit,
            seed,
            lr,
            default_workers(workers),
            restart_after,
            target_cost,
            max_iters,
            trace.as_deref(),
        ),
        Command::Generate {
            family,
            k,
            suite,
            out,
        } => cmd_generate(family, k, suite, &out),
        Command::Oracle { path, cap } => cmd_oracle(&path, cap),
        Command::Verify {
            path,
            assignment,
            claimed,
        } => cmd_verify(&path, &assignment, claimed),
        Command::Bench {
            family,
            count,
            time_limits,
            baseline,
            out,
            seed,
            lr,
            workers,
            target_cost,
        } => cmd_bench(
            family,
            count,
            &time_limits,
            baseline.as_deref(),
            &out,
            seed,
            lr,
            default_workers(workers),
            target_cost,
        ),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn parse_file(path: &Path) -> Result<crate::formula::ParsedDimacs, Box<dyn Error>> {
    let file = File::open(path)
        .map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    Ok(parse_dimacs(BufReader::new(file))?)
}

fn print_solution_lines(best_cost: usize, assignment: &Assignment) {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if best_cost == 0 {
        let _ = writeln!(out, "s SATISFIABLE");
    } else {
        let _ = writeln!(out, "s UNKNOWN");
    }
    let _ = writeln!(out, "{}", v_line(assignment));
    let _ = out.flush();
}

fn v_line(assignment: &Assignment) -> String {
    let mut line = String::from("v");
    for lit in assignment.to_literals() {
        line.push(' ');
        line.push_str(&lit.to_string());
    }
    line
}

fn solution_exit_code(best_cost: usize) -> i32 {
    if best_cost == 0 {
        10
    } else {
        20
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    path: &Path,
    time_limit: f64,
    seed: u64,
    lr: f64,
    workers: usize,
    restart_after: Option<u64>,
    target_cost: Option<usize>,
    max_iters: Option<u64>,
    trace_path: Option<&Path>,
) -> Result<i32, Box<dyn Error>> {
    install_sigint_handler();
    if !(time_limit.is_finite() && time_limit >= 0.0) {
        return Err(format!("time limit must be a nonnegative number, got {time_limit}").into());
    }
    let parsed = parse_file(path)?;
    for warning in &parsed.warnings {
        eprintln!("c warning: {warning}");
    }
    let cf = preprocess(parsed.formula);
    let w = build_incidence(&cf);
    let cfg = SolveConfig {
        time_limit: Duration::from_secs_f64(time_limit),
        learning_rate: lr,
        seed,
        restart_after,
        target_cost,
        max_iters,
        ..SolveConfig::default()
    };

    // Shared best for the SIGINT path; `o` lines are printed while holding
    // the lock so an interrupt can never interleave with them.
    let best: Mutex<Option<(usize, Assignment)>> = Mutex::new(None);

    let report: SolveReport = std::thread::scope(|scope| {
        let best_ref = &best;
        let cf_ref = &cf;
        let w_ref = &w;
        let cfg_ref = &cfg;
        let handle = scope.spawn(move || {
            let on_improve = |_elapsed: Duration, cost: usize, a: &Assignment| {
                let mut guard = best_ref.lock().expect("best lock poisoned");
                *guard = Some((cost, a.clone()));
                println!("o {cost}");
                let _ = io::stdout().flush();
            };
            if workers > 1 {
                engine::portfolio_solve(cf_ref, w_ref, cfg_ref, workers, on_improve)
            } else {
                engine::solve(cf_ref, w_ref, cfg_ref, on_improve)
            }
        });
        while !handle.is_finished() {
            if INTERRUPTED.load(Ordering::SeqCst) {
                let guard = best.lock().expect("best lock poisoned");
                match guard.as_ref() {
                    Some((cost, assignment)) => {
                        print_solution_lines(*cost, assignment);
                        std::process::exit(solution_exit_code(*cost));
                    }
                    None => {
                        println!("s UNKNOWN");
                        std::process::exit(20);
                    }
                }
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        handle.join().expect("solver thread panicked")
    })?;

    if let Some(trace_path) = trace_path {
        let mut out = io::BufWriter::new(File::create(trace_path)?);
        writeln!(out, "elapsed_s,iteration,cost")?;
        for imp in &report.trace {
            writeln!(
                out,
                "{},{},{}",
                imp.elapsed.as_secs_f64(),
                imp.iteration,
                imp.cost
            )?;
        }
    }

    print_solution_lines(report.best_cost, &report.best_assignment);
    eprintln!(
        "c iterations={} termination={} seed={}",
        report.iterations,
        report.termination.as_str(),
        report.seed
    );
    Ok(solution_exit_code(report.best_cost))
}

fn cmd_generate(
    family: Family,
    k: Option<u32>,
    suite: Option<u32>,
    out_dir: &Path,
) -> Result<i32, Box<dyn Error>> {
    let indices: Vec<u32> = match (k, suite) {
        (Some(_), Some(_)) => {
            return Err("give either an index or --suite, not both".into());
        }
        (Some(k), None) => vec![k],
        (None, Some(n)) => (1..=n).collect(),
        (None, None) => return Err("give an instance index or --suite N".into()),
    };
    fs::create_dir_all(out_dir)?;
    for k in indices {
        let formula = generators::generate(family, k)?;
        let path = out_dir.join(format!("{}_{}.cnf", family.name(), k));
        let mut contents = format!(
            "c family={} k={} vars={} clauses={}\n",
            family.name(),
            k,
            formula.num_vars(),
            formula.num_clauses()
        );
        contents.push_str(&write_dimacs(&formula));
        fs::write(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn cmd_oracle(path: &Path, cap: u32) -> Result<i32, Box<dyn Error>> {
    let parsed = parse_file(path)?;
    let result = oracle::brute_force(&parsed.formula, cap)?;
    println!("optimum {}", result.optimal_cost);
    println!("{}", v_line(&result.witness));
    Ok(0)
}

/// Reads an assignment file of signed literals. Tolerates `v` prefixes and
/// `0` terminators; later occurrences of a variable win; unmentioned
/// variables default to false.
fn read_assignment(path: &Path, num_vars: usize) -> Result<Assignment, Box<dyn Error>> {
    let mut assignment = Assignment::all_false(num_vars);
    let file = File::open(path)
        .map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    for line in BufReader::new(file).lines() {
        for token in line?.split_whitespace() {
            if token == "v" || token == "0" {
                continue;
            }
            let value: i32 = token
                .parse()
                .map_err(|_| format!("bad literal token `{token}` in assignment file"))?;
            let var = value.unsigned_abs() as usize;
            if var == 0 || var > num_vars {
                return Err(format!("literal {value} out of range for {num_vars} variables").into());
            }
            assignment.set(var - 1, value > 0);
        }
    }
    Ok(assignment)
}

fn cmd_verify(path: &Path, assignment_path: &Path, claimed: usize) -> Result<i32, Box<dyn Error>> {
    let parsed = parse_file(path)?;
    let assignment = read_assignment(assignment_path, parsed.formula.num_vars())?;
    let actual = parsed.formula.evaluate(&assignment)?;
    if actual == claimed {
        println!("verified: cost {claimed}");
        Ok(0)
    } else {
        eprintln!("mismatch: claimed {claimed}, actual {actual}");
        Ok(1)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    family: Family,
    count: u32,
    time_limits: &[f64],
    baseline: Option<&Path>,
    out: &Path,
    seed: u64,
    lr: f64,
    workers: usize,
    target_cost: Option<usize>,
) -> Result<i32, Box<dyn Error>> {
    // Load the baseline first so a missing file fails before hours of runs.
    let baseline = match baseline {
        Some(path) => Some(bench::load_baseline(path).map_err(|e| {
            format!("cannot load baseline {}: {e}", path.display())
        })?),
        None => None,
    };
    let cfg = SolveConfig {
        seed,
        learning_rate: lr,
        target_cost,
        ..SolveConfig::default()
    };
    if let Some(&bad) = time_limits
        .iter()
        .find(|&&s| !(s.is_finite() && s >= 0.0))
    {
        return Err(format!("time limit must be a nonnegative number, got {bad}").into());
    }
    let limits: Vec<Duration> = time_limits
        .iter()
        .map(|&s| Duration::from_secs_f64(s))
        .collect();
    let records = bench::run_suite(family, count, &cfg, &limits, workers)?;
    let format = OutputFormat::from_path(out);
    bench::emit_records(&records, format, out)?;
    println!("wrote {} records to {}", records.len(), out.display());

    if let Some(baseline) = baseline {
        let rows = bench::regret(&records, &baseline, "gradsat")?;
        let regret_path = regret_sibling_path(out);
        bench::emit_regret(&rows, format, &regret_path)?;
        for row in &rows {
            println!(
                "regret {} T={}s total={} avg_cost={}",
                row.dataset, row.time_limit_s, row.total_regret, row.avg_cost
            );
        }
        println!("wrote regret table to {}", regret_path.display());
    }
    Ok(0)
}

fn regret_sibling_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("bench");
    let ext = out.extension().and_then(|e| e.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_regret.{ext}"))
}
