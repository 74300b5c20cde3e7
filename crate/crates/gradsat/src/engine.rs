//! The anytime solving loop.
//!
//! Each iteration runs: forward pass, Boolean projection, exact
//! falsified-clause mask, best-solution bookkeeping, masked loss and
//! gradient, one Adam step. The loop ends on the wall-clock limit, a zero
//! loss (every active clause satisfied), a caller-supplied target cost, or
//! an iteration cap. Costs are only ever reported when they strictly
//! improve on the best found so far, so the improvement stream is strictly
//! decreasing and the solver can be stopped at any point.
//!
//! [`portfolio_solve`] runs several independent loops on consecutive seeds
//! against the shared read-only matrix and merges their improvement
//! streams; it is the CPU-parallel throughput knob.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{project_into, Activation, Assignment, EncodingError, IncidenceMatrix};
use crate::formula::CompiledFormula;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid solve configuration: {0}")]
    InvalidConfig(String),
    #[error("gradient has length {got}, expected {expected}")]
    GradientLength { expected: usize, got: usize },
    #[error("non-finite gradient component {0}")]
    NonFiniteGradient(usize),
    #[error("non-finite relaxation state at iteration {iteration}: {source}")]
    NonFiniteState {
        iteration: u64,
        source: EncodingError,
    },
    #[error("matrix shape does not match formula ({0})")]
    ShapeMismatch(String),
}

/// The mutable solver state: the relaxation vector (the only "learnable"
/// quantity) plus the Adam moment accumulators.
#[derive(Debug, Clone)]
pub struct RelaxationState {
    pub x: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub step: u64,
    pub rng_seed: u64,
}

/// Solver parameters. Defaults: 60 s limit, learning rate `1e-4`, Adam
/// moments `0.9`/`0.999` with epsilon `1e-8`, seed 0, no iteration cap, no
/// target cost, no stall restarts.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub time_limit: Duration,
    pub max_iters: Option<u64>,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Stop as soon as the best cost is at or below this value.
    pub target_cost: Option<usize>,
    /// Re-randomize the relaxation after this many iterations without an
    /// improvement (best solution is kept). Off by default.
    pub restart_after: Option<u64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: Duration::from_secs(60),
            max_iters: None,
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            target_cost: None,
            restart_after: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(EngineError::InvalidConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        for (name, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(EngineError::InvalidConfig(format!(
                    "{name} must be in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.adam_eps > 0.0 && self.adam_eps.is_finite()) {
            return Err(EngineError::InvalidConfig(
                "adam_eps must be positive and finite".into(),
            ));
        }
        if self.restart_after == Some(0) {
            return Err(EngineError::InvalidConfig(
                "restart_after must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TimeLimit,
    ZeroLoss,
    TargetReached,
    IterCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TimeLimit => "time_limit",
            Termination::ZeroLoss => "zero_loss",
            Termination::TargetReached => "target_reached",
            Termination::IterCap => "iter_cap",
        }
    }
}

/// One entry of the improvement stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub elapsed: Duration,
    pub iteration: u64,
    pub cost: usize,
}

/// Final outcome of a solve run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Best cost found, including the base cost of empty clauses.
    pub best_cost: usize,
    pub best_assignment: Assignment,
    /// One record per strict improvement; costs strictly decrease.
    pub trace: Vec<Improvement>,
    /// Optimizer steps completed.
    pub iterations: u64,
    pub termination: Termination,
    pub seed: u64,
}

fn draw_relaxation(rng: &mut ChaCha8Rng, x: &mut [f64]) {
    // Uniform(-1, 1) keeps tanh responsive and both projections
    // equiprobable; exact zeros are re-drawn so projection ties cannot
    // occur at initialization.
    let dist = Uniform::new(-1.0f64, 1.0f64);
    for xi in x.iter_mut() {
        *xi = loop {
            let v = dist.sample(rng);
            if v != 0.0 {
                break v;
            }
        };
    }
}

/// Fresh state with `x` drawn i.i.d. from Uniform(-1, 1) and zeroed Adam
/// moments. Identical `(n, seed)` produces identical state.
pub fn init_state(n: usize, seed: u64) -> RelaxationState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    draw_relaxation(&mut rng, &mut x);
    RelaxationState {
        x,
        adam_m: vec![0.0; n],
        adam_v: vec![0.0; n],
        step: 0,
        rng_seed: seed,
    }
}

/// One Adam update with bias correction.
pub fn adam_step(
    state: &mut RelaxationState,
    grad: &[f64],
    cfg: &SolveConfig,
) -> Result<(), EngineError> {
    if grad.len() != state.x.len() {
        return Err(EngineError::GradientLength {
            expected: state.x.len(),
            got: grad.len(),
        });
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(EngineError::NonFiniteGradient(i));
    }
    let t = state.step + 1;
    let bc1 = 1.0 - cfg.adam_beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.adam_beta2.powi(t as i32);
    for (i, &g) in grad.iter().enumerate() {
        state.adam_m[i] = cfg.adam_beta1 * state.adam_m[i] + (1.0 - cfg.adam_beta1) * g;
        state.adam_v[i] = cfg.adam_beta2 * state.adam_v[i] + (1.0 - cfg.adam_beta2) * g * g;
        let m_hat = state.adam_m[i] / bc1;
        let v_hat = state.adam_v[i] / bc2;
        state.x[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
    state.step = t;
    Ok(())
}

fn check_shapes(cf: &CompiledFormula, w: &IncidenceMatrix) -> Result<(), EngineError> {
    if w.num_vars() != cf.num_vars() || w.num_clauses() != cf.num_active() {
        return Err(EngineError::ShapeMismatch(format!(
            "matrix is {}x{}, formula has {} vars and {} active clauses",
            w.num_vars(),
            w.num_clauses(),
            cf.num_vars(),
            cf.num_active()
        )));
    }
    Ok(())
}

fn solve_inner<F>(
    cf: &CompiledFormula,
    w: &IncidenceMatrix,
    cfg: &SolveConfig,
    seed: u64,
    stop: Option<&AtomicBool>,
    mut on_improve: F,
) -> Result<SolveReport, EngineError>
where
    F: FnMut(&Improvement, &Assignment),
{
    cfg.validate()?;
    check_shapes(cf, w)?;
    let n = w.num_vars();
    let base_cost = cf.base_cost();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = RelaxationState {
        x: vec![0.0; n],
        adam_m: vec![0.0; n],
        adam_v: vec![0.0; n],
        step: 0,
        rng_seed: seed,
    };
    draw_relaxation(&mut rng, &mut state.x);

    let free_vars: Vec<usize> = (0..n).filter(|&i| w.var_degree(i) == 0).collect();

    let mut act = Activation::zeros(n, w.num_clauses());
    let mut mask: Vec<bool> = Vec::with_capacity(w.num_clauses());
    let mut grad = vec![0.0; n];
    let mut projection = Assignment::all_false(n);

    // Sentinel strictly above any reachable cost, so the cost of the very
    // first projection is always recorded as an improvement.
    let mut best_cost = base_cost + w.num_clauses() + 1;
    let mut best_assignment = Assignment::all_false(n);
    let mut trace: Vec<Improvement> = Vec::new();
    let mut iterations: u64 = 0;
    let mut last_improvement_iter: u64 = 0;
    let start = Instant::now();

    // Every pass evaluates first and checks budgets second, so iteration 0
    // is always recorded and a report always carries a real assignment; the
    // wall clock is checked once per iteration and may overshoot the limit
    // by at most one iteration.
    let termination = loop {
        w.forward_into(&state.x, &mut act)
            .map_err(|source| EngineError::NonFiniteState {
                iteration: iterations,
                source,
            })?;
        project_into(&state.x, &mut projection);
        // Variables in no active clause never receive gradient; report them
        // false rather than at their frozen random sign.
        for &i in &free_vars {
            projection.set(i, false);
        }
        w.unsat_mask_into(&projection, &mut mask);
        let unsat = mask.iter().filter(|&&b| b).count();
        let cost = base_cost + unsat;

        if cost < best_cost {
            best_cost = cost;
            best_assignment = projection.clone();
            let record = Improvement {
                elapsed: start.elapsed(),
                iteration: iterations,
                cost,
            };
            on_improve(&record, &best_assignment);
            trace.push(record);
            last_improvement_iter = iterations;
        }

        if unsat == 0 {
            break Termination::ZeroLoss;
        }
        if cfg.target_cost.is_some_and(|t| best_cost <= t) {
            break Termination::TargetReached;
        }
        if start.elapsed() >= cfg.time_limit || stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            break Termination::TimeLimit;
        }
        if cfg.max_iters.is_some_and(|cap| iterations >= cap) {
            break Termination::IterCap;
        }

        w.loss_and_grad_into(&act, &mask, &mut grad);
        adam_step(&mut state, &grad, cfg)?;
        iterations += 1;

        if let Some(stall) = cfg.restart_after {
            if iterations - last_improvement_iter >= stall {
                draw_relaxation(&mut rng, &mut state.x);
                state.adam_m.fill(0.0);
                state.adam_v.fill(0.0);
                state.step = 0;
                last_improvement_iter = iterations;
            }
        }
    };

    debug_assert_eq!(
        cf.source()
            .evaluate(&best_assignment)
            .expect("assignment covers all variables"),
        best_cost
    );

    Ok(SolveReport {
        best_cost,
        best_assignment,
        trace,
        iterations,
        termination,
        seed,
    })
}

/// Runs the solving loop until the time limit, a zero loss, the target
/// cost, or the iteration cap. `on_improve` fires on every strict
/// improvement with the elapsed time, the new cost, and the assignment.
pub fn solve<F>(
    cf: &CompiledFormula,
    w: &IncidenceMatrix,
    cfg: &SolveConfig,
    mut on_improve: F,
) -> Result<SolveReport, EngineError>
where
    F: FnMut(Duration, usize, &Assignment),
{
    solve_inner(cf, w, cfg, cfg.seed, None, |record, a| {
        on_improve(record.elapsed, record.cost, a)
    })
}

struct PortfolioBest {
    cost: usize,
    assignment: Assignment,
    trace: Vec<Improvement>,
    winner: usize,
}

/// Runs `worker_count` independent solves on seeds `seed, seed+1, ...`
/// against the shared matrix and merges their improvement streams into a
/// single monotone stream. With one worker this is exactly [`solve`].
///
/// The merged report sums iterations across workers and takes the
/// termination reason of the worker that produced the final best. Workers
/// are told to stop early once any of them terminates with a zero loss or
/// the target cost.
pub fn portfolio_solve<F>(
    cf: &CompiledFormula,
    w: &IncidenceMatrix,
    cfg: &SolveConfig,
    worker_count: usize,
    on_improve: F,
) -> Result<SolveReport, EngineError>
where
    F: Fn(Duration, usize, &Assignment) + Send + Sync,
{
    if worker_count == 0 {
        return Err(EngineError::InvalidConfig(
            "worker_count must be at least 1".into(),
        ));
    }
    if worker_count == 1 {
        return solve(cf, w, cfg, on_improve);
    }
    cfg.validate()?;
    check_shapes(cf, w)?;

    let stop = AtomicBool::new(false);
    let shared = Mutex::new(PortfolioBest {
        cost: cf.base_cost() + w.num_clauses() + 1,
        assignment: Assignment::all_false(w.num_vars()),
        trace: Vec::new(),
        winner: 0,
    });

    let reports: Vec<Result<SolveReport, EngineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..worker_count)
            .map(|worker| {
                let shared = &shared;
                let stop = &stop;
                let on_improve = &on_improve;
                let seed = cfg.seed.wrapping_add(worker as u64);
                scope.spawn(move || {
                    let callback = |record: &Improvement, a: &Assignment| {
                        let mut best = shared.lock().expect("portfolio lock poisoned");
                        if record.cost < best.cost {
                            best.cost = record.cost;
                            best.assignment = a.clone();
                            best.winner = worker;
                            // merged trace: elapsed/iteration are local to
                            // the worker that found the improvement
                            best.trace.push(record.clone());
                            on_improve(record.elapsed, record.cost, a);
                        }
                    };
                    let result = solve_inner(cf, w, cfg, seed, Some(stop), callback);
                    if let Ok(report) = &result {
                        if matches!(
                            report.termination,
                            Termination::ZeroLoss | Termination::TargetReached
                        ) {
                            stop.store(true, Ordering::Relaxed);
                        }
                    }
                    result
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("portfolio worker panicked"))
            .collect()
    });

    let mut reports_ok = Vec::with_capacity(worker_count);
    for r in reports {
        reports_ok.push(r?);
    }
    let best = shared.into_inner().expect("portfolio lock poisoned");
    let iterations = reports_ok.iter().map(|r| r.iterations).sum();
    let termination = reports_ok[best.winner].termination;

    Ok(SolveReport {
        best_cost: best.cost,
        best_assignment: best.assignment,
        trace: best.trace,
        iterations,
        termination,
        seed: cfg.seed,
    })
}
