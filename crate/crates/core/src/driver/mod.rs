//! Outer loops: the generic proximal Newton-type method and the FISTA /
//! SpaRSA baselines, with per-iteration traces and convergence diagnostics.

mod baselines;
pub mod diagnostics;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureKind, CurvatureModel, SecantPair, UpdateOutcome};
use crate::error::{Error, Result};
use crate::linesearch::{self, LineSearchConfig, LineSearchFailure, LineSearchStep};
use crate::problem::{CompositeProblem, EvalCounts, Vector};
use crate::subproblem::{
    direction_quality_check, forcing_term_for, solve_subproblem, ForcingState, InnerOptions, LocalModel,
    SubproblemPolicy,
};

pub use baselines::{run_fista, run_sparsa};
pub use diagnostics::{dennis_more_ratio, rate_estimate, relative_suboptimality, unit_step_from, RateClass};

pub const DEFAULT_LBFGS_MEMORY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ProxNewton,
    ProxBfgs,
    ProxLbfgs { memory: usize },
    Fista,
    Sparsa,
}

impl Method {
    pub fn prox_lbfgs() -> Self {
        Method::ProxLbfgs {
            memory: DEFAULT_LBFGS_MEMORY,
        }
    }

    fn curvature_kind(&self) -> CurvatureKind {
        match *self {
            Method::ProxNewton => CurvatureKind::Exact,
            Method::ProxBfgs => CurvatureKind::DenseBfgs,
            Method::ProxLbfgs { memory } => CurvatureKind::Lbfgs { memory },
            Method::Fista | Method::Sparsa => CurvatureKind::ScaledIdentity,
        }
    }

    /// Name used on the command line and in summaries.
    pub fn cli_name(&self) -> &'static str {
        match self {
            Method::ProxNewton => "prox-newton",
            Method::ProxBfgs => "prox-bfgs",
            Method::ProxLbfgs { .. } => "prox-lbfgs",
            Method::Fista => "fista",
            Method::Sparsa => "sparsa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::ProxLbfgs { memory } => write!(f, "prox-lbfgs({memory})"),
            other => f.write_str(other.cli_name()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prox-newton" => Ok(Method::ProxNewton),
            "prox-bfgs" => Ok(Method::ProxBfgs),
            "prox-lbfgs" => Ok(Method::prox_lbfgs()),
            "fista" => Ok(Method::Fista),
            "sparsa" => Ok(Method::Sparsa),
            _ => Err(Error::contract(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub method: Method,
    pub policy: SubproblemPolicy,
    /// Stop once `||G_f(x_k)|| <= tol`.
    pub tol: f64,
    pub max_outer: usize,
    pub linesearch: LineSearchConfig,
    pub seed: u64,
    pub inner: InnerOptions,
    /// Starting point; the problem's default when `None`.
    pub x0: Option<Vector>,
    /// High-accuracy minimizer used for error and Dennis–Moré diagnostics;
    /// taken from the problem's known optimum when `None`.
    pub reference: Option<Vector>,
    /// Record wall-clock time in the trace (zeros otherwise, for
    /// byte-reproducible traces).
    pub record_clock: bool,
    /// Restart FISTA momentum whenever the objective increases.
    pub fista_restart: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::ProxNewton,
            policy: SubproblemPolicy::adaptive(),
            tol: 1e-8,
            max_outer: 500,
            linesearch: LineSearchConfig::default(),
            seed: 0,
            inner: InnerOptions::default(),
            x0: None,
            reference: None,
            record_clock: true,
            fista_restart: false,
        }
    }
}

impl SolverOptions {
    pub fn new(method: Method, policy: SubproblemPolicy) -> Self {
        SolverOptions {
            method,
            policy,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::contract("tol must be positive"));
        }
        if self.max_outer < 1 {
            return Err(Error::contract("max_outer must be at least 1"));
        }
        if let Method::ProxLbfgs { memory } = self.method {
            if memory < 1 {
                return Err(Error::contract("L-BFGS memory must be at least 1"));
            }
        }
        self.policy.validate()?;
        self.linesearch.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

impl SolveStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            SolveStatus::Converged => 0,
            SolveStatus::MaxIterations => 2,
            SolveStatus::LineSearchFailed => 3,
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::LineSearchFailed => "line_search_failed",
        })
    }
}

/// One outer step `x_{k-1} -> x_k`; `f` and `norm_gf` are taken at `x_k`,
/// counters are cumulative after the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    pub t: f64,
    pub f: f64,
    pub norm_gf: f64,
    pub lambda_pred: f64,
    pub eta: f64,
    pub inner_iters: usize,
    pub cum_fev: u64,
    pub cum_gev: u64,
    pub cum_prox: u64,
    pub elapsed_sec: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dennis_more_ratios: Option<Vec<f64>>,
    /// First iteration after which every step length was one.
    pub unit_step_from: Option<usize>,
    /// `||x_k - x*||` for `k = 0, 1, ...` when a reference is known.
    pub errors: Option<Vec<f64>>,
    pub rate: Option<RateClass>,
    pub skipped_updates: usize,
    pub curvature_resets: usize,
    pub total_inner_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x_final: Vector,
    pub f_final: f64,
    pub norm_gf_final: f64,
    pub f_initial: f64,
    pub trace: Vec<IterateRecord>,
    pub diagnostics: Diagnostics,
    pub method: Method,
    pub policy: SubproblemPolicy,
    pub seed: u64,
    pub wall_sec: f64,
    pub counts: EvalCounts,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Runs the method selected in `options`.
pub fn solve(problem: &CompositeProblem, options: &SolverOptions) -> Result<SolveReport> {
    options.validate()?;
    match options.method {
        Method::Fista => baselines::fista_loop(problem, options),
        _ => newton_type(problem, options),
    }
}

/// Shared bookkeeping for the outer loops.
pub(crate) struct Tracker {
    clock: Instant,
    record_clock: bool,
    pub(crate) trace: Vec<IterateRecord>,
    pub(crate) errors: Option<Vec<f64>>,
    reference: Option<Vector>,
}

impl Tracker {
    pub(crate) fn new(problem: &CompositeProblem, options: &SolverOptions) -> Result<Self> {
        let reference = options.reference.clone().or_else(|| problem.known_minimizer());
        if let Some(r) = &reference {
            problem.check_dim(r)?;
        }
        Ok(Tracker {
            clock: Instant::now(),
            record_clock: options.record_clock,
            trace: Vec::new(),
            errors: reference.as_ref().map(|_| Vec::new()),
            reference,
        })
    }

    pub(crate) fn reference(&self) -> Option<&Vector> {
        self.reference.as_ref()
    }

    pub(crate) fn observe(&mut self, x: &Vector) {
        if let (Some(errors), Some(r)) = (self.errors.as_mut(), self.reference.as_ref()) {
            errors.push((x - r).norm());
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        if self.record_clock {
            self.clock.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn record(
        &mut self,
        t: f64,
        f: f64,
        norm_gf: f64,
        lambda_pred: f64,
        eta: f64,
        inner_iters: usize,
        counts: &EvalCounts,
    ) {
        let elapsed_sec = self.elapsed();
        self.trace.push(IterateRecord {
            iter: self.trace.len() + 1,
            t,
            f,
            norm_gf,
            lambda_pred,
            eta,
            inner_iters,
            cum_fev: counts.fev,
            cum_gev: counts.gev,
            cum_prox: counts.prox,
            elapsed_sec,
        });
    }

    pub(crate) fn finish(self, outcome: Outcome, options: &SolverOptions, mut diagnostics: Diagnostics) -> SolveReport {
        let steps: Vec<(usize, f64)> = self.trace.iter().map(|r| (r.iter, r.t)).collect();
        diagnostics.unit_step_from = unit_step_from(&steps);
        diagnostics.total_inner_iterations = self.trace.iter().map(|r| r.inner_iters).sum();
        diagnostics.rate = self.errors.as_deref().map(rate_estimate);
        diagnostics.errors = self.errors;
        SolveReport {
            status: outcome.status,
            x_final: outcome.x,
            f_final: outcome.f,
            norm_gf_final: outcome.norm_gf,
            f_initial: outcome.f_initial,
            trace: self.trace,
            diagnostics,
            method: options.method,
            policy: options.policy,
            seed: options.seed,
            wall_sec: if options.record_clock {
                self.clock.elapsed().as_secs_f64()
            } else {
                0.0
            },
            counts: outcome.counts,
        }
    }
}

pub(crate) struct Outcome {
    pub status: SolveStatus,
    pub x: Vector,
    pub f: f64,
    pub norm_gf: f64,
    pub f_initial: f64,
    pub counts: EvalCounts,
}

pub(crate) fn starting_point(problem: &CompositeProblem, options: &SolverOptions) -> Result<Vector> {
    let x0 = options.x0.clone().unwrap_or_else(|| problem.start());
    problem.check_dim(&x0)?;
    Ok(x0)
}

fn fresh_model(kind: CurvatureKind, dim: usize) -> CurvatureModel {
    CurvatureModel::from_kind(kind, dim)
}

fn install_hessian(
    model: &mut CurvatureModel,
    problem: &CompositeProblem,
    x: &Vector,
    counts: &mut EvalCounts,
) -> Result<()> {
    if model.kind() == CurvatureKind::Exact {
        let op = problem.smooth.hessian(x).ok_or(Error::HessianUnavailable)?;
        counts.hess += 1;
        model.set_hessian(op);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    problem: &CompositeProblem,
    x: &Vector,
    f: f64,
    dx: &Vector,
    lambda_pred: f64,
    options: &SolverOptions,
    history: &VecDeque<f64>,
    counts: &mut EvalCounts,
) -> std::result::Result<LineSearchStep, LineSearchFailure> {
    if options.method == Method::Sparsa {
        let h: Vec<f64> = history.iter().cloned().collect();
        linesearch::nonmonotone_backtrack(problem, x, dx, lambda_pred, &h, &options.linesearch, counts)
    } else {
        linesearch::backtrack(problem, x, f, dx, lambda_pred, &options.linesearch, counts)
    }
}

/// The generic proximal Newton-type iteration: model, subproblem, line
/// search, update.
fn newton_type(problem: &CompositeProblem, options: &SolverOptions) -> Result<SolveReport> {
    let n = problem.dim();
    let mut counts = EvalCounts::default();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut tracker = Tracker::new(problem, options)?;

    let mut x = starting_point(problem, options)?;
    let (g0, mut grad) = problem.eval_smooth(&x, &mut counts)?;
    let mut f = g0 + problem.nonsmooth.value(&x);
    if !f.is_finite() {
        return Err(Error::contract("starting point is outside dom f"));
    }
    let f_initial = f;
    let mut norm_gf = problem.optimality_measure_with(&x, &grad, &mut counts)?;
    tracker.observe(&x);

    let kind = options.method.curvature_kind();
    let mut model = fresh_model(kind, n);
    let mut forcing: Option<ForcingState> = None;
    let mut history: VecDeque<f64> = VecDeque::from([f]);

    let reference_hessian = tracker.reference().and_then(|r| problem.smooth.hessian(r));
    let mut dennis_more = reference_hessian.as_ref().map(|_| Vec::new());
    let mut diagnostics = Diagnostics::default();
    let fallback_tau = problem.smooth.lipschitz_hint().unwrap_or(1.0);

    let mut status = SolveStatus::MaxIterations;
    for _ in 0..options.max_outer {
        if norm_gf <= options.tol {
            status = SolveStatus::Converged;
            break;
        }
        install_hessian(&mut model, problem, &x, &mut counts)?;
        let eta = forcing_term_for(&options.policy, forcing.as_ref(), &x, &grad);

        let attempt = |curvature: &CurvatureModel, counts: &mut EvalCounts, rng: &mut ChaCha8Rng| {
            let local = LocalModel::new(&x, &grad, curvature, problem.nonsmooth.as_ref());
            let sub = solve_subproblem(&local, &options.policy, eta, &options.inner, rng);
            counts.prox += sub.prox_evals;
            let quality = direction_quality_check(&local, &sub.direction);
            let step = line_search(
                problem,
                &x,
                f,
                &sub.direction,
                quality.predicted_decrease,
                options,
                &history,
                counts,
            );
            (sub, quality, step)
        };

        let (mut sub, mut quality, mut step) = attempt(&model, &mut counts, &mut rng);
        let mut used = model.clone();
        if step.is_err() {
            log::debug!("line search failed; retrying with a reset curvature model");
            diagnostics.curvature_resets += 1;
            let reset = CurvatureModel::scaled_identity(n, fallback_tau);
            (sub, quality, step) = attempt(&reset, &mut counts, &mut rng);
            used = reset;
            if kind != CurvatureKind::Exact && kind != CurvatureKind::ScaledIdentity {
                model = fresh_model(kind, n);
            }
        }
        let step = match step {
            Ok(step) => step,
            Err(err) => {
                log::warn!("aborting: {err}");
                status = SolveStatus::LineSearchFailed;
                break;
            }
        };

        if let (Some(ratios), Some(h)) = (dennis_more.as_mut(), reference_hessian.as_ref()) {
            ratios.push(diagnostics::dennis_more_with(h.as_ref(), &used, &sub.direction));
        }

        let grad_new = problem.eval_gradient(&step.x, &mut counts)?;
        let pair = SecantPair::new(&step.x - &x, &grad_new - &grad);
        forcing = Some(ForcingState {
            prev_anchor: x.clone(),
            prev_gradient: grad.clone(),
            prev_curvature: used,
        });
        if model.update(pair) == UpdateOutcome::Skipped {
            diagnostics.skipped_updates += 1;
        }

        x = step.x;
        f = step.f;
        grad = grad_new;
        norm_gf = problem.optimality_measure_with(&x, &grad, &mut counts)?;
        history.push_back(f);
        while history.len() > options.linesearch.nonmonotone_memory {
            history.pop_front();
        }
        tracker.observe(&x);
        tracker.record(
            step.t,
            f,
            norm_gf,
            quality.predicted_decrease,
            eta,
            sub.inner_iterations,
            &counts,
        );
    }
    if status == SolveStatus::MaxIterations && norm_gf <= options.tol {
        status = SolveStatus::Converged;
    }

    diagnostics.dennis_more_ratios = dennis_more;
    Ok(tracker.finish(
        Outcome {
            status,
            x,
            f,
            norm_gf,
            f_initial,
            counts,
        },
        options,
        diagnostics,
    ))
}
