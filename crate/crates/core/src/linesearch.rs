//! Backtracking line searches on the sufficient descent condition
//! `f(x + tΔx) <= f_ref + α t Δ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, EvalCounts, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    pub alpha: f64,
    pub beta: f64,
    pub t_min: f64,
    /// Window of the nonmonotone reference (SpaRSA baseline only).
    pub nonmonotone_memory: usize,
    /// Relative rounding noise of `f`: trials within `rel_noise * |f_ref|`
    /// of the acceptance bound are accepted.
    pub rel_noise: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            alpha: 1e-4,
            beta: 0.5,
            t_min: 1e-12,
            nonmonotone_memory: 10,
            rel_noise: 1e-13,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::contract(format!(
                "alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::contract(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.t_min > 0.0) || self.nonmonotone_memory < 1 {
            return Err(Error::contract(
                "t_min must be positive and the nonmonotone window >= 1",
            ));
        }
        if !(self.rel_noise >= 0.0 && self.rel_noise < 1e-6) {
            return Err(Error::contract("rel_noise must lie in [0, 1e-6)"));
        }
        Ok(())
    }
}

/// An accepted step.
#[derive(Debug, Clone)]
pub struct LineSearchStep {
    pub t: f64,
    pub x: Vector,
    pub f: f64,
    /// Number of objective evaluations spent.
    pub trials: usize,
    /// Right-hand side the step was accepted against.
    pub reference: f64,
}

#[derive(Debug, Clone, Error)]
pub enum LineSearchFailure {
    #[error("direction is not a descent direction (predicted decrease {lambda_pred})")]
    NotDescent { lambda_pred: f64 },
    #[error("step length fell below t_min without sufficient decrease (best trial t = {best_t}, f = {best_f})")]
    StepTooSmall { best_t: f64, best_x: Vector, best_f: f64 },
    #[error("nonmonotone line search needs at least one reference value")]
    EmptyHistory,
}

/// Monotone backtracking from `t = 1`.
pub fn backtrack(
    problem: &CompositeProblem,
    x: &Vector,
    f_x: f64,
    dx: &Vector,
    lambda_pred: f64,
    cfg: &LineSearchConfig,
    counts: &mut EvalCounts,
) -> std::result::Result<LineSearchStep, LineSearchFailure> {
    search(problem, x, f_x, dx, lambda_pred, 1.0, cfg, counts)
}

/// Monotone backtracking whose first trial is `t0`.
#[allow(clippy::too_many_arguments)]
pub fn backtrack_from(
    problem: &CompositeProblem,
    x: &Vector,
    f_x: f64,
    dx: &Vector,
    lambda_pred: f64,
    t0: f64,
    cfg: &LineSearchConfig,
    counts: &mut EvalCounts,
) -> std::result::Result<LineSearchStep, LineSearchFailure> {
    search(problem, x, f_x, dx, lambda_pred, t0, cfg, counts)
}

/// Grippo–Lampariello–Lucidi rule: the reference is the max over `history`
/// (the most recent `nonmonotone_memory` accepted values, including `f(x)`).
pub fn nonmonotone_backtrack(
    problem: &CompositeProblem,
    x: &Vector,
    dx: &Vector,
    lambda_pred: f64,
    history: &[f64],
    cfg: &LineSearchConfig,
    counts: &mut EvalCounts,
) -> std::result::Result<LineSearchStep, LineSearchFailure> {
    let window = &history[history.len().saturating_sub(cfg.nonmonotone_memory)..];
    let reference = window
        .iter()
        .cloned()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(LineSearchFailure::EmptyHistory)?;
    search(problem, x, reference, dx, lambda_pred, 1.0, cfg, counts)
}

/// Decreases below the resolution of `f` cannot be observed, so trials
/// within the noise level of the bound count as accepted.
pub fn noise_slack(reference: f64, cfg: &LineSearchConfig) -> f64 {
    if reference.is_finite() {
        cfg.rel_noise * reference.abs()
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn search(
    problem: &CompositeProblem,
    x: &Vector,
    reference: f64,
    dx: &Vector,
    lambda_pred: f64,
    t0: f64,
    cfg: &LineSearchConfig,
    counts: &mut EvalCounts,
) -> std::result::Result<LineSearchStep, LineSearchFailure> {
    if !(lambda_pred < 0.0) {
        return Err(LineSearchFailure::NotDescent { lambda_pred });
    }
    let mut t = t0;
    let mut trials = 0;
    let mut best: Option<(f64, Vector, f64)> = None;
    while t >= cfg.t_min {
        let trial = x + dx * t;
        let f = problem.eval_f(&trial, counts).unwrap_or(f64::INFINITY);
        trials += 1;
        // +inf (outside dom f) is a rejection
        if f <= reference + cfg.alpha * t * lambda_pred + noise_slack(reference, cfg) {
            return Ok(LineSearchStep {
                t,
                x: trial,
                f,
                trials,
                reference,
            });
        }
        if best.as_ref().is_none_or(|(_, _, bf)| f < *bf) {
            best = Some((t, trial, f));
        }
        t *= cfg.beta;
    }
    let (best_t, best_x, best_f) = best.unwrap_or((0.0, x.clone(), f64::INFINITY));
    Err(LineSearchFailure::StepTooSmall { best_t, best_x, best_f })
}
