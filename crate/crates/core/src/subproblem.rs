//! Local quadratic model and the search-direction subproblem
//!
//! `min_d ∇g(x)ᵀd + dᵀHd/2 + h(x + d)`
//!
//! solved by (accelerated) proximal gradient from `d = 0`. Inexactness is
//! measured with the model's composite gradient step at step `1/M`, `M` being
//! a power-iteration estimate of `λ_max(H)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureKind, CurvatureModel};
use crate::error::{Error, Result};
use crate::problem::{NonsmoothOracle, Vector};

pub const DEFAULT_ETA_MIN: f64 = 1e-10;
pub const DEFAULT_ETA_CAP: f64 = 0.1;
pub const DEFAULT_EXACT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_INNER: usize = 5000;
pub const DEFAULT_FIXED_COUNT: usize = 10;

/// How accurately to solve each subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SubproblemPolicy {
    /// Stop once the model residual drops below `η_k` times the outer one.
    Adaptive {
        eta_min: f64,
        eta_cap: f64,
        max_inner: usize,
    },
    /// Solve to a tight absolute tolerance.
    Exact { tol: f64, max_inner: usize },
    /// Run exactly `count` inner iterations.
    FixedIterations { count: usize },
}

impl SubproblemPolicy {
    pub fn adaptive() -> Self {
        SubproblemPolicy::Adaptive {
            eta_min: DEFAULT_ETA_MIN,
            eta_cap: DEFAULT_ETA_CAP,
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn exact() -> Self {
        SubproblemPolicy::Exact {
            tol: DEFAULT_EXACT_TOL,
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn fixed(count: usize) -> Self {
        SubproblemPolicy::FixedIterations { count }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SubproblemPolicy::Adaptive {
                eta_min,
                eta_cap,
                max_inner,
            } => {
                if max_inner < 1 || !(eta_min > 0.0) || !(eta_cap >= eta_min) {
                    return Err(Error::contract(
                        "adaptive policy needs 0 < eta_min <= eta_cap, max_inner >= 1",
                    ));
                }
            }
            SubproblemPolicy::Exact { tol, max_inner } => {
                if max_inner < 1 || !(tol > 0.0) {
                    return Err(Error::contract("exact policy needs tol > 0, max_inner >= 1"));
                }
            }
            SubproblemPolicy::FixedIterations { count } => {
                if count < 1 {
                    return Err(Error::contract("fixed policy needs count >= 1"));
                }
            }
        }
        Ok(())
    }

    fn eta_bounds(&self) -> (f64, f64) {
        match *self {
            SubproblemPolicy::Adaptive { eta_min, eta_cap, .. } => (eta_min, eta_cap),
            _ => (DEFAULT_ETA_MIN, DEFAULT_ETA_CAP),
        }
    }
}

impl fmt::Display for SubproblemPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubproblemPolicy::Adaptive { .. } => write!(f, "adaptive"),
            SubproblemPolicy::Exact { .. } => write!(f, "exact"),
            SubproblemPolicy::FixedIterations { count } => write!(f, "fixed:{count}"),
        }
    }
}

impl FromStr for SubproblemPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Self::adaptive()),
            "exact" => Ok(Self::exact()),
            "fixed" => Ok(Self::fixed(DEFAULT_FIXED_COUNT)),
            _ => {
                let count = s
                    .strip_prefix("fixed:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| {
                        Error::contract(format!(
                            "unknown subproblem stopping rule `{s}` (expected adaptive, exact or fixed:N)"
                        ))
                    })?;
                Ok(Self::fixed(count))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    #[default]
    Fista,
    Ista,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub solver: InnerSolver,
    /// Power iterations / Rayleigh probes for the step-size estimate.
    pub probes: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            solver: InnerSolver::Fista,
            probes: 30,
        }
    }
}

/// `f̂_k(x_k + d) = ∇g(x_k)ᵀd + dᵀH_kd/2 + h(x_k + d)` (constants dropped).
pub struct LocalModel<'a> {
    pub anchor: &'a Vector,
    pub gradient: &'a Vector,
    pub curvature: &'a CurvatureModel,
    pub nonsmooth: &'a dyn NonsmoothOracle,
}

impl<'a> LocalModel<'a> {
    pub fn new(
        anchor: &'a Vector,
        gradient: &'a Vector,
        curvature: &'a CurvatureModel,
        nonsmooth: &'a dyn NonsmoothOracle,
    ) -> Self {
        LocalModel {
            anchor,
            gradient,
            curvature,
            nonsmooth,
        }
    }

    /// `∇ĝ_k(x_k + d) = ∇g(x_k) + H_k d`.
    pub fn smooth_gradient(&self, d: &Vector) -> Vector {
        self.gradient + self.curvature.apply(d)
    }

    pub fn value(&self, d: &Vector) -> f64 {
        let hd = self.curvature.apply(d);
        self.value_with(d, &hd)
    }

    fn value_with(&self, d: &Vector, hd: &Vector) -> f64 {
        self.gradient.dot(d) + 0.5 * d.dot(hd) + self.nonsmooth.value_change(self.anchor, d)
    }

    /// `||G_{f̂/M}(x_k + d)||` given `H d`.
    fn residual_with(&self, d: &Vector, hd: &Vector, big_m: f64) -> (f64, usize) {
        let t = 1.0 / big_m;
        let z = self.anchor + d;
        let grad = self.gradient + hd;
        let next = self.nonsmooth.prox(&(&z - grad * t), t);
        ((z - next).norm() * big_m, 1)
    }

    /// `||G_{f̂/M}(x_k + d)||` for a caller-supplied `M`.
    pub fn residual(&self, d: &Vector, big_m: f64) -> f64 {
        let hd = self.curvature.apply(d);
        self.residual_with(d, &hd, big_m).0
    }
}

/// State carried between outer iterations to compute forcing terms.
#[derive(Debug, Clone)]
pub struct ForcingState {
    pub prev_anchor: Vector,
    pub prev_gradient: Vector,
    pub prev_curvature: CurvatureModel,
}

/// `η_k = min{cap, ||∇ĝ_{k-1}(x_k) - ∇g(x_k)|| / ||∇g(x_{k-1})||}`, clamped to
/// `[eta_min, eta_cap]`. Without history the cap is returned.
pub fn compute_forcing_term(
    state: Option<&ForcingState>,
    x: &Vector,
    grad: &Vector,
    eta_min: f64,
    eta_cap: f64,
) -> f64 {
    let Some(state) = state else {
        return eta_cap;
    };
    let denom = state.prev_gradient.norm();
    if denom < 1e-300 {
        return eta_min;
    }
    let model_grad = &state.prev_gradient + state.prev_curvature.apply(&(x - &state.prev_anchor));
    let ratio = (model_grad - grad).norm() / denom;
    if ratio.is_nan() {
        return eta_cap;
    }
    ratio.min(eta_cap).clamp(eta_min, eta_cap)
}

/// Forcing term honoring a policy's bounds.
pub fn forcing_term_for(policy: &SubproblemPolicy, state: Option<&ForcingState>, x: &Vector, grad: &Vector) -> f64 {
    let (lo, hi) = policy.eta_bounds();
    compute_forcing_term(state, x, grad, lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The policy's residual threshold was met.
    Converged,
    /// `FixedIterations` ran its full count.
    IterationCount,
    InnerBudgetExhausted,
    /// Scaled identity model: solved in closed form.
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub direction: Vector,
    pub inner_iterations: usize,
    /// The quantity compared against the stopping threshold.
    pub residual: f64,
    /// Residual at `d = 0` (the outer measure in the same metric).
    pub initial_residual: f64,
    pub threshold: f64,
    pub stop_reason: StopReason,
    pub prox_evals: u64,
    /// `M` used for the residual metric.
    pub step_scale: f64,
}

/// Solves the subproblem from `d = 0`. `forcing` is `η_k` (used by the
/// adaptive policy only).
pub fn solve_subproblem<R: Rng>(
    model: &LocalModel<'_>,
    policy: &SubproblemPolicy,
    forcing: f64,
    opts: &InnerOptions,
    rng: &mut R,
) -> SubproblemResult {
    let n = model.anchor.len();
    let zero = Vector::zeros(n);

    if let Some(tau) = model.curvature.scale() {
        let t = 1.0 / tau;
        let next = model.nonsmooth.prox(&(model.anchor - model.gradient * t), t);
        let d = next - model.anchor;
        let (r0, _) = model.residual_with(&zero, &zero, tau);
        let hd = &d * tau;
        let (r, _) = model.residual_with(&d, &hd, tau);
        return SubproblemResult {
            direction: d,
            inner_iterations: 0,
            residual: r,
            initial_residual: r0,
            threshold: 0.0,
            stop_reason: StopReason::ClosedForm,
            prox_evals: 3,
            step_scale: tau,
        };
    }

    let (_, m_est) = model.curvature.eigen_bounds_probe(opts.probes, rng);
    let big_m = if m_est > 0.0 && m_est.is_finite() { m_est } else { 1.0 };
    let mut prox_evals = 0u64;

    let (r0, p) = model.residual_with(&zero, &zero, big_m);
    prox_evals += p as u64;

    let (threshold, budget, fixed) = match *policy {
        SubproblemPolicy::Adaptive { max_inner, .. } => (forcing * r0, max_inner, false),
        SubproblemPolicy::Exact { tol, max_inner } => (tol, max_inner, false),
        SubproblemPolicy::FixedIterations { count } => (0.0, count, true),
    };

    if !fixed && r0 <= threshold {
        return SubproblemResult {
            direction: zero,
            inner_iterations: 0,
            residual: r0,
            initial_residual: r0,
            threshold,
            stop_reason: StopReason::Converged,
            prox_evals,
            step_scale: big_m,
        };
    }

    let accelerate = opts.solver == InnerSolver::Fista;
    let mut lipschitz = big_m;
    // current iterate and its H-image
    let mut d = zero.clone();
    let mut hd = zero.clone();
    let mut y = d.clone();
    let mut hy = hd.clone();
    let mut theta = 1.0f64;
    let mut residual = r0;
    let mut iterations = 0;
    let mut stop = if fixed {
        StopReason::IterationCount
    } else {
        StopReason::InnerBudgetExhausted
    };

    while iterations < budget {
        iterations += 1;
        let grad_y = model.gradient + &hy;
        let (p, hp) = loop {
            let t = 1.0 / lipschitz;
            let p = model.nonsmooth.prox(&(model.anchor + &y - &grad_y * t), t) - model.anchor;
            prox_evals += 1;
            let hp = model.curvature.apply(&p);
            let diff = &p - &y;
            let curv = diff.dot(&(&hp - &hy));
            if curv <= lipschitz * diff.norm_squared() * (1.0 + 1e-12) || lipschitz > 1e300 {
                break (p, hp);
            }
            lipschitz *= 2.0;
        };
        // Gradient-based restart: (y - p)ᵀ(p - d) > 0 means the momentum points
        // uphill. Unlike comparing model values, this is not swamped by
        // rounding once the decrease is tiny.
        if accelerate && (&y - &p).dot(&(&p - &d)) > 0.0 {
            theta = 1.0;
            y = p.clone();
            hy = hp.clone();
        } else if accelerate {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;
            y = &p + (&p - &d) * beta;
            hy = &hp + (&hp - &hd) * beta;
            theta = theta_next;
        } else {
            y = p.clone();
            hy = hp.clone();
        }
        d = p;
        hd = hp;

        if !fixed {
            let (r, pe) = model.residual_with(&d, &hd, big_m);
            prox_evals += pe as u64;
            residual = r;
            if residual <= threshold {
                stop = StopReason::Converged;
                break;
            }
        }
    }
    if fixed {
        let (r, pe) = model.residual_with(&d, &hd, big_m);
        prox_evals += pe as u64;
        residual = r;
    }

    SubproblemResult {
        direction: d,
        inner_iterations: iterations,
        residual,
        initial_residual: r0,
        threshold,
        stop_reason: stop,
        prox_evals,
        step_scale: big_m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionQuality {
    /// `Δ = ∇g(x)ᵀΔx + h(x + Δx) - h(x)`.
    pub predicted_decrease: f64,
    /// `ΔxᵀHΔx`.
    pub curvature_term: f64,
    pub descent_ok: bool,
}

impl DirectionQuality {
    /// `Δ <= -ΔxᵀHΔx + slack`, which holds for exactly solved subproblems.
    pub fn satisfies_descent_bound(&self, slack: f64) -> bool {
        self.predicted_decrease <= -self.curvature_term + slack
    }
}

pub fn direction_quality_check(model: &LocalModel<'_>, dx: &Vector) -> DirectionQuality {
    let predicted = if dx.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        model.gradient.dot(dx) + model.nonsmooth.value_change(model.anchor, dx)
    };
    let curvature_term = if model.curvature.has_operator() {
        dx.dot(&model.curvature.apply(dx))
    } else {
        f64::NAN
    };
    DirectionQuality {
        predicted_decrease: predicted,
        curvature_term,
        descent_ok: predicted < 0.0,
    }
}

/// Whether the model is a closed-form scaled identity.
pub fn is_closed_form(model: &CurvatureModel) -> bool {
    model.kind() == CurvatureKind::ScaledIdentity
}
