//! Composite objectives `f = g + h` and the composite gradient step.
//!
//! The smooth part `g` is exposed through [`SmoothOracle`], the nonsmooth part
//! `h` through [`NonsmoothOracle`]. Oracles are pure; evaluation counting is
//! done by the caller through an explicit [`EvalCounts`] context.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A symmetric linear map `v -> H v`.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &Vector) -> Vector;
}

impl LinearOperator for Matrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self * v
    }
}

/// The smooth convex part `g` of a composite objective.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// `g(x)`; `+inf` outside the domain.
    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        (self.value(x), self.gradient(x))
    }

    /// Hessian of `g` at `x` as an operator, if the oracle provides one.
    fn hessian(&self, _x: &Vector) -> Option<Arc<dyn LinearOperator>> {
        None
    }

    /// Dense Hessian at `x`, for oracles where forming it is cheap.
    fn hessian_dense(&self, _x: &Vector) -> Option<Matrix> {
        None
    }

    /// Lipschitz constant of the gradient (L1), if known.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Strong convexity modulus (m), if known.
    fn strong_convexity_hint(&self) -> Option<f64> {
        None
    }
}

/// The nonsmooth convex part `h`, accessed through its proximal mapping.
pub trait NonsmoothOracle: Send + Sync {
    fn name(&self) -> &'static str;

    /// `h(x)`; `+inf` outside the domain.
    fn value(&self, x: &Vector) -> f64;

    /// `h(x + d) - h(x)`. Override when the difference can be formed
    /// without cancellation.
    fn value_change(&self, x: &Vector, d: &Vector) -> f64 {
        self.value(&(x + d)) - self.value(x)
    }

    /// `argmin_y h(y) + ||y - x||^2 / (2t)`.
    fn prox(&self, x: &Vector, t: f64) -> Vector;

    /// Whether `v` lies in `∂h(y)` (coordinatewise, within `tol`).
    /// `None` when the penalty has no explicit subdifferential.
    fn subdifferential_contains(&self, _y: &Vector, _v: &Vector, _tol: f64) -> Option<bool> {
        None
    }
}

/// Per-solve oracle call counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    /// Evaluations of `g`.
    pub fev: u64,
    /// Evaluations of `∇g`.
    pub gev: u64,
    /// Proximal mapping evaluations.
    pub prox: u64,
    /// Hessian operators formed.
    pub hess: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnownOptimum {
    pub x: Vec<f64>,
    pub f: f64,
}

/// `f = g + h`.
#[derive(Clone)]
pub struct CompositeProblem {
    pub smooth: Arc<dyn SmoothOracle>,
    pub nonsmooth: Arc<dyn NonsmoothOracle>,
    pub known_optimum: Option<KnownOptimum>,
    /// Problem-specific default starting point (zero when absent).
    pub initial_point: Option<Vector>,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("nonsmooth", &self.nonsmooth.name())
            .field("known_optimum", &self.known_optimum.is_some())
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(smooth: Arc<dyn SmoothOracle>, nonsmooth: Arc<dyn NonsmoothOracle>) -> Self {
        CompositeProblem {
            smooth,
            nonsmooth,
            known_optimum: None,
            initial_point: None,
        }
    }

    pub fn with_known_optimum(mut self, optimum: KnownOptimum) -> Self {
        self.known_optimum = Some(optimum);
        self
    }

    pub fn with_initial_point(mut self, x0: Vector) -> Self {
        self.initial_point = Some(x0);
        self
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn start(&self) -> Vector {
        self.initial_point.clone().unwrap_or_else(|| Vector::zeros(self.dim()))
    }

    pub fn known_minimizer(&self) -> Option<Vector> {
        self.known_optimum.as_ref().map(|opt| Vector::from_column_slice(&opt.x))
    }

    pub(crate) fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x) = g(x) + h(x)`. Domain violations yield `+inf`.
    pub fn eval_f(&self, x: &Vector, counts: &mut EvalCounts) -> Result<f64> {
        self.check_dim(x)?;
        counts.fev += 1;
        let h = self.nonsmooth.value(x);
        if !h.is_finite() {
            return Ok(f64::INFINITY);
        }
        let g = self.smooth.value(x);
        if g.is_nan() {
            return Ok(f64::INFINITY);
        }
        Ok(g + h)
    }

    /// `(g(x), ∇g(x))` with counters bumped.
    pub fn eval_smooth(&self, x: &Vector, counts: &mut EvalCounts) -> Result<(f64, Vector)> {
        self.check_dim(x)?;
        counts.fev += 1;
        counts.gev += 1;
        Ok(self.smooth.value_and_gradient(x))
    }

    pub fn eval_gradient(&self, x: &Vector, counts: &mut EvalCounts) -> Result<Vector> {
        self.check_dim(x)?;
        counts.gev += 1;
        Ok(self.smooth.gradient(x))
    }

    pub fn prox(&self, x: &Vector, t: f64, counts: &mut EvalCounts) -> Vector {
        counts.prox += 1;
        self.nonsmooth.prox(x, t)
    }

    /// `G_{tf}(x) = (x - prox_{th}(x - t∇g(x))) / t`.
    pub fn composite_gradient_step(&self, x: &Vector, t: f64, counts: &mut EvalCounts) -> Result<Vector> {
        let grad = self.eval_gradient(x, counts)?;
        self.composite_gradient_step_with(x, &grad, t, counts)
    }

    /// As [`composite_gradient_step`](Self::composite_gradient_step) with a
    /// precomputed gradient.
    pub fn composite_gradient_step_with(
        &self,
        x: &Vector,
        grad: &Vector,
        t: f64,
        counts: &mut EvalCounts,
    ) -> Result<Vector> {
        self.check_dim(x)?;
        self.check_dim(grad)?;
        if !(t > 0.0) {
            return Err(Error::contract(format!("step t must be positive, got {t}")));
        }
        let shifted = x - grad * t;
        let next = self.prox(&shifted, t, counts);
        Ok((x - next) / t)
    }

    /// `||G_f(x)||` with unit step.
    pub fn optimality_measure(&self, x: &Vector, counts: &mut EvalCounts) -> Result<f64> {
        Ok(self.composite_gradient_step(x, 1.0, counts)?.norm())
    }

    pub fn optimality_measure_with(&self, x: &Vector, grad: &Vector, counts: &mut EvalCounts) -> Result<f64> {
        Ok(self.composite_gradient_step_with(x, grad, 1.0, counts)?.norm())
    }

    /// Checks `G_{tf}(x) - ∇g(x) ∈ ∂h(x - t G_{tf}(x))` to within `1e-9`.
    pub fn subgradient_membership_check(&self, x: &Vector, t: f64, counts: &mut EvalCounts) -> Result<bool> {
        let grad = self.eval_gradient(x, counts)?;
        let step = self.composite_gradient_step_with(x, &grad, t, counts)?;
        self.membership_of(x, &grad, &step, t)
    }

    /// Membership test for a caller-supplied composite gradient step.
    pub fn membership_of(&self, x: &Vector, grad: &Vector, step: &Vector, t: f64) -> Result<bool> {
        let next = x - step * t;
        let subgradient = step - grad;
        self.nonsmooth
            .subdifferential_contains(&next, &subgradient, 1e-9)
            .ok_or(Error::MembershipUnavailable(self.nonsmooth.name()))
    }
}
