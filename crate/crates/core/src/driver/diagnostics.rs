use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureModel;
use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, LinearOperator, Vector};

/// Error values at or below this are treated as numerical noise.
pub const ERROR_FLOOR: f64 = 1e-13;

/// Empirical convergence class of an error sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateClass {
    Sublinear,
    Linear(f64),
    Superlinear,
    Unclassifiable,
}

impl RateClass {
    pub fn is_superlinear(&self) -> bool {
        matches!(self, RateClass::Superlinear)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, RateClass::Linear(_))
    }
}

impl fmt::Display for RateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateClass::Sublinear => write!(f, "sublinear"),
            RateClass::Linear(rho) => write!(f, "linear({rho:.3})"),
            RateClass::Superlinear => write!(f, "superlinear"),
            RateClass::Unclassifiable => write!(f, "unclassifiable"),
        }
    }
}

/// Classifies `e_k = ||x_k - x*||` from successive ratios `e_{k+1}/e_k`.
///
/// Only the leading run of values above [`ERROR_FLOOR`] is used; fewer than
/// five such values is `Unclassifiable`. Superlinear when, among the last
/// three ratios, each is below half the one before it and the final one is
/// below `0.1`. Linear(ρ) when
/// the trailing half of the ratios (at least three) lie within 20% of their
/// median `ρ < 1`, with the contraction `1 - r` held to the same 20% band so
/// that ratios creeping up to one (e.g. `1/k`) do not count. Sublinear
/// otherwise.
pub fn rate_estimate(errors: &[f64]) -> RateClass {
    let run: Vec<f64> = errors
        .iter()
        .cloned()
        .take_while(|e| e.is_finite() && *e > ERROR_FLOOR)
        .collect();
    if run.len() < 5 {
        return RateClass::Unclassifiable;
    }
    let ratios: Vec<f64> = run.windows(2).map(|w| w[1] / w[0]).collect();
    let n = ratios.len();

    let (a, b, c) = (ratios[n - 3], ratios[n - 2], ratios[n - 1]);
    let superlinear = b < 0.5 * a && c < 0.5 * b && c < 0.1;
    if superlinear {
        return RateClass::Superlinear;
    }

    let tail_len = (n / 2).max(3).min(n);
    let mut tail: Vec<f64> = ratios[n - tail_len..].to_vec();
    tail.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let median = if tail_len % 2 == 1 {
        tail[tail_len / 2]
    } else {
        0.5 * (tail[tail_len / 2 - 1] + tail[tail_len / 2])
    };
    let band = 0.2 * median.min(1.0 - median);
    if median < 1.0 && tail.iter().all(|r| (r - median).abs() <= band) {
        return RateClass::Linear(median);
    }
    RateClass::Sublinear
}

/// `||(H_k - ∇²g(x*)) Δx_k|| / ||Δx_k||`, zero for `Δx_k = 0`.
pub fn dennis_more_ratio(
    problem: &CompositeProblem,
    reference: &Vector,
    model: &CurvatureModel,
    dx: &Vector,
) -> Result<f64> {
    let hessian = problem.smooth.hessian(reference).ok_or(Error::HessianUnavailable)?;
    Ok(dennis_more_with(hessian.as_ref(), model, dx))
}

pub(crate) fn dennis_more_with(hessian: &dyn LinearOperator, model: &CurvatureModel, dx: &Vector) -> f64 {
    let norm = dx.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (model.apply(dx) - hessian.apply(dx)).norm() / norm
}

/// First iteration index from which every recorded step length is one.
pub fn unit_step_from(step_lengths: &[(usize, f64)]) -> Option<usize> {
    let mut from = None;
    for &(k, t) in step_lengths.iter().rev() {
        if t == 1.0 {
            from = Some(k);
        } else {
            break;
        }
    }
    from
}

/// `(f - f*) / max(1, |f*|)`.
pub fn relative_suboptimality(f: f64, f_star: f64) -> f64 {
    (f - f_star) / f_star.abs().max(1.0)
}
