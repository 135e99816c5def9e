use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::synthetic::SyntheticSpec;
use crate::error::{Error, Result};
use crate::penalties::L1Penalty;
use crate::problem::{CompositeProblem, LinearOperator, Matrix, SmoothOracle, Vector};

/// Maps labels in `{0, 1}` or `{-1, +1}` to `{-1, +1}`.
pub fn remap_labels(labels: &[f64]) -> Result<Vec<f64>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y == 1.0 {
                Ok(1.0)
            } else if y == 0.0 || y == -1.0 {
                Ok(-1.0)
            } else {
                Err(Error::contract(format!(
                    "label {y} at sample {i} is not binary (expected 0/1 or -1/+1)"
                )))
            }
        })
        .collect()
}

/// `log(1 + exp(u))` without overflow.
#[inline]
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `g(w) = (1/s) sum_i log(1 + exp(-y_i wᵀx_i)) + (ridge/2) ||w||^2`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    samples: Arc<Matrix>,
    labels: Vector,
    ridge: f64,
    lipschitz: f64,
}

impl LogisticLoss {
    /// `labels` may use either `{0,1}` or `{-1,+1}`.
    pub fn new(samples: Matrix, labels: &[f64], ridge: f64) -> Result<Self> {
        if samples.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.nrows(),
                got: labels.len(),
            });
        }
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::contract("logistic design must be nonempty"));
        }
        if !(ridge >= 0.0) {
            return Err(Error::contract(format!("ridge must be nonnegative, got {ridge}")));
        }
        let labels = Vector::from_vec(remap_labels(labels)?);
        let spectral = samples.singular_values().max();
        let lipschitz = spectral * spectral / (4.0 * samples.nrows() as f64) + ridge;
        Ok(LogisticLoss {
            samples: Arc::new(samples),
            labels,
            ridge,
            lipschitz,
        })
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn labels(&self) -> &Vector {
        &self.labels
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn n_samples(&self) -> f64 {
        self.samples.nrows() as f64
    }

    fn margins(&self, w: &Vector) -> Vector {
        (&*self.samples * w).component_mul(&self.labels)
    }
}

/// Value and gradient of the logistic loss at `w`.
pub fn logistic_value_grad(loss: &LogisticLoss, w: &Vector) -> (f64, Vector) {
    let margins = loss.margins(w);
    let s = loss.n_samples();
    let value = margins.iter().map(|&m| softplus(-m)).sum::<f64>() / s + 0.5 * loss.ridge * w.norm_squared();
    // d/dz log(1 + exp(-y z)) = -y sigmoid(-y z)
    let weights = Vector::from_iterator(
        margins.len(),
        margins
            .iter()
            .zip(loss.labels.iter())
            .map(|(&m, &y)| -y * sigmoid(-m) / s),
    );
    let grad = loss.samples.tr_mul(&weights) + w * loss.ridge;
    (value, grad)
}

impl SmoothOracle for LogisticLoss {
    fn dim(&self) -> usize {
        self.samples.ncols()
    }

    fn value(&self, w: &Vector) -> f64 {
        self.margins(w).iter().map(|&m| softplus(-m)).sum::<f64>() / self.n_samples()
            + 0.5 * self.ridge * w.norm_squared()
    }

    fn gradient(&self, w: &Vector) -> Vector {
        logistic_value_grad(self, w).1
    }

    fn value_and_gradient(&self, w: &Vector) -> (f64, Vector) {
        logistic_value_grad(self, w)
    }

    fn hessian(&self, w: &Vector) -> Option<Arc<dyn LinearOperator>> {
        Some(Arc::new(self.hessian_operator(w)))
    }

    fn hessian_dense(&self, w: &Vector) -> Option<Matrix> {
        let op = self.hessian_operator(w);
        let x = &*self.samples;
        let mut weighted = x.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= op.curvature[i];
        }
        let mut h = x.tr_mul(&weighted);
        for i in 0..h.nrows() {
            h[(i, i)] += self.ridge;
        }
        Some(h)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn strong_convexity_hint(&self) -> Option<f64> {
        (self.ridge > 0.0).then_some(self.ridge)
    }
}

impl LogisticLoss {
    fn hessian_operator(&self, w: &Vector) -> LogisticHessian {
        let s = self.n_samples();
        let z = &*self.samples * w;
        let curvature = z
            .iter()
            .map(|&zi| {
                let p = sigmoid(zi);
                p * (1.0 - p) / s
            })
            .collect();
        LogisticHessian {
            samples: self.samples.clone(),
            curvature,
            ridge: self.ridge,
        }
    }
}

/// `v -> Xᵀ D X v + ridge v`.
struct LogisticHessian {
    samples: Arc<Matrix>,
    curvature: Vec<f64>,
    ridge: f64,
}

impl LinearOperator for LogisticHessian {
    fn dim(&self) -> usize {
        self.samples.ncols()
    }

    fn apply(&self, v: &Vector) -> Vector {
        let mut xv = &*self.samples * v;
        for (xi, d) in xv.iter_mut().zip(&self.curvature) {
            *xi *= d;
        }
        self.samples.tr_mul(&xv) + v * self.ridge
    }
}

/// l1-regularized logistic regression.
#[derive(Debug, Clone)]
pub struct LogisticL1Problem {
    pub smooth: Arc<LogisticLoss>,
    pub lambda: f64,
    pub ground_truth: Option<Vector>,
}

impl LogisticL1Problem {
    pub fn new(samples: Matrix, labels: &[f64], lambda: f64, ridge: f64) -> Result<Self> {
        L1Penalty::new(lambda)?;
        Ok(LogisticL1Problem {
            smooth: Arc::new(LogisticLoss::new(samples, labels, ridge)?),
            lambda,
            ground_truth: None,
        })
    }

    pub fn composite(&self) -> CompositeProblem {
        let penalty = L1Penalty::new(self.lambda).expect("lambda validated at construction");
        CompositeProblem::new(self.smooth.clone(), Arc::new(penalty))
    }
}

/// Standard normal features, sparse generator `w` and labels
/// `sign(wᵀx + noise * N(0,1))`.
pub fn make_logistic(spec: &SyntheticSpec, lambda: f64, ridge: f64) -> Result<LogisticL1Problem> {
    let (n, s) = (spec.dim, spec.samples);
    if n == 0 || s == 0 {
        return Err(Error::contract("synthetic dimensions must be positive"));
    }
    let mut rng = spec.rng();
    let x = Matrix::from_fn(s, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut truth = Vector::zeros(n);
    for j in index::sample(&mut rng, n, spec.nonzeros()).into_iter() {
        let mag: f64 = rng.gen_range(0.5..1.5);
        truth[j] = if rng.gen_bool(0.5) { mag } else { -mag };
    }
    let z = &x * &truth;
    let labels: Vec<f64> = z
        .iter()
        .map(|&zi| {
            let noisy = zi + spec.noise * rng.sample::<f64, _>(StandardNormal);
            if noisy >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let mut problem = LogisticL1Problem::new(x, &labels, lambda, ridge)?;
    problem.ground_truth = Some(truth);
    Ok(problem)
}
