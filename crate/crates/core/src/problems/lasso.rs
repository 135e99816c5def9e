use std::sync::Arc;

use nalgebra::SymmetricEigen;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::synthetic::SyntheticSpec;
use crate::error::{Error, Result};
use crate::penalties::L1Penalty;
use crate::problem::{CompositeProblem, LinearOperator, Matrix, SmoothOracle, Vector};

/// `g(x) = ||Ax - b||^2 / 2`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Matrix,
    b: Vector,
    gram: Arc<Matrix>,
    eig_min: f64,
    eig_max: f64,
}

impl LeastSquares {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.ncols() == 0 {
            return Err(Error::contract("design matrix has no columns"));
        }
        let gram = a.transpose() * &a;
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let eig_max = eig.max();
        let eig_min = eig.min().max(0.0);
        Ok(LeastSquares {
            a,
            b,
            gram: Arc::new(gram),
            eig_min,
            eig_max,
        })
    }

    pub fn design(&self) -> &Matrix {
        &self.a
    }

    pub fn response(&self) -> &Vector {
        &self.b
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }
}

impl SmoothOracle for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.a.tr_mul(&(&self.a * x - &self.b))
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let r = &self.a * x - &self.b;
        (0.5 * r.norm_squared(), self.a.tr_mul(&r))
    }

    fn hessian(&self, _x: &Vector) -> Option<Arc<dyn LinearOperator>> {
        Some(self.gram.clone())
    }

    fn hessian_dense(&self, _x: &Vector) -> Option<Matrix> {
        Some((*self.gram).clone())
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.eig_max)
    }

    fn strong_convexity_hint(&self) -> Option<f64> {
        Some(self.eig_min)
    }
}

/// Lasso: `||Ax - b||^2 / 2 + lambda ||x||_1`.
#[derive(Debug, Clone)]
pub struct QuadraticL1Problem {
    pub smooth: Arc<LeastSquares>,
    pub lambda: f64,
    /// Sparse generator used for synthetic instances.
    pub ground_truth: Option<Vector>,
}

impl QuadraticL1Problem {
    pub fn new(a: Matrix, b: Vector, lambda: f64) -> Result<Self> {
        L1Penalty::new(lambda)?;
        Ok(QuadraticL1Problem {
            smooth: Arc::new(LeastSquares::new(a, b)?),
            lambda,
            ground_truth: None,
        })
    }

    /// Largest eigenvalue of `AᵀA`.
    pub fn lipschitz(&self) -> f64 {
        self.smooth.eig_max
    }

    /// Smallest eigenvalue of `AᵀA`.
    pub fn strong_convexity(&self) -> f64 {
        self.smooth.eig_min
    }

    /// `||Aᵀb||_inf`; zero is optimal for any `lambda` at or above it.
    pub fn lambda_max(&self) -> f64 {
        self.smooth.a.tr_mul(&self.smooth.b).amax()
    }

    pub fn composite(&self) -> CompositeProblem {
        let penalty = L1Penalty::new(self.lambda).expect("lambda validated at construction");
        CompositeProblem::new(self.smooth.clone(), Arc::new(penalty))
    }
}

/// Gaussian design with entries `N(0, 1/s)`, a sparse generator and noisy
/// response. With `condition > 1` column `j` is scaled by
/// `condition^(-j / (2(n-1)))`.
pub fn make_lasso(spec: &SyntheticSpec, lambda: f64) -> Result<QuadraticL1Problem> {
    let (n, s) = (spec.dim, spec.samples);
    if n == 0 || s == 0 {
        return Err(Error::contract("synthetic dimensions must be positive"));
    }
    let mut rng = spec.rng();
    let scale = 1.0 / (s as f64).sqrt();
    let mut a = Matrix::zeros(s, n);
    for j in 0..n {
        let col_scale = if spec.condition > 1.0 && n > 1 {
            spec.condition.powf(-(j as f64) / (2.0 * (n - 1) as f64))
        } else {
            1.0
        };
        for i in 0..s {
            let z: f64 = rng.sample(StandardNormal);
            a[(i, j)] = z * scale * col_scale;
        }
    }
    let mut truth = Vector::zeros(n);
    for j in index::sample(&mut rng, n, spec.nonzeros()).into_iter() {
        let mag: f64 = rng.gen_range(0.5..1.5);
        truth[j] = if rng.gen_bool(0.5) { mag } else { -mag };
    }
    let noise = Vector::from_fn(s, |_, _| spec.noise * rng.sample::<f64, _>(StandardNormal));
    let b = &a * &truth + noise;
    let mut problem = QuadraticL1Problem::new(a, b, lambda)?;
    problem.ground_truth = Some(truth);
    Ok(problem)
}
