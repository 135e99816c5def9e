use std::sync::Arc;

use nalgebra::Cholesky;
use rand::Rng;
use rand_distr::StandardNormal;

use super::synthetic::SyntheticSpec;
use crate::error::{Error, Result};
use crate::penalties::L1Penalty;
use crate::problem::{CompositeProblem, LinearOperator, Matrix, NonsmoothOracle, SmoothOracle, Vector};

fn as_matrix(x: &Vector, order: usize) -> Matrix {
    Matrix::from_column_slice(order, order, x.as_slice())
}

fn as_vector(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// `Θ -> Θ⁻¹ V Θ⁻¹` on `vec(V)`.
#[derive(Debug, Clone)]
pub struct InverseCovarianceHessian {
    theta_inv: Matrix,
}

impl InverseCovarianceHessian {
    pub fn theta_inverse(&self) -> &Matrix {
        &self.theta_inv
    }

    pub fn apply_matrix(&self, v: &Matrix) -> Matrix {
        &self.theta_inv * v * &self.theta_inv
    }
}

impl LinearOperator for InverseCovarianceHessian {
    fn dim(&self) -> usize {
        self.theta_inv.nrows() * self.theta_inv.nrows()
    }

    fn apply(&self, v: &Vector) -> Vector {
        let order = self.theta_inv.nrows();
        as_vector(&self.apply_matrix(&as_matrix(v, order)))
    }
}

/// Value `trace(ΣΘ) - log det Θ`, gradient `Σ - Θ⁻¹` and Hessian action
/// `V -> Θ⁻¹VΘ⁻¹` from one Cholesky factorization of `Θ`.
pub fn logdet_value_grad_hess(sigma: &Matrix, theta: &Matrix) -> Result<(f64, Matrix, InverseCovarianceHessian)> {
    if sigma.shape() != theta.shape() || !theta.is_square() {
        return Err(Error::DimensionMismatch {
            expected: sigma.nrows(),
            got: theta.nrows(),
        });
    }
    let theta = symmetrize(theta);
    let chol = Cholesky::new(theta.clone()).ok_or(Error::NotPositiveDefinite)?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let value = sigma.dot(&theta) - log_det;
    let theta_inv = symmetrize(&chol.inverse());
    let grad = sigma - &theta_inv;
    Ok((value, grad, InverseCovarianceHessian { theta_inv }))
}

/// `g(Θ) = trace(ΣΘ) - log det Θ` on `vec(Θ)` (column-major). Values are
/// taken at the symmetric part of `Θ`; `+inf` off the positive definite cone.
#[derive(Debug, Clone)]
pub struct LogDetLoss {
    sigma: Matrix,
}

impl LogDetLoss {
    pub fn new(sigma: Matrix) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() == 0 {
            return Err(Error::contract("sample covariance must be a nonempty square matrix"));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > 1e-10 * sigma.amax().max(1.0) {
            return Err(Error::contract("sample covariance must be symmetric"));
        }
        Ok(LogDetLoss {
            sigma: symmetrize(&sigma),
        })
    }

    pub fn order(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sample_covariance(&self) -> &Matrix {
        &self.sigma
    }

    fn evaluate(&self, x: &Vector) -> Result<(f64, Matrix, InverseCovarianceHessian)> {
        logdet_value_grad_hess(&self.sigma, &as_matrix(x, self.order()))
    }
}

impl SmoothOracle for LogDetLoss {
    fn dim(&self) -> usize {
        self.order() * self.order()
    }

    fn value(&self, x: &Vector) -> f64 {
        let theta = symmetrize(&as_matrix(x, self.order()));
        match Cholesky::new(theta.clone()) {
            Some(chol) => {
                let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                self.sigma.dot(&theta) - log_det
            }
            None => f64::INFINITY,
        }
    }

    fn gradient(&self, x: &Vector) -> Vector {
        match self.evaluate(x) {
            Ok((_, grad, _)) => as_vector(&grad),
            Err(_) => Vector::from_element(x.len(), f64::NAN),
        }
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        match self.evaluate(x) {
            Ok((value, grad, _)) => (value, as_vector(&grad)),
            Err(_) => (f64::INFINITY, Vector::from_element(x.len(), f64::NAN)),
        }
    }

    fn hessian(&self, x: &Vector) -> Option<Arc<dyn LinearOperator>> {
        self.evaluate(x)
            .ok()
            .map(|(_, _, h)| Arc::new(h) as Arc<dyn LinearOperator>)
    }
}

/// Entrywise l1 penalty on `vec(Θ)` whose prox re-symmetrizes its output.
#[derive(Debug, Clone)]
pub struct SymmetricL1 {
    l1: L1Penalty,
    order: usize,
}

impl SymmetricL1 {
    pub fn new(l1: L1Penalty, order: usize) -> Self {
        SymmetricL1 { l1, order }
    }
}

impl NonsmoothOracle for SymmetricL1 {
    fn name(&self) -> &'static str {
        "l1"
    }

    fn value(&self, x: &Vector) -> f64 {
        self.l1.value(x)
    }

    fn value_change(&self, x: &Vector, d: &Vector) -> f64 {
        self.l1.value_change(x, d)
    }

    fn prox(&self, x: &Vector, t: f64) -> Vector {
        let p = self.l1.prox(x, t);
        as_vector(&symmetrize(&as_matrix(&p, self.order)))
    }

    fn subdifferential_contains(&self, y: &Vector, v: &Vector, tol: f64) -> Option<bool> {
        self.l1.subdifferential_contains(y, v, tol)
    }
}

/// Sparse inverse covariance estimation:
/// `trace(ΣΘ) - log det Θ + lambda ||vec Θ||_1`.
#[derive(Debug, Clone)]
pub struct InverseCovarianceProblem {
    pub smooth: Arc<LogDetLoss>,
    pub lambda: f64,
    /// Penalize diagonal entries too (the default).
    pub penalize_diagonal: bool,
    /// Precision matrix the synthetic samples were drawn from.
    pub ground_truth: Option<Matrix>,
}

impl InverseCovarianceProblem {
    pub fn new(sigma: Matrix, lambda: f64) -> Result<Self> {
        L1Penalty::new(lambda)?;
        Ok(InverseCovarianceProblem {
            smooth: Arc::new(LogDetLoss::new(sigma)?),
            lambda,
            penalize_diagonal: true,
            ground_truth: None,
        })
    }

    pub fn order(&self) -> usize {
        self.smooth.order()
    }

    /// `diag(1 / (Σ_ii + lambda))`.
    pub fn initial_theta(&self) -> Matrix {
        let sigma = self.smooth.sample_covariance();
        Matrix::from_diagonal(&sigma.diagonal().map(|s| 1.0 / (s + self.lambda)))
    }

    pub fn composite(&self) -> CompositeProblem {
        let p = self.order();
        let mut l1 = L1Penalty::new(self.lambda).expect("lambda validated at construction");
        if !self.penalize_diagonal {
            let weights = (0..p * p).map(|k| if k % p == k / p { 0.0 } else { 1.0 }).collect();
            l1 = l1.with_weights(weights).expect("weights are nonnegative");
        }
        CompositeProblem::new(self.smooth.clone(), Arc::new(SymmetricL1::new(l1, p)))
            .with_initial_point(as_vector(&self.initial_theta()))
    }

    pub fn to_matrix(&self, x: &Vector) -> Matrix {
        as_matrix(x, self.order())
    }
}

/// Chain precision (`Θ_{i,i+1} = -0.4`) plus random `±0.3` edges, made
/// diagonally dominant so that its Gershgorin condition bound equals
/// `spec.condition`.
pub fn synthetic_precision(spec: &SyntheticSpec) -> Matrix {
    let p = spec.dim;
    let mut rng = spec.rng();
    let mut theta = Matrix::zeros(p, p);
    for i in 0..p.saturating_sub(1) {
        theta[(i, i + 1)] = -0.4;
        theta[(i + 1, i)] = -0.4;
    }
    for i in 0..p {
        for j in (i + 2)..p {
            if rng.gen_bool(spec.sparsity.clamp(0.0, 1.0)) {
                let w = if rng.gen_bool(0.5) { 0.3 } else { -0.3 };
                theta[(i, j)] = w;
                theta[(j, i)] = w;
            }
        }
    }
    let row_sums: Vec<f64> = (0..p).map(|i| theta.row(i).iter().map(|v| v.abs()).sum()).collect();
    let radius = row_sums.iter().cloned().fold(0.0, f64::max);
    let margin = if spec.condition > 1.0 && radius > 0.0 {
        2.0 * radius / (spec.condition - 1.0)
    } else {
        1.0
    };
    for i in 0..p {
        theta[(i, i)] = row_sums[i] + margin;
    }
    theta
}

/// Draws `samples` Gaussian vectors with precision `precision`, standardizes
/// each feature to zero mean and unit variance, and returns `XᵀX / m`.
pub fn sample_covariance_from_precision<R: Rng>(precision: &Matrix, samples: usize, rng: &mut R) -> Result<Matrix> {
    let p = precision.nrows();
    let chol = Cholesky::new(precision.clone()).ok_or(Error::NotPositiveDefinite)?;
    let lt = chol.l().transpose();
    let mut data = Matrix::zeros(samples, p);
    for i in 0..samples {
        let z = Vector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        // Lᵀx = z gives Cov(x) = (LLᵀ)⁻¹.
        let x = lt.solve_upper_triangular(&z).ok_or(Error::NotPositiveDefinite)?;
        data.set_row(i, &x.transpose());
    }
    Ok(standardized_covariance(data))
}

/// Standardizes each column of `data` (rows are observations) to zero mean
/// and unit variance and returns `XᵀX / m`.
pub fn standardized_covariance(mut data: Matrix) -> Matrix {
    let m = data.nrows() as f64;
    for mut col in data.column_iter_mut() {
        let mean = col.sum() / m;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / m).sqrt();
        if sd > 0.0 {
            col /= sd;
        }
    }
    symmetrize(&(data.transpose() * &data / m))
}

pub fn make_inverse_covariance(spec: &SyntheticSpec, lambda: f64) -> Result<InverseCovarianceProblem> {
    if spec.dim < 2 || spec.samples < 2 {
        return Err(Error::contract("inverse covariance needs order >= 2 and samples >= 2"));
    }
    let precision = synthetic_precision(spec);
    // Offset the stream so sampling does not reuse the structure draws.
    let mut rng = SyntheticSpec {
        seed: spec.seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
        ..*spec
    }
    .rng();
    let sigma = sample_covariance_from_precision(&precision, spec.samples, &mut rng)?;
    let mut problem = InverseCovarianceProblem::new(sigma, lambda)?;
    problem.ground_truth = Some(precision);
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_theta() {
        let sigma = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (v, g, h) = logdet_value_grad_hess(&sigma, &Matrix::identity(2, 2)).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        assert!((g - (&sigma - Matrix::identity(2, 2))).amax() < 1e-15);
        let w = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        assert!((h.apply_matrix(&w) - w).amax() < 1e-15);
    }

    #[test]
    fn non_pd_is_domain_error() {
        let sigma = Matrix::identity(2, 2);
        let theta = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            logdet_value_grad_hess(&sigma, &theta),
            Err(Error::NotPositiveDefinite)
        ));
        let loss = LogDetLoss::new(sigma).unwrap();
        assert_eq!(loss.value(&as_vector(&theta)), f64::INFINITY);
    }

    #[test]
    fn generated_covariance_is_standardized() {
        let p = make_inverse_covariance(&SyntheticSpec::inverse_covariance(7, 6, 40), 0.1).unwrap();
        let sigma = p.smooth.sample_covariance();
        for i in 0..6 {
            assert!((sigma[(i, i)] - 1.0).abs() < 1e-12);
        }
        assert_eq!(sigma, &sigma.transpose());
    }

    #[test]
    fn precision_respects_condition_bound() {
        let spec = SyntheticSpec::inverse_covariance(3, 20, 10);
        let theta = synthetic_precision(&spec);
        let eig = nalgebra::SymmetricEigen::new(theta).eigenvalues;
        assert!(eig.min() > 0.0);
        assert!(eig.max() / eig.min() <= spec.condition + 1e-9);
    }

    #[test]
    fn symmetric_prox_output() {
        let pen = SymmetricL1::new(L1Penalty::new(0.1).unwrap(), 2);
        let x = Vector::from_vec(vec![1.0, 0.5, 0.7, -2.0]);
        let out = as_matrix(&pen.prox(&x, 1.0), 2);
        assert_eq!(out, out.transpose());
    }

    #[test]
    fn diagonal_weights_when_unpenalized() {
        let mut p = InverseCovarianceProblem::new(Matrix::identity(3, 3), 0.5).unwrap();
        p.penalize_diagonal = false;
        let c = p.composite();
        let x = as_vector(&Matrix::identity(3, 3));
        assert_eq!(c.nonsmooth.value(&x), 0.0);
    }
}
