//! Concrete composite problems: lasso, l1-regularized logistic regression and
//! sparse inverse covariance estimation, plus seeded synthetic generators.

pub mod invcov;
pub mod lasso;
pub mod logistic;
pub mod synthetic;

pub use invcov::{
    logdet_value_grad_hess, make_inverse_covariance, sample_covariance_from_precision, standardized_covariance,
    synthetic_precision, InverseCovarianceHessian, InverseCovarianceProblem, LogDetLoss, SymmetricL1,
};
pub use lasso::{make_lasso, LeastSquares, QuadraticL1Problem};
pub use logistic::{logistic_value_grad, make_logistic, remap_labels, LogisticL1Problem, LogisticLoss};
pub use synthetic::SyntheticSpec;
