use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parameters of a seeded synthetic instance. Equal parameters always produce a
/// bit-identical instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Number of features (lasso, logistic) or matrix order (inverse covariance).
    pub dim: usize,
    /// Number of observations.
    pub samples: usize,
    /// Fraction of nonzeros in the ground truth (for inverse covariance: the
    /// probability of an extra random edge on top of the chain).
    pub sparsity: f64,
    pub noise: f64,
    /// Target condition number (design columns for lasso, precision matrix
    /// bound for inverse covariance). Ignored for logistic.
    pub condition: f64,
}

impl SyntheticSpec {
    pub fn lasso(seed: u64, dim: usize, samples: usize) -> Self {
        SyntheticSpec {
            seed,
            dim,
            samples,
            sparsity: 0.2,
            noise: 0.1,
            condition: 1.0,
        }
    }

    pub fn logistic(seed: u64, dim: usize, samples: usize) -> Self {
        SyntheticSpec {
            seed,
            dim,
            samples,
            sparsity: 0.2,
            noise: 1.0,
            condition: 1.0,
        }
    }

    pub fn inverse_covariance(seed: u64, order: usize, samples: usize) -> Self {
        SyntheticSpec {
            seed,
            dim: order,
            samples,
            sparsity: 0.02,
            noise: 0.0,
            condition: 5.0,
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub(crate) fn nonzeros(&self) -> usize {
        ((self.sparsity * self.dim as f64).round() as usize).clamp(1, self.dim)
    }
}
