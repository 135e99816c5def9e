//! Nonsmooth penalties with closed-form proximal mappings.

use crate::error::{Error, Result};
use crate::problem::{NonsmoothOracle, Vector};

/// Coordinatewise `sign(x_i) * max(|x_i| - t*lambda, 0)`.
///
/// Ties `|x_i| = t*lambda` map to exactly zero.
pub fn soft_threshold(x: &Vector, t: f64, lambda: f64) -> Vector {
    let level = t * lambda;
    x.map(|xi| shrink(xi, level))
}

/// Soft-thresholding with per-coordinate levels `t * lambda * w_i`.
pub fn soft_threshold_weighted(x: &Vector, t: f64, lambda: f64, weights: &[f64]) -> Vector {
    debug_assert_eq!(x.len(), weights.len());
    Vector::from_iterator(
        x.len(),
        x.iter().zip(weights).map(|(&xi, &w)| shrink(xi, t * lambda * w)),
    )
}

#[inline]
fn shrink(xi: f64, level: f64) -> f64 {
    let mag = xi.abs() - level;
    if mag > 0.0 {
        mag.copysign(xi)
    } else {
        0.0
    }
}

/// Euclidean projection onto `[lower, upper]`.
pub fn box_project(x: &Vector, lower: &Vector, upper: &Vector) -> Result<Vector> {
    if lower.len() != x.len() || upper.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: lower.len().max(upper.len()),
        });
    }
    if let Some(i) = (0..x.len()).find(|&i| lower[i] > upper[i]) {
        return Err(Error::contract(format!(
            "box lower bound exceeds upper bound at coordinate {i}"
        )));
    }
    Ok(clamp(x, lower, upper))
}

fn clamp(x: &Vector, lower: &Vector, upper: &Vector) -> Vector {
    Vector::from_iterator(
        x.len(),
        x.iter()
            .zip(lower.iter().zip(upper.iter()))
            .map(|(&xi, (&lo, &hi))| xi.max(lo).min(hi)),
    )
}

/// `h(x) = lambda * sum_i w_i |x_i|` (uniform weights by default).
#[derive(Debug, Clone, PartialEq)]
pub struct L1Penalty {
    lambda: f64,
    weights: Option<Vec<f64>>,
}

impl L1Penalty {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::contract(format!(
                "l1 weight must be positive and finite, got {lambda}"
            )));
        }
        Ok(L1Penalty { lambda, weights: None })
    }

    /// Per-coordinate nonnegative weights multiplying `lambda`.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::contract("l1 coordinate weights must be nonnegative"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }
}

impl NonsmoothOracle for L1Penalty {
    fn name(&self) -> &'static str {
        "l1"
    }

    fn value(&self, x: &Vector) -> f64 {
        match &self.weights {
            None => self.lambda * x.lp_norm(1),
            Some(w) => self.lambda * x.iter().zip(w).map(|(xi, wi)| wi * xi.abs()).sum::<f64>(),
        }
    }

    // termwise, so tiny steps are not lost against a large ||x||_1
    fn value_change(&self, x: &Vector, d: &Vector) -> f64 {
        let sum: f64 = (0..x.len())
            .map(|i| self.weight(i) * ((x[i] + d[i]).abs() - x[i].abs()))
            .sum();
        self.lambda * sum
    }

    fn prox(&self, x: &Vector, t: f64) -> Vector {
        match &self.weights {
            None => soft_threshold(x, t, self.lambda),
            Some(w) => soft_threshold_weighted(x, t, self.lambda, w),
        }
    }

    fn subdifferential_contains(&self, y: &Vector, v: &Vector, tol: f64) -> Option<bool> {
        if y.len() != v.len() {
            return Some(false);
        }
        let ok = (0..y.len()).all(|i| {
            let bound = self.lambda * self.weight(i);
            if y[i] == 0.0 {
                v[i].abs() <= bound + tol
            } else {
                (v[i] - bound.copysign(y[i])).abs() <= tol
            }
        });
        Some(ok)
    }
}

/// Indicator of the box `{x : lower <= x <= upper}`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxIndicator {
    lower: Vector,
    upper: Vector,
}

impl BoxIndicator {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::contract("box lower bound exceeds upper bound"));
        }
        Ok(BoxIndicator { lower, upper })
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }
}

impl NonsmoothOracle for BoxIndicator {
    fn name(&self) -> &'static str {
        "box"
    }

    fn value(&self, x: &Vector) -> f64 {
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(xi, (lo, hi))| xi >= lo && xi <= hi);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, x: &Vector, _t: f64) -> Vector {
        clamp(x, &self.lower, &self.upper)
    }

    // Normal cone of the box.
    fn subdifferential_contains(&self, y: &Vector, v: &Vector, tol: f64) -> Option<bool> {
        if self.value(y).is_infinite() {
            return Some(false);
        }
        let ok = (0..y.len()).all(|i| {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            let at_lo = y[i] <= lo;
            let at_hi = y[i] >= hi;
            match (at_lo, at_hi) {
                (true, true) => true,
                (true, false) => v[i] <= tol,
                (false, true) => v[i] >= -tol,
                (false, false) => v[i].abs() <= tol,
            }
        });
        Some(ok)
    }
}

/// `h = 0`; the prox is the identity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroPenalty;

impl NonsmoothOracle for ZeroPenalty {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn prox(&self, x: &Vector, _t: f64) -> Vector {
        x.clone()
    }

    fn subdifferential_contains(&self, _y: &Vector, v: &Vector, tol: f64) -> Option<bool> {
        Some(v.amax() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    // Grid search on [x - 3r, x + 3r] then golden-section refinement, where r
    // bounds the distance from x to the minimizer.
    fn brute_force_prox_1d(x: f64, t: f64, lambda: f64) -> f64 {
        let obj = |y: f64| lambda * y.abs() + (y - x).powi(2) / (2.0 * t);
        let radius = t * lambda + 1.0;
        let (lo, hi) = (x - 3.0 * radius, x + 3.0 * radius);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut best = lo;
        for k in 0..=n {
            let y = lo + h * k as f64;
            if obj(y) < obj(best) {
                best = y;
            }
        }
        let (mut a, mut b) = (best - h, best + h);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if obj(c) < obj(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let mid = 0.5 * (a + b);
        if obj(0.0) <= obj(mid) {
            0.0
        } else {
            mid
        }
    }

    #[test]
    fn soft_threshold_hand_example() {
        assert_eq!(soft_threshold(&v(&[3.0, -0.5, 1.0]), 1.0, 1.0), v(&[2.0, 0.0, 0.0]));
    }

    #[test]
    fn soft_threshold_tie_maps_to_zero() {
        let out = soft_threshold(&v(&[0.7, -0.7]), 1.0, 0.7);
        assert_eq!(out[0].to_bits(), 0.0f64.to_bits());
        assert_eq!(out[1].to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn soft_threshold_small_level_is_identity() {
        let x = v(&[3.0, -0.5, 1.0]);
        let out = soft_threshold(&x, 1.0, 1e-12);
        assert!((out - x).amax() < 1e-10);
    }

    #[test]
    fn soft_threshold_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Vector::from_fn(5, |_, _| rng.gen_range(-3.0..3.0));
        let out = soft_threshold(&x, 0.7, 1.0);
        for i in 0..5 {
            let oracle = brute_force_prox_1d(x[i], 0.7, 1.0);
            assert!((out[i] - oracle).abs() < 1e-6, "{} vs {}", out[i], oracle);
        }
    }

    #[test]
    fn equal_weights_reduce_to_uniform() {
        let x = v(&[2.0, -0.1, 0.4, -5.0]);
        let a = soft_threshold_weighted(&x, 0.5, 0.8, &[1.0; 4]);
        assert_eq!(a, soft_threshold(&x, 0.5, 0.8));
        let p = L1Penalty::new(0.8).unwrap().with_weights(vec![2.0; 4]).unwrap();
        assert_eq!(p.prox(&x, 0.5), soft_threshold(&x, 0.5, 1.6));
    }

    #[test]
    fn box_examples() {
        let lo = v(&[-1.0, -1.0]);
        let hi = v(&[1.0, 1.0]);
        assert_eq!(box_project(&v(&[2.0, -3.0]), &lo, &hi).unwrap(), v(&[1.0, -1.0]));
        let inside = v(&[0.25, -0.5]);
        assert_eq!(box_project(&inside, &lo, &hi).unwrap(), inside);
    }

    #[test]
    fn box_inverted_bounds_rejected() {
        let err = box_project(&v(&[0.0]), &v(&[1.0]), &v(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(BoxIndicator::new(v(&[1.0]), v(&[0.0])).is_err());
    }

    #[test]
    fn box_with_infinite_bounds() {
        let b = BoxIndicator::new(v(&[0.0, f64::NEG_INFINITY]), v(&[f64::INFINITY, 2.0])).unwrap();
        assert_eq!(b.prox(&v(&[-4.0, 9.0]), 1.0), v(&[0.0, 2.0]));
        assert_eq!(b.value(&v(&[1.0, 1.0])), 0.0);
        assert_eq!(b.value(&v(&[-1.0, 1.0])), f64::INFINITY);
    }

    #[test]
    fn l1_value() {
        let p = L1Penalty::new(2.0).unwrap();
        assert_eq!(p.value(&Vector::zeros(3)), 0.0);
        assert_eq!(p.value(&v(&[1.0, -2.0])), 6.0);
        assert!(L1Penalty::new(0.0).is_err());
        assert!(L1Penalty::new(1.0).unwrap().with_weights(vec![-1.0]).is_err());
    }

    #[test]
    fn l1_membership() {
        let p = L1Penalty::new(1.0).unwrap();
        assert_eq!(
            p.subdifferential_contains(&v(&[0.0, 2.0]), &v(&[0.5, 1.0]), 1e-12),
            Some(true)
        );
        assert_eq!(
            p.subdifferential_contains(&v(&[0.0, 2.0]), &v(&[1.5, 1.0]), 1e-12),
            Some(false)
        );
        assert_eq!(p.subdifferential_contains(&v(&[-1.0]), &v(&[1.0]), 1e-12), Some(false));
    }

    #[test]
    fn box_membership() {
        let b = BoxIndicator::new(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(
            b.subdifferential_contains(&v(&[0.0, 0.5]), &v(&[-3.0, 0.0]), 1e-12),
            Some(true)
        );
        assert_eq!(
            b.subdifferential_contains(&v(&[0.0, 0.5]), &v(&[3.0, 0.0]), 1e-12),
            Some(false)
        );
        assert_eq!(
            b.subdifferential_contains(&v(&[1.0, 0.5]), &v(&[3.0, 0.0]), 1e-12),
            Some(true)
        );
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn l1_prox_firmly_nonexpansive(x in vec_strategy(6), y in vec_strategy(6), t in 0.01f64..5.0, lambda in 0.01f64..3.0) {
            let p = L1Penalty::new(lambda).unwrap();
            let (x, y) = (v(&x), v(&y));
            let (u, w) = (p.prox(&x, t), p.prox(&y, t));
            let lhs = (&u - &w).dot(&(&x - &y));
            prop_assert!(lhs >= (&u - &w).norm_squared() - 1e-10);
        }

        #[test]
        fn box_prox_firmly_nonexpansive(x in vec_strategy(4), y in vec_strategy(4)) {
            let b = BoxIndicator::new(v(&[-1.0, 0.0, -5.0, 2.0]), v(&[1.0, 3.0, -4.0, 2.0])).unwrap();
            let (x, y) = (v(&x), v(&y));
            let (u, w) = (b.prox(&x, 1.0), b.prox(&y, 1.0));
            prop_assert!((&u - &w).dot(&(&x - &y)) >= (&u - &w).norm_squared() - 1e-10);
        }

        #[test]
        fn l1_prox_is_optimal(x in vec_strategy(5), y in vec_strategy(5), t in 0.01f64..5.0) {
            let p = L1Penalty::new(0.9).unwrap();
            let x = v(&x);
            let y = v(&y);
            let u = p.prox(&x, t);
            let obj = |z: &Vector| p.value(z) + (z - &x).norm_squared() / (2.0 * t);
            prop_assert!(obj(&u) <= obj(&y) + 1e-10);
        }

        #[test]
        fn box_projection_idempotent(x in vec_strategy(3)) {
            let lo = v(&[-1.0, 0.0, 2.0]);
            let hi = v(&[1.0, 0.5, 7.0]);
            let once = box_project(&v(&x), &lo, &hi).unwrap();
            let twice = box_project(&once, &lo, &hi).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
