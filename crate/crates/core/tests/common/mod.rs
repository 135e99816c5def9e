#![allow(dead_code)]

use proxnewton::problems::{
    make_inverse_covariance, make_lasso, make_logistic, InverseCovarianceProblem, LogisticL1Problem,
    QuadraticL1Problem, SyntheticSpec,
};
use proxnewton::{solve, CompositeProblem, Matrix, Method, SolverOptions, SubproblemPolicy, Vector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn lasso_fixture() -> QuadraticL1Problem {
    make_lasso(&SyntheticSpec::lasso(42, 50, 200), 0.1).unwrap()
}

pub fn logistic_fixture() -> LogisticL1Problem {
    make_logistic(&SyntheticSpec::logistic(42, 50, 200), 0.01, 1e-3).unwrap()
}

pub fn invcov_fixture() -> InverseCovarianceProblem {
    make_inverse_covariance(&SyntheticSpec::inverse_covariance(42, 30, 40), 0.1).unwrap()
}

pub fn gaussian_vector<R: Rng>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng>(r: usize, c: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// `Q diag(eigs) Qᵀ` with `Q` from a QR of a Gaussian matrix.
pub fn spd_with_spectrum<R: Rng>(eigs: &[f64], rng: &mut R) -> Matrix {
    let n = eigs.len();
    let q = gaussian_matrix(n, n, rng).qr().q();
    let m = &q * Matrix::from_diagonal(&Vector::from_column_slice(eigs)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn relative_error(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// Central differences with step `1e-6 (1 + ||x||)`.
pub fn fd_gradient(f: impl Fn(&Vector) -> f64, x: &Vector) -> Vector {
    let h = 1e-6 * (1.0 + x.norm());
    Vector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// `(∇g(x + hv) - ∇g(x - hv)) / 2h`.
pub fn fd_hessian_action(grad: impl Fn(&Vector) -> Vector, x: &Vector, v: &Vector) -> Vector {
    let h = 1e-6 * (1.0 + x.norm()) / v.norm().max(1e-300);
    (grad(&(x + v * h)) - grad(&(x - v * h))) / (2.0 * h)
}

/// Cyclic coordinate descent for `||Ax - b||²/2 + lambda ||x||_1`, written
/// independently of the library's proximal machinery.
pub fn lasso_coordinate_descent(a: &Matrix, b: &Vector, lambda: f64, tol: f64) -> Vector {
    let n = a.ncols();
    let col_sq: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.iter().cloned().collect();
    for _sweep in 0..100_000 {
        let mut max_change = 0.0f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = a.column(j);
            let rho: f64 = col.iter().zip(&r).map(|(aij, ri)| aij * ri).sum::<f64>() + col_sq[j] * x[j];
            let new = if rho > lambda {
                (rho - lambda) / col_sq[j]
            } else if rho < -lambda {
                (rho + lambda) / col_sq[j]
            } else {
                0.0
            };
            let delta = new - x[j];
            if delta != 0.0 {
                for (ri, aij) in r.iter_mut().zip(col.iter()) {
                    *ri -= aij * delta;
                }
                x[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change < tol {
            break;
        }
    }
    Vector::from_vec(x)
}

/// High-accuracy minimizer from Newton steps with tightly solved subproblems.
pub fn reference_minimizer(problem: &CompositeProblem) -> Vector {
    let mut o = SolverOptions::new(
        Method::ProxNewton,
        SubproblemPolicy::Exact {
            tol: 1e-14,
            max_inner: 50_000,
        },
    );
    o.tol = 1e-12;
    o.max_outer = 100;
    let r = solve(problem, &o).unwrap();
    assert!(
        r.norm_gf_final <= 1e-11,
        "reference solve reached only {:e}",
        r.norm_gf_final
    );
    r.x_final
}
