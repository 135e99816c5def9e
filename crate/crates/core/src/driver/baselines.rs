//! First-order baselines.

use crate::error::Result;
use crate::problem::{CompositeProblem, EvalCounts};

use super::{solve, starting_point, Diagnostics, Method, Outcome, SolveReport, SolveStatus, SolverOptions, Tracker};

/// FISTA with a backtracking Lipschitz estimate; function-value restart when
/// `options.fista_restart` is set. `options.method` is ignored.
pub fn run_fista(problem: &CompositeProblem, options: &SolverOptions) -> Result<SolveReport> {
    let mut o = options.clone();
    o.method = Method::Fista;
    solve(problem, &o)
}

/// Spectral (Barzilai–Borwein) proximal gradient steps with a nonmonotone
/// line search. `options.method` is ignored.
pub fn run_sparsa(problem: &CompositeProblem, options: &SolverOptions) -> Result<SolveReport> {
    let mut o = options.clone();
    o.method = Method::Sparsa;
    solve(problem, &o)
}

pub(super) fn fista_loop(problem: &CompositeProblem, options: &SolverOptions) -> Result<SolveReport> {
    let mut counts = EvalCounts::default();
    let mut tracker = Tracker::new(problem, options)?;

    let mut x = starting_point(problem, options)?;
    let (gx, mut grad_x) = problem.eval_smooth(&x, &mut counts)?;
    let mut f = gx + problem.nonsmooth.value(&x);
    let f_initial = f;
    let mut norm_gf = problem.optimality_measure_with(&x, &grad_x, &mut counts)?;
    tracker.observe(&x);

    let mut lipschitz = problem.smooth.lipschitz_hint().filter(|l| *l > 0.0).unwrap_or(1.0);
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut momentum = false;
    let mut status = SolveStatus::MaxIterations;

    for _ in 0..options.max_outer {
        if norm_gf <= options.tol {
            status = SolveStatus::Converged;
            break;
        }
        let (gy, grad_y) = if y == x {
            (gx_of(f, problem, &x), grad_x.clone())
        } else {
            problem.eval_smooth(&y, &mut counts)?
        };
        let (p, gp) = loop {
            let t = 1.0 / lipschitz;
            let p = problem.prox(&(&y - &grad_y * t), t, &mut counts);
            let diff = &p - &y;
            counts.fev += 1;
            let gp = problem.smooth.value(&p);
            let bound = gy + grad_y.dot(&diff) + 0.5 * lipschitz * diff.norm_squared();
            if gp <= bound + 1e-12 * gy.abs().max(1.0) || lipschitz > 1e300 {
                break (p, gp);
            }
            lipschitz *= 2.0;
        };
        let fp = gp + problem.nonsmooth.value(&p);

        let t = 1.0 / lipschitz;
        // a plain step from y = x is monotone up to rounding, so it is kept
        if options.fista_restart && fp > f && momentum {
            // restart: take a plain proximal gradient step from x instead
            momentum = false;
            theta = 1.0;
            y = x.clone();
            tracker.record(t, f, norm_gf, f64::NAN, f64::NAN, 0, &counts);
            tracker.observe(&x);
            continue;
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        y = &p + (&p - &x) * ((theta - 1.0) / theta_next);
        theta = theta_next;
        momentum = true;
        x = p;
        f = fp;
        grad_x = problem.eval_gradient(&x, &mut counts)?;
        norm_gf = problem.optimality_measure_with(&x, &grad_x, &mut counts)?;
        tracker.observe(&x);
        tracker.record(t, f, norm_gf, f64::NAN, f64::NAN, 0, &counts);
    }
    if status == SolveStatus::MaxIterations && norm_gf <= options.tol {
        status = SolveStatus::Converged;
    }

    Ok(tracker.finish(
        Outcome {
            status,
            x,
            f,
            norm_gf,
            f_initial,
            counts,
        },
        options,
        Diagnostics::default(),
    ))
}

fn gx_of(f: f64, problem: &CompositeProblem, x: &crate::problem::Vector) -> f64 {
    f - problem.nonsmooth.value(x)
}
