mod common;

use common::*;
use proxnewton::curvature::SecantPair;
use proxnewton::driver::{rate_estimate, RateClass};
use proxnewton::problems::{make_lasso, QuadraticL1Problem, SyntheticSpec};
use proxnewton::{
    run_fista, run_sparsa, solve, CurvatureModel, Method, SolveStatus, SolverOptions, SubproblemPolicy, Vector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact(method: Method) -> SolverOptions {
    SolverOptions::new(method, SubproblemPolicy::exact())
}

#[test]
fn quadratic_l1_exact_newton_finishes_in_three_iterations() {
    for seed in 0..10 {
        let p = make_lasso(&SyntheticSpec::lasso(seed, 20, 60), 0.1)
            .unwrap()
            .composite();
        let r = solve(&p, &exact(Method::ProxNewton)).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.iterations() <= 3, "seed {seed}: {} iterations", r.iterations());
        assert!(r.norm_gf_final <= 1e-8);
    }
}

#[test]
fn large_lambda_drives_to_zero() {
    let lasso = make_lasso(&SyntheticSpec::lasso(8, 15, 40), 1.0).unwrap();
    let lambda_max = lasso.lambda_max();
    let p = QuadraticL1Problem::new(
        lasso.smooth.design().clone(),
        lasso.smooth.response().clone(),
        1.5 * lambda_max,
    )
    .unwrap()
    .composite();
    let mut o = exact(Method::ProxNewton);
    o.x0 = Some(Vector::from_element(15, 1.0));
    let r = solve(&p, &o).unwrap();
    assert!(r.iterations() <= 2, "{} iterations", r.iterations());
    assert_eq!(r.x_final.amax(), 0.0);
}

#[test]
fn start_at_minimizer_stops_immediately() {
    let lasso = make_lasso(&SyntheticSpec::lasso(9, 10, 30), 0.1).unwrap();
    let x_star = lasso_coordinate_descent(lasso.smooth.design(), lasso.smooth.response(), 0.1, 1e-15);
    let mut o = exact(Method::ProxBfgs);
    o.x0 = Some(x_star.clone());
    let r = solve(&lasso.composite(), &o).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert_eq!(r.iterations(), 0);
    assert!(r.trace.is_empty());
    assert_eq!(r.x_final, x_star);
}

#[test]
fn logistic_bfgs_matches_newton_objective() {
    let p = logistic_fixture().composite();
    let newton = solve(&p, &exact(Method::ProxNewton)).unwrap();
    let bfgs = solve(&p, &SolverOptions::new(Method::ProxBfgs, SubproblemPolicy::adaptive())).unwrap();
    assert_eq!(bfgs.status, SolveStatus::Converged);
    assert!(
        (newton.f_final - bfgs.f_final).abs() <= 1e-8,
        "{} vs {}",
        newton.f_final,
        bfgs.f_final
    );
}

#[test]
fn fista_on_well_conditioned_quadratic() {
    // A with singular values sqrt(1..10) gives condition number 10 for AᵀA
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let eigs: Vec<f64> = (0..20).map(|i| 1.0 + 9.0 * i as f64 / 19.0).collect();
    let sqrt: Vec<f64> = eigs.iter().map(|e| e.sqrt()).collect();
    let a = spd_with_spectrum(&sqrt, &mut rng);
    let b = gaussian_vector(20, &mut rng) * 3.0;
    let p = QuadraticL1Problem::new(a, b, 0.1).unwrap().composite();
    let mut o = exact(Method::Fista);
    o.max_outer = 200;
    let r = run_fista(&p, &o).unwrap();
    assert_eq!(r.status, SolveStatus::Converged, "{:e}", r.norm_gf_final);
}

#[test]
fn first_order_baselines_agree_with_newton_on_lasso() {
    let p = lasso_fixture().composite();
    let newton = solve(&p, &exact(Method::ProxNewton)).unwrap();
    let mut o = exact(Method::Fista);
    o.max_outer = 20_000;
    let fista = run_fista(&p, &o).unwrap();
    o.method = Method::Sparsa;
    let sparsa = run_sparsa(&p, &o).unwrap();
    for r in [&fista, &sparsa] {
        assert_eq!(r.status, SolveStatus::Converged, "{:?}", r.method);
        assert!((r.f_final - newton.f_final).abs() <= 1e-7);
    }
}

#[test]
fn barzilai_borwein_scale_tracks_curvature() {
    let mut model = CurvatureModel::scaled_identity(3, 1.0);
    assert_eq!(model.scale(), Some(1.0));
    let s = Vector::from_vec(vec![1.0, -2.0, 0.5]);
    model.update(SecantPair::new(s.clone(), &s * 4.0));
    assert!((model.scale().unwrap() - 4.0).abs() < 1e-15);
    let d = Vector::from_vec(vec![0.0, 1.0, 0.0]);
    assert_eq!(model.apply(&d), &d * model.scale().unwrap());
}

#[test]
fn exact_hessian_on_quadratic_has_zero_dennis_more_ratios() {
    let p = lasso_fixture().composite();
    let mut o = exact(Method::ProxNewton);
    o.reference = Some(reference_minimizer(&p));
    let r = solve(&p, &o).unwrap();
    let dm = r.diagnostics.dennis_more_ratios.expect("reference supplied");
    assert!(!dm.is_empty());
    assert!(dm.iter().all(|&v| v <= 1e-12), "{dm:?}");
}

#[test]
fn rate_classes_of_model_sequences() {
    let geometric: Vec<f64> = (0..20).map(|k| 0.5f64.powi(k)).collect();
    match rate_estimate(&geometric) {
        RateClass::Linear(rho) => assert!((rho - 0.5).abs() < 1e-12),
        other => panic!("{other}"),
    }
    // e_{k+1} = e_k²
    let quadratic: Vec<f64> = (0..6).map(|k| 0.5f64.powi(1 << k)).collect();
    assert_eq!(rate_estimate(&quadratic), RateClass::Superlinear);
    let harmonic: Vec<f64> = (1..40).map(|k| 1.0 / k as f64).collect();
    assert_eq!(rate_estimate(&harmonic), RateClass::Sublinear);
    assert_eq!(rate_estimate(&[1.0, 0.5, 0.25]), RateClass::Unclassifiable);
}

#[test]
fn newton_on_logistic_is_superlinear() {
    let p = logistic_fixture().composite();
    let mut o = exact(Method::ProxNewton);
    o.reference = Some(reference_minimizer(&p));
    let r = solve(&p, &o).unwrap();
    assert_eq!(
        r.diagnostics.rate,
        Some(RateClass::Superlinear),
        "{:?}",
        r.diagnostics.errors
    );
}

#[test]
fn objective_is_monotone_for_newton_type_methods() {
    let p = logistic_fixture().composite();
    for method in [Method::ProxNewton, Method::ProxBfgs, Method::prox_lbfgs()] {
        let r = solve(&p, &SolverOptions::new(method, SubproblemPolicy::adaptive())).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].f <= w[0].f, "{method:?}");
            assert!(w[1].cum_fev >= w[0].cum_fev && w[1].cum_gev >= w[0].cum_gev);
        }
    }
}
