use momentum_core::lyapunov::{
    certify_continuous, certify_descent_lemma, certify_global, discrete_lyapunov_agnes,
    discrete_lyapunov_nag, lyapunov_values, nag_lyapunov_coefficient, recursion_bound,
    LyapunovError, Theorem,
};
use momentum_core::noise::NoiseModel;
use momentum_core::objectives::{make_ellipse_quartic, parse_objective_id};
use momentum_core::optimizers::{run_discrete, run_ensemble, OptimizerParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nag_certificate_holds_on_degenerate_quadratics(l1 in 0.05..1.0_f64, l2 in 1.0..5.0_f64, x in prop::collection::vec(-2.0..2.0_f64, 3)) {
        let f = parse_objective_id(&format!("quad{{0,{l1},{l2}}}")).unwrap();
        let p = OptimizerParams::nag(l1, 1.0 / l2).unwrap().with_steps(200);
        let rec = run_discrete(&f, &NoiseModel::zero(), &p, &x, None).unwrap();
        let trace = discrete_lyapunov_nag(&f, &rec, &p).unwrap();
        prop_assert!(trace.passed(), "max ratio {}", trace.max_ratio());
        prop_assert!(trace.max_ratio() <= 1.0 - (l1 / l2).sqrt() + 1e-12);
    }
}

#[test]
fn descent_lemma_holds_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let objectives = [
        parse_objective_id("quad{0,0.3,2}").unwrap(),
        parse_objective_id("oscillatory1d{0.1,2}").unwrap(),
        parse_objective_id("quad{0.5,1,2}").unwrap(),
    ];
    for k in 0..10_000 {
        let f = &objectives[k % objectives.len()];
        let d = f.dim();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        if x.iter().any(|v| v.abs() < 1e-6) {
            continue;
        }
        let g: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let eta = rng.random_range(0.0..1.0);
        assert!(
            certify_descent_lemma(f, &x, &g, eta).unwrap(),
            "{} at {x:?}",
            f.id()
        );
    }
}

#[test]
fn coefficient_tends_to_one() {
    let errs: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&eta| nag_lyapunov_coefficient(1.0, eta) - 1.0)
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0] / 5.0));
    assert!(errs[2] < 1e-2);
}

#[test]
fn recursion_bound_dominates_the_recursion() {
    let (a, b) = (0.9, 0.05);
    let mut y = 3.0;
    for n in 0..200 {
        assert!(y <= recursion_bound(a, b, 3.0, n) + 1e-12);
        y = a * y + b;
    }
}

#[test]
fn flow_certificates_pass_on_manifold_objectives() {
    let f = parse_objective_id("quad{0,1}").unwrap();
    let p = OptimizerParams::heavy_ball(1.0, Some(1.0), 8.0)
        .unwrap()
        .with_dt(1e-3);
    let (_, trace) = certify_continuous(&f, &p, &[1.0, 1.0]).unwrap();
    assert!(trace.passed());

    let q = make_ellipse_quartic();
    let p = OptimizerParams::heavy_ball(2.5, None, 20.0)
        .unwrap()
        .with_dt(1e-3)
        .with_record_every(10);
    let (_, trace, entry) = certify_global(&q, &p, &[1.5, 1.5]).unwrap();
    assert!(trace.passed());
    assert!(entry.time > 0.0 && entry.f_gap < 0.025);
}

#[test]
fn noisy_and_curved_inputs_are_refused() {
    let f = parse_objective_id("quad{0,1}").unwrap();
    let p = OptimizerParams::nag(1.0, 1.0).unwrap().with_steps(10);
    let noisy = NoiseModel::gaussian(1.0, 0.0, 0).unwrap();
    let rec = run_discrete(&f, &noisy, &p, &[1.0, 1.0], None).unwrap();
    assert_eq!(
        discrete_lyapunov_nag(&f, &rec, &p),
        Err(LyapunovError::NoisyRecord(Theorem::Discrete))
    );

    let recs = run_ensemble(&f, &noisy, &p, &[1.0, 1.0], &[0, 1, 2]).unwrap();
    assert!(matches!(
        discrete_lyapunov_agnes(&f, &recs, &p.with_smoothness(Some(1.0)), &noisy),
        Err(LyapunovError::EnsembleTooSmall { .. })
    ));

    let circle = parse_objective_id("sqdist-circle{1,1}").unwrap();
    let rec = run_discrete(&circle, &NoiseModel::zero(), &p, &[1.2, 0.0], None).unwrap();
    assert_eq!(
        discrete_lyapunov_nag(&circle, &rec, &p),
        Err(LyapunovError::NonAffine(Theorem::Discrete))
    );
}

#[test]
fn record_values_follow_the_scheme() {
    let f = parse_objective_id("quad{0,0.01,4}").unwrap();
    let p = OptimizerParams::nag(0.01, 0.25).unwrap().with_steps(50);
    let rec = run_discrete(&f, &NoiseModel::zero(), &p, &[1.0, 1.0, 1.0], None).unwrap();
    let values = lyapunov_values(&f, &rec).unwrap();
    assert_eq!(values, discrete_lyapunov_nag(&f, &rec, &p).unwrap().values);

    let gd = OptimizerParams::gd(0.25).unwrap().with_steps(5);
    let rec = run_discrete(&f, &NoiseModel::zero(), &gd, &[1.0, 1.0, 1.0], None).unwrap();
    assert!(lyapunov_values(&f, &rec).is_err());
}

#[test]
fn theorem_names_round_trip() {
    for t in Theorem::ALL {
        assert_eq!(t.name().parse::<Theorem>().unwrap(), t);
    }
    assert!("lemma".parse::<Theorem>().is_err());
}
