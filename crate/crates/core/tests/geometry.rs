use momentum_core::geometry::{
    check_projection_monotonicity, diagnose, line_probe, probe_negative_curvature,
    random_tube_curve, GeometryError, Region,
};
use momentum_core::objectives::{oscillatory_constants, parse_objective_id, ObjectiveSpec};

fn obj(id: &str) -> ObjectiveSpec {
    parse_objective_id(id).unwrap()
}

#[test]
fn sc_implies_pl_and_pl_is_below_l() {
    for id in [
        "oscillatory1d{0.05,2}",
        "oscillatory1d{0.1,2}",
        "quad{0,0.5,2}",
        "sqdist-circle{1,2}",
        "product{2,1,1}",
    ] {
        let f = obj(id);
        let rep = diagnose(&f, &Region::default_for(&f), 4000, 3).unwrap();
        if rep.sc_wrt_min_emp > 0.0 {
            assert!(
                rep.pl_constant_emp >= rep.sc_wrt_min_emp - 1e-9,
                "{id}: {rep:?}"
            );
        }
        assert!(
            rep.pl_constant_emp <= rep.curvature_sup * (1.0 + 1e-6),
            "{id}: {rep:?}"
        );
    }
}

#[test]
fn oscillatory_sc_matches_its_threshold() {
    let f = obj("oscillatory1d{0.1,2}");
    let rep = diagnose(&f, &Region::default_for(&f), 20_000, 0).unwrap();
    let sc = 1.0 - 0.1 * 17f64.sqrt();
    assert!(
        (rep.sc_wrt_min_emp - sc).abs() <= 5e-3 * sc,
        "{}",
        rep.sc_wrt_min_emp
    );
    assert!(rep.neg_eig_bound > 0.0);
}

#[test]
fn pl_survives_where_sc_fails() {
    let f = obj("oscillatory1d{0.3,2}");
    let c = oscillatory_constants(0.3, 2.0);
    let rep = diagnose(&f, &Region::default_for(&f), 20_000, 0).unwrap();
    assert!(c.sc_threshold < 0.0);
    assert!(rep.sc_wrt_min_emp < 0.0);
    assert!(rep.pl_constant_emp >= c.pl_constant.unwrap());
}

#[test]
fn quasar_convexity_follows_the_threshold() {
    // eps = 0.1: quasar-convex iff R^2 < 99.
    for (r, expect) in [(2.0, true), (9.5, true), (12.0, false), (20.0, false)] {
        let f = obj(&format!("oscillatory1d{{0.1,{r}}}"));
        let rep = diagnose(&f, &Region::default_for(&f), 20_000, 1).unwrap();
        assert_eq!(rep.quasar_gamma.is_some(), expect, "R = {r}: {rep:?}");
        assert_eq!(oscillatory_constants(0.1, r).quasar_convex, expect);
    }
}

#[test]
fn negative_curvature_probe() {
    let f = obj("oscillatory1d{0.2,2}");
    let eps = probe_negative_curvature(&f, &Region::default_for(&f), 20_000, 0).unwrap();
    let exact = 0.2 * 85f64.sqrt() - 1.0;
    assert!((eps - exact).abs() <= 1e-2 * exact, "{eps} vs {exact}");

    let q = obj("ellipse-quartic");
    let near_origin = Region::cube(2, -0.2, 0.2);
    assert!(probe_negative_curvature(&q, &near_origin, 2000, 0).unwrap() > 1.0);
    let convex = obj("quad{1,2}");
    assert_eq!(
        probe_negative_curvature(&convex, &Region::cube(2, -2.0, 2.0), 2000, 0).unwrap(),
        0.0
    );
}

#[test]
fn diagnose_is_deterministic_and_checks_inputs() {
    let f = obj("sqdist-circle{1,2}");
    let region = Region::default_for(&f);
    assert_eq!(
        diagnose(&f, &region, 2000, 5).unwrap(),
        diagnose(&f, &region, 2000, 5).unwrap()
    );
    assert!(matches!(
        diagnose(&f, &region, 10, 5),
        Err(GeometryError::TooFewSamples { .. })
    ));
    assert!(Region::parse("box:-1,1", &f).is_ok());
    assert!(Region::parse("shell:0.5,1.5", &f).is_ok());
    assert!(Region::parse("sublevel:0.1", &f).is_ok());
    assert!(Region::parse("sphere:1", &f).is_err());
}

#[test]
fn line_probe_rejects_bad_inputs() {
    let f = obj("quad{1,2}");
    assert!(line_probe(&f, &[0.0, 0.0], &[1.0, 1.0], &[0.0], 0.01).is_err());
    assert!(line_probe(&f, &[0.0, 0.0], &[1.0, 0.0], &[0.0], 0.0).is_err());
    let rows = line_probe(&f, &[0.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0, 1.0], 0.01).unwrap();
    for r in &rows {
        assert!((r.d2phi - 2.0).abs() < 1e-6);
        assert!((r.dphi - 2.0 * r.t).abs() < 1e-6);
    }
    assert!(rows[1].mu_estimate.is_none());
    assert!((rows[2].mu_estimate.unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn projection_moves_with_tangential_motion() {
    let f = obj("sqdist-circle{1,2}");
    let proj = f.projection().unwrap();
    for seed in 100..120 {
        let curve = random_tube_curve(seed, 0.6, 1.4, 1001);
        assert!(curve.iter().all(|p| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            r > 0.3
        }));
        let rep = check_projection_monotonicity(proj, &curve, 1e-3).unwrap();
        assert!(rep.pass, "seed {seed}: {rep:?}");
    }
}
