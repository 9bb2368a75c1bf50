use smtp_core::diagnostics::{
    bound_envelope, compare_to_envelope, default_checkpoints, fit_linear_rate, mean_gap_curve,
    verify_trace_inequalities, LipschitzSpec,
};
use smtp_core::directions::{DirectionDistribution, ProbabilityVector};
use smtp_core::objectives::{logspace, Quadratic, Rosenbrock, ROSENBROCK_BOX_LIPSCHITZ};
use smtp_core::optimizers::{smtp_is_run, smtp_run, RunOptions, RunTrace};
use smtp_core::schedules::{StepsizeSchedule, TheoremId, TheoremParams};
use smtp_core::Error;

fn detailed(n: u64) -> RunOptions {
    RunOptions { retain_details: true, ..RunOptions::iterations(n) }
}

fn quadratic_trace(gamma: f64) -> (Quadratic, RunTrace) {
    let q = Quadratic::centered(logspace(1.0, 10.0, 10).unwrap()).unwrap();
    let dist = DirectionDistribution::unit_sphere(10).unwrap();
    let sched = StepsizeSchedule::Constant { gamma };
    let t = smtp_run(&mut q.clone(), &dist, &sched, 0.5, &[1.0; 10], &detailed(2000), 4).unwrap();
    (q, t)
}

#[test]
fn honest_quadratic_traces_are_clean() {
    for gamma in [1e-3, 0.05, 0.5] {
        let (q, t) = quadratic_trace(gamma);
        let report = verify_trace_inequalities(&t, &q, &LipschitzSpec::Global(10.0)).unwrap();
        assert_eq!(report.checked, 2000);
        assert!(report.is_clean(), "gamma {gamma}: {:?}", &report.violations[..3.min(report.violations.len())]);
        assert!(report.out_of_domain.is_empty());
    }
}

#[test]
fn doubled_stepsizes_are_detected() {
    let (q, mut t) = quadratic_trace(1e-3);
    for d in t.details.as_mut().unwrap() {
        d.gamma *= 2.0;
    }
    let report = verify_trace_inequalities(&t, &q, &LipschitzSpec::Global(10.0)).unwrap();
    assert!(!report.violations.is_empty());
    assert!(report.min_slack < -1e-10);
}

#[test]
fn importance_traces_use_coordinate_constants() {
    let l = logspace(1.0, 1000.0, 6).unwrap();
    let q = Quadratic::centered(l.clone()).unwrap();
    let p = ProbabilityVector::proportional(&l).unwrap();
    let sched = StepsizeSchedule::IsConstant { gamma: 0.4, weights: l.clone() };
    let t = smtp_is_run(&mut q.clone(), &p, &sched, 0.5, &[1.0; 6], &detailed(3000), 2).unwrap();
    let report = verify_trace_inequalities(&t, &q, &LipschitzSpec::Coordinate(l)).unwrap();
    assert!(report.is_clean());
    // The global constant is far too small for the steep coordinates' stepsizes to be certified.
    let loose = verify_trace_inequalities(&t, &q, &LipschitzSpec::Global(1.0)).unwrap();
    assert!(!loose.is_clean());
}

#[test]
fn rosenbrock_box_exits_are_out_of_domain() {
    let f = Rosenbrock::new(4).unwrap();
    let dist = DirectionDistribution::unit_sphere(4).unwrap();
    let sched = StepsizeSchedule::Constant { gamma: 0.05 };
    let t = smtp_run(&mut f.clone(), &dist, &sched, 0.5, &[1.95; 4], &detailed(2000), 3).unwrap();

    let honest = verify_trace_inequalities(&t, &f, &LipschitzSpec::Global(ROSENBROCK_BOX_LIPSCHITZ)).unwrap();
    assert!(honest.is_clean());

    // An understated constant fails everywhere; the report splits failures by domain.
    let report = verify_trace_inequalities(&t, &f, &LipschitzSpec::Global(1.0)).unwrap();
    assert!(!report.out_of_domain.is_empty());
    let details = t.details.as_ref().unwrap();
    let inside = |k: u64| {
        let d = &details[k as usize];
        [&d.z_before, &d.z_plus, &d.z_minus].iter().all(|x| x.iter().all(|v| (-2.0..=2.0).contains(v)))
    };
    assert!(report.violations.iter().all(|(k, _)| inside(*k)));
    assert!(report.out_of_domain.iter().all(|(k, _)| !inside(*k)));
}

#[test]
fn oracle_needs_retained_details() {
    let q = Quadratic::centered(vec![1.0, 2.0]).unwrap();
    let dist = DirectionDistribution::unit_sphere(2).unwrap();
    let sched = StepsizeSchedule::Constant { gamma: 0.1 };
    let t = smtp_run(&mut q.clone(), &dist, &sched, 0.5, &[1.0; 2], &RunOptions::iterations(5), 0).unwrap();
    assert!(matches!(
        verify_trace_inequalities(&t, &q, &LipschitzSpec::Global(2.0)),
        Err(Error::NotRetained(_))
    ));
}

#[test]
fn dependent_and_free_contractions_coincide_at_unit_theta() {
    let params = TheoremParams {
        gap: Some(3.0),
        lipschitz: Some(8.0),
        mu: Some(0.5),
        mu_d: Some(0.4),
        gamma_d: Some(1.0),
        theta_rate: Some(1.0),
        t: Some(0.0),
        ..TheoremParams::default()
    };
    let dep = bound_envelope(TheoremId::ScDep, &params, 50).unwrap();
    let free = bound_envelope(TheoremId::ScFree, &params, 50).unwrap();
    assert_eq!(dep.contraction, free.contraction);
    for k in 0..=50 {
        assert!((dep.at(k) - free.at(k)).abs() <= 1e-15 * dep.at(0));
    }
}

#[test]
fn geometric_trace_fit() {
    let values: Vec<f64> = (0..40).map(|k| 2.0 + 0.5f64.powi(k)).collect();
    let fit = fit_linear_rate(&values, 2.0, Some(0)).unwrap();
    assert!((fit.value - 0.5).abs() <= 1e-9);
    assert!((fit.r_squared - 1.0).abs() <= 1e-12);
}

#[test]
fn seed_averaged_gaps_against_an_envelope() {
    let runs: Vec<RunTrace> = (0..8)
        .map(|seed| {
            let q = Quadratic::centered(vec![1.0, 4.0]).unwrap();
            let dist = DirectionDistribution::unit_sphere(2).unwrap();
            let sched = StepsizeSchedule::SolutionFree { lipschitz: 4.0, t: 1e-6, beta: 0.5 };
            smtp_run(&mut q.clone(), &dist, &sched, 0.5, &[1.0, 1.0], &RunOptions::iterations(400), seed).unwrap()
        })
        .collect();
    let curve = mean_gap_curve(&runs, 0.0).unwrap();
    assert_eq!(curve.mean.len(), 401);
    assert_eq!(curve.mean[0], 2.5);
    assert_eq!(curve.std_error[0], 0.0);
    let params = TheoremParams {
        gap: Some(2.5),
        lipschitz: Some(4.0),
        mu: Some(1.0),
        mu_d: Some(1.0 / (4.0 * std::f64::consts::PI).sqrt()),
        t: Some(1e-6),
        ..TheoremParams::default()
    };
    let env = bound_envelope(TheoremId::ScFree, &params, 400).unwrap();
    let verdicts = compare_to_envelope(&curve.mean, &env, &default_checkpoints(400), 1.05);
    assert_eq!(verdicts.iter().map(|v| v.k).collect::<Vec<_>>(), vec![100, 200, 400]);
    assert!(verdicts.iter().all(|v| v.pass));
}
