use ampc::sim::{self, Execution, RunStatus, Scenario, SimError};
use nalgebra::DVector;

#[test]
fn certainty_equivalence_tracks_exactly() {
    let sc = Scenario::certainty_equivalence();
    let s = sc.synthesize().unwrap();
    let out = sim::run(&sc, &s, &sc.x0, &sc.theta_hat0).unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    assert_eq!(out.checks.failures(), 0);
    assert_eq!(out.checks.frozen_steps, sc.steps);
    let last = out.log.rows.last().unwrap();
    assert!(last.xe.norm() < 1e-6);
    assert!(last.x.iter().zip(sc.reference_segments[0].1.iter()).all(|(a, b)| (a - b).abs() < 1e-6));
}

#[test]
fn benchmark_run_is_clean_and_converges() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let out = sim::run(&sc, &s, &sc.x0, &sc.theta_hat0).unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    assert_eq!(out.checks.failures(), 0, "{:?}", out.checks);
    assert_eq!(out.log.rows.len(), sc.steps);
    for (k, row) in out.log.rows.iter().enumerate() {
        assert_eq!(row.k, k);
        assert!(row.state_ok && row.input_ok && row.rate_ok && row.candidate_ok && row.estimator_ok);
        assert!(row.x.amax() <= 2.25 + 1e-9);
        assert!(row.u.amax() <= 3.0 + 1e-9);
        assert!(row.du.amax() <= 2.5 + 1e-9);
    }
    let reference = sc.reference().unwrap();
    let report = sim::tracking_report(&out.log, reference.switches(), sc.settle_window, sc.settle_tol);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn switch_excites_prediction_error() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let out = sim::run(&sc, &s, &sc.x0, &sc.theta_hat0).unwrap();
    let rows = &out.log.rows;
    // The step before the switch already sees the new reference one step ahead.
    let peak = rows[29].xtilde_norm;
    assert!(rows[20..29].iter().all(|r| r.xtilde_norm < peak));
    assert!(rows[59].xtilde_norm < peak);
    assert!(out.log.final_theta_error < rows[29].theta_error);
}

#[test]
fn single_sample_sweep_equals_single_run() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let mc = sim::monte_carlo(&sc, &s, 1, 1, Execution::Sequential).unwrap();
    let one = &mc.runs[0];
    let direct = sim::run(&sc, &s, &one.x0, &one.theta_hat0).unwrap();
    assert_eq!(&direct, one);
}

#[test]
fn sweeps_are_deterministic_across_execution_modes() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let a = sim::monte_carlo(&sc, &s, 3, 3, Execution::Parallel).unwrap();
    let b = sim::monte_carlo(&sc, &s, 3, 3, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let csv = |m: &sim::MonteCarloSummary| {
        let mut buf = Vec::new();
        sim::write_summary_csv(&mut buf, m).unwrap();
        for r in &m.runs {
            sim::write_log_csv(&mut buf, &r.log, 2, 2).unwrap();
        }
        buf
    };
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(a.aggregate.runs, 9);
}

#[test]
fn samples_lie_in_their_sets() {
    let sc = Scenario::benchmark();
    let xs = sim::sample_initial_states(&sc.x_set, 0.95, 10, sc.seed).unwrap();
    assert_eq!(xs.len(), 10);
    for x in &xs {
        assert!(x.amax() <= 0.95 * 2.25 + 1e-12);
    }
    let thetas = sim::sample_estimates(&sc.hull, 10, sc.seed);
    for t in &thetas {
        assert!(sc.hull.membership_residual(t).unwrap() < 1e-9);
    }
    let distinct = xs.windows(2).all(|w| w[0] != w[1]);
    assert!(distinct);
}

#[test]
fn halton_radical_inverse() {
    assert_eq!(sim::halton(1, 2), 0.5);
    assert_eq!(sim::halton(2, 2), 0.25);
    assert_eq!(sim::halton(3, 2), 0.75);
    assert!((sim::halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    assert!((sim::halton(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
}

#[test]
fn csv_rows_parse_back_exactly() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let out = sim::run(&sc, &s, &sc.x0, &sc.theta_hat0).unwrap();
    let mut buf = Vec::new();
    sim::write_log_csv(&mut buf, &out.log, 2, 2).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, sim::csv_header(2, 2));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), sc.steps);
    for (row, logged) in rows.iter().zip(&out.log.rows) {
        assert_eq!(row.len(), header.len());
        let x1: f64 = row[1].parse().unwrap();
        assert_eq!(x1.to_bits(), logged.x[0].to_bits());
        let theta: f64 = row[header.iter().position(|h| *h == "theta_error").unwrap()].parse().unwrap();
        assert_eq!(theta.to_bits(), logged.theta_error.to_bits());
    }
}

#[test]
fn long_format_has_five_families() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let out = sim::run(&sc, &s, &sc.x0, &sc.theta_hat0).unwrap();
    let rows = sim::long_format(&out.log, sc.sample_period);
    let mut names: Vec<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    names.sort();
    names.dedup();
    let families: std::collections::BTreeSet<&str> = names.iter().map(|n| n.split('/').next().unwrap()).collect();
    assert_eq!(
        families.into_iter().collect::<Vec<_>>(),
        vec!["control_input", "error_states", "input_rate", "parameter_error", "states"]
    );
    for n in &names {
        assert_eq!(rows.iter().filter(|r| r.1 == *n).count(), sc.steps, "{n}");
    }
}

#[test]
fn inputs_outside_their_sets_are_rejected() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let far = DVector::from_vec(vec![3.0, 0.0]);
    assert!(matches!(sim::run(&sc, &s, &far, &sc.theta_hat0), Err(SimError::InitialStateOutside)));
    let listed = sim::benchmark_listed_estimate();
    assert!(matches!(sim::run(&sc, &s, &sc.x0, &listed), Err(SimError::EstimateOutsideHull(_))));
    let mut bad = Scenario::benchmark();
    bad.plant = sim::benchmark_listed_plant();
    assert!(matches!(bad.validate(), Err(SimError::PlantOutsideHull(_))));
}

#[test]
fn tiny_input_box_is_reported_not_panicking() {
    let mut sc = Scenario::benchmark();
    sc.u_set = ampc::geometry::Polytope::symmetric_box(&[0.05, 0.05]).unwrap();
    let s = sc.synthesize().unwrap();
    let mc = sim::monte_carlo(&sc, &s, 3, 3, Execution::Parallel).unwrap();
    assert_eq!(mc.aggregate.completed, 0);
    assert!(mc.aggregate.initially_infeasible > 0);
    assert_eq!(mc.aggregate.runs, mc.aggregate.initially_infeasible + mc.aggregate.falsified);
    assert_eq!(mc.aggregate.constraint_violations, 0);
}

#[test]
fn long_format_reads_back_from_csv() {
    let sc = Scenario::benchmark();
    let s = sc.synthesize().unwrap();
    let out = sim::run(&sc, &s, &sc.x0, &sc.theta_hat0).unwrap();
    let mut buf = Vec::new();
    sim::write_log_csv(&mut buf, &out.log, 2, 2).unwrap();
    let mut from_csv = sim::long_format_from_csv(buf.as_slice(), 0.5).unwrap();
    let mut direct = sim::long_format(&out.log, 0.5);
    let key = |r: &(f64, String, f64)| (r.0.to_bits(), r.1.clone());
    from_csv.sort_by_key(key);
    direct.sort_by_key(key);
    assert_eq!(from_csv.len(), direct.len());
    for (a, b) in from_csv.iter().zip(&direct) {
        assert_eq!((a.0.to_bits(), &a.1, a.2.to_bits()), (b.0.to_bits(), &b.1, b.2.to_bits()));
    }
    assert!(sim::long_format_from_csv(&b""[..], 1.0).is_err());
    assert_eq!(sim::plot_series_name("s1"), None);
    assert_eq!(sim::plot_series_name("xr2").as_deref(), Some("states/xr2"));
}
