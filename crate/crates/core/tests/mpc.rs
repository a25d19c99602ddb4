use ampc::adaptation::EstimatorState;
use ampc::geometry::Polytope;
use ampc::model::ParamHull;
use ampc::mpc::{self, ControllerConfig, ControllerState, MpcError};
use ampc::sim::Scenario;
use ampc::synthesis::{self, Design, SynthesisResult};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

fn scalar_design(horizon: usize) -> Design {
    let hull = ParamHull::new(vec![DMatrix::from_row_slice(1, 2, &[0.5, 1.0])], 1).unwrap();
    let unit = DMatrix::identity(1, 1);
    Design {
        hull,
        x: Polytope::symmetric_box(&[10.0]).unwrap(),
        u: Polytope::symmetric_box(&[10.0]).unwrap(),
        u_delta: Polytope::symmetric_box(&[10.0]).unwrap(),
        reference_vertices: vec![v(&[0.0])],
        q: unit.clone(),
        r: unit,
        gamma: 0.9,
        horizon,
        alpha: 0.1,
        lambda: None,
        tube_scale: 1.0,
        du_safety: 1.0,
    }
}

fn controller(s: &SynthesisResult) -> ControllerState {
    let est = EstimatorState::new(s.hull.vertices()[0].clone(), s.lambda, s.alpha).unwrap();
    ControllerState::new(est, s.hull.m())
}

#[test]
fn scalar_single_step_optimum() {
    let s = synthesis::synthesize(&scalar_design(1)).unwrap();
    // Scalar Riccati: P^2 - 0.25 P - 1 = 0 for a = 0.5, b = q = r = 1.
    let p = (0.25 + (0.0625f64 + 4.0).sqrt()) / 2.0;
    let k = -0.5 * p / (1.0 + p);
    assert!((s.gain.p[(0, 0)] - p).abs() < 1e-12);
    assert!((s.gain.k[(0, 0)] - k).abs() < 1e-12);
    let phi = 0.5 + k;
    let cs = controller(&s);
    let x = v(&[1.0]);
    let zero = v(&[0.0]);
    let out = mpc::step(&s, &cs, &x, &zero, &zero, &ControllerConfig::default()).unwrap();
    let v_star = -p * phi / (1.0 + p);
    assert!((out.diagnostics.v[0] - v_star).abs() < 1e-12);
    assert!((out.u[0] - (k + v_star)).abs() < 1e-12);
    let s1 = phi + v_star;
    let cost = 0.5 + 0.5 * p * s1 * s1 + 0.5 * v_star * v_star;
    assert!((out.diagnostics.cost - cost).abs() < 1e-12);
}

#[test]
fn condensed_cost_matches_simulation() {
    let s = Scenario::benchmark().synthesize().unwrap();
    let cs = controller(&s);
    let a = cs.estimator.a_hat();
    let b = cs.estimator.b_hat();
    let phi = &a + &b * &s.gain.k;
    let mut r = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..20 {
        let s0 = v(&[r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)]);
        let seq = DVector::from_fn(10, |_, _| r.gen_range(-1.0..1.0));
        let ocp = mpc::assemble(&cs, &s, &s0, None);
        let mut state = s0.clone();
        let mut cost = 0.5 * state.dot(&state);
        let predicted = ocp.predicted_states(&seq);
        for i in 0..5 {
            let vi = seq.rows(2 * i, 2).into_owned();
            cost += 0.5 * vi.dot(&vi);
            state = &phi * &state + &b * &vi;
            assert!((predicted.rows(2 * i, 2) - &state).amax() < 1e-12);
            let w = if i == 4 { &s.gain.p } else { &s.gain.q };
            cost += 0.5 * state.dot(&(w * &state));
        }
        assert!((ocp.cost(&seq) - cost).abs() < 1e-10);
    }
}

#[test]
fn origin_regulation_needs_no_correction() {
    let s = Scenario::benchmark().synthesize().unwrap();
    let cs = controller(&s);
    let zero = v(&[0.0, 0.0]);
    let out = mpc::step(&s, &cs, &zero, &zero, &zero, &ControllerConfig::default()).unwrap();
    assert_eq!(out.diagnostics.v, zero);
    assert_eq!(out.u, zero);
}

#[test]
fn on_reference_start_applies_reference_input() {
    let s = Scenario::benchmark().synthesize().unwrap();
    let cs = controller(&s);
    let xr = v(&[1.0, -1.0]);
    let out = mpc::step(&s, &cs, &xr, &xr, &xr, &ControllerConfig::default()).unwrap();
    let a = cs.estimator.a_hat();
    let b = cs.estimator.b_hat();
    let ur = b.try_inverse().unwrap() * (&xr - &a * &xr);
    assert!((&out.u - &ur).amax() < 1e-12);
    assert!(out.diagnostics.v.amax() < 1e-12);
}

#[test]
fn rate_rows_shift_only_first_block() {
    let s = Scenario::benchmark().synthesize().unwrap();
    let st = &s.stacked;
    let prev = v(&[0.3, -0.7]);
    let up = st.rate_rhs_upper(&prev);
    let lo = st.rate_rhs_lower(&prev);
    for i in 0..10 {
        let shift = if i < 2 { prev[i] } else { 0.0 };
        assert_eq!(up[i], st.h_delta_v + shift);
        assert_eq!(lo[i], st.h_delta_v - shift);
    }
    // H_delta v gives v_0 and then successive differences.
    let seq = DVector::from_fn(10, |i, _| i as f64);
    let d = &st.h_delta * &seq;
    assert_eq!(d[0], 0.0);
    assert_eq!(d[1], 1.0);
    for i in 2..10 {
        assert_eq!(d[i], 2.0);
    }
}

#[test]
fn shifted_candidate_drops_first_move() {
    let s = Scenario::benchmark().synthesize().unwrap();
    let mut cs = controller(&s);
    assert!(mpc::shifted_candidate(&cs, 2).is_none());
    cs.last_sequence = Some(DVector::from_fn(10, |i, _| i as f64 + 1.0));
    let c = mpc::shifted_candidate(&cs, 2).unwrap();
    assert_eq!(c.as_slice(), &[3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 0.0, 0.0]);
}

#[test]
fn observe_requires_a_step() {
    let s = Scenario::benchmark().synthesize().unwrap();
    let cs = controller(&s);
    assert!(matches!(mpc::observe(&s, &cs, &v(&[0.0, 0.0])), Err(MpcError::NoPendingStep)));
}

#[test]
fn first_move_rows_bound_applied_input() {
    let s = Scenario::benchmark().synthesize().unwrap();
    let cs = controller(&s);
    let xr = v(&[1.0, -1.0]);
    let x = v(&[-2.1, 2.1]);
    let out = mpc::step(&s, &cs, &x, &xr, &xr, &ControllerConfig::default()).unwrap();
    assert!(out.u.amax() <= 3.0 + 1e-9);
    assert!(out.u.amax() <= 2.5 + 1e-9);
    for i in 0..s.hull.len() {
        let next = s.hull.vertex_a(i) * &x + s.hull.vertex_b(i) * &out.u;
        assert!(next.amax() <= 2.25 + 1e-9);
    }
    assert!(out.diagnostics.input_ok && out.diagnostics.rate_ok && out.diagnostics.state_ok);
}
