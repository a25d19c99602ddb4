//! Receding-horizon controller in error coordinates.
//!
//! At each step the measured error `xe = x - xr` is split as
//! `ue = K xe + v`, and the correction sequence `v_0 .. v_{N-1}` is chosen by a
//! condensed QP over the nominal prediction
//! `s_{i+1} = (A_hat + B_hat K) s_i + B_hat v_i` with the current estimate
//! held fixed over the horizon.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::adaptation::{AdaptationError, EstimatorState, UpdateReport};
use crate::model::{self, ModelError};
use crate::qp::{self, KktResiduals, QpError, QpStatus, QuadraticProgram};
use crate::synthesis::SynthesisResult;

pub const CANDIDATE_TOL: f64 = 1e-8;
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone)]
pub enum MpcError {
    #[error("problem infeasible at step {step} ({status:?})")]
    Infeasible {
        step: usize,
        status: QpStatus,
        diagnostics: Box<StepDiagnostics>,
    },
    #[error("no pending regressor: observe called before step")]
    NoPendingStep,
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerConfig {
    /// Adds rows that keep the applied input, its rate and the successor
    /// state inside the physical sets for every hull vertex.
    pub certify_first_move: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            certify_first_move: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub estimator: EstimatorState,
    pub u_prev: DVector<f64>,
    pub v_prev: DVector<f64>,
    /// Nominal successor `s_{k+1|k}` propagated at the last step.
    pub nominal_state: Option<DVector<f64>>,
    pub last_sequence: Option<DVector<f64>>,
    pub step_index: usize,
    pending_regressor: Option<DVector<f64>>,
}

impl ControllerState {
    pub fn new(estimator: EstimatorState, m: usize) -> Self {
        Self {
            estimator,
            u_prev: DVector::zeros(m),
            v_prev: DVector::zeros(m),
            nominal_state: None,
            last_sequence: None,
            step_index: 0,
            pending_regressor: None,
        }
    }
}

/// Row blocks of the assembled problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowLayout {
    pub input: Range<usize>,
    pub rate: Range<usize>,
    pub terminal_input: Range<usize>,
    pub state: Range<usize>,
    pub certification: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct Ocp {
    pub qp: QuadraticProgram,
    /// Stacked nominal states `s_1 .. s_N` equal `omega s_0 + gamma v`.
    pub omega: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub s0: DVector<f64>,
    /// Terms of the cost that do not depend on `v`.
    pub constant_cost: f64,
    pub rows: RowLayout,
}

impl Ocp {
    pub fn cost(&self, v: &DVector<f64>) -> f64 {
        self.qp.objective(v) + self.constant_cost
    }

    pub fn predicted_states(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.omega * &self.s0 + &self.gamma * v
    }
}

/// Quantities that fix the first-move certification rows.
#[derive(Debug, Clone)]
pub struct FirstMove<'a> {
    pub x: &'a DVector<f64>,
    pub xe: &'a DVector<f64>,
    pub ur: &'a DVector<f64>,
}

pub fn assemble(
    cs: &ControllerState,
    synth: &SynthesisResult,
    s0: &DVector<f64>,
    first_move: Option<FirstMove<'_>>,
) -> Ocp {
    let n = synth.hull.n();
    let m = synth.hull.m();
    let horizon = synth.horizon();
    let nm = horizon * m;
    let k = &synth.gain.k;
    let a_hat = cs.estimator.a_hat();
    let b_hat = cs.estimator.b_hat();
    let phi = &a_hat + &b_hat * k;

    let mut powers = vec![DMatrix::identity(n, n)];
    for i in 1..=horizon {
        powers.push(&phi * &powers[i - 1]);
    }
    let mut omega = DMatrix::zeros(horizon * n, n);
    let mut gamma = DMatrix::zeros(horizon * n, nm);
    for i in 1..=horizon {
        omega.view_mut(((i - 1) * n, 0), (n, n)).copy_from(&powers[i]);
        for j in 0..i {
            let blk = &powers[i - 1 - j] * &b_hat;
            gamma.view_mut(((i - 1) * n, j * m), (n, m)).copy_from(&blk);
        }
    }

    let q = &synth.gain.q;
    let mut q_bar = DMatrix::zeros(horizon * n, horizon * n);
    for i in 0..horizon {
        let w = if i + 1 == horizon { &synth.gain.p } else { q };
        q_bar.view_mut((i * n, i * n), (n, n)).copy_from(w);
    }
    let mut r_bar = DMatrix::zeros(nm, nm);
    for i in 0..horizon {
        r_bar.view_mut((i * m, i * m), (m, m)).copy_from(&synth.gain.r);
    }
    let free = &omega * s0;
    let mut hessian = gamma.transpose() * &q_bar * &gamma + r_bar;
    hessian = (&hessian + hessian.transpose()) * 0.5;
    let linear = gamma.transpose() * &q_bar * &free;
    let constant_cost = 0.5 * s0.dot(&(q * s0)) + 0.5 * free.dot(&(&q_bar * &free));

    let sc = &synth.stacked;
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut push = |a: DVector<f64>, b: f64, rows: &mut Vec<DVector<f64>>| {
        rows.push(a);
        rhs.push(b);
    };

    let input_start = 0;
    for sign in [1.0, -1.0] {
        for i in 0..nm {
            let mut a = DVector::zeros(nm);
            a[i] = sign;
            push(a, sc.h_v, &mut rows);
        }
    }
    let rate_start = rows.len();
    let up = sc.rate_rhs_upper(&cs.v_prev);
    let lo = sc.rate_rhs_lower(&cs.v_prev);
    for i in 0..nm {
        push(sc.h_delta.row(i).transpose(), up[i], &mut rows);
    }
    for i in 0..nm {
        push(-sc.h_delta.row(i).transpose(), lo[i], &mut rows);
    }
    let terminal_start = rows.len();
    for sign in [1.0, -1.0] {
        for j in 0..m {
            let mut a = DVector::zeros(nm);
            a[(horizon - 1) * m + j] = sign;
            push(a, sc.h_delta_v, &mut rows);
        }
    }
    let state_start = rows.len();
    for i in 1..=horizon {
        let set = synth.tubes.state_set(i);
        let g_i = gamma.rows((i - 1) * n, n);
        let f_i = free.rows((i - 1) * n, n);
        let a_g = set.normals() * g_i;
        let a_f = set.normals() * f_i;
        for r in 0..set.num_facets() {
            push(a_g.row(r).transpose(), set.offsets()[r] - a_f[r], &mut rows);
        }
    }
    let cert_start = rows.len();
    if let Some(fm) = first_move {
        let c = &synth.constraints;
        // u = base + v_0
        let base = fm.ur + k * fm.xe;
        let mut e0 = DMatrix::zeros(m, nm);
        e0.view_mut((0, 0), (m, m)).fill_with_identity();
        let au = c.u.normals() * &e0;
        let bu = c.u.offsets() - c.u.normals() * &base;
        for r in 0..au.nrows() {
            push(au.row(r).transpose(), bu[r], &mut rows);
        }
        let ad = c.u_delta.normals() * &e0;
        let bd = c.u_delta.offsets() - c.u_delta.normals() * (&base - &cs.u_prev);
        for r in 0..ad.nrows() {
            push(ad.row(r).transpose(), bd[r], &mut rows);
        }
        for j in 0..synth.hull.len() {
            let (aj, bj) = (synth.hull.vertex_a(j), synth.hull.vertex_b(j));
            let ax = c.x.normals() * &bj * &e0;
            let bx = c.x.offsets() - c.x.normals() * (&aj * fm.x + &bj * &base);
            for r in 0..ax.nrows() {
                push(ax.row(r).transpose(), bx[r], &mut rows);
            }
        }
    }
    let total = rows.len();
    let a = if total == 0 {
        DMatrix::zeros(0, nm)
    } else {
        DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>())
    };
    let qp = QuadraticProgram::new(hessian, linear).with_inequalities(a, DVector::from_vec(rhs));
    Ocp {
        qp,
        omega,
        gamma,
        s0: s0.clone(),
        constant_cost,
        rows: RowLayout {
            input: input_start..rate_start,
            rate: rate_start..terminal_start,
            terminal_input: terminal_start..state_start,
            state: state_start..cert_start,
            certification: cert_start..total,
        },
    }
}

/// Previous optimal sequence without its first block, followed by zero.
pub fn shifted_candidate(cs: &ControllerState, m: usize) -> Option<DVector<f64>> {
    let prev = cs.last_sequence.as_ref()?;
    let nm = prev.len();
    let mut c = DVector::zeros(nm);
    c.rows_mut(0, nm - m).copy_from(&prev.rows(m, nm - m));
    Some(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub xe: DVector<f64>,
    pub nominal: DVector<f64>,
    pub nominal_reset: bool,
    pub ur: DVector<f64>,
    pub ur_residual: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub warm_start_used: bool,
    pub kkt: KktResiduals,
    pub cost: f64,
    pub v: DVector<f64>,
    pub sequence: DVector<f64>,
    /// Worst stacked-row violation of the shifted candidate, when one exists.
    pub candidate_violation: Option<f64>,
    pub state_ok: bool,
    pub input_ok: bool,
    pub rate_ok: bool,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub u: DVector<f64>,
    pub state: ControllerState,
    pub diagnostics: StepDiagnostics,
}

pub fn step(
    synth: &SynthesisResult,
    cs: &ControllerState,
    x: &DVector<f64>,
    xr_k: &DVector<f64>,
    xr_next: &DVector<f64>,
    cfg: &ControllerConfig,
) -> Result<StepOutput, MpcError> {
    let m = synth.hull.m();
    let k = &synth.gain.k;
    let xe = x - xr_k;
    let a_hat = cs.estimator.a_hat();
    let b_hat = cs.estimator.b_hat();
    let reference = model::reference_input(xr_k, xr_next, &a_hat, &b_hat)?;

    let reset = synth.tubes.state_set(0).contains(&xe, MEMBERSHIP_TOL) || cs.nominal_state.is_none();
    let s0 = if reset {
        xe.clone()
    } else {
        cs.nominal_state.clone().expect("checked above")
    };

    let first_move = cfg.certify_first_move.then_some(FirstMove {
        x,
        xe: &xe,
        ur: &reference.u,
    });
    let mut ocp = assemble(cs, synth, &s0, first_move);
    let candidate = shifted_candidate(cs, m);
    let candidate_violation = candidate
        .as_ref()
        .map(|c| synth.stacked.row_violation(c, &cs.v_prev));
    if let Some(c) = candidate {
        ocp.qp.warm_start = Some(c);
    }
    let out = qp::solve(&ocp.qp)?;

    let mut diagnostics = StepDiagnostics {
        step: cs.step_index,
        xe: xe.clone(),
        nominal: s0.clone(),
        nominal_reset: reset,
        ur: reference.u.clone(),
        ur_residual: reference.residual,
        status: out.status,
        iterations: out.iterations,
        phase1_iterations: out.phase1_iterations,
        warm_start_used: out.warm_start_used,
        kkt: out.kkt,
        cost: f64::NAN,
        v: DVector::zeros(m),
        sequence: out.solution.clone(),
        candidate_violation,
        state_ok: synth.constraints.x.contains(x, MEMBERSHIP_TOL),
        input_ok: false,
        rate_ok: false,
    };
    if out.status != QpStatus::Optimal {
        return Err(MpcError::Infeasible {
            step: cs.step_index,
            status: out.status,
            diagnostics: Box::new(diagnostics),
        });
    }
    let v = out.solution.rows(0, m).into_owned();
    let u = &reference.u + k * &xe + &v;
    let du = &u - &cs.u_prev;
    diagnostics.cost = ocp.cost(&out.solution);
    diagnostics.v = v.clone();
    diagnostics.input_ok = synth.constraints.u.contains(&u, MEMBERSHIP_TOL);
    diagnostics.rate_ok = synth.constraints.u_delta.contains(&du, MEMBERSHIP_TOL);

    let phi = &a_hat + &b_hat * k;
    let next_nominal = &phi * &s0 + &b_hat * &v;
    let state = ControllerState {
        estimator: cs.estimator.clone(),
        u_prev: u.clone(),
        v_prev: v,
        nominal_state: Some(next_nominal),
        last_sequence: Some(out.solution),
        step_index: cs.step_index + 1,
        pending_regressor: Some(model::vcat(x, &u)),
    };
    Ok(StepOutput {
        u,
        state,
        diagnostics,
    })
}

/// Feeds the measured successor state to the estimator.
pub fn observe(
    synth: &SynthesisResult,
    cs: &ControllerState,
    x_next: &DVector<f64>,
) -> Result<(ControllerState, UpdateReport), MpcError> {
    let regressor = cs.pending_regressor.as_ref().ok_or(MpcError::NoPendingStep)?;
    let (estimator, report) = cs.estimator.update(x_next, regressor, &synth.hull)?;
    let state = ControllerState {
        estimator,
        pending_regressor: None,
        ..cs.clone()
    };
    Ok((state, report))
}
