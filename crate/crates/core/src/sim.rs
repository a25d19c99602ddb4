//! Closed-loop simulation, Monte Carlo sweeps and logging.

use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adaptation::AdaptationError;
use crate::artifact::fmt_f64;
use crate::geometry::{GeometryError, Polytope};
use crate::model::{ModelError, ParamHull, PlantModel, ReferenceTrajectory};
use crate::mpc::{self, ControllerConfig, ControllerState, MpcError, MEMBERSHIP_TOL};
use crate::qp::QpStatus;
use crate::synthesis::{self, Design, SynthesisError, SynthesisResult};

pub const ESTIMATOR_TOL: f64 = 1e-9;
pub const HULL_RESIDUAL_TOL: f64 = 1e-8;
pub const COST_TOL: f64 = 1e-9;
/// Absolute floor for the prediction and drift bounds, which are zero for singleton hulls.
pub const BOUND_FLOOR: f64 = 1e-12;
const DRIFT_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("true plant lies outside the parameter hull (residual {0:e})")]
    PlantOutsideHull(f64),
    #[error("initial estimate lies outside the parameter hull (residual {0:e})")]
    EstimateOutsideHull(f64),
    #[error("initial state lies outside the state constraints")]
    InitialStateOutside,
    #[error("bad scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantModel,
    pub hull: ParamHull,
    pub x_set: Polytope,
    pub u_set: Polytope,
    pub du_set: Polytope,
    pub reference_vertices: Vec<DVector<f64>>,
    /// `(start step, constant value)` pairs.
    pub reference_segments: Vec<(usize, DVector<f64>)>,
    pub horizon: usize,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub tube_scale: f64,
    pub du_safety: f64,
    pub steps: usize,
    pub seed: u64,
    pub x0: DVector<f64>,
    pub theta_hat0: DMatrix<f64>,
    /// Steps allowed after a reference change before the tracking bound applies.
    pub settle_window: usize,
    pub settle_tol: f64,
    /// Fraction of the state box used when sampling initial states.
    pub x0_sampling_scale: f64,
    /// Nominal sampling period, used only to label time axes.
    pub sample_period: f64,
    pub controller: ControllerConfig,
}

fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(r, c, v)
}

fn vec2(a: f64, b: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b])
}

/// Vertex pairs `(A_i, B_i)` of the second-order benchmark hull.
pub fn benchmark_hull() -> ParamHull {
    let a = [
        mat(2, 2, &[-0.6, 0.0, 0.35, -0.5]),
        mat(2, 2, &[-0.4, 0.0, 0.35, -0.32]),
        mat(2, 2, &[-0.6, 0.15, 0.6, -0.5]),
        mat(2, 2, &[-0.4, 0.15, 0.6, -0.32]),
    ];
    let b = [
        DMatrix::identity(2, 2) * 0.8,
        DMatrix::identity(2, 2) * 1.2,
        mat(2, 2, &[0.8, 0.1, 0.1, 0.8]),
        mat(2, 2, &[1.2, 0.1, 0.1, 1.2]),
    ];
    let pairs: Vec<_> = a.into_iter().zip(b).collect();
    ParamHull::from_pairs(&pairs).expect("benchmark hull is well formed")
}

/// Benchmark plant as listed with the hull; it is not a member of the hull.
pub fn benchmark_listed_plant() -> PlantModel {
    PlantModel::new(mat(2, 2, &[-0.5, 0.0, 0.5, -0.4]), DMatrix::identity(2, 2)).expect("2x2")
}

/// Benchmark initial estimate as listed; also not a member of the hull.
pub fn benchmark_listed_estimate() -> DMatrix<f64> {
    mat(2, 4, &[-0.4, 0.15, 1.0, 0.1, 0.35, -0.5, 0.1, 0.8])
}

impl Scenario {
    /// Second-order benchmark. The listed plant and initial estimate are
    /// replaced by their nearest points in the hull.
    pub fn benchmark() -> Self {
        let hull = benchmark_hull();
        let plant_theta = hull
            .project(&benchmark_listed_plant().theta())
            .expect("projection")
            .point;
        let theta_hat0 = hull.project(&benchmark_listed_estimate()).expect("projection").point;
        let corners = vec![
            vec2(1.0, 1.0),
            vec2(1.0, -1.0),
            vec2(-1.0, 1.0),
            vec2(-1.0, -1.0),
        ];
        Self {
            name: "benchmark".into(),
            plant: PlantModel::from_theta(&plant_theta, 2).expect("2x4"),
            hull,
            x_set: Polytope::symmetric_box(&[2.25, 2.25]).expect("box"),
            u_set: Polytope::symmetric_box(&[3.0, 3.0]).expect("box"),
            du_set: Polytope::symmetric_box(&[2.5, 2.5]).expect("box"),
            reference_vertices: corners,
            reference_segments: vec![(0, vec2(1.0, -1.0)), (30, vec2(-1.0, 1.0))],
            horizon: 5,
            q: DMatrix::identity(2, 2),
            r: DMatrix::identity(2, 2),
            alpha: 0.1,
            lambda: None,
            gamma: 0.9,
            tube_scale: 0.02,
            du_safety: 1.0,
            steps: 60,
            seed: 2024,
            x0: vec2(2.0, -2.0),
            theta_hat0,
            settle_window: 20,
            settle_tol: 0.05,
            x0_sampling_scale: 0.95,
            sample_period: 1.0,
            controller: ControllerConfig::default(),
        }
    }

    /// Benchmark sets with a single-point hull at the benchmark plant.
    pub fn certainty_equivalence() -> Self {
        let base = Self::benchmark();
        let theta = base.plant.theta();
        Self {
            name: "certainty-equivalence".into(),
            hull: ParamHull::new(vec![theta.clone()], 2).expect("singleton"),
            theta_hat0: theta,
            reference_segments: vec![(0, vec2(0.5, -0.3))],
            tube_scale: 1.0,
            ..base
        }
    }

    pub fn design(&self) -> Design {
        Design {
            hull: self.hull.clone(),
            x: self.x_set.clone(),
            u: self.u_set.clone(),
            u_delta: self.du_set.clone(),
            reference_vertices: self.reference_vertices.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            gamma: self.gamma,
            horizon: self.horizon,
            alpha: self.alpha,
            lambda: self.lambda,
            tube_scale: self.tube_scale,
            du_safety: self.du_safety,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let residual = self.hull.membership_residual(&self.plant.theta())?;
        if residual > HULL_RESIDUAL_TOL {
            return Err(SimError::PlantOutsideHull(residual));
        }
        if self.steps == 0 || self.horizon == 0 {
            return Err(SimError::Scenario("steps and horizon must be positive".into()));
        }
        if self.plant.n() != self.hull.n() || self.plant.m() != self.hull.m() {
            return Err(SimError::Scenario("plant and hull dimensions differ".into()));
        }
        Ok(())
    }

    pub fn synthesize(&self) -> Result<SynthesisResult, SimError> {
        self.validate()?;
        Ok(synthesis::synthesize(&self.design())?)
    }

    pub fn reference(&self) -> Result<ReferenceTrajectory, SimError> {
        Ok(ReferenceTrajectory::piecewise_constant(
            &self.reference_segments,
            self.steps,
            self.reference_vertices.clone(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub k: usize,
    pub x: DVector<f64>,
    pub xr: DVector<f64>,
    pub xe: DVector<f64>,
    pub nominal: DVector<f64>,
    pub u: DVector<f64>,
    pub du: DVector<f64>,
    pub v: DVector<f64>,
    /// `|| Theta - Theta_hat_k ||_F` before the update at this step.
    pub theta_error: f64,
    /// Prediction error produced by the update at this step.
    pub xtilde_norm: f64,
    pub cost: f64,
    pub qp_status: QpStatus,
    pub qp_iterations: usize,
    pub warm_start_used: bool,
    /// Largest `a_i z - b_i` for the state, input and rate constraints.
    pub state_margin: f64,
    pub input_margin: f64,
    pub rate_margin: f64,
    pub state_ok: bool,
    pub input_ok: bool,
    pub rate_ok: bool,
    pub candidate_ok: bool,
    pub estimator_ok: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimLog {
    pub rows: Vec<SimRow>,
    pub final_theta_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    InitiallyInfeasible,
    Falsified { step: usize, reason: String },
}

/// Counts of failed per-step checks over one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunChecks {
    pub constraint_violations: usize,
    pub flag_mismatches: usize,
    pub estimator_increases: usize,
    pub hull_residual_failures: usize,
    pub prediction_bound_failures: usize,
    pub drift_bound_failures: usize,
    pub candidate_failures: usize,
    pub cost_increases: usize,
    pub frozen_steps: usize,
    pub max_theta_increase: f64,
    pub max_hull_residual: f64,
    pub max_xtilde: f64,
    pub max_candidate_violation: f64,
    pub max_kkt_residual: f64,
}

impl RunChecks {
    pub fn failures(&self) -> usize {
        self.constraint_violations
            + self.flag_mismatches
            + self.estimator_increases
            + self.hull_residual_failures
            + self.prediction_bound_failures
            + self.drift_bound_failures
            + self.candidate_failures
            + self.cost_increases
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub log: SimLog,
    pub checks: RunChecks,
    pub x0: DVector<f64>,
    pub theta_hat0: DMatrix<f64>,
}

impl RunOutcome {
    pub fn accepted(&self) -> bool {
        !matches!(self.status, RunStatus::InitiallyInfeasible)
    }
}

fn margin(set: &Polytope, z: &DVector<f64>) -> f64 {
    set.max_violation(z)
}

pub fn run(
    scenario: &Scenario,
    synth: &SynthesisResult,
    x0: &DVector<f64>,
    theta_hat0: &DMatrix<f64>,
) -> Result<RunOutcome, SimError> {
    let residual0 = synth.hull.membership_residual(theta_hat0)?;
    if residual0 > HULL_RESIDUAL_TOL {
        return Err(SimError::EstimateOutsideHull(residual0));
    }
    if !synth.constraints.x.contains(x0, MEMBERSHIP_TOL) {
        return Err(SimError::InitialStateOutside);
    }
    let reference = scenario.reference()?;
    let truth = scenario.plant.theta();
    let m = synth.hull.m();
    let est = crate::adaptation::EstimatorState::new(theta_hat0.clone(), synth.lambda, synth.alpha)?;
    let mut cs = ControllerState::new(est, m);
    let mut x = x0.clone();
    let mut log = SimLog::default();
    let mut checks = RunChecks::default();
    let mut status = RunStatus::Completed;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let regressor_bound = synth.radii.regressor_bound_sq().sqrt();
    let sqrt_dx = synth.radii.sqrt_delta_xtilde();
    let c = &synth.constraints;
    let mut prev_cost: Option<(f64, bool)> = None;

    for k in 0..scenario.steps {
        let xr = reference.at(k).clone();
        let xr_next = reference.at(k + 1).clone();
        let out = match mpc::step(synth, &cs, &x, &xr, &xr_next, &scenario.controller) {
            Ok(o) => o,
            Err(MpcError::Infeasible { step, status: qs, .. }) => {
                status = if k == 0 {
                    RunStatus::InitiallyInfeasible
                } else {
                    RunStatus::Falsified {
                        step,
                        reason: format!("solver returned {qs:?} after an accepted step"),
                    }
                };
                break;
            }
            Err(e) => {
                status = RunStatus::Falsified {
                    step: k,
                    reason: e.to_string(),
                };
                break;
            }
        };
        let d = &out.diagnostics;
        let u = out.u.clone();
        let du = &u - &cs.u_prev;
        let x_next = scenario.plant.step(&x, &u);

        let theta_before = (&truth - &cs.estimator.theta_hat).norm();
        let (next_cs, report) = match mpc::observe(synth, &out.state, &x_next) {
            Ok(r) => r,
            Err(e) => {
                status = RunStatus::Falsified {
                    step: k,
                    reason: e.to_string(),
                };
                break;
            }
        };
        let theta_after = (&truth - &next_cs.estimator.theta_hat).norm();

        // Independent recomputation from raw values.
        let state_margin = margin(&c.x, &x);
        let input_margin = margin(&c.u, &u);
        let rate_margin = margin(&c.u_delta, &du);
        let state_ok = state_margin <= MEMBERSHIP_TOL;
        let input_ok = input_margin <= MEMBERSHIP_TOL;
        let rate_ok = rate_margin <= MEMBERSHIP_TOL;
        if !(state_ok && input_ok && rate_ok) {
            checks.constraint_violations += 1;
        }
        if state_ok != d.state_ok || input_ok != d.input_ok || rate_ok != d.rate_ok {
            checks.flag_mismatches += 1;
        }

        let increase = theta_after - theta_before;
        checks.max_theta_increase = checks.max_theta_increase.max(increase);
        let mut estimator_ok = increase <= ESTIMATOR_TOL;
        let hull_residual = synth.hull.membership_residual(&next_cs.estimator.theta_hat)?;
        checks.max_hull_residual = checks.max_hull_residual.max(hull_residual);
        if hull_residual > HULL_RESIDUAL_TOL {
            checks.hull_residual_failures += 1;
            estimator_ok = false;
        }
        let xtilde = report.innovation.norm();
        checks.max_xtilde = checks.max_xtilde.max(xtilde);
        if xtilde > sqrt_dx * (1.0 + 1e-12) + BOUND_FLOOR {
            checks.prediction_bound_failures += 1;
            estimator_ok = false;
        }
        let delta = &next_cs.estimator.theta_hat - &cs.estimator.theta_hat;
        let n_reg = delta.ncols();
        for _ in 0..DRIFT_SAMPLES {
            let dir: DVector<f64> = DVector::from_fn(n_reg, |_, _| rng.gen_range(-1.0..1.0));
            let norm = dir.norm();
            if norm == 0.0 {
                continue;
            }
            let scale = regressor_bound * rng.gen_range(0.0..=1.0f64).sqrt() / norm;
            if (&delta * (dir * scale)).norm() > synth.radii.delta_theta * (1.0 + 1e-12) + BOUND_FLOOR {
                checks.drift_bound_failures += 1;
                estimator_ok = false;
                break;
            }
        }
        if increase > ESTIMATOR_TOL {
            checks.estimator_increases += 1;
        }

        let candidate_ok = match d.candidate_violation {
            Some(v) => {
                checks.max_candidate_violation = checks.max_candidate_violation.max(v);
                v <= mpc::CANDIDATE_TOL
            }
            None => true,
        };
        if !candidate_ok {
            checks.candidate_failures += 1;
        }
        checks.max_kkt_residual = checks.max_kkt_residual.max(
            d.kkt.primal.max(d.kkt.stationarity).max(d.kkt.complementarity),
        );

        // Cost comparison across steps with a frozen estimate and constant reference.
        if let Some((pc, frozen)) = prev_cost {
            if frozen && d.cost > pc + COST_TOL {
                checks.cost_increases += 1;
            }
        }
        let frozen = report.step_norm == 0.0 && xr_next == xr && reference.at(k + 2) == &xr_next;
        if frozen {
            checks.frozen_steps += 1;
        }
        prev_cost = Some((d.cost, frozen));

        log.rows.push(SimRow {
            k,
            x: x.clone(),
            xr: xr.clone(),
            xe: d.xe.clone(),
            nominal: d.nominal.clone(),
            u: u.clone(),
            du,
            v: d.v.clone(),
            theta_error: theta_before,
            xtilde_norm: xtilde,
            cost: d.cost,
            qp_status: d.status,
            qp_iterations: d.iterations,
            warm_start_used: d.warm_start_used,
            state_margin,
            input_margin,
            rate_margin,
            state_ok,
            input_ok,
            rate_ok,
            candidate_ok,
            estimator_ok,
        });
        cs = next_cs;
        x = x_next;
    }
    log.final_theta_error = (&truth - &cs.estimator.theta_hat).norm();
    Ok(RunOutcome {
        status,
        log,
        checks,
        x0: x0.clone(),
        theta_hat0: theta_hat0.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub start: usize,
    pub end: usize,
    /// Largest `||xe||` from `start + window` to the end of the segment.
    pub settled_max: f64,
    pub settled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub segments: Vec<SegmentReport>,
    /// Parameter error at the last step before each later switch, and at the end.
    pub theta_before_switch: Vec<f64>,
    pub theta_final: f64,
    pub theta_dropped: bool,
}

impl TrackingReport {
    pub fn passed(&self) -> bool {
        self.segments.iter().all(|s| s.settled) && self.theta_dropped
    }
}

pub fn tracking_report(log: &SimLog, switches: &[usize], window: usize, tol: f64) -> TrackingReport {
    let len = log.rows.len();
    let mut segments = Vec::new();
    for (i, &start) in switches.iter().enumerate() {
        let end = switches.get(i + 1).copied().unwrap_or(len).min(len);
        let from = (start + window).min(end);
        let settled_max = log.rows[from..end]
            .iter()
            .map(|r| r.xe.norm())
            .fold(0.0, f64::max);
        segments.push(SegmentReport {
            start,
            end,
            settled_max,
            settled: from < end && settled_max < tol,
        });
    }
    let theta_before_switch: Vec<f64> = switches
        .iter()
        .skip(1)
        .filter(|&&s| s >= 1 && s <= len)
        .map(|&s| log.rows[s - 1].theta_error)
        .collect();
    let theta_final = log.final_theta_error;
    let theta_dropped = theta_before_switch.iter().all(|&t| theta_final < t);
    TrackingReport {
        segments,
        theta_before_switch,
        theta_final,
        theta_dropped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Radical inverse of `i` in `base`.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Shifted Halton points inside the scaled bounding box of the state set.
pub fn sample_initial_states(x_set: &Polytope, scale: f64, count: usize, seed: u64) -> Result<Vec<DVector<f64>>, SimError> {
    let n = x_set.dim();
    if n > PRIMES.len() {
        return Err(SimError::Scenario("state dimension too large for sampling".into()));
    }
    let verts = x_set.vertices()?;
    let lo: Vec<f64> = (0..n).map(|j| verts.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..n).map(|j| verts.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let p = DVector::from_fn(n, |j, _| {
            let t = (halton(i, PRIMES[j]) + shift[j]).fract();
            let mid = 0.5 * (lo[j] + hi[j]);
            mid + scale * (lo[j] - mid + t * (hi[j] - lo[j]))
        });
        i += 1;
        if x_set.contains(&p, 0.0) {
            out.push(p);
        }
        if i > 1000 * (count as u64 + 1) {
            return Err(SimError::Scenario("state sampling found too few interior points".into()));
        }
    }
    Ok(out)
}

/// Hull members with flat-Dirichlet weights built from shifted Halton points.
pub fn sample_estimates(hull: &ParamHull, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let g = hull.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let shift: Vec<f64> = (0..g).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|i| {
            let w = DVector::from_fn(g, |j, _| {
                let t = (halton(i as u64 + 1, PRIMES[(j + 2) % PRIMES.len()]) + shift[j]).fract();
                -(1.0 - t).max(f64::MIN_POSITIVE).ln()
            });
            let total = w.sum();
            let w = if total > 0.0 { w / total } else { DVector::from_element(g, 1.0 / g as f64) };
            hull.combine(&w)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub completed: usize,
    pub initially_infeasible: usize,
    pub falsified: usize,
    pub constraint_violations: usize,
    pub check_failures: usize,
    pub candidate_failures: usize,
    pub estimator_increases: usize,
    pub tracking_failures: usize,
    pub max_terminal_tracking_error: f64,
    pub worst_settled_error: f64,
    /// Mean of final over initial parameter error.
    pub mean_estimator_decay: f64,
    pub max_theta_increase: f64,
    pub max_hull_residual: f64,
    pub max_xtilde: f64,
    pub max_kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub runs: Vec<RunOutcome>,
    pub tracking: Vec<Option<TrackingReport>>,
    pub aggregate: Aggregate,
}

pub fn monte_carlo(
    scenario: &Scenario,
    synth: &SynthesisResult,
    n_x0: usize,
    n_theta0: usize,
    exec: Execution,
) -> Result<MonteCarloSummary, SimError> {
    if n_x0 == 0 || n_theta0 == 0 {
        return Err(SimError::Scenario("sample counts must be positive".into()));
    }
    let x0s = sample_initial_states(&scenario.x_set, scenario.x0_sampling_scale, n_x0, scenario.seed)?;
    let th0s = sample_estimates(&scenario.hull, n_theta0, scenario.seed);
    let jobs: Vec<(DVector<f64>, DMatrix<f64>)> = x0s
        .iter()
        .flat_map(|x| th0s.iter().map(move |t| (x.clone(), t.clone())))
        .collect();
    run_batch(scenario, synth, &jobs, exec)
}

/// Runs every `(x0, theta_hat0)` job; results keep the job order.
pub fn run_batch(
    scenario: &Scenario,
    synth: &SynthesisResult,
    jobs: &[(DVector<f64>, DMatrix<f64>)],
    exec: Execution,
) -> Result<MonteCarloSummary, SimError> {
    let one = |job: &(DVector<f64>, DMatrix<f64>)| run(scenario, synth, &job.0, &job.1);
    let results: Vec<Result<RunOutcome, SimError>> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            jobs.par_iter().map(one).collect()
        }
        _ => jobs.iter().map(one).collect(),
    };
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let reference = scenario.reference()?;
    let tracking: Vec<Option<TrackingReport>> = runs
        .iter()
        .map(|r| {
            (r.status == RunStatus::Completed).then(|| {
                tracking_report(&r.log, reference.switches(), scenario.settle_window, scenario.settle_tol)
            })
        })
        .collect();
    let aggregate = aggregate(&runs, &tracking);
    Ok(MonteCarloSummary {
        runs,
        tracking,
        aggregate,
    })
}

fn aggregate(runs: &[RunOutcome], tracking: &[Option<TrackingReport>]) -> Aggregate {
    let mut a = Aggregate {
        runs: runs.len(),
        ..Default::default()
    };
    let mut decay_sum = 0.0;
    let mut decay_count = 0usize;
    for (r, t) in runs.iter().zip(tracking) {
        match r.status {
            RunStatus::Completed => a.completed += 1,
            RunStatus::InitiallyInfeasible => a.initially_infeasible += 1,
            RunStatus::Falsified { .. } => a.falsified += 1,
        }
        a.constraint_violations += r.checks.constraint_violations;
        a.check_failures += r.checks.failures();
        a.candidate_failures += r.checks.candidate_failures;
        a.estimator_increases += r.checks.estimator_increases;
        a.max_theta_increase = a.max_theta_increase.max(r.checks.max_theta_increase);
        a.max_hull_residual = a.max_hull_residual.max(r.checks.max_hull_residual);
        a.max_xtilde = a.max_xtilde.max(r.checks.max_xtilde);
        a.max_kkt_residual = a.max_kkt_residual.max(r.checks.max_kkt_residual);
        if let Some(last) = r.log.rows.last() {
            a.max_terminal_tracking_error = a.max_terminal_tracking_error.max(last.xe.norm());
        }
        if let Some(first) = r.log.rows.first() {
            if first.theta_error > 0.0 {
                decay_sum += r.log.final_theta_error / first.theta_error;
                decay_count += 1;
            }
        }
        if let Some(t) = t {
            if !t.passed() {
                a.tracking_failures += 1;
            }
            for s in &t.segments {
                a.worst_settled_error = a.worst_settled_error.max(s.settled_max);
            }
        }
    }
    a.mean_estimator_decay = if decay_count > 0 {
        decay_sum / decay_count as f64
    } else {
        0.0
    };
    a
}

/// Column order of per-run CSV files.
pub fn csv_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    for (name, dim) in [("x", n), ("xr", n), ("xe", n), ("s", n), ("u", m), ("du", m), ("v", m)] {
        for i in 1..=dim {
            h.push(format!("{name}{i}"));
        }
    }
    for c in [
        "theta_error",
        "xtilde_norm",
        "cost",
        "qp_status",
        "qp_iterations",
        "warm_start",
        "state_margin",
        "input_margin",
        "rate_margin",
        "state_ok",
        "input_ok",
        "rate_ok",
        "candidate_ok",
        "estimator_ok",
    ] {
        h.push(c.to_string());
    }
    h
}

fn status_str(s: QpStatus) -> &'static str {
    match s {
        QpStatus::Optimal => "optimal",
        QpStatus::Infeasible => "infeasible",
        QpStatus::IterationLimit => "iteration-limit",
    }
}

pub fn write_log_csv<W: Write>(mut w: W, log: &SimLog, n: usize, m: usize) -> io::Result<()> {
    writeln!(w, "{}", csv_header(n, m).join(","))?;
    for r in &log.rows {
        let mut f: Vec<String> = vec![r.k.to_string()];
        for v in [&r.x, &r.xr, &r.xe, &r.nominal, &r.u, &r.du, &r.v] {
            f.extend(v.iter().map(|x| fmt_f64(*x)));
        }
        f.push(fmt_f64(r.theta_error));
        f.push(fmt_f64(r.xtilde_norm));
        f.push(fmt_f64(r.cost));
        f.push(status_str(r.qp_status).into());
        f.push(r.qp_iterations.to_string());
        f.push((r.warm_start_used as u8).to_string());
        f.push(fmt_f64(r.state_margin));
        f.push(fmt_f64(r.input_margin));
        f.push(fmt_f64(r.rate_margin));
        for b in [r.state_ok, r.input_ok, r.rate_ok, r.candidate_ok, r.estimator_ok] {
            f.push((b as u8).to_string());
        }
        writeln!(w, "{}", f.join(","))?;
    }
    Ok(())
}

pub const SUMMARY_HEADER: &str = "run,status,steps,violations,check_failures,final_xe_norm,initial_theta_error,final_theta_error,tracking_passed";

pub fn write_summary_csv<W: Write>(mut w: W, summary: &MonteCarloSummary) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for (i, (r, t)) in summary.runs.iter().zip(&summary.tracking).enumerate() {
        let status = match &r.status {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::InitiallyInfeasible => "initially-infeasible".to_string(),
            RunStatus::Falsified { step, .. } => format!("falsified@{step}"),
        };
        let final_xe = r.log.rows.last().map_or(f64::NAN, |row| row.xe.norm());
        let initial_theta = r.log.rows.first().map_or(f64::NAN, |row| row.theta_error);
        let tracking = t.as_ref().map_or("na", |t| if t.passed() { "1" } else { "0" });
        writeln!(
            w,
            "{i},{status},{},{},{},{},{},{},{tracking}",
            r.log.rows.len(),
            r.checks.constraint_violations,
            r.checks.failures(),
            fmt_f64(final_xe),
            fmt_f64(initial_theta),
            fmt_f64(r.log.final_theta_error),
        )?;
    }
    Ok(())
}

/// Vector columns of the per-run CSV that feed plot series, with their family.
const PLOT_FAMILIES: [(&str, &str); 5] = [
    ("x", "states"),
    ("xr", "states"),
    ("xe", "error_states"),
    ("u", "control_input"),
    ("du", "input_rate"),
];
const THETA_SERIES: &str = "parameter_error/theta";

/// Plot series name for a per-run CSV column, if the column is plotted.
pub fn plot_series_name(column: &str) -> Option<String> {
    if column == "theta_error" {
        return Some(THETA_SERIES.to_string());
    }
    let stem = column.trim_end_matches(|c: char| c.is_ascii_digit());
    if stem.len() == column.len() {
        return None;
    }
    PLOT_FAMILIES
        .iter()
        .find(|(name, _)| *name == stem)
        .map(|(_, family)| format!("{family}/{column}"))
}

/// Long-format plot series `(time, series, value)` for states, error states,
/// inputs, input rates and the parameter error.
pub fn long_format(log: &SimLog, sample_period: f64) -> Vec<(f64, String, f64)> {
    let mut out = Vec::new();
    for r in &log.rows {
        let t = r.k as f64 * sample_period;
        let vectors = [&r.x, &r.xr, &r.xe, &r.u, &r.du];
        for ((name, family), v) in PLOT_FAMILIES.iter().zip(vectors) {
            for (i, val) in v.iter().enumerate() {
                out.push((t, format!("{family}/{name}{}", i + 1), *val));
            }
        }
        out.push((t, THETA_SERIES.to_string(), r.theta_error));
    }
    out
}

/// Same series as [`long_format`], read back from a per-run CSV.
pub fn long_format_from_csv<R: BufRead>(reader: R, sample_period: f64) -> Result<Vec<(f64, String, f64)>, SimError> {
    let mut lines = reader.lines();
    let header: Vec<String> = match lines.next() {
        Some(line) => line?.split(',').map(str::to_string).collect(),
        None => return Err(SimError::Scenario("run log is empty".into())),
    };
    if header.first().map(String::as_str) != Some("k") {
        return Err(SimError::Scenario("run log header must start with k".into()));
    }
    let columns: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, c)| plot_series_name(c).map(|s| (i, s)))
        .collect();
    let mut out = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(SimError::Scenario(format!("run log line {} has {} fields, expected {}", line_no + 2, fields.len(), header.len())));
        }
        let bad = |what: &str| SimError::Scenario(format!("run log line {}: bad {what}", line_no + 2));
        let k: usize = fields[0].parse().map_err(|_| bad("step index"))?;
        let t = k as f64 * sample_period;
        for (i, series) in &columns {
            let value: f64 = fields[*i].parse().map_err(|_| bad(&header[*i]))?;
            out.push((t, series.clone(), value));
        }
    }
    Ok(out)
}

pub fn write_long_format<W: Write>(mut w: W, rows: &[(f64, String, f64)]) -> io::Result<()> {
    writeln!(w, "time,series,value")?;
    for (t, s, v) in rows {
        writeln!(w, "{},{s},{}", fmt_f64(*t), fmt_f64(*v))?;
    }
    Ok(())
}
