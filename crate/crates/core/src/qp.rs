//! Dense convex quadratic programming.
//!
//! ```text
//!     minimize     1/2 x' H x + f' x
//!     subject to   A_eq x  = b_eq
//!                  A   x  <= b
//! ```
//!
//! Primal active-set method. Equalities are removed by null-space
//! substitution. A feasible starting point comes either from the warm start
//! (when it satisfies every row) or from a phase-1 linear program
//! `min t s.t. A x - t <= b, t >= 0` solved by the same engine; a positive
//! phase-1 optimum is reported as [`QpStatus::Infeasible`] together with the
//! Farkas multipliers it produced.
//!
//! Ties (blocking constraints, dropped constraints) are broken by lowest
//! index, so identical inputs give identical iterates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hessian is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("objective is unbounded below on the feasible set")]
    Unbounded,
    #[error("equality constraints are rank deficient")]
    DependentEqualities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub a_ineq: DMatrix<f64>,
    pub b_ineq: DVector<f64>,
    pub a_eq: Option<DMatrix<f64>>,
    pub b_eq: Option<DVector<f64>>,
    pub warm_start: Option<DVector<f64>>,
}

impl QuadraticProgram {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Self {
        let n = linear.len();
        Self {
            hessian,
            linear,
            a_ineq: DMatrix::zeros(0, n),
            b_ineq: DVector::zeros(0),
            a_eq: None,
            b_eq: None,
            warm_start: None,
        }
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_ineq = a;
        self.b_ineq = b;
        self
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_eq = Some(a);
        self.b_eq = Some(b);
        self
    }

    pub fn with_warm_start(mut self, x: DVector<f64>) -> Self {
        self.warm_start = Some(x);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b_ineq.len() + self.b_eq.as_ref().map_or(0, |b| b.len())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    fn validate(&self) -> Result<(), QpError> {
        let n = self.linear.len();
        if self.hessian.nrows() != n || self.hessian.ncols() != n {
            return Err(QpError::Dimension(format!(
                "hessian is {}x{}, expected {n}x{n}",
                self.hessian.nrows(),
                self.hessian.ncols()
            )));
        }
        if self.a_ineq.ncols() != n || self.a_ineq.nrows() != self.b_ineq.len() {
            return Err(QpError::Dimension(format!(
                "inequality block is {}x{} with {} offsets",
                self.a_ineq.nrows(),
                self.a_ineq.ncols(),
                self.b_ineq.len()
            )));
        }
        match (&self.a_eq, &self.b_eq) {
            (Some(a), Some(b)) if a.ncols() != n || a.nrows() != b.len() => {
                return Err(QpError::Dimension("equality block".into()))
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(QpError::Dimension("equality matrix without offsets".into()))
            }
            _ => {}
        }
        if let Some(w) = &self.warm_start {
            if w.len() != n {
                return Err(QpError::Dimension("warm start length".into()));
            }
        }
        let asym = (&self.hessian - self.hessian.transpose()).abs().max();
        let scale = 1.0 + self.hessian.abs().max();
        if asym > 1e-10 * scale {
            return Err(QpError::NotSymmetric(asym));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Defaults to `50 * (vars + constraints)` when `None`.
    pub max_iterations: Option<usize>,
    pub feasibility_tol: f64,
    pub regularization: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: None,
            feasibility_tol: 1e-9,
            regularization: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub stationarity: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone)]
pub struct QpOutcome {
    pub status: QpStatus,
    pub solution: DVector<f64>,
    pub objective: f64,
    /// Indices into the inequality rows that are in the final working set.
    pub active_set: Vec<usize>,
    /// Inequality multipliers (zero off the active set).
    pub multipliers: DVector<f64>,
    pub kkt: KktResiduals,
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub warm_start_used: bool,
    /// Phase-1 optimum `t*`; positive when infeasible.
    pub infeasibility: f64,
    /// Nonnegative row weights `y` with `A' y ~ 0`, `b' y < 0` on infeasible exits.
    pub farkas: Option<DVector<f64>>,
}

impl QpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    pub fn kkt_residual(&self) -> f64 {
        self.kkt
            .primal
            .max(self.kkt.stationarity)
            .max(self.kkt.complementarity)
    }
}

pub fn solve(qp: &QuadraticProgram) -> Result<QpOutcome, QpError> {
    solve_with(qp, &SolverSettings::default())
}

pub fn solve_with(qp: &QuadraticProgram, settings: &SolverSettings) -> Result<QpOutcome, QpError> {
    qp.validate()?;
    let n = qp.num_vars();
    let max_iter = settings
        .max_iterations
        .unwrap_or(50 * (n + qp.num_constraints()).max(1));

    let mut hessian = qp.hessian.clone();
    if hessian.clone().cholesky().is_none() {
        for i in 0..n {
            hessian[(i, i)] += settings.regularization;
        }
    }

    // Null-space reduction: x = x_p + Z y.
    let (x_p, z) = match (&qp.a_eq, &qp.b_eq) {
        (Some(a), Some(b)) if a.nrows() > 0 => {
            let svd = a.clone().svd(true, true);
            let rank = svd.rank(1e-12 * (1.0 + svd.singular_values.max()));
            if rank < a.nrows() {
                let x_p = svd
                    .solve(b, 1e-12)
                    .map_err(|_| QpError::DependentEqualities)?;
                if (a * &x_p - b).amax() > settings.feasibility_tol * (1.0 + b.amax()) {
                    return Ok(infeasible_outcome(qp, x_p, 0, f64::INFINITY, None));
                }
                return Err(QpError::DependentEqualities);
            }
            let x_p = svd.solve(b, 1e-14).map_err(|_| QpError::DependentEqualities)?;
            (x_p, linalg::null_space(a))
        }
        _ => (DVector::zeros(n), DMatrix::identity(n, n)),
    };

    let h_r = z.transpose() * &hessian * &z;
    let f_r = z.transpose() * (&hessian * &x_p + &qp.linear);
    let a_r = &qp.a_ineq * &z;
    let b_r = &qp.b_ineq - &qp.a_ineq * &x_p;
    let k = z.ncols();

    let start = qp
        .warm_start
        .as_ref()
        .map(|w| z.transpose() * (w - &x_p))
        .unwrap_or_else(|| DVector::zeros(k));

    let tol = settings.feasibility_tol;
    let mut phase1_iterations = 0;
    let mut warm_start_used = false;
    let max_violation = violation(&a_r, &b_r, &start);
    let feasible_start = if max_violation <= tol {
        warm_start_used = qp.warm_start.is_some();
        start
    } else {
        let p1 = phase_one(&a_r, &b_r, &start, max_violation, max_iter, tol)?;
        phase1_iterations = p1.iterations;
        if p1.status == QpStatus::IterationLimit {
            let x = &x_p + &z * &p1.x;
            let mut out = infeasible_outcome(qp, x, p1.iterations, p1.t, None);
            out.status = QpStatus::IterationLimit;
            return Ok(out);
        }
        if p1.t > tol {
            let x = &x_p + &z * &p1.x;
            return Ok(infeasible_outcome(qp, x, p1.iterations, p1.t, p1.farkas));
        }
        p1.x
    };

    let engine = Engine {
        h: &h_r,
        f: &f_r,
        a: &a_r,
        b: &b_r,
        tol,
    };
    let working = engine.initial_working_set(&feasible_start);
    let run = engine.run(feasible_start, working, max_iter.saturating_sub(phase1_iterations))?;

    let x = &x_p + &z * &run.x;
    let mut multipliers = DVector::zeros(qp.b_ineq.len());
    for (&i, &l) in run.working.iter().zip(run.lambda.iter()) {
        multipliers[i] = l.max(0.0);
    }
    let mut active_set = run.working.clone();
    active_set.sort_unstable();
    let kkt = kkt_residuals(qp, &x, &multipliers);
    Ok(QpOutcome {
        status: run.status,
        objective: qp.objective(&x),
        solution: x,
        active_set,
        multipliers,
        kkt,
        iterations: run.iterations + phase1_iterations,
        phase1_iterations,
        warm_start_used,
        infeasibility: 0.0,
        farkas: None,
    })
}

fn infeasible_outcome(
    qp: &QuadraticProgram,
    x: DVector<f64>,
    iterations: usize,
    t: f64,
    farkas: Option<DVector<f64>>,
) -> QpOutcome {
    QpOutcome {
        status: QpStatus::Infeasible,
        objective: qp.objective(&x),
        multipliers: DVector::zeros(qp.b_ineq.len()),
        kkt: KktResiduals {
            primal: violation(&qp.a_ineq, &qp.b_ineq, &x),
            ..Default::default()
        },
        solution: x,
        active_set: Vec::new(),
        iterations,
        phase1_iterations: iterations,
        warm_start_used: false,
        infeasibility: t,
        farkas,
    }
}

/// Largest row violation `max_i (a_i x - b_i)`, floored at zero.
pub fn violation(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    (a * x - b).max().max(0.0)
}

pub fn kkt_residuals(qp: &QuadraticProgram, x: &DVector<f64>, lambda: &DVector<f64>) -> KktResiduals {
    let slack = &qp.b_ineq - &qp.a_ineq * x;
    let mut primal = violation(&qp.a_ineq, &qp.b_ineq, x);
    let mut grad = &qp.hessian * x + &qp.linear + qp.a_ineq.transpose() * lambda;
    if let (Some(a), Some(b)) = (&qp.a_eq, &qp.b_eq) {
        if a.nrows() > 0 {
            primal = primal.max((a * x - b).amax());
            // Equality multipliers are whatever best absorbs the remaining gradient.
            let mu = a
                .transpose()
                .svd(true, true)
                .solve(&(-&grad), 1e-14)
                .unwrap_or_else(|_| DVector::zeros(a.nrows()));
            grad += a.transpose() * mu;
        }
    }
    let complementarity = lambda
        .iter()
        .zip(slack.iter())
        .map(|(l, s)| (l * s).abs())
        .fold(0.0, f64::max);
    KktResiduals {
        primal,
        stationarity: grad.amax(),
        complementarity,
    }
}

struct PhaseOne {
    x: DVector<f64>,
    t: f64,
    iterations: usize,
    status: QpStatus,
    farkas: Option<DVector<f64>>,
}

fn phase_one(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    start: &DVector<f64>,
    t0: f64,
    max_iter: usize,
    tol: f64,
) -> Result<PhaseOne, QpError> {
    let (m, k) = a.shape();
    // Variables (x, t); rows a_i x - t <= b_i and -t <= 0.
    let mut a1 = DMatrix::zeros(m + 1, k + 1);
    a1.view_mut((0, 0), (m, k)).copy_from(a);
    for i in 0..m {
        a1[(i, k)] = -1.0;
    }
    a1[(m, k)] = -1.0;
    let mut b1 = DVector::zeros(m + 1);
    b1.rows_mut(0, m).copy_from(b);
    let h1 = DMatrix::zeros(k + 1, k + 1);
    let mut f1 = DVector::zeros(k + 1);
    f1[k] = 1.0;
    let mut x1 = DVector::zeros(k + 1);
    x1.rows_mut(0, k).copy_from(start);
    x1[k] = t0;

    let engine = Engine {
        h: &h1,
        f: &f1,
        a: &a1,
        b: &b1,
        tol,
    };
    let working = engine.initial_working_set(&x1);
    let run = engine.run(x1, working, max_iter)?;
    let t = run.x[k].max(0.0);
    let farkas = if t > tol {
        let mut y = DVector::zeros(m);
        for (&i, &l) in run.working.iter().zip(run.lambda.iter()) {
            if i < m {
                y[i] = l.max(0.0);
            }
        }
        Some(y)
    } else {
        None
    };
    Ok(PhaseOne {
        x: run.x.rows(0, k).into_owned(),
        t,
        iterations: run.iterations,
        status: run.status,
        farkas,
    })
}

struct Engine<'a> {
    h: &'a DMatrix<f64>,
    f: &'a DVector<f64>,
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    tol: f64,
}

struct EngineRun {
    x: DVector<f64>,
    working: Vec<usize>,
    lambda: Vec<f64>,
    iterations: usize,
    status: QpStatus,
}

impl Engine<'_> {
    fn row_tol(&self, i: usize) -> f64 {
        self.tol * (1.0 + self.b[i].abs())
    }

    /// Rows tight at `x`, taken in index order while they stay independent.
    fn initial_working_set(&self, x: &DVector<f64>) -> Vec<usize> {
        let n = x.len();
        let mut working = Vec::new();
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for i in 0..self.b.len() {
            if working.len() == n {
                break;
            }
            let slack = self.b[i] - self.a.row(i).dot(&x.transpose());
            if slack.abs() > self.row_tol(i) {
                continue;
            }
            let row: DVector<f64> = self.a.row(i).transpose();
            if let Some(q) = linalg::orthogonal_residual(&basis, &row) {
                basis.push(q);
                working.push(i);
            }
        }
        working
    }

    fn run(&self, mut x: DVector<f64>, mut working: Vec<usize>, max_iter: usize) -> Result<EngineRun, QpError> {
        let n = x.len();
        let mut degenerate_streak = 0usize;
        for iter in 0..max_iter {
            let grad = self.h * &x + self.f;
            let a_w = linalg::select_rows(self.a, &working);
            let step = if working.len() >= n {
                None
            } else {
                let z = if working.is_empty() {
                    DMatrix::identity(n, n)
                } else {
                    linalg::null_space(&a_w)
                };
                self.subproblem_step(&z, &grad)
            };

            let Some((p, bounded)) = step else {
                // Stationary on the working set: inspect multipliers.
                let lambda = if working.is_empty() {
                    Vec::new()
                } else {
                    linalg::least_squares(&a_w.transpose(), &(-&grad))
                        .iter()
                        .copied()
                        .collect()
                };
                let scale = 1.0 + grad.amax();
                let bland = degenerate_streak > 2 * n;
                let mut drop: Option<(usize, f64)> = None;
                for (pos, &l) in lambda.iter().enumerate() {
                    if l >= -1e-10 * scale {
                        continue;
                    }
                    let better = match drop {
                        None => true,
                        Some((dpos, dl)) => {
                            if bland {
                                working[pos] < working[dpos]
                            } else {
                                l < dl || (l == dl && working[pos] < working[dpos])
                            }
                        }
                    };
                    if better {
                        drop = Some((pos, l));
                    }
                }
                match drop {
                    None => {
                        return Ok(EngineRun {
                            x,
                            working,
                            lambda,
                            iterations: iter,
                            status: QpStatus::Optimal,
                        })
                    }
                    Some((pos, _)) => {
                        working.remove(pos);
                        continue;
                    }
                }
            };

            // Ratio test.
            let mut alpha = if bounded { 1.0 } else { f64::INFINITY };
            let mut blocking = None;
            for i in 0..self.b.len() {
                if working.contains(&i) {
                    continue;
                }
                let ap = self.a.row(i).dot(&p.transpose());
                if ap <= 1e-12 * (1.0 + p.amax()) {
                    continue;
                }
                let slack = (self.b[i] - self.a.row(i).dot(&x.transpose())).max(0.0);
                let ratio = slack / ap;
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
            if alpha.is_infinite() {
                return Err(QpError::Unbounded);
            }
            degenerate_streak = if alpha == 0.0 { degenerate_streak + 1 } else { 0 };
            x += alpha * &p;
            if let Some(i) = blocking {
                working.push(i);
            }
        }
        let lambda = vec![0.0; working.len()];
        Ok(EngineRun {
            x,
            working,
            lambda,
            iterations: max_iter,
            status: QpStatus::IterationLimit,
        })
    }

    /// Step on the working-set null space `z`; `None` when already
    /// stationary. The flag is `false` for a zero-curvature descent
    /// direction, whose length is set by the ratio test alone.
    fn subproblem_step(&self, z: &DMatrix<f64>, grad: &DVector<f64>) -> Option<(DVector<f64>, bool)> {
        let gz = z.transpose() * grad;
        let gtol = 1e-11 * (1.0 + grad.amax());
        if gz.amax() <= gtol {
            return None;
        }
        let hz = z.transpose() * self.h * z;
        let eig = SymmetricEigen::new(hz);
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let curv_tol = 1e-9 * (1.0 + top);

        let mut flat = DVector::zeros(gz.len());
        let mut newton = DVector::zeros(gz.len());
        for (j, &mu) in eig.eigenvalues.iter().enumerate() {
            let u = eig.eigenvectors.column(j);
            let c = u.dot(&gz);
            if mu > curv_tol {
                newton -= u * (c / mu);
            } else {
                flat -= u * c;
            }
        }
        if flat.amax() > gtol {
            let p = z * flat;
            return Some((p, false));
        }
        let p = z * newton;
        if p.amax() <= 1e-15 * (1.0 + grad.amax()) {
            return None;
        }
        Some((p, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn active_lower_bound() {
        // min v^2 s.t. v >= 1
        let qp = QuadraticProgram::new(m(1, 1, &[2.0]), DVector::zeros(1))
            .with_inequalities(m(1, 1, &[-1.0]), DVector::from_vec(vec![-1.0]));
        let out = solve(&qp).unwrap();
        assert_eq!(out.status, QpStatus::Optimal);
        assert_abs_diff_eq!(out.solution[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.objective, 1.0, epsilon = 1e-12);
        assert_eq!(out.active_set, vec![0]);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // x <= -1 and x >= 1
        let qp = QuadraticProgram::new(m(1, 1, &[1.0]), DVector::zeros(1))
            .with_inequalities(m(2, 1, &[1.0, -1.0]), DVector::from_vec(vec![-1.0, -1.0]));
        let out = solve(&qp).unwrap();
        assert_eq!(out.status, QpStatus::Infeasible);
        assert!(out.infeasibility > 0.5);
        let y = out.farkas.expect("certificate");
        // A' y = 0 and b' y < 0
        let aty = qp.a_ineq.transpose() * &y;
        assert!(aty.amax() < 1e-9);
        assert!(qp.b_ineq.dot(&y) < 0.0);
        assert!(y.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn equality_constrained_projection() {
        // min |x - (1,2,3)|^2 s.t. x1 + x2 + x3 = 0, x >= 0 on first coord
        let h = DMatrix::identity(3, 3) * 2.0;
        let f = DVector::from_vec(vec![-2.0, -4.0, -6.0]);
        let qp = QuadraticProgram::new(h, f).with_equalities(m(1, 3, &[1.0, 1.0, 1.0]), DVector::zeros(1));
        let out = solve(&qp).unwrap();
        assert!(out.is_optimal());
        assert_abs_diff_eq!(out.solution[0], -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out.solution[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out.solution[2], 1.0, epsilon = 1e-10);
        assert!(out.kkt.stationarity < 1e-9);
    }

    #[test]
    fn linear_program_with_zero_hessian() {
        // min -x - y on the unit box
        let a = m(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let qp = QuadraticProgram::new(DMatrix::zeros(2, 2), DVector::from_vec(vec![-1.0, -1.0]))
            .with_inequalities(a, b);
        let out = solve(&qp).unwrap();
        assert!(out.is_optimal());
        assert_abs_diff_eq!(out.solution[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.solution[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unbounded_linear_objective() {
        let qp = QuadraticProgram::new(DMatrix::zeros(1, 1), DVector::from_vec(vec![1.0]));
        assert_eq!(solve(&qp).unwrap_err(), QpError::Unbounded);
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        let qp = QuadraticProgram::new(m(2, 2, &[1.0, 0.5, 0.0, 1.0]), DVector::zeros(2));
        assert!(matches!(solve(&qp), Err(QpError::NotSymmetric(_))));
    }

    #[test]
    fn infeasible_warm_start_falls_back_to_phase_one() {
        let a = m(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![2.0, -1.0]); // 1 <= x <= 2
        let qp = QuadraticProgram::new(m(1, 1, &[1.0]), DVector::zeros(1))
            .with_inequalities(a, b)
            .with_warm_start(DVector::from_vec(vec![10.0]));
        let out = solve(&qp).unwrap();
        assert!(out.is_optimal());
        assert!(!out.warm_start_used);
        assert!(out.phase1_iterations > 0);
        assert_abs_diff_eq!(out.solution[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let a = m(2, 2, &[1.0, 1.0, -1.0, 0.0]);
        let b = DVector::from_vec(vec![-1.0, 0.0]);
        let qp = QuadraticProgram::new(DMatrix::identity(2, 2), DVector::from_vec(vec![0.0, 3.0]))
            .with_inequalities(a, b);
        let settings = SolverSettings {
            max_iterations: Some(1),
            ..Default::default()
        };
        let out = solve_with(&qp, &settings).unwrap();
        assert_eq!(out.status, QpStatus::IterationLimit);
    }

    #[test]
    fn psd_hessian_with_flat_direction() {
        // min (x - 1)^2 with y free on [0, 5]; linear term pushes y down
        let h = m(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let f = DVector::from_vec(vec![-2.0, 1.0]);
        let a = m(2, 2, &[0.0, 1.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![5.0, 0.0]);
        let out = solve(&QuadraticProgram::new(h, f).with_inequalities(a, b)).unwrap();
        assert!(out.is_optimal());
        assert_abs_diff_eq!(out.solution[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.solution[1], 0.0, epsilon = 1e-12);
    }
}
