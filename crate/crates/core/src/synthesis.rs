//! Offline design: feedback gain and terminal weight, closed-loop hull,
//! contractive terminal set, tube radii, tightened state sets and the
//! horizon-stacked input constraints.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::adaptation::{self, AdaptationError, ErrorRadii};
use crate::artifact::{Artifact, ArtifactError};
use crate::geometry::{Ball, GeometryError, MappedBall, Polytope};
use crate::linalg;
use crate::model::{self, ConstraintFamily, ModelError, ParamHull, ReferenceInputSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("no common quadratic certificate; vertex margins {margins:?} at Q inflation {inflation}")]
    NoCertificate { margins: Vec<f64>, inflation: f64 },
    #[error("Riccati iteration failed: {0}")]
    Riccati(&'static str),
    #[error("weight matrix {0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("contractive recursion collapsed at iteration {0}")]
    TerminalCollapse(usize),
    #[error("contractive recursion did not converge in {0} iterations")]
    TerminalNotConverged(usize),
    #[error("terminal input condition cannot be met by shrinking (backoff {0})")]
    TerminalInput(f64),
    #[error("tightened state set {index} is empty (tube radius {radius})")]
    EmptyTightening { index: usize, radius: f64 },
    #[error("terminal set inclusion fails by {0:e}")]
    Inclusion(f64),
    #[error("{0} is empty: gain consumes the whole input budget")]
    EmptyInputSet(&'static str),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

const INFLATION_SCHEDULE: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq)]
pub struct GainCertificate {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
    /// Smallest eigenvalue of `P - Phi_i' P Phi_i - Q` per hull vertex.
    pub vertex_margins: Vec<f64>,
    /// Factor `c` such that the Riccati equation was solved with `c Q`.
    pub q_inflation: f64,
}

/// Stabilizing solution of `P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q` by the
/// structure-preserving doubling algorithm.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, SynthesisError> {
    let n = a.nrows();
    let r_inv = r
        .clone()
        .cholesky()
        .ok_or(SynthesisError::NotPositiveDefinite("R"))?
        .inverse();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut ak = a.clone();
    let mut gk = b * r_inv * b.transpose();
    let mut hk = q.clone();
    for _ in 0..64 {
        let w = (&eye + &gk * &hk).lu();
        let w_inv_a = w.solve(&ak).ok_or(SynthesisError::Riccati("singular doubling step"))?;
        let w_inv_g = w.solve(&gk).ok_or(SynthesisError::Riccati("singular doubling step"))?;
        let a_next = &ak * &w_inv_a;
        let g_next = &gk + &ak * w_inv_g * ak.transpose();
        let h_next = &hk + ak.transpose() * &hk * &w_inv_a;
        let delta = (&h_next - &hk).amax();
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if !hk.iter().all(|v| v.is_finite()) {
            return Err(SynthesisError::Riccati("diverged"));
        }
        if delta <= 1e-14 * (1.0 + hk.amax()) {
            return Ok((&hk + hk.transpose()) * 0.5);
        }
    }
    Err(SynthesisError::Riccati("no convergence"))
}

/// `K = -(R + B'PB)^-1 B'PA`, so that `u = K x`.
pub fn lqr_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, p: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>, SynthesisError> {
    let s = r + b.transpose() * p * b;
    let chol = s.cholesky().ok_or(SynthesisError::NotPositiveDefinite("R + B'PB"))?;
    Ok(-chol.solve(&(b.transpose() * p * a)))
}

pub fn vertex_margins(hull: &ParamHull, k: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Vec<f64> {
    (0..hull.len())
        .map(|i| {
            let phi = hull.vertex_a(i) + hull.vertex_b(i) * k;
            linalg::min_eigenvalue(&(p - phi.transpose() * p * &phi - q))
        })
        .collect()
}

pub fn synthesize_gain(
    hull: &ParamHull,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    gamma: f64,
) -> Result<GainCertificate, SynthesisError> {
    if q.clone().cholesky().is_none() {
        return Err(SynthesisError::NotPositiveDefinite("Q"));
    }
    let centroid = hull.centroid();
    let n = hull.n();
    let a_c = centroid.columns(0, n).into_owned();
    let b_c = centroid.columns(n, hull.m()).into_owned();
    let mut last = Vec::new();
    for c in INFLATION_SCHEDULE {
        let q_syn = q * c;
        let p = solve_dare(&a_c, &b_c, &q_syn, r)?;
        if p.clone().cholesky().is_none() {
            continue;
        }
        let k = lqr_gain(&a_c, &b_c, &p, r)?;
        let margins = vertex_margins(hull, &k, &p, q);
        if margins.iter().all(|m| *m > 0.0) {
            return Ok(GainCertificate {
                k,
                p,
                q: q.clone(),
                r: r.clone(),
                gamma,
                vertex_margins: margins,
                q_inflation: c,
            });
        }
        last = margins;
    }
    Err(SynthesisError::NoCertificate {
        margins: last,
        inflation: *INFLATION_SCHEDULE.last().unwrap(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopHull {
    /// Vertices `A_i + B_i K` (stored with input dimension zero).
    pub hull: ParamHull,
    /// Largest spectral norm over the vertices.
    pub a_bar: f64,
    /// Largest Frobenius norm over the vertices.
    pub frobenius_bound: f64,
    pub spectral_radii: Vec<f64>,
}

pub fn closed_loop_hull(hull: &ParamHull, k: &DMatrix<f64>) -> Result<ClosedLoopHull, SynthesisError> {
    if k.nrows() != hull.m() || k.ncols() != hull.n() {
        return Err(SynthesisError::Parameter(format!(
            "gain is {}x{}, expected {}x{}",
            k.nrows(),
            k.ncols(),
            hull.m(),
            hull.n()
        )));
    }
    let vs: Vec<DMatrix<f64>> = (0..hull.len())
        .map(|i| hull.vertex_a(i) + hull.vertex_b(i) * k)
        .collect();
    let a_bar = vs.iter().map(linalg::spectral_norm).fold(0.0, f64::max);
    let frobenius_bound = vs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let spectral_radii = vs.iter().map(linalg::spectral_radius).collect();
    Ok(ClosedLoopHull {
        hull: ParamHull::new(vs, hull.n())?,
        a_bar,
        frobenius_bound,
        spectral_radii,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSet {
    pub set: Polytope,
    pub iterations: usize,
    /// Scalar shrink applied to meet the terminal input condition (1 if none).
    pub backoff: f64,
}

pub const CONTRACTIVE_MAX_ITER: usize = 200;
const CONTRACTIVE_TOL: f64 = 1e-6;

/// Largest set found inside `x0` that every closed-loop vertex maps into its
/// `gamma` scaling, shrunk if needed so that `K (set + B(rho))` fits `budget`.
pub fn contractive_terminal_set(
    closed_loop: &ParamHull,
    gamma: f64,
    x0: &Polytope,
    k: &DMatrix<f64>,
    budget: &Polytope,
    rho: f64,
) -> Result<TerminalSet, SynthesisError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SynthesisError::Parameter(format!("gamma = {gamma} outside (0, 1)")));
    }
    let n = x0.dim();
    let mut omega = x0.remove_redundant()?;
    let mut iterations = CONTRACTIVE_MAX_ITER;
    let mut converged = false;
    for it in 0..CONTRACTIVE_MAX_ITER {
        let (a, b) = (omega.normals(), omega.offsets());
        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut offs: Vec<f64> = Vec::new();
        for i in 0..a.nrows() {
            rows.push(a.row(i).transpose());
            offs.push(b[i]);
        }
        for phi in closed_loop.vertices() {
            let ap = a * phi;
            for i in 0..ap.nrows() {
                let row: DVector<f64> = ap.row(i).transpose();
                let off = gamma * b[i];
                if row.norm() <= 1e-14 {
                    if off < 0.0 {
                        return Err(SynthesisError::TerminalCollapse(it));
                    }
                    continue;
                }
                rows.push(row);
                offs.push(off);
            }
        }
        let stacked = DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>());
        let next = Polytope::new(stacked, DVector::from_vec(offs))
            .and_then(|p| p.remove_redundant())
            .map_err(|e| match e {
                GeometryError::Empty => SynthesisError::TerminalCollapse(it),
                other => SynthesisError::Geometry(other),
            })?;
        if !next.is_c0() || next.dim() != n {
            return Err(SynthesisError::TerminalCollapse(it));
        }
        let h = next.hausdorff(&omega)?;
        omega = next;
        if h <= CONTRACTIVE_TOL {
            iterations = it;
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SynthesisError::TerminalNotConverged(CONTRACTIVE_MAX_ITER));
    }

    let mut backoff: f64 = 1.0;
    for i in 0..budget.num_facets() {
        let a: DVector<f64> = budget.normals().row(i).transpose();
        let kta = k.transpose() * &a;
        let reach = omega.support(&kta)?;
        let room = budget.offsets()[i] - rho * kta.norm();
        if reach + rho * kta.norm() > budget.offsets()[i] {
            if reach <= 0.0 || room <= 0.0 {
                return Err(SynthesisError::TerminalInput(room));
            }
            backoff = backoff.min(room / reach);
        }
    }
    if backoff < 1.0 {
        omega = omega.scale(backoff)?;
    }
    Ok(TerminalSet {
        set: omega,
        iterations,
        backoff,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeRadii {
    /// `r_0 .. r_N`.
    pub r: Vec<f64>,
    /// Radius of the prediction-error ball.
    pub rho: f64,
}

/// `r_0 = 0`, `r_{i+1} = a_bar r_i + delta_theta`.
pub fn tube_radii(a_bar: f64, delta_theta: f64, sqrt_delta_xtilde: f64, horizon: usize) -> TubeRadii {
    let mut r = Vec::with_capacity(horizon + 1);
    r.push(0.0);
    for i in 0..horizon {
        r.push(a_bar * r[i] + delta_theta);
    }
    TubeRadii {
        r,
        rho: sqrt_delta_xtilde,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeFamily {
    pub z_xtilde: Ball,
    /// `Z_0 .. Z_N`.
    pub z_theta: Vec<Ball>,
    /// Tightened state sets `Xe_0 .. Xe_{N-1}`; index 0 is the reset region.
    pub xe_tight: Vec<Polytope>,
    pub xe_t: Polytope,
    pub xe_t_bar: Polytope,
}

impl TubeFamily {
    pub fn horizon(&self) -> usize {
        self.xe_tight.len()
    }

    /// Constraint set for the nominal state `i` steps ahead (`i = N` is the
    /// tightened terminal set).
    pub fn state_set(&self, i: usize) -> &Polytope {
        if i >= self.xe_tight.len() {
            &self.xe_t_bar
        } else {
            &self.xe_tight[i]
        }
    }
}

pub fn tighten_sets(xe: &Polytope, radii: &TubeRadii, xe_t: &Polytope) -> Result<TubeFamily, SynthesisError> {
    let n = xe.dim();
    let horizon = radii.r.len() - 1;
    let mut xe_tight = Vec::with_capacity(horizon);
    for (i, r) in radii.r.iter().take(horizon).enumerate() {
        let radius = r + radii.rho;
        let set = xe
            .pontryagin_diff(&Ball::origin(n, radius))
            .map_err(|e| empty_as(e, i, radius))?;
        xe_tight.push(set);
    }
    let r_n = radii.r[horizon];
    let xe_t_bar = xe_t
        .pontryagin_diff(&Ball::origin(n, r_n))
        .map_err(|e| empty_as(e, horizon, r_n))?;
    // Terminal inclusion against Xe - B(r_N) - B(rho), facet by facet.
    let outer = xe
        .pontryagin_diff(&Ball::origin(n, r_n + radii.rho))
        .map_err(|e| empty_as(e, horizon, r_n + radii.rho))?;
    let mut worst: f64 = 0.0;
    for i in 0..outer.num_facets() {
        let a: DVector<f64> = outer.normals().row(i).transpose();
        worst = worst.max(xe_t_bar.support(&a)? - outer.offsets()[i]);
    }
    if worst > 1e-9 {
        return Err(SynthesisError::Inclusion(worst));
    }
    Ok(TubeFamily {
        z_xtilde: Ball::origin(n, radii.rho),
        z_theta: radii.r.iter().map(|r| Ball::origin(n, *r)).collect(),
        xe_tight,
        xe_t: xe_t.clone(),
        xe_t_bar,
    })
}

fn empty_as(e: GeometryError, index: usize, radius: f64) -> SynthesisError {
    match e {
        GeometryError::Empty => SynthesisError::EmptyTightening { index, radius },
        other => SynthesisError::Geometry(other),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedConstraints {
    pub horizon: usize,
    pub m: usize,
    pub h_u_matrix: DMatrix<f64>,
    pub h_delta: DMatrix<f64>,
    pub h_bar: DMatrix<f64>,
    pub h_u: f64,
    pub h_delta_u: f64,
    pub h_v: f64,
    pub h_delta_v: f64,
    pub v_set: Polytope,
    pub v_delta_set: Polytope,
}

/// `I_m` on the block diagonal and `-I_m` on the first block subdiagonal.
pub fn difference_matrix(horizon: usize, m: usize) -> DMatrix<f64> {
    let nm = horizon * m;
    let mut h = DMatrix::identity(nm, nm);
    for blk in 1..horizon {
        for j in 0..m {
            h[(blk * m + j, (blk - 1) * m + j)] = -1.0;
        }
    }
    h
}

/// `[I_m; 0]`, which feeds the previous move into the first rate row.
pub fn shift_selector(horizon: usize, m: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(horizon * m, m);
    for j in 0..m {
        h[(j, j)] = 1.0;
    }
    h
}

impl StackedConstraints {
    /// Upper right-hand side `h_delta_v 1 + H_bar v_prev` of `H_delta v`.
    pub fn rate_rhs_upper(&self, v_prev: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(self.horizon * self.m, self.h_delta_v) + &self.h_bar * v_prev
    }

    /// Right-hand side of `-H_delta v <= h_delta_v 1 - H_bar v_prev`.
    pub fn rate_rhs_lower(&self, v_prev: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(self.horizon * self.m, self.h_delta_v) - &self.h_bar * v_prev
    }

    /// Worst violation of the input, rate and terminal rows by `seq`.
    pub fn row_violation(&self, seq: &DVector<f64>, v_prev: &DVector<f64>) -> f64 {
        let mag = seq.amax() - self.h_v;
        let d = &self.h_delta * seq;
        let up = (&d - self.rate_rhs_upper(v_prev)).max();
        let lo = (-&d - self.rate_rhs_lower(v_prev)).max();
        let last = seq.rows((self.horizon - 1) * self.m, self.m).amax() - self.h_delta_v;
        mag.max(up).max(lo).max(last)
    }
}

pub fn build_stacked_constraints(
    horizon: usize,
    m: usize,
    ue: &Polytope,
    ue_delta: &Polytope,
    k: &DMatrix<f64>,
    xe: &Polytope,
    xe_delta: &Ball,
) -> Result<StackedConstraints, SynthesisError> {
    if horizon == 0 {
        return Err(SynthesisError::Parameter("horizon must be positive".into()));
    }
    let kxe = xe.linear_map(k)?;
    let v_set = ue.pontryagin_diff(&kxe).map_err(|e| match e {
        GeometryError::Empty => SynthesisError::EmptyInputSet("Ve"),
        other => other.into(),
    })?;
    let kball = MappedBall {
        map: k.clone(),
        ball: xe_delta.clone(),
    };
    let v_delta_set = ue_delta.pontryagin_diff(&kball).map_err(|e| match e {
        GeometryError::Empty => SynthesisError::EmptyInputSet("Ve_delta"),
        other => other.into(),
    })?;
    if !v_set.is_c0() {
        return Err(SynthesisError::EmptyInputSet("Ve"));
    }
    if !v_delta_set.is_c0() {
        return Err(SynthesisError::EmptyInputSet("Ve_delta"));
    }
    let nm = horizon * m;
    Ok(StackedConstraints {
        horizon,
        m,
        h_u_matrix: DMatrix::identity(nm, nm),
        h_delta: difference_matrix(horizon, m),
        h_bar: shift_selector(horizon, m),
        h_u: ue.inscribed_box_radius(),
        h_delta_u: ue_delta.inscribed_box_radius(),
        h_v: v_set.inscribed_box_radius(),
        h_delta_v: v_delta_set.inscribed_box_radius(),
        v_set,
        v_delta_set,
    })
}

/// Inputs for the full offline pipeline.
#[derive(Debug, Clone)]
pub struct Design {
    pub hull: ParamHull,
    pub x: Polytope,
    pub u: Polytope,
    pub u_delta: Polytope,
    pub reference_vertices: Vec<DVector<f64>>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
    pub horizon: usize,
    pub alpha: f64,
    /// Learning rate; the largest admissible one when `None`.
    pub lambda: Option<f64>,
    /// Factor applied to the certified tube radii (1 keeps them as derived).
    pub tube_scale: f64,
    /// Factor applied to the reference-input diameter.
    pub du_safety: f64,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub hull: ParamHull,
    pub gain: GainCertificate,
    pub closed_loop: ClosedLoopHull,
    pub reference_inputs: ReferenceInputSet,
    pub constraints: ConstraintFamily,
    pub radii: ErrorRadii,
    pub lambda: f64,
    pub alpha: f64,
    pub tube_scale: f64,
    pub tube_radii: TubeRadii,
    pub terminal: TerminalSet,
    pub tubes: TubeFamily,
    pub stacked: StackedConstraints,
}

impl SynthesisResult {
    pub fn horizon(&self) -> usize {
        self.stacked.horizon
    }
}

pub fn synthesize(design: &Design) -> Result<SynthesisResult, SynthesisError> {
    if design.tube_scale < 0.0 || !design.tube_scale.is_finite() {
        return Err(SynthesisError::Parameter("tube_scale must be nonnegative".into()));
    }
    let gain = synthesize_gain(&design.hull, &design.q, &design.r, design.gamma)?;
    let closed_loop = closed_loop_hull(&design.hull, &gain.k)?;

    let reference_inputs = model::build_reference_input_set(&design.hull, &design.reference_vertices, design.du_safety)?;
    let xr = Polytope::from_points(&design.reference_vertices)?;
    let constraints = model::build_error_constraints(
        &design.x,
        &design.u,
        &design.u_delta,
        &xr,
        &reference_inputs.set,
        reference_inputs.d_u,
    )?;

    let u_m = design.u.vertices()?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let radii = adaptation::compute_error_radii(&design.hull, &design.x, u_m, design.alpha)?;
    let lambda = design
        .lambda
        .unwrap_or_else(|| adaptation::admissible_lambda(design.alpha, radii.regressor_bound_sq()));
    let est = adaptation::EstimatorState::new(design.hull.centroid(), lambda, design.alpha)?;
    est.check_admissible(radii.regressor_bound_sq())?;

    let tube_radii = tube_radii(
        closed_loop.a_bar,
        design.tube_scale * radii.delta_theta,
        design.tube_scale * radii.sqrt_delta_xtilde(),
        design.horizon,
    );
    let x0 = constraints
        .xe
        .pontryagin_diff(&Ball::origin(design.x.dim(), tube_radii.rho))
        .map_err(|e| empty_as(e, 0, tube_radii.rho))?;

    let stacked = build_stacked_constraints(
        design.horizon,
        design.hull.m(),
        &constraints.ue,
        &constraints.ue_delta,
        &gain.k,
        &constraints.xe,
        &constraints.xe_delta,
    )?;
    let terminal = contractive_terminal_set(
        &closed_loop.hull,
        design.gamma,
        &x0,
        &gain.k,
        &constraints.ue,
        tube_radii.rho,
    )?;
    let tubes = tighten_sets(&constraints.xe, &tube_radii, &terminal.set)?;
    Ok(SynthesisResult {
        hull: design.hull.clone(),
        gain,
        closed_loop,
        reference_inputs,
        constraints,
        radii,
        lambda,
        alpha: design.alpha,
        tube_scale: design.tube_scale,
        tube_radii,
        terminal,
        tubes,
        stacked,
    })
}

fn put_polytope(a: &mut Artifact, key: &str, p: &Polytope) {
    a.put_matrix(&format!("{key}.normals"), p.normals());
    a.put_vector(&format!("{key}.offsets"), p.offsets());
}

fn get_polytope(a: &Artifact, key: &str) -> Result<Polytope, SynthesisError> {
    let normals = a.matrix(&format!("{key}.normals"))?.clone();
    let offsets = a.vector(&format!("{key}.offsets"))?;
    Ok(Polytope::new(normals, offsets)?)
}

impl SynthesisResult {
    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new();
        let n = self.hull.n();
        a.put_scalar("dims.n", n as f64);
        a.put_scalar("dims.m", self.hull.m() as f64);
        a.put_scalar("dims.horizon", self.horizon() as f64);
        a.put_scalar("hull.count", self.hull.len() as f64);
        for (i, v) in self.hull.vertices().iter().enumerate() {
            a.put_matrix(&format!("hull.{i}"), v);
        }
        a.put_matrix("gain.K", &self.gain.k);
        a.put_matrix("gain.P", &self.gain.p);
        a.put_matrix("gain.Q", &self.gain.q);
        a.put_matrix("gain.R", &self.gain.r);
        a.put_scalar("gain.gamma", self.gain.gamma);
        a.put_scalar("gain.q_inflation", self.gain.q_inflation);
        a.put_list("gain.vertex_margins", &self.gain.vertex_margins);
        a.put_scalar("closed_loop.a_bar", self.closed_loop.a_bar);
        a.put_scalar("closed_loop.frobenius_bound", self.closed_loop.frobenius_bound);
        a.put_list("closed_loop.spectral_radii", &self.closed_loop.spectral_radii);
        put_polytope(&mut a, "sets.Ur", &self.reference_inputs.set);
        a.put_matrix(
            "sets.Ur.points",
            &DMatrix::from_columns(&self.reference_inputs.points),
        );
        let c = &self.constraints;
        for (k, p) in [
            ("sets.X", &c.x),
            ("sets.U", &c.u),
            ("sets.U_delta", &c.u_delta),
            ("sets.Xe", &c.xe),
            ("sets.Ue", &c.ue),
            ("sets.Ue_delta", &c.ue_delta),
        ] {
            put_polytope(&mut a, k, p);
        }
        a.put_scalar("sets.d_u", c.d_u);
        a.put_scalar("sets.d_x", c.d_x);
        a.put_scalar("radii.d_theta", self.radii.d_theta);
        a.put_scalar("radii.delta_xtilde", self.radii.delta_xtilde);
        a.put_scalar("radii.delta_theta", self.radii.delta_theta);
        a.put_scalar("radii.x_m", self.radii.x_m);
        a.put_scalar("radii.u_m", self.radii.u_m);
        a.put_scalar("adapt.lambda", self.lambda);
        a.put_scalar("adapt.alpha", self.alpha);
        a.put_scalar("tubes.scale", self.tube_scale);
        a.put_list("tubes.r", &self.tube_radii.r);
        a.put_scalar("tubes.rho", self.tube_radii.rho);
        a.put_scalar("terminal.iterations", self.terminal.iterations as f64);
        a.put_scalar("terminal.backoff", self.terminal.backoff);
        put_polytope(&mut a, "tubes.Xe_T", &self.tubes.xe_t);
        put_polytope(&mut a, "tubes.Xe_T_bar", &self.tubes.xe_t_bar);
        for (i, p) in self.tubes.xe_tight.iter().enumerate() {
            put_polytope(&mut a, &format!("tubes.Xe.{i}"), p);
        }
        let s = &self.stacked;
        a.put_matrix("stacked.H_u", &s.h_u_matrix);
        a.put_matrix("stacked.H_delta", &s.h_delta);
        a.put_matrix("stacked.H_bar", &s.h_bar);
        a.put_scalar("stacked.h_u", s.h_u);
        a.put_scalar("stacked.h_delta_u", s.h_delta_u);
        a.put_scalar("stacked.h_v", s.h_v);
        a.put_scalar("stacked.h_delta_v", s.h_delta_v);
        put_polytope(&mut a, "stacked.Ve", &s.v_set);
        put_polytope(&mut a, "stacked.Ve_delta", &s.v_delta_set);
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self, SynthesisError> {
        let n = a.scalar("dims.n")? as usize;
        let m = a.scalar("dims.m")? as usize;
        let horizon = a.scalar("dims.horizon")? as usize;
        let count = a.scalar("hull.count")? as usize;
        let vertices: Result<Vec<_>, _> = (0..count)
            .map(|i| a.matrix(&format!("hull.{i}")).cloned())
            .collect();
        let hull = ParamHull::new(vertices?, n)?;
        if hull.m() != m {
            return Err(SynthesisError::Parameter("hull input dimension".into()));
        }
        let gain = GainCertificate {
            k: a.matrix("gain.K")?.clone(),
            p: a.matrix("gain.P")?.clone(),
            q: a.matrix("gain.Q")?.clone(),
            r: a.matrix("gain.R")?.clone(),
            gamma: a.scalar("gain.gamma")?,
            vertex_margins: a.list("gain.vertex_margins")?,
            q_inflation: a.scalar("gain.q_inflation")?,
        };
        let closed_loop = closed_loop_hull(&hull, &gain.k)?;
        let points_m = a.matrix("sets.Ur.points")?;
        let reference_inputs = ReferenceInputSet {
            set: get_polytope(a, "sets.Ur")?,
            d_u: a.scalar("sets.d_u")?,
            points: points_m.column_iter().map(|c| c.into_owned()).collect(),
        };
        let d_u = a.scalar("sets.d_u")?;
        let d_x = a.scalar("sets.d_x")?;
        let constraints = ConstraintFamily {
            x: get_polytope(a, "sets.X")?,
            u: get_polytope(a, "sets.U")?,
            u_delta: get_polytope(a, "sets.U_delta")?,
            xe: get_polytope(a, "sets.Xe")?,
            ue: get_polytope(a, "sets.Ue")?,
            ue_delta: get_polytope(a, "sets.Ue_delta")?,
            xe_delta: Ball::origin(n, d_x),
            ur_delta: Ball::origin(m, d_u),
            d_u,
            d_x,
        };
        let radii = ErrorRadii {
            d_theta: a.scalar("radii.d_theta")?,
            delta_xtilde: a.scalar("radii.delta_xtilde")?,
            delta_theta: a.scalar("radii.delta_theta")?,
            x_m: a.scalar("radii.x_m")?,
            u_m: a.scalar("radii.u_m")?,
        };
        let tube_radii = TubeRadii {
            r: a.list("tubes.r")?,
            rho: a.scalar("tubes.rho")?,
        };
        let xe_tight: Result<Vec<_>, _> = (0..horizon)
            .map(|i| get_polytope(a, &format!("tubes.Xe.{i}")))
            .collect();
        let xe_t = get_polytope(a, "tubes.Xe_T")?;
        let tubes = TubeFamily {
            z_xtilde: Ball::origin(n, tube_radii.rho),
            z_theta: tube_radii.r.iter().map(|r| Ball::origin(n, *r)).collect(),
            xe_tight: xe_tight?,
            xe_t: xe_t.clone(),
            xe_t_bar: get_polytope(a, "tubes.Xe_T_bar")?,
        };
        let stacked = StackedConstraints {
            horizon,
            m,
            h_u_matrix: a.matrix("stacked.H_u")?.clone(),
            h_delta: a.matrix("stacked.H_delta")?.clone(),
            h_bar: a.matrix("stacked.H_bar")?.clone(),
            h_u: a.scalar("stacked.h_u")?,
            h_delta_u: a.scalar("stacked.h_delta_u")?,
            h_v: a.scalar("stacked.h_v")?,
            h_delta_v: a.scalar("stacked.h_delta_v")?,
            v_set: get_polytope(a, "stacked.Ve")?,
            v_delta_set: get_polytope(a, "stacked.Ve_delta")?,
        };
        Ok(Self {
            hull,
            gain,
            closed_loop,
            reference_inputs,
            constraints,
            radii,
            lambda: a.scalar("adapt.lambda")?,
            alpha: a.scalar("adapt.alpha")?,
            tube_scale: a.scalar("tubes.scale")?,
            tube_radii,
            terminal: TerminalSet {
                set: xe_t,
                iterations: a.scalar("terminal.iterations")? as usize,
                backoff: a.scalar("terminal.backoff")?,
            },
            tubes,
            stacked,
        })
    }
}
