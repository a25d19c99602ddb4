//! Plant, parameter hull, reference trajectory and error-coordinate sets.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{Ball, GeometryError, Polytope};
use crate::qp::{self, QpError, QpStatus, QuadraticProgram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("input matrix does not have full column rank")]
    RankDeficient,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parameter hull has no vertices")]
    EmptyHull,
    #[error("reference sample {index} lies outside the reference hull (violation {violation:e})")]
    ReferenceOutsideHull { index: usize, violation: f64 },
    #[error("set {0} does not contain the origin in its interior")]
    NotC0(&'static str),
    #[error("projection onto the parameter hull failed: {0:?}")]
    Projection(QpStatus),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Qp(#[from] QpError),
}

/// True plant `x+ = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl PlantModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self, ModelError> {
        if !a.is_square() || a.nrows() != b.nrows() {
            return Err(ModelError::Dimension(format!(
                "A is {:?}, B is {:?}",
                a.shape(),
                b.shape()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn from_theta(theta: &DMatrix<f64>, n: usize) -> Result<Self, ModelError> {
        Self::new(
            theta.columns(0, n).into_owned(),
            theta.columns(n, theta.ncols() - n).into_owned(),
        )
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Lumped parameter `[A, B]`.
    pub fn theta(&self) -> DMatrix<f64> {
        hcat(&self.a, &self.b)
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

pub fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub fn vcat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// Convex hull of parameter matrices `[A_i, B_i]` (n x (n + m)).
/// With `m = 0` it holds plain `n x n` matrices, e.g. closed-loop vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamHull {
    vertices: Vec<DMatrix<f64>>,
    n: usize,
    m: usize,
}

#[derive(Debug, Clone)]
pub struct HullProjection {
    pub point: DMatrix<f64>,
    pub weights: DVector<f64>,
    pub distance: f64,
}

impl ParamHull {
    pub fn new(vertices: Vec<DMatrix<f64>>, n: usize) -> Result<Self, ModelError> {
        let first = vertices.first().ok_or(ModelError::EmptyHull)?;
        let (rows, cols) = first.shape();
        if rows != n || cols < n {
            return Err(ModelError::Dimension(format!(
                "vertex 0 is {rows}x{cols}, state dimension {n}"
            )));
        }
        if let Some(i) = vertices.iter().position(|v| v.shape() != (rows, cols)) {
            return Err(ModelError::Dimension(format!("vertex {i} shape differs")));
        }
        Ok(Self {
            vertices,
            n,
            m: cols - n,
        })
    }

    pub fn from_pairs(pairs: &[(DMatrix<f64>, DMatrix<f64>)]) -> Result<Self, ModelError> {
        let first = pairs.first().ok_or(ModelError::EmptyHull)?;
        let n = first.0.nrows();
        let mut vs = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            if a.shape() != (n, n) || b.nrows() != n || b.ncols() != first.1.ncols() {
                return Err(ModelError::Dimension("vertex pair shapes differ".into()));
            }
            vs.push(hcat(a, b));
        }
        Self::new(vs, n)
    }

    pub fn vertices(&self) -> &[DMatrix<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertex_a(&self, i: usize) -> DMatrix<f64> {
        self.vertices[i].columns(0, self.n).into_owned()
    }

    pub fn vertex_b(&self, i: usize) -> DMatrix<f64> {
        self.vertices[i].columns(self.n, self.m).into_owned()
    }

    pub fn centroid(&self) -> DMatrix<f64> {
        let sum = self
            .vertices
            .iter()
            .fold(DMatrix::zeros(self.n, self.n + self.m), |acc, v| acc + v);
        sum / self.vertices.len() as f64
    }

    pub fn combine(&self, weights: &DVector<f64>) -> DMatrix<f64> {
        self.vertices
            .iter()
            .zip(weights.iter())
            .fold(DMatrix::zeros(self.n, self.n + self.m), |acc, (v, w)| acc + v * *w)
    }

    /// Largest pairwise Frobenius distance between vertices.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.vertices.len() {
            for j in i + 1..self.vertices.len() {
                d = d.max((&self.vertices[i] - &self.vertices[j]).norm());
            }
        }
        d
    }

    /// Frobenius-nearest point of the hull, via a QP over simplex weights.
    pub fn project(&self, m: &DMatrix<f64>) -> Result<HullProjection, ModelError> {
        if m.shape() != self.vertices[0].shape() {
            return Err(ModelError::Dimension(format!(
                "matrix is {:?}, hull vertices are {:?}",
                m.shape(),
                self.vertices[0].shape()
            )));
        }
        let g = self.vertices.len();
        let mut h = DMatrix::zeros(g, g);
        let mut f = DVector::zeros(g);
        for i in 0..g {
            for j in 0..g {
                h[(i, j)] = 2.0 * self.vertices[i].dot(&self.vertices[j]);
            }
            f[i] = -2.0 * self.vertices[i].dot(m);
        }
        let prob = QuadraticProgram::new(h, f)
            .with_inequalities(-DMatrix::identity(g, g), DVector::zeros(g))
            .with_equalities(DMatrix::from_element(1, g, 1.0), DVector::from_element(1, 1.0))
            .with_warm_start(DVector::from_element(g, 1.0 / g as f64));
        let out = qp::solve(&prob)?;
        if out.status != QpStatus::Optimal {
            return Err(ModelError::Projection(out.status));
        }
        let mut w = out.solution.map(|v| v.max(0.0));
        w /= w.sum();
        let point = self.combine(&w);
        let distance = (&point - m).norm();
        Ok(HullProjection {
            point,
            weights: w,
            distance,
        })
    }

    /// Frobenius distance from `m` to the hull.
    pub fn membership_residual(&self, m: &DMatrix<f64>) -> Result<f64, ModelError> {
        Ok(self.project(m)?.distance)
    }

    pub fn contains(&self, m: &DMatrix<f64>, tol: f64) -> Result<bool, ModelError> {
        Ok(self.membership_residual(m)? <= tol)
    }
}

/// Time-indexed reference samples together with the hull they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    samples: Vec<DVector<f64>>,
    hull_vertices: Vec<DVector<f64>>,
    switches: Vec<usize>,
}

impl ReferenceTrajectory {
    /// Piecewise-constant reference. `segments` holds `(start step, value)`
    /// pairs in increasing start order; the first must start at 0. One extra
    /// sample is stored past `len` so that `x^r_{k+1}` exists at the last step.
    pub fn piecewise_constant(
        segments: &[(usize, DVector<f64>)],
        len: usize,
        hull_vertices: Vec<DVector<f64>>,
    ) -> Result<Self, ModelError> {
        if segments.is_empty() || segments[0].0 != 0 {
            return Err(ModelError::Dimension("first segment must start at step 0".into()));
        }
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ModelError::Dimension("segment starts must increase".into()));
        }
        let mut samples = Vec::with_capacity(len + 1);
        for k in 0..=len {
            let seg = segments.iter().rev().find(|(s, _)| *s <= k).expect("first segment at 0");
            samples.push(seg.1.clone());
        }
        Self::new(samples, hull_vertices, segments.iter().map(|s| s.0).collect())
    }

    pub fn new(
        samples: Vec<DVector<f64>>,
        hull_vertices: Vec<DVector<f64>>,
        switches: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let hull = Polytope::from_points(&hull_vertices)?;
        for (index, s) in samples.iter().enumerate() {
            let violation = hull.max_violation(s);
            if violation > 1e-9 {
                return Err(ModelError::ReferenceOutsideHull { index, violation });
            }
        }
        Ok(Self {
            samples,
            hull_vertices,
            switches,
        })
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn at(&self, k: usize) -> &DVector<f64> {
        &self.samples[k.min(self.samples.len() - 1)]
    }

    pub fn hull_vertices(&self) -> &[DVector<f64>] {
        &self.hull_vertices
    }

    pub fn hull(&self) -> Result<Polytope, ModelError> {
        Ok(Polytope::from_points(&self.hull_vertices)?)
    }

    /// Steps at which a constant segment begins.
    pub fn switches(&self) -> &[usize] {
        &self.switches
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceInput {
    pub u: DVector<f64>,
    /// `|| B u - (x^r_{k+1} - A x^r_k) ||`.
    pub residual: f64,
}

/// Least-squares input that moves `xr_k` to `xr_next` under `(a, b)`.
pub fn reference_input(
    xr_k: &DVector<f64>,
    xr_next: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<ReferenceInput, ModelError> {
    let target = xr_next - a * xr_k;
    let sv = b.singular_values();
    if b.ncols() > b.nrows() || sv.min() <= 1e-10 * sv.max().max(1.0) {
        return Err(ModelError::RankDeficient);
    }
    let chol = (b.transpose() * b).cholesky().ok_or(ModelError::RankDeficient)?;
    let u = chol.solve(&(b.transpose() * &target));
    let residual = (b * &u - &target).norm();
    Ok(ReferenceInput { u, residual })
}

#[derive(Debug, Clone)]
pub struct ReferenceInputSet {
    pub set: Polytope,
    /// Diameter of `set`, times the configured safety factor.
    pub d_u: f64,
    pub points: Vec<DVector<f64>>,
}

/// Hull of reference inputs over every hull vertex and every ordered pair of
/// reference-hull vertices.
pub fn build_reference_input_set(
    hull: &ParamHull,
    reference_vertices: &[DVector<f64>],
    safety: f64,
) -> Result<ReferenceInputSet, ModelError> {
    let mut points = Vec::with_capacity(hull.len() * reference_vertices.len().pow(2));
    for i in 0..hull.len() {
        let (a, b) = (hull.vertex_a(i), hull.vertex_b(i));
        for from in reference_vertices {
            for to in reference_vertices {
                points.push(reference_input(from, to, &a, &b)?.u);
            }
        }
    }
    let set = Polytope::from_points(&points)?;
    let d_u = set.diameter()? * safety;
    Ok(ReferenceInputSet { set, d_u, points })
}

/// Physical constraints and their error-coordinate images.
#[derive(Debug, Clone)]
pub struct ConstraintFamily {
    pub x: Polytope,
    pub u: Polytope,
    pub u_delta: Polytope,
    pub xe: Polytope,
    pub ue: Polytope,
    pub ue_delta: Polytope,
    pub xe_delta: Ball,
    pub ur_delta: Ball,
    pub d_u: f64,
    pub d_x: f64,
}

pub fn build_error_constraints(
    x: &Polytope,
    u: &Polytope,
    u_delta: &Polytope,
    xr: &Polytope,
    ur: &Polytope,
    d_u: f64,
) -> Result<ConstraintFamily, ModelError> {
    for (name, p) in [("X", x), ("U", u), ("U_delta", u_delta)] {
        if !p.is_c0() {
            return Err(ModelError::NotC0(name));
        }
    }
    let xe = x.minkowski_sum(&xr.reflect())?;
    let ue = u.minkowski_sum(&ur.reflect())?;
    let ur_delta = Ball::origin(u.dim(), d_u);
    let ue_delta = u_delta.minkowski_sum_ball(&ur_delta)?;
    for (name, p) in [("Xe", &xe), ("Ue", &ue), ("Ue_delta", &ue_delta)] {
        if !p.is_c0() {
            return Err(ModelError::NotC0(name));
        }
    }
    let d_x = xe.diameter()?;
    Ok(ConstraintFamily {
        x: x.clone(),
        u: u.clone(),
        u_delta: u_delta.clone(),
        xe,
        ue,
        ue_delta,
        xe_delta: Ball::origin(x.dim(), d_x),
        ur_delta,
        d_u,
        d_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m2(v: [f64; 4]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &v)
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn reference_input_cases() {
        let a = m2([-0.5, 0.0, 0.5, -0.4]);
        let b = DMatrix::identity(2, 2);
        let zero = reference_input(&v(&[0.0, 0.0]), &v(&[0.0, 0.0]), &a, &b).unwrap();
        assert_eq!(zero.u, v(&[0.0, 0.0]));
        let c = v(&[1.0, 1.0]);
        let r = reference_input(&c, &c, &a, &b).unwrap();
        assert_abs_diff_eq!(r.u[0], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.u[1], 0.9, epsilon = 1e-14);
        assert!(r.residual < 1e-14);
        let expected = (DMatrix::identity(2, 2) - &a) * &c;
        assert!((r.u - expected).amax() < 1e-14);
    }

    #[test]
    fn rank_deficient_input_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let e = reference_input(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &DMatrix::zeros(2, 2), &b);
        assert_eq!(e.unwrap_err(), ModelError::RankDeficient);
    }

    #[test]
    fn unreachable_reference_has_residual() {
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let r = reference_input(&v(&[0.0, 0.0]), &v(&[1.0, 1.0]), &DMatrix::zeros(2, 2), &b).unwrap();
        assert_abs_diff_eq!(r.u[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.residual, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn singleton_reference_set() {
        let hull = ParamHull::from_pairs(&[(m2([0.2, 0.0, 0.0, 0.3]), DMatrix::identity(2, 2))]).unwrap();
        let s = build_reference_input_set(&hull, &[v(&[0.5, 0.5])], 1.0).unwrap();
        assert_eq!(s.d_u, 0.0);
        assert_eq!(s.set.vertices().unwrap().len(), 1);
    }

    #[test]
    fn symmetric_reference_set() {
        let hull = ParamHull::from_pairs(&[
            (m2([0.2, 0.0, 0.0, 0.3]), DMatrix::identity(2, 2)),
            (m2([-0.1, 0.1, 0.0, 0.3]), DMatrix::identity(2, 2)),
        ])
        .unwrap();
        let corners: Vec<DVector<f64>> = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
            .iter()
            .map(|c| v(c))
            .collect();
        let s = build_reference_input_set(&hull, &corners, 1.0).unwrap();
        assert!(s.set.hausdorff(&s.set.reflect()).unwrap() < 1e-10);
    }

    #[test]
    fn error_constraints_regulation_case() {
        let x = Polytope::symmetric_box(&[2.0, 2.0]).unwrap();
        let u = Polytope::symmetric_box(&[3.0, 3.0]).unwrap();
        let du = Polytope::symmetric_box(&[1.0, 1.0]).unwrap();
        let origin = Polytope::from_points(&[v(&[0.0, 0.0])]).unwrap();
        let fam = build_error_constraints(&x, &u, &du, &origin, &origin, 0.0).unwrap();
        assert!(fam.xe.hausdorff(&x).unwrap() < 1e-12);
        assert!(fam.ue.hausdorff(&u).unwrap() < 1e-12);
        assert!(fam.ue_delta.hausdorff(&du).unwrap() < 1e-12);
    }

    #[test]
    fn error_state_box() {
        let x = Polytope::symmetric_box(&[2.25, 2.25]).unwrap();
        let xr = Polytope::symmetric_box(&[1.0, 1.0]).unwrap();
        let u = Polytope::symmetric_box(&[3.0, 3.0]).unwrap();
        let fam = build_error_constraints(&x, &u, &u, &xr, &xr, 1.0).unwrap();
        let expected = Polytope::symmetric_box(&[3.25, 3.25]).unwrap();
        assert!(fam.xe.hausdorff(&expected).unwrap() < 1e-12);
        assert_abs_diff_eq!(fam.d_x, 6.5 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn hull_projection_of_segment() {
        let hull = ParamHull::new(vec![DMatrix::from_row_slice(1, 2, &[0.0, 0.0]), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])], 1).unwrap();
        let p = hull.project(&DMatrix::from_row_slice(1, 2, &[0.25, 3.0])).unwrap();
        assert_abs_diff_eq!(p.point[(0, 0)], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.point[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.distance, 3.0, epsilon = 1e-12);
        let past = hull.project(&DMatrix::from_row_slice(1, 2, &[2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(past.point[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn piecewise_reference() {
        let corners: Vec<DVector<f64>> = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
            .iter()
            .map(|c| v(c))
            .collect();
        let r = ReferenceTrajectory::piecewise_constant(
            &[(0, v(&[1.0, -1.0])), (3, v(&[-1.0, 1.0]))],
            5,
            corners.clone(),
        )
        .unwrap();
        assert_eq!(r.samples().len(), 6);
        assert_eq!(r.at(2), &v(&[1.0, -1.0]));
        assert_eq!(r.at(3), &v(&[-1.0, 1.0]));
        assert_eq!(r.switches(), &[0, 3]);
        let bad = ReferenceTrajectory::piecewise_constant(&[(0, v(&[2.0, 0.0]))], 2, corners);
        assert!(matches!(bad, Err(ModelError::ReferenceOutsideHull { .. })));
    }
}
