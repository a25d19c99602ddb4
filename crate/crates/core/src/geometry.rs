//! Convex polytopes in H-representation and Euclidean balls.
//!
//! Normals are stored with unit Euclidean length. Vertices are enumerated
//! eagerly for dimension up to [`MAX_VERTEX_DIM`]; above that only
//! support-function operations are available.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;
use crate::qp::{self, QpError, QpStatus, QuadraticProgram};

pub const MAX_VERTEX_DIM: usize = 4;
/// Number of points in the inner polygon used for 2-D ball sums.
pub const BALL_POLYGON_SIDES: usize = 64;

const VERTEX_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("set is unbounded")]
    Unbounded,
    #[error("set is empty")]
    Empty,
    #[error("vertex enumeration unsupported in dimension {0}")]
    VertexDimension(usize),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("facet normal {0} is zero")]
    ZeroNormal(usize),
    #[error("linear program failed: {0}")]
    Solver(#[from] QpError),
}

/// Anything with a computable support function `h(d) = max <d, x>`.
pub trait SupportFunction {
    fn dim(&self) -> usize;
    fn support(&self, d: &DVector<f64>) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: DVector<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: DVector<f64>, radius: f64) -> Self {
        assert!(radius >= 0.0, "ball radius must be nonnegative");
        Self { center, radius }
    }

    pub fn origin(dim: usize, radius: f64) -> Self {
        Self::new(DVector::zeros(dim), radius)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (x - &self.center).norm() <= self.radius + tol
    }

    /// Regular polygon inscribed in the ball (2-D only).
    pub fn inner_polygon(&self, sides: usize) -> Result<Polytope, GeometryError> {
        if self.center.len() != 2 {
            return Err(GeometryError::Dimension {
                expected: 2,
                got: self.center.len(),
            });
        }
        if self.radius == 0.0 {
            return Polytope::from_points(std::slice::from_ref(&self.center));
        }
        let pts: Vec<DVector<f64>> = (0..sides)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
                &self.center + DVector::from_vec(vec![t.cos(), t.sin()]) * self.radius
            })
            .collect();
        Polytope::from_points(&pts)
    }
}

impl SupportFunction for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn support(&self, d: &DVector<f64>) -> f64 {
        d.dot(&self.center) + self.radius * d.norm()
    }
}

/// The image `M * Ball` of a ball under a linear map.
#[derive(Debug, Clone)]
pub struct MappedBall {
    pub map: DMatrix<f64>,
    pub ball: Ball,
}

impl SupportFunction for MappedBall {
    fn dim(&self) -> usize {
        self.map.nrows()
    }

    fn support(&self, d: &DVector<f64>) -> f64 {
        let dt = self.map.transpose() * d;
        dt.dot(&self.ball.center) + self.ball.radius * dt.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    normals: DMatrix<f64>,
    offsets: DVector<f64>,
    vertices: Option<Vec<DVector<f64>>>,
}

impl Polytope {
    /// Builds `{x : A x <= b}`. Rows are normalized and exact duplicates
    /// merged; the set must be nonempty and bounded.
    pub fn new(normals: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self, GeometryError> {
        if normals.nrows() != offsets.len() {
            return Err(GeometryError::Dimension {
                expected: normals.nrows(),
                got: offsets.len(),
            });
        }
        let n = normals.ncols();
        let mut rows: Vec<(DVector<f64>, f64)> = Vec::with_capacity(offsets.len());
        for i in 0..offsets.len() {
            let a: DVector<f64> = normals.row(i).transpose();
            let norm = a.norm();
            if norm == 0.0 {
                if offsets[i] < 0.0 {
                    return Err(GeometryError::Empty);
                }
                return Err(GeometryError::ZeroNormal(i));
            }
            // Leave rows that are already unit length bit-for-bit unchanged.
            let norm = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON { 1.0 } else { norm };
            let a = a / norm;
            let b = offsets[i] / norm;
            if let Some(existing) = rows.iter_mut().find(|(r, _)| (r - &a).amax() <= 1e-12) {
                existing.1 = existing.1.min(b);
            } else {
                rows.push((a, b));
            }
        }
        let mut normals = DMatrix::zeros(rows.len(), n);
        let mut offs = DVector::zeros(rows.len());
        for (i, (a, b)) in rows.iter().enumerate() {
            normals.row_mut(i).copy_from(&a.transpose());
            offs[i] = *b;
        }
        let mut p = Self {
            normals,
            offsets: offs,
            vertices: None,
        };
        if n <= MAX_VERTEX_DIM {
            let verts = p.enumerate_vertices();
            if verts.is_empty() {
                return Err(if p.is_feasible_lp()? {
                    GeometryError::Unbounded
                } else {
                    GeometryError::Empty
                });
            }
            p.vertices = Some(verts);
        } else if !p.is_feasible_lp()? {
            return Err(GeometryError::Empty);
        }
        p.check_bounded()?;
        Ok(p)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn hyperbox(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        assert_eq!(lo.len(), hi.len());
        let n = lo.len();
        let mut a = DMatrix::zeros(2 * n, n);
        let mut b = DVector::zeros(2 * n);
        for i in 0..n {
            a[(2 * i, i)] = 1.0;
            b[2 * i] = hi[i];
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -lo[i];
        }
        Self::new(a, b)
    }

    /// Box `{x : |x_i| <= r_i}`.
    pub fn symmetric_box(radii: &[f64]) -> Result<Self, GeometryError> {
        let lo: Vec<f64> = radii.iter().map(|r| -r).collect();
        Self::hyperbox(&lo, radii)
    }

    /// Convex hull of a finite point set.
    pub fn from_points(points: &[DVector<f64>]) -> Result<Self, GeometryError> {
        let first = points.first().ok_or(GeometryError::Empty)?;
        let n = first.len();
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(GeometryError::Dimension {
                expected: n,
                got: p.len(),
            });
        }
        if n > MAX_VERTEX_DIM {
            return Err(GeometryError::VertexDimension(n));
        }
        let (a, b) = hull_hrep(points);
        Self::new(a, b)
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    pub fn num_facets(&self) -> usize {
        self.offsets.len()
    }

    pub fn vertices(&self) -> Result<&[DVector<f64>], GeometryError> {
        self.vertices
            .as_deref()
            .ok_or(GeometryError::VertexDimension(self.dim()))
    }

    /// Origin strictly inside.
    pub fn is_c0(&self) -> bool {
        self.offsets.iter().all(|b| *b > 0.0)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        (&self.normals * x - &self.offsets).iter().all(|v| *v <= tol)
    }

    /// Largest value of `a_i x - b_i`; nonpositive iff `x` is inside.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        (&self.normals * x - &self.offsets).max()
    }

    pub fn support(&self, d: &DVector<f64>) -> Result<f64, GeometryError> {
        if d.len() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                got: d.len(),
            });
        }
        if let Some(v) = &self.vertices {
            return Ok(v.iter().map(|x| d.dot(x)).fold(f64::NEG_INFINITY, f64::max));
        }
        self.support_lp(d)
    }

    fn support_lp(&self, d: &DVector<f64>) -> Result<f64, GeometryError> {
        let n = self.dim();
        let lp = QuadraticProgram::new(DMatrix::zeros(n, n), -d)
            .with_inequalities(self.normals.clone(), self.offsets.clone());
        let out = qp::solve(&lp).map_err(|e| match e {
            QpError::Unbounded => GeometryError::Unbounded,
            other => GeometryError::Solver(other),
        })?;
        match out.status {
            QpStatus::Optimal => Ok(d.dot(&out.solution)),
            _ => Err(GeometryError::Empty),
        }
    }

    fn is_feasible_lp(&self) -> Result<bool, GeometryError> {
        let n = self.dim();
        let lp = QuadraticProgram::new(DMatrix::identity(n, n), DVector::zeros(n))
            .with_inequalities(self.normals.clone(), self.offsets.clone());
        Ok(qp::solve(&lp)?.status == QpStatus::Optimal)
    }

    fn check_bounded(&self) -> Result<(), GeometryError> {
        if self.vertices.is_some() {
            // Bounded iff the normals positively span: compare vertex and LP
            // supports along the coordinate directions.
            for j in 0..self.dim() {
                for s in [1.0, -1.0] {
                    let mut d = DVector::zeros(self.dim());
                    d[j] = s;
                    let hv = self.support(&d)?;
                    let hl = self.support_lp(&d)?;
                    if hl > hv + 1e-7 * (1.0 + hv.abs()) {
                        return Err(GeometryError::Unbounded);
                    }
                }
            }
            return Ok(());
        }
        for j in 0..self.dim() {
            for s in [1.0, -1.0] {
                let mut d = DVector::zeros(self.dim());
                d[j] = s;
                self.support_lp(&d)?;
            }
        }
        Ok(())
    }

    fn enumerate_vertices(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        let m = self.offsets.len();
        let mut out: Vec<DVector<f64>> = Vec::new();
        if n == 0 {
            return out;
        }
        let scale = 1.0 + self.offsets.amax();
        for subset in linalg::combinations(m, n) {
            let a = linalg::select_rows(&self.normals, &subset);
            let b = DVector::from_iterator(n, subset.iter().map(|&i| self.offsets[i]));
            let svd = a.svd(true, true);
            if svd.singular_values.min() < 1e-10 {
                continue;
            }
            let Ok(x) = svd.solve(&b, 0.0) else { continue };
            if self.max_violation(&x) > VERTEX_TOL * scale {
                continue;
            }
            if !out.iter().any(|v| (v - &x).amax() <= 1e-9 * scale) {
                out.push(x);
            }
        }
        out
    }

    pub fn scale(&self, gamma: f64) -> Result<Self, GeometryError> {
        if gamma <= 0.0 {
            return Err(GeometryError::NonPositiveScale(gamma));
        }
        Ok(Self {
            normals: self.normals.clone(),
            offsets: &self.offsets * gamma,
            vertices: self
                .vertices
                .as_ref()
                .map(|v| v.iter().map(|x| x * gamma).collect()),
        })
    }

    /// `{-x : x in self}`.
    pub fn reflect(&self) -> Self {
        Self {
            normals: -&self.normals,
            offsets: self.offsets.clone(),
            vertices: self
                .vertices
                .as_ref()
                .map(|v| v.iter().map(|x| -x).collect()),
        }
    }

    pub fn translate(&self, t: &DVector<f64>) -> Self {
        Self {
            offsets: &self.offsets + &self.normals * t,
            normals: self.normals.clone(),
            vertices: self
                .vertices
                .as_ref()
                .map(|v| v.iter().map(|x| x + t).collect()),
        }
    }

    pub fn intersect(&self, other: &Self) -> Result<Self, GeometryError> {
        self.check_dim(other.dim())?;
        let a = stack_rows(&self.normals, &other.normals);
        let mut b = DVector::zeros(self.offsets.len() + other.offsets.len());
        b.rows_mut(0, self.offsets.len()).copy_from(&self.offsets);
        b.rows_mut(self.offsets.len(), other.offsets.len())
            .copy_from(&other.offsets);
        Self::new(a, b)
    }

    /// Minkowski sum. In two dimensions the facets of the sum are exactly the
    /// union of the operands' facet directions, so only supports are needed.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self, GeometryError> {
        self.check_dim(other.dim())?;
        let n = self.dim();
        if n <= 2 && self.is_full_dim() && other.is_full_dim() {
            let a = stack_rows(&self.normals, &other.normals);
            let mut b = DVector::zeros(a.nrows());
            for i in 0..a.nrows() {
                let d: DVector<f64> = a.row(i).transpose();
                b[i] = self.support(&d)? + other.support(&d)?;
            }
            return Self::new(a, b);
        }
        let pv = self.vertices()?;
        let qv = other.vertices()?;
        let sums: Vec<DVector<f64>> = pv
            .iter()
            .flat_map(|x| qv.iter().map(move |y| x + y))
            .collect();
        Self::from_points(&sums)
    }

    /// Minkowski sum with a ball, using an inscribed polygon for the ball
    /// (so the result is contained in the exact sum).
    pub fn minkowski_sum_ball(&self, ball: &Ball) -> Result<Self, GeometryError> {
        self.check_dim(ball.dim())?;
        if ball.radius == 0.0 {
            return Ok(self.translate(&ball.center));
        }
        match self.dim() {
            1 => {
                let r = ball.radius;
                let seg = Self::hyperbox(&[ball.center[0] - r], &[ball.center[0] + r])?;
                self.minkowski_sum(&seg)
            }
            2 => self.minkowski_sum(&ball.inner_polygon(BALL_POLYGON_SIDES)?),
            n => Err(GeometryError::VertexDimension(n)),
        }
    }

    /// Pontryagin difference `{x : x + Q subset of self}`, exact for any
    /// subtrahend with a support function.
    pub fn pontryagin_diff<S: SupportFunction + ?Sized>(&self, q: &S) -> Result<Self, GeometryError> {
        self.check_dim(q.dim())?;
        let mut b = self.offsets.clone();
        for i in 0..b.len() {
            let a: DVector<f64> = self.normals.row(i).transpose();
            b[i] -= q.support(&a);
        }
        Self::new(self.normals.clone(), b)
    }

    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<Self, GeometryError> {
        if m.ncols() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                got: m.ncols(),
            });
        }
        let pts: Vec<DVector<f64>> = self.vertices()?.iter().map(|v| m * v).collect();
        Self::from_points(&pts)
    }

    pub fn diameter(&self) -> Result<f64, GeometryError> {
        let v = self.vertices()?;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max((&v[i] - &v[j]).norm());
            }
        }
        Ok(d)
    }

    /// Largest `h` with the cube `[-h, h]^n` inside the set.
    pub fn inscribed_box_radius(&self) -> f64 {
        (0..self.offsets.len())
            .map(|i| self.offsets[i] / self.normals.row(i).abs().sum())
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        if self.contains(x, 0.0) {
            return Ok(0.0);
        }
        let n = self.dim();
        let prob = QuadraticProgram::new(DMatrix::identity(n, n), -x)
            .with_inequalities(self.normals.clone(), self.offsets.clone());
        let out = qp::solve(&prob)?;
        if out.status != QpStatus::Optimal {
            return Err(GeometryError::Empty);
        }
        Ok((&out.solution - x).norm())
    }

    pub fn hausdorff(&self, other: &Self) -> Result<f64, GeometryError> {
        self.check_dim(other.dim())?;
        let mut h: f64 = 0.0;
        for v in self.vertices()? {
            h = h.max(other.distance(v)?);
        }
        for v in other.vertices()? {
            h = h.max(self.distance(v)?);
        }
        Ok(h)
    }

    /// `self` inside `other`, checked at the vertices of `self`.
    pub fn is_subset_of(&self, other: &Self, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.vertices()?.iter().all(|v| other.contains(v, tol)))
    }

    /// Drops rows that touch fewer than `dim` vertices. Lower-dimensional
    /// sets and sets without a vertex cache are returned unchanged.
    pub fn remove_redundant(&self) -> Result<Self, GeometryError> {
        let Some(verts) = &self.vertices else {
            return Ok(self.clone());
        };
        if !self.is_full_dim() {
            return Ok(self.clone());
        }
        let n = self.dim();
        let keep: Vec<usize> = (0..self.offsets.len())
            .filter(|&i| {
                let tol = 1e-9 * (1.0 + self.offsets[i].abs());
                verts
                    .iter()
                    .filter(|v| (self.normals.row(i).dot(&v.transpose()) - self.offsets[i]).abs() <= tol)
                    .count()
                    >= n
            })
            .collect();
        if keep.len() == self.offsets.len() {
            return Ok(self.clone());
        }
        let a = linalg::select_rows(&self.normals, &keep);
        let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.offsets[i]));
        Self::new(a, b)
    }

    fn is_full_dim(&self) -> bool {
        // Lower-dimensional sets are stored with opposing row pairs.
        let m = self.offsets.len();
        for i in 0..m {
            for j in i + 1..m {
                let opposite = (self.normals.row(i) + self.normals.row(j)).amax() <= 1e-12;
                if opposite && (self.offsets[i] + self.offsets[j]).abs() <= 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    fn check_dim(&self, got: usize) -> Result<(), GeometryError> {
        if got != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

impl SupportFunction for Polytope {
    fn dim(&self) -> usize {
        self.normals.ncols()
    }

    fn support(&self, d: &DVector<f64>) -> f64 {
        Polytope::support(self, d).expect("bounded polytope has finite support")
    }
}

fn stack_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// H-representation of the convex hull of `points` (dimension at most 4).
fn hull_hrep(points: &[DVector<f64>]) -> (DMatrix<f64>, DVector<f64>) {
    let n = points[0].len();
    let k = points.len() as f64;
    let centroid = points.iter().fold(DVector::zeros(n), |acc, p| acc + p) / k;
    let centered = DMatrix::from_columns(&points.iter().map(|p| p - &centroid).collect::<Vec<_>>());
    let spread = centered.amax();
    let svd = centered.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let tol = 1e-10 * (1.0 + spread);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let basis_idx: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > tol)
        .collect();
    let r = basis_idx.len();
    let basis = if r == 0 {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&basis_idx.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>())
    };

    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    if r > 0 {
        let local: Vec<DVector<f64>> = points
            .iter()
            .map(|p| basis.transpose() * (p - &centroid))
            .collect();
        for (a, b) in full_dim_hull(&local) {
            let lifted = &basis * a;
            rows.push((lifted.clone(), b + lifted.dot(&centroid)));
        }
    }
    // Equality rows for the directions the points do not span.
    let complement = if r == 0 {
        DMatrix::identity(n, n)
    } else {
        linalg::null_space(&basis.transpose())
    };
    for c in complement.column_iter() {
        let c = c.into_owned();
        let off = c.dot(&centroid);
        rows.push((c.clone(), off));
        rows.push((-c, -off));
    }
    let mut a = DMatrix::zeros(rows.len(), n);
    let mut b = DVector::zeros(rows.len());
    for (i, (ai, bi)) in rows.into_iter().enumerate() {
        a.row_mut(i).copy_from(&ai.transpose());
        b[i] = bi;
    }
    (a, b)
}

/// Facets `(a, b)` of the hull of points that affinely span their space.
fn full_dim_hull(points: &[DVector<f64>]) -> Vec<(DVector<f64>, f64)> {
    let d = points[0].len();
    match d {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            vec![
                (DVector::from_vec(vec![1.0]), hi),
                (DVector::from_vec(vec![-1.0]), -lo),
            ]
        }
        2 => monotone_chain(points)
            .windows(2)
            .map(|w| edge_facet(&w[0], &w[1]))
            .collect(),
        _ => brute_force_facets(points),
    }
}

fn edge_facet(p: &DVector<f64>, q: &DVector<f64>) -> (DVector<f64>, f64) {
    // Counter-clockwise order: outward normal is the edge rotated clockwise.
    let e = q - p;
    let a = DVector::from_vec(vec![e[1], -e[0]]);
    let a = &a / a.norm();
    let b = a.dot(p);
    (a, b)
}

/// Counter-clockwise hull vertices, closed (first point repeated at the end).
fn monotone_chain(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    let spread = pts
        .iter()
        .fold(0.0f64, |m, p| m.max(p.0.abs()).max(p.1.abs()));
    let eps = 1e-12 * (1.0 + spread * spread);
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    hull.into_iter()
        .map(|(x, y)| DVector::from_vec(vec![x, y]))
        .collect()
}

fn brute_force_facets(points: &[DVector<f64>]) -> Vec<(DVector<f64>, f64)> {
    let d = points[0].len();
    let spread = points.iter().map(|p| p.amax()).fold(0.0, f64::max);
    let tol = 1e-9 * (1.0 + spread);
    let mut facets: Vec<(DVector<f64>, f64)> = Vec::new();
    for subset in linalg::combinations(points.len(), d) {
        let base = &points[subset[0]];
        let diffs: Vec<DVector<f64>> = subset[1..].iter().map(|&i| &points[i] - base).collect();
        let m = DMatrix::from_rows(&diffs.iter().map(|v| v.transpose()).collect::<Vec<_>>());
        let z = linalg::null_space(&m);
        if z.ncols() != 1 {
            continue;
        }
        let mut a: DVector<f64> = z.column(0).into_owned();
        let mut b = a.dot(base);
        let vals: Vec<f64> = points.iter().map(|p| a.dot(p) - b).collect();
        let above = vals.iter().any(|v| *v > tol);
        let below = vals.iter().any(|v| *v < -tol);
        if above && below {
            continue;
        }
        if above {
            a = -a;
            b = -b;
        }
        if !facets
            .iter()
            .any(|(fa, fb)| (fa - &a).amax() <= 1e-9 && (fb - b).abs() <= tol)
        {
            facets.push((a, b));
        }
    }
    facets
}
