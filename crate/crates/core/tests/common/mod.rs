#![allow(dead_code)]

use ampc::geometry::Polytope;
use ampc::qp::QuadraticProgram;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v2(a: f64, b: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b])
}

/// Hull of 3 to 8 random points spread around the origin, scaled by `radius`.
pub fn random_polygon(rng: &mut ChaCha8Rng, radius: f64) -> Polytope {
    loop {
        let count = rng.gen_range(3..=8);
        let pts: Vec<DVector<f64>> = (0..count)
            .map(|i| {
                let base = std::f64::consts::TAU * i as f64 / count as f64;
                let ang = base + rng.gen_range(-0.3..0.3);
                let r = radius * rng.gen_range(0.4..1.0);
                v2(r * ang.cos(), r * ang.sin())
            })
            .collect();
        if let Ok(p) = Polytope::from_points(&pts) {
            if p.is_c0() {
                return p;
            }
        }
    }
}

pub fn vertex_max(p: &Polytope, d: &DVector<f64>) -> f64 {
    p.vertices()
        .unwrap()
        .iter()
        .map(|v| v.dot(d))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Hull of all pairwise vertex sums.
pub fn minkowski_oracle(p: &Polytope, q: &Polytope) -> Polytope {
    let mut pts = Vec::new();
    for a in p.vertices().unwrap() {
        for b in q.vertices().unwrap() {
            pts.push(a + b);
        }
    }
    Polytope::from_points(&pts).unwrap()
}

/// Points of a `count x count` grid over the bounding box of `p`, padded by 10%.
pub fn grid_over(p: &Polytope, count: usize) -> Vec<DVector<f64>> {
    let verts = p.vertices().unwrap();
    let lo: Vec<f64> = (0..2).map(|j| verts.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..2).map(|j| verts.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut out = Vec::with_capacity(count * count);
    for i in 0..count {
        for j in 0..count {
            let t = |k: usize, idx: usize| {
                let pad = 0.1 * (hi[k] - lo[k]);
                lo[k] - pad + (hi[k] - lo[k] + 2.0 * pad) * idx as f64 / (count - 1) as f64
            };
            out.push(v2(t(0, i), t(1, j)));
        }
    }
    out
}

/// Strictly convex two-variable QP whose feasible set contains the origin and
/// lies inside the box `[-2, 2]^2`.
pub fn random_qp(rng: &mut ChaCha8Rng) -> QuadraticProgram {
    let l = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.5..1.5));
    let h = &l * l.transpose() + DMatrix::identity(2, 2) * 0.1;
    let f = DVector::from_fn(2, |_, _| rng.gen_range(-4.0..4.0));
    let extra = rng.gen_range(1..=4);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (a, b) in [([1.0, 0.0], 2.0), ([-1.0, 0.0], 2.0), ([0.0, 1.0], 2.0), ([0.0, -1.0], 2.0)] {
        rows.push(a.to_vec());
        rhs.push(b);
    }
    for _ in 0..extra {
        rows.push(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        rhs.push(rng.gen_range(0.05..1.0));
    }
    let a = DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j]);
    QuadraticProgram::new(h, f).with_inequalities(a, DVector::from_vec(rhs))
}

/// Feasible grid point of least objective, refined by repeated zooming.
pub fn grid_search(qp: &QuadraticProgram) -> (DVector<f64>, f64) {
    let h = [qp.hessian[(0, 0)], qp.hessian[(0, 1)], qp.hessian[(1, 1)]];
    let f = [qp.linear[0], qp.linear[1]];
    let rows: Vec<[f64; 3]> = (0..qp.a_ineq.nrows())
        .map(|i| [qp.a_ineq[(i, 0)], qp.a_ineq[(i, 1)], qp.b_ineq[i]])
        .collect();
    let obj = |x: f64, y: f64| 0.5 * (h[0] * x * x + 2.0 * h[1] * x * y + h[2] * y * y) + f[0] * x + f[1] * y;
    let feasible = |x: f64, y: f64| rows.iter().all(|r| r[0] * x + r[1] * y <= r[2]);
    let pts = 200;
    let (mut cx, mut cy) = (0.0, 0.0);
    let mut half = 2.0;
    let mut best = (0.0, 0.0, obj(0.0, 0.0));
    while half > 1e-9 {
        let step = 2.0 * half / pts as f64;
        for i in 0..=pts {
            let x = cx - half + step * i as f64;
            for j in 0..=pts {
                let y = cy - half + step * j as f64;
                if feasible(x, y) {
                    let v = obj(x, y);
                    if v < best.2 {
                        best = (x, y, v);
                    }
                }
            }
        }
        cx = best.0;
        cy = best.1;
        half = 25.0 * step;
    }
    (v2(best.0, best.1), best.2)
}

/// Nearest point of the hull of `vertices`, by solving the affine least
/// squares problem on every face and keeping feasible candidates.
pub fn hull_projection_oracle(vertices: &[DMatrix<f64>], m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let g = vertices.len();
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for mask in 1u32..(1 << g) {
        let idx: Vec<usize> = (0..g).filter(|i| mask & (1 << i) != 0).collect();
        let s = idx.len();
        let mut kkt = DMatrix::zeros(s + 1, s + 1);
        let mut rhs = DVector::zeros(s + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                kkt[(a, b)] = 2.0 * vertices[i].dot(&vertices[j]);
            }
            kkt[(a, s)] = 1.0;
            kkt[(s, a)] = 1.0;
            rhs[a] = 2.0 * vertices[i].dot(m);
        }
        rhs[s] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if sol.rows(0, s).iter().any(|w| *w < -1e-12) {
            continue;
        }
        let mut p = DMatrix::zeros(m.nrows(), m.ncols());
        for (a, &i) in idx.iter().enumerate() {
            p += &vertices[i] * sol[a];
        }
        let d = (&p - m).norm();
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((p, d));
        }
    }
    best.expect("some vertex is always a candidate")
}
