//! Small dense helpers shared by the solver and the set code.

use nalgebra::{DMatrix, DVector};

/// Orthonormal basis of the null space of `a` as columns.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if m == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to square so the SVD returns a full right basis.
    let rows = m.max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.max();
    let tol = 1e-10 * (1.0 + top);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Component of `v` orthogonal to the orthonormal `basis`, normalized;
/// `None` when `v` already lies in its span.
pub fn orthogonal_residual(basis: &[DVector<f64>], v: &DVector<f64>) -> Option<DVector<f64>> {
    let norm = v.norm();
    if norm == 0.0 {
        return None;
    }
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&r);
            r -= q * c;
        }
    }
    let rn = r.norm();
    if rn <= 1e-9 * norm {
        None
    } else {
        Some(r / rn)
    }
}

pub fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), a.ncols());
    for (k, &i) in rows.iter().enumerate() {
        out.row_mut(k).copy_from(&a.row(i));
    }
    out
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    let s = (sym + sym.transpose()) * 0.5;
    s.symmetric_eigen().eigenvalues.min()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
