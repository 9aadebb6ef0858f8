//! Small dense helpers on `Vec<f64>` vectors and `nalgebra` matrices.

use nalgebra::{DMatrix, DVector};

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| x * c).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `(1 - s) a + s b`.
pub fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - s) * x + s * y).collect()
}

pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| scale(v, 1.0 / n))
}

/// Ratio of extreme singular values; infinite for rank-deficient input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn solve(m: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    m.clone().lu().solve(&b).map(|x| x.as_slice().to_vec())
}

/// Minimum-norm solution of the underdetermined full-row-rank system `m x = rhs`.
pub fn min_norm_solve(m: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let mmt = m * m.transpose();
    let w = solve(&mmt, rhs)?;
    let x = m.transpose() * DVector::from_column_slice(&w);
    Some(x.as_slice().to_vec())
}

/// Kernel direction of a `k x (k+1)` matrix via signed maximal minors.
///
/// The returned vector `t` satisfies `det([m; t^T]) = |t|^2`, so it is zero
/// exactly when `m` is rank deficient.
pub fn kernel_vector(m: &DMatrix<f64>) -> Vec<f64> {
    let (k, n) = m.shape();
    debug_assert_eq!(n, k + 1);
    (0..n)
        .map(|j| {
            let minor = m.clone().remove_column(j);
            // Cofactor expansion of det([m; t^T]) along the last row.
            let sign = if (k + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect()
}

/// Matrix whose columns are the given vectors.
pub fn from_columns(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

pub fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().cloned().collect()
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

/// C² smoothstep on [0, 1], clamped outside.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Low-discrepancy point `j` in `[0,1)^d` (additive recurrence on the
/// generalized golden ratio).
pub fn low_discrepancy(j: usize, d: usize) -> Vec<f64> {
    // phi_d is the positive root of x^{d+1} = x + 1.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (0..d)
        .map(|i| {
            let alpha = (1.0 / phi).powi(i as i32 + 1);
            (0.5 + alpha * j as f64).fract()
        })
        .collect()
}
