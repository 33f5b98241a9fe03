//! Dense least squares through a complete orthogonal decomposition.
//!
//! `A P = Q [R11 R12; 0 0]` is computed with column-pivoted Householder QR,
//! stopping once the remaining column norms fall below `rcond * |R_00|`.
//! When the numerical rank `r` is smaller than the column count, the
//! trapezoid `[R11 R12]` is reduced to `[U 0] Z` by right-hand reflectors so
//! the returned solution is the minimum-norm minimizer. This mirrors LAPACK's
//! `xGELSY` path.

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ColMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Build from row-major data.
    pub fn from_rows(rows: usize, cols: usize, row_major: &[f64]) -> Self {
        assert_eq!(row_major.len(), rows * cols);
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[j * rows + i] = row_major[i * cols + j];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), &mut y);
            }
        }
        y
    }

    /// `A^T y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), y)).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm2(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * s.sqrt()
}

/// Householder reflector `I - tau v v^T` with `v[0] = 1` mapping `x` onto
/// `beta e_1`. Overwrites `x[1..]` with `v[1..]`, returns `(beta, tau)`.
fn make_reflector(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let tail = norm2(&x[1..]);
    if tail == 0.0 {
        return (alpha, 0.0);
    }
    let beta = -alpha.signum() * alpha.hypot(tail);
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    x[1..].iter_mut().for_each(|v| *v *= scale);
    x[0] = 1.0;
    (beta, tau)
}

/// Apply `I - tau v v^T` (with `v[0] = 1` implied) to `y`.
#[inline]
fn apply_reflector(v: &[f64], tau: f64, y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let w = y[0] + dot(&v[1..], &y[1..]);
    let s = -tau * w;
    y[0] += s;
    axpy(s, &v[1..], &mut y[1..]);
}

/// Output of [`solve_least_squares`].
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresSolution {
    pub x: Vec<f64>,
    /// Numerical rank detected by the pivoted factorization.
    pub rank: usize,
}

/// Default relative rank tolerance: machine epsilon times the larger dimension.
pub fn default_rcond(rows: usize, cols: usize) -> f64 {
    f64::EPSILON * rows.max(cols) as f64
}

/// Minimizer of `||A x - b||_2` for a design with full column rank, by
/// unpivoted blocked QR. Much faster than [`solve_least_squares`] on large
/// systems, but gives no rank information; callers must guarantee the rank,
/// e.g. by appending `sqrt(lambda) I` rows.
pub fn solve_full_rank(a: &ColMatrix, b: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::SolveLstsq;

    let (rows, cols) = (a.rows, a.cols);
    if b.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, got: b.len() });
    }
    if rows < cols {
        return Err(Error::InvalidArgument(format!("{rows} rows cannot determine {cols} unknowns")));
    }
    if a.data.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares system"));
    }
    let m = faer::MatRef::from_column_major_slice(&a.data, rows, cols);
    let rhs = faer::Col::<f64>::from_fn(rows, |i| b[i]);
    let x = m.qr().solve_lstsq(&rhs);
    let x: Vec<f64> = (0..cols).map(|i| x[i]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares solution"));
    }
    Ok(x)
}

/// Minimum-norm minimizer of `||A x - b||_2`.
pub fn solve_least_squares(mut a: ColMatrix, b: &[f64], rcond: f64) -> Result<LeastSquaresSolution> {
    let (rows, cols) = (a.rows, a.cols);
    if b.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, got: b.len() });
    }
    if a.data.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares system"));
    }
    if !(0.0..1.0).contains(&rcond) {
        return Err(Error::InvalidArgument(format!("rcond = {rcond} must lie in [0, 1)")));
    }
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut norms: Vec<f64> = (0..cols).map(|j| norm2(a.col(j))).collect();
    let mut norms_ref = norms.clone();
    let steps = rows.min(cols);
    let mut tol = 0.0;
    let mut rank = 0;
    let eps_sqrt = f64::EPSILON.sqrt();

    for j in 0..steps {
        let mut p = j;
        for k in j + 1..cols {
            if norms[k] > norms[p] {
                p = k;
            }
        }
        if norms[p] == 0.0 || (j > 0 && norms[p] <= tol) {
            break;
        }
        if p != j {
            let (lo, hi) = a.data.split_at_mut(p * rows);
            lo[j * rows..(j + 1) * rows].swap_with_slice(&mut hi[..rows]);
            perm.swap(j, p);
            norms.swap(j, p);
            norms_ref.swap(j, p);
        }

        let (head, tail) = a.data.split_at_mut((j + 1) * rows);
        let vcol = &mut head[j * rows..];
        let (beta, tau) = make_reflector(&mut vcol[j..]);
        if j == 0 {
            tol = rcond * beta.abs();
        }
        let v = &vcol[j..];
        for (k, col) in tail.chunks_exact_mut(rows).enumerate() {
            let k = k + j + 1;
            apply_reflector(v, tau, &mut col[j..]);
            if norms[k] != 0.0 {
                let ratio = col[j].abs() / norms[k];
                let temp = (1.0 - ratio * ratio).max(0.0);
                let temp2 = temp * (norms[k] / norms_ref[k]).powi(2);
                if temp2 <= eps_sqrt {
                    norms[k] = norm2(&col[j + 1..]);
                    norms_ref[k] = norms[k];
                } else {
                    norms[k] *= temp.sqrt();
                }
            }
        }
        apply_reflector(v, tau, &mut rhs[j..]);
        vcol[j] = beta;
        rank = j + 1;
    }

    let r = rank;
    let mut x = vec![0.0; cols];
    if r == 0 {
        return Ok(LeastSquaresSolution { x, rank });
    }

    // Row-major copy of the trapezoid [R11 R12] (r x cols).
    let mut trap = vec![0.0; r * cols];
    for j in 0..cols {
        let col = a.col(j);
        for i in 0..r.min(j + 1) {
            trap[i * cols + j] = col[i];
        }
    }
    drop(a);

    // Right-hand reflectors reducing [R11 R12] to [U 0]; reflector i acts on
    // coordinate i and the trailing block r..cols.
    let extra = cols - r;
    let mut zv = vec![0.0; r * extra];
    let mut ztau = vec![0.0; r];
    if extra > 0 {
        let mut buf = vec![0.0; 1 + extra];
        for i in (0..r).rev() {
            buf[0] = trap[i * cols + i];
            buf[1..].copy_from_slice(&trap[i * cols + r..(i + 1) * cols]);
            let (beta, tau) = make_reflector(&mut buf);
            trap[i * cols + i] = beta;
            trap[i * cols + r..(i + 1) * cols].iter_mut().for_each(|v| *v = 0.0);
            zv[i * extra..(i + 1) * extra].copy_from_slice(&buf[1..]);
            ztau[i] = tau;
            if tau == 0.0 {
                continue;
            }
            let v = &buf[1..];
            for l in 0..i {
                let row = &mut trap[l * cols..(l + 1) * cols];
                let w = row[i] + dot(v, &row[r..]);
                let s = -tau * w;
                row[i] += s;
                axpy(s, v, &mut row[r..]);
            }
        }
    }

    // U y = c.
    let mut z = vec![0.0; cols];
    for i in (0..r).rev() {
        let row = &trap[i * cols..(i + 1) * cols];
        let mut s = rhs[i];
        for l in i + 1..r {
            s -= row[l] * z[l];
        }
        z[i] = s / row[i];
    }

    // z = H_{r-1} .. H_0 [y; 0].
    if extra > 0 {
        for i in 0..r {
            let tau = ztau[i];
            if tau == 0.0 {
                continue;
            }
            let v = &zv[i * extra..(i + 1) * extra];
            let w = z[i] + dot(v, &z[r..]);
            let s = -tau * w;
            z[i] += s;
            axpy(s, v, &mut z[r..]);
        }
    }

    for (j, &pj) in perm.iter().enumerate() {
        x[pj] = z[j];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares solution"));
    }
    Ok(LeastSquaresSolution { x, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::trial_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ColMatrix {
        let mut rng = trial_rng(seed, 0);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        ColMatrix::from_rows(rows, cols, &data)
    }

    fn matmul(a: &ColMatrix, b: &ColMatrix) -> ColMatrix {
        let mut c = ColMatrix::zeros(a.rows(), b.cols());
        for j in 0..b.cols() {
            let col = a.mul_vec(b.col(j));
            c.col_mut(j).copy_from_slice(&col);
        }
        c
    }

    /// Solve the (tiny, well-conditioned) SPD system `G y = h` by Gaussian
    /// elimination with partial pivoting.
    #[allow(clippy::needless_range_loop)]
    fn gauss_solve(mut g: Vec<Vec<f64>>, mut h: Vec<f64>) -> Vec<f64> {
        let n = h.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| g[i][c].abs().total_cmp(&g[j][c].abs())).unwrap();
            g.swap(c, p);
            h.swap(c, p);
            for r in c + 1..n {
                let f = g[r][c] / g[c][c];
                for k in c..n {
                    g[r][k] -= f * g[c][k];
                }
                h[r] -= f * h[c];
            }
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| g[i][k] * y[k]).sum();
            y[i] = (h[i] - s) / g[i][i];
        }
        y
    }

    #[test]
    fn overdetermined_full_rank_satisfies_normal_equations() {
        let a = random_matrix(40, 7, 1);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let sol = solve_least_squares(a.clone(), &b, 1e-13).unwrap();
        assert_eq!(sol.rank, 7);
        let r: Vec<f64> = a.mul_vec(&sol.x).iter().zip(&b).map(|(p, q)| p - q).collect();
        let g = a.tr_mul_vec(&r);
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn square_system_is_solved_exactly() {
        let a = random_matrix(6, 6, 3);
        let x0: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let b = a.mul_vec(&x0);
        let sol = solve_least_squares(a, &b, 1e-14).unwrap();
        for (u, v) in sol.x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn underdetermined_returns_minimum_norm() {
        // Minimum-norm solution is A^T (A A^T)^{-1} b; compare against it.
        let a = random_matrix(5, 12, 4);
        let b: Vec<f64> = (0..5).map(|i| 1.0 + i as f64).collect();
        let sol = solve_least_squares(a.clone(), &b, 1e-14).unwrap();
        assert_eq!(sol.rank, 5);
        let gram: Vec<Vec<f64>> =
            (0..5).map(|i| (0..5).map(|k| (0..12).map(|j| a.get(i, j) * a.get(k, j)).sum()).collect()).collect();
        let y = gauss_solve(gram, b.clone());
        let expected: Vec<f64> = (0..12).map(|j| (0..5).map(|i| a.get(i, j) * y[i]).sum()).collect();
        for (u, v) in sol.x.iter().zip(&expected) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_deficient_matches_pseudoinverse() {
        // A = B C with B 30x3, C 3x8: rank 3. The minimum-norm least-squares
        // solution is C^T (C C^T)^{-1} (B^T B)^{-1} B^T b.
        let bm = random_matrix(30, 3, 5);
        let cm = random_matrix(3, 8, 6);
        let a = matmul(&bm, &cm);
        let b: Vec<f64> = (0..30).map(|i| ((i * i) as f64 * 0.1).cos()).collect();
        let sol = solve_least_squares(a, &b, 1e-10).unwrap();
        assert_eq!(sol.rank, 3);

        let btb: Vec<Vec<f64>> =
            (0..3).map(|i| (0..3).map(|k| (0..30).map(|r| bm.get(r, i) * bm.get(r, k)).sum()).collect()).collect();
        let btb_b: Vec<f64> = (0..3).map(|i| (0..30).map(|r| bm.get(r, i) * b[r]).sum()).collect();
        let u = gauss_solve(btb, btb_b);
        let cct: Vec<Vec<f64>> =
            (0..3).map(|i| (0..3).map(|k| (0..8).map(|j| cm.get(i, j) * cm.get(k, j)).sum()).collect()).collect();
        let w = gauss_solve(cct, u);
        let expected: Vec<f64> = (0..8).map(|j| (0..3).map(|i| cm.get(i, j) * w[i]).sum()).collect();
        for (p, q) in sol.x.iter().zip(&expected) {
            assert!((p - q).abs() < 1e-9, "{p} vs {q}");
        }
    }

    #[test]
    fn full_rank_path_agrees_with_pivoted_path() {
        let a = random_matrix(50, 9, 8);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.21).cos()).collect();
        let fast = solve_full_rank(&a, &b).unwrap();
        let slow = solve_least_squares(a, &b, 1e-14).unwrap();
        for (p, q) in fast.iter().zip(&slow.x) {
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
        assert!(matches!(solve_full_rank(&random_matrix(3, 5, 1), &[0.0; 3]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_matrix_gives_zero_solution() {
        let sol = solve_least_squares(ColMatrix::zeros(4, 3), &[1.0, 2.0, 3.0, 4.0], 1e-12).unwrap();
        assert_eq!(sol.rank, 0);
        assert_eq!(sol.x, vec![0.0; 3]);
    }

    #[test]
    fn rejects_bad_input() {
        let a = ColMatrix::zeros(2, 2);
        assert!(matches!(solve_least_squares(a.clone(), &[1.0], 1e-12), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(solve_least_squares(a.clone(), &[1.0, f64::NAN], 1e-12), Err(Error::NonFinite(_))));
        assert!(solve_least_squares(a, &[1.0, 1.0], 2.0).is_err());
    }

    proptest! {
        #[test]
        fn residual_is_orthogonal_to_columns(rows in 1usize..25, cols in 1usize..25, seed in 0u64..1000) {
            let a = random_matrix(rows, cols, seed);
            let b: Vec<f64> = (0..rows).map(|i| (seed as f64 + i as f64).sin()).collect();
            let sol = solve_least_squares(a.clone(), &b, 1e-12).unwrap();
            let r: Vec<f64> = a.mul_vec(&sol.x).iter().zip(&b).map(|(p, q)| p - q).collect();
            let g = a.tr_mul_vec(&r);
            let scale = 1.0 + sol.x.iter().map(|v| v.abs()).fold(0.0, f64::max);
            prop_assert!(g.iter().all(|v| v.abs() < 1e-9 * scale));
        }
    }
}
