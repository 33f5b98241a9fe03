//! Least-squares output coefficients for fixed random input parameters.

use serde::{Deserialize, Serialize};

use crate::bounds::CoefficientCaps;
use crate::error::{Error, Result};
use crate::linalg::{default_rcond, solve_full_rank, solve_least_squares, ColMatrix};
use crate::network::{relu_step, write_features, ShallowReluNetwork};
use crate::sampling::DirectionOffsetSample;

const BALL_SLACK: f64 = 1e-12;

/// Data for one least-squares fit.
#[derive(Clone, Debug)]
pub struct FitProblem {
    pub samples: Vec<DirectionOffsetSample>,
    /// Ball radius; every point must satisfy `|x|_2 <= radius`.
    pub radius: f64,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub grad_targets: Option<Vec<Vec<f64>>>,
    pub grad_weight: f64,
    pub ridge: f64,
}

impl FitProblem {
    /// Value-only fit with no regularization.
    pub fn values(samples: Vec<DirectionOffsetSample>, radius: f64, points: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        Self { samples, radius, points, targets, grad_targets: None, grad_weight: 0.0, ridge: 0.0 }
    }

    fn dim(&self) -> Result<usize> {
        let first = self.points.first().ok_or(Error::Empty("no fitting points"))?;
        Ok(first.len())
    }

    fn validate(&self) -> Result<usize> {
        let n = self.dim()?;
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.targets.len() != self.points.len() {
            return Err(Error::DimensionMismatch { expected: self.points.len(), got: self.targets.len() });
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) || !(self.grad_weight >= 0.0 && self.grad_weight.is_finite())
        {
            return Err(Error::InvalidArgument("ridge and grad_weight must be nonnegative".into()));
        }
        if self.targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("targets"));
        }
        for p in &self.points {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > self.radius * (1.0 + BALL_SLACK) {
                return Err(Error::InvalidArgument(format!(
                    "point with norm {norm} outside ball of radius {}",
                    self.radius
                )));
            }
        }
        for s in &self.samples {
            if s.alpha.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.alpha.len() });
            }
        }
        if let Some(g) = &self.grad_targets {
            if g.len() != self.points.len() {
                return Err(Error::DimensionMismatch { expected: self.points.len(), got: g.len() });
            }
            for row in g {
                if row.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: row.len() });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("gradient targets"));
                }
            }
        }
        Ok(n)
    }

    fn uses_gradients(&self) -> bool {
        self.grad_weight > 0.0 && self.grad_targets.is_some()
    }
}

/// A fitted network plus solve diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedNetwork {
    pub network: ShallowReluNetwork,
    /// Value of the minimized objective (value, gradient and ridge terms).
    pub objective: f64,
    /// Root-mean-square value residual over the fitting points.
    pub train_rmse: f64,
    /// Largest absolute value residual over the fitting points.
    pub train_max_error: f64,
    /// Numerical rank of the (augmented) design matrix.
    pub rank: usize,
    pub ridge: f64,
}

/// Row `j` is the feature vector of `points[j]`; shape `|points| x (m + n + 1)`.
pub fn design_matrix(samples: &[DirectionOffsetSample], points: &[Vec<f64>]) -> Result<ColMatrix> {
    let n = points.first().map(|p| p.len()).unwrap_or(0);
    let cols = 1 + n + samples.len();
    let mut buf = Vec::with_capacity(cols);
    let mut a = ColMatrix::zeros(points.len(), cols);
    for (i, x) in points.iter().enumerate() {
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        buf.clear();
        write_features(samples, x, &mut buf)?;
        for (j, v) in buf.iter().enumerate() {
            a.set(i, j, *v);
        }
    }
    Ok(a)
}

/// Minimize `sum (f_N(x_j) - y_j)^2 + w sum |grad f_N(x_j) - g_j|^2 + ridge |coef|^2`
/// over `(b, a, c)` with the input parameters held fixed.
///
/// With `ridge = 0` the system is solved by a rank-revealing orthogonal
/// factorization and a rank-deficient design yields the minimum-norm
/// minimizer. A positive ridge makes the stacked system full rank, so plain
/// QR is used and `rank` reports the column count.
pub fn fit_least_squares(problem: &FitProblem) -> Result<FittedNetwork> {
    let n = problem.validate()?;
    let npts = problem.points.len();
    let m = problem.samples.len();
    let cols = 1 + n + m;
    let grad_rows = if problem.uses_gradients() { npts * n } else { 0 };
    let ridge_rows = if problem.ridge > 0.0 { cols } else { 0 };
    let rows = npts + grad_rows + ridge_rows;

    let mut a = ColMatrix::zeros(rows, cols);
    let mut rhs = vec![0.0; rows];
    let mut buf = Vec::with_capacity(cols);
    for (i, x) in problem.points.iter().enumerate() {
        buf.clear();
        write_features(&problem.samples, x, &mut buf)?;
        for (j, v) in buf.iter().enumerate() {
            if *v != 0.0 {
                a.set(i, j, *v);
            }
        }
        rhs[i] = problem.targets[i];
    }
    if grad_rows > 0 {
        let w = problem.grad_weight.sqrt();
        let grads = problem.grad_targets.as_ref().expect("checked by uses_gradients");
        for (i, (x, g)) in problem.points.iter().zip(grads).enumerate() {
            let active: Vec<f64> = problem.samples.iter().map(|s| relu_step(s.preactivation(x))).collect();
            for (d, gd) in g.iter().enumerate() {
                let row = npts + i * n + d;
                a.set(row, 1 + d, w);
                for (u, s) in problem.samples.iter().enumerate() {
                    if active[u] != 0.0 {
                        a.set(row, 1 + n + u, w * s.alpha[d]);
                    }
                }
                rhs[row] = w * gd;
            }
        }
    }
    if ridge_rows > 0 {
        let w = problem.ridge.sqrt();
        for j in 0..cols {
            a.set(npts + grad_rows + j, j, w);
        }
    }

    let solved = if ridge_rows > 0 {
        solve_full_rank(&a, &rhs).map(|x| (x, cols))
    } else {
        solve_least_squares(a, &rhs, default_rcond(rows, cols)).map(|s| (s.x, s.rank))
    };
    let (coef, rank) = solved.map_err(|e| match e {
        Error::NonFinite(what) => Error::FitFailed(format!("non-finite values in {what}")),
        other => other,
    })?;
    let network = ShallowReluNetwork::from_samples(coef[1..=n].to_vec(), coef[0], &problem.samples, &coef[1 + n..])?;

    let mut sq = 0.0;
    let mut max_err = 0.0f64;
    for (x, y) in problem.points.iter().zip(&problem.targets) {
        let r = network.eval(x)? - y;
        sq += r * r;
        max_err = max_err.max(r.abs());
    }
    let mut objective = sq;
    if grad_rows > 0 {
        let grads = problem.grad_targets.as_ref().expect("checked by uses_gradients");
        for (x, g) in problem.points.iter().zip(grads) {
            let gn = network.eval_grad(x)?;
            objective += problem.grad_weight * gn.iter().zip(g).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        }
    }
    if ridge_rows > 0 {
        objective += problem.ridge * coef.iter().map(|c| c * c).sum::<f64>();
    }
    Ok(FittedNetwork {
        network,
        objective,
        train_rmse: (sq / npts as f64).sqrt(),
        train_max_error: max_err,
        rank,
        ridge: problem.ridge,
    })
}

/// Which coefficient caps a network respects. Diagnostic only: least squares
/// is not constrained by the caps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapsReport {
    pub a_ok: bool,
    pub b_ok: bool,
    pub c_ok: bool,
    pub a_norm: f64,
    pub b_abs: f64,
    pub max_abs_c: f64,
}

pub fn coefficient_caps_check(net: &ShallowReluNetwork, caps: &CoefficientCaps) -> CapsReport {
    let a_norm = net.slope().iter().map(|v| v * v).sum::<f64>().sqrt();
    let b_abs = net.offset().abs();
    let max_abs_c = net.units().iter().map(|u| u.c.abs()).fold(0.0, f64::max);
    CapsReport {
        a_ok: a_norm <= caps.a_max,
        b_ok: b_abs <= caps.b_max,
        c_ok: max_abs_c <= caps.c_max,
        a_norm,
        b_abs,
        max_abs_c,
    }
}

/// Uniform grid of `count` points on `[-radius, radius]`.
pub fn line_grid(radius: f64, count: usize) -> Vec<Vec<f64>> {
    match count {
        0 => Vec::new(),
        1 => vec![vec![0.0]],
        _ => (0..count).map(|i| vec![-radius + 2.0 * radius * i as f64 / (count - 1) as f64]).collect(),
    }
}

/// Tensor grid with `per_axis` points per coordinate, restricted to the ball.
pub fn ball_grid(n: usize, radius: f64, per_axis: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return line_grid(radius, per_axis);
    }
    let axis: Vec<f64> = line_grid(radius, per_axis).into_iter().map(|p| p[0]).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    if axis.is_empty() {
        return out;
    }
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius * (1.0 + BALL_SLACK) {
            out.push(x);
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < axis.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return out;
            }
        }
    }
}
