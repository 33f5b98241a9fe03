//! Fourier transforms under the convention
//! `f_hat(w) = int exp(-j 2 pi w x) f(x) dx`, `f(x) = int exp(j 2 pi w x) f_hat(w) dw`,
//! and numerical estimates of the smoothness level
//! `rho = sup_w |f_hat(w)| (1 + |w|^k)`.
//!
//! Quadrature is composite Simpson on uniform grids. The oscillatory factor is
//! advanced by complex rotation and re-anchored every [`RESYNC`] nodes, which
//! keeps the phase error near machine precision without a trig call per node.
//!
//! The reference implementation is one-dimensional. For `n >= 2`,
//! [`estimate_rho_radial`] accepts a user-supplied radial profile of `|f_hat|`.

use std::f64::consts::PI;

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RESYNC: usize = 64;

/// Edge-to-peak ratio above which a frequency grid is considered too narrow.
pub const EDGE_DECAY_LIMIT: f64 = 0.01;

/// Uniform grid with nodes `origin + (first + i) * step`, `i < count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub origin: f64,
    pub first: i64,
    pub step: f64,
    pub count: usize,
}

impl UniformGrid {
    /// Exactly symmetric grid on `[-half_width, half_width]` with spacing
    /// `step` (the half width is rounded to a whole number of steps).
    pub fn symmetric(half_width: f64, step: f64) -> Result<Self> {
        check_step(step)?;
        let k = (half_width / step).round() as i64;
        Ok(Self { origin: 0.0, first: -k, step, count: (2 * k + 1) as usize })
    }

    /// Grid on `[a, b]` with an even number of intervals and spacing at most
    /// `max_step`.
    pub fn covering(a: f64, b: f64, max_step: f64) -> Result<Self> {
        check_step(max_step)?;
        if !(b > a) {
            return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
        }
        let mut intervals = ((b - a) / max_step * (1.0 - 1e-12)).ceil() as usize;
        intervals = intervals.max(2);
        if intervals % 2 == 1 {
            intervals += 1;
        }
        Ok(Self { origin: a, first: 0, step: (b - a) / intervals as f64, count: intervals + 1 })
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.origin + (self.first + i as i64) as f64 * self.step
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }

    /// Composite Simpson weights (trapezoid when the count is even).
    pub fn simpson_weights(&self) -> Vec<f64> {
        let h = self.step;
        match self.count {
            0 => Vec::new(),
            1 => vec![0.0],
            c if c % 2 == 0 => {
                let mut w = vec![h; c];
                w[0] = h / 2.0;
                w[c - 1] = h / 2.0;
                w
            }
            c => (0..c)
                .map(|i| {
                    let base = if i == 0 || i == c - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    base * h / 3.0
                })
                .collect(),
        }
    }
}

fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step {step} must be positive")))
    }
}

/// `sum_j c_j exp(sign * j 2 pi freq x_j)` over the grid nodes.
fn oscillatory_sum(grid: &UniformGrid, coeffs: &[Complex64], freq: f64, sign: f64) -> Complex64 {
    let theta = sign * 2.0 * PI * freq;
    let (s, c) = (theta * grid.step).sin_cos();
    let rot = Complex64::new(c, s);
    let mut acc = Complex64::new(0.0, 0.0);
    for (block, chunk) in coeffs.chunks(RESYNC).enumerate() {
        let (s0, c0) = (theta * grid.node(block * RESYNC)).sin_cos();
        let mut z = Complex64::new(c0, s0);
        for coef in chunk {
            acc += coef * z;
            z *= rot;
        }
    }
    acc
}

/// Forward transform of tabulated values on a uniform grid.
pub fn forward_ft_samples(grid: &UniformGrid, values: &[f64], omega: &[f64]) -> Result<Vec<Complex64>> {
    if values.len() != grid.count {
        return Err(Error::DimensionMismatch { expected: grid.count, got: values.len() });
    }
    if omega.is_empty() {
        return Err(Error::Empty("frequency grid"));
    }
    let coeffs: Vec<Complex64> =
        grid.simpson_weights().iter().zip(values).map(|(w, v)| Complex64::new(w * v, 0.0)).collect();
    Ok(omega.iter().map(|&w| oscillatory_sum(grid, &coeffs, w, -1.0)).collect())
}

/// Forward transform of `f` (negligible outside `support`) at each requested
/// frequency, with Simpson step at most `quad_step`.
///
/// The step must resolve the fastest oscillation: `quad_step <= 1/(8 max|w|)`.
pub fn forward_ft<F: Fn(f64) -> f64>(
    f: F,
    support: (f64, f64),
    omega: &[f64],
    quad_step: f64,
) -> Result<Vec<Complex64>> {
    if omega.is_empty() {
        return Err(Error::Empty("frequency grid"));
    }
    let omega_max = omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    if omega_max > 0.0 {
        let limit = 1.0 / (8.0 * omega_max);
        if quad_step > limit {
            return Err(Error::Resolution { step: quad_step, omega_max, limit });
        }
    }
    let grid = UniformGrid::covering(support.0, support.1, quad_step)?;
    let values: Vec<f64> = (0..grid.count).map(|i| f(grid.node(i))).collect();
    forward_ft_samples(&grid, &values, omega)
}

/// Inverse transform from transform samples on a uniform frequency grid.
pub fn inverse_ft_samples(grid: &UniformGrid, f_hat: &[Complex64], x: &[f64]) -> Result<Vec<Complex64>> {
    if f_hat.len() != grid.count {
        return Err(Error::DimensionMismatch { expected: grid.count, got: f_hat.len() });
    }
    let coeffs: Vec<Complex64> = grid.simpson_weights().iter().zip(f_hat).map(|(w, v)| v * *w).collect();
    Ok(x.iter().map(|&xi| oscillatory_sum(grid, &coeffs, xi, 1.0)).collect())
}

/// `|f_hat(w)| (1 + |w|^k)` tabulated on a symmetric frequency grid.
#[derive(Clone, Debug)]
pub struct FourierProfile {
    pub omega_grid: Vec<f64>,
    pub f_hat: Vec<Complex64>,
    pub k: u32,
    pub weighted: Vec<f64>,
    pub rho_hat: f64,
    /// Largest weighted value at the two ends of the grid.
    pub tail_bound: f64,
}

impl FourierProfile {
    pub fn new(omega_grid: Vec<f64>, f_hat: Vec<Complex64>, k: u32) -> Result<Self> {
        if omega_grid.is_empty() {
            return Err(Error::Empty("frequency grid"));
        }
        if omega_grid.len() != f_hat.len() {
            return Err(Error::DimensionMismatch { expected: omega_grid.len(), got: f_hat.len() });
        }
        let scale = omega_grid.iter().fold(0.0f64, |m, w| m.max(w.abs())).max(1.0);
        let last = omega_grid.len() - 1;
        for i in 0..omega_grid.len() {
            if i < last && omega_grid[i + 1] <= omega_grid[i] {
                return Err(Error::InvalidArgument("frequency grid must be strictly increasing".into()));
            }
            if (omega_grid[i] + omega_grid[last - i]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument("frequency grid must be symmetric about 0".into()));
            }
        }
        let weighted: Vec<f64> =
            omega_grid.iter().zip(&f_hat).map(|(w, f)| f.norm() * (1.0 + w.abs().powi(k as i32))).collect();
        let rho_hat = weighted.iter().copied().fold(0.0, f64::max);
        let tail_bound = weighted[0].max(weighted[last]);
        Ok(Self { omega_grid, f_hat, k, weighted, rho_hat, tail_bound })
    }

    /// Largest `|f_hat(w) - conj(f_hat(-w))|`; zero for real inputs.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.f_hat.len();
        (0..n).map(|i| (self.f_hat[i] - self.f_hat[n - 1 - i].conj()).norm()).fold(0.0, f64::max)
    }
}

/// Empirical smoothness estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub rho_hat: f64,
    pub k: u32,
    pub argmax_omega: f64,
    /// Weighted value at the grid edge divided by the maximum.
    pub edge_ratio: f64,
    pub tail_bound: f64,
}

fn finish_estimate(omega: &[f64], weighted: &[f64], k: u32, edge: f64) -> Result<RhoEstimate> {
    let (imax, rho_hat) =
        weighted
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    let edge_ratio = if rho_hat > 0.0 { edge / rho_hat } else { 0.0 };
    if edge_ratio >= EDGE_DECAY_LIMIT {
        return Err(Error::GridTooNarrow { ratio: edge_ratio, limit: EDGE_DECAY_LIMIT });
    }
    Ok(RhoEstimate { rho_hat, k, argmax_omega: omega[imax], edge_ratio, tail_bound: edge })
}

/// Grid maximum of the weighted profile, after checking that it has decayed
/// at the grid edge.
pub fn estimate_rho(profile: &FourierProfile) -> Result<RhoEstimate> {
    finish_estimate(&profile.omega_grid, &profile.weighted, profile.k, profile.tail_bound)
}

/// Estimate for a radially symmetric transform in any dimension, given
/// `|f_hat|` as a function of `|w|`, scanned on `[0, r_max]`.
pub fn estimate_rho_radial<F: Fn(f64) -> f64>(radial_abs: F, k: u32, r_max: f64, step: f64) -> Result<RhoEstimate> {
    let grid = UniformGrid::covering(0.0, r_max, step)?;
    let radii = grid.nodes();
    let weighted: Vec<f64> = radii.iter().map(|&r| radial_abs(r).abs() * (1.0 + r.powi(k as i32))).collect();
    let edge = *weighted.last().expect("covering grid is nonempty");
    finish_estimate(&radii, &weighted, k, edge)
}

/// Grids for a one-dimensional smoothness estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoSettings {
    pub k: u32,
    /// Forward quadrature on `[-x_half_width, x_half_width]`.
    pub x_half_width: f64,
    pub x_step: f64,
    /// Frequencies scanned on `[-omega_max, omega_max]`.
    pub omega_max: f64,
    pub omega_step: f64,
}

impl Default for RhoSettings {
    fn default() -> Self {
        Self { k: 4, x_half_width: 2.5, x_step: 1.0 / 500.0, omega_max: 60.0, omega_step: 0.01 }
    }
}

/// Transform profile of a real function on the settings' grids.
pub fn profile_1d<F: Fn(f64) -> f64>(f: F, settings: &RhoSettings) -> Result<FourierProfile> {
    let omega = UniformGrid::symmetric(settings.omega_max, settings.omega_step)?.nodes();
    let f_hat = forward_ft(f, (-settings.x_half_width, settings.x_half_width), &omega, settings.x_step)?;
    FourierProfile::new(omega, f_hat, settings.k)
}

/// `sin(pi u)`, exact zero at integers.
fn sin_pi(u: f64) -> f64 {
    let r = u - 2.0 * (u / 2.0).round();
    // r in [-1, 1]; fold into [-1/2, 1/2] using sin(pi r) = sin(pi (1 - r)).
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// Normalized sinc `sin(pi u) / (pi u)`.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - (PI * u).powi(2) / 6.0
    } else {
        sin_pi(u) / (PI * u)
    }
}

/// Closed-form transform of the localizing multiplier:
/// `3 sinc(w/5)^5 sinc(3 w)`.
///
/// `sinc(3 w)` scaled by 3 is the transform of the indicator of `[-3/2, 3/2]`
/// and `sinc(w/5)^5` that of a five-fold self-convolution of the unit-mass box
/// of width `1/5`, so the multiplier is 1 on `[-1, 1]` and vanishes outside
/// `[-2, 2]`.
pub fn multiplier_hat(omega: f64) -> f64 {
    3.0 * sinc(omega / 5.0).powi(5) * sinc(3.0 * omega)
}

/// Multiplier evaluated by numerical inversion of [`multiplier_hat`].
#[derive(Clone, Debug)]
pub struct Multiplier {
    grid: UniformGrid,
    value_coeffs: Vec<Complex64>,
    slope_coeffs: Vec<Complex64>,
}

/// Multiplier values on a grid plus the largest discarded imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierSamples {
    pub values: Vec<f64>,
    pub max_imag: f64,
}

impl Multiplier {
    pub const MIN_CUTOFF: f64 = 40.0;
    pub const MAX_STEP: f64 = 0.01;
    pub const DEFAULT_CUTOFF: f64 = 200.0;

    pub fn new(omega_cutoff: f64, quad_step: f64) -> Result<Self> {
        if !(omega_cutoff >= Self::MIN_CUTOFF) {
            return Err(Error::Precondition(format!(
                "omega cutoff {omega_cutoff} must be at least {}",
                Self::MIN_CUTOFF
            )));
        }
        if !(quad_step > 0.0 && quad_step <= Self::MAX_STEP) {
            return Err(Error::Precondition(format!(
                "quadrature step {quad_step} must lie in (0, {}]",
                Self::MAX_STEP
            )));
        }
        let grid = UniformGrid::symmetric(omega_cutoff, quad_step)?;
        let weights = grid.simpson_weights();
        let value_coeffs: Vec<Complex64> =
            (0..grid.count).map(|i| Complex64::new(weights[i] * multiplier_hat(grid.node(i)), 0.0)).collect();
        let slope_coeffs =
            (0..grid.count).map(|i| value_coeffs[i] * Complex64::new(0.0, 2.0 * PI * grid.node(i))).collect();
        Ok(Self { grid, value_coeffs, slope_coeffs })
    }

    pub fn complex_value(&self, x: f64) -> Complex64 {
        oscillatory_sum(&self.grid, &self.value_coeffs, x, 1.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.complex_value(x).re
    }

    pub fn derivative(&self, x: f64) -> f64 {
        oscillatory_sum(&self.grid, &self.slope_coeffs, x, 1.0).re
    }

    pub fn sample(&self, x_grid: &[f64]) -> MultiplierSamples {
        let mut max_imag = 0.0f64;
        let values = x_grid
            .iter()
            .map(|&x| {
                let z = self.complex_value(x);
                max_imag = max_imag.max(z.im.abs());
                z.re
            })
            .collect();
        MultiplierSamples { values, max_imag }
    }
}

impl Default for Multiplier {
    fn default() -> Self {
        Self::new(Self::DEFAULT_CUTOFF, Self::MAX_STEP).expect("default multiplier settings are valid")
    }
}

/// Multiplier values on `x_grid` by numerical inverse transform.
pub fn multiplier(x_grid: &[f64], omega_cutoff: f64, quad_step: f64) -> Result<MultiplierSamples> {
    Ok(Multiplier::new(omega_cutoff, quad_step)?.sample(x_grid))
}
