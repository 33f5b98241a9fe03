//! The shallow ReLU network `x -> a^T x + b + sum_i c_i relu(alpha_i^T x - t_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::DirectionOffsetSample;

const UNIT_TOL: f64 = 1e-12;

#[inline]
pub fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// Unit step with value 1 at the origin, so gradients are defined everywhere.
#[inline]
pub fn relu_step(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// One hidden unit: direction, offset and output coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeUnit {
    pub alpha: Vec<f64>,
    pub t: f64,
    pub c: f64,
}

impl RidgeUnit {
    #[inline]
    fn preactivation(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (a, xi) in self.alpha.iter().zip(x) {
            s += a * xi;
        }
        s - self.t
    }
}

#[derive(Deserialize)]
struct NetworkDoc {
    n: usize,
    a: Vec<f64>,
    b: f64,
    units: Vec<RidgeUnit>,
}

impl TryFrom<NetworkDoc> for ShallowReluNetwork {
    type Error = Error;

    fn try_from(doc: NetworkDoc) -> Result<Self> {
        if doc.a.len() != doc.n {
            return Err(Error::DimensionMismatch { expected: doc.n, got: doc.a.len() });
        }
        ShallowReluNetwork::new(doc.a, doc.b, doc.units)
    }
}

/// Immutable shallow ReLU network.
///
/// Serializes as `{"n", "a", "b", "units": [{"alpha", "t", "c"}]}`; binary64
/// values round-trip exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDoc")]
pub struct ShallowReluNetwork {
    n: usize,
    a: Vec<f64>,
    b: f64,
    units: Vec<RidgeUnit>,
}

impl ShallowReluNetwork {
    pub fn new(a: Vec<f64>, b: f64, units: Vec<RidgeUnit>) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for u in &units {
            if u.alpha.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: u.alpha.len() });
            }
            let norm = u.alpha.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!("unit direction has norm {norm}")));
            }
        }
        Ok(Self { n, a, b, units })
    }

    /// Attach coefficients `c` to sampled input parameters.
    pub fn from_samples(a: Vec<f64>, b: f64, samples: &[DirectionOffsetSample], c: &[f64]) -> Result<Self> {
        if samples.len() != c.len() {
            return Err(Error::DimensionMismatch { expected: samples.len(), got: c.len() });
        }
        let units = samples.iter().zip(c).map(|(s, &c)| RidgeUnit { alpha: s.alpha.clone(), t: s.t, c }).collect();
        Self::new(a, b, units)
    }

    /// Affine function with no hidden units.
    pub fn affine(a: Vec<f64>, b: f64) -> Result<Self> {
        Self::new(a, b, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn slope(&self) -> &[f64] {
        &self.a
    }

    pub fn offset(&self) -> f64 {
        self.b
    }

    pub fn units(&self) -> &[RidgeUnit] {
        &self.units
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, got: x.len() })
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut s = self.b;
        for (ai, xi) in self.a.iter().zip(x) {
            s += ai * xi;
        }
        for u in &self.units {
            s += u.c * relu(u.preactivation(x));
        }
        Ok(s)
    }

    /// Gradient, using the unit-step convention on kinks.
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g = self.a.clone();
        for u in &self.units {
            let w = u.c * relu_step(u.preactivation(x));
            if w != 0.0 {
                for (gi, ai) in g.iter_mut().zip(&u.alpha) {
                    *gi += w * ai;
                }
            }
        }
        Ok(g)
    }

    /// Smallest `|alpha_i^T x - t_i|` over the units (infinite without units).
    pub fn kink_distance(&self, x: &[f64]) -> f64 {
        self.units.iter().map(|u| u.preactivation(x).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Stack into `(W, b, theta)` so that `theta . Phi(W x + b) = f(x)`.
    pub fn stack_parameters(&self) -> StackedParameters {
        let n = self.n;
        let m = self.units.len();
        let rows = m + n + 1;
        let mut w = vec![0.0; rows * n];
        for i in 0..n {
            w[(1 + i) * n + i] = 1.0;
        }
        for (j, u) in self.units.iter().enumerate() {
            w[(1 + n + j) * n..(2 + n + j) * n].copy_from_slice(&u.alpha);
        }
        let mut b_vec = vec![0.0; rows];
        b_vec[0] = 1.0;
        let mut theta = Vec::with_capacity(rows);
        theta.push(self.b);
        theta.extend_from_slice(&self.a);
        for (j, u) in self.units.iter().enumerate() {
            b_vec[1 + n + j] = -u.t;
            theta.push(u.c);
        }
        StackedParameters { n, w, b_vec, theta }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Matrix form of a network: `W` is `(m+n+1) x n` (row-major), `b_vec` and
/// `theta` have `m+n+1` entries.
///
/// Row 0 of `W` is zero, rows `1..=n` are the identity and the remaining rows
/// are the unit directions; `b_vec = (1, 0, .., 0, -t_1, .., -t_m)` and
/// `theta = (b, a, c_1, .., c_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedParameters {
    pub n: usize,
    pub w: Vec<f64>,
    pub b_vec: Vec<f64>,
    pub theta: Vec<f64>,
}

impl StackedParameters {
    pub fn rows(&self) -> usize {
        self.b_vec.len()
    }

    pub fn w_row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    /// `Phi(W x + b_vec)`: identity on the first `1 + n` entries, ReLU after.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok((0..self.rows())
            .map(|i| {
                let z = self.w_row(i).iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b_vec[i];
                if i <= self.n {
                    z
                } else {
                    relu(z)
                }
            })
            .collect())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let phi = self.features(x)?;
        Ok(self.theta.iter().zip(&phi).map(|(t, p)| t * p).sum())
    }
}

/// `(1, x_1, .., x_n, relu(alpha_1^T x - t_1), ..)`.
pub fn feature_vector(samples: &[DirectionOffsetSample], x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(1 + x.len() + samples.len());
    write_features(samples, x, &mut out)?;
    Ok(out)
}

pub(crate) fn write_features(samples: &[DirectionOffsetSample], x: &[f64], out: &mut Vec<f64>) -> Result<()> {
    let n = x.len();
    out.push(1.0);
    out.extend_from_slice(x);
    for s in samples {
        if s.alpha.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: s.alpha.len() });
        }
        out.push(relu(s.preactivation(x)));
    }
    Ok(())
}
