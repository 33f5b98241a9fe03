//! Shallow ReLU networks with randomly sampled input parameters.
//!
//! Input parameters `(alpha_i, t_i)` are drawn at random on the sphere times
//! an offset interval, output coefficients are fitted by least squares, and
//! the crate computes high-probability sup-norm certificates for both the
//! function and the gradient error of such networks. The [`fourier`] module
//! estimates the Fourier smoothness coefficient those certificates consume,
//! and [`policy_eval`] / [`experiments`] reproduce a scalar continuous-time
//! policy-evaluation study end to end.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod fourier;
pub mod linalg;
pub mod network;
pub mod policy_eval;
pub mod sampling;

pub use bounds::{derived_constants, sphere_area, BoundReport, GradNorm, SmoothnessCertificate};
pub use error::{Error, Result};
pub use fitting::{fit_least_squares, FitProblem, FittedNetwork};
pub use network::{RidgeUnit, ShallowReluNetwork, StackedParameters};
pub use sampling::{sample_pairs, sample_sphere, DirectionOffsetSample, SamplingDensity};
