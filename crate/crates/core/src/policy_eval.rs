//! Policy evaluation for control-affine systems
//! `dx/dt = f(x) + g(x) u`, `u = phi(x)`, with running cost
//! `q(x) + 1/2 u^T R u`.
//!
//! The value of a stabilizing policy solves the linear PDE
//! `q + 1/2 phi^T R phi + grad V . (f + g phi) = 0`; [`pde_residual`] evaluates
//! its left-hand side and [`simulate_value`] integrates the cost along a
//! closed-loop trajectory.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ShallowReluNetwork;

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Control-affine system with a fixed feedback policy and quadratic input cost.
#[derive(Clone)]
pub struct ControlAffineProblem {
    n: usize,
    p: usize,
    dynamics: VectorField,
    /// `g(x)` as a row-major `n x p` matrix.
    input_map: VectorField,
    policy: VectorField,
    state_cost: ScalarField,
    input_cost: Vec<f64>,
}

impl fmt::Debug for ControlAffineProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlAffineProblem")
            .field("n", &self.n)
            .field("p", &self.p)
            .field("input_cost", &self.input_cost)
            .finish_non_exhaustive()
    }
}

impl ControlAffineProblem {
    /// `input_cost` is the row-major `p x p` matrix `R`; it must be symmetric
    /// positive definite.
    pub fn new(
        n: usize,
        p: usize,
        dynamics: VectorField,
        input_map: VectorField,
        policy: VectorField,
        state_cost: ScalarField,
        input_cost: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if p == 0 {
            return Err(Error::InvalidArgument("input dimension must be positive".into()));
        }
        if input_cost.len() != p * p {
            return Err(Error::DimensionMismatch { expected: p * p, got: input_cost.len() });
        }
        check_spd(&input_cost, p)?;
        Ok(Self { n, p, dynamics, input_map, policy, state_cost, input_cost })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.p
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, got: x.len() })
        }
    }

    pub fn policy(&self, x: &[f64]) -> Vec<f64> {
        (self.policy)(x)
    }

    /// `f(x) + g(x) phi(x)`.
    pub fn closed_loop(&self, x: &[f64]) -> Vec<f64> {
        let mut dx = (self.dynamics)(x);
        let g = (self.input_map)(x);
        let u = (self.policy)(x);
        for (i, d) in dx.iter_mut().enumerate() {
            *d += (0..self.p).map(|j| g[i * self.p + j] * u[j]).sum::<f64>();
        }
        dx
    }

    /// `q(x) + 1/2 phi(x)^T R phi(x)`.
    pub fn running_cost(&self, x: &[f64]) -> f64 {
        let u = (self.policy)(x);
        let mut quad = 0.0;
        for i in 0..self.p {
            for j in 0..self.p {
                quad += u[i] * self.input_cost[i * self.p + j] * u[j];
            }
        }
        (self.state_cost)(x) + 0.5 * quad
    }

    /// Checks `q >= 0` at the given states.
    pub fn check_state_cost(&self, points: &[Vec<f64>]) -> Result<()> {
        for x in points {
            self.check_dim(x)?;
            let q = (self.state_cost)(x);
            if !(q >= 0.0) {
                return Err(Error::InvalidArgument(format!("state cost {q} is negative at {x:?}")));
            }
        }
        Ok(())
    }
}

fn check_spd(a: &[f64], p: usize) -> Result<()> {
    for i in 0..p {
        for j in 0..i {
            let (x, y) = (a[i * p + j], a[j * p + i]);
            if (x - y).abs() > 1e-12 * x.abs().max(y.abs()).max(1.0) {
                return Err(Error::InvalidArgument("input cost is not symmetric".into()));
            }
        }
    }
    // Cholesky succeeds exactly when the matrix is positive definite.
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let s = a[i * p + j] - (0..j).map(|k| l[i * p + k] * l[j * p + k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::InvalidArgument("input cost is not positive definite".into()));
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Network,
    Trajectory,
}

/// A candidate value function together with its gradient.
#[derive(Clone)]
pub struct ValueModel {
    pub n: usize,
    value: ScalarField,
    gradient: VectorField,
    pub provenance: Provenance,
}

impl fmt::Debug for ValueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValueModel").field("n", &self.n).field("provenance", &self.provenance).finish_non_exhaustive()
    }
}

impl ValueModel {
    pub fn new(n: usize, value: ScalarField, gradient: VectorField, provenance: Provenance) -> Self {
        Self { n, value, gradient, provenance }
    }

    pub fn from_network(net: ShallowReluNetwork) -> Self {
        let net = Arc::new(net);
        let g = Arc::clone(&net);
        Self {
            n: net.dim(),
            value: Arc::new(move |x| net.eval(x).unwrap_or(f64::NAN)),
            gradient: Arc::new(move |x| g.eval_grad(x).unwrap_or_else(|_| vec![f64::NAN; x.len()])),
            provenance: Provenance::Network,
        }
    }

    /// Value by trajectory integration, gradient by central differences of
    /// the integrated value.
    pub fn from_trajectories(problem: ControlAffineProblem, settings: SimulationSettings, fd_step: f64) -> Self {
        let problem = Arc::new(problem);
        let p2 = Arc::clone(&problem);
        let value = move |x: &[f64]| simulate_value(&problem, x, &settings).map(|s| s.value).unwrap_or(f64::NAN);
        let value: ScalarField = Arc::new(value);
        let v2 = Arc::clone(&value);
        let gradient = move |x: &[f64]| {
            let mut y = x.to_vec();
            (0..x.len())
                .map(|i| {
                    y[i] = x[i] + fd_step;
                    let up = v2(&y);
                    y[i] = x[i] - fd_step;
                    let down = v2(&y);
                    y[i] = x[i];
                    (up - down) / (2.0 * fd_step)
                })
                .collect()
        };
        Self { n: p2.state_dim(), value, gradient: Arc::new(gradient), provenance: Provenance::Trajectory }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// Value claimed for the scalar example: `(1/5) log cosh(5 x)`.
pub fn paper_value(x: f64) -> f64 {
    // log cosh(y) = |y| + log1p(exp(-2|y|)) - log 2, stable for large |y|.
    let y = (5.0 * x).abs();
    (y + (-2.0 * y).exp().ln_1p() - std::f64::consts::LN_2) / 5.0
}

pub fn paper_value_derivative(x: f64) -> f64 {
    (5.0 * x).tanh()
}

fn scalar_problem(policy: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<ControlAffineProblem> {
    ControlAffineProblem::new(
        1,
        1,
        Arc::new(|_| vec![0.0]),
        Arc::new(|_| vec![1.0]),
        Arc::new(move |x| vec![policy(x[0])]),
        Arc::new(|x| 0.5 * x[0] * x[0]),
        vec![1.0],
    )
}

/// Scalar example: `f = 0`, `g = 1`, `phi(x) = -tanh(5x)`, `q = x^2/2`,
/// `R = 1`, with the closed-form value `(1/5) log cosh(5x)`.
///
/// That value does not satisfy the value PDE for this cost (the residual is
/// `x^2/2 - tanh^2(5x)/2`); it is kept as stated because it is the function
/// the experiments approximate.
pub fn paper_example() -> (ControlAffineProblem, ValueModel) {
    let problem = scalar_problem(|x| -(5.0 * x).tanh()).expect("scalar example is well formed");
    let model = ValueModel::new(
        1,
        Arc::new(|x| paper_value(x[0])),
        Arc::new(|x| vec![paper_value_derivative(x[0])]),
        Provenance::Analytic,
    );
    (problem, model)
}

/// Linear benchmark: `f = 0`, `g = 1`, `phi(x) = -x`, `q = x^2/2`, `R = 1`,
/// whose exact value is `x^2/2`.
pub fn linear_benchmark() -> (ControlAffineProblem, ValueModel) {
    let problem = scalar_problem(|x| -x).expect("linear benchmark is well formed");
    let model = ValueModel::new(1, Arc::new(|x| 0.5 * x[0] * x[0]), Arc::new(|x| vec![x[0]]), Provenance::Analytic);
    (problem, model)
}

/// Left-hand side of the value PDE at `x`.
pub fn pde_residual(problem: &ControlAffineProblem, model: &ValueModel, x: &[f64]) -> Result<f64> {
    problem.check_dim(x)?;
    if model.n != problem.n {
        return Err(Error::DimensionMismatch { expected: problem.n, got: model.n });
    }
    let grad = model.gradient(x);
    if grad.len() != problem.n {
        return Err(Error::DimensionMismatch { expected: problem.n, got: grad.len() });
    }
    let drift = problem.closed_loop(x);
    let transport: f64 = grad.iter().zip(&drift).map(|(g, d)| g * d).sum();
    Ok(problem.running_cost(x) + transport)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub step: f64,
    pub horizon: f64,
    /// Integration stops once `|x_t| <= stop_radius`.
    pub stop_radius: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self { step: 1e-4, horizon: 60.0, stop_radius: 1e-7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub value: f64,
    pub time: f64,
    pub steps: usize,
    pub final_norm: f64,
    /// The horizon was reached before the stop radius.
    pub truncated: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Accumulated running cost along the closed-loop trajectory from `x0`,
/// integrated with classical RK4 on the state augmented by the cost.
pub fn simulate_value(problem: &ControlAffineProblem, x0: &[f64], settings: &SimulationSettings) -> Result<Simulation> {
    problem.check_dim(x0)?;
    let SimulationSettings { step, horizon, stop_radius } = *settings;
    if !(step > 0.0 && step.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) || !(stop_radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad simulation settings {settings:?}")));
    }
    let n = problem.n;
    let rhs = |z: &[f64]| -> Vec<f64> {
        let x = &z[..n];
        let mut d = problem.closed_loop(x);
        d.push(problem.running_cost(x));
        d
    };
    let mut z: Vec<f64> = x0.to_vec();
    z.push(0.0);
    let mut t = 0.0;
    let mut steps = 0;
    let mut tmp = vec![0.0; n + 1];
    while norm(&z[..n]) > stop_radius && t < horizon {
        let h = step.min(horizon - t);
        let k1 = rhs(&z);
        for i in 0..=n {
            tmp[i] = z[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(&tmp);
        for i in 0..=n {
            tmp[i] = z[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(&tmp);
        for i in 0..=n {
            tmp[i] = z[i] + h * k3[i];
        }
        let k4 = rhs(&tmp);
        for i in 0..=n {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        steps += 1;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::Unstable { time: t });
        }
    }
    let final_norm = norm(&z[..n]);
    let truncated = final_norm > stop_radius;
    if truncated {
        log::warn!("trajectory from {x0:?} truncated at horizon {horizon} with |x| = {final_norm:e}");
    }
    Ok(Simulation { value: z[n], time: t, steps, final_norm, truncated })
}

/// Grid maximum of `max(|V - f_N|, |grad V - grad f_N|_2)`.
pub fn joint_error(model: &ValueModel, net: &ShallowReluNetwork, grid: &[Vec<f64>]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Empty("evaluation grid"));
    }
    if model.n != net.dim() {
        return Err(Error::DimensionMismatch { expected: model.n, got: net.dim() });
    }
    let mut worst = 0.0f64;
    for x in grid {
        let dv = (model.value(x) - net.eval(x)?).abs();
        let g = net.eval_grad(x)?;
        let dg = norm(&model.gradient(x).iter().zip(&g).map(|(a, b)| a - b).collect::<Vec<_>>());
        worst = worst.max(dv).max(dg);
    }
    Ok(worst)
}

/// One line of the policy-evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvalRow {
    pub x0: f64,
    pub simulated: f64,
    pub analytic: f64,
    pub residual: f64,
    pub truncated: bool,
}

/// Simulated value, model value and PDE residual at each scalar start state.
pub fn policy_eval_table(
    problem: &ControlAffineProblem,
    model: &ValueModel,
    x0: &[f64],
    settings: &SimulationSettings,
) -> Result<Vec<PolicyEvalRow>> {
    if problem.n != 1 {
        return Err(Error::InvalidArgument("the report table covers scalar problems only".into()));
    }
    x0.par_iter()
        .map(|&x| {
            let sim = simulate_value(problem, &[x], settings)?;
            Ok(PolicyEvalRow {
                x0: x,
                simulated: sim.value,
                analytic: model.value(&[x]),
                residual: pde_residual(problem, model, &[x])?,
                truncated: sim.truncated,
            })
        })
        .collect()
}
