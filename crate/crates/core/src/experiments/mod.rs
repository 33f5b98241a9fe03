//! Error-versus-width sweeps: sample input parameters, fit output weights,
//! measure sup-norm errors on a dense grid and set them against the bounds.

mod report;
mod targets;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{derived_constants, BoundReport, GradNorm};
use crate::error::{Error, Result};
use crate::fitting::{fit_least_squares, FitProblem};
use crate::fourier::Multiplier;
use crate::network::ShallowReluNetwork;
use crate::sampling::{sample_pairs, trial_rng, SamplingDensity};

pub use report::{emit_report, format_number, write_sweep_csv, write_vmod_csv, ReportFiles, SWEEP_HEADER};
pub use targets::{
    gaussian, gaussian_certificate, gaussian_grad, grid_points, resolve_target, rho_for_target, ResolvedTarget,
    RhoReport, SampledTarget, TargetId, TargetOptions, VmodFunction, VMOD_RHO,
};

fn default_m_list() -> Vec<usize> {
    (4..=12).map(|p| 1usize << p).collect()
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}
fn default_n() -> usize {
    1
}
fn default_radius() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_fit_grid() -> usize {
    2001
}
fn default_eval_grid() -> usize {
    4001
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_cutoff() -> f64 {
    Multiplier::DEFAULT_CUTOFF
}

fn default_ridge() -> f64 {
    1e-10
}

/// Sweep settings, read from JSON. Every field except `target` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub target: TargetId,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_radius", rename = "R", alias = "radius")]
    pub radius: f64,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_fit_grid")]
    pub fit_grid: usize,
    #[serde(default = "default_eval_grid")]
    pub eval_grid: usize,
    /// Tikhonov weight on the output coefficients. The small default keeps
    /// the wide designs full rank; 0 selects the minimum-norm solution.
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default)]
    pub grad_weight: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Overrides the target's built-in certificate; required for custom targets.
    #[serde(default)]
    pub certificate: Option<crate::bounds::SmoothnessCertificate>,
    #[serde(default = "default_cutoff")]
    pub multiplier_cutoff: f64,
    /// Record per-row wall time. Off by default so that reruns are
    /// byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl SweepConfig {
    pub fn new(target: TargetId) -> Self {
        Self {
            target,
            n: default_n(),
            radius: default_radius(),
            m_list: default_m_list(),
            seeds: default_seeds(),
            delta: default_delta(),
            fit_grid: default_fit_grid(),
            eval_grid: default_eval_grid(),
            ridge: default_ridge(),
            grad_weight: 0.0,
            out_dir: default_out_dir(),
            certificate: None,
            multiplier_cutoff: default_cutoff(),
            record_wall_time: false,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidArgument(format!("R = {} must be positive", self.radius)));
        }
        if self.m_list.is_empty() {
            return Err(Error::Empty("m_list"));
        }
        if self.seeds.is_empty() {
            return Err(Error::Empty("seeds"));
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m < self.n + 1) {
            return Err(Error::InvalidArgument(format!("m = {m} is below n + 1 = {}", self.n + 1)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !matches!(self.target, TargetId::Custom(_)) && (self.fit_grid < 2 || self.eval_grid < 2) {
            return Err(Error::InvalidArgument("grids need at least two points".into()));
        }
        if !(self.ridge >= 0.0) || !(self.grad_weight >= 0.0) {
            return Err(Error::InvalidArgument("ridge and grad_weight must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn target_options(&self) -> TargetOptions {
        TargetOptions {
            n: self.n,
            radius: self.radius,
            fit_grid: self.fit_grid,
            eval_grid: self.eval_grid,
            multiplier_cutoff: self.multiplier_cutoff,
            certificate: self.certificate.clone(),
        }
    }
}

/// One `(m, seed)` trial. Failed trials carry NaN errors and a message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub seed: u64,
    pub err_f: f64,
    pub err_g2: f64,
    pub err_ginf: f64,
    pub rhs_f: f64,
    pub rhs_g2: f64,
    pub rhs_ginf: f64,
    pub c_max: f64,
    pub fit_rmse: f64,
    pub wall_ms: f64,
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Value,
    Grad2,
    GradInf,
}

/// Sup-norm errors over a point set, one per [`ErrorMode`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSummary {
    pub value: f64,
    pub grad2: f64,
    pub grad_inf: f64,
}

/// All three grid-sup errors of `net` against `target` in one pass. Gradient
/// errors are NaN when the target carries no gradients.
pub fn error_summary(net: &ShallowReluNetwork, target: &SampledTarget) -> Result<ErrorSummary> {
    if target.is_empty() {
        return Err(Error::Empty("evaluation grid"));
    }
    let mut s = ErrorSummary { value: 0.0, grad2: 0.0, grad_inf: 0.0 };
    if target.grads.is_none() {
        s.grad2 = f64::NAN;
        s.grad_inf = f64::NAN;
    }
    for (i, x) in target.points.iter().enumerate() {
        s.value = s.value.max((net.eval(x)? - target.values[i]).abs());
        if let Some(grads) = &target.grads {
            let g = net.eval_grad(x)?;
            let (mut two, mut inf) = (0.0f64, 0.0f64);
            for (a, b) in g.iter().zip(&grads[i]) {
                let d = (a - b).abs();
                two += d * d;
                inf = inf.max(d);
            }
            s.grad2 = s.grad2.max(two.sqrt());
            s.grad_inf = s.grad_inf.max(inf);
        }
    }
    Ok(s)
}

/// Grid maximum of `|f_N - f|`, `|grad f_N - grad f|_2` or `|.|_inf`.
pub fn sup_error(net: &ShallowReluNetwork, target: &SampledTarget, mode: ErrorMode) -> Result<f64> {
    if mode != ErrorMode::Value && target.grads.is_none() {
        return Err(Error::InvalidArgument("target has no gradient samples".into()));
    }
    let s = error_summary(net, target)?;
    Ok(match mode {
        ErrorMode::Value => s.value,
        ErrorMode::Grad2 => s.grad2,
        ErrorMode::GradInf => s.grad_inf,
    })
}

/// Rows plus the context needed to write the report.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub target: String,
    pub report: BoundReport,
    pub delta: f64,
    pub m_list: Vec<usize>,
    pub rows: Vec<SweepRow>,
    /// Settings that produced the rows, with the certificate in effect.
    pub config: SweepConfig,
}

fn run_row(
    config: &SweepConfig,
    target: &ResolvedTarget,
    report: &BoundReport,
    density: &SamplingDensity,
    m: usize,
    seed: u64,
) -> Result<SweepRow> {
    let rhs_f = report.rhs_function(m, config.delta)?;
    let rhs_g2 = report.rhs_grad(m, config.delta, GradNorm::Two)?;
    let rhs_ginf = report.rhs_grad(m, config.delta, GradNorm::Inf)?;
    let start = Instant::now();
    let attempt = || -> Result<(ErrorSummary, f64, f64)> {
        let samples = sample_pairs(density, m, &mut trial_rng(seed, m as u64))?;
        let problem = FitProblem {
            samples,
            radius: config.radius,
            points: target.fit.points.clone(),
            targets: target.fit.values.clone(),
            grad_targets: if config.grad_weight > 0.0 { target.fit.grads.clone() } else { None },
            grad_weight: config.grad_weight,
            ridge: config.ridge,
        };
        let fitted = fit_least_squares(&problem)?;
        let errors = error_summary(&fitted.network, &target.eval)?;
        let c_max = fitted.network.units().iter().map(|u| u.c.abs()).fold(0.0, f64::max);
        Ok((errors, c_max, fitted.train_rmse))
    };
    let outcome = attempt();
    let wall_ms = if config.record_wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let nan = f64::NAN;
    let row = |err_f, err_g2, err_ginf, c_max, fit_rmse, failure| SweepRow {
        m,
        seed,
        err_f,
        err_g2,
        err_ginf,
        rhs_f,
        rhs_g2,
        rhs_ginf,
        c_max,
        fit_rmse,
        wall_ms,
        failure,
    };
    Ok(match outcome {
        Ok((e, c_max, rmse)) => row(e.value, e.grad2, e.grad_inf, c_max, rmse, None),
        Err(err) => {
            log::warn!("m = {m}, seed = {seed} failed: {err}");
            row(nan, nan, nan, nan, nan, Some(err.to_string()))
        }
    })
}

/// Runs every `(m, seed)` pair. Rows come out ordered by `m_list`, then
/// `seeds`, whatever the thread count. Trial `(m, seed)` draws from stream `m`
/// of the generator keyed by `seed`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let target = resolve_target(&config.target, &config.target_options())?;
    let report = derived_constants(&target.certificate)?;
    let density = SamplingDensity::uniform(config.n, config.radius)?;
    let jobs: Vec<(usize, u64)> =
        config.m_list.iter().flat_map(|&m| config.seeds.iter().map(move |&s| (m, s))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(m, seed)| run_row(config, &target, &report, &density, m, seed))
        .collect::<Result<Vec<_>>>()?;
    let config = SweepConfig { certificate: Some(report.certificate.clone()), ..config.clone() };
    Ok(SweepOutcome { target: target.name, report, delta: config.delta, m_list: config.m_list.clone(), rows, config })
}

/// Median of the finite entries, NaN when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Per-width medians across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSummary {
    pub m: usize,
    pub err_f: f64,
    pub err_g2: f64,
    pub err_ginf: f64,
    pub rhs_f: f64,
    pub rhs_g2: f64,
    pub rhs_ginf: f64,
    pub failures: usize,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<WidthSummary> {
    let mut widths: Vec<usize> = Vec::new();
    for r in rows {
        if !widths.contains(&r.m) {
            widths.push(r.m);
        }
    }
    widths
        .into_iter()
        .map(|m| {
            let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.m == m).collect();
            let ok = || sel.iter().filter(|r| r.succeeded());
            WidthSummary {
                m,
                err_f: median(ok().map(|r| r.err_f)),
                err_g2: median(ok().map(|r| r.err_g2)),
                err_ginf: median(ok().map(|r| r.err_ginf)),
                rhs_f: sel[0].rhs_f,
                rhs_g2: sel[0].rhs_g2,
                rhs_ginf: sel[0].rhs_ginf,
                failures: sel.len() - ok().count(),
            }
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("need two positive points for a slope".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all widths coincide".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::RidgeUnit;

    fn target_of(net: &ShallowReluNetwork, shift: f64) -> SampledTarget {
        let pts = grid_points(net.dim(), 1.0, 101);
        SampledTarget::from_fn(pts, |x| net.eval(x).unwrap() + shift, |x| net.eval_grad(x).unwrap())
    }

    fn small_net(n: usize) -> ShallowReluNetwork {
        let mut alpha = vec![0.0; n];
        alpha[0] = 1.0;
        let units = vec![RidgeUnit { alpha, t: 0.2, c: -1.5 }];
        ShallowReluNetwork::new(vec![0.3; n], 0.1, units).unwrap()
    }

    #[test]
    fn sup_error_cases() {
        let net = small_net(1);
        for mode in [ErrorMode::Value, ErrorMode::Grad2, ErrorMode::GradInf] {
            assert_eq!(sup_error(&net, &target_of(&net, 0.0), mode).unwrap(), 0.0);
        }
        let shifted = target_of(&net, 0.3);
        assert!((sup_error(&net, &shifted, ErrorMode::Value).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(sup_error(&net, &shifted, ErrorMode::Grad2).unwrap(), 0.0);

        let other = ShallowReluNetwork::new(vec![1.0], 0.0, vec![]).unwrap();
        let t = target_of(&net, 0.0);
        assert_eq!(
            sup_error(&other, &t, ErrorMode::Grad2).unwrap(),
            sup_error(&other, &t, ErrorMode::GradInf).unwrap()
        );
        let empty = SampledTarget { points: vec![], values: vec![], grads: None };
        assert!(matches!(sup_error(&net, &empty, ErrorMode::Value), Err(Error::Empty(_))));
    }

    #[test]
    fn norm_ordering_in_two_dimensions() {
        let net = small_net(2);
        let other = ShallowReluNetwork::new(vec![1.0, -2.0], 0.0, vec![]).unwrap();
        let s = error_summary(&other, &target_of(&net, 0.0)).unwrap();
        assert!(s.grad_inf <= s.grad2 && s.grad2 <= 2f64.sqrt() * s.grad_inf + 1e-15);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = SweepConfig::from_json(r#"{"target": "paper_vmod"}"#).unwrap();
        assert_eq!(c.m_list, vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);
        assert_eq!(c.seeds.len(), 10);
        assert_eq!((c.fit_grid, c.eval_grid, c.delta), (2001, 4001, 0.1));
        assert!(!c.record_wall_time);
        assert_eq!(c.ridge, 1e-10);
        assert!(SweepConfig::from_json(r#"{"target": "gaussian", "m_list": [1]}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"target": "gaussian", "delta": 1.0}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"target": "gaussian", "bogus": 1}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"target": "gaussian", "seeds": []}"#).is_err());
        let round: SweepConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn gaussian_smoke() {
        let mut c = SweepConfig::new(TargetId::Gaussian);
        c.m_list = vec![64];
        c.seeds = vec![0];
        c.fit_grid = 201;
        c.eval_grid = 401;
        let out = run_sweep(&c).unwrap();
        assert_eq!(out.rows.len(), 1);
        let r = &out.rows[0];
        assert!(r.succeeded());
        for v in [r.err_f, r.err_g2, r.err_ginf, r.rhs_f, r.rhs_g2, r.rhs_ginf, r.c_max, r.fit_rmse] {
            assert!(v.is_finite() && v >= 0.0);
        }
        assert_eq!(r.wall_ms, 0.0);
        assert!(r.err_f <= r.rhs_f && r.err_g2 <= r.rhs_g2);
    }

    #[test]
    fn rows_are_ordered_and_reproducible() {
        let mut c = SweepConfig::new(TargetId::Gaussian);
        c.m_list = vec![8, 16];
        c.seeds = vec![3, 1];
        c.fit_grid = 51;
        c.eval_grid = 101;
        let a = run_sweep(&c).unwrap();
        let keys: Vec<(usize, u64)> = a.rows.iter().map(|r| (r.m, r.seed)).collect();
        assert_eq!(keys, vec![(8, 3), (8, 1), (16, 3), (16, 1)]);
        let b = run_sweep(&c).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn two_dimensional_gaussian() {
        let mut c = SweepConfig::new(TargetId::Gaussian);
        c.n = 2;
        c.m_list = vec![32];
        c.seeds = vec![0];
        c.fit_grid = 400;
        c.eval_grid = 900;
        let out = run_sweep(&c).unwrap();
        let r = &out.rows[0];
        assert!(r.succeeded());
        assert!(r.err_ginf <= r.err_g2 && r.err_g2 <= 2f64.sqrt() * r.err_ginf + 1e-12);
    }

    #[test]
    fn medians_and_slopes() {
        assert_eq!(median([3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median([4.0, 1.0, f64::NAN, 2.0, 3.0]), 2.5);
        assert!(median([f64::NAN]).is_nan());
        let pts: Vec<(f64, f64)> = [16.0, 64.0, 256.0].iter().map(|&m: &f64| (m, 3.0 * m.powf(-0.5))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_err());
    }

    #[test]
    fn summaries_skip_failures() {
        let row = |m, seed, e: f64, failure: Option<String>| SweepRow {
            m,
            seed,
            err_f: e,
            err_g2: e,
            err_ginf: e,
            rhs_f: 10.0,
            rhs_g2: 20.0,
            rhs_ginf: 30.0,
            c_max: 1.0,
            fit_rmse: 0.0,
            wall_ms: 0.0,
            failure,
        };
        let rows = vec![
            row(16, 0, 1.0, None),
            row(16, 1, 3.0, None),
            row(16, 2, f64::NAN, Some("x".into())),
            row(32, 0, 0.5, None),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].m, s[0].err_f, s[0].failures), (16, 2.0, 1));
        assert_eq!(s[1].err_f, 0.5);
    }
}
