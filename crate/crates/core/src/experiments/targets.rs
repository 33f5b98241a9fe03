//! Approximation targets for the sweep and the smoothness estimator.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{sphere_area, SmoothnessCertificate};
use crate::error::{Error, Result};
use crate::fitting::ball_grid;
use crate::fourier::{
    estimate_rho, estimate_rho_radial, forward_ft_samples, profile_1d, FourierProfile, Multiplier, RhoEstimate,
    RhoSettings, UniformGrid,
};
use crate::policy_eval::{paper_value, paper_value_derivative};

/// Smoothness level quoted for the localized scalar value function.
pub const VMOD_RHO: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetId {
    /// `(1/5) log cosh(5x)` times the localizing multiplier (scalar only).
    PaperVmod,
    /// `exp(-pi |x|^2)` in any dimension.
    Gaussian,
    /// Tabulated samples: CSV with columns `x1..xn,f[,g1..gn]`.
    Custom(PathBuf),
}

impl TargetId {
    /// `paper_vmod`, `gaussian`, or a path to a sample file.
    pub fn parse(s: &str) -> Self {
        match s {
            "paper_vmod" => TargetId::PaperVmod,
            "gaussian" => TargetId::Gaussian,
            path => TargetId::Custom(PathBuf::from(path)),
        }
    }
}

/// `V_mod = V r` and its derivative, with `r` from a numerical inverse transform.
#[derive(Clone, Debug)]
pub struct VmodFunction {
    multiplier: Multiplier,
}

impl VmodFunction {
    pub fn new(multiplier: Multiplier) -> Self {
        Self { multiplier }
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }

    pub fn value(&self, x: f64) -> f64 {
        paper_value(x) * self.multiplier.value(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        paper_value_derivative(x) * self.multiplier.value(x) + paper_value(x) * self.multiplier.derivative(x)
    }
}

impl Default for VmodFunction {
    fn default() -> Self {
        Self::new(Multiplier::default())
    }
}

pub fn gaussian(x: &[f64]) -> f64 {
    (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp()
}

pub fn gaussian_grad(x: &[f64]) -> Vec<f64> {
    let g = gaussian(x);
    x.iter().map(|v| -2.0 * PI * v * g).collect()
}

/// Values and gradients of a target on a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTarget {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub grads: Option<Vec<Vec<f64>>>,
}

impl SampledTarget {
    pub fn from_fn<F, G>(points: Vec<Vec<f64>>, value: F, grad: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
        G: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let values = points.par_iter().map(|x| value(x)).collect();
        let grads = points.par_iter().map(|x| grad(x)).collect();
        Self { points, values, grads: Some(grads) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads `x1..xn,f[,g1..gn]` rows; the header decides `n`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
        let header = reader.headers().map_err(csv_error)?.clone();
        let xs = header.iter().filter(|h| h.trim().starts_with('x')).count();
        let gs = header.iter().filter(|h| h.trim().starts_with('g')).count();
        if xs == 0 || header.len() != xs + 1 + gs || (gs != 0 && gs != xs) {
            return Err(Error::InvalidArgument(format!(
                "sample file header must be x1..xn,f[,g1..gn]; got {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut out = Self { points: Vec::new(), values: Vec::new(), grads: (gs > 0).then(Vec::new) };
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let nums = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
            if nums.len() != header.len() {
                return Err(Error::DimensionMismatch { expected: header.len(), got: nums.len() });
            }
            if nums.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sample file"));
            }
            out.points.push(nums[..xs].to_vec());
            out.values.push(nums[xs]);
            if let Some(g) = out.grads.as_mut() {
                g.push(nums[xs + 1..].to_vec());
            }
        }
        if out.points.is_empty() {
            return Err(Error::Empty("sample file"));
        }
        Ok(out)
    }

    fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// A target ready for the sweep: certificate plus samples on the fit and
/// evaluation sets.
#[derive(Clone, Debug)]
pub struct ResolvedTarget {
    pub name: String,
    pub certificate: SmoothnessCertificate,
    pub fit: SampledTarget,
    pub eval: SampledTarget,
}

/// Options that shape target resolution.
#[derive(Clone, Debug)]
pub struct TargetOptions {
    pub n: usize,
    pub radius: f64,
    pub fit_grid: usize,
    pub eval_grid: usize,
    pub multiplier_cutoff: f64,
    pub certificate: Option<SmoothnessCertificate>,
}

/// Points on the ball: `count` points on a line for `n = 1`, otherwise a
/// tensor grid with `round(count^(1/n))` points per axis clipped to the ball.
pub fn grid_points(n: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let per_axis = if n == 1 { count } else { (count as f64).powf(1.0 / n as f64).round().max(2.0) as usize };
    ball_grid(n, radius, per_axis)
}

fn uniform_floor(n: usize, radius: f64) -> Result<f64> {
    Ok(1.0 / (2.0 * radius * sphere_area(n)?))
}

/// Certificate for the Gaussian: `k = n + 3` and `rho` from a radial scan.
pub fn gaussian_certificate(n: usize, radius: f64) -> Result<SmoothnessCertificate> {
    let k = n as u32 + 3;
    let est = estimate_rho_radial(|r| (-PI * r * r).exp(), k, 12.0, 1e-3)?;
    Ok(SmoothnessCertificate { n, k, rho: est.rho_hat, radius, p_min: uniform_floor(n, radius)? })
}

/// Checks a user-supplied certificate against the uniform sampler.
fn check_certificate(cert: &SmoothnessCertificate, n: usize, radius: f64) -> Result<()> {
    cert.validate()?;
    if cert.n != n || cert.radius != radius {
        return Err(Error::InvalidCertificate(format!(
            "certificate is for n = {}, R = {} but the sweep uses n = {n}, R = {radius}",
            cert.n, cert.radius
        )));
    }
    let floor = uniform_floor(n, radius)?;
    if cert.p_min > floor * (1.0 + 1e-12) {
        return Err(Error::InvalidCertificate(format!(
            "p_min = {} exceeds the uniform sampling density {floor}",
            cert.p_min
        )));
    }
    Ok(())
}

pub fn resolve_target(id: &TargetId, opts: &TargetOptions) -> Result<ResolvedTarget> {
    let TargetOptions { n, radius, fit_grid, eval_grid, .. } = *opts;
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    match id {
        TargetId::PaperVmod => {
            if n != 1 {
                return Err(Error::InvalidArgument("paper_vmod is a scalar target (n = 1)".into()));
            }
            let certificate = match &opts.certificate {
                Some(c) => c.clone(),
                None => SmoothnessCertificate { n: 1, k: 4, rho: VMOD_RHO, radius, p_min: uniform_floor(1, radius)? },
            };
            check_certificate(&certificate, n, radius)?;
            let f = VmodFunction::new(Multiplier::new(opts.multiplier_cutoff, Multiplier::MAX_STEP)?);
            let sample = |count| {
                SampledTarget::from_fn(grid_points(1, radius, count), |x| f.value(x[0]), |x| vec![f.derivative(x[0])])
            };
            Ok(ResolvedTarget {
                name: "paper_vmod".into(),
                certificate,
                fit: sample(fit_grid),
                eval: sample(eval_grid),
            })
        }
        TargetId::Gaussian => {
            let certificate = match &opts.certificate {
                Some(c) => c.clone(),
                None => gaussian_certificate(n, radius)?,
            };
            check_certificate(&certificate, n, radius)?;
            let sample = |count| SampledTarget::from_fn(grid_points(n, radius, count), gaussian, gaussian_grad);
            Ok(ResolvedTarget { name: "gaussian".into(), certificate, fit: sample(fit_grid), eval: sample(eval_grid) })
        }
        TargetId::Custom(path) => {
            let certificate = opts.certificate.clone().ok_or_else(|| {
                Error::InvalidCertificate("a custom target needs an explicit certificate in the config".into())
            })?;
            check_certificate(&certificate, n, radius)?;
            let samples = SampledTarget::read_csv(path)?;
            if samples.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: samples.dim() });
            }
            Ok(ResolvedTarget { name: path.display().to_string(), certificate, fit: samples.clone(), eval: samples })
        }
    }
}

/// Result of the `rho` command.
#[derive(Clone, Debug)]
pub struct RhoReport {
    pub estimate: RhoEstimate,
    pub settings: RhoSettings,
    /// `(|w|, |f_hat(w)| (1 + |w|^k))` rows.
    pub profile: Vec<(f64, f64)>,
}

fn report_from_profile(profile: &FourierProfile, settings: RhoSettings) -> Result<RhoReport> {
    let estimate = estimate_rho(profile)?;
    let rows = profile.omega_grid.iter().copied().zip(profile.weighted.iter().copied()).collect();
    Ok(RhoReport { estimate, settings, profile: rows })
}

/// Smoothness estimate for a target. `n > 1` is supported for the Gaussian
/// through its radial transform.
pub fn rho_for_target(id: &TargetId, n: usize, settings: &RhoSettings, multiplier_cutoff: f64) -> Result<RhoReport> {
    match id {
        TargetId::PaperVmod => {
            if n != 1 {
                return Err(Error::InvalidArgument("paper_vmod is a scalar target (n = 1)".into()));
            }
            let f = VmodFunction::new(Multiplier::new(multiplier_cutoff, Multiplier::MAX_STEP)?);
            report_from_profile(&profile_1d(|x| f.value(x), settings)?, settings.clone())
        }
        TargetId::Gaussian if n == 1 => {
            report_from_profile(&profile_1d(|x| (-PI * x * x).exp(), settings)?, settings.clone())
        }
        TargetId::Gaussian => {
            let est =
                estimate_rho_radial(|r| (-PI * r * r).exp(), settings.k, settings.omega_max, settings.omega_step)?;
            let grid = UniformGrid::covering(0.0, settings.omega_max, settings.omega_step)?;
            let profile = grid
                .nodes()
                .into_iter()
                .map(|r| (r, (-PI * r * r).exp() * (1.0 + r.powi(settings.k as i32))))
                .collect();
            Ok(RhoReport { estimate: est, settings: settings.clone(), profile })
        }
        TargetId::Custom(path) => {
            let samples = SampledTarget::read_csv(path)?;
            if samples.dim() != 1 {
                return Err(Error::InvalidArgument("sample-file smoothness estimates are one-dimensional".into()));
            }
            let xs: Vec<f64> = samples.points.iter().map(|p| p[0]).collect();
            let grid = uniform_grid_of(&xs)?;
            let omega = UniformGrid::symmetric(settings.omega_max, settings.omega_step)?.nodes();
            let limit = 1.0 / (8.0 * settings.omega_max);
            if grid.step > limit {
                return Err(Error::Resolution { step: grid.step, omega_max: settings.omega_max, limit });
            }
            let f_hat = forward_ft_samples(&grid, &samples.values, &omega)?;
            let profile = FourierProfile::new(omega, f_hat, settings.k)?;
            let mut s = settings.clone();
            s.x_half_width = xs[xs.len() - 1].abs().max(xs[0].abs());
            s.x_step = grid.step;
            report_from_profile(&profile, s)
        }
    }
}

/// The uniform grid through `xs`, which must be increasing with equal spacing.
fn uniform_grid_of(xs: &[f64]) -> Result<UniformGrid> {
    if xs.len() < 3 {
        return Err(Error::InvalidArgument("need at least three samples".into()));
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + i as f64 * step)).abs() > 1e-9 * step.abs().max(1.0) || !(step > 0.0) {
            return Err(Error::InvalidArgument("sample abscissae must be increasing and equally spaced".into()));
        }
    }
    Ok(UniformGrid { origin: xs[0], first: 0, step, count: xs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_ids() {
        assert_eq!(TargetId::parse("paper_vmod"), TargetId::PaperVmod);
        assert_eq!(TargetId::parse("gaussian"), TargetId::Gaussian);
        assert_eq!(TargetId::parse("a.csv"), TargetId::Custom("a.csv".into()));
        let json = serde_json::to_string(&TargetId::PaperVmod).unwrap();
        assert_eq!(json, "\"paper_vmod\"");
        let c: TargetId = serde_json::from_str(r#"{"custom": "f.csv"}"#).unwrap();
        assert_eq!(c, TargetId::Custom("f.csv".into()));
    }

    #[test]
    fn vmod_at_origin_and_plateau() {
        let f = VmodFunction::default();
        assert_eq!(f.value(0.0), 0.0);
        for x in [-0.9, -0.3, 0.4, 1.0] {
            assert!((f.value(x) - paper_value(x)).abs() < 1e-9);
            assert!((f.derivative(x) - paper_value_derivative(x)).abs() < 1e-9);
        }
        assert!(f.value(2.2).abs() < 1e-9);
    }

    #[test]
    fn gaussian_gradient() {
        let x = [0.3, -0.2];
        let g = gaussian_grad(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut up = x;
            let mut down = x;
            up[i] += h;
            down[i] -= h;
            assert!(((gaussian(&up) - gaussian(&down)) / (2.0 * h) - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_certificate_values() {
        let c = gaussian_certificate(1, 1.0).unwrap();
        assert_eq!(c.k, 4);
        assert!((c.rho - 1.0).abs() < 1e-12);
        assert_eq!(c.p_min, 0.25);
        let c2 = gaussian_certificate(2, 1.0).unwrap();
        assert_eq!(c2.k, 5);
        assert!(c2.rho >= 1.0);
    }

    #[test]
    fn grids_have_requested_size() {
        assert_eq!(grid_points(1, 1.0, 2001).len(), 2001);
        let g = grid_points(2, 1.0, 441);
        assert!(g.len() > 300 && g.len() <= 441);
        assert!(g.iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12));
    }

    #[test]
    fn certificate_checks() {
        let opts = |cert| TargetOptions {
            n: 1,
            radius: 1.0,
            fit_grid: 11,
            eval_grid: 21,
            multiplier_cutoff: 40.0,
            certificate: cert,
        };
        assert!(resolve_target(&TargetId::Gaussian, &opts(None)).is_ok());
        let bad = SmoothnessCertificate { n: 1, k: 4, rho: 1.0, radius: 1.0, p_min: 0.5 };
        assert!(matches!(resolve_target(&TargetId::Gaussian, &opts(Some(bad))), Err(Error::InvalidCertificate(_))));
        assert!(resolve_target(&TargetId::Custom("missing.csv".into()), &opts(None)).is_err());
        let wrong_n = TargetOptions { n: 2, ..opts(None) };
        assert!(resolve_target(&TargetId::PaperVmod, &wrong_n).is_err());
    }

    #[test]
    fn custom_samples_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "x1,f,g1\n-0.5,0.25,-1\n0,0,0\n0.5,0.25,1\n").unwrap();
        let s = SampledTarget::read_csv(&path).unwrap();
        assert_eq!(s.points, vec![vec![-0.5], vec![0.0], vec![0.5]]);
        assert_eq!(s.values, vec![0.25, 0.0, 0.25]);
        assert_eq!(s.grads.as_ref().unwrap()[2], vec![1.0]);

        let cert = SmoothnessCertificate { n: 1, k: 4, rho: 1.0, radius: 1.0, p_min: 0.25 };
        let opts = TargetOptions {
            n: 1,
            radius: 1.0,
            fit_grid: 0,
            eval_grid: 0,
            multiplier_cutoff: 40.0,
            certificate: Some(cert),
        };
        let t = resolve_target(&TargetId::Custom(path.clone()), &opts).unwrap();
        assert_eq!(t.fit, t.eval);

        std::fs::write(&path, "x1,f,g1,g2\n0,0,0,0\n").unwrap();
        assert!(SampledTarget::read_csv(&path).is_err());
        std::fs::write(&path, "x1,f\n0,abc\n").unwrap();
        assert!(SampledTarget::read_csv(&path).is_err());
    }

    #[test]
    fn sample_file_rho_matches_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let mut body = String::from("x1,f\n");
        for i in 0..=1600 {
            let x = -8.0 + i as f64 / 100.0;
            body.push_str(&format!("{x},{}\n", (-PI * x * x).exp()));
        }
        std::fs::write(&path, body).unwrap();
        let settings = RhoSettings { k: 4, x_half_width: 8.0, x_step: 0.01, omega_max: 10.0, omega_step: 0.01 };
        let r = rho_for_target(&TargetId::Custom(path), 1, &settings, 40.0).unwrap();
        assert!((r.estimate.rho_hat - 1.0).abs() < 1e-6);
        assert_eq!(r.profile.len(), 2001);
        assert!(uniform_grid_of(&[0.0, 1.0, 3.0]).is_err());
    }
}
