//! Certificate constants and high-probability error bounds.
//!
//! Everything here is a closed-form function of a [`SmoothnessCertificate`]:
//! the Fourier decay level `rho` (for an integer order `k`), the ball radius
//! `R` and the floor `P_min` of the sampling density. The bounds hold for the
//! importance-sampled coefficients, so they also bound what least squares can
//! achieve on the same input parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surface area `A_{n-1}` of the unit sphere in `R^n`.
///
/// Uses `A_{n+1} = 2 pi A_{n-1} / n` from the seeds `A_0 = 2` (two points
/// under counting measure) and `A_1 = 2 pi`, which equals
/// `2 pi^{n/2} / Gamma(n/2)` without needing a gamma function.
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let (mut area, mut dim) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while dim < n {
        area *= 2.0 * PI / dim as f64;
        dim += 2;
    }
    Ok(area)
}

/// Smoothness and sampling data consumed by every bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCertificate {
    /// State dimension.
    pub n: usize,
    /// Fourier decay order; must satisfy `k >= n + 3`.
    pub k: u32,
    /// Bound on `sup |f_hat(w)| (1 + |w|^k)`.
    pub rho: f64,
    /// Radius of the approximation ball.
    #[serde(rename = "R", alias = "radius")]
    pub radius: f64,
    /// Positive lower bound of the sampling density.
    pub p_min: f64,
}

impl SmoothnessCertificate {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if (self.k as usize) < self.n + 3 {
            return Err(Error::InvalidCertificate(format!("k = {} must be at least n + 3 = {}", self.k, self.n + 3)));
        }
        for (name, v) in [("rho", self.rho), ("R", self.radius), ("p_min", self.p_min)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidCertificate(format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }
}

/// Which norm the gradient bound controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradNorm {
    Two,
    Inf,
}

/// Grouping of the function-error bound.
///
/// `Grouped` places every term under the common `1/sqrt(m)` factor and
/// applies the `delta/2` split of the joint event; it is the form that
/// vanishes as `m` grows. `AsTypeset` keeps the covering term outside the
/// `1/sqrt(m)` factor. It does not decay in `m` and is only exposed for
/// auditing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionBoundForm {
    #[default]
    Grouped,
    AsTypeset,
}

/// Caps on the output coefficients of the importance-sampled network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCaps {
    pub a_max: f64,
    pub b_max: f64,
    pub c_max: f64,
}

/// Derived constants of a certificate together with the RHS evaluators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub certificate: SmoothnessCertificate,
    /// `A_{n-1}`.
    pub sphere_area: f64,
    pub beta: f64,
    /// Lipschitz constant `L` of the sampled summands.
    pub lipschitz: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub zeta0: f64,
    pub zeta1: f64,
    pub a_cap: f64,
    pub b_cap: f64,
    /// `8 pi^2 rho / P_min`; the coefficient cap is this over `m`, and it is
    /// also the scale of the per-coordinate gradient bound.
    pub g_scale: f64,
}

/// Compute every constant of the certificate.
pub fn derived_constants(cert: &SmoothnessCertificate) -> Result<BoundReport> {
    cert.validate()?;
    let n = cert.n as f64;
    let rho = cert.rho;
    let r = cert.radius;
    let p_min = cert.p_min;
    let area = sphere_area(cert.n)?;
    let pi2 = PI * PI;

    let beta = 16.0 * pi2 * rho * r / p_min + (4.0 + 8.0 * PI * r) * area * rho;
    let lipschitz = 8.0 * pi2 * rho / p_min + 8.0 * PI * area * rho;
    let g_scale = 8.0 * pi2 * rho / p_min;
    Ok(BoundReport {
        certificate: cert.clone(),
        sphere_area: area,
        beta,
        lipschitz,
        kappa1: 4.0 * beta,
        kappa2: beta * (2.0 * n).sqrt(),
        zeta0: 64.0 * pi2 * (n + 1.0) * rho / p_min,
        zeta1: 8.0 * (2.0 * n).sqrt() * pi2 * rho / p_min,
        a_cap: 4.0 * PI * area * rho,
        b_cap: (2.0 + 4.0 * PI * r) * area * rho,
        g_scale,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")))
    }
}

impl BoundReport {
    /// Cap on `|c_i|` for a network with `m` units.
    pub fn c_cap(&self, m: usize) -> f64 {
        self.g_scale / m as f64
    }

    pub fn caps(&self, m: usize) -> CoefficientCaps {
        CoefficientCaps { a_max: self.a_cap, b_max: self.b_cap, c_max: self.c_cap(m) }
    }

    /// Sup-norm function error bound at confidence `1 - delta`.
    pub fn rhs_function(&self, m: usize, delta: f64) -> Result<f64> {
        self.rhs_function_with(FunctionBoundForm::Grouped, m, delta)
    }

    pub fn rhs_function_with(&self, form: FunctionBoundForm, m: usize, delta: f64) -> Result<f64> {
        if m == 0 {
            return Err(Error::Precondition("m must be at least 1".into()));
        }
        check_delta(delta)?;
        let sm = (m as f64).sqrt();
        let confidence = self.kappa1 * (2.0 / delta).ln().sqrt();
        let covering = self.kappa2 * (2.0 * (1.0 + 2.0 * self.certificate.radius * self.lipschitz * sm)).ln().sqrt();
        Ok(match form {
            FunctionBoundForm::Grouped => (1.0 + confidence + covering) / sm,
            FunctionBoundForm::AsTypeset => (1.0 + confidence) / sm + covering,
        })
    }

    /// Sup-norm gradient error bound in the requested norm. Requires `m >= n + 1`.
    pub fn rhs_grad(&self, m: usize, delta: f64, norm: GradNorm) -> Result<f64> {
        let n = self.certificate.n;
        if m < n + 1 {
            return Err(Error::Precondition(format!("gradient bound needs m >= n + 1 = {}, got {m}", n + 1)));
        }
        check_delta(delta)?;
        let mf = m as f64;
        let nf = n as f64;
        let log_m = (mf + 1.0).ln();
        Ok(match norm {
            GradNorm::Two => (self.zeta0 * log_m.sqrt() + self.zeta1 * (2.0 * nf / delta).ln().sqrt()) / mf.sqrt(),
            GradNorm::Inf => {
                let inner = 8.0 * ((nf + 1.0) * log_m).sqrt() + (2.0 * (nf / delta).ln()).sqrt();
                self.g_scale * inner / mf.sqrt()
            }
        })
    }

    /// Joint value/gradient bound: the larger of the function bound and the
    /// two-norm gradient bound, both of which hold on one `1 - delta` event.
    pub fn rhs_policy_eval(&self, m: usize, delta: f64) -> Result<f64> {
        let f = self.rhs_function(m, delta)?;
        let g = self.rhs_grad(m, delta, GradNorm::Two)?;
        Ok(f.max(g))
    }

    /// RHS table over a list of network sizes.
    pub fn table(&self, m_list: &[usize], delta: f64) -> Result<Vec<BoundRow>> {
        m_list
            .iter()
            .map(|&m| {
                Ok(BoundRow {
                    m,
                    rhs_f: self.rhs_function(m, delta)?,
                    rhs_g2: self.rhs_grad(m, delta, GradNorm::Two)?,
                    rhs_ginf: self.rhs_grad(m, delta, GradNorm::Inf)?,
                    rhs_pe: self.rhs_policy_eval(m, delta)?,
                    c_cap: self.c_cap(m),
                })
            })
            .collect()
    }
}

/// One row of a bound table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub m: usize,
    pub rhs_f: f64,
    pub rhs_g2: f64,
    pub rhs_ginf: f64,
    pub rhs_pe: f64,
    pub c_cap: f64,
}

/// Serializable document: the constants plus an RHS table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundDocument {
    pub report: BoundReport,
    pub delta: f64,
    pub form: FunctionBoundForm,
    pub table: Vec<BoundRow>,
}

impl BoundDocument {
    pub fn new(report: BoundReport, m_list: &[usize], delta: f64) -> Result<Self> {
        let table = report.table(m_list, delta)?;
        Ok(Self { report, delta, form: FunctionBoundForm::Grouped, table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_cert() -> SmoothnessCertificate {
        SmoothnessCertificate { n: 1, k: 4, rho: 2.0, radius: 1.0, p_min: 0.25 }
    }

    #[test]
    fn sphere_area_low_dimensions() {
        assert_eq!(sphere_area(1).unwrap(), 2.0);
        assert!((sphere_area(2).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        assert!(matches!(sphere_area(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn sphere_area_peaks_at_seven() {
        let a7 = sphere_area(7).unwrap();
        assert!((a7 - 16.0 * PI.powi(3) / 15.0).abs() < 1e-12);
        assert!((a7 - 33.0734).abs() < 1e-4);
        for n in 1..=20 {
            assert!(sphere_area(n).unwrap() <= a7, "n = {n}");
        }
    }

    #[test]
    fn certificate_validation() {
        assert!(scalar_cert().validate().is_ok());
        let low_k = SmoothnessCertificate { k: 3, ..scalar_cert() };
        assert!(matches!(low_k.validate(), Err(Error::InvalidCertificate(_))));
        let bad_rho = SmoothnessCertificate { rho: 0.0, ..scalar_cert() };
        assert!(derived_constants(&bad_rho).is_err());
        let bad_p = SmoothnessCertificate { p_min: -1.0, ..scalar_cert() };
        assert!(derived_constants(&bad_p).is_err());
    }

    #[test]
    fn kappa_relations() {
        let r = derived_constants(&SmoothnessCertificate { n: 3, k: 6, ..scalar_cert() }).unwrap();
        assert_eq!(r.kappa1, 4.0 * r.beta);
        assert_eq!(r.kappa2, r.beta * 6f64.sqrt());
    }

    #[test]
    fn degenerate_constants_isolate_leading_term() {
        let mut r = derived_constants(&scalar_cert()).unwrap();
        r.kappa1 = 0.0;
        r.kappa2 = 0.0;
        for m in [1, 7, 100, 4096] {
            let v = r.rhs_function(m, 0.3).unwrap();
            assert!((v - 1.0 / (m as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn typeset_form_does_not_decay() {
        let r = derived_constants(&scalar_cert()).unwrap();
        let small = r.rhs_function_with(FunctionBoundForm::AsTypeset, 1 << 10, 0.1).unwrap();
        let large = r.rhs_function_with(FunctionBoundForm::AsTypeset, 1 << 20, 0.1).unwrap();
        assert!(large > r.kappa2);
        assert!(large > small);
        assert!(r.rhs_function(1 << 20, 0.1).unwrap() < r.rhs_function(1 << 10, 0.1).unwrap());
    }

    #[test]
    fn argument_errors() {
        let r = derived_constants(&scalar_cert()).unwrap();
        assert!(r.rhs_function(0, 0.1).is_err());
        assert!(r.rhs_function(10, 0.0).is_err());
        assert!(r.rhs_function(10, 1.0).is_err());
        assert!(matches!(r.rhs_grad(1, 0.1, GradNorm::Two), Err(Error::Precondition(_))));
        assert!(r.rhs_grad(2, 0.1, GradNorm::Two).is_ok());
        assert!(r.rhs_grad(2, 1.5, GradNorm::Inf).is_err());
        assert!(r.rhs_policy_eval(1, 0.1).is_err());
    }

    #[test]
    fn gradient_bound_dominates_at_512() {
        let r = derived_constants(&scalar_cert()).unwrap();
        let f = r.rhs_function(512, 0.1).unwrap();
        let g = r.rhs_grad(512, 0.1, GradNorm::Two).unwrap();
        assert!(g > f);
        assert_eq!(r.rhs_policy_eval(512, 0.1).unwrap(), g);
    }

    #[test]
    fn bounds_decrease_in_m_and_increase_as_delta_shrinks() {
        let r = derived_constants(&scalar_cert()).unwrap();
        let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for e in 2..=20 {
            let m = 1usize << e;
            let cur = (
                r.rhs_function(m, 0.1).unwrap(),
                r.rhs_grad(m, 0.1, GradNorm::Two).unwrap(),
                r.rhs_grad(m, 0.1, GradNorm::Inf).unwrap(),
            );
            assert!(cur.0 < prev.0 && cur.1 < prev.1 && cur.2 < prev.2, "m = {m}");
            prev = cur;
        }
        let mut prev = 0.0;
        for delta in [0.9, 0.5, 0.1, 1e-3, 1e-9] {
            let v = r.rhs_function(64, delta).unwrap() + r.rhs_grad(64, delta, GradNorm::Two).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn grad_bound_strictly_decreasing_dense_scan() {
        let r = derived_constants(&scalar_cert()).unwrap();
        let mut prev = f64::INFINITY;
        let mut m = 2usize;
        while m <= 1_000_000 {
            let v = r.rhs_grad(m, 0.1, GradNorm::Two).unwrap();
            assert!(v < prev, "m = {m}");
            prev = v;
            m = if m < 1000 { m + 1 } else { m + m / 100 };
        }
    }

    #[test]
    fn policy_eval_bound_is_max_and_monotone() {
        let r = derived_constants(&scalar_cert()).unwrap();
        let mut prev = f64::INFINITY;
        let mut m = 2;
        while m <= 4096 {
            let pe = r.rhs_policy_eval(m, 0.1).unwrap();
            let f = r.rhs_function(m, 0.1).unwrap();
            let g = r.rhs_grad(m, 0.1, GradNorm::Two).unwrap();
            assert_eq!(pe, f.max(g));
            assert!(pe < prev);
            prev = pe;
            m += 2;
        }
    }

    #[test]
    fn constants_monotone_in_rho_and_p_min() {
        let base = derived_constants(&scalar_cert()).unwrap();
        let more_rho = derived_constants(&SmoothnessCertificate { rho: 3.0, ..scalar_cert() }).unwrap();
        let more_p = derived_constants(&SmoothnessCertificate { p_min: 0.5, ..scalar_cert() }).unwrap();
        let fields = |r: &BoundReport| [r.beta, r.lipschitz, r.kappa1, r.kappa2, r.zeta0, r.zeta1, r.g_scale];
        for (b, (hi, lo)) in fields(&base).iter().zip(fields(&more_rho).iter().zip(fields(&more_p).iter())) {
            assert!(hi > b);
            assert!(lo < b);
        }
    }

    #[test]
    fn table_serializes() {
        let r = derived_constants(&scalar_cert()).unwrap();
        let doc = BoundDocument::new(r, &[16, 64], 0.1).unwrap();
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"kappa1\""));
        assert!(json.contains("\"R\":1.0"));
        let back: BoundDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.table, doc.table);
    }
}
