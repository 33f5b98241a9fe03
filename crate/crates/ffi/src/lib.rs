//! C interface to `certirelu`.
//!
//! Networks cross the boundary as opaque `CrNetwork` handles. Every fallible
//! function returns a [`CrStatus`]; on failure a message is kept per thread
//! and can be read with [`cr_last_error`]. Strings returned by the library
//! must be released with [`cr_string_free`] and handles with
//! [`cr_network_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use certirelu::bounds::{derived_constants, GradNorm, SmoothnessCertificate};
use certirelu::fitting::{fit_least_squares, FitProblem};
use certirelu::sampling::{sample_pairs, trial_rng, SamplingDensity};
use certirelu::{Error, ShallowReluNetwork};

/// Result codes. `CR_STATUS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidUtf8 = 4,
    Parse = 5,
    FitFailed = 6,
    Panic = 7,
    Internal = 8,
}

/// Opaque network handle.
pub struct CrNetwork(ShallowReluNetwork);

/// Smoothness certificate; `radius` is the ball radius `R`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CrCertificate {
    pub n: usize,
    pub k: u32,
    pub rho: f64,
    pub radius: f64,
    pub p_min: f64,
}

/// Constants derived from a certificate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CrBoundConstants {
    pub sphere_area: f64,
    pub beta: f64,
    pub lipschitz: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub zeta0: f64,
    pub zeta1: f64,
    pub a_cap: f64,
    pub b_cap: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrGradNorm {
    Two = 0,
    Inf = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> CrStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::InvalidDimension(_) => CrStatus::DimensionMismatch,
        Error::Json(_) => CrStatus::Parse,
        Error::FitFailed(_) => CrStatus::FitFailed,
        Error::Io(_) => CrStatus::Internal,
        _ => CrStatus::InvalidArgument,
    }
}

struct Fail(CrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CrStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            CrStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn network<'a>(net: *const CrNetwork) -> Result<&'a ShallowReluNetwork, Fail> {
    net.as_ref().map(|h| &h.0).ok_or_else(|| null("network"))
}

unsafe fn certificate(cert: *const CrCertificate) -> Result<SmoothnessCertificate, Fail> {
    let c = cert.as_ref().ok_or_else(|| null("certificate"))?;
    Ok(SmoothnessCertificate { n: c.n, k: c.k, rho: c.rho, radius: c.radius, p_min: c.p_min })
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn cr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a network from JSON `{"n", "a", "b", "units": [{"alpha", "t", "c"}]}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_network_from_json(json: *const c_char, out: *mut *mut CrNetwork) -> CrStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Fail(CrStatus::InvalidUtf8, e.to_string()))?;
        let net = ShallowReluNetwork::from_json(text)?;
        *out = Box::into_raw(Box::new(CrNetwork(net)));
        Ok(())
    })
}

/// Serializes a network to JSON. Release the string with [`cr_string_free`].
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_network_to_json(net: *const CrNetwork, out: *mut *mut c_char) -> CrStatus {
    guard(|| {
        let net = network(net)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(net.to_json()?).map_err(|e| Fail(CrStatus::Internal, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn cr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `net` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_network_free(net: *mut CrNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Input dimension, or 0 for a null handle.
///
/// # Safety
/// `net` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cr_network_dim(net: *const CrNetwork) -> usize {
    net.as_ref().map_or(0, |h| h.0.dim())
}

/// Number of hidden units, or 0 for a null handle.
///
/// # Safety
/// `net` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cr_network_num_units(net: *const CrNetwork) -> usize {
    net.as_ref().map_or(0, |h| h.0.num_units())
}

/// Writes `f_N(x)` to `out`. `x` holds `n` values.
///
/// # Safety
/// `x` must point to `n` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_network_eval(net: *const CrNetwork, x: *const f64, n: usize, out: *mut f64) -> CrStatus {
    guard(|| {
        let net = network(net)?;
        let x = slice(x, n, "x")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = net.eval(x)?;
        Ok(())
    })
}

/// Writes the `n` components of `grad f_N(x)` to `grad`.
///
/// # Safety
/// `x` must point to `n` readable doubles and `grad` to `n` writable ones.
#[no_mangle]
pub unsafe extern "C" fn cr_network_eval_grad(
    net: *const CrNetwork,
    x: *const f64,
    n: usize,
    grad: *mut f64,
) -> CrStatus {
    guard(|| {
        let net = network(net)?;
        let x = slice(x, n, "x")?;
        if grad.is_null() {
            return Err(null("grad"));
        }
        let g = net.eval_grad(x)?;
        ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len());
        Ok(())
    })
}

/// Samples `m` units uniformly on `S^{n-1} x [-radius, radius]` from stream
/// `stream` of the generator keyed by `seed`, then fits the output weights
/// by least squares to `targets` at the row-major `num_points x n` array
/// `points`.
///
/// # Safety
/// `points` must hold `num_points * n` doubles, `targets` `num_points`, and
/// `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fit_uniform(
    n: usize,
    radius: f64,
    m: usize,
    seed: u64,
    stream: u64,
    points: *const f64,
    num_points: usize,
    targets: *const f64,
    ridge: f64,
    out: *mut *mut CrNetwork,
) -> CrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err(Error::InvalidDimension(0).into());
        }
        let flat = slice(points, num_points.checked_mul(n).ok_or_else(|| null("points"))?, "points")?;
        let targets = slice(targets, num_points, "targets")?;
        let density = SamplingDensity::uniform(n, radius)?;
        let samples = sample_pairs(&density, m, &mut trial_rng(seed, stream))?;
        let pts = flat.chunks(n).map(<[f64]>::to_vec).collect();
        let mut problem = FitProblem::values(samples, radius, pts, targets.to_vec());
        problem.ridge = ridge;
        let fitted = fit_least_squares(&problem)?;
        *out = Box::into_raw(Box::new(CrNetwork(fitted.network)));
        Ok(())
    })
}

/// # Safety
/// `cert` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_bound_constants(cert: *const CrCertificate, out: *mut CrBoundConstants) -> CrStatus {
    guard(|| {
        let r = derived_constants(&certificate(cert)?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = CrBoundConstants {
            sphere_area: r.sphere_area,
            beta: r.beta,
            lipschitz: r.lipschitz,
            kappa1: r.kappa1,
            kappa2: r.kappa2,
            zeta0: r.zeta0,
            zeta1: r.zeta1,
            a_cap: r.a_cap,
            b_cap: r.b_cap,
        };
        Ok(())
    })
}

/// Function-error bound at width `m` and confidence `1 - delta`.
///
/// # Safety
/// `cert` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_rhs_function(cert: *const CrCertificate, m: usize, delta: f64, out: *mut f64) -> CrStatus {
    guard(|| {
        let v = derived_constants(&certificate(cert)?)?.rhs_function(m, delta)?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// Gradient-error bound at width `m` and confidence `1 - delta`.
///
/// # Safety
/// `cert` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_rhs_grad(
    cert: *const CrCertificate,
    m: usize,
    delta: f64,
    norm: CrGradNorm,
    out: *mut f64,
) -> CrStatus {
    guard(|| {
        let norm = match norm {
            CrGradNorm::Two => GradNorm::Two,
            CrGradNorm::Inf => GradNorm::Inf,
        };
        let v = derived_constants(&certificate(cert)?)?.rhs_grad(m, delta, norm)?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}
