//! C ABI over the glance library.
//!
//! Objects are opaque handles created by `*_new`/`*_solve`/`*_synthesize`
//! and released by the matching `*_free`. Every fallible call returns a
//! [`GlanceStatus`]; the message of the last failure on the calling thread is
//! available from [`glance_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use glance::frobenius::{solve_spectral, SpectralSolution};
use glance::model::{Covector, Mode, ModelParams};
use glance::rays::Sign;
use glance::resolvent_probe::{resolvent_norm_scan, GridSpec};
use glance::specfun::airy_ai;
use glance::synthesis::{shadow_exponent_fit, synthesize_field, Field2D, ThetaGrid, YGrid};
use glance::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlanceStatus {
    Ok = 0,
    Domain = 1,
    Range = 2,
    Pole = 3,
    Degenerate = 4,
    Precondition = 5,
    Integrator = 6,
    Iteration = 7,
    Property = 8,
    Config = 9,
    Io = 10,
    NullPointer = 11,
    Panic = 12,
}

/// Spectral family selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlanceMode {
    Ads = 0,
    Friedlander = 1,
}

/// Extended profile selector for the resolvent probe.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlanceSign {
    Plus = 0,
    Minus = 1,
}

/// Model parameters (`n`, `λ`, mode).
pub struct GlanceModel {
    params: ModelParams,
}

/// One solved spectral column.
pub struct GlanceSpectral {
    sol: SpectralSolution,
}

/// Synthesized field on a set of x rows.
pub struct GlanceField {
    field: Field2D,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> GlanceStatus {
    match e {
        Error::Domain(_) => GlanceStatus::Domain,
        Error::Range(_) => GlanceStatus::Range,
        Error::Pole(_) => GlanceStatus::Pole,
        Error::Degenerate(_) => GlanceStatus::Degenerate,
        Error::Precondition(_) => GlanceStatus::Precondition,
        Error::Integrator(_) => GlanceStatus::Integrator,
        Error::Iteration(_) => GlanceStatus::Iteration,
        Error::Property(_) => GlanceStatus::Property,
        Error::Config(_) => GlanceStatus::Config,
        Error::Io(_) => GlanceStatus::Io,
    }
}

fn set_error(msg: String) {
    LAST_ERROR.with(|m| *m.borrow_mut() = msg);
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (GlanceStatus, String)>>(f: F) -> GlanceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GlanceStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside glance".into());
            GlanceStatus::Panic
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (GlanceStatus, String)>;
}

impl<T> Lift<T> for glance::Result<T> {
    fn lift(self) -> Result<T, (GlanceStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (GlanceStatus, String) {
    (GlanceStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GlanceStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (GlanceStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn glance_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && len > 0 {
            let n = m.len().min(len - 1);
            ptr::copy_nonoverlapping(m.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}

/// # Safety
/// `out` must be a valid pointer; the handle is released with [`glance_model_free`].
#[no_mangle]
pub unsafe extern "C" fn glance_model_new(n: usize, lambda: f64, mode: GlanceMode, out: *mut *mut GlanceModel) -> GlanceStatus {
    guard(|| {
        let mode = match mode {
            GlanceMode::Ads => Mode::Ads,
            GlanceMode::Friedlander => Mode::Friedlander,
        };
        let params = ModelParams::new(n, lambda, mode).lift()?;
        write_out(out, Box::into_raw(Box::new(GlanceModel { params })), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from [`glance_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn glance_model_free(model: *mut GlanceModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Indicial roots `s₋ < s₊`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn glance_model_exponents(model: *const GlanceModel, s_minus: *mut f64, s_plus: *mut f64) -> GlanceStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write_out(s_minus, m.params.s_minus, "s_minus")?;
        write_out(s_plus, m.params.s_plus, "s_plus")
    })
}

/// Solves the spectral ODE for `(θ', θn)` on the default uniform grid up to `x_max`.
///
/// # Safety
/// Pointers must be valid; release the result with [`glance_spectral_free`].
#[no_mangle]
pub unsafe extern "C" fn glance_spectral_solve(
    model: *const GlanceModel,
    theta_prime: f64,
    theta_n: f64,
    x_max: f64,
    tol: f64,
    out: *mut *mut GlanceSpectral,
) -> GlanceStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let cov = Covector::planar(theta_prime, theta_n).lift()?;
        let sol = solve_spectral(&m.params, &cov, x_max, tol).lift()?;
        write_out(out, Box::into_raw(Box::new(GlanceSpectral { sol })), "out")
    })
}

/// Number of grid points in a spectral solution (0 for a null handle).
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glance_spectral_len(sol: *const GlanceSpectral) -> usize {
    sol.as_ref().map_or(0, |s| s.sol.x_grid.len())
}

/// Copies grid, real and imaginary parts into caller buffers of length `len`.
///
/// # Safety
/// Each buffer must be null (skipped) or hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn glance_spectral_copy(
    sol: *const GlanceSpectral,
    x: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> GlanceStatus {
    guard(|| {
        let s = &deref(sol, "solution")?.sol;
        if len != s.x_grid.len() {
            return Err((GlanceStatus::Config, format!("buffer length {len} != {}", s.x_grid.len())));
        }
        for i in 0..len {
            if !x.is_null() {
                *x.add(i) = s.x_grid[i];
            }
            if !re.is_null() {
                *re.add(i) = s.values[i].re;
            }
            if !im.is_null() {
                *im.add(i) = s.values[i].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glance_spectral_free(sol: *mut GlanceSpectral) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Synthesizes the field on `rows` (length `nrows`) with an `points × points`
/// frequency box of half-width `theta_max`. A negative `epsilon` selects the
/// default taper.
///
/// # Safety
/// Pointers must be valid; release the result with [`glance_field_free`].
#[no_mangle]
pub unsafe extern "C" fn glance_field_synthesize(
    model: *const GlanceModel,
    points: usize,
    theta_max: f64,
    epsilon: f64,
    rows: *const f64,
    nrows: usize,
    out: *mut *mut GlanceField,
) -> GlanceStatus {
    guard(|| {
        let m = deref(model, "model")?;
        if rows.is_null() {
            return Err(null("rows"));
        }
        let rows = std::slice::from_raw_parts(rows, nrows);
        let theta = ThetaGrid { points, theta_max };
        let eps = if epsilon < 0.0 { glance::synthesis::default_epsilon(&theta) } else { epsilon };
        let field = synthesize_field(&m.params, &theta, eps, &YGrid::dual(&theta), rows).lift()?;
        write_out(out, Box::into_raw(Box::new(GlanceField { field })), "out")
    })
}

/// Number of x rows and samples per axis.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn glance_field_dims(field: *const GlanceField, nrows: *mut usize, ny: *mut usize) -> GlanceStatus {
    guard(|| {
        let f = &deref(field, "field")?.field;
        write_out(nrows, f.x.len(), "nrows")?;
        write_out(ny, f.y.points, "ny")
    })
}

/// Copies row `row` as interleaved (re, im) pairs into `buf` of `2·ny²` doubles.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn glance_field_row(field: *const GlanceField, row: usize, buf: *mut f64, len: usize) -> GlanceStatus {
    guard(|| {
        let f = &deref(field, "field")?.field;
        if row >= f.x.len() {
            return Err((GlanceStatus::Config, format!("row {row} out of range")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let r = f.row(row);
        if len != 2 * r.len() {
            return Err((GlanceStatus::Config, format!("buffer length {len} != {}", 2 * r.len())));
        }
        for (i, v) in r.iter().enumerate() {
            *buf.add(2 * i) = v.re;
            *buf.add(2 * i + 1) = v.im;
        }
        Ok(())
    })
}

/// Median boundary exponent over cells with `y_n > beta`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn glance_field_shadow_fit(field: *const GlanceField, beta: f64, exponent: *mut f64) -> GlanceStatus {
    guard(|| {
        let f = &deref(field, "field")?.field;
        let fit = shadow_exponent_fit(f, beta).lift()?;
        write_out(exponent, fit.exponent, "exponent")
    })
}

/// Writes row `row` as a GLNC1 grid file at the NUL-terminated UTF-8 `path`.
///
/// # Safety
/// `path` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn glance_field_write_grid(field: *const GlanceField, row: usize, path: *const c_char) -> GlanceStatus {
    guard(|| {
        let f = &deref(field, "field")?.field;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| (GlanceStatus::Io, "path is not UTF-8".to_string()))?;
        if row >= f.x.len() {
            return Err((GlanceStatus::Config, format!("row {row} out of range")));
        }
        let bytes = f.row_grid(row).to_bytes().lift()?;
        std::fs::write(path, bytes).map_err(|e| (GlanceStatus::Io, format!("{path}: {e}")))
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glance_field_free(field: *mut GlanceField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Fitted exponent `p` of `‖R(h)‖ ∝ h^p` over a geometric `h` list.
///
/// # Safety
/// `h` must hold `nh` doubles and `exponent` must be valid.
#[no_mangle]
pub unsafe extern "C" fn glance_resolvent_exponent(
    sign: GlanceSign,
    h: *const f64,
    nh: usize,
    epsilon: f64,
    exponent: *mut f64,
) -> GlanceStatus {
    guard(|| {
        if h.is_null() {
            return Err(null("h"));
        }
        let hs = std::slice::from_raw_parts(h, nh);
        let sign = match sign {
            GlanceSign::Plus => Sign::Plus,
            GlanceSign::Minus => Sign::Minus,
        };
        let r = resolvent_norm_scan(sign, hs, epsilon, &GridSpec::default()).lift()?;
        write_out(exponent, r.exponent, "exponent")
    })
}

/// `Ai(z)` and `Ai'(z)` for `|z| ≤ 30`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn glance_airy_ai(z: f64, ai: *mut f64, ai_prime: *mut f64) -> GlanceStatus {
    guard(|| {
        let v = airy_ai(z).lift()?;
        write_out(ai, v.ai, "ai")?;
        write_out(ai_prime, v.ai_prime, "ai_prime")
    })
}
