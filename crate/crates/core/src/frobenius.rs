//! The spectral ODE family in `x`: Frobenius series at the regular singular
//! boundary, numerical continuation with a radiation closure, and the Airy
//! closed form of the Friedlander model.

use crate::error::{Error, Result};
use crate::model::{Covector, Mode, ModelParams};
use crate::ode::{dopri5, Tolerance};
use crate::specfun::airy_ai;
use crate::C64;

pub const DEFAULT_X_MIN: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-10;
const SERIES_EPS: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 4000;
/// Barrier integral that counts as exponentially opaque.
const OPAQUE: f64 = 20.0;
/// Airy argument where the recessive start is placed in the Friedlander model.
const RECESSIVE_ZETA: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootSign {
    Minus,
    Plus,
}

/// Frobenius branch `x^{n/2 + s̃} Σ c_k x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesExpansion {
    pub root: f64,
    pub leading: f64,
    pub coeffs: Vec<f64>,
    pub validity_radius: f64,
}

fn recursion_step(coeffs: &[f64], k: usize, root: f64, g2: f64, g3: f64) -> Result<f64> {
    let den = k as f64 * (2.0 * root + k as f64);
    if den.abs() < 1e-12 {
        return Err(Error::Degenerate(format!("k(2s+k) vanishes at k = {k}")));
    }
    let c2 = if k >= 2 { coeffs[k - 2] } else { 0.0 };
    let c3 = if k >= 3 { coeffs[k - 3] } else { 0.0 };
    Ok(-(g2 * c2 + g3 * c3) / den)
}

/// Coefficients `c_0..c_K` of the branch with exponent `s̃ = ±√(n²/4 − λ)`.
pub fn frobenius_coeffs(params: &ModelParams, theta: &Covector, root_sign: RootSign, k_max: usize) -> Result<SeriesExpansion> {
    if k_max < 3 {
        return Err(Error::Config("at least three series terms are required".into()));
    }
    series_raw(params, theta.tp2(), theta.theta_n, root_sign, k_max)
}

fn series_raw(params: &ModelParams, tp2: f64, tn: f64, root_sign: RootSign, k_max: usize) -> Result<SeriesExpansion> {
    let alpha = params.alpha();
    let root = match root_sign {
        RootSign::Minus => -alpha,
        RootSign::Plus => alpha,
    };
    let g2 = tn * tn - tp2;
    let g3 = tn * tn;
    let mut coeffs = vec![1.0];
    for k in 1..=k_max {
        let c = recursion_step(&coeffs, k, root, g2, g3)?;
        coeffs.push(c);
    }
    let mut radius = f64::INFINITY;
    for (k, c) in coeffs.iter().enumerate().skip(k_max.saturating_sub(2)) {
        if *c != 0.0 {
            radius = radius.min((1e-16 / c.abs()).powf(1.0 / k as f64));
        }
    }
    Ok(SeriesExpansion { root, leading: params.n as f64 / 2.0 + root, coeffs, validity_radius: radius })
}

/// `(φ, xφ')` of one branch at `x`, summing until the terms fall below roundoff.
fn branch_at(params: &ModelParams, tp2: f64, tn: f64, root_sign: RootSign, x: f64) -> Result<(f64, f64)> {
    let alpha = params.alpha();
    let root = if root_sign == RootSign::Minus { -alpha } else { alpha };
    let lead = params.n as f64 / 2.0 + root;
    let g2 = tn * tn - tp2;
    let g3 = tn * tn;
    let mut c = vec![1.0];
    let mut sum = 1.0;
    let mut dsum = lead;
    let mut small = 0;
    for k in 1..SERIES_MAX_TERMS {
        let ck = recursion_step(&c, k, root, g2, g3)?;
        c.push(ck);
        let term = ck * x.powi(k as i32);
        sum += term;
        dsum += (lead + k as f64) * term;
        if term.abs() < SERIES_EPS * sum.abs().max(1e-300) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    let p = x.powf(lead);
    Ok((p * sum, p * dsum))
}

/// Wronskian `φ₋ φ₊' − φ₋' φ₊` of the two Frobenius branches.
pub fn frobenius_wronskian(params: &ModelParams, theta: &Covector, x: f64) -> Result<f64> {
    let (a, xa) = branch_at(params, theta.tp2(), theta.theta_n, RootSign::Minus, x)?;
    let (b, xb) = branch_at(params, theta.tp2(), theta.theta_n, RootSign::Plus, x)?;
    Ok((a * xb - xa * b) / x)
}

/// How the second boundary condition was imposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// WKB outgoing impedance at `x_c` beyond the turning point.
    Outgoing { x_c: f64, wkb_error: f64 },
    /// Decaying impedance inside an opaque barrier (or for `θn = 0`).
    Decaying { x_c: f64 },
    /// Airy model: recessive branch selected on the continuation to `x < 0`.
    Recessive { x_start: f64 },
    /// `θ = 0`: the pure power `x^{s₋}`.
    Trivial,
}

#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub x_grid: Vec<f64>,
    pub values: Vec<C64>,
    pub derivs: Vec<C64>,
    pub theta: Covector,
    /// `x^{−s₋} û` at the smallest grid point (Friedlander: `û(0)`).
    pub normalization: C64,
    /// Coefficient of the `x^{s₊}` branch relative to the normalized `x^{s₋}` branch.
    pub s_plus_coeff: C64,
    pub mode: Mode,
    pub closure: Closure,
}

/// Raw solve result at requested points.
#[derive(Debug, Clone)]
pub struct SpectralValues {
    pub values: Vec<C64>,
    pub derivs: Vec<C64>,
    pub s_plus_coeff: C64,
    pub closure: Closure,
}

/// Uniform grid from `x_min` to `x_max` used by [`solve_spectral`].
pub fn default_grid(x_min: f64, x_max: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| x_min + (x_max - x_min) * i as f64 / (points - 1) as f64).collect()
}

/// Solves the spectral ODE for one covector on a uniform grid over `[x_min, x_max]`.
pub fn solve_spectral(params: &ModelParams, theta: &Covector, x_max: f64, tol: f64) -> Result<SpectralSolution> {
    if !(x_max >= 2.0) {
        return Err(Error::Config(format!("x_max = {x_max} must be at least 2")));
    }
    let x_min = match params.mode {
        Mode::Ads => DEFAULT_X_MIN,
        Mode::Friedlander => 0.0,
    };
    let points = ((x_max - x_min) * 200.0).ceil() as usize + 1;
    let grid = default_grid(x_min, x_max, points);
    solve_spectral_on(params, theta, &grid, tol)
}

pub fn solve_spectral_on(params: &ModelParams, theta: &Covector, grid: &[f64], tol: f64) -> Result<SpectralSolution> {
    let sv = spectral_values(params, theta.tp2(), theta.theta_n, grid, tol)?;
    let normalization = match params.mode {
        Mode::Friedlander => sv.values[0],
        Mode::Ads => sv.values[0] * grid[0].powf(-params.s_minus),
    };
    Ok(SpectralSolution {
        x_grid: grid.to_vec(),
        values: sv.values,
        derivs: sv.derivs,
        theta: theta.clone(),
        normalization,
        s_plus_coeff: sv.s_plus_coeff,
        mode: params.mode,
        closure: sv.closure,
    })
}

/// Core solver on an increasing list of points, for `|θ'|² = tp2` and any real `θn`
/// (including zero). Used directly by field synthesis.
pub fn spectral_values(params: &ModelParams, tp2: f64, tn: f64, xs: &[f64], tol: f64) -> Result<SpectralValues> {
    if xs.is_empty() {
        return Err(Error::Config("empty x grid".into()));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("x grid must be strictly increasing".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    match params.mode {
        Mode::Friedlander => friedlander_values(tp2, tn, xs, tol),
        Mode::Ads => ads_values(params, tp2, tn, xs, tol),
    }
}

// ---------------------------------------------------------------- Airy model

fn friedlander_values(tp2: f64, tn: f64, xs: &[f64], tol: f64) -> Result<SpectralValues> {
    if xs[0] < 0.0 {
        return Err(Error::Domain("Friedlander model lives on x >= 0".into()));
    }
    let tn2 = tn * tn;
    if tn == 0.0 {
        let k = tp2.sqrt();
        let values = xs.iter().map(|x| C64::new((-k * x).exp(), 0.0)).collect();
        let derivs = xs.iter().map(|x| C64::new(-k * (-k * x).exp(), 0.0)).collect();
        let closure = if k == 0.0 { Closure::Trivial } else { Closure::Decaying { x_c: f64::INFINITY } };
        return Ok(SpectralValues { values, derivs, s_plus_coeff: C64::new(0.0, 0.0), closure });
    }
    let s = tn.abs().powf(2.0 / 3.0);
    let zeta0 = tp2 / (s * s) - s;
    // start where the dominant branch has been suppressed by e^{−55} relative to ζ₀
    let zeta_s = (zeta0.max(0.0).powf(1.5) + RECESSIVE_ZETA.powf(1.5)).powf(2.0 / 3.0);
    // ζ(x) = ζ₀ − x s
    let x_s = (zeta0 - zeta_s) / s;
    let q = |x: f64| tp2 - (1.0 + x) * tn2;
    let q0 = q(x_s);
    let imp = q0.sqrt() + tn2 / (4.0 * q0);
    let y0 = [C64::new(1.0, 0.0), C64::new(imp, 0.0)];
    let mut targets = vec![0.0];
    targets.extend(xs.iter().copied().filter(|&x| x > 0.0));
    let f = move |x: f64, y: &[C64; 2]| [y[1], y[0] * q(x)];
    let h0 = 0.05 / (s + 1.0);
    let (ys, _) = dopri5(f, x_s, y0, &targets, Tolerance::new(tol), h0)?;
    let k0 = ys[0][0];
    let env = (k0.norm_sqr() + (ys[0][1] / s).norm_sqr()).sqrt();
    if k0.norm() <= 1e-12 * env {
        return Err(Error::Pole(format!("Ai(zeta0) vanishes for zeta0 = {zeta0}")));
    }
    let mut values = Vec::with_capacity(xs.len());
    let mut derivs = Vec::with_capacity(xs.len());
    let mut idx = 1;
    for &x in xs {
        let y = if x > 0.0 {
            idx += 1;
            ys[idx - 1]
        } else {
            ys[0]
        };
        values.push(y[0] / k0);
        derivs.push(y[1] / k0);
    }
    Ok(SpectralValues { values, derivs, s_plus_coeff: C64::new(0.0, 0.0), closure: Closure::Recessive { x_start: x_s } })
}

/// `Ai(ζ)/Ai(ζ₀)` with `ζ = |θn|^{−4/3}|θ'|² − (1+x)|θn|^{2/3}`.
pub fn friedlander_closed_form(x: f64, theta: &Covector) -> Result<C64> {
    let s = theta.theta_n.abs().powf(2.0 / 3.0);
    let zeta0 = theta.tp2() / (s * s) - s;
    let a0 = airy_ai(zeta0)?.ai;
    if a0.abs() <= 1e-12 {
        return Err(Error::Pole(format!("Ai(zeta0) = {a0:e}")));
    }
    let a = airy_ai(zeta0 - x * s)?.ai;
    Ok(C64::new(a / a0, 0.0))
}

// ---------------------------------------------------------------- AdS operator

type Jet = Vec<C64>;

fn jet_mul(a: &Jet, b: &Jet) -> Jet {
    let n = a.len().min(b.len());
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn jet_div(a: &Jet, b: &Jet) -> Jet {
    let n = a.len().min(b.len());
    let mut out = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut s = a[k];
        for j in 0..k {
            s -= out[j] * b[k - j];
        }
        out[k] = s / b[0];
    }
    out
}

/// Square root with a prescribed value of the constant term.
fn jet_sqrt(a: &Jet, root0: C64) -> Jet {
    let n = a.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    out[0] = root0;
    for k in 1..n {
        let mut s = a[k];
        for j in 1..k {
            s -= out[j] * out[k - j];
        }
        out[k] = s / (root0 * 2.0);
    }
    out
}

fn jet_deriv(a: &Jet) -> Jet {
    (1..a.len()).map(|k| a[k] * k as f64).collect()
}

/// Riccati expansion of `y = v'/v` for `v'' + Q v = 0` at one point.
/// `branch0` is the chosen leading value (`∓i√Q` or `−√(−Q)`).
/// Returns the optimally truncated sum and the size of the last retained term.
fn riccati_impedance(q: &Jet, branch0: C64, max_order: usize) -> (C64, f64) {
    let y0 = jet_sqrt(&q.iter().map(|v| -*v).collect(), branch0);
    let mut terms: Vec<Jet> = vec![y0.clone()];
    let mut total = y0[0];
    let mut last = f64::INFINITY;
    let two_y0: Jet = y0.iter().map(|v| *v * 2.0).collect();
    for k in 1..=max_order {
        let mut rhs = jet_deriv(&terms[k - 1]);
        for j in 1..k {
            let prod = jet_mul(&terms[j], &terms[k - j]);
            for (r, p) in rhs.iter_mut().zip(prod) {
                *r += p;
            }
        }
        let neg: Jet = rhs.iter().map(|v| -*v).collect();
        let yk = jet_div(&neg, &two_y0);
        if yk.is_empty() {
            break;
        }
        let size = yk[0].norm();
        if size > last {
            break;
        }
        total += yk[0];
        last = size;
        terms.push(yk);
        if size < 1e-18 * total.norm() {
            break;
        }
    }
    (total, last)
}

/// Taylor jet of `Q = (1+x)θn² − |θ'|² + c/x²` about `x_c`.
fn q_jet(x_c: f64, tn2: f64, tp2: f64, c: f64, degree: usize) -> Jet {
    let mut q = vec![C64::new(0.0, 0.0); degree + 1];
    q[0] = C64::new((1.0 + x_c) * tn2 - tp2, 0.0);
    if degree >= 1 {
        q[1] = C64::new(tn2, 0.0);
    }
    // c/(x_c+s)² = c x_c^{-2} Σ (k+1)(−s/x_c)^k
    for (k, qk) in q.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *qk += C64::new(c * sign * (k as f64 + 1.0) * x_c.powi(-(k as i32) - 2), 0.0);
    }
    q
}

const WKB_ORDERS: usize = 14;

/// Outgoing impedance `û'/û` at `x_c` (phase `e^{−iφ}` with `φ' ∝ θn`).
pub fn outgoing_impedance(params: &ModelParams, tp2: f64, tn: f64, x_c: f64) -> (C64, f64) {
    let n = params.n as f64;
    let c = params.lambda - (n * n - 1.0) / 4.0;
    let q = q_jet(x_c, tn * tn, tp2, c, 2 * WKB_ORDERS + 2);
    let sq = q[0].sqrt();
    let branch0 = C64::new(0.0, -tn.signum()) * sq;
    let (y, err) = riccati_impedance(&q, branch0, WKB_ORDERS);
    (y + (n - 1.0) / (2.0 * x_c), err / y.norm().max(1e-300))
}

/// Decaying impedance `û'/û` at `x_c` inside a barrier.
fn decaying_impedance(params: &ModelParams, tp2: f64, tn: f64, x_c: f64) -> C64 {
    let n = params.n as f64;
    let c = params.lambda - (n * n - 1.0) / 4.0;
    let q = q_jet(x_c, tn * tn, tp2, c, 2 * WKB_ORDERS + 2);
    let kappa = (-q[0]).sqrt();
    let (y, _) = riccati_impedance(&q, -kappa, 4);
    y + (n - 1.0) / (2.0 * x_c)
}

/// Picks the closure point and type.
fn choose_closure(params: &ModelParams, tp2: f64, tn: f64, x_out: f64, tol: f64) -> Closure {
    let tn2 = tn * tn;
    if tn == 0.0 {
        let kappa = tp2.sqrt();
        return Closure::Decaying { x_c: x_out + OPAQUE / kappa };
    }
    let x_t = tp2 / tn2 - 1.0;
    let atn = tn.abs();
    if x_t > x_out {
        let barrier = 2.0 / 3.0 * atn * (x_t - x_out).powf(1.5);
        if barrier >= 2.0 * OPAQUE {
            // ∫_{x_out}^{x_c} κ = OPAQUE
            let rem = ((x_t - x_out).powf(1.5) - 1.5 * OPAQUE / atn).powf(2.0 / 3.0);
            return Closure::Decaying { x_c: x_t - rem };
        }
    }
    // beyond the turning point, far enough for the asymptotic series
    let base = x_out.max(x_t).max(0.5);
    let target = tol.min(1e-8);
    let mut d = (8.0 / atn).powf(2.0 / 3.0).max(0.25);
    let mut best = (base + d, f64::INFINITY);
    for _ in 0..40 {
        let x_c = x_out.max(x_t + d).max(base);
        let (_, err) = outgoing_impedance(params, tp2, tn, x_c);
        if err < best.1 {
            best = (x_c, err);
        }
        if err <= target {
            return Closure::Outgoing { x_c, wkb_error: err };
        }
        d *= 1.5;
    }
    Closure::Outgoing { x_c: best.0, wkb_error: best.1 }
}

fn ads_values(params: &ModelParams, tp2: f64, tn: f64, xs: &[f64], tol: f64) -> Result<SpectralValues> {
    if xs[0] <= 0.0 {
        return Err(Error::Domain("the AdS operator is singular at x = 0; use x > 0".into()));
    }
    let sm = params.s_minus;
    if tp2 == 0.0 && tn == 0.0 {
        let values = xs.iter().map(|x| C64::new(x.powf(sm), 0.0)).collect();
        let derivs = xs.iter().map(|x| C64::new(sm * x.powf(sm - 1.0), 0.0)).collect();
        return Ok(SpectralValues { values, derivs, s_plus_coeff: C64::new(0.0, 0.0), closure: Closure::Trivial });
    }
    let x_min = DEFAULT_X_MIN.min(xs[0]);
    let x_out = *xs.last().unwrap();
    let closure = choose_closure(params, tp2, tn, x_out, tol);
    let (x_c, imp) = match closure {
        Closure::Outgoing { x_c, .. } => (x_c, outgoing_impedance(params, tp2, tn, x_c).0),
        Closure::Decaying { x_c } => (x_c, decaying_impedance(params, tp2, tn, x_c)),
        _ => unreachable!(),
    };
    let n = params.n as f64;
    let lambda = params.lambda;
    let tn2 = tn * tn;
    let f = move |x: f64, y: &[C64; 2]| {
        let qx = (1.0 + x) * tn2 - tp2;
        [y[1] / x, (y[1] * n - y[0] * (x * x * qx + lambda)) / x]
    };
    // integrate down through the requested points to x_min
    let mut targets: Vec<f64> = xs.iter().rev().copied().filter(|&x| x >= x_min && x <= x_c).collect();
    if targets.last() != Some(&x_min) {
        targets.push(x_min);
    }
    let y0 = [C64::new(1.0, 0.0), imp * x_c];
    let atn = tn.abs().max(tp2.sqrt());
    let h0 = (0.1 / (atn + 1.0)).min(0.05);
    let (ys, _) = dopri5(f, x_c, y0, &targets, Tolerance::new(tol), h0)?;
    let yb = ys.last().unwrap();
    let (pm, xpm) = branch_at(params, tp2, tn, RootSign::Minus, x_min)?;
    let (pp, xpp) = branch_at(params, tp2, tn, RootSign::Plus, x_min)?;
    let det = pm * xpp - xpm * pp;
    let a = (yb[0] * xpp - yb[1] * pp) / det;
    let cc = (yb[1] * pm - yb[0] * xpm) / det;
    let scale = (yb[0].norm() / pm.abs()).max(yb[1].norm() / xpm.abs().max(1e-300));
    if a.norm() <= 1e-12 * scale {
        return Err(Error::Pole(format!("boundary coefficient vanishes for |theta'|^2 = {tp2}, theta_n = {tn}")));
    }
    let b = cc / a;
    let mut values = Vec::with_capacity(xs.len());
    let mut derivs = Vec::with_capacity(xs.len());
    // targets were descending; map back
    let mut by_x: Vec<(f64, [C64; 2])> = targets.iter().copied().zip(ys.iter().copied()).collect();
    by_x.reverse();
    let mut j = 0;
    for &x in xs {
        if x < x_min {
            let (um, xum) = branch_at(params, tp2, tn, RootSign::Minus, x)?;
            let (up, xup) = branch_at(params, tp2, tn, RootSign::Plus, x)?;
            values.push(C64::new(um, 0.0) + b * up);
            derivs.push((C64::new(xum, 0.0) + b * xup) / x);
        } else {
            while by_x[j].0 != x {
                j += 1;
            }
            values.push(by_x[j].1[0] / a);
            derivs.push(by_x[j].1[1] / (a * x));
        }
    }
    Ok(SpectralValues { values, derivs, s_plus_coeff: b, closure })
}
