//! Phase functions, the eikonal identity, transport equations and WKB order checks.

use crate::error::{Error, Result};
use crate::frobenius::spectral_values;
use crate::model::{Mode, ModelParams};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    In,
    Out,
    /// `(2/3)[(z+1)^{3/2} − 1]`, the h-free phase.
    Limit,
    /// `(2/3)[1 − (1−z)^{3/2}]` on `[0, 1]`.
    Tilde,
}

pub fn phase_value(kind: PhaseKind, z: f64, z_prime: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain("h must be positive".into()));
    }
    if z < 0.0 || z_prime < 0.0 {
        return Err(Error::Domain("phases are defined for z, z' >= 0".into()));
    }
    let p = |s: f64| (s + 1.0).powf(1.5);
    Ok(match kind {
        PhaseKind::In => 2.0 / 3.0 / h * (p(z) - p(z_prime)).abs(),
        PhaseKind::Out => 2.0 / 3.0 / h * (p(z) + p(z_prime) - 2.0),
        PhaseKind::Limit => 2.0 / 3.0 * (p(z) - 1.0),
        PhaseKind::Tilde => {
            if z > 1.0 {
                return Err(Error::Domain(format!("tilde phase needs z <= 1, got {z}")));
            }
            2.0 / 3.0 * (1.0 - (1.0 - z).powf(1.5))
        }
    })
}

/// A phase in one variable, optionally with an analytic derivative.
pub trait PhaseFunction {
    fn value(&self, z: f64) -> f64;
    fn derivative(&self, _z: f64) -> Option<f64> {
        None
    }
}

/// `±(2/3)[(z+1)^{3/2} − 1]`.
#[derive(Debug, Clone, Copy)]
pub struct LimitPhase {
    pub sign: f64,
}

impl PhaseFunction for LimitPhase {
    fn value(&self, z: f64) -> f64 {
        self.sign * 2.0 / 3.0 * ((z + 1.0).powf(1.5) - 1.0)
    }
    fn derivative(&self, z: f64) -> Option<f64> {
        Some(self.sign * (z + 1.0).sqrt())
    }
}

impl<F: Fn(f64) -> f64> PhaseFunction for F {
    fn value(&self, z: f64) -> f64 {
        self(z)
    }
}

/// `−(z ∂_z φ)² + z³ + z²`.
pub fn eikonal_residual(phase: &dyn PhaseFunction, z: f64) -> f64 {
    let d = phase.derivative(z).unwrap_or_else(|| {
        let h = 1e-3 * z.abs().max(1.0);
        let f = |s: f64| phase.value(s);
        (-f(z + 2.0 * h) + 8.0 * f(z + h) - 8.0 * f(z - h) + f(z - 2.0 * h)) / (12.0 * h)
    });
    let zd = z * d;
    -(zd * zd) + z * z * z + z * z
}

// ------------------------------------------------------------------ transport

/// Coefficients of the transport hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportParams {
    pub b: f64,
    /// `λ − n²/4`.
    pub kappa: f64,
}

impl TransportParams {
    pub fn from_model(params: &ModelParams) -> Self {
        TransportParams { b: 1.0, kappa: params.kappa() }
    }
}

#[derive(Debug, Clone)]
pub struct TransportTerm {
    pub order: usize,
    pub sigma: Vec<f64>,
    pub u: Vec<C64>,
    pub b: f64,
    /// Amplitude applied to the supplied inhomogeneity (1 for order 0).
    pub source_scale: C64,
}

pub const SIGMA_MIN: f64 = 1e-3;
pub const SIGMA_MAX: f64 = 1e5;
pub const SIGMA_POINTS: usize = 4096;

pub fn sigma_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `σ ∂_σ φ = (2/3) σ^{2/3} (σ^{2/3} + 1)^{1/2}`.
pub fn sigma_dphi(s: f64) -> f64 {
    let w = s.powf(2.0 / 3.0);
    2.0 / 3.0 * w * (w + 1.0).sqrt()
}

/// Homogeneous solution `σ^{−b/2} (w/(w+1))^{1/4}`, `w = σ^{2/3}`; for `b = 1`
/// this is `σ^{−1/3}(σ^{2/3}+1)^{−1/4}`.
pub fn transport_homogeneous(s: f64, b: f64) -> f64 {
    let w = s.powf(2.0 / 3.0);
    s.powf(-0.5 * b) * (w / (w + 1.0)).powf(0.25)
}

fn grid_step(sigma: &[f64]) -> Result<f64> {
    if sigma.len() < 16 {
        return Err(Error::Config("sigma grid needs at least 16 points".into()));
    }
    let dw = (sigma[1] / sigma[0]).ln();
    for k in 1..sigma.len() {
        let d = (sigma[k] / sigma[k - 1]).ln();
        if !(d > 0.0) || (d - dw).abs() > 1e-9 * dw.max(1.0) {
            return Err(Error::Config("sigma grid must be log-uniform and increasing".into()));
        }
    }
    Ok(dw)
}

/// First and second derivatives in `w = log σ`: sixth order inside, one-sided
/// fourth order near the ends.
fn w_derivatives(u: &[C64], dw: f64) -> (Vec<C64>, Vec<C64>) {
    let n = u.len();
    let mut d1 = vec![C64::new(0.0, 0.0); n];
    let mut d2 = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        if i >= 3 && i + 3 < n {
            d1[i] = (u[i + 3] - u[i - 3] - (u[i + 2] - u[i - 2]) * 9.0 + (u[i + 1] - u[i - 1]) * 45.0) / (60.0 * dw);
            d2[i] = ((u[i + 3] + u[i - 3]) * 2.0 - (u[i + 2] + u[i - 2]) * 27.0 + (u[i + 1] + u[i - 1]) * 270.0
                - u[i] * 490.0)
                / (180.0 * dw * dw);
        } else if i < 3 {
            let v = |k: usize| u[i + k];
            d1[i] = (v(0) * -25.0 + v(1) * 48.0 - v(2) * 36.0 + v(3) * 16.0 - v(4) * 3.0) / (12.0 * dw);
            d2[i] = (v(0) * 45.0 - v(1) * 154.0 + v(2) * 214.0 - v(3) * 156.0 + v(4) * 61.0 - v(5) * 10.0)
                / (12.0 * dw * dw);
        } else {
            let v = |k: usize| u[i - k];
            d1[i] = -(v(0) * -25.0 + v(1) * 48.0 - v(2) * 36.0 + v(3) * 16.0 - v(4) * 3.0) / (12.0 * dw);
            d2[i] = (v(0) * 45.0 - v(1) * 154.0 + v(2) * 214.0 - v(3) * 156.0 + v(4) * 61.0 - v(5) * 10.0)
                / (12.0 * dw * dw);
        }
    }
    (d1, d2)
}

/// Right-to-left cumulative integral `∫_{w_i}^{w_end} f dw` with a fourth-order
/// local cubic rule.
fn cumulative_from_right(f: &[C64], dw: f64) -> Vec<C64> {
    let n = f.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in (0..n - 1).rev() {
        let seg = if i >= 1 && i + 2 < n {
            (f[i] * 13.0 + f[i + 1] * 13.0 - f[i - 1] - f[i + 2]) * (dw / 24.0)
        } else if i == 0 {
            (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * (dw / 24.0)
        } else {
            (f[i + 1] * 9.0 + f[i] * 19.0 - f[i - 1] * 5.0 + f[i - 2]) * (dw / 24.0)
        };
        out[i] = out[i + 1] + seg;
    }
    out
}

/// Tail `∫_{w_end}^∞ f dw` for `f ~ e^{−p w}(A₀ + A₁ e^{−2w/3} + A₂ e^{−4w/3})`.
fn power_tail(f: &[C64], sigma: &[f64], p: f64) -> C64 {
    let n = f.len();
    let k = (n / 64).max(1);
    let idx = [n - 1, n - 1 - k, n - 1 - 2 * k];
    // solve the 3×3 system for A_m e^{−(p + 2m/3) w_end} scaled at the last point
    let w_end = sigma[n - 1].ln();
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [C64::new(0.0, 0.0); 3];
    for (r, &i) in idx.iter().enumerate() {
        let dw = sigma[i].ln() - w_end;
        for (c, mc) in m[r].iter_mut().enumerate() {
            *mc = (-(p + 2.0 * c as f64 / 3.0) * dw).exp();
        }
        rhs[r] = f[i];
    }
    let a = solve3(m, rhs);
    let mut s = C64::new(0.0, 0.0);
    for (c, ac) in a.iter().enumerate() {
        s += *ac / (p + 2.0 * c as f64 / 3.0);
    }
    s
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [C64; 3]) -> [C64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            let rc = r[col];
            r[row] -= rc * f;
        }
    }
    let mut x = [C64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut s = r[row];
        for k in row + 1..3 {
            s -= x[k] * m[row][k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// `[(σ∂σ)² + (b−1)σ∂σ + (4/9)κ] u / (2iσ∂σφ)` on the grid.
fn previous_source(prev: &TransportTerm, tp: &TransportParams, dw: f64) -> Vec<C64> {
    let (d1, d2) = w_derivatives(&prev.u, dw);
    prev.sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let m = d2[i] + d1[i] * (tp.b - 1.0) + prev.u[i] * (4.0 / 9.0 * tp.kappa);
            m / C64::new(0.0, 2.0 * sigma_dphi(s))
        })
        .collect()
}

/// Solves `2iσ∂σφ [σ∂σ − (1/6)(σ^{2/3}+1)^{−1} + b/2] u_j = RHS_j` on a log-uniform grid.
///
/// For `j = 0` the right side is `e_0` and `u_0` vanishes at the left edge.
/// For `j ≥ 1` the right side is `c·e_j + [(σ∂σ)² + (b−1)σ∂σ + (4/9)κ] u_{j−1}`;
/// the amplitude `c` is fixed so that `u_j` vanishes at the left edge while
/// keeping the `σ^{−b/2−j}` tail (no homogeneous `σ^{−b/2}` component).
pub fn transport_solve(
    j: usize,
    sigma: &[f64],
    e_j: &[C64],
    prev: Option<&TransportTerm>,
    tp: &TransportParams,
) -> Result<TransportTerm> {
    let dw = grid_step(sigma)?;
    if e_j.len() != sigma.len() {
        return Err(Error::Config("rhs length differs from the sigma grid".into()));
    }
    let emax = e_j.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let n = sigma.len();
    if emax > 0.0 && (e_j[0].norm() > 1e-12 * emax || e_j[n - 1].norm() > 1e-12 * emax) {
        return Err(Error::Precondition("inhomogeneity does not vanish at the grid ends".into()));
    }
    let g: Vec<f64> = sigma.iter().map(|&s| transport_homogeneous(s, tp.b)).collect();
    let se: Vec<C64> = sigma
        .iter()
        .zip(e_j)
        .zip(&g)
        .map(|((&s, e), gi)| *e / C64::new(0.0, 2.0 * sigma_dphi(s)) / *gi)
        .collect();
    let re = cumulative_from_right(&se, dw);
    if j == 0 {
        // u_0 = g ∫_{left}^{σ} S/g
        let total = re[0];
        let u = g.iter().zip(&re).map(|(gi, r)| (total - r) * *gi).collect();
        return Ok(TransportTerm { order: 0, sigma: sigma.to_vec(), u, b: tp.b, source_scale: C64::new(1.0, 0.0) });
    }
    let prev = prev.ok_or_else(|| Error::Config(format!("order {j} needs the previous transport term")))?;
    if prev.order + 1 != j || prev.sigma.len() != n {
        return Err(Error::Config("previous term does not match order or grid".into()));
    }
    let sp: Vec<C64> = previous_source(prev, tp, dw).iter().zip(&g).map(|(s, gi)| *s / *gi).collect();
    let mut rp = cumulative_from_right(&sp, dw);
    let tail = power_tail(&sp, sigma, j as f64);
    for r in rp.iter_mut() {
        *r += tail;
    }
    let scale = if re[0].norm() > 0.0 { -rp[0] / re[0] } else { C64::new(0.0, 0.0) };
    let u = (0..n).map(|i| -(rp[i] + re[i] * scale) * g[i]).collect();
    Ok(TransportTerm { order: j, sigma: sigma.to_vec(), u, b: tp.b, source_scale: scale })
}

/// Gaussian bump in `log σ` centered at `σ = center`.
pub fn log_bump(sigma: &[f64], center: f64, width: f64) -> Vec<C64> {
    sigma
        .iter()
        .map(|s| {
            let d = (s / center).ln() / width;
            C64::new((-d * d).exp(), 0.0)
        })
        .collect()
}

/// `u_0, …, u_{J−1}` driven by the same bump at every order.
pub fn transport_hierarchy(orders: usize, sigma: &[f64], bump: &[C64], tp: &TransportParams) -> Result<Vec<TransportTerm>> {
    let mut out: Vec<TransportTerm> = Vec::with_capacity(orders);
    for j in 0..orders {
        let t = transport_solve(j, sigma, bump, out.last(), tp)?;
        out.push(t);
    }
    Ok(out)
}

/// Least-squares slope of `log|u|` against `log σ` over `[lo, hi]`.
pub fn tail_exponent(term: &TransportTerm, lo: f64, hi: f64) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = term
        .sigma
        .iter()
        .zip(&term.u)
        .filter(|(s, _)| **s >= lo && **s <= hi)
        .map(|(s, u)| (s.ln(), u.norm().ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Config("tail window holds fewer than two samples".into()));
    }
    Ok(crate::io::fit_line(&xs, &ys).0)
}

// ------------------------------------------------------------------ WKB order

#[derive(Debug, Clone)]
pub struct WkbCheck {
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub r2: f64,
    pub inconclusive: bool,
}

/// Particular transport solutions on a window, zero at its left edge.
fn window_hierarchy(orders: usize, sigma: &[f64], tp: &TransportParams) -> Result<Vec<Vec<C64>>> {
    let dw = grid_step(sigma)?;
    let g: Vec<f64> = sigma.iter().map(|&s| transport_homogeneous(s, tp.b)).collect();
    let mut out: Vec<Vec<C64>> = vec![g.iter().map(|v| C64::new(*v, 0.0)).collect()];
    for j in 1..orders {
        let prev = TransportTerm { order: j - 1, sigma: sigma.to_vec(), u: out[j - 1].clone(), b: tp.b, source_scale: C64::new(0.0, 0.0) };
        let sp: Vec<C64> = previous_source(&prev, tp, dw).iter().zip(&g).map(|(s, gi)| *s / *gi).collect();
        let r = cumulative_from_right(&sp, dw);
        out.push((0..sigma.len()).map(|i| (r[0] - r[i]) * g[i]).collect());
    }
    Ok(out)
}

/// Compares the exact outgoing solution against the `J`-term sum
/// `e^{−iφ/h} Σ_{j<J} h^j u_j` on a σ-window, for `|θ̂'| = a`.
pub fn wkb_order_check(params: &ModelParams, a: f64, j_terms: usize, h_list: &[f64], window: (f64, f64)) -> Result<WkbCheck> {
    if h_list.len() < 4 {
        return Err(Error::Config("need at least four h values".into()));
    }
    for w in h_list.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::Config("h values must be geometric with ratio 2".into()));
        }
    }
    if !(0.0..1.0).contains(&a) {
        return Err(Error::Domain("the oscillatory comparison needs |theta_hat'| < 1".into()));
    }
    let mut p = params.clone();
    p.mode = Mode::Ads;
    let tp = TransportParams::from_model(params);
    let sigma = sigma_grid(window.0, window.1, 1201);
    let terms = window_hierarchy(j_terms.max(1), &sigma, &tp)?;
    let one_m = 1.0 - a * a;
    let xs: Vec<f64> = sigma.iter().map(|s| one_m * s.powf(2.0 / 3.0)).collect();
    let n2 = params.n as f64 / 2.0;
    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let tn = 1.0 / (h * one_m.powf(1.5));
        let sv = spectral_values(&p, (a * tn).powi(2), tn, &xs, 1e-12)?;
        let g: Vec<C64> = sv.values.iter().zip(&xs).map(|(u, x)| *u * x.powf(-n2)).collect();
        let wkb: Vec<C64> = sigma
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let phi = 2.0 / 3.0 * ((s.powf(2.0 / 3.0) + 1.0).powf(1.5) - 1.0);
                let mut amp = C64::new(0.0, 0.0);
                for (j, t) in terms.iter().enumerate().take(j_terms) {
                    amp += t[i] * h.powi(j as i32);
                }
                amp * C64::from_polar(1.0, -phi / h)
            })
            .collect();
        let num: C64 = wkb.iter().zip(&g).map(|(w, u)| w.conj() * u).sum();
        let den: f64 = wkb.iter().map(|w| w.norm_sqr()).sum();
        let c = if den > 0.0 { num / den } else { C64::new(0.0, 0.0) };
        let gmax = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = g.iter().zip(&wkb).map(|(u, w)| (u - w * c).norm()).fold(0.0, f64::max) / gmax;
        errors.push(err);
    }
    let lx: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    let (slope, _, r2) = crate::io::fit_line(&lx, &ly);
    // a flat error profile fits perfectly well with any R²; only flag genuine scatter
    let spread = ly.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ly.iter().cloned().fold(f64::INFINITY, f64::min);
    let inconclusive = r2 < 0.9 && spread > 0.5;
    Ok(WkbCheck { h: h_list.to_vec(), errors, slope, r2, inconclusive })
}
