//! Model solvers on the half line and the line: the Mellin b-solver, the
//! Hankel (oscillatory) and Macdonald (elliptic) boundary layers, and the
//! free outgoing/decaying resolvents.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::specfun::{bessel_ik_scaled, hankel_pair};
use crate::C64;
use std::f64::consts::PI;

/// Samples on a log-uniform grid of `(0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineFunction {
    pub grid: Vec<f64>,
    pub values: Vec<C64>,
    pub exponent_at_zero: Option<f64>,
    pub exponent_at_infinity: Option<f64>,
}

/// Samples on a uniform grid of the line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFunction {
    pub start: f64,
    pub step: f64,
    pub values: Vec<C64>,
}

const STENCIL: usize = 8;
const DECAY_TOL: f64 = 1e-12;

impl HalfLineFunction {
    pub fn sample<F: Fn(f64) -> C64>(lo: f64, hi: f64, points: usize, f: F) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || points < 2 * STENCIL {
            return Err(Error::Config("half-line grid needs 0 < lo < hi and at least 16 points".into()));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let grid: Vec<f64> = (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect();
        let values = grid.iter().map(|&x| f(x)).collect();
        Ok(HalfLineFunction { grid, values, exponent_at_zero: None, exponent_at_infinity: None })
    }

    pub fn log_step(&self) -> Result<f64> {
        let n = self.grid.len();
        if n < 2 * STENCIL || self.values.len() != n {
            return Err(Error::Config("half-line function needs at least 16 matching samples".into()));
        }
        let d = (self.grid[n - 1] / self.grid[0]).ln() / (n - 1) as f64;
        for k in 1..n {
            let dk = (self.grid[k] / self.grid[k - 1]).ln();
            if !(dk > 0.0) || (dk - d).abs() > 1e-8 * d {
                return Err(Error::Config("half-line grid must be log-uniform".into()));
            }
        }
        Ok(d)
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("non-finite samples".into()));
        }
        Ok(())
    }

    /// Least-squares `log|u|` vs `log x` slope over the first or last `decades` of the grid.
    pub fn tail_fit(&self, at_zero: bool, decades: f64) -> f64 {
        let n = self.grid.len();
        let (lo, hi) = if at_zero {
            (self.grid[0], self.grid[0] * 10f64.powf(decades))
        } else {
            (self.grid[n - 1] * 10f64.powf(-decades), self.grid[n - 1])
        };
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .grid
            .iter()
            .zip(&self.values)
            .filter(|(x, u)| **x >= lo && **x <= hi && u.norm() > 0.0)
            .map(|(x, u)| (x.ln(), u.norm().ln()))
            .unzip();
        crate::io::fit_line(&xs, &ys).0
    }

    /// Declared exponents agree with one-decade tail fits within 5%.
    pub fn exponents_consistent(&self) -> bool {
        let ok = |declared: Option<f64>, at_zero: bool| match declared {
            None => true,
            Some(e) => (self.tail_fit(at_zero, 1.0) - e).abs() <= 0.05 * e.abs().max(1e-3),
        };
        ok(self.exponent_at_zero, true) && ok(self.exponent_at_infinity, false)
    }
}

impl LineFunction {
    pub fn sample<F: Fn(f64) -> C64>(a: f64, b: f64, points: usize, f: F) -> Result<Self> {
        if !(b > a) || points < 2 * STENCIL {
            return Err(Error::Config("line grid needs a < b and at least 16 points".into()));
        }
        let step = (b - a) / (points - 1) as f64;
        let values = (0..points).map(|i| f(a + step * i as f64)).collect();
        Ok(LineFunction { start: a, step, values })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }
}

fn decays_at_ends(values: &[C64]) -> bool {
    let m = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let n = values.len();
    m == 0.0 || (values[0].norm() <= DECAY_TOL * m && values[n - 1].norm() <= DECAY_TOL * m)
}

// ---------------------------------------------------------------- product integration

/// `∫_0^1 e^{−a(1−τ)} τ^q dτ = Σ_m (−a)^m q!/(q+m+1)!`.
fn exp_moment(a: C64, q: usize) -> C64 {
    let mut term = C64::new(1.0 / (q as f64 + 1.0), 0.0);
    let mut sum = term;
    for m in 1..200 {
        term *= -a / (q as f64 + m as f64 + 1.0);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Monomial coefficients (in σ) of the Lagrange basis on nodes `j − p`, `j = 0..8`.
fn lagrange_monomials(p: usize) -> [[f64; STENCIL]; STENCIL] {
    let nodes: Vec<f64> = (0..STENCIL).map(|j| j as f64 - p as f64).collect();
    let mut out = [[0.0; STENCIL]; STENCIL];
    for k in 0..STENCIL {
        let mut poly = vec![1.0];
        let mut den = 1.0;
        for (j, &nj) in nodes.iter().enumerate() {
            if j == k {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * nj;
            }
            poly = next;
            den *= nodes[k] - nj;
        }
        for (q, c) in poly.iter().enumerate() {
            out[k][q] = c / den;
        }
    }
    out
}

/// Weights `W[p][k] = ∫_0^1 e^{−a(1−σ)} L_k(p+σ) dσ` for each stencil position `p`.
fn product_weights(a: C64) -> Vec<[C64; STENCIL]> {
    let moments: Vec<C64> = (0..STENCIL).map(|q| exp_moment(a, q)).collect();
    (0..STENCIL - 1)
        .map(|p| {
            let m = lagrange_monomials(p);
            let mut w = [C64::new(0.0, 0.0); STENCIL];
            for k in 0..STENCIL {
                for q in 0..STENCIL {
                    w[k] += moments[q] * m[k][q];
                }
            }
            w
        })
        .collect()
}

/// `L_i = ∫_{w_0}^{w_i} e^{−r(w_i − w')} F(w') dw'` on a uniform grid, with the
/// integrand replaced by local degree-7 interpolants.
fn left_convolution(f: &[C64], step: f64, r: C64) -> Result<Vec<C64>> {
    let a = r * step;
    if a.norm() > 1.0 {
        return Err(Error::Config("grid step too coarse for the kernel decay rate".into()));
    }
    let weights = product_weights(a);
    let decay = (-a).exp();
    let n = f.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 1..n {
        let lo = i - 1;
        let start = lo.saturating_sub(3).min(n - STENCIL);
        let p = lo - start;
        let mut seg = C64::new(0.0, 0.0);
        for k in 0..STENCIL {
            seg += weights[p][k] * f[start + k];
        }
        out[i] = out[i - 1] * decay + seg * step;
    }
    Ok(out)
}

/// `R_i = ∫_{w_i}^{w_end} e^{−r(w' − w_i)} F(w') dw'`.
fn right_convolution(f: &[C64], step: f64, r: C64) -> Result<Vec<C64>> {
    let rev: Vec<C64> = f.iter().rev().copied().collect();
    let mut out = left_convolution(&rev, step, r)?;
    out.reverse();
    Ok(out)
}

// ---------------------------------------------------------------- Mellin solver

fn mellin_checks(f: &HalfLineFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    f.check_finite()?;
    let dw = f.log_step()?;
    if !decays_at_ends(&f.values) {
        return Err(Error::Precondition("inhomogeneity must vanish rapidly at both ends of the half line".into()));
    }
    Ok(dw)
}

/// Solves `((x∂x)² − α) u = f` in the class decaying at both ends, by the
/// Green's function `−e^{−√α|w−w'|}/(2√α)` in `w = log x`.
pub fn mellin_solve(f: &HalfLineFunction, alpha: f64) -> Result<HalfLineFunction> {
    let dw = mellin_checks(f, alpha)?;
    let r = alpha.sqrt();
    let left = left_convolution(&f.values, dw, C64::new(r, 0.0))?;
    let right = right_convolution(&f.values, dw, C64::new(r, 0.0))?;
    let values = left.iter().zip(&right).map(|(a, b)| -(a + b) / (2.0 * r)).collect();
    Ok(HalfLineFunction { grid: f.grid.clone(), values, exponent_at_zero: Some(r), exponent_at_infinity: Some(-r) })
}

/// Height of the Mellin contour window `|Im s| ≤ MELLIN_CUTOFF` on `Re s = 0`.
pub const MELLIN_CUTOFF: f64 = 40.0;

/// Same problem through the Mellin transform: `ũ(s) = f̃(s)/(s² − α)` on
/// `Re s = 0`, inverted by the trapezoid rule with a period long enough to
/// suppress aliasing of the `x^{±√α}` tails.
pub fn mellin_solve_contour(f: &HalfLineFunction, alpha: f64) -> Result<HalfLineFunction> {
    let dw = mellin_checks(f, alpha)?;
    let r = alpha.sqrt();
    let n = f.grid.len();
    let span = dw * (n - 1) as f64;
    let period = span + 40.0 / r;
    let dtau = 2.0 * PI / period;
    let m = (MELLIN_CUTOFF / dtau).ceil() as i64;
    // f̃(iτ) = ∫ F(w) e^{−iτw} dw, relative to w0
    let transform = |tau: f64| {
        let rot = C64::from_polar(1.0, -tau * dw);
        let mut ph = C64::new(1.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        for v in &f.values {
            s += v * ph;
            ph *= rot;
        }
        s * dw
    };
    let fmax = transform(0.0).norm().max(f.values.iter().map(|v| v.norm()).fold(0.0, f64::max) * dw);
    let edge = transform(m as f64 * dtau).norm().max(transform(-(m as f64) * dtau).norm());
    if edge > 1e-12 * fmax {
        return Err(Error::Precondition("inhomogeneity is not resolved inside the contour window".into()));
    }
    let spectrum: Vec<(f64, C64)> = (-m..=m)
        .map(|j| {
            let tau = j as f64 * dtau;
            (tau, transform(tau) / (-(tau * tau) - alpha))
        })
        .collect();
    let mut values = vec![C64::new(0.0, 0.0); n];
    for (tau, g) in &spectrum {
        let rot = C64::from_polar(1.0, tau * dw);
        let mut ph = C64::new(1.0, 0.0);
        for v in values.iter_mut() {
            *v += g * ph;
            ph *= rot;
        }
    }
    let scale = dtau / (2.0 * PI);
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(HalfLineFunction { grid: f.grid.clone(), values, exponent_at_zero: Some(r), exponent_at_infinity: Some(-r) })
}

// ---------------------------------------------------------------- layers

fn layer_checks(f: &HalfLineFunction) -> Result<f64> {
    f.check_finite()?;
    let dw = f.log_step()?;
    if !decays_at_ends(&f.values) {
        return Err(Error::Precondition("inhomogeneity must vanish near t = 0 and decay at infinity".into()));
    }
    Ok(dw)
}

fn cumulative(f: &[C64], step: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    let zero = C64::new(0.0, 0.0);
    Ok((left_convolution(f, step, zero)?, right_convolution(f, step, zero)?))
}

/// Solves `[(t∂t)² − α² + t²] u = f` with `u ~ t^{α}` at 0 and outgoing
/// `e^{−it} t^{−1/2}` at infinity:
/// `u = (iπ/2)[H⁽²⁾(t)∫_0^t J f ds/s + J(t)∫_t^∞ H⁽²⁾ f ds/s]`.
pub fn bessel_layer_solve_alpha(f: &HalfLineFunction, alpha: f64) -> Result<HalfLineFunction> {
    let dw = layer_checks(f)?;
    let mut jv = Vec::with_capacity(f.grid.len());
    let mut h2 = Vec::with_capacity(f.grid.len());
    for &t in &f.grid {
        let h = hankel_pair(alpha, t)?;
        jv.push(h.h1.re);
        h2.push(h.h2);
    }
    let a: Vec<C64> = f.values.iter().zip(&jv).map(|(v, j)| v * *j).collect();
    let b: Vec<C64> = f.values.iter().zip(&h2).map(|(v, h)| v * h).collect();
    let (ia, _) = cumulative(&a, dw)?;
    let (_, ib) = cumulative(&b, dw)?;
    let c = C64::new(0.0, PI / 2.0);
    let values = (0..f.grid.len()).map(|i| c * (h2[i] * ia[i] + ib[i] * jv[i])).collect();
    Ok(HalfLineFunction { grid: f.grid.clone(), values, exponent_at_zero: Some(alpha), exponent_at_infinity: Some(-0.5) })
}

/// [`bessel_layer_solve_alpha`] with `α = √(n²/4 − λ)`.
pub fn bessel_layer_solve(f: &HalfLineFunction, params: &ModelParams) -> Result<HalfLineFunction> {
    bessel_layer_solve_alpha(f, params.alpha())
}

/// Solves `[(t∂t)² − α² − t²] u = f` with `u ~ t^{α}` at 0 and exponential decay:
/// `u = −[K(t)∫_0^t I f ds/s + I(t)∫_t^∞ K f ds/s]`, evaluated with scaled I, K.
pub fn elliptic_layer_solve(f: &HalfLineFunction, alpha: f64) -> Result<HalfLineFunction> {
    if !(0.0..=5.0).contains(&alpha) {
        return Err(Error::Range(format!("order {alpha} outside [0, 5]")));
    }
    let dw = layer_checks(f)?;
    let n = f.grid.len();
    let mut is = Vec::with_capacity(n);
    let mut ks = Vec::with_capacity(n);
    for &t in &f.grid {
        let (i, _, k, _) = bessel_ik_scaled(alpha, t);
        is.push(i);
        ks.push(k);
    }
    // I(s) f(s) = (e^{−s}I) · e^{s} f,  K(s) f(s) = (e^{s}K) · e^{−s} f
    if f.grid.iter().zip(&f.values).any(|(t, v)| *t > 700.0 && v.norm() > 0.0) {
        return Err(Error::Range("elliptic layer sources must vanish beyond t = 700".into()));
    }
    let a: Vec<C64> = (0..n)
        .map(|i| if f.grid[i] > 700.0 { C64::new(0.0, 0.0) } else { f.values[i] * (is[i] * f.grid[i].exp()) })
        .collect();
    let b: Vec<C64> = (0..n).map(|i| f.values[i] * (ks[i] * (-f.grid[i]).exp())).collect();
    let (ia, _) = cumulative(&a, dw)?;
    let (_, ib) = cumulative(&b, dw)?;
    let values = (0..n)
        .map(|i| {
            let t = f.grid[i];
            let kt = ks[i] * (-t).exp();
            let it = if t < 700.0 { is[i] * t.exp() } else { f64::INFINITY };
            let second = if ib[i] == C64::new(0.0, 0.0) { C64::new(0.0, 0.0) } else { ib[i] * it };
            -(ia[i] * kt + second)
        })
        .collect();
    Ok(HalfLineFunction { grid: f.grid.clone(), values, exponent_at_zero: Some(alpha), exponent_at_infinity: None })
}

// ---------------------------------------------------------------- free resolvents

fn line_checks(f: &LineFunction) -> Result<()> {
    if f.values.len() < 2 * STENCIL || !(f.step > 0.0) {
        return Err(Error::Config("line function needs at least 16 samples and a positive step".into()));
    }
    if f.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Domain("non-finite samples".into()));
    }
    if !decays_at_ends(&f.values) {
        return Err(Error::Precondition("inhomogeneity must be compactly supported inside the grid".into()));
    }
    Ok(())
}

/// Outgoing solution of `(∂² + μ) u = f`: `u = ∫ e^{−i√μ|Z−Z'|}/(−2i√μ) f(Z') dZ'`.
pub fn free_outgoing_resolvent(f: &LineFunction, mu: f64) -> Result<LineFunction> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu = {mu} must be positive; use the decaying resolvent")));
    }
    line_checks(f)?;
    let k = mu.sqrt();
    let r = C64::new(0.0, k);
    let left = left_convolution(&f.values, f.step, r)?;
    let right = right_convolution(&f.values, f.step, r)?;
    let den = C64::new(0.0, -2.0 * k);
    let values = left.iter().zip(&right).map(|(a, b)| (a + b) / den).collect();
    Ok(LineFunction { start: f.start, step: f.step, values })
}

/// Far-field amplitudes `(c₋, c₊)` with `u ≈ c± e^{−i√μ|Z|}` as `Z → ±∞`.
pub fn outgoing_far_field(f: &LineFunction, mu: f64) -> Result<(C64, C64)> {
    let u = free_outgoing_resolvent(f, mu)?;
    let k = mu.sqrt();
    let n = u.values.len();
    let zl = u.point(0);
    let zr = u.point(n - 1);
    Ok((u.values[0] * C64::from_polar(1.0, -k * zl), u.values[n - 1] * C64::from_polar(1.0, k * zr)))
}

/// Decaying solution of `(∂² − κ²) u = f`: kernel `−e^{−κ|s|}/(2κ)`.
pub fn free_decaying_resolvent(f: &LineFunction, kappa2: f64) -> Result<LineFunction> {
    if !(kappa2 > 0.0) {
        return Err(Error::Domain(format!("kappa^2 = {kappa2} must be positive")));
    }
    line_checks(f)?;
    let k = kappa2.sqrt();
    let r = C64::new(k, 0.0);
    let left = left_convolution(&f.values, f.step, r)?;
    let right = right_convolution(&f.values, f.step, r)?;
    let values = left.iter().zip(&right).map(|(a, b)| -(a + b) / (2.0 * k)).collect();
    Ok(LineFunction { start: f.start, step: f.step, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_is_exact_for_polynomials_times_exponentials() {
        let r = C64::new(0.7, 0.3);
        let step = 0.05;
        let f: Vec<C64> = (0..40).map(|i| C64::new((i as f64 * step).powi(5), 0.0)).collect();
        let left = left_convolution(&f, step, r).unwrap();
        // direct fine quadrature of the last entry
        let w_end = 39.0 * step;
        let m = 200_000;
        let h = w_end / m as f64;
        let mut s = C64::new(0.0, 0.0);
        for j in 0..=m {
            let w = j as f64 * h;
            let wt = if j == 0 || j == m { 0.5 } else { 1.0 };
            s += (-r * (w_end - w)).exp() * w.powi(5) * wt;
        }
        s *= h;
        assert!((left[39] - s).norm() < 1e-8 * s.norm(), "{} {}", left[39], s);
    }

    #[test]
    fn lagrange_basis_interpolates() {
        for p in 0..7 {
            let m = lagrange_monomials(p);
            for k in 0..STENCIL {
                for j in 0..STENCIL {
                    let x = j as f64 - p as f64;
                    let v: f64 = (0..STENCIL).map(|q| m[k][q] * x.powi(q as i32)).sum();
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-10);
                }
            }
        }
    }
}
