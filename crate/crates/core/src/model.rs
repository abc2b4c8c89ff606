//! Model parameters, indicial roots and the glancing coordinate reduction.

use crate::error::{Error, Result};

/// Which spectral ODE family is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Airy model `K'' = (|θ'|² − (1+x)θn²) K` with `K(0) = 1`.
    Friedlander,
    /// Asymptotically AdS spectral operator with the regular singular point at `x = 0`.
    Ads,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Friedlander => "friedlander",
            Mode::Ads => "ads",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "friedlander" => Ok(Mode::Friedlander),
            "ads" => Ok(Mode::Ads),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

pub const DEFAULT_N: usize = 2;
pub const DEFAULT_LAMBDA: f64 = 0.84;
pub const DEFAULT_DELTA2: f64 = 0.25;
const RESONANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub lambda: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    pub mode: Mode,
    pub delta2_tilde: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::new(DEFAULT_N, DEFAULT_LAMBDA, Mode::Ads).expect("default parameters are valid")
    }
}

impl ModelParams {
    /// Validated constructor. Rejects `λ ≥ n²/4` and integral `2√(n²/4 − λ)`.
    pub fn new(n: usize, lambda: f64, mode: Mode) -> Result<Self> {
        Self::with_delta(n, lambda, mode, DEFAULT_DELTA2)
    }

    pub fn with_delta(n: usize, lambda: f64, mode: Mode, delta2_tilde: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("boundary dimension n = {n} must be at least 2")));
        }
        if !(delta2_tilde > 0.0) || !delta2_tilde.is_finite() {
            return Err(Error::Domain("cutoff threshold must be positive".into()));
        }
        let (s_minus, s_plus, resonant) = indicial_roots(n, lambda)?;
        if resonant {
            return Err(Error::Degenerate(format!(
                "2*sqrt(n^2/4 - lambda) = {} is an integer",
                s_plus - s_minus
            )));
        }
        Ok(ModelParams { n, lambda, s_minus, s_plus, mode, delta2_tilde })
    }

    /// `α = √(n²/4 − λ)`, half the gap between the indicial roots.
    pub fn alpha(&self) -> f64 {
        0.5 * (self.s_plus - self.s_minus)
    }

    /// `λ − n²/4`, the constant term of the conjugated operator.
    pub fn kappa(&self) -> f64 {
        self.lambda - (self.n * self.n) as f64 / 4.0
    }
}

/// Indicial roots `n/2 ∓ √(n²/4 − λ)` plus a flag set when `2√(n²/4 − λ)` is an integer.
pub fn indicial_roots(n: usize, lambda: f64) -> Result<(f64, f64, bool)> {
    let q = (n * n) as f64 / 4.0 - lambda;
    if !(q > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda = {lambda} must be below n^2/4 = {}", (n * n) as f64 / 4.0)));
    }
    let r = q.sqrt();
    let half = n as f64 / 2.0;
    let two_r = 2.0 * r;
    let resonant = (two_r - two_r.round()).abs() < RESONANCE_TOL;
    Ok((half - r, half + r, resonant))
}

/// Dual variables to `y = (y', y_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub theta_prime: Vec<f64>,
    pub theta_n: f64,
    pub theta_hat_prime: Vec<f64>,
}

impl Covector {
    pub fn new(theta_prime: Vec<f64>, theta_n: f64) -> Result<Self> {
        if theta_n == 0.0 || !theta_n.is_finite() {
            return Err(Error::Domain("theta_n must be finite and nonzero".into()));
        }
        if theta_prime.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("theta' must be finite".into()));
        }
        let theta_hat_prime = theta_prime.iter().map(|t| t / theta_n).collect();
        Ok(Covector { theta_prime, theta_n, theta_hat_prime })
    }

    /// Convenience for `n = 2`: `θ = (θ', θn)`.
    pub fn planar(theta_prime: f64, theta_n: f64) -> Result<Self> {
        Self::new(vec![theta_prime], theta_n)
    }

    pub fn tp2(&self) -> f64 {
        self.theta_prime.iter().map(|t| t * t).sum()
    }

    /// `|θ̂'|²`.
    pub fn a2(&self) -> f64 {
        self.theta_hat_prime.iter().map(|t| t * t).sum()
    }
}

/// Glancing reduction variables at one point `x`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlancingFrame {
    pub Z0: f64,
    pub Z: f64,
    pub z: f64,
    pub h: f64,
    pub sigma: f64,
    pub t: f64,
    /// Partition weights `(χ₋, χ₀, χ₊)`.
    pub weights: (f64, f64, f64),
}

fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Smooth step: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
pub fn smooth_step(s: f64) -> f64 {
    let a = psi(s);
    let b = psi(1.0 - s);
    a / (a + b)
}

/// Partition of unity `(χ₋, χ₀, χ₊)` in `Z₀` with transitions on `δ ≤ |Z₀| ≤ 2δ`.
pub fn cutoffs(z0: f64, delta: f64) -> (f64, f64, f64) {
    let plus = smooth_step((z0 - delta) / delta);
    let minus = smooth_step((-z0 - delta) / delta);
    (minus, 1.0 - plus - minus, plus)
}

pub fn glancing_coordinates(x: f64, theta: &Covector, params: &ModelParams) -> GlancingFrame {
    let scale = theta.theta_n.abs().powf(2.0 / 3.0);
    let a2 = theta.a2();
    let z0 = scale * (1.0 - a2);
    let zz = z0 + x * scale;
    let d = params.delta2_tilde;
    let (cm, c0, cp) = cutoffs(z0, d);
    let mut z = 0.0;
    let mut h = 0.0;
    if cp > 0.0 {
        z += cp * x / (1.0 - a2);
        h += cp * z0.powf(-1.5);
    }
    if cm > 0.0 {
        z += cm * x / (a2 - 1.0);
        h += cm * (-z0).powf(-1.5);
    }
    if c0 > 0.0 {
        // near glancing the frame is unscaled: z = Z − Z₀, h frozen at the outer edge
        z += c0 * x * scale;
        h += c0 * (2.0 * d).powf(-1.5);
    }
    let sigma = z.max(0.0).powf(1.5);
    let t = z / h;
    GlancingFrame { Z0: z0, Z: zz, z, h, sigma, t, weights: (cm, c0, cp) }
}

/// Fourth-order centered first and second differences on a uniform grid.
/// Returns `None` outside the two-point margin.
fn fd4(v: &[f64], i: usize, dx: f64) -> Option<(f64, f64)> {
    if i < 2 || i + 2 >= v.len() {
        return None;
    }
    let d1 = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dx);
    let d2 = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * dx * dx);
    Some((d1, d2))
}

/// Max-norm of `x^{−n/2} L̂ (x^{n/2} g) − Q̃ g` on the interior of a uniform grid,
/// both sides by finite differences.
pub fn conjugation_residual(xs: &[f64], g: &[f64], theta: &Covector, params: &ModelParams) -> Result<f64> {
    if xs.len() < 16 || xs.len() != g.len() {
        return Err(Error::Config("conjugation residual needs at least 16 matching samples".into()));
    }
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(dx > 0.0) || xs[0] <= 0.0 {
        return Err(Error::Config("grid must be increasing and inside x > 0".into()));
    }
    let n = params.n as f64;
    let tn2 = theta.theta_n * theta.theta_n;
    let tp2 = theta.tp2();
    let u: Vec<f64> = xs.iter().zip(g).map(|(x, gv)| x.powf(n / 2.0) * gv).collect();
    let mut worst: f64 = 0.0;
    for i in 2..xs.len() - 2 {
        let x = xs[i];
        let (u1, u2) = fd4(&u, i, dx).unwrap();
        let (g1, g2) = fd4(g, i, dx).unwrap();
        let lhat = x * x * u2 - (n - 1.0) * x * u1 + (x * x * ((1.0 + x) * tn2 - tp2) + params.lambda) * u[i];
        let left = x.powf(-n / 2.0) * lhat;
        let qt = x * x * g2 + x * g1 + (params.kappa() + x * x * (tn2 - tp2) + x.powi(3) * tn2) * g[i];
        worst = worst.max((left - qt).abs());
    }
    Ok(worst)
}
