//! Finite-difference model of the extended global operators
//! `−h²∂²_σ + ṽ± − 4/9 − iW` and power-iteration estimates of the weighted
//! resolvent norm as `h → 0`.

use crate::error::{Error, Result};
use crate::io::{csv_string, fit_line};
use crate::rays::{Profile, Sign, OFFSET};
use crate::C64;
use rayon::prelude::*;

/// Uniform σ-grid and absorbing layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub points: usize,
    /// Fraction of the grid covered by each absorbing layer (at most 0.2).
    pub layer_fraction: f64,
    /// Peak of the quadratic layer profile `W`.
    pub layer_strength: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { sigma_min: -1.0, sigma_max: 5.0, points: 4096, layer_fraction: 0.2, layer_strength: 5.0 }
    }
}

impl GridSpec {
    pub fn step(&self) -> f64 {
        (self.sigma_max - self.sigma_min) / (self.points - 1) as f64
    }
}

/// Regularization `δ = h²·ABSORPTION` added to the spectral parameter.
pub const ABSORPTION: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub sign: Sign,
    pub h: f64,
    pub grid: GridSpec,
    pub sigma: Vec<f64>,
    /// `ṽ(σ) − 4/9`, real.
    pub potential: Vec<f64>,
    /// Layer profile `W ≥ 0`.
    pub absorber: Vec<f64>,
    pub delta: f64,
    /// Index range `[lo, hi)` outside both layers.
    pub interior: (usize, usize),
}

/// Assembles the three-point discretization; requires `Δ ≤ h/10`.
pub fn build_global_operator(sign: Sign, h: f64, grid: &GridSpec) -> Result<DiscretizedOperator> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("h = {h} must be positive")));
    }
    if grid.points < 16 || !(grid.sigma_max > grid.sigma_min) {
        return Err(Error::Config("grid needs sigma_min < sigma_max and at least 16 points".into()));
    }
    if !(0.0..=0.2).contains(&grid.layer_fraction) || !(grid.layer_strength >= 0.0) {
        return Err(Error::Config("layer fraction must lie in [0, 0.2] and strength be nonnegative".into()));
    }
    let d = grid.step();
    if d > h / 10.0 * (1.0 + 1e-12) {
        return Err(Error::Config(format!("grid step {d} does not resolve h/10 = {}", h / 10.0)));
    }
    let profile = Profile::new(sign);
    let n = grid.points;
    let sigma: Vec<f64> = (0..n).map(|i| grid.sigma_min + d * i as f64).collect();
    let potential = sigma.iter().map(|&s| profile.value(s) - OFFSET).collect();
    let width = grid.layer_fraction * (grid.sigma_max - grid.sigma_min);
    let (left, right) = (grid.sigma_min + width, grid.sigma_max - width);
    let absorber = sigma
        .iter()
        .map(|&s| {
            if width == 0.0 {
                0.0
            } else if s < left {
                grid.layer_strength * ((left - s) / width).powi(2)
            } else if s > right {
                grid.layer_strength * ((s - right) / width).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let lo = sigma.iter().position(|&s| s >= left).unwrap_or(0);
    let hi = sigma.iter().rposition(|&s| s <= right).map(|i| i + 1).unwrap_or(n);
    Ok(DiscretizedOperator { sign, h, grid: grid.clone(), sigma, potential, absorber, delta: h * h * ABSORPTION, interior: (lo, hi) })
}

impl DiscretizedOperator {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    fn diag(&self, i: usize) -> C64 {
        let d = self.grid.step();
        C64::new(2.0 * self.h * self.h / (d * d) + self.potential[i], -self.absorber[i] - self.delta)
    }

    fn off(&self) -> f64 {
        let d = self.grid.step();
        -self.h * self.h / (d * d)
    }

    /// `(Q − iδ) u` with zero Dirichlet data outside the grid.
    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        let n = self.len();
        let off = self.off();
        (0..n)
            .map(|i| {
                let mut v = self.diag(i) * u[i];
                if i > 0 {
                    v += u[i - 1] * off;
                }
                if i + 1 < n {
                    v += u[i + 1] * off;
                }
                v
            })
            .collect()
    }

    /// Tridiagonal LU with partial pivoting.
    pub fn factor(&self) -> Result<Factorization> {
        let n = self.len();
        let off = C64::new(self.off(), 0.0);
        let mut d: Vec<C64> = (0..n).map(|i| self.diag(i)).collect();
        let mut du = vec![off; n - 1];
        let mut dl = vec![off; n - 1];
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swap = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    return Err(Error::Precondition("singular operator".into()));
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if d[n - 1].norm() == 0.0 {
            return Err(Error::Precondition("singular operator".into()));
        }
        Ok(Factorization { d, du, du2, dl, swap })
    }

    /// `⟨σ⟩^{−(1/2+ε)}` on the grid.
    pub fn weights(&self, epsilon: f64) -> Vec<f64> {
        self.sigma.iter().map(|s| (1.0 + s * s).powf(-0.25 - 0.5 * epsilon)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Factorization {
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    dl: Vec<C64>,
    swap: Vec<bool>,
}

impl Factorization {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if self.swap[i] {
                x.swap(i, i + 1);
                let t = x[i];
                x[i + 1] -= self.dl[i] * t;
            } else {
                let t = x[i];
                x[i + 1] -= self.dl[i] * t;
            }
        }
        x[n - 1] /= self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }

    /// Solves with the adjoint. The matrix is complex symmetric, so
    /// `A^H x = b` is `A x̄ = b̄`.
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let conj: Vec<C64> = b.iter().map(|v| v.conj()).collect();
        self.solve(&conj).into_iter().map(|v| v.conj()).collect()
    }
}

/// Stopping rule of the power iteration on `B^H B`.
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub norm: f64,
    pub iterations: usize,
}

/// Largest singular value of `B = χ w G w χ`, with `χ` the interior
/// indicator and `w = ⟨σ⟩^{−(1/2+ε)}`.
pub fn weighted_resolvent_norm(op: &DiscretizedOperator, epsilon: f64) -> Result<NormEstimate> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let lu = op.factor()?;
    let (lo, hi) = op.interior;
    let n = op.len();
    let w: Vec<f64> = op.weights(epsilon).iter().enumerate().map(|(i, w)| if i >= lo && i < hi { *w } else { 0.0 }).collect();
    let apply_b = |v: &[C64]| {
        let f: Vec<C64> = v.iter().zip(&w).map(|(a, b)| a * b).collect();
        lu.solve(&f).into_iter().zip(&w).map(|(a, b)| a * b).collect::<Vec<_>>()
    };
    let apply_bh = |v: &[C64]| {
        let f: Vec<C64> = v.iter().zip(&w).map(|(a, b)| a * b).collect();
        lu.solve_adjoint(&f).into_iter().zip(&w).map(|(a, b)| a * b).collect::<Vec<_>>()
    };
    let norm = |v: &[C64]| v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    // deterministic smooth start supported in the interior
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(w[i], 0.5 * w[i] * (i as f64 * 0.37).sin())).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);
    let mut est = 0.0;
    for it in 1..=POWER_MAX_ITER {
        let bv = apply_b(&v);
        let s = norm(&bv);
        let mut next = apply_bh(&bv);
        let nn = norm(&next);
        if nn == 0.0 {
            return Err(Error::Iteration("power iteration collapsed to zero".into()));
        }
        next.iter_mut().for_each(|a| *a /= nn);
        v = next;
        if (s - est).abs() <= POWER_TOL * s {
            return Ok(NormEstimate { norm: s, iterations: it });
        }
        est = s;
    }
    Err(Error::Iteration(format!("power iteration did not settle in {POWER_MAX_ITER} steps")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub h: Vec<f64>,
    pub norms: Vec<f64>,
    pub iterations: Vec<usize>,
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl ScanResult {
    /// Columns `h, norm, fit` with the fitted power law in the last column.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .h
            .iter()
            .zip(&self.norms)
            .map(|(h, n)| vec![*h, *n, (self.intercept + self.exponent * h.ln()).exp()])
            .collect();
        csv_string(&["h", "norm", "fit"], &rows)
    }
}

/// Norms for each `h` and the least-squares exponent of `norm ∝ h^p`.
pub fn resolvent_norm_scan(sign: Sign, h_list: &[f64], epsilon: f64, grid: &GridSpec) -> Result<ScanResult> {
    if h_list.len() < 4 {
        return Err(Error::Config("need at least four h values".into()));
    }
    let ratio = h_list[1] / h_list[0];
    if !(ratio > 0.0) || ratio == 1.0 || h_list.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) {
        return Err(Error::Config("h values must form a geometric sequence".into()));
    }
    let ops: Vec<DiscretizedOperator> = h_list.iter().map(|&h| build_global_operator(sign, h, grid)).collect::<Result<_>>()?;
    let est: Vec<NormEstimate> = ops.par_iter().map(|op| weighted_resolvent_norm(op, epsilon)).collect::<Result<_>>()?;
    let xs: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = est.iter().map(|e| e.norm.ln()).collect();
    let (exponent, intercept, r2) = fit_line(&xs, &ys);
    Ok(ScanResult {
        h: h_list.to_vec(),
        norms: est.iter().map(|e| e.norm).collect(),
        iterations: est.iter().map(|e| e.iterations).collect(),
        exponent,
        intercept,
        r2,
    })
}
