//! Inverse Fourier synthesis of the physical field, the predicted singular
//! support, a band-energy singularity detector and the boundary exponent fit.

use crate::error::{Error, Result};
use crate::frobenius::spectral_values;
use crate::io::{csv_string, fit_line, svg_heatmap, GridFile};
use crate::model::{Mode, ModelParams};
use crate::specfun::airy_ai;
use crate::C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Square θ-grid `θ_k = (k − N/2)Δθ`, `Δθ = 2θ_max/N`, on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid {
    pub points: usize,
    pub theta_max: f64,
}

impl ThetaGrid {
    pub fn step(&self) -> f64 {
        2.0 * self.theta_max / self.points as f64
    }

    pub fn value(&self, k: usize) -> f64 {
        (k as f64 - (self.points / 2) as f64) * self.step()
    }
}

/// Square y-grid `y_j = (j − N/2)·step` on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YGrid {
    pub points: usize,
    pub step: f64,
}

impl YGrid {
    /// The grid whose DFT lands exactly on `theta`.
    pub fn dual(theta: &ThetaGrid) -> YGrid {
        YGrid { points: theta.points, step: PI / theta.theta_max }
    }

    pub fn value(&self, j: usize) -> f64 {
        (j as f64 - (self.points / 2) as f64) * self.step
    }
}

/// Default taper scale: `ϖ(εθ_max) = e^{−9}`.
pub fn default_epsilon(theta: &ThetaGrid) -> f64 {
    3.0 / theta.theta_max
}

/// `ϖ(s) = e^{−|s|²}`; `eps = 0` means no taper.
pub fn taper(eps: f64, tp: f64, tn: f64) -> f64 {
    (-(eps * eps) * (tp * tp + tn * tn)).exp()
}

/// `U(x_i, y'_j, y_n,l)` for a list of x rows, stored row-major as `[i][j][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub x: Vec<f64>,
    pub y: YGrid,
    pub theta: ThetaGrid,
    pub epsilon: f64,
    pub data: Vec<C64>,
    /// Model that produced the field, if any.
    pub params: Option<ModelParams>,
    /// θ-columns that hit a pole and were filled from neighbours.
    pub infilled: usize,
}

impl Field2D {
    pub fn plane_len(&self) -> usize {
        self.y.points * self.y.points
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let m = self.plane_len();
        &self.data[i * m..(i + 1) * m]
    }

    pub fn at(&self, i: usize, j: usize, l: usize) -> C64 {
        self.row(i)[j * self.y.points + l]
    }

    /// Builds an untapered field from samples of `f(x, y', y_n)` (used for calibration).
    pub fn from_fn<F: Fn(f64, f64, f64) -> C64>(x: &[f64], theta: ThetaGrid, f: F) -> Result<Field2D> {
        check_grid(&theta)?;
        let epsilon = 0.0;
        let y = YGrid::dual(&theta);
        let n = y.points;
        let mut data = Vec::with_capacity(x.len() * n * n);
        for &xi in x {
            for j in 0..n {
                for l in 0..n {
                    data.push(f(xi, y.value(j), y.value(l)));
                }
            }
        }
        Ok(Field2D { x: x.to_vec(), y, theta, epsilon, data, params: None, infilled: 0 })
    }

    /// Discrete Fourier data `Û(θ) = Σ_y U e^{−iy·θ} Δy²` of one row, laid out like the θ-grid.
    pub fn spectrum(&self, i: usize) -> Vec<C64> {
        let n = self.y.points;
        let mut buf: Vec<C64> = self.row(i).to_vec();
        checkerboard(&mut buf, n);
        fft2(&mut buf, n, false);
        checkerboard(&mut buf, n);
        let s = self.y.step * self.y.step;
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }

    /// One x-row as a GLNC1 grid over `(y', y_n)`.
    pub fn row_grid(&self, i: usize) -> GridFile {
        let data = self.row(i).iter().flat_map(|v| [v.re, v.im]).collect();
        let (y0, dy) = (self.y.value(0), self.y.step);
        GridFile { nx: self.y.points, ny: self.y.points, x0: y0, dx: dy, y0, dy, complex: true, data }
    }

    /// Columns `x, y_prime, y_n, re, im`.
    pub fn to_csv(&self) -> String {
        let n = self.y.points;
        let mut rows = Vec::with_capacity(self.data.len());
        for (i, &x) in self.x.iter().enumerate() {
            for j in 0..n {
                for l in 0..n {
                    let v = self.at(i, j, l);
                    rows.push(vec![x, self.y.value(j), self.y.value(l), v.re, v.im]);
                }
            }
        }
        csv_string(&["x", "y_prime", "y_n", "re", "im"], &rows)
    }
}

fn check_grid(theta: &ThetaGrid) -> Result<()> {
    if theta.points < 16 || theta.points % 4 != 0 {
        return Err(Error::Config("theta grid needs a multiple of 4 points, at least 16".into()));
    }
    if !(theta.theta_max > 0.0) || !theta.theta_max.is_finite() {
        return Err(Error::Config("theta_max must be positive".into()));
    }
    Ok(())
}

/// Multiplies entry `(j, l)` by `(−1)^{j+l}`, moving the origin to the grid centre.
fn checkerboard(buf: &mut [C64], n: usize) {
    for j in 0..n {
        for l in 0..n {
            if (j + l) % 2 == 1 {
                buf[j * n + l] = -buf[j * n + l];
            }
        }
    }
}

/// Unnormalized 2-D DFT, `e^{+2πi…}` when `inverse`.
fn fft2(buf: &mut [C64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in buf.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); n];
    for l in 0..n {
        for j in 0..n {
            col[j] = buf[j * n + l];
        }
        fft.process(&mut col);
        for j in 0..n {
            buf[j * n + l] = col[j];
        }
    }
}

/// `(2π)^{−2} Σ_θ Û(θ) e^{iy·θ} Δθ²` on the dual grid.
fn inverse_row(spec: &mut [C64], theta: &ThetaGrid) {
    let n = theta.points;
    checkerboard(spec, n);
    fft2(spec, n, true);
    checkerboard(spec, n);
    let c = theta.step() * theta.step() / (4.0 * PI * PI);
    spec.iter_mut().for_each(|v| *v *= c);
}

/// Spectral values of one θ-column at every x row, or `None` at a pole.
pub type ColumnFn<'a> = dyn Fn(f64, f64) -> Result<Option<Vec<C64>>> + Sync + 'a;

/// Synthesis from an arbitrary spectral family `col(θ', θn)`.
pub fn synthesize_with(theta: &ThetaGrid, epsilon: f64, x_rows: &[f64], col: &ColumnFn<'_>) -> Result<Field2D> {
    check_grid(theta)?;
    if !(epsilon > 0.0) {
        return Err(Error::Domain("taper scale must be positive".into()));
    }
    if x_rows.is_empty() || x_rows.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("x rows must be nonempty and strictly increasing".into()));
    }
    let n = theta.points;
    let nx = x_rows.len();
    // columns[k][m][i]: θ' index k, θn index m, x row i
    let columns: Vec<Vec<Option<Vec<C64>>>> = (0..n)
        .into_par_iter()
        .map(|k| (0..n).map(|m| col(theta.value(k), theta.value(m))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut infilled = 0;
    let mut spec = vec![vec![C64::new(0.0, 0.0); n * n]; nx];
    for k in 0..n {
        for m in 0..n {
            let vals = match &columns[k][m] {
                Some(v) => v.clone(),
                None => {
                    infilled += 1;
                    let nb: Vec<&Vec<C64>> = [m.wrapping_sub(1), m + 1]
                        .iter()
                        .filter(|&&q| q < n)
                        .filter_map(|&q| columns[k][q].as_ref())
                        .collect();
                    if nb.is_empty() {
                        return Err(Error::Pole("adjacent theta columns are all poles".into()));
                    }
                    (0..nx).map(|i| nb.iter().map(|v| v[i]).sum::<C64>() / nb.len() as f64).collect()
                }
            };
            let w = taper(epsilon, theta.value(k), theta.value(m));
            for i in 0..nx {
                spec[i][k * n + m] = vals[i] * w;
            }
        }
    }
    spec.par_iter_mut().for_each(|row| inverse_row(row, theta));
    let data = spec.into_iter().flatten().collect();
    Ok(Field2D { x: x_rows.to_vec(), y: YGrid::dual(theta), theta: *theta, epsilon, data, params: None, infilled })
}

/// Angular window `[start, end]` in `a = |θ'|/|θn|` for the Airy model: the
/// standing-wave family grows like `e^{|θ'|x}` off the cone and is cut off
/// smoothly before glancing.
pub const AIRY_CONE: (f64, f64) = (0.8, 0.95);

/// Smooth cutoff equal to 1 for `a ≤ AIRY_CONE.0` and 0 for `a ≥ AIRY_CONE.1`.
pub fn cone_cutoff(tp: f64, tn: f64) -> f64 {
    if tp == 0.0 {
        return 1.0;
    }
    if tn == 0.0 {
        return 0.0;
    }
    let a = (tp / tn).abs();
    let (a0, a1) = AIRY_CONE;
    if a <= a0 {
        return 1.0;
    }
    if a >= a1 {
        return 0.0;
    }
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let t = (a1 - a) / (a1 - a0);
    f(t) / (f(t) + f(1.0 - t))
}

/// `weight·values`, except that rows at `x = 0` keep the boundary value 1.
fn boundary_rows(x_rows: &[f64], weight: f64, values: &[C64]) -> Vec<C64> {
    x_rows
        .iter()
        .enumerate()
        .map(|(i, &x)| if x == 0.0 { C64::new(1.0, 0.0) } else if weight == 0.0 { C64::new(0.0, 0.0) } else { values[i] * weight })
        .collect()
}

/// True when a zero of `Ai(ζ₀(θn))` lies within `radius` of `θn` (Newton distance).
fn near_airy_zero(tp: f64, tn: f64, radius: f64) -> Result<bool> {
    let s = tn.abs().powf(2.0 / 3.0);
    if s == 0.0 {
        return Ok(false);
    }
    let zeta0 = tp * tp / (s * s) - s;
    if zeta0 >= 0.0 {
        return Ok(false);
    }
    let v = airy_ai(zeta0)?;
    let dz = (4.0 / 3.0) * tp * tp / (s * s * tn.abs()) + (2.0 / 3.0) / s.sqrt();
    Ok((v.ai / v.ai_prime).abs() / dz < radius)
}

/// Spectral tolerance used for synthesis columns.
pub const SYNTHESIS_TOL: f64 = 1e-9;

/// `U = (2π)^{−2} Σ_θ û(x, θ) ϖ(εθ) e^{iy·θ} Δθ²` with `û` from the spectral solver.
/// Columns depend on `|θ'|` only and are solved once per `|θ'|`. In the Airy
/// model the family is restricted by [`cone_cutoff`] for `x > 0`, and columns
/// with a zero of `Ai(ζ₀)` within half a cell count as poles.
pub fn synthesize_field(params: &ModelParams, theta: &ThetaGrid, epsilon: f64, y: &YGrid, x_rows: &[f64]) -> Result<Field2D> {
    check_grid(theta)?;
    let dual = YGrid::dual(theta);
    if y.points != dual.points || (y.step - dual.step).abs() > 1e-12 * dual.step {
        return Err(Error::Config("y grid is not the Nyquist dual of the theta grid".into()));
    }
    if params.mode == Mode::Ads && x_rows.first().is_some_and(|x| *x <= 0.0) {
        return Err(Error::Domain("ads mode needs x > 0".into()));
    }
    let n = theta.points;
    let half = n / 2;
    let step = theta.step();
    // cache over |θ'| index a = |k − N/2| ∈ 0..=N/2
    let cache: Vec<Vec<Option<Vec<C64>>>> = (0..=half)
        .into_par_iter()
        .map(|a| {
            let tp = a as f64 * step;
            (0..n)
                .map(|m| {
                    let tn = theta.value(m);
                    let weight = match params.mode {
                        Mode::Ads => 1.0,
                        Mode::Friedlander => {
                            let w = cone_cutoff(tp, tn);
                            if w == 0.0 {
                                return Ok(Some(boundary_rows(x_rows, 0.0, &[])));
                            }
                            if near_airy_zero(tp, tn, 0.5 * step)? {
                                return Ok(None);
                            }
                            w
                        }
                    };
                    match spectral_values(params, tp * tp, tn, x_rows, SYNTHESIS_TOL) {
                        Ok(v) => Ok(Some(boundary_rows(x_rows, weight, &v.values))),
                        Err(Error::Pole(_)) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let lookup = |tp: f64, tn: f64| -> Result<Option<Vec<C64>>> {
        let a = (tp.abs() / step).round() as usize;
        let m = (tn / step + half as f64).round() as usize;
        Ok(cache[a][m].clone())
    };
    let mut f = synthesize_with(theta, epsilon, x_rows, &lookup)?;
    f.params = Some(params.clone());
    Ok(f)
}

// ---------------------------------------------------------------- predicted Σ

/// Point of Σ at height `x` for `a = θ'/θn ∈ [−1, 1]`, as `(y', y_n)`.
pub fn sigma_point(a: f64, x: f64) -> (f64, f64) {
    let p = (1.0 + x - a * a).sqrt();
    let q = (1.0 - a * a).max(0.0).sqrt();
    let yn = 2.0 / 3.0 * (p * p * p - q * q * q) + 2.0 * a * a * (p - q);
    (-2.0 * a * (p - q), yn)
}

/// `y_n` of the glancing ray, `(2/3)x^{3/2} + 2x^{1/2}`.
pub fn glancing_height(x: f64) -> f64 {
    2.0 / 3.0 * x.powf(1.5) + 2.0 * x.sqrt()
}

/// Polylines of Σ at height `x` in the `(y', y_n)` plane; the Airy model's
/// standing wave adds the mirror image `y_n → −y_n`.
pub fn predict_singular_support(params: &ModelParams, x: f64) -> Result<Vec<Vec<(f64, f64)>>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain("x must be positive".into()));
    }
    let m = 2001;
    // a = sin(πs/2) clusters samples at the glancing ends
    let curve: Vec<(f64, f64)> =
        (0..m).map(|i| sigma_point((PI / 2.0 * (2.0 * i as f64 / (m - 1) as f64 - 1.0)).sin(), x)).collect();
    let mut out = vec![curve.clone()];
    if params.mode == Mode::Friedlander {
        out.push(curve.iter().map(|(a, b)| (*a, -*b)).collect());
    }
    Ok(out)
}

fn distance_to_curves(p: (f64, f64), curves: &[Vec<(f64, f64)>]) -> f64 {
    let mut best = f64::INFINITY;
    for c in curves {
        for w in c.windows(2) {
            let (ax, ay) = w[0];
            let (bx, by) = w[1];
            let (dx, dy) = (bx - ax, by - ay);
            let l2 = dx * dx + dy * dy;
            let t = if l2 > 0.0 { (((p.0 - ax) * dx + (p.1 - ay) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
            let (qx, qy) = (ax + t * dx - p.0, ay + t * dy - p.1);
            best = best.min((qx * qx + qy * qy).sqrt());
        }
    }
    best
}

// ---------------------------------------------------------------- detector

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClass {
    Smooth,
    Singular,
    Inconclusive,
}

impl DecayClass {
    pub fn code(&self) -> u8 {
        match self {
            DecayClass::Smooth => 0,
            DecayClass::Singular => 1,
            DecayClass::Inconclusive => 2,
        }
    }
}

/// Spatial smoothing of band energies (Gaussian, standard deviation in cells).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub radius: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { radius: 1.0 }
    }
}

/// Dyadic radial bands `r_k = r_top 2^{−k}` with profile `cos²(πz/2)`,
/// `z = log₂(r/r_k)/width`, supported on `|z| < 1`, each split into four
/// one-sided angular sectors whose energies are summed; the slope of `log(r² E)`
/// against `log r` is compared to `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub bands: usize,
    /// `r_top` as a fraction of `θ_max`; the top band must end inside the grid.
    pub top_fraction: f64,
    pub width: f64,
    pub threshold: f64,
    /// Cells whose top-band energy is below `floor` times the row's peak count as smooth.
    pub floor: f64,
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec { bands: 3, top_fraction: 0.4, width: 1.0, threshold: -1.0, floor: 1e-6 }
    }
}

/// Half-width of the slope band around the threshold that is reported inconclusive.
pub const AMBIGUOUS: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct RowReport {
    pub x: f64,
    pub classes: Vec<DecayClass>,
    pub slopes: Vec<f64>,
    pub predicted: Vec<Vec<(f64, f64)>>,
    /// Cells with `y_n ≥ y_n(1, x) + 4Δy`.
    pub shadow: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontReport {
    pub y: YGrid,
    pub rows: Vec<RowReport>,
    /// Distances (in cells) from singular cells to the predicted curves.
    pub max_match_distance: Option<f64>,
    pub mean_match_distance: Option<f64>,
    pub singular_cells: usize,
    /// Shadow cells not classified smooth.
    pub shadow_violations: usize,
}

fn smooth_periodic(map: &mut [f64], n: usize, sd: f64) {
    if sd <= 0.0 {
        return;
    }
    let r = (3.0 * sd).ceil() as i64;
    let kern: Vec<f64> = (-r..=r).map(|d| (-(d * d) as f64 / (2.0 * sd * sd)).exp()).collect();
    let norm: f64 = kern.iter().sum();
    let mut tmp = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for (t, w) in kern.iter().enumerate() {
                let q = (l as i64 + t as i64 - r).rem_euclid(n as i64) as usize;
                s += w * map[j * n + q];
            }
            tmp[j * n + l] = s / norm;
        }
    }
    for j in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for (t, w) in kern.iter().enumerate() {
                let q = (j as i64 + t as i64 - r).rem_euclid(n as i64) as usize;
                s += w * tmp[q * n + l];
            }
            map[j * n + l] = s / norm;
        }
    }
}

/// Bilinear periodic sample of `map` at fractional cell `(j, l)`.
fn sample(map: &[f64], n: usize, j: f64, l: f64) -> f64 {
    let (j0, l0) = (j.floor(), l.floor());
    let (fj, fl) = (j - j0, l - l0);
    let at = |a: f64, b: f64| map[(a as i64).rem_euclid(n as i64) as usize * n + (b as i64).rem_euclid(n as i64) as usize];
    (1.0 - fj) * (1.0 - fl) * at(j0, l0) + fj * (1.0 - fl) * at(j0 + 1.0, l0) + (1.0 - fj) * fl * at(j0, l0 + 1.0) + fj * fl * at(j0 + 1.0, l0 + 1.0)
}

/// Widest top-band ridge (in cells) still attributed to a singularity; the
/// band's own resolution is about one cell.
pub const RIDGE_WIDTH: f64 = 3.0;

/// Ridge test on a log-energy map: local maximum along the direction of
/// strongest negative curvature, with that curvature at most `−1/RIDGE_WIDTH²`.
fn is_ridge(map: &[f64], n: usize, j: usize, l: usize) -> bool {
    let c = map[j * n + l];
    let v = |dj: i64, dl: i64| map[((j as i64 + dj).rem_euclid(n as i64) as usize) * n + (l as i64 + dl).rem_euclid(n as i64) as usize];
    let hjj = v(1, 0) - 2.0 * c + v(-1, 0);
    let hll = v(0, 1) - 2.0 * c + v(0, -1);
    let hjl = 0.25 * (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1));
    // most negative eigenvalue and its eigenvector
    let tr = 0.5 * (hjj + hll);
    let disc = (0.25 * (hjj - hll) * (hjj - hll) + hjl * hjl).sqrt();
    let lam = tr - disc;
    if !(lam <= -1.0 / (RIDGE_WIDTH * RIDGE_WIDTH)) {
        return false;
    }
    let (mut ej, mut el) = if hjl.abs() > 1e-300 { (hjl, lam - hjj) } else if hjj <= hll { (1.0, 0.0) } else { (0.0, 1.0) };
    let nrm = (ej * ej + el * el).sqrt();
    ej /= nrm;
    el /= nrm;
    let (jf, lf) = (j as f64, l as f64);
    c >= sample(map, n, jf + ej, lf + el) && c >= sample(map, n, jf - ej, lf - el)
}

/// One-sided piece of a radial band: `cos²(φ − πs/2)` on the half-plane around
/// direction `s`, so the four sectors sum to the full band and each response is
/// analytic (its modulus does not oscillate across a line singularity).
fn band_sector(spec: &[C64], th: &ThetaGrid, eps: f64, r: f64, width: f64, sector: usize) -> Vec<C64> {
    let n = th.points;
    let c = 0.5 * PI * sector as f64;
    (0..n * n)
        .map(|idx| {
            let (tp, tn) = (th.value(idx / n), th.value(idx % n));
            let rad = (tp * tp + tn * tn).sqrt();
            if rad == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let z = (rad / r).log2() / width;
            let d = (tn.atan2(tp) - c + PI).rem_euclid(2.0 * PI) - PI;
            if z.abs() >= 1.0 || d.abs() >= 0.5 * PI {
                return C64::new(0.0, 0.0);
            }
            let w = (0.5 * PI * z).cos().powi(2) * d.cos().powi(2);
            spec[idx] * (w / taper(eps, tp, tn))
        })
        .collect()
}

/// Smoothed energies `r_k² Σ_s |b_{k,s}|²` of row `i` for each band radius.
pub fn band_energies(field: &Field2D, i: usize, radii: &[f64], width: f64, radius: f64) -> Vec<Vec<f64>> {
    let n = field.y.points;
    let th = field.theta;
    let spec = field.spectrum(i);
    radii
        .iter()
        .map(|&r| {
            let mut e = vec![0.0; n * n];
            for sector in 0..4 {
                let mut b = band_sector(&spec, &th, field.epsilon, r, width, sector);
                inverse_row(&mut b, &th);
                e.iter_mut().zip(&b).for_each(|(e, v)| *e += r * r * v.norm_sqr());
            }
            smooth_periodic(&mut e, n, radius);
            e
        })
        .collect()
}

/// Classifies every cell of every row by the decay of its band energies.
pub fn wavefront_scan(field: &Field2D, window: &WindowSpec, bands: &BandSpec) -> Result<WavefrontReport> {
    let n = field.y.points;
    if !(window.radius >= 0.0) || 6.0 * window.radius + 1.0 > n as f64 {
        return Err(Error::Config("smoothing window larger than the domain".into()));
    }
    if bands.bands < 2 || !(bands.top_fraction > 0.0 && bands.top_fraction <= 1.0) || !(bands.width > 0.0) {
        return Err(Error::Config("need at least two bands and a top fraction in (0, 1]".into()));
    }
    let th = field.theta;
    let top = bands.top_fraction * th.theta_max;
    if top * 2f64.powf(bands.width) > th.theta_max {
        return Err(Error::Config("top band extends past the theta grid".into()));
    }
    let radii: Vec<f64> = (0..bands.bands).map(|k| top * 0.5f64.powi(k as i32)).collect();
    if radii[bands.bands - 1] < 2.0 * th.step() {
        return Err(Error::Config("lowest band falls below the theta resolution".into()));
    }
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let margin = 4.0 * field.y.step;
    let rows: Vec<RowReport> = (0..field.x.len())
        .into_par_iter()
        .map(|i| {
            let energies = band_energies(field, i, &radii, bands.width, window.radius);
            let peak = energies[0].iter().cloned().fold(0.0, f64::max);
            let log_top: Vec<f64> = energies[0].iter().map(|e| e.max(1e-300).ln()).collect();
            let mut classes = Vec::with_capacity(n * n);
            let mut slopes = Vec::with_capacity(n * n);
            for c in 0..n * n {
                let ys: Vec<f64> = energies.iter().map(|e| e[c].max(1e-300).ln()).collect();
                let slope = fit_line(&lr, &ys).0;
                slopes.push(slope);
                let class = if !(energies[0][c] > bands.floor * peak) || slope < bands.threshold - AMBIGUOUS {
                    DecayClass::Smooth
                } else if !is_ridge(&log_top, n, c / n, c % n) {
                    DecayClass::Smooth
                } else if slope <= bands.threshold + AMBIGUOUS {
                    DecayClass::Inconclusive
                } else {
                    DecayClass::Singular
                };
                classes.push(class);
            }
            let x = field.x[i];
            let predicted = match &field.params {
                Some(p) if x > 0.0 => predict_singular_support(p, x).unwrap_or_default(),
                _ => vec![],
            };
            let shadow = if field.params.is_some() && x > 0.0 {
                let lim = glancing_height(x) + margin;
                (0..n * n).map(|c| field.y.value(c % n) >= lim).collect()
            } else {
                vec![false; n * n]
            };
            RowReport { x, classes, slopes, predicted, shadow }
        })
        .collect();
    let mut dists = vec![];
    let mut singular_cells = 0;
    let mut shadow_violations = 0;
    for r in &rows {
        for c in 0..n * n {
            if r.classes[c] == DecayClass::Singular {
                singular_cells += 1;
                if !r.predicted.is_empty() {
                    let p = (field.y.value(c / n), field.y.value(c % n));
                    dists.push(distance_to_curves(p, &r.predicted) / field.y.step);
                }
            }
            if r.shadow[c] && r.classes[c] != DecayClass::Smooth {
                shadow_violations += 1;
            }
        }
    }
    let max_match_distance = dists.iter().cloned().fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    let mean_match_distance = if dists.is_empty() { None } else { Some(dists.iter().sum::<f64>() / dists.len() as f64) };
    Ok(WavefrontReport { y: field.y, rows, max_match_distance, mean_match_distance, singular_cells, shadow_violations })
}

impl WavefrontReport {
    /// Singular cells of row `i` as `(y', y_n)`.
    pub fn singular_points(&self, i: usize) -> Vec<(f64, f64)> {
        let n = self.y.points;
        let r = &self.rows[i];
        (0..n * n).filter(|c| r.classes[*c] == DecayClass::Singular).map(|c| (self.y.value(c / n), self.y.value(c % n))).collect()
    }

    /// Columns `x, y_prime, y_n, class, slope` (class 0 smooth, 1 singular, 2 inconclusive).
    pub fn to_csv(&self) -> String {
        let n = self.y.points;
        let mut rows = vec![];
        for r in &self.rows {
            for c in 0..n * n {
                rows.push(vec![r.x, self.y.value(c / n), self.y.value(c % n), r.classes[c].code() as f64, r.slopes[c]]);
            }
        }
        csv_string(&["x", "y_prime", "y_n", "class", "slope"], &rows)
    }

    /// Heatmap of one row's classes with the predicted curves overlaid.
    pub fn to_svg(&self, i: usize) -> String {
        let n = self.y.points;
        let r = &self.rows[i];
        let vals: Vec<f64> = r
            .classes
            .iter()
            .map(|c| match c {
                DecayClass::Smooth => 0.0,
                DecayClass::Inconclusive => 0.5,
                DecayClass::Singular => 1.0,
            })
            .collect();
        let (lo, hi) = (self.y.value(0), self.y.value(n - 1));
        svg_heatmap(n, n, &vals, [lo, hi, lo, hi], &r.predicted)
    }
}

// ---------------------------------------------------------------- exponent fit

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowFit {
    /// Median of the per-column slopes.
    pub exponent: f64,
    pub column_slopes: Vec<f64>,
    /// Columns dropped because `|U|` underflowed on the fit window.
    pub excluded: usize,
    pub rows_used: usize,
}

/// Relative size below which `|U|` counts as underflow in [`shadow_exponent_fit`].
pub const UNDERFLOW: f64 = 1e-14;

/// Slope of `log|U|` against `log x` over `x ∈ [x_min, 30x_min]` for every
/// column with `y_n > beta`, aggregated by the median.
pub fn shadow_exponent_fit(field: &Field2D, beta: f64) -> Result<ShadowFit> {
    if !(beta > 0.0) {
        return Err(Error::Domain("beta must be positive".into()));
    }
    let x_min = field.x[0];
    if !(x_min > 0.0 && x_min <= 1e-2) {
        return Err(Error::Precondition(format!("smallest x row {x_min} must lie in (0, 0.01]")));
    }
    let rows: Vec<usize> = (0..field.x.len()).filter(|&i| field.x[i] <= 30.0 * x_min * (1.0 + 1e-12)).collect();
    if rows.len() < 2 {
        return Err(Error::Config("fewer than two x rows inside the fit window".into()));
    }
    let n = field.y.points;
    let cols: Vec<usize> = (0..n * n).filter(|c| field.y.value(c % n) > beta).collect();
    if cols.is_empty() {
        return Err(Error::Precondition(format!("no cells with y_n > {beta}")));
    }
    let scale: Vec<f64> = rows.iter().map(|&i| field.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max)).collect();
    let xs: Vec<f64> = rows.iter().map(|&i| field.x[i].ln()).collect();
    let mut slopes = vec![];
    let mut excluded = 0;
    for c in cols {
        let vals: Vec<f64> = rows.iter().map(|&i| field.row(i)[c].norm()).collect();
        if vals.iter().zip(&scale).any(|(v, s)| !(v.is_finite() && *v > UNDERFLOW * s)) {
            excluded += 1;
            continue;
        }
        let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        slopes.push(fit_line(&xs, &ys).0);
    }
    if slopes.is_empty() {
        return Err(Error::Range("every column underflowed".into()));
    }
    let mut sorted = slopes.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    let exponent = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    Ok(ShadowFit { exponent, column_slopes: slopes, excluded, rows_used: rows.len() })
}

// ---------------------------------------------------------------- default run

/// Grid and rows of the default end-to-end run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub theta: ThetaGrid,
    pub epsilon: f64,
    pub x_rows: Vec<f64>,
}

impl Default for RunSpec {
    fn default() -> Self {
        let theta = ThetaGrid { points: 256, theta_max: 32.0 * PI };
        // eight log-spaced rows on [0.005, 0.15] plus two interior rows
        let mut x_rows: Vec<f64> = (0..8).map(|k| 0.005 * 30f64.powf(k as f64 / 7.0)).collect();
        x_rows.extend([0.25, 0.5]);
        RunSpec { theta, epsilon: default_epsilon(&theta), x_rows }
    }
}

impl RunSpec {
    pub fn run(&self, params: &ModelParams) -> Result<Field2D> {
        synthesize_field(params, &self.theta, self.epsilon, &YGrid::dual(&self.theta), &self.x_rows)
    }
}
