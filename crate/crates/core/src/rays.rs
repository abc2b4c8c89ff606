//! Bicharacteristic flows: the boundary symbol `l̂`, its diffractive
//! identities, and escape of rays for the extended potentials `ṽ±`.

use crate::error::{Error, Result};
use crate::io::csv_string;
use crate::ode::rk4_step;
use rayon::prelude::*;

/// Symbol values with `|l̂| ≤ ON_SHELL` count as on the characteristic set.
pub const ON_SHELL: f64 = 1e-10;
/// Per-step tolerance of the step-doubling check.
pub const STEP_TOL: f64 = 1e-10;
const MAX_SPLIT: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: f64,
    /// `(y', y_n)`, length `n`.
    pub y: Vec<f64>,
    pub xi: f64,
    pub theta_prime: Vec<f64>,
    pub theta_n: f64,
}

impl PhaseSpacePoint {
    /// Point over `y = 0` with `n = θ'.len() + 1`.
    pub fn at_origin(x: f64, xi: f64, theta_prime: Vec<f64>, theta_n: f64) -> Self {
        let y = vec![0.0; theta_prime.len() + 1];
        PhaseSpacePoint { x, y, xi, theta_prime, theta_n }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.xi.is_finite()
            && self.theta_n.is_finite()
            && self.y.iter().chain(&self.theta_prime).all(|v| v.is_finite())
    }

    pub fn on_characteristic(&self) -> bool {
        symbol_l(self).abs() <= ON_SHELL
    }
}

/// `l̂ = −ξ² + (1+x)θn² − |θ'|²`.
pub fn symbol_l(p: &PhaseSpacePoint) -> f64 {
    let tp2: f64 = p.theta_prime.iter().map(|t| t * t).sum();
    -p.xi * p.xi + (1.0 + p.x) * p.theta_n * p.theta_n - tp2
}

/// `(H x, H² x)` along the Hamilton field of `l̂`: `(−2ξ, 2θn²)`.
pub fn diffractive_check(p: &PhaseSpacePoint) -> (f64, f64) {
    (-2.0 * p.xi, 2.0 * p.theta_n * p.theta_n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhaseSpacePoint>,
    pub symbol: Vec<f64>,
}

impl Trajectory {
    pub fn max_drift(&self) -> f64 {
        let s0 = self.symbol[0];
        self.symbol.iter().map(|s| (s - s0).abs()).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &PhaseSpacePoint {
        self.points.last().expect("trajectories are never empty")
    }

    /// Columns `t, x, xi, energy` with the symbol as the energy.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> =
            (0..self.times.len()).map(|i| vec![self.times[i], self.points[i].x, self.points[i].xi, self.symbol[i]]).collect();
        csv_string(&["t", "x", "xi", "energy"], &rows)
    }
}

/// RK4 step checked against two half steps; splits the step when they disagree.
fn checked_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], dt: f64, depth: u32) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let full = rk4_step(f, t, y, dt);
    let mid = rk4_step(f, t, y, 0.5 * dt);
    let two = rk4_step(f, t + 0.5 * dt, &mid, 0.5 * dt);
    let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = full.iter().zip(&two).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if !err.is_finite() {
        return Err(Error::Integrator("non-finite state".into()));
    }
    if err <= STEP_TOL * scale {
        return Ok(two);
    }
    if depth >= MAX_SPLIT {
        return Err(Error::Integrator(format!("step rejected {MAX_SPLIT} times at t = {t}")));
    }
    let half = checked_step(f, t, y, 0.5 * dt, depth + 1)?;
    checked_step(f, t + 0.5 * dt, &half, 0.5 * dt, depth + 1)
}

fn check_steps(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !t_end.is_finite() || t_end == 0.0 {
        return Err(Error::Config("need dt > 0 and a finite nonzero horizon".into()));
    }
    if dt > t_end.abs() / 100.0 * (1.0 + 1e-12) {
        return Err(Error::Config(format!("dt = {dt} exceeds |T|/100")));
    }
    Ok((t_end.abs() / dt).round() as usize)
}

/// Hamilton flow of `l̂` from `p0` for time `t_end` (negative runs backwards),
/// sampled every `dt`.
pub fn flow(p0: &PhaseSpacePoint, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !p0.is_finite() {
        return Err(Error::Domain("non-finite phase-space point".into()));
    }
    if p0.x < 0.0 {
        return Err(Error::Domain("x must be nonnegative".into()));
    }
    let steps = check_steps(t_end, dt)?;
    let h = t_end / steps as f64;
    let tn = p0.theta_n;
    let tn2 = tn * tn;
    // state (x, ξ, y_n); θ is constant and y' is linear in s
    let f = |_: f64, s: &[f64; 3]| [-2.0 * s[1], -tn2, 2.0 * (1.0 + s[0]) * tn];
    let mut state = [p0.x, p0.xi, p0.y[p0.y.len() - 1]];
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut symbol = Vec::with_capacity(steps + 1);
    let point_at = |s: f64, st: &[f64; 3]| {
        let mut y: Vec<f64> = p0.y[..p0.y.len() - 1].iter().zip(&p0.theta_prime).map(|(y, t)| y - 2.0 * t * s).collect();
        y.push(st[2]);
        PhaseSpacePoint { x: st[0], y, xi: st[1], theta_prime: p0.theta_prime.clone(), theta_n: tn }
    };
    for k in 0..=steps {
        let s = k as f64 * h;
        if k > 0 {
            state = checked_step(&f, s - h, &state, h, 0)?;
        }
        let p = point_at(s, &state);
        symbol.push(symbol_l(&p));
        points.push(p);
        times.push(s);
    }
    Ok(Trajectory { times, points, symbol })
}

// ---------------------------------------------------------------- extended potentials

/// Which end of the glancing region the global operator extends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            o => Err(Error::Config(format!("unknown sign '{o}'"))),
        }
    }
}

/// Quintic Hermite piece on `[a, b]` in `t = (σ − a)/(b − a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Quintic {
    a: f64,
    len: f64,
    c: [f64; 6],
}

impl Quintic {
    /// Matches value, slope and curvature at both ends.
    fn new(a: f64, b: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        let l = b - a;
        let (p0, m0, c0) = (left[0], left[1] * l, left[2] * l * l);
        let (p1, m1, c1) = (right[0], right[1] * l, right[2] * l * l);
        let c = [
            p0,
            m0,
            0.5 * c0,
            -10.0 * p0 - 6.0 * m0 - 1.5 * c0 + 10.0 * p1 - 4.0 * m1 + 0.5 * c1,
            15.0 * p0 + 8.0 * m0 + 1.5 * c0 - 15.0 * p1 + 7.0 * m1 - c1,
            -6.0 * p0 - 3.0 * m0 - 0.5 * c0 + 6.0 * p1 - 3.0 * m1 + 0.5 * c1,
        ];
        Quintic { a, len: l, c }
    }

    fn eval(&self, s: f64) -> [f64; 3] {
        let t = (s - self.a) / self.len;
        let c = &self.c;
        let v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let d = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let dd = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        [v, d / self.len, dd / (self.len * self.len)]
    }
}

/// Plateau height of both extensions near `σ = 0`.
pub const PLATEAU: f64 = 1.0;
/// Spectral offset `4/9`.
pub const OFFSET: f64 = 4.0 / 9.0;
/// Slope of `ṽ⁺` where it crosses the offset at `σ = 1/2`.
const PLUS_CROSSING_SLOPE: f64 = -3.0;

/// Extended potential `ṽ±` on the whole line: a plateau for `σ ≤ 1/4`,
/// quintic C² transitions, and `∓(4/9)σ^{−2/3}` for `σ ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub sign: Sign,
    pieces: Vec<Quintic>,
}

impl Profile {
    pub fn new(sign: Sign) -> Self {
        let plateau = [PLATEAU, 0.0, 0.0];
        let outer = Self::outer_at(sign, 1.0);
        let pieces = match sign {
            Sign::Plus => {
                let cross = [OFFSET, PLUS_CROSSING_SLOPE, 0.0];
                vec![Quintic::new(0.25, 0.5, plateau, cross), Quintic::new(0.5, 1.0, cross, outer)]
            }
            Sign::Minus => vec![Quintic::new(0.25, 1.0, plateau, outer)],
        };
        Profile { sign, pieces }
    }

    /// `v± = ∓(4/9)σ^{−2/3}` with two derivatives.
    fn outer_at(sign: Sign, s: f64) -> [f64; 3] {
        let k = match sign {
            Sign::Plus => -OFFSET,
            Sign::Minus => OFFSET,
        };
        let p = s.powf(-2.0 / 3.0);
        [k * p, -2.0 / 3.0 * k * p / s, 10.0 / 9.0 * k * p / (s * s)]
    }

    /// `(ṽ, ṽ', ṽ'')` at `σ`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        if s <= 0.25 {
            return [PLATEAU, 0.0, 0.0];
        }
        if s >= 1.0 {
            return Self::outer_at(self.sign, s);
        }
        let piece = self.pieces.iter().rev().find(|p| s >= p.a).unwrap_or(&self.pieces[0]);
        piece.eval(s)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s)[0]
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.eval(s)[1]
    }

    /// `ξ² + ṽ(σ) − 4/9`.
    pub fn energy(&self, s: f64, xi: f64) -> f64 {
        xi * xi + self.value(s) - OFFSET
    }

    /// Leftmost point of the characteristic set, where `ṽ = 4/9`.
    pub fn turning_point(&self) -> f64 {
        let (mut lo, mut hi) = (0.25, 1.0 + 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) > OFFSET {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Checks the defining shape constraints on a fine sample:
    /// `+`: above 4/9 left of 1/2, below it right of 1/2, nonincreasing on `(0, 3/4)`;
    /// `−`: above 4/9 on `σ < 1`, nonincreasing on `(0, 1)`.
    pub fn verify(&self) -> Result<()> {
        let m = 4000;
        let (cross, mono_end) = match self.sign {
            Sign::Plus => (0.5, 0.75),
            Sign::Minus => (1.0, 1.0),
        };
        for k in 1..m {
            let s = 2.0 * k as f64 / m as f64;
            let [v, d, _] = self.eval(s);
            if s < cross && !(v > OFFSET) {
                return Err(Error::Property(format!("profile not above 4/9 at sigma = {s}")));
            }
            if s > cross && !(v < OFFSET) {
                return Err(Error::Property(format!("profile not below 4/9 at sigma = {s}")));
            }
            if s > 0.25 && s < mono_end && !(d < 0.0) {
                return Err(Error::Property(format!("profile not decreasing at sigma = {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileStart {
    pub sigma: f64,
    pub xi: f64,
}

/// `count` starts on the characteristic set `ξ² = 4/9 − ṽ(σ)`, half moving
/// left and half moving right, clustered near the turning point.
pub fn characteristic_starts(profile: &Profile, count: usize, r: f64) -> Vec<ProfileStart> {
    let s0 = profile.turning_point();
    let m = count / 2;
    let span = 0.95 * r - s0;
    let mut out = Vec::with_capacity(count);
    for k in 0..count - m {
        let s = s0 + span * (k as f64 / m.max(1) as f64).powi(2);
        out.push(ProfileStart { sigma: s, xi: (OFFSET - profile.value(s)).max(0.0).sqrt() });
    }
    for k in 1..=m {
        let s = s0 + span * (k as f64 / m as f64).powi(2);
        out.push(ProfileStart { sigma: s, xi: -(OFFSET - profile.value(s)).max(0.0).sqrt() });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTrajectory {
    pub times: Vec<f64>,
    pub sigma: Vec<f64>,
    pub xi: Vec<f64>,
    pub energy: Vec<f64>,
}

impl ProfileTrajectory {
    pub fn max_drift(&self) -> f64 {
        self.energy.iter().map(|e| (e - self.energy[0]).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> =
            (0..self.times.len()).map(|i| vec![self.times[i], self.sigma[i], self.xi[i], self.energy[i]]).collect();
        csv_string(&["t", "sigma", "xi", "energy"], &rows)
    }
}

fn profile_field(profile: &Profile) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    move |_, s| [2.0 * s[1], -profile.derivative(s[0])]
}

/// Flow of `ξ² + ṽ(σ) − 4/9` sampled every `dt` up to `t_end`.
pub fn profile_flow(profile: &Profile, start: ProfileStart, t_end: f64, dt: f64) -> Result<ProfileTrajectory> {
    if !(start.sigma.is_finite() && start.xi.is_finite()) {
        return Err(Error::Domain("non-finite start".into()));
    }
    let steps = check_steps(t_end, dt)?;
    let h = t_end / steps as f64;
    let f = profile_field(profile);
    let mut st = [start.sigma, start.xi];
    let mut tr = ProfileTrajectory { times: vec![], sigma: vec![], xi: vec![], energy: vec![] };
    for k in 0..=steps {
        if k > 0 {
            st = checked_step(&f, (k - 1) as f64 * h, &st, h, 0)?;
        }
        tr.times.push(k as f64 * h);
        tr.sigma.push(st[0]);
        tr.xi.push(st[1]);
        tr.energy.push(profile.energy(st[0], st[1]));
    }
    Ok(tr)
}

/// Escape time from `|σ| ≤ r`, or `None` if the ray is still inside at `t_max`;
/// also returns the largest energy drift seen.
pub fn escape_time(profile: &Profile, start: ProfileStart, r: f64, t_max: f64, dt: f64) -> Result<(Option<f64>, f64)> {
    if !(dt > 0.0) || !(t_max > 0.0) || !(r > 0.0) {
        return Err(Error::Config("need dt, t_max and r positive".into()));
    }
    if start.sigma.abs() > r {
        return Ok((Some(0.0), 0.0));
    }
    let f = profile_field(profile);
    let e0 = profile.energy(start.sigma, start.xi);
    let mut drift = 0.0f64;
    let mut st = [start.sigma, start.xi];
    let mut t = 0.0;
    while t < t_max {
        let next = checked_step(&f, t, &st, dt, 0)?;
        drift = drift.max((profile.energy(next[0], next[1]) - e0).abs());
        if next[0].abs() > r {
            // cubic Hermite in time for σ, using dσ/dt = 2ξ, then bisection
            let target = r * next[0].signum();
            let (p0, p1, m0, m1) = (st[0], next[0], 2.0 * st[1] * dt, 2.0 * next[1] * dt);
            let herm = |u: f64| {
                let u2 = u * u;
                let u3 = u2 * u;
                (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (herm(mid) - target) * (p0 - target) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok((Some(t + 0.5 * (lo + hi) * dt), drift));
        }
        st = next;
        t += dt;
    }
    Ok((None, drift))
}

/// Default step of [`nontrapping_escape`].
pub const ESCAPE_DT: f64 = 1e-3;
/// Largest accepted energy drift along an escape run.
pub const ENERGY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeReport {
    pub times: Vec<f64>,
    pub max_energy_drift: f64,
}

/// Flows every start until it leaves `|σ| ≤ r`. Any ray still inside at
/// `t_max`, or any energy drift above [`ENERGY_TOL`], is a property violation.
pub fn nontrapping_escape(profile: &Profile, starts: &[ProfileStart], r: f64, t_max: f64) -> Result<EscapeReport> {
    profile.verify()?;
    let runs: Vec<(Option<f64>, f64)> =
        starts.par_iter().map(|s| escape_time(profile, *s, r, t_max, ESCAPE_DT)).collect::<Result<_>>()?;
    let trapped: Vec<usize> = runs.iter().enumerate().filter(|(_, r)| r.0.is_none()).map(|(i, _)| i).collect();
    if !trapped.is_empty() {
        return Err(Error::Property(format!("{} of {} rays stay in |sigma| <= {r} up to t = {t_max}: {trapped:?}", trapped.len(), starts.len())));
    }
    let max_energy_drift = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    if max_energy_drift > ENERGY_TOL {
        return Err(Error::Property(format!("energy drift {max_energy_drift:e} exceeds {ENERGY_TOL:e}")));
    }
    Ok(EscapeReport { times: runs.iter().map(|r| r.0.unwrap()).collect(), max_energy_drift })
}
