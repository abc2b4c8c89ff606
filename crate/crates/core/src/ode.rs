//! Embedded Dormand–Prince 5(4) stepping for small complex systems, and a
//! fixed-step classical RK4 for real systems.

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Tolerance { rtol: tol, atol: tol * 1e-3, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `(x0, y0)` through each of `targets`
/// (monotone, all on the same side of `x0`), landing exactly on every target.
pub fn dopri5<const N: usize, F>(
    f: F,
    x0: f64,
    y0: [C64; N],
    targets: &[f64],
    tol: Tolerance,
    h_init: f64,
) -> Result<(Vec<[C64; N]>, Stats)>
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let mut out = Vec::with_capacity(targets.len());
    let mut stats = Stats::default();
    let mut x = x0;
    let mut y = y0;
    let dir = match targets.last() {
        Some(&t) if t < x0 => -1.0,
        _ => 1.0,
    };
    let mut h = h_init.abs().max(1e-12) * dir;
    let mut k1 = f(x, &y);
    for &target in targets {
        if (target - x) * dir < 0.0 {
            return Err(Error::Integrator("targets are not monotone".into()));
        }
        while (target - x) * dir > 0.0 {
            if stats.accepted + stats.rejected > tol.max_steps {
                return Err(Error::Integrator(format!("step budget exhausted near x = {x}")));
            }
            let mut last = false;
            if (x + h - target) * dir >= 0.0 {
                h = target - x;
                last = true;
            }
            let k2 = f(x + C2 * h, &comb(&y, h, &[(A21, &k1)]));
            let k3 = f(x + C3 * h, &comb(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * h, &comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(x + C5 * h, &comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(x + h, &comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let ynew = comb(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(x + h, &ynew);
            let mut err: f64 = 0.0;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sc = tol.atol + tol.rtol * y[i].norm().max(ynew[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Integrator(format!("non-finite state near x = {x}")));
            }
            if err <= 1.0 {
                stats.accepted += 1;
                x = if last { target } else { x + h };
                y = ynew;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h *= fac;
                } else {
                    // keep the pre-clamp size for the next segment
                    h = h.abs().max(1e-300) * dir * fac.max(1.0);
                }
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h.abs() < 1e-14 * x.abs().max(1e-300) {
                    return Err(Error::Integrator(format!("step size underflow near x = {x}")));
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

/// The fifth-order Dormand–Prince solution with `steps` equal steps from `x0` to `x1`.
/// Used for refinement studies of the adaptive integrator.
pub fn dopri5_fixed<const N: usize, F>(f: F, x0: f64, y0: [C64; N], x1: f64, steps: usize) -> [C64; N]
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let h = (x1 - x0) / steps as f64;
    let mut y = y0;
    for k in 0..steps {
        let x = x0 + k as f64 * h;
        let k1 = f(x, &y);
        let k2 = f(x + C2 * h, &comb(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        y = comb(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    }
    y
}

/// One classical RK4 step for a real system.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let mut tmp = *y;
    for i in 0..N {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = f(t + 0.5 * dt, &tmp);
    for i in 0..N {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(t + 0.5 * dt, &tmp);
    for i in 0..N {
        tmp[i] = y[i] + dt * k3[i];
    }
    let k4 = f(t + dt, &tmp);
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_x: f64, y: &[C64; 2]| [y[1], -y[0]];
        let xs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let (ys, _) = dopri5(f, 0.0, [C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &xs, Tolerance::new(1e-11), 0.1).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y[0].re - x.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_direction() {
        let f = |_x: f64, y: &[C64; 1]| [y[0]];
        let (ys, _) = dopri5(f, 1.0, [C64::new(1.0, 0.0)], &[0.5, 0.0], Tolerance::new(1e-12), 0.1).unwrap();
        assert!((ys[1][0].re - (-1f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn rk4_order() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let run = |dt: f64| {
            let mut y = [1.0];
            let n = (1.0 / dt).round() as usize;
            for k in 0..n {
                y = rk4_step(&f, k as f64 * dt, &y, dt);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let r = run(0.01) / run(0.005);
        assert!(r > 14.0 && r < 18.0);
    }
}
