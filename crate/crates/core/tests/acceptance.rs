//! Acceptance suite: one PASS/FAIL line per criterion with the measured numbers.
//!
//! Criteria recorded as unattained still print FAIL; any other failure makes
//! the target exit non-zero.

mod common;

use common::{airy_oracle, ls_slope};
use glance::eikonal::*;
use glance::frobenius::solve_spectral_on;
use glance::model::{Covector, Mode, ModelParams};
use glance::normal_ops::{bessel_layer_solve, mellin_solve, mellin_solve_contour, HalfLineFunction};
use glance::rays::*;
use glance::resolvent_probe::{resolvent_norm_scan, GridSpec};
use glance::specfun::hankel_pair;
use glance::synthesis::*;
use glance::C64;
use std::f64::consts::PI;
use std::time::Instant;

/// Criteria known to be out of reach at this resolution.
const UNATTAINED: [usize; 1] = [10];

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn airy_equivalence() -> (bool, String) {
    let p = ModelParams::new(2, 0.84, Mode::Friedlander).unwrap();
    let xs: Vec<f64> = (0..61).map(|i| 0.01 + 2.99 * i as f64 / 60.0).collect();
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let u = ((k as f64 + 0.5) * 0.618_033_988_749_895).fract();
        let v = ((k as f64 + 0.5) * 0.754_877_666_246_693).fract();
        let tn = (1.0 + 19.0 * u) * if k % 3 == 0 { -1.0 } else { 1.0 };
        let tp = tn.abs() * (2.0 * v - 1.0);
        let sol = match solve_spectral_on(&p, &Covector::planar(tp, tn).unwrap(), &xs, 1e-10) {
            Ok(s) => s,
            Err(e) => return (false, format!("theta=({tp},{tn}): {e}")),
        };
        let s = tn.abs().powf(2.0 / 3.0);
        let z0 = tp * tp / (s * s) - s;
        let oracle: Vec<f64> = xs.iter().map(|x| airy_oracle(z0 - x * s) / airy_oracle(z0)).collect();
        let m = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let e = sol.values.iter().zip(&oracle).fold(0.0f64, |a, (u, o)| a.max((u - o).norm()));
        worst = worst.max(e / m);
    }
    let secs = t0.elapsed().as_secs_f64();
    (worst <= 1e-6 && secs < 10.0, format!("max rel err {worst:.2e}, {secs:.2} s"))
}

fn eikonal_identity() -> (bool, String) {
    let mut rng = Rng(0x9e37_79b9_7f4a_7c15);
    let (plus, minus) = (LimitPhase { sign: 1.0 }, LimitPhase { sign: -1.0 });
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let z = 10.0 * rng.next();
        worst = worst.max(eikonal_residual(&plus, z).abs()).max(eikonal_residual(&minus, z).abs());
    }
    (worst <= 1e-12, format!("max |residual| {worst:.2e} over 1000 z in [0, 10)"))
}

fn transport_tails() -> (bool, String) {
    let s = sigma_grid(SIGMA_MIN, SIGMA_MAX, SIGMA_POINTS);
    let bump = log_bump(&s, 1.0, 0.5);
    let terms = transport_hierarchy(3, &s, &bump, &TransportParams::from_model(&ModelParams::default())).unwrap();
    let mut ok = true;
    let mut parts = vec![];
    for t in &terms {
        let e = tail_exponent(t, SIGMA_MAX / 10.0, SIGMA_MAX).unwrap();
        let want = -0.5 - t.order as f64;
        ok &= ((e - want) / want).abs() <= 0.01;
        parts.push(format!("j={} {e:.4}", t.order));
    }
    (ok, parts.join(", "))
}

fn wkb_order() -> (bool, String) {
    let hs = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let p = ModelParams::default();
    let mut ok = true;
    let mut parts = vec![];
    for j in [1, 2] {
        let r = wkb_order_check(&p, 0.0, j, &hs, (1.0, 4.0)).unwrap();
        ok &= r.slope >= j as f64 - 0.2 && !r.inconclusive;
        parts.push(format!("J={j} slope {:.3}", r.slope));
    }
    (ok, parts.join(", "))
}

fn mellin() -> (bool, String) {
    let mut rng = Rng(0x2545_f491_4f6c_dd1d);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (center, width) = (-3.0 + 6.0 * rng.next(), 0.3 + 1.2 * rng.next());
        let amp = C64::new(rng.next() - 0.5, rng.next() - 0.5);
        let alpha = 0.2 + 3.8 * rng.next();
        let fs = HalfLineFunction::sample((-14f64).exp(), 14f64.exp(), 4096, |x| {
            let d = (x.ln() - center) / width;
            amp * (-0.5 * d * d).exp()
        })
        .unwrap();
        let a = mellin_solve(&fs, alpha).unwrap();
        let b = mellin_solve_contour(&fs, alpha).unwrap();
        let scale = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        let diff = a.values.iter().zip(&b.values).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        worst = worst.max(diff / scale);
    }
    let alpha = 0.64f64;
    let fs = HalfLineFunction::sample((-14f64).exp(), 14f64.exp(), 4096, |x| {
        let d = (x.ln() - 0.3) / 0.5;
        c((-0.5 * d * d).exp())
    })
    .unwrap();
    let u = mellin_solve(&fs, alpha).unwrap();
    let r = alpha.sqrt();
    let (e0, e1) = (u.tail_fit(true, 1.0), u.tail_fit(false, 1.0));
    let ok = worst <= 1e-10 && (e0 - r).abs() <= 0.02 * r && (e1 + r).abs() <= 0.02 * r;
    (ok, format!("dual-path diff {worst:.2e}, exponents {e0:.4} / {e1:.4} (want ±{r:.4})"))
}

fn bessel_layer() -> (bool, String) {
    let p = ModelParams::default();
    let a2 = p.alpha().powi(2);
    let fs = HalfLineFunction::sample(1e-3, 1e-3 * 2f64.powi(20), 8001, |t| c((-(t - 5.0) * (t - 5.0) * 2.0).exp())).unwrap();
    let u = bessel_layer_solve(&fs, &p).unwrap();
    let h = fs.log_step().unwrap();
    let v = &u.values;
    let mut residual = 0.0f64;
    for i in 3..v.len() - 3 {
        let t = u.grid[i];
        if t > 40.0 {
            break;
        }
        let d2 = ((v[i + 3] + v[i - 3]) * 2.0 - (v[i + 2] + v[i - 2]) * 27.0 + (v[i + 1] + v[i - 1]) * 270.0 - v[i] * 490.0)
            / (180.0 * h * h);
        residual = residual.max((d2 + v[i] * (t * t - a2) - fs.values[i]).norm());
    }
    let mut wr = 0.0f64;
    for &order in &[0.0, 0.4, 1.0, 2.3, 5.0] {
        for &t in &[2e-6, 1e-3, 0.7, 3.0, 50.0, 900.0, 9000.0] {
            let hv = hankel_pair(order, t).unwrap();
            let w = hv.h1 * hv.h2_prime - hv.h1_prime * hv.h2;
            let expect = C64::new(0.0, -4.0 / (PI * t));
            wr = wr.max((w - expect).norm() / expect.norm());
        }
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        u.grid.iter().zip(v).filter(|(t, _)| **t >= 100.0 && **t <= 1000.0).map(|(t, v)| (t.ln(), v.norm().ln())).unzip();
    let slope = ls_slope(&lx, &ly);
    let ok = residual <= 1e-8 && wr <= 1e-10 && (slope + 0.5).abs() <= 0.01;
    (ok, format!("residual {residual:.2e}, Wronskian rel {wr:.2e}, envelope slope {slope:.4}"))
}

fn diffractive() -> (bool, String) {
    let mut rng = Rng(0x1234_5678_9abc_def1);
    let mut exact = true;
    for _ in 0..1000 {
        let (x, xi, tp, tn) = (5.0 * rng.next(), 6.0 * rng.next() - 3.0, 4.0 * rng.next() - 2.0, 6.0 * rng.next() - 3.0);
        let (hx, h2x) = diffractive_check(&PhaseSpacePoint::at_origin(x, xi, vec![tp], tn));
        exact &= hx == -2.0 * xi && h2x == 2.0 * tn * tn;
    }
    let mut worst = 0.0f64;
    for tn in [1.0, 1.7, -0.6] {
        let tr = flow(&PhaseSpacePoint::at_origin(0.0, 0.0, vec![tn], tn), 3.0, 0.01).unwrap();
        for (s, p) in tr.times.iter().zip(&tr.points) {
            worst = worst.max((p.x - tn * tn * s * s).abs() / (1.0 + s * s));
        }
    }
    (exact && worst <= 1e-10, format!("identities exact on 1000 points: {exact}, glancing x(s) err {worst:.2e}"))
}

fn nontrapping() -> (bool, String) {
    let mut ok = true;
    let mut parts = vec![];
    for sign in [Sign::Plus, Sign::Minus] {
        let p = Profile::new(sign);
        let starts = characteristic_starts(&p, 64, 10.0);
        match nontrapping_escape(&p, &starts, 10.0, 100.0) {
            Ok(r) => {
                let esc = r.times.iter().filter(|t| **t < 100.0).count();
                ok &= esc == 64 && r.max_energy_drift <= 1e-8;
                parts.push(format!("{sign:?} {esc}/64 escape, drift {:.1e}", r.max_energy_drift));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{sign:?}: {e}"));
            }
        }
    }
    (ok, parts.join(", "))
}

fn resolvent_scaling() -> (bool, String) {
    let hs = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let grid = GridSpec::default();
    let t0 = Instant::now();
    let r = resolvent_norm_scan(Sign::Plus, &hs, 0.5, &grid).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let ok = (-1.3..=-0.8).contains(&r.exponent) && secs < 60.0 && grid.points == 4096;
    (ok, format!("exponent {:.3}, grid {}, {secs:.2} s", r.exponent, grid.points))
}

fn shadow_conormality() -> (bool, String) {
    let params = ModelParams::new(2, 0.84, Mode::Ads).unwrap();
    let field = RunSpec::default().run(&params).unwrap();
    let fit = shadow_exponent_fit(&field, 1.0).unwrap();
    let report = wavefront_scan(&field, &WindowSpec::default(), &BandSpec::default()).unwrap();
    let fit_ok = (fit.exponent - params.s_plus).abs() <= 0.1;
    let shadow_ok = report.shadow_violations == 0;
    let max_d = report.max_match_distance.unwrap_or(0.0);
    let match_ok = max_d <= 2.0;
    let detail = format!(
        "s_plus fit {:.4} ({}), deep-shadow singular cells {} ({}), max distance to Sigma {:.1} cells ({})",
        fit.exponent,
        if fit_ok { "ok" } else { "miss" },
        report.shadow_violations,
        if shadow_ok { "ok" } else { "miss" },
        max_d,
        if match_ok { "ok" } else { "miss" },
    );
    (fit_ok && shadow_ok && match_ok, detail)
}

fn detector_calibration() -> (bool, String) {
    let small = |n: usize| ThetaGrid { points: n, theta_max: n as f64 / 8.0 * PI };
    let xs: Vec<f64> = (0..6).map(|k| 0.004 * 30f64.powf(k as f64 / 5.0)).collect();
    let f = Field2D::from_fn(&xs, small(32), |x, a, b| C64::new(x.powf(1.4) * (1.0 + 0.5 * (a + b).cos()), 0.3 * x.powf(1.4)))
        .unwrap();
    let fit = shadow_exponent_fit(&f, 1.0).unwrap().exponent;

    let th = small(128);
    let cline = 0.3 + 0.5 * PI / th.theta_max;
    let kink = Field2D::from_fn(&[0.1], th, |_, a, b| c((-(a * a + b * b) / 2.0).exp() * (b - cline).abs().sqrt())).unwrap();
    let r = wavefront_scan(&kink, &WindowSpec::default(), &BandSpec::default()).unwrap();
    let pts = r.singular_points(0);
    let off = pts.iter().map(|p| (p.1 - cline).abs() / kink.y.step).fold(0.0, f64::max);

    let g = Field2D::from_fn(&[0.1], th, |_, a, b| c((-(a * a + b * b) / 0.18).exp())).unwrap();
    let gauss = wavefront_scan(&g, &WindowSpec::default(), &BandSpec::default()).unwrap().singular_cells;

    let ok = (fit - 1.4).abs() <= 0.02 && !pts.is_empty() && off <= 1.0 && gauss == 0;
    (ok, format!("power fit {fit:.4}, kink cells {} within {off:.2} cells, Gaussian singular cells {gauss}", pts.len()))
}

fn main() {
    let criteria: [(&str, fn() -> (bool, String)); 11] = [
        ("Airy oracle equivalence", airy_equivalence),
        ("eikonal identity", eikonal_identity),
        ("transport tail law", transport_tails),
        ("WKB order", wkb_order),
        ("Mellin solver", mellin),
        ("Bessel layer", bessel_layer),
        ("diffractive identities", diffractive),
        ("nontrapping", nontrapping),
        ("resolvent scaling", resolvent_scaling),
        ("shadow and conormality", shadow_conormality),
        ("detector calibration", detector_calibration),
    ];
    let mut unexpected = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let (ok, detail) = check();
        println!("{} {id:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok && !UNATTAINED.contains(&id) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criterion(s) failed unexpectedly");
        std::process::exit(1);
    }
}
