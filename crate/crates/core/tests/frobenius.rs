mod common;

use common::{airy_maclaurin, airy_oracle, ls_slope};
use glance::frobenius::*;
use glance::model::*;
use glance::ode::dopri5_fixed;
use glance::{Error, C64};
use proptest::prelude::*;

fn fried() -> ModelParams {
    ModelParams::new(2, 0.84, Mode::Friedlander).unwrap()
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Ai(ζ)/Ai(ζ₀) from the quadrature oracle.
fn airy_ratio(x: f64, tp: f64, tn: f64) -> f64 {
    let s = tn.abs().powf(2.0 / 3.0);
    let z0 = tp * tp / (s * s) - s;
    airy_oracle(z0 - x * s) / airy_oracle(z0)
}

fn cone_samples() -> Vec<(f64, f64)> {
    // deterministic scatter in |θn| ≥ |θ'|, 1 ≤ |θn| ≤ 20
    (0..20)
        .map(|k| {
            let u = ((k as f64 + 0.5) * 0.618_033_988_749_895).fract();
            let v = ((k as f64 + 0.5) * 0.754_877_666_246_693).fract();
            let tn = (1.0 + 19.0 * u) * if k % 3 == 0 { -1.0 } else { 1.0 };
            (tn.abs() * (2.0 * v - 1.0), tn)
        })
        .collect()
}

#[test]
fn friedlander_matches_airy_oracle_on_cone_samples() {
    let p = fried();
    let xs = uniform(0.01, 3.0, 61);
    let t0 = std::time::Instant::now();
    for (tp, tn) in cone_samples() {
        let sol = solve_spectral_on(&p, &Covector::planar(tp, tn).unwrap(), &xs, 1e-10).unwrap();
        let oracle: Vec<f64> = xs.iter().map(|&x| airy_ratio(x, tp, tn)).collect();
        let m = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let e = sol.values.iter().zip(&oracle).fold(0.0f64, |a, (u, o)| a.max((u - o).norm()));
        assert!(e / m <= 1e-6, "theta=({tp},{tn}) rel {}", e / m);
    }
    assert!(t0.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn friedlander_scaled_example() {
    let p = fried();
    let th = Covector::planar(5.0, 10.0).unwrap();
    let sol = solve_spectral(&p, &th, 3.0, 1e-10).unwrap();
    let mut worst = 0.0f64;
    let mut m = 0.0f64;
    for (x, u) in sol.x_grid.iter().zip(&sol.values) {
        if *x >= 0.01 {
            let o = airy_ratio(*x, 5.0, 10.0);
            worst = worst.max((u - o).norm());
            m = m.max(o.abs());
        }
    }
    assert!(worst / m <= 1e-6, "{}", worst / m);
}

#[test]
fn closed_form_is_one_at_the_boundary() {
    for (tp, tn) in [(0.0, 8.0), (3.0, -4.0), (10.0, 10.0), (1.0, 0.5)] {
        let v = friedlander_closed_form(0.0, &Covector::planar(tp, tn).unwrap()).unwrap();
        assert!((v - 1.0).norm() < 1e-15);
    }
}

#[test]
fn closed_form_example_against_maclaurin_series() {
    let th = Covector::planar(0.0, 8.0).unwrap();
    let v = friedlander_closed_form(1.0, &th).unwrap();
    let want = airy_maclaurin(-8.0, 60).0 / airy_maclaurin(-4.0, 60).0;
    assert!((v.re - want).abs() < 1e-10 * want.abs(), "{} {}", v.re, want);
    assert_eq!(v.im, 0.0);
}

#[test]
fn closed_form_solves_the_airy_ode() {
    let th = Covector::planar(2.0, 3.0).unwrap();
    let k = |x: f64| friedlander_closed_form(x, &th).unwrap().re;
    let q = |x: f64| 4.0 - (1.0 + x) * 9.0;
    let res = |h: f64| {
        (1..10)
            .map(|i| {
                let x = 0.3 * i as f64;
                ((k(x + h) - 2.0 * k(x) + k(x - h)) / (h * h) - q(x) * k(x)).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let (a, b) = (res(1e-2), res(5e-3));
    assert!(a < 1e-2 && a / b > 3.5, "{a} {b}");
}

#[test]
fn closed_form_pole_at_airy_zero() {
    let a1: f64 = 2.338_107_410_459_767;
    let th = Covector::planar(0.0, a1.powf(1.5)).unwrap();
    assert!(matches!(friedlander_closed_form(0.5, &th), Err(Error::Pole(_))));
}

#[test]
fn friedlander_boundary_normalization_is_first_order() {
    let p = fried();
    let th = Covector::planar(1.0, 3.0).unwrap();
    let xs: Vec<f64> = (0..8).map(|k| 1e-4 * 2f64.powi(k)).collect();
    let sol = solve_spectral_on(&p, &th, &xs, 1e-12).unwrap();
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = sol.values.iter().map(|u| (u - 1.0).norm().ln()).collect();
    assert!(ls_slope(&lx, &ly) >= 0.9);
}

#[test]
fn ads_boundary_normalization_follows_the_second_root() {
    // x^{−s₋}û − 1 is dominated by B x^{s₊ − s₋}, so the log-log slope is 2α = 0.8
    let p = ModelParams::default();
    let th = Covector::planar(1.0, 3.0).unwrap();
    let xs: Vec<f64> = (0..8).map(|k| 1e-5 * 2f64.powi(k)).collect();
    let sol = solve_spectral_on(&p, &th, &xs, 1e-12).unwrap();
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = sol.values.iter().zip(&xs).map(|(u, x)| (u * x.powf(-p.s_minus) - 1.0).norm().ln()).collect();
    let s = ls_slope(&lx, &ly);
    assert!((s - 2.0 * p.alpha()).abs() < 0.02, "{s}");
    assert!((sol.normalization - 1.0).norm() < 0.05);
}

#[test]
fn integrator_refinement_is_fifth_order() {
    let (tp, tn) = (2.0f64, 5.0f64);
    let f = |x: f64, y: &[C64; 2]| [y[1], y[0] * (tp * tp - (1.0 + x) * tn * tn)];
    let s = tn.powf(2.0 / 3.0);
    let z0 = tp * tp / (s * s) - s;
    let a = airy_maclaurin(z0, 80);
    let y0 = [C64::new(a.0, 0.0), C64::new(-s * a.1, 0.0)];
    let exact = airy_oracle(z0 - 2.0 * s);
    let err = |n: usize| (dopri5_fixed(f, 0.0, y0, 2.0, n)[0].re - exact).abs();
    let (e1, e2) = (err(100), err(200));
    assert!(e1 / e2 >= 2f64.powf(4.5), "{e1} {e2}");
}

/// `x² u'' − (n−1) x u' + (x²((1+x)θn² − |θ'|²) + λ) u`, relative to the size of its terms.
fn ads_residual(p: &ModelParams, tp: f64, tn: f64, a: f64, b: f64) -> f64 {
    let xs = uniform(a, b, 4001);
    let sv = spectral_values(p, tp * tp, tn, &xs, 1e-11).unwrap();
    let h = xs[1] - xs[0];
    let mut worst = 0.0f64;
    for i in 2..xs.len() - 2 {
        let x = xs[i];
        let d = &sv.derivs;
        let upp = (-d[i + 2] + d[i + 1] * 8.0 - d[i - 1] * 8.0 + d[i - 2]) / (12.0 * h);
        let pot = x * x * ((1.0 + x) * tn * tn - tp * tp) + p.lambda;
        let r = upp * x * x - d[i] * ((p.n as f64 - 1.0) * x) + sv.values[i] * pot;
        let scale = (upp * x * x).norm() + (sv.values[i] * pot).norm();
        worst = worst.max(r.norm() / scale);
    }
    worst
}

#[test]
fn ads_solution_solves_the_ode() {
    let p = ModelParams::default();
    for (tp, tn) in [(0.0, 8.0), (5.0, 10.0), (12.0, 10.0), (1.0, 0.5), (30.0, -25.0)] {
        let r = ads_residual(&p, tp, tn, 0.05, 2.5);
        assert!(r < 1e-7, "theta=({tp},{tn}) residual {r}");
    }
}

#[test]
fn ads_matches_outgoing_impedance_at_the_far_end() {
    let p = ModelParams::default();
    let tol: f64 = 1e-10;
    for (tp, tn) in [(0.0, 8.0), (3.0, -6.0), (0.0, 40.0)] {
        let th = Covector::planar(tp, tn).unwrap();
        let sol = solve_spectral(&p, &th, 3.0, tol).unwrap();
        let k = sol.x_grid.len() - 1;
        let got = sol.derivs[k] / sol.values[k];
        let (want, _) = outgoing_impedance(&p, tp * tp, tn, sol.x_grid[k]);
        assert!((got - want).norm() <= tol.sqrt() * want.norm(), "{got} {want}");
        let lead = C64::new(0.0, -tn) * (1.0 + 3.0 - (tp / tn).powi(2)).sqrt();
        assert!((got - lead).norm() < 0.05 * lead.norm());
    }
}

/// `x^{n/2+s̃} Σ c_k x^k` from stored coefficients.
fn series_value(s: &SeriesExpansion, x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, c) in s.coeffs.iter().enumerate() {
        acc += c * x.powi(k as i32);
    }
    acc * x.powf(s.leading)
}

#[test]
fn series_and_integration_agree_near_the_boundary() {
    let p = ModelParams::default();
    let tol = 1e-10;
    for (tp, tn) in [(0.0, 8.0), (2.0, 3.0), (15.0, 10.0)] {
        let th = Covector::planar(tp, tn).unwrap();
        let sol = solve_spectral(&p, &th, 2.0, tol).unwrap();
        let x2 = 2.0 * DEFAULT_X_MIN;
        let grid = [DEFAULT_X_MIN, x2, 0.5, 1.0, 2.0];
        let sol2 = solve_spectral_on(&p, &th, &grid, tol).unwrap();
        let m = frobenius_coeffs(&p, &th, RootSign::Minus, 30).unwrap();
        let pl = frobenius_coeffs(&p, &th, RootSign::Plus, 30).unwrap();
        let series = C64::new(series_value(&m, x2), 0.0) + sol2.s_plus_coeff * series_value(&pl, x2);
        assert!((series - sol2.values[1]).norm() <= 10.0 * tol * series.norm(), "{series} {}", sol2.values[1]);
        assert!((sol.s_plus_coeff - sol2.s_plus_coeff).norm() < 1e-6 * sol.s_plus_coeff.norm().max(1.0));
    }
}

#[test]
fn frobenius_coefficient_examples() {
    let p = ModelParams::default();
    let th = Covector::planar(1.5, -2.5).unwrap();
    for sign in [RootSign::Minus, RootSign::Plus] {
        let s = frobenius_coeffs(&p, &th, sign, 12).unwrap();
        let r = s.root;
        assert_eq!(s.coeffs[0], 1.0);
        assert_eq!(s.coeffs[1], 0.0);
        assert!((s.coeffs[2] + (6.25 - 2.25) / (2.0 * (2.0 * r + 2.0))).abs() < 1e-14);
        assert!((s.coeffs[3] + 6.25 / (3.0 * (2.0 * r + 3.0))).abs() < 1e-14);
        for k in 3..=12 {
            let want = -(4.0 * s.coeffs[k - 2] + 6.25 * s.coeffs[k - 3]) / (k as f64 * (2.0 * r + k as f64));
            assert_eq!(s.coeffs[k], want);
        }
    }
    assert!(matches!(frobenius_coeffs(&p, &th, RootSign::Plus, 2), Err(Error::Config(_))));
}

#[test]
fn branches_are_independent() {
    let p = ModelParams::default();
    let th = Covector::planar(0.5, 1.0).unwrap();
    for k in 1..=60 {
        let x = 0.05 * k as f64;
        let w = frobenius_wronskian(&p, &th, x).unwrap();
        assert!(w.abs() > 1e-8);
        // Abel: W = 2α x^{n−1}
        assert!((w - 2.0 * p.alpha() * x).abs() < 1e-10 * w.abs(), "x={x} w={w}");
    }
}

#[test]
fn solve_spectral_rejects_short_domains() {
    let th = Covector::planar(0.0, 2.0).unwrap();
    assert!(matches!(solve_spectral(&ModelParams::default(), &th, 1.5, 1e-8), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn friedlander_agrees_with_closed_form(tn in 0.5f64..15.0, r in -1.0f64..1.0, neg in any::<bool>()) {
        let tn = if neg { -tn } else { tn };
        let th = Covector::planar(r * tn.abs(), tn).unwrap();
        let closed = |x: f64| friedlander_closed_form(x, &th);
        prop_assume!(closed(0.0).is_ok());
        let xs = uniform(0.01, 3.0, 31);
        let sol = solve_spectral_on(&fried(), &th, &xs, 1e-10).unwrap();
        let mut worst = 0.0f64;
        let mut m = 0.0f64;
        for (x, u) in xs.iter().zip(&sol.values) {
            let c = closed(*x).unwrap();
            worst = worst.max((u - c).norm());
            m = m.max(c.norm());
        }
        prop_assert!(worst / m < 1e-6);
    }

    #[test]
    fn ads_solutions_are_normalized(tn in -20.0f64..20.0, tp in 0.0f64..20.0) {
        prop_assume!(tn.abs() > 0.05 || tp > 0.05);
        let p = ModelParams::default();
        let xs = [1e-6, 1e-3, 0.5, 2.0];
        let sv = spectral_values(&p, tp * tp, tn, &xs, 1e-10);
        prop_assume!(!matches!(sv, Err(Error::Pole(_))));
        let sv = sv.unwrap();
        let norm = sv.values[0] * 1e-6f64.powf(-p.s_minus);
        prop_assert!((norm - 1.0).norm() < 1e-3 * (1.0 + sv.s_plus_coeff.norm()));
        prop_assert!(sv.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }
}
