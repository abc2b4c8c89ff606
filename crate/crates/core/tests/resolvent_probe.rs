use glance::io::parse_csv;
use glance::rays::Sign;
use glance::resolvent_probe::*;
use glance::{Error, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::time::Instant;

const HS: [f64; 4] = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];

fn pseudo_random(n: usize, seed: u64) -> Vec<C64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..n).map(|_| C64::new(next(), next())).collect()
}

fn bilinear(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn under_resolved_grid_is_rejected() {
    let g = GridSpec { points: 500, ..GridSpec::default() };
    assert!(matches!(build_global_operator(Sign::Plus, 1.0 / 64.0, &g), Err(Error::Config(_))));
    let g = GridSpec { layer_fraction: 0.3, ..GridSpec::default() };
    assert!(matches!(build_global_operator(Sign::Plus, 0.125, &g), Err(Error::Config(_))));
    assert!(matches!(build_global_operator(Sign::Plus, 0.0, &GridSpec::default()), Err(Error::Domain(_))));
}

#[test]
fn layers_stay_within_a_fifth_of_the_grid() {
    let op = build_global_operator(Sign::Plus, 0.125, &GridSpec::default()).unwrap();
    let n = op.len();
    let (lo, hi) = op.interior;
    assert!(lo as f64 <= 0.2 * n as f64 + 1.0 && (n - hi) as f64 <= 0.2 * n as f64 + 1.0);
    assert!(op.absorber[lo..hi].iter().all(|w| *w == 0.0));
    assert!(op.absorber.iter().all(|w| *w >= 0.0));
}

#[test]
fn symmetric_without_layer() {
    let g = GridSpec { layer_strength: 0.0, ..GridSpec::default() };
    for sign in [Sign::Plus, Sign::Minus] {
        let op = build_global_operator(sign, 1.0 / 16.0, &g).unwrap();
        for seed in 0..5 {
            let u = pseudo_random(op.len(), seed);
            let v = pseudo_random(op.len(), seed + 100);
            let a = bilinear(&op.apply(&u), &v);
            let b = bilinear(&u, &op.apply(&v));
            assert!((a - b).norm() <= 1e-12 * a.norm(), "{a} {b}");
            // with δ removed the operator is real: conj(A u) = A conj(u)
            let uc: Vec<C64> = u.iter().map(|z| z.conj()).collect();
            let au = op.apply(&u);
            let auc = op.apply(&uc);
            let shift = C64::new(0.0, -op.delta);
            let err = (0..op.len()).map(|i| ((au[i] - shift * u[i]).conj() - (auc[i] - shift * uc[i])).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "{err}");
        }
    }
}

/// Windowed plane wave `e^{−(σ−c)²/(2s²)} e^{iκσ/h}` and its exact second derivative.
fn packet(s: f64, h: f64) -> (C64, C64) {
    let (c, w, k) = (2.0, 0.15, (0.5f64).sqrt() / h);
    let g = (-(s - c) * (s - c) / (2.0 * w * w)).exp();
    let gp = -(s - c) / (w * w) * g;
    let gpp = ((s - c) * (s - c) / (w * w * w * w) - 1.0 / (w * w)) * g;
    let e = C64::from_polar(1.0, k * s);
    let ik = C64::new(0.0, k);
    (g * e, (gpp + 2.0 * ik * gp + ik * ik * g) * e)
}

#[test]
fn plane_wave_residual_is_second_order() {
    let h = 1.0 / 16.0;
    let mut errs = vec![];
    for points in [4096, 8191, 16381] {
        let g = GridSpec { points, ..GridSpec::default() };
        let op = build_global_operator(Sign::Plus, h, &g).unwrap();
        let u: Vec<C64> = op.sigma.iter().map(|&s| packet(s, h).0).collect();
        let au = op.apply(&u);
        let mut err = 0.0f64;
        for i in op.interior.0..op.interior.1 {
            let (v, vpp) = packet(op.sigma[i], h);
            let exact = -h * h * vpp + v * op.potential[i] - C64::new(0.0, op.delta) * v;
            err = err.max((au[i] - exact).norm());
        }
        errs.push(err);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "{errs:?}");
    }
}

fn bump(s: f64) -> C64 {
    C64::new((-40.0 * (s - 1.5) * (s - 1.5)).exp(), 0.0)
}

#[test]
fn layer_position_does_not_change_interior_solution() {
    let h = 1.0 / 32.0;
    let g1 = GridSpec::default();
    let d = g1.step();
    let g2 = GridSpec { sigma_min: -7.0, sigma_max: 11.0, points: (18.0 / d).round() as usize + 1, ..GridSpec::default() };
    let solve = |g: &GridSpec| {
        let op = build_global_operator(Sign::Plus, h, g).unwrap();
        let f: Vec<C64> = op.sigma.iter().map(|&s| bump(s)).collect();
        (op.sigma.clone(), op.factor().unwrap().solve(&f), op.interior)
    };
    let (s1, u1, (lo, hi)) = solve(&g1);
    let (s2, u2, _) = solve(&g2);
    let off = ((s1[0] - s2[0]) / d).round() as usize;
    let scale = u1[lo..hi].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut diff = 0.0f64;
    for i in lo..hi {
        assert!((s1[i] - s2[i + off]).abs() < 1e-9);
        diff = diff.max((u1[i] - u2[i + off]).norm());
    }
    assert!(diff <= 1e-4 * scale, "{diff} {scale}");
}

#[test]
fn resolvent_identity_for_every_scanned_h() {
    for sign in [Sign::Plus, Sign::Minus] {
        for h in HS {
            let op = build_global_operator(sign, h, &GridSpec::default()).unwrap();
            let f: Vec<C64> = op.sigma.iter().map(|&s| bump(s)).collect();
            let back = op.factor().unwrap().solve(&op.apply(&f));
            let num = f.iter().zip(&back).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let den = f.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!(num <= 1e-6 * den, "{sign:?} {h} {}", num / den);
        }
    }
}

#[test]
fn power_iteration_matches_dense_svd() {
    let g = GridSpec { points: 600, ..GridSpec::default() };
    for sign in [Sign::Plus, Sign::Minus] {
        let op = build_global_operator(sign, HS[0], &g).unwrap();
        let n = op.len();
        let mut a = DMatrix::<C64>::zeros(n, n);
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            let col = op.apply(&e);
            for i in 0..n {
                a[(i, j)] = col[i];
            }
        }
        let inv = a.try_inverse().unwrap();
        let (lo, hi) = op.interior;
        let w = op.weights(0.5);
        let b = DMatrix::<C64>::from_fn(hi - lo, hi - lo, |i, j| inv[(i + lo, j + lo)] * (w[i + lo] * w[j + lo]));
        let dense = b.singular_values().max();
        let est = weighted_resolvent_norm(&op, 0.5).unwrap();
        assert!((est.norm - dense).abs() <= 1e-8 * dense, "{sign:?} {} {dense}", est.norm);
    }
}

#[test]
fn scan_exponent_near_minus_one() {
    let t = Instant::now();
    let r = resolvent_norm_scan(Sign::Plus, &HS, 0.5, &GridSpec::default()).unwrap();
    assert!(t.elapsed().as_secs_f64() < 60.0);
    assert!((-1.3..=-0.8).contains(&r.exponent), "{}", r.exponent);
    assert!(r.norms.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn epsilon_barely_moves_exponent() {
    for sign in [Sign::Plus, Sign::Minus] {
        let a = resolvent_norm_scan(sign, &HS, 0.5, &GridSpec::default()).unwrap();
        let b = resolvent_norm_scan(sign, &HS, 0.1, &GridSpec::default()).unwrap();
        assert!((a.exponent - b.exponent).abs() <= 0.1, "{sign:?} {} {}", a.exponent, b.exponent);
    }
}

#[test]
fn refinement_changes_norms_by_two_percent_at_most() {
    let coarse = GridSpec::default();
    let fine = GridSpec { points: 2 * coarse.points - 1, ..coarse.clone() };
    for sign in [Sign::Plus, Sign::Minus] {
        let a = resolvent_norm_scan(sign, &HS, 0.5, &coarse).unwrap();
        let b = resolvent_norm_scan(sign, &HS, 0.5, &fine).unwrap();
        for (x, y) in a.norms.iter().zip(&b.norms) {
            assert!((x - y).abs() <= 0.02 * y, "{sign:?} {x} {y}");
        }
    }
}

#[test]
fn scan_validates_h_list() {
    let g = GridSpec::default();
    assert!(matches!(resolvent_norm_scan(Sign::Plus, &HS[..3], 0.5, &g), Err(Error::Config(_))));
    assert!(matches!(resolvent_norm_scan(Sign::Plus, &[0.125, 0.0625, 0.03, 0.015625], 0.5, &g), Err(Error::Config(_))));
    assert!(matches!(resolvent_norm_scan(Sign::Plus, &[0.125, 0.0625, 0.03125, 0.001], 0.5, &g), Err(Error::Config(_))));
    assert!(matches!(resolvent_norm_scan(Sign::Plus, &HS, 0.0, &g), Err(Error::Domain(_))));
}

#[test]
fn scan_csv_has_fit_column() {
    let r = resolvent_norm_scan(Sign::Minus, &HS, 0.5, &GridSpec::default()).unwrap();
    let (h, rows) = parse_csv(&r.to_csv()).unwrap();
    assert_eq!(h, ["h", "norm", "fit"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[2][1], r.norms[2]);
    let fit = (r.intercept + r.exponent * HS[2].ln()).exp();
    assert!((rows[2][2] - fit).abs() < 1e-12 * fit);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn solve_inverts_apply(k in 3u32..7, seed in 0u64..1000, minus in any::<bool>()) {
        let h = 0.5f64.powi(k as i32);
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let op = build_global_operator(sign, h, &GridSpec::default()).unwrap();
        let u = pseudo_random(op.len(), seed);
        let back = op.factor().unwrap().solve(&op.apply(&u));
        let err = u.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6);
    }
}
