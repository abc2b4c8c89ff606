//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Tanh-sinh quadrature on `[a, b]`, refined until two levels agree.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (b - a);
    let mut h = 0.5;
    let eval = |h: f64, start: usize, step: usize| -> f64 {
        let mut s = 0.0;
        let mut k = start as i64;
        loop {
            let t = k as f64 * h;
            let u = 0.5 * PI * t.sinh();
            let x = u.tanh();
            let w = 0.5 * PI * t.cosh() / (u.cosh() * u.cosh());
            if w < 1e-300 || (1.0 - x.abs()) < 1e-300 {
                break;
            }
            let mut term = f(c + d * x) * w;
            if k != 0 {
                term += f(c - d * x) * w;
            }
            s += term;
            if w * (1.0 + term.abs()) < 1e-40 {
                break;
            }
            k += step as i64;
            if t > 6.0 {
                break;
            }
        }
        s
    };
    let mut sum = eval(h, 0, 1);
    let mut prev = sum * h * d;
    for _ in 0..12 {
        h *= 0.5;
        sum += eval(h, 1, 2);
        let cur = sum * h * d;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Lanczos Γ (g = 7, n = 9) with reflection.
pub fn gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt` by the trapezoid rule.
pub fn k_quad(nu: f64, x: f64) -> f64 {
    let h = 0.01;
    let mut s = 0.5 * (-x).exp();
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let v = (-x * t.cosh() + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
        s += v;
        if x * t.cosh() - nu * t > x + 60.0 {
            break;
        }
        k += 1;
    }
    s * h
}

fn tail_limit(x: f64) -> f64 {
    // e^{-x sinh t} < 1e-30
    (70.0 / x).asinh().max(1.0)
}

/// Schläfli integral for `J_ν(x)`.
pub fn j_quad(nu: f64, x: f64) -> f64 {
    let a = tanh_sinh(|t| (nu * t - x * t.sin()).cos(), 0.0, PI, 1e-15) / PI;
    let s = (nu * PI).sin();
    let b = if s.abs() < 1e-300 { 0.0 } else { tanh_sinh(|t| (-x * t.sinh() - nu * t).exp(), 0.0, tail_limit(x), 1e-15) };
    a - s / PI * b
}

/// Schläfli integral for `Y_ν(x)`.
pub fn y_quad(nu: f64, x: f64) -> f64 {
    let a = tanh_sinh(|t| (x * t.sin() - nu * t).sin(), 0.0, PI, 1e-15) / PI;
    let c = (nu * PI).cos();
    let b = tanh_sinh(|t| ((nu * t).exp() + (-nu * t).exp() * c) * (-x * t.sinh()).exp(), 0.0, tail_limit(x), 1e-15);
    a - b / PI
}

/// `I_ν(x)` integral representation.
pub fn i_quad(nu: f64, x: f64) -> f64 {
    let a = tanh_sinh(|t| (x * t.cos()).exp() * (nu * t).cos(), 0.0, PI, 1e-15) / PI;
    let s = (nu * PI).sin();
    let b = if s.abs() < 1e-300 { 0.0 } else { tanh_sinh(|t| (-x * t.cosh() - nu * t).exp(), 0.0, (70.0 / x).acosh().max(1.0) + 1.0, 1e-15) };
    a - s / PI * b
}

/// Airy Ai from the order-1/3 integral oracles.
pub fn airy_oracle(z: f64) -> f64 {
    let r = z.abs().sqrt();
    let xi = 2.0 / 3.0 * r * r * r;
    if z > 0.0 {
        r / (PI * 3f64.sqrt()) * k_quad(1.0 / 3.0, xi)
    } else if z < 0.0 {
        0.5 * r * (j_quad(1.0 / 3.0, xi) - y_quad(1.0 / 3.0, xi) / 3f64.sqrt())
    } else {
        1.0 / (3f64.powf(2.0 / 3.0) * gamma(2.0 / 3.0))
    }
}

/// Double-double number `hi + lo`.
#[derive(Clone, Copy, Debug)]
pub struct Dd(pub f64, pub f64);

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    pub fn from(x: f64) -> Dd {
        Dd(x, 0.0)
    }
    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.0, o.0);
        let (hi, lo) = two_sum(s, e + self.1 + o.1);
        Dd(hi, lo)
    }
    pub fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }
    pub fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p);
        let (hi, lo) = two_sum(p, e + self.0 * o.1 + self.1 * o.0);
        Dd(hi, lo)
    }
    pub fn div_f(self, d: f64) -> Dd {
        let q = self.0 / d;
        // remainder self − q·d, exact via fma
        let r = Dd(self.0, self.1).add(Dd(-q * d, -(q.mul_add(d, -q * d))));
        let (hi, lo) = two_sum(q, r.0 / d);
        Dd(hi, lo)
    }
    pub fn to_f64(self) -> f64 {
        self.0 + self.1
    }
}

/// `Ai(0)` and `−Ai'(0)` to double-double precision (literature values).
const AI0: Dd = Dd(0.3550280538878172, 2.05233632436212e-17);
const MAIP0: Dd = Dd(0.2588194037928068, -2.522243111610832e-17);

/// Airy Maclaurin series summed in double-double arithmetic:
/// `Ai = Ai(0) f − |Ai'(0)| g` with exact rational term ratios.
pub fn airy_maclaurin(z: f64, terms: usize) -> (f64, f64) {
    let z3 = Dd::from(z).mul(Dd::from(z)).mul(Dd::from(z));
    let z2 = Dd::from(z).mul(Dd::from(z));
    // f = Σ t_k, t_{k+1} = t_k z³/((3k+2)(3k+3));  g = Σ u_k, u_0 = z, u_{k+1} = u_k z³/((3k+3)(3k+4))
    let (mut t, mut u) = (Dd::from(1.0), Dd::from(z));
    let (mut f, mut g) = (Dd::from(0.0), Dd::from(0.0));
    // f' = Σ w_k, w_k = 3k t_k/z;  g' = Σ v_k, v_k = (3k+1) u_k/z
    let (mut fp, mut gp) = (Dd::from(0.0), Dd::from(0.0));
    let mut w = z2.div_f(2.0);
    let mut v = Dd::from(1.0);
    for k in 0..terms {
        f = f.add(t);
        g = g.add(u);
        gp = gp.add(v);
        if k > 0 {
            fp = fp.add(w);
            w = w.mul(z3).div_f((3 * k * (3 * k + 2)) as f64);
        }
        let k3 = (3 * k) as f64;
        t = t.mul(z3).div_f((k3 + 2.0) * (k3 + 3.0));
        u = u.mul(z3).div_f((k3 + 3.0) * (k3 + 4.0));
        v = v.mul(z3).div_f((k3 + 1.0) * (k3 + 3.0));
    }
    let ai = AI0.mul(f).add(MAIP0.mul(g).neg());
    let aip = AI0.mul(fp).add(MAIP0.mul(gp).neg());
    (ai.to_f64(), aip.to_f64())
}

/// Fourth-order centered second derivative.
pub fn d2_4(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

pub fn d1_4(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
