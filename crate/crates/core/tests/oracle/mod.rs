//! Reference computations for the integration tests.
//!
//! Everything here is written from the defining formulas, sharing no code
//! with the library beyond `Grid` bookkeeping.

#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::PI;

/// `1 - 35t⁴ + 84t⁵ - 70t⁶ + 20t⁷` on `[0, 1)`, zero beyond.
pub fn window(t: f64) -> f64 {
    if t >= 1.0 {
        return 0.0;
    }
    1.0 - 35.0 * t.powi(4) + 84.0 * t.powi(5) - 70.0 * t.powi(6) + 20.0 * t.powi(7)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Alternating series `Σ_{k≥0} (-1)^k a_k` by Cohen–Villegas–Zagier
/// acceleration.
pub fn alternating_sum(a: impl Fn(usize) -> f64, n: usize) -> f64 {
    let mut d = (3.0 + 8f64.sqrt()).powi(n as i32);
    d = (d + 1.0 / d) / 2.0;
    let mut b = -1.0;
    let mut c = -d;
    let mut s = 0.0;
    for k in 0..n {
        c = b - c;
        s += c * a(k);
        let kf = k as f64;
        let nf = n as f64;
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

/// `ζ(s) = η(s)/(1 - 2^{1-s})`.
pub fn zeta(s: f64) -> f64 {
    alternating_sum(|k| ((k + 1) as f64).powf(-s), 40) / (1.0 - 2f64.powf(1.0 - s))
}

pub fn dirichlet_beta(s: f64) -> f64 {
    alternating_sum(|k| ((2 * k + 1) as f64).powf(-s), 40)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// `Σ_{j∈Z³, j≠0} |j|^{-s}`: direct sum over `|j|∞ ≤ r` plus the integral of
/// the midpoint-corrected summand outside the cube of half-side `r + 1/2`.
pub fn lattice_sum_3d(s: f64, r: i64) -> f64 {
    let mut direct = 0.0;
    for i in 0..=r {
        for j in 0..=r {
            for k in 0..=r {
                let n2 = (i * i + j * j + k * k) as f64;
                if n2 == 0.0 {
                    continue;
                }
                let mult = [i, j, k].iter().map(|&c| if c == 0 { 1.0 } else { 2.0 }).product::<f64>();
                direct += mult * n2.powf(-s / 2.0);
            }
        }
    }
    let a = r as f64 + 0.5;
    let (x, w) = gauss_legendre(48);
    let face = |p: f64| -> f64 {
        let mut acc = 0.0;
        for (xu, wu) in x.iter().zip(&w) {
            for (xv, wv) in x.iter().zip(&w) {
                acc += wu * wv * (1.0 + xu * xu + xv * xv).powf(-p / 2.0);
            }
        }
        6.0 * a.powf(3.0 - p) / (p - 3.0) * acc
    };
    direct + face(s) - s * (s - 1.0) / 24.0 * face(s + 2.0)
}

/// Adaptive Gauss–Kronrod (7/15) quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const XK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ];
    const WK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    fn rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WK[7] * fc;
        let mut g = WG[3] * fc;
        for i in 0..7 {
            let s = f(c - h * XK[i]) + f(c + h * XK[i]);
            k += WK[i] * s;
            if i % 2 == 1 {
                g += WG[i / 2] * s;
            }
        }
        (k * h, ((k - g) * h).abs())
    }
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = rule(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let c = 0.5 * (a + b);
        recurse(f, a, c, tol / 2.0, depth - 1) + recurse(f, c, b, tol / 2.0, depth - 1)
    }
    recurse(f, a, b, tol, 40)
}

/// `∫_{S^{d-1}} θ₁² dS`, by quadrature over angles.
pub fn angular_second_moment(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => integrate(&|t: f64| t.cos().powi(2), 0.0, 2.0 * PI, 1e-15),
        3 => 2.0 * PI * integrate(&|t: f64| t.cos().powi(2) * t.sin(), 0.0, PI, 1e-15),
        _ => unreachable!(),
    }
}

/// `-(h^{-d}/2) ∫ w(|y|) y₁² |y|^{-(d+α)} dy` in radial form, with
/// `r = δ t^{1/(2-α)}` removing the origin singularity.
pub fn a3_quadrature(alpha: f64, d: usize, h: f64, delta: f64) -> f64 {
    let q = 1.0 / (2.0 - alpha);
    let radial = delta.powf(2.0 - alpha) * q * integrate(&|t: f64| window(t.powf(q)), 0.0, 1.0, 1e-15);
    -0.5 * h.powi(-(d as i32)) * angular_second_moment(d) * radial
}

/// `(h^{2-d-α}/2) Σ_{j≠0} w(|j|h/δ) j₁² |j|^{-(d+α)}` by direct looping.
pub fn a2_brute(alpha: f64, d: usize, h: f64, radius: i64) -> f64 {
    let delta = radius as f64 * h;
    let mut s = 0.0;
    let r = |k: usize| if k < d { radius } else { 0 };
    for i in -r(0)..=r(0) {
        for j in -r(1)..=r(1) {
            for k in -r(2)..=r(2) {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let n = ((i * i + j * j + k * k) as f64).sqrt();
                s += window(n * h / delta) * (i * i) as f64 / n.powf(d as f64 + alpha);
            }
        }
    }
    0.5 * h.powf(2.0 - d as f64 - alpha) * s
}

/// `C_{α,d}` from the Γ function.
pub fn normalizing_constant(alpha: f64, d: usize) -> f64 {
    let d = d as f64;
    2f64.powf(alpha) * gamma((d + alpha) / 2.0) / (PI.powf(d / 2.0) * gamma(-alpha / 2.0).abs())
}

/// `(-Δ)^{α/2} (1-x²)_+^p` at `x = 0` in 1D:
/// `2 C ∫₀^∞ (1 - (1-y²)_+^p) / y^{1+α} dy`.
pub fn frac_lap_power_at_origin(alpha: f64, p: f64) -> f64 {
    let q = 1.0 / (2.0 - alpha);
    // y = t^q on [0, 1]: dy / y^{1+α} · y² = q dt
    let g = |y: f64| {
        if y == 0.0 {
            p
        } else {
            -(p * (-y * y).ln_1p()).exp_m1() / (y * y)
        }
    };
    let inner = q * integrate(&|t: f64| g(t.powf(q)), 0.0, 1.0, 1e-14);
    2.0 * normalizing_constant(alpha, 1) * (inner + 1.0 / alpha)
}

/// Partial sum of `₂F₁(a, b; c; z)`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64, terms: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..terms {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
    }
    sum
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Literal `C h^d [A1 u_i - Σ_{j≠i} u_j/|y_i-y_j|^{d+α} + (A2+A3) L_FD u_i]`
/// over the active points of `grid`, zero outside.
pub fn dense_apply(grid: &fraclap::Grid, consts: &fraclap::OperatorConstants, u: &[f64]) -> Vec<f64> {
    let n = grid.n_active();
    let d = grid.dim();
    let h = grid.h();
    let pts: Vec<[f64; 3]> = (0..n).map(|k| grid.active_coordinates(k)).collect();
    let idx: Vec<[usize; 3]> = (0..n).map(|k| grid.multi_index(grid.lattice_index(k))).collect();
    let p = d as f64 + consts.alpha;
    let ch = consts.c_ad * h.powi(d as i32);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut tail = 0.0;
        for j in 0..n {
            if j != i {
                let r2: f64 = (0..d).map(|k| (pts[i][k] - pts[j][k]).powi(2)).sum();
                tail += u[j] / r2.sqrt().powf(p);
            }
        }
        // neighbors by lattice index; missing or inactive ones are zero
        let mut lap = -2.0 * d as f64 * u[i];
        for axis in 0..d {
            for step in [-1i64, 1] {
                let c = idx[i][axis] as i64 + step;
                if c < 0 || c >= grid.m() as i64 {
                    continue;
                }
                let mut nb = idx[i];
                nb[axis] = c as usize;
                if let Some(pos) = grid.active_position(grid.linear_index(&nb)) {
                    lap += u[pos];
                }
            }
        }
        lap /= h * h;
        out[i] = ch * (consts.a1 * u[i] - tail + (consts.a2 + consts.a3) * lap);
    }
    out
}
