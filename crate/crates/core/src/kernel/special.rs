//! Special functions needed for the operator constants.

use statrs::function::gamma as sgamma;

pub use sgamma::gamma;

/// Bernoulli numbers `B_2, B_4, ..., B_24`.
const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0`,
/// by Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    const N: usize = 16;
    let mut sum: f64 = (0..N).map(|k| (k as f64 + a).powf(-s)).sum();
    let x = N as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // B_{2j}/(2j)! · s(s+1)…(s+2j-2) · x^{-s-2j+1}
    let mut rising = s; // s(s+1)...(s+2j-2)
    let mut fact = 2.0; // (2j)!
    let mut xpow = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising * xpow;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let k = 2.0 * (j as f64 + 1.0);
        rising *= (s + k - 1.0) * (s + k);
        fact *= (k + 1.0) * (k + 2.0);
        xpow /= x * x;
    }
    sum
}

/// Riemann zeta for `s > 1`.
pub fn riemann_zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// Dirichlet beta `β(s) = Σ_{k≥0} (-1)^k (2k+1)^{-s}` for `s > 1`.
pub fn dirichlet_beta(s: f64) -> f64 {
    4f64.powf(-s) * (hurwitz_zeta(s, 0.25) - hurwitz_zeta(s, 0.75))
}

/// Upper incomplete gamma `Γ(a, x)` for `a > -1`, `x > 0`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > -1.0 && x > 0.0);
    if a > 0.0 {
        sgamma::gamma_ur(a, x) * gamma(a)
    } else if a == 0.0 {
        // E1(x) = Γ(0, x); only reached for integer exponents
        exp_integral_e1(x)
    } else {
        (upper_incomplete_gamma(a + 1.0, x) - x.powf(a) * (-x).exp()) / a
    }
}

fn exp_integral_e1(x: f64) -> f64 {
    // continued fraction, valid for the x ≥ π arguments used here
    let mut b = x + 1.0;
    let mut c = 1.0 / f64::MIN_POSITIVE;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}
