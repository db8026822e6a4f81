mod oracle;

use fraclap::kernel::special::{dirichlet_beta, riemann_zeta};
use fraclap::kernel::{
    build_constants, compute_a2, compute_a3, lattice_sum, normalizing_constant, WindowSpec,
    DEFAULT_LATTICE_TOL,
};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn zeta_and_beta_match_alternating_series() {
    for s in [1.3, 1.75, 2.0, 2.6, 3.9] {
        assert!(rel(riemann_zeta(s), oracle::zeta(s)) < 1e-13, "ζ({s})");
        assert!(rel(dirichlet_beta(s), oracle::dirichlet_beta(s)) < 1e-13, "β({s})");
    }
}

#[test]
fn lattice_sum_in_one_and_two_dimensions() {
    for a in [0.1, 0.5, 1.0, 1.5, 1.9] {
        let s1 = 1.0 + a;
        assert!(rel(lattice_sum(1, s1, 1e-12).unwrap(), 2.0 * oracle::zeta(s1)) < 1e-12);
        let s2 = 2.0 + a;
        let want = 4.0 * oracle::zeta(s2 / 2.0) * oracle::dirichlet_beta(s2 / 2.0);
        assert!(rel(lattice_sum(2, s2, 1e-12).unwrap(), want) < 1e-12);
    }
}

#[test]
fn lattice_sum_in_three_dimensions() {
    for a in [0.5, 1.0, 1.5] {
        let s = 3.0 + a;
        let got = lattice_sum(3, s, 1e-12).unwrap();
        let want = oracle::lattice_sum_3d(s, 40);
        assert!(rel(got, want) < 1e-8, "s={s}: {got} vs {want}");
    }
}

#[test]
fn a2_matches_direct_loop() {
    for d in 1..=3 {
        let radius = if d == 3 { 6 } else { 20 };
        for a in [0.3, 1.0, 1.7] {
            let h = 1.0 / 64.0;
            let spec = WindowSpec::new(h, radius).unwrap();
            let got = compute_a2(a, d, &spec).unwrap();
            let want = oracle::a2_brute(a, d, h, radius as i64);
            assert!(rel(got, want) < 1e-14, "d={d} α={a}: {got} vs {want}");
        }
    }
}

#[test]
fn a3_matches_radial_quadrature() {
    for d in 1..=3 {
        for a in [0.2, 0.9, 1.6, 1.95] {
            let h = 0.01;
            let spec = WindowSpec::new(h, 20).unwrap();
            let got = compute_a3(a, d, h, &spec).unwrap();
            assert!(rel(got, oracle::a3_quadrature(a, d, h, spec.delta)) < 1e-12);
        }
    }
}

#[test]
fn normalizing_constant_values() {
    for d in 1..=3 {
        for a in [0.25, 1.0, 1.5, 1.99] {
            assert!(rel(normalizing_constant(a, d).unwrap(), oracle::normalizing_constant(a, d)) < 1e-13);
        }
    }
    // C_{1,1} = 1/π
    assert!(rel(normalizing_constant(1.0, 1).unwrap(), std::f64::consts::FRAC_1_PI) < 1e-14);
    assert!(normalizing_constant(2.0, 1).is_err());
    assert!(normalizing_constant(0.0, 1).is_err());
}

#[test]
fn constants_are_consistent() {
    let c = build_constants(1.5, 2, 1.0 / 64.0, 20, DEFAULT_LATTICE_TOL).unwrap();
    assert!(c.a1 > 0.0);
    assert!(c.a2 > 0.0 && c.a3 < 0.0 && c.a2 + c.a3 < 0.0);
    let lap = c.laplacian_coefficient();
    let want = c.c_ad * (1.0f64 / 64.0).powi(2) * (c.a2 + c.a3).abs();
    assert!(rel(lap, want) < 1e-15);
}

#[test]
fn hypergeometric_right_hand_side() {
    for a in [0.5, 1.25, 1.75] {
        for x in [0.0, 0.3, 0.77, 0.99] {
            let got = fraclap::analytic::rhs_smooth_1d(a, x);
            let want = oracle::hyp2f1((1.0 + a) / 2.0, -2.0, 0.5, x * x, 5);
            assert!((got - want).abs() < 1e-13);
        }
    }
}
