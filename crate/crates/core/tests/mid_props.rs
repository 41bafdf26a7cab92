use std::f64::consts::{FRAC_PI_2, PI};

use mid_delay::mid::{
    ddae_mid, ddae_mid_inverse, factorization_residual, retarded_mid, symmetry_residual,
    xi_function, xi_roots,
};
use mid_delay::quasipoly::{DdaeScalar, Quasipolynomial};
use mid_delay::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn retarded_mid_has_multiplicity_2n(n in 1usize..=6, s0 in -2.0f64..2.0, tau in 0.1f64..5.0) {
        let q = Quasipolynomial::from_retarded(&retarded_mid(n, s0, tau).unwrap());
        let at = Complex64::new(s0, 0.0);
        for k in 0..2 * n {
            let r = q.derivative_residual(k, at);
            prop_assert!(r < 1e-8, "n={} k={} residual {}", n, k, r);
        }
        prop_assert!(q.derivative_residual(2 * n, at) > 1e-6);
    }

    #[test]
    fn ddae_mid_round_trip(s0 in -2.0f64..1.0, tau in 0.2f64..4.0) {
        let c = ddae_mid(s0, tau);
        let sys = DdaeScalar::new(c.a, 1.0, c.bc, c.d, tau).unwrap();
        let back = ddae_mid_inverse(&sys, 1e-12).unwrap();
        prop_assert!((back - s0).abs() <= 1e-12 * (1.0 + s0.abs()));
        let m = Quasipolynomial::from_ddae_scalar(&sys).multiplicity_at(Complex64::new(s0, 0.0), 1e-9);
        prop_assert_eq!(m.order, 3);
    }

    #[test]
    fn symmetry_identity(r in 0.0f64..20.0, theta in 0.0f64..(2.0 * PI)) {
        prop_assert!(symmetry_residual(Complex64::from_polar(r, theta)) < 1e-12);
    }
}

#[test]
fn xi_interlacing() {
    let xis = xi_roots(200).xis;
    for (k, &x) in xis.iter().enumerate().skip(1) {
        let k = k as f64;
        assert!(x > k * PI && x < k * PI + FRAC_PI_2, "{k}");
        assert!(xi_function(x).abs() < 1e-13 * (1.0 + x));
    }
    assert!(xis.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn factorization_on_grid() {
    let mut worst = 0.0f64;
    for i in 0..=20 {
        for j in 0..=20 {
            let z = Complex64::new(-10.0 + i as f64, -10.0 + j as f64);
            worst = worst.max(factorization_residual(z, 32));
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn factorization_quotient_limit_at_origin() {
    // D(z) / z^3 -> 1/6 as z -> 0.
    for &r in &[1e-2, 1e-3] {
        let z = Complex64::new(r, 0.5 * r);
        let d = mid_delay::mid::normalized_delta(z);
        assert!((d / (z * z * z) - 1.0 / 6.0).norm() < r);
    }
}

#[test]
fn real_roots_are_symmetric() {
    // D(z) = 0 with z real forces D(-z) = 0; at z = 0 both vanish.
    assert!(mid_delay::mid::normalized_delta(Complex64::new(-0.0, 0.0)).norm() == 0.0);
    assert_eq!(symmetry_residual(Complex64::new(0.0, 0.0)), 0.0);
}
