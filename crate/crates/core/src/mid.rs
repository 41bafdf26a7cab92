//! Closed-form multiplicity-induced-dominancy (MID) synthesis and the
//! analytic identities of the normalized scalar DDAE quasipolynomial
//! `z - 2 + exp(-z) (z + 2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd::{Cdd, Dd};
use crate::quadrature::gauss_legendre;
use crate::quasipoly::{DdaeScalar, QuasiError, RetardedSpec};
use crate::rootfinder::Root;

/// Largest order accepted by [`retarded_mid`].
pub const MAX_RETARDED_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MidError {
    #[error("order {0} is outside the supported range 1..={MAX_RETARDED_ORDER}")]
    UnsupportedOrder(usize),
    #[error(transparent)]
    Invalid(#[from] QuasiError),
}

/// Parameters placing a triple root of the scalar DDAE at `s0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidDdaeConditions {
    pub a: f64,
    pub d: f64,
    /// Product `b c`; only the product enters the characteristic function.
    pub bc: f64,
    pub s0: f64,
    pub tau: f64,
}

impl MidDdaeConditions {
    /// The scalar system with `b = 1`, `c = bc`.
    pub fn system(&self) -> DdaeScalar {
        DdaeScalar::new(self.a, 1.0, self.bc, self.d, self.tau).expect("finite conditions")
    }
}

/// Nonnegative solutions of `tan xi = xi`, `xis[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiLattice {
    pub xis: Vec<f64>,
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `n! / j!` for `j <= n`.
fn falling(n: u64, j: u64) -> u128 {
    (j + 1..=n).fold(1u128, |acc, i| acc * i as u128)
}

/// Coefficients of `s^n + sum a_k s^k + exp(-s tau) sum alpha_k s^k` with a
/// root of multiplicity `2n` at `s0`.
pub fn retarded_mid(n: usize, s0: f64, tau: f64) -> Result<RetardedSpec, MidError> {
    if n == 0 || n > MAX_RETARDED_ORDER {
        return Err(MidError::UnsupportedOrder(n));
    }
    if !s0.is_finite() {
        return Err(QuasiError::NonFinite("s0").into());
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(
            QuasiError::InvalidParameter(format!("tau must be positive, got {tau}")).into(),
        );
    }
    let nn = n as u64;
    let sign = |p: usize| if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let growth = (s0 * tau).exp();
    let mut a_coeffs = Vec::with_capacity(n);
    let mut alpha_coeffs = Vec::with_capacity(n);
    for k in 0..n {
        let kk = k as u64;
        let mut a_sum = 0.0;
        let mut alpha_sum = 0.0;
        for j in k..n {
            let jj = j as u64;
            let ratio = falling(nn, jj);
            let common = s0.powi((j - k) as i32) / tau.powi((n - j) as i32);
            let a_int = binomial(jj, kk) * binomial(2 * nn - jj - 1, nn - 1) * ratio;
            let alpha_int = binomial(2 * nn - jj - 1, nn) * binomial(jj, kk) * ratio;
            a_sum += a_int as f64 * common;
            alpha_sum += sign(j - k) * alpha_int as f64 * common;
        }
        let lead = binomial(nn, kk) as f64 * (-s0).powi((n - k) as i32);
        a_coeffs.push(lead + sign(n - k) * a_sum);
        alpha_coeffs.push(sign(n - 1) * growth * alpha_sum);
    }
    Ok(RetardedSpec::new(n, a_coeffs, alpha_coeffs, tau)?)
}

/// The unique `(a, d, bc)` making `s0` a triple root of the scalar DDAE.
///
/// # Panics
/// If `tau` is not positive and finite, or `s0` is not finite.
pub fn ddae_mid(s0: f64, tau: f64) -> MidDdaeConditions {
    assert!(tau > 0.0 && tau.is_finite(), "tau must be positive");
    assert!(s0.is_finite(), "s0 must be finite");
    let e = (s0 * tau).exp();
    MidDdaeConditions {
        a: s0 + 2.0 / tau,
        d: -e,
        bc: -(4.0 / tau) * e,
        s0,
        tau,
    }
}

/// `Some(a - 2 / tau)` when the system satisfies the triple-root conditions
/// for that `s0` to within `tol * exp(s0 tau)`.
pub fn ddae_mid_inverse(sys: &DdaeScalar, tol: f64) -> Option<f64> {
    assert!(tol > 0.0, "tol must be positive");
    let s0 = sys.a - 2.0 / sys.tau;
    let e = (s0 * sys.tau).exp();
    let bc = sys.b * sys.c;
    let ok = (sys.d + e).abs() < tol * e && (bc + 4.0 / sys.tau * e).abs() < tol * e;
    ok.then_some(s0)
}

/// `sin x - x cos x`, whose roots are those of `tan x = x`.
pub fn xi_function(x: f64) -> f64 {
    x.sin() - x * x.cos()
}

/// `xi_0 = 0` and the first `k` positive roots of `tan xi = xi`.
///
/// `g(xi) = sin xi - xi cos xi` has `g' = xi sin xi`, so it is monotone on
/// each `(k pi, k pi + pi / 2)`, where it changes sign exactly once.
pub fn xi_roots(k: usize) -> XiLattice {
    assert!(k >= 1, "K must be at least 1");
    let mut xis = Vec::with_capacity(k + 1);
    xis.push(0.0);
    for j in 1..=k {
        let lo0 = j as f64 * PI;
        let (mut lo, mut hi) = (lo0, lo0 + FRAC_PI_2);
        let g_lo = xi_function(lo);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if xi_function(mid).signum() == g_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 * hi {
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..4 {
            let step = xi_function(x) / (x * x.sin());
            x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x {
                break;
            }
        }
        xis.push(x);
    }
    XiLattice { xis }
}

/// `s0 + 2 i xi_k / tau` for `k = -K..=K`, ascending in imaginary part.
pub fn ddae_root_lattice(s0: f64, tau: f64, k: usize) -> Vec<Complex64> {
    assert!(tau > 0.0, "tau must be positive");
    let xis = xi_roots(k).xis;
    let negative = xis[1..].iter().rev().map(|&x| -x);
    let all = negative.chain(xis.iter().copied());
    all.map(|x| Complex64::new(s0, 2.0 * x / tau)).collect()
}

/// `z - 2 + exp(-z) (z + 2)`.
pub fn normalized_delta(z: Complex64) -> Complex64 {
    z - 2.0 + (-z).exp() * (z + 2.0)
}

/// `|D(z) - z^3 Q(z)|`, where `D` is [`normalized_delta`] and `Q` is the
/// `quad_order`-point Gauss-Legendre value of `int_0^1 t (1 - t) exp(-z t) dt`.
/// Evaluated in double-double so that only quadrature error remains.
pub fn factorization_residual(z: Complex64, quad_order: usize) -> f64 {
    assert!(quad_order >= 8, "quad_order must be at least 8");
    let zd = Cdd::from_f64(z.re, z.im);
    let half = Dd::from_f64(0.5);
    let one = Dd::from_f64(1.0);
    let mut integral = Cdd::from_f64(0.0, 0.0);
    for (x, w) in gauss_legendre(quad_order) {
        let t = (x + one) * half;
        let weight = w * half * t * (one - t);
        integral = integral + (-zd.scale(t)).exp().scale(weight);
    }
    let two = Cdd::from_f64(2.0, 0.0);
    let delta = zd - two + (-zd).exp() * (zd + two);
    let cube = zd * zd * zd;
    (delta - cube * integral).norm()
}

/// Normalized defect of the reflection identity `D(-z) = -exp(z) D(z)`.
pub fn symmetry_residual(z: Complex64) -> f64 {
    let rhs = z.exp() * normalized_delta(z);
    (normalized_delta(-z) + rhs).norm() / (1.0 + rhs.norm())
}

/// `true` iff every root off the imaginary axis lies in the band `|Im| < 2`.
pub fn offaxis_band_check(roots: &[Root]) -> bool {
    roots
        .iter()
        .filter(|r| r.location.re.abs() > 1e-8)
        .all(|r| r.location.im.abs() < 2.0)
}

/// The two equivalent imaginary-axis root tests at `i zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImaginaryRootTest {
    /// `|D(i zeta)|` is below tolerance.
    pub root_of_delta: bool,
    /// `zeta / 2` solves `tan xi = xi`, tested as `sin xi - xi cos xi = 0`.
    pub xi_condition: bool,
}

impl ImaginaryRootTest {
    pub fn agree(&self) -> bool {
        self.root_of_delta == self.xi_condition
    }
}

/// Runs both predicates with tolerance `1e-9 (1 + |zeta|)`.
///
/// Since `D(i zeta) = -4 i exp(-i zeta / 2) (sin(zeta/2) - (zeta/2) cos(zeta/2))`,
/// the second predicate uses a quarter of that tolerance.
pub fn imaginary_root_test(zeta: f64) -> ImaginaryRootTest {
    let tol = 1e-9 * (1.0 + zeta.abs());
    let value = normalized_delta(Complex64::new(0.0, zeta)).norm();
    ImaginaryRootTest {
        root_of_delta: value < tol,
        xi_condition: xi_function(0.5 * zeta).abs() < 0.25 * tol,
    }
}
