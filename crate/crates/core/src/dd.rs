//! Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| <=
//! ulp(hi) / 2`, giving roughly 106 bits of precision.

use std::ops::{Add, Mul, Neg, Sub};

const LN2: Dd = Dd::new(std::f64::consts::LN_2, 2.3190468138462996e-17);
const FRAC_PI_2: Dd = Dd::new(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub(crate) hi: f64,
    pub(crate) lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub(crate) const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub(crate) const fn from_f64(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    pub(crate) fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    pub(crate) fn div(self, b: Dd) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }

    pub(crate) fn sqr(self) -> Self {
        self * self
    }

    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Self {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub(crate) fn exp(self) -> Self {
        if self.hi == 0.0 {
            return Dd::from_f64(1.0);
        }
        let k = (self.hi / LN2.hi).round();
        // Reduce to |r| <= ln2 / 2, then shrink further by 2^4 so the
        // Taylor series converges in a handful of terms.
        let r = (self - LN2.mul_f64(k)).ldexp(-4);
        let mut term = Dd::from_f64(1.0);
        let mut sum = Dd::from_f64(1.0);
        for n in 1..30 {
            term = (term * r).div(Dd::from_f64(n as f64));
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..4 {
            sum = sum.sqr();
        }
        sum.ldexp(k as i32)
    }

    /// `(sin x, cos x)`.
    pub(crate) fn sin_cos(self) -> (Self, Self) {
        let k = (self.hi / FRAC_PI_2.hi).round();
        let r = self - FRAC_PI_2.mul_f64(k);
        let r2 = r.sqr();
        let mut s_term = r;
        let mut sin = r;
        let mut c_term = Dd::from_f64(1.0);
        let mut cos = Dd::from_f64(1.0);
        for n in 1..30 {
            let (a, b) = ((2 * n) as f64, (2 * n + 1) as f64);
            s_term = -(s_term * r2).div(Dd::from_f64(a * b));
            c_term = -(c_term * r2).div(Dd::from_f64((a - 1.0) * a));
            sin = sin + s_term;
            cos = cos + c_term;
            if s_term.hi.abs() < 1e-36 && c_term.hi.abs() < 1e-36 {
                break;
            }
        }
        match (k as i64).rem_euclid(4) {
            0 => (sin, cos),
            1 => (cos, -sin),
            2 => (-sin, -cos),
            _ => (-cos, sin),
        }
    }
}

impl Add for Dd {
    type Output = Dd;

    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Sub for Dd {
    type Output = Dd;

    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;

    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

/// Complex number with double-double parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cdd {
    pub(crate) re: Dd,
    pub(crate) im: Dd,
}

impl Cdd {
    pub(crate) const fn new(re: Dd, im: Dd) -> Self {
        Self { re, im }
    }

    pub(crate) fn from_f64(re: f64, im: f64) -> Self {
        Self::new(Dd::from_f64(re), Dd::from_f64(im))
    }

    pub(crate) fn scale(self, k: Dd) -> Self {
        Self::new(self.re * k, self.im * k)
    }

    pub(crate) fn exp(self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Self::new(m * c, m * s)
    }

    pub(crate) fn norm(self) -> f64 {
        let re = self.re.to_f64();
        let im = self.im.to_f64();
        re.hypot(im)
    }
}

impl Add for Cdd {
    type Output = Cdd;

    fn add(self, b: Cdd) -> Cdd {
        Cdd::new(self.re + b.re, self.im + b.im)
    }
}

impl Sub for Cdd {
    type Output = Cdd;

    fn sub(self, b: Cdd) -> Cdd {
        Cdd::new(self.re - b.re, self.im - b.im)
    }
}

impl Neg for Cdd {
    type Output = Cdd;

    fn neg(self) -> Cdd {
        Cdd::new(-self.re, -self.im)
    }
}

impl Mul for Cdd {
    type Output = Cdd;

    fn mul(self, b: Cdd) -> Cdd {
        Cdd::new(
            self.re * b.re - self.im * b.im,
            self.re * b.im + self.im * b.re,
        )
    }
}
