//! Root location in rectangles of the complex plane.
//!
//! Roots are counted with the argument principle: the phase of `f` is
//! tracked along the rectangle boundary, with segments bisected until no
//! sample-to-sample phase jump exceeds `pi / 2`. Rectangles are quadrisected
//! until each piece holds a single root, which is then polished by Newton's
//! method. A piece that cannot be split any further while still holding
//! several roots is reported as one root of that multiplicity.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quasipoly::{cmp_complex, Quasipolynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("function vanishes on the contour near {0}")]
    BoundaryRoot(Complex64),
    #[error("phase tracking did not converge near {0}")]
    NonConvergent(Complex64),
    #[error("subdivision exceeded the maximum depth")]
    MaxDepth,
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
    #[error("no right half-plane root bound exists for this quasipolynomial")]
    Unbounded,
    #[error("{0} is not a root")]
    NotARoot(Complex64),
}

/// An analytic function the root finder can work with.
pub trait Analytic: Sync {
    fn eval(&self, s: Complex64) -> Complex64;

    /// `order`-th derivative at `s` for `order >= 1`, when available.
    fn derivative(&self, order: usize, s: Complex64) -> Option<Complex64>;

    /// `|f(s)|` relative to the magnitude of the summands that produced it.
    fn relative_residual(&self, s: Complex64) -> f64 {
        self.eval(s).norm()
    }

    /// Any positive multiple of `f(s)`; only its phase is used.
    fn phase_value(&self, s: Complex64) -> Complex64 {
        self.eval(s)
    }

    /// `f'(s) / f(s)`, when the first derivative is available.
    fn log_derivative(&self, s: Complex64) -> Option<Complex64> {
        self.derivative(1, s).map(|d| d / self.eval(s))
    }

    /// Rough phase rotation rate per unit length along the boundary, used to
    /// pick the initial sampling density.
    fn phase_rate(&self) -> f64 {
        0.0
    }

    fn eval_order(&self, order: usize, s: Complex64) -> Option<Complex64> {
        if order == 0 {
            Some(self.eval(s))
        } else {
            self.derivative(order, s)
        }
    }
}

/// A quasipolynomial bundled with its derivatives up to one past its degree.
#[derive(Debug, Clone)]
pub struct QuasiEvaluator {
    chain: Vec<Quasipolynomial>,
    rate: f64,
}

impl QuasiEvaluator {
    pub fn new(q: &Quasipolynomial) -> Self {
        let chain = q.derivative_chain(q.degree() + 1);
        let lambdas = q.terms().iter().map(|t| t.lambda);
        let rate = lambdas.clone().fold(f64::NEG_INFINITY, f64::max)
            - lambdas.fold(f64::INFINITY, f64::min);
        Self {
            chain,
            rate: if rate.is_finite() { rate } else { 0.0 },
        }
    }

    pub fn quasipolynomial(&self) -> &Quasipolynomial {
        &self.chain[0]
    }

    fn shift(&self, s: Complex64) -> f64 {
        self.chain[0]
            .terms()
            .iter()
            .map(|t| t.lambda * s.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `q(s) exp(-shift)`, with the factor folded into each exponential.
fn scaled_eval(q: &Quasipolynomial, s: Complex64, shift: f64) -> Complex64 {
    q.terms()
        .iter()
        .map(|t| {
            let p = t
                .coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c);
            p * Complex64::new(t.lambda * s.re - shift, t.lambda * s.im).exp()
        })
        .sum()
}

impl Analytic for QuasiEvaluator {
    fn eval(&self, s: Complex64) -> Complex64 {
        self.chain[0].evaluate(s)
    }

    fn derivative(&self, order: usize, s: Complex64) -> Option<Complex64> {
        self.chain.get(order).map(|q| q.evaluate(s))
    }

    fn relative_residual(&self, s: Complex64) -> f64 {
        self.chain[0].relative_residual(s)
    }

    fn phase_value(&self, s: Complex64) -> Complex64 {
        let shift = self.shift(s);
        if shift.abs() < 600.0 {
            return self.chain[0].evaluate(s);
        }
        scaled_eval(&self.chain[0], s, shift)
    }

    fn log_derivative(&self, s: Complex64) -> Option<Complex64> {
        let shift = self.shift(s);
        let d = self.chain.get(1)?;
        Some(scaled_eval(d, s, shift) / scaled_eval(&self.chain[0], s, shift))
    }

    fn phase_rate(&self) -> f64 {
        self.rate
    }
}

/// Closure pair `(f, f')`, with unit residual scale.
pub struct FnEvaluator<F, G> {
    f: F,
    df: G,
}

impl<F, G> FnEvaluator<F, G>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    G: Fn(Complex64) -> Complex64 + Sync,
{
    pub fn new(f: F, df: G) -> Self {
        Self { f, df }
    }
}

impl<F, G> Analytic for FnEvaluator<F, G>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    G: Fn(Complex64) -> Complex64 + Sync,
{
    fn eval(&self, s: Complex64) -> Complex64 {
        (self.f)(s)
    }

    fn derivative(&self, order: usize, s: Complex64) -> Option<Complex64> {
        (order == 1).then(|| (self.df)(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, RootError> {
        let all_finite = [re_min, re_max, im_min, im_max]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || re_min >= re_max || im_min >= im_max {
            return Err(RootError::InvalidRectangle(format!(
                "[{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn contains(&self, s: Complex64, slack: f64) -> bool {
        s.re >= self.re_min - slack
            && s.re <= self.re_max + slack
            && s.im >= self.im_min - slack
            && s.im <= self.im_max + slack
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Four sub-rectangles meeting at the point at fractions `(fx, fy)` of
    /// the width and height.
    fn split(&self, fx: f64, fy: f64) -> [Rectangle; 4] {
        let re = self.re_min + fx * self.width();
        let im = self.im_min + fy * self.height();
        let r = |a, b, c, d| Rectangle {
            re_min: a,
            re_max: b,
            im_min: c,
            im_max: d,
        };
        [
            r(self.re_min, re, self.im_min, im),
            r(re, self.re_max, self.im_min, im),
            r(self.re_min, re, im, self.im_max),
            r(re, self.re_max, im, self.im_max),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub location: Complex64,
    pub multiplicity: usize,
    /// Relative residual `|f| / scale` at `location`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Location tolerance: root merging distance and the size below which a
    /// multi-root box is reported as a cluster.
    pub tol: f64,
    /// `|f| < boundary_eps * scale` on the contour is treated as a root on it.
    pub boundary_eps: f64,
    pub max_depth: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            boundary_eps: 1e-12,
            max_depth: 60,
        }
    }
}

impl RootOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

// Off-centre split points, so that symmetric windows are not cut along the
// lines where roots tend to sit.
const SPLITS: [(f64, f64); 8] = [
    (0.5137, 0.4887),
    (0.4581, 0.5371),
    (0.5853, 0.5719),
    (0.3763, 0.3689),
    (0.6702, 0.3107),
    (0.3291, 0.6627),
    (0.7183, 0.7391),
    (0.2617, 0.2459),
];

/// Largest relative residual accepted for a box that could not be split.
const CLUSTER_RESIDUAL_LIMIT: f64 = 1e-6;

pub fn count_roots<F: Analytic + ?Sized>(f: &F, rect: &Rectangle) -> Result<usize, RootError> {
    count_roots_with(f, rect, &RootOptions::default())
}

/// Winding number of `f` around the boundary of `rect`, i.e. the number of
/// roots inside counted with multiplicity.
pub fn count_roots_with<F: Analytic + ?Sized>(
    f: &F,
    rect: &Rectangle,
    opts: &RootOptions,
) -> Result<usize, RootError> {
    let tracker = PhaseTracker { f, opts };
    let corners = rect.corners();
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let len = (b - a).norm();
        let n = 16 + (len * (2.0 + 2.0 * f.phase_rate())).ceil() as usize;
        let mut prev = tracker.sample(a)?;
        for i in 1..=n {
            let p = if i == n {
                b
            } else {
                a + (b - a) * (i as f64 / n as f64)
            };
            let next = tracker.sample(p)?;
            total += tracker.track(prev, next, 0)?;
            prev = next;
        }
    }
    let winding = total / TAU;
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.25 || rounded < 0.0 {
        return Err(RootError::NonConvergent(rect.center()));
    }
    Ok(rounded as usize)
}

struct PhaseTracker<'a, F: ?Sized> {
    f: &'a F,
    opts: &'a RootOptions,
}

/// A boundary sample: point, phase value and `|f'/f|` (zero if unknown).
#[derive(Clone, Copy)]
struct Sample {
    at: Complex64,
    value: Complex64,
    rate: f64,
}

impl<F: Analytic + ?Sized> PhaseTracker<'_, F> {
    fn sample(&self, s: Complex64) -> Result<Sample, RootError> {
        if self.f.relative_residual(s) < self.opts.boundary_eps {
            return Err(RootError::BoundaryRoot(s));
        }
        let value = self.f.phase_value(s);
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(RootError::NonConvergent(s));
        }
        let rate = match self.f.log_derivative(s) {
            Some(l) if l.re.is_finite() && l.im.is_finite() => l.norm(),
            Some(_) => f64::INFINITY,
            None => 0.0,
        };
        Ok(Sample { at: s, value, rate })
    }

    /// Phase increment from `a` to `b`. A half-segment is trusted only if
    /// its phase step is at most `pi / 4` and its length times the largest
    /// sampled `|f'/f|` is at most `pi / 4`; the second test catches roots
    /// close to a long segment, whose phase sweep could otherwise alias.
    fn track(&self, a: Sample, b: Sample, depth: usize) -> Result<f64, RootError> {
        let m = self.sample(0.5 * (a.at + b.at))?;
        let d1 = (m.value * a.value.conj()).arg();
        let d2 = (b.value * m.value.conj()).arg();
        let half = 0.5 * (b.at - a.at).norm();
        let rate = a.rate.max(m.rate).max(b.rate);
        if d1.abs() <= FRAC_PI_4 && d2.abs() <= FRAC_PI_4 && half * rate <= FRAC_PI_4 {
            return Ok(d1 + d2);
        }
        if depth >= self.opts.max_depth {
            return Err(RootError::NonConvergent(m.at));
        }
        Ok(self.track(a, m, depth + 1)? + self.track(m, b, depth + 1)?)
    }
}

pub fn find_roots<F: Analytic + ?Sized>(
    f: &F,
    rect: &Rectangle,
    tol: f64,
) -> Result<Vec<Root>, RootError> {
    assert!(tol > 0.0, "tol must be positive");
    find_roots_with(f, rect, &RootOptions::with_tol(tol))
}

/// All roots inside `rect`, sorted by `(Re, Im)`. Multiplicities add up to
/// [`count_roots_with`] on the same rectangle.
pub fn find_roots_with<F: Analytic + ?Sized>(
    f: &F,
    rect: &Rectangle,
    opts: &RootOptions,
) -> Result<Vec<Root>, RootError> {
    let total = count_roots_with(f, rect, opts)?;
    let roots = solve_box(f, *rect, total, 0, opts)?;
    let mut roots = merge_close(roots, opts.tol);
    roots.sort_by(|a, b| cmp_complex(&a.location, &b.location));
    Ok(roots)
}

fn solve_box<F: Analytic + ?Sized>(
    f: &F,
    rect: Rectangle,
    n: usize,
    depth: usize,
    opts: &RootOptions,
) -> Result<Vec<Root>, RootError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        if let Some(root) = newton_in_box(f, &rect, 0, 1, opts) {
            return Ok(vec![root]);
        }
    }
    if rect.diameter() <= opts.tol {
        return Ok(vec![cluster(f, &rect, n, opts)]);
    }
    if depth >= opts.max_depth {
        return Err(RootError::MaxDepth);
    }
    for &(fx, fy) in &SPLITS {
        let kids = rect.split(fx, fy);
        let counts: Result<Vec<usize>, RootError> = kids
            .par_iter()
            .map(|k| count_roots_with(f, k, opts))
            .collect();
        match counts {
            Ok(counts) if counts.iter().sum::<usize>() == n => {
                let parts: Result<Vec<Vec<Root>>, RootError> = kids
                    .par_iter()
                    .zip(counts.par_iter())
                    .map(|(k, &c)| solve_box(f, *k, c, depth + 1, opts))
                    .collect();
                return Ok(parts?.into_iter().flatten().collect());
            }
            Ok(_) | Err(RootError::BoundaryRoot(_)) | Err(RootError::NonConvergent(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    // Every split line passes too close to a root: the roots in this box
    // cannot be told apart at working precision.
    let root = cluster(f, &rect, n, opts);
    if root.residual > CLUSTER_RESIDUAL_LIMIT {
        return Err(RootError::NonConvergent(rect.center()));
    }
    Ok(vec![root])
}

/// Newton iteration on `f^(order)` scaled by `mult`, started at the box
/// centre. Accepted only if it converges inside the box.
fn newton_in_box<F: Analytic + ?Sized>(
    f: &F,
    rect: &Rectangle,
    order: usize,
    mult: usize,
    opts: &RootOptions,
) -> Option<Root> {
    let center = rect.center();
    let mut z = center;
    let mut last_step = f64::INFINITY;
    for _ in 0..100 {
        let g = f.eval_order(order, z)?;
        let dg = f.eval_order(order + 1, z)?;
        if dg.norm() == 0.0 {
            break;
        }
        let step = g / dg * mult as f64;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        z -= step;
        last_step = step.norm();
        if last_step <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
        if (z - center).norm() > 10.0 * rect.diameter() + 1.0 {
            return None;
        }
    }
    if last_step > opts.tol || !rect.contains(z, opts.tol) {
        return None;
    }
    let residual = f.relative_residual(z);
    (order > 0 || residual <= opts.tol).then_some(Root {
        location: z,
        multiplicity: mult.max(1),
        residual,
    })
}

fn cluster<F: Analytic + ?Sized>(f: &F, rect: &Rectangle, n: usize, opts: &RootOptions) -> Root {
    let center = rect.center();
    let refined = if f.eval_order(n, center).is_some() {
        // A root of multiplicity n is a simple root of f^(n-1).
        newton_in_box(f, rect, n - 1, 1, opts)
    } else {
        newton_in_box(f, rect, 0, n, opts)
    };
    let location = refined.map_or(center, |r| r.location);
    Root {
        location,
        multiplicity: n,
        residual: f.relative_residual(location),
    }
}

fn merge_close(roots: Vec<Root>, tol: f64) -> Vec<Root> {
    let mut merged: Vec<Root> = Vec::with_capacity(roots.len());
    for r in roots {
        match merged
            .iter_mut()
            .find(|m| (m.location - r.location).norm() <= tol)
        {
            Some(m) => {
                if r.residual < m.residual {
                    m.location = r.location;
                    m.residual = r.residual;
                }
                m.multiplicity += r.multiplicity;
            }
            None => merged.push(r),
        }
    }
    merged
}

/// A real `sigma` such that `q` has no roots with `Re s >= sigma`, or `None`
/// when the highest-shift term does not carry the highest polynomial degree
/// (roots then escape to the right).
pub fn right_root_bound(q: &Quasipolynomial) -> Option<f64> {
    let (lead_term, rest) = q.terms().split_last()?;
    let d0 = lead_term.degree();
    if rest.iter().any(|t| t.degree() > d0) {
        return None;
    }
    let lead = lead_term.coeffs[d0].abs();
    let holds = |sigma: f64| {
        let lhs = lead
            - lead_term.coeffs[..d0]
                .iter()
                .enumerate()
                .map(|(j, c)| c.abs() * sigma.powi(j as i32 - d0 as i32))
                .sum::<f64>();
        let rhs: f64 = rest
            .iter()
            .map(|t| {
                ((t.lambda - lead_term.lambda) * sigma).exp()
                    * t.coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, c)| c.abs() * sigma.powi(j as i32 - d0 as i32))
                        .sum::<f64>()
            })
            .sum();
        lhs > rhs
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while !holds(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // The infimum itself may be a root; step clear of it.
    Some(hi + 0.05 * (1.0 + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralAbscissa {
    pub value: f64,
    /// No root was found in the search window; `value` is its left edge.
    pub empty: bool,
    pub window: Rectangle,
}

/// Largest real part of the roots with `Re s >= re_floor` and
/// `|Im s| <= im_cap`. The right edge of the search window comes from
/// [`right_root_bound`].
pub fn spectral_abscissa(
    q: &Quasipolynomial,
    re_floor: f64,
    im_cap: f64,
) -> Result<SpectralAbscissa, RootError> {
    let ceiling = right_root_bound(q).ok_or(RootError::Unbounded)?;
    if ceiling <= re_floor {
        return Ok(SpectralAbscissa {
            value: re_floor,
            empty: true,
            window: Rectangle::new(re_floor, re_floor + 1.0, -im_cap, im_cap)?,
        });
    }
    let window = Rectangle::new(re_floor, ceiling, -im_cap, im_cap)?;
    spectral_abscissa_in(q, &window, &RootOptions::default())
}

/// Largest real part of the roots in an explicit window.
pub fn spectral_abscissa_in(
    q: &Quasipolynomial,
    window: &Rectangle,
    opts: &RootOptions,
) -> Result<SpectralAbscissa, RootError> {
    let roots = find_roots_with(&QuasiEvaluator::new(q), window, opts)?;
    let best = roots
        .iter()
        .map(|r| r.location.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(if roots.is_empty() {
        SpectralAbscissa {
            value: window.re_min,
            empty: true,
            window: *window,
        }
    } else {
        SpectralAbscissa {
            value: best,
            empty: false,
            window: *window,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominance {
    StrictlyDominant,
    Dominant,
    NotDominant,
}

/// Real parts closer than this (scaled by `1 + |s0|`) count as equal.
pub const DOMINANCE_TIE_TOL: f64 = 1e-7;

/// Classifies the root `s0` against the other roots found in `rect`.
pub fn is_dominant(
    q: &Quasipolynomial,
    s0: Complex64,
    rect: &Rectangle,
) -> Result<Dominance, RootError> {
    is_dominant_with(q, s0, rect, &RootOptions::default())
}

pub fn is_dominant_with(
    q: &Quasipolynomial,
    s0: Complex64,
    rect: &Rectangle,
    opts: &RootOptions,
) -> Result<Dominance, RootError> {
    let ev = QuasiEvaluator::new(q);
    if ev.relative_residual(s0) > 1e-8 {
        return Err(RootError::NotARoot(s0));
    }
    let roots = find_roots_with(&ev, rect, opts)?;
    Ok(classify_dominance(&roots, s0))
}

/// Dominance verdict for `s0` given the full root list of a window.
pub fn classify_dominance(roots: &[Root], s0: Complex64) -> Dominance {
    let tie = DOMINANCE_TIE_TOL * (1.0 + s0.norm());
    let mut tied = false;
    for r in roots {
        if (r.location - s0).norm() <= tie * 10.0 {
            continue;
        }
        if r.location.re > s0.re + tie {
            return Dominance::NotDominant;
        }
        if (r.location.re - s0.re).abs() <= tie {
            tied = true;
        }
    }
    if tied {
        Dominance::Dominant
    } else {
        Dominance::StrictlyDominant
    }
}

/// `re,im,multiplicity,residual` with a header row.
pub fn roots_to_csv(roots: &[Root]) -> String {
    let mut out = String::from("re,im,multiplicity,residual\n");
    for r in roots {
        let _ = writeln!(
            out,
            "{:?},{:?},{},{:?}",
            r.location.re, r.location.im, r.multiplicity, r.residual
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasipoly::Term;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rect(a: f64, b: f64, c: f64, d: f64) -> Rectangle {
        Rectangle::new(a, b, c, d).unwrap()
    }

    fn delta_hat() -> QuasiEvaluator {
        QuasiEvaluator::new(
            &Quasipolynomial::new(vec![
                Term::new(vec![-2.0, 1.0], 0.0),
                Term::new(vec![2.0, 1.0], -1.0),
            ])
            .unwrap(),
        )
    }

    fn poly(coeffs: &[f64]) -> QuasiEvaluator {
        QuasiEvaluator::new(&Quasipolynomial::polynomial(coeffs.to_vec()).unwrap())
    }

    #[test]
    fn rectangle_validation() {
        assert!(Rectangle::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(Rectangle::new(0.0, 1.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(
            count_roots(&delta_hat(), &rect(-1.0, 1.0, -1.0, 1.0)).unwrap(),
            3
        );
        assert_eq!(
            count_roots(&delta_hat(), &rect(0.5, 3.0, 0.0, 3.0)).unwrap(),
            0
        );
        let p = poly(&[2.0, -3.0, 1.0]);
        assert_eq!(count_roots(&p, &rect(0.0, 3.0, -1.0, 1.0)).unwrap(), 2);
    }

    #[test]
    fn boundary_root_is_reported() {
        let p = poly(&[2.0, -3.0, 1.0]);
        let err = count_roots(&p, &rect(1.0, 3.0, -1.0, 1.0)).unwrap_err();
        assert!(matches!(err, RootError::BoundaryRoot(_)));
    }

    #[test]
    fn closure_evaluator() {
        let f = FnEvaluator::new(|s: Complex64| s * s + 1.0, |s: Complex64| 2.0 * s);
        let roots = find_roots(&f, &rect(-1.0, 1.3, -2.0, 2.1), 1e-10).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].location - c(0.0, -1.0)).norm() < 1e-12);
        assert!((roots[1].location - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn double_root_of_retarded_example() {
        // s - 1 + exp(-s)
        let q = Quasipolynomial::new(vec![
            Term::new(vec![-1.0, 1.0], 0.0),
            Term::new(vec![1.0], -1.0),
        ])
        .unwrap();
        let roots =
            find_roots(&QuasiEvaluator::new(&q), &rect(-1.0, 1.0, -1.0, 1.0), 1e-10).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].multiplicity, 2);
        assert!(roots[0].location.norm() < 1e-10);
    }

    #[test]
    fn triple_polynomial_root() {
        let p = poly(&[1.0, 3.0, 3.0, 1.0]);
        let roots = find_roots(&p, &rect(-2.0, 0.5, -1.0, 1.2), 1e-10).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].multiplicity, 3);
        assert!((roots[0].location - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn right_bound_examples() {
        let b = right_root_bound(&Quasipolynomial::polynomial(vec![-1.0, 1.0]).unwrap()).unwrap();
        assert!(b > 1.0 && b < 1.2);
        let advanced = Quasipolynomial::new(vec![
            Term::new(vec![0.0, 0.0, 1.0], -1.0),
            Term::new(vec![1.0], 0.0),
        ])
        .unwrap();
        assert!(right_root_bound(&advanced).is_none());
    }

    #[test]
    fn spectral_abscissa_of_linear_polynomial() {
        let q = Quasipolynomial::polynomial(vec![-1.0, 1.0]).unwrap();
        let sa = spectral_abscissa(&q, 0.0, 5.0).unwrap();
        assert!(!sa.empty);
        assert!((sa.value - 1.0).abs() < 1e-12);
        let none = spectral_abscissa(&q, 3.0, 5.0).unwrap();
        assert!(none.empty);
    }

    #[test]
    fn dominance_examples() {
        let q = Quasipolynomial::polynomial(vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            is_dominant(&q, c(-1.0, 0.0), &rect(-2.1, 2.2, -1.0, 1.3)).unwrap(),
            Dominance::NotDominant
        );
        assert_eq!(
            is_dominant(&q, c(1.0, 0.0), &rect(-2.1, 2.2, -1.0, 1.3)).unwrap(),
            Dominance::StrictlyDominant
        );
        assert!(matches!(
            is_dominant(&q, c(0.5, 0.0), &rect(-2.1, 2.2, -1.0, 1.3)),
            Err(RootError::NotARoot(_))
        ));
    }

    #[test]
    fn csv_format() {
        let csv = roots_to_csv(&[Root {
            location: c(0.5, -2.0),
            multiplicity: 2,
            residual: 0.0,
        }]);
        assert_eq!(csv, "re,im,multiplicity,residual\n0.5,-2.0,2,0.0\n");
    }
}
