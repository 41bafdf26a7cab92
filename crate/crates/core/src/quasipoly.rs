//! Characteristic quasipolynomials of linear delay systems.
//!
//! A quasipolynomial is stored as a finite list of `(P_k, lambda_k)` pairs
//! standing for `sum_k P_k(s) exp(lambda_k s)`. Polynomial coefficients are
//! kept in ascending order of degree and evaluated with Horner's scheme.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::{FeedbackGains, FeedbackPlant};
use crate::linalg::{det_lu, CMatrix};

/// Default relative tolerance used by [`Quasipolynomial::multiplicity_at`].
pub const DEFAULT_MULTIPLICITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuasiError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// One `P(s) exp(lambda s)` summand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Polynomial coefficients, ascending in degree.
    pub coeffs: Vec<f64>,
    pub lambda: f64,
}

impl Term {
    pub fn new(coeffs: Vec<f64>, lambda: f64) -> Self {
        Self { coeffs, lambda }
    }

    /// Degree of the polynomial factor (the term is assumed trimmed).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuasipolynomialRepr", into = "QuasipolynomialRepr")]
pub struct Quasipolynomial {
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct QuasipolynomialRepr {
    terms: Vec<Term>,
}

impl TryFrom<QuasipolynomialRepr> for Quasipolynomial {
    type Error = QuasiError;

    fn try_from(repr: QuasipolynomialRepr) -> Result<Self, Self::Error> {
        Quasipolynomial::new(repr.terms)
    }
}

impl From<Quasipolynomial> for QuasipolynomialRepr {
    fn from(q: Quasipolynomial) -> Self {
        Self { terms: q.terms }
    }
}

/// Multiplicity estimate returned by [`Quasipolynomial::multiplicity_at`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub order: usize,
    /// Set when every derivative up to the degree looked like zero, so the
    /// order was capped at the degree rather than observed.
    pub saturated: bool,
}

impl Quasipolynomial {
    /// Builds a quasipolynomial, merging terms with equal shifts, trimming
    /// trailing zero coefficients, dropping zero polynomials and sorting by
    /// shift.
    pub fn new(terms: Vec<Term>) -> Result<Self, QuasiError> {
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for term in terms {
            if !term.lambda.is_finite() {
                return Err(QuasiError::NonFinite("lambda"));
            }
            if term.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(QuasiError::NonFinite("coeffs"));
            }
            match merged.iter_mut().find(|t| t.lambda == term.lambda) {
                Some(existing) => poly_add_assign(&mut existing.coeffs, &term.coeffs),
                None => merged.push(term),
            }
        }
        for term in &mut merged {
            trim(&mut term.coeffs);
        }
        merged.retain(|t| !t.coeffs.is_empty());
        merged.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
        Ok(Self { terms: merged })
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Term::new(vec![c], 0.0)]).expect("finite constant")
    }

    /// Plain polynomial with ascending coefficients.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self, QuasiError> {
        Self::new(vec![Term::new(coeffs, 0.0)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `D = l + sum d_k` where `l + 1` is the number of terms. The zero
    /// quasipolynomial reports 0.
    pub fn degree(&self) -> usize {
        if self.terms.is_empty() {
            return 0;
        }
        self.terms.len() - 1 + self.terms.iter().map(Term::degree).sum::<usize>()
    }

    pub fn evaluate(&self, s: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| horner(&t.coeffs, s) * (s * t.lambda).exp())
            .sum()
    }

    /// Term-wise derivative `(P exp(lambda s))' = (P' + lambda P) exp(lambda s)`.
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut coeffs: Vec<f64> = t.coeffs.iter().map(|c| c * t.lambda).collect();
                for (j, c) in t.coeffs.iter().enumerate().skip(1) {
                    coeffs[j - 1] += j as f64 * c;
                }
                Term::new(coeffs, t.lambda)
            })
            .collect();
        Self::new(terms).expect("derivative of finite terms is finite")
    }

    pub fn nth_derivative(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |q, _| q.derivative())
    }

    /// `[q, q', ..., q^(order)]`.
    pub fn derivative_chain(&self, order: usize) -> Vec<Self> {
        let mut chain = Vec::with_capacity(order + 1);
        chain.push(self.clone());
        for k in 0..order {
            let next = chain[k].derivative();
            chain.push(next);
        }
        chain
    }

    /// Largest term magnitude at `s`, each polynomial measured with absolute
    /// coefficients so that cancellation inside a term does not shrink it.
    pub fn scale_at(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.terms
            .iter()
            .map(|t| abs_horner(&t.coeffs, r) * (t.lambda * s.re).exp())
            .fold(0.0, f64::max)
    }

    /// `|q(s)| / scale_at(s)`, computed with the largest exponential factored
    /// out so that it stays finite where `exp` itself would overflow.
    pub fn relative_residual(&self, s: Complex64) -> f64 {
        self.residual_of(self, 0, s)
    }

    /// Scale for the `order`-th derivative at `s`: the largest term of
    /// `sum |c_j| |lambda|^i j!/(j-m)! |s|^(j-m) exp(lambda Re s)` over the
    /// Leibniz expansion, so that cancellation inside a derivative does not
    /// shrink it. For `order = 0` this is [`Self::scale_at`].
    pub fn derivative_scale(&self, order: usize, s: Complex64) -> f64 {
        let r = s.norm();
        self.terms
            .iter()
            .map(|t| abs_horner(&majorant(t, order), r) * (t.lambda * s.re).exp())
            .fold(0.0, f64::max)
    }

    /// `|q^(order)(s)| / derivative_scale(order, s)`, overflow-safe.
    pub fn derivative_residual(&self, order: usize, s: Complex64) -> f64 {
        self.residual_of(&self.nth_derivative(order), order, s)
    }

    fn residual_of(&self, deriv: &Self, order: usize, s: Complex64) -> f64 {
        let Some(shift) = self
            .terms
            .iter()
            .map(|t| t.lambda * s.re)
            .max_by(f64::total_cmp)
        else {
            return 0.0;
        };
        let r = s.norm();
        let weight = |lambda: f64| Complex64::new(lambda * s.re - shift, lambda * s.im).exp();
        let value: Complex64 = deriv
            .terms
            .iter()
            .map(|t| horner(&t.coeffs, s) * weight(t.lambda))
            .sum();
        let scale = self
            .terms
            .iter()
            .map(|t| abs_horner(&majorant(t, order), r) * weight(t.lambda).norm())
            .fold(0.0, f64::max);
        let v = value.norm();
        if scale == 0.0 {
            if v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            v / scale
        }
    }

    /// Smallest `k` such that `derivative_residual(k, s0) > rel_tol`, capped
    /// at the degree (with `saturated` set when the cap is reached).
    pub fn multiplicity_at(&self, s0: Complex64, rel_tol: f64) -> Multiplicity {
        assert!(rel_tol > 0.0, "rel_tol must be positive");
        let degree = self.degree();
        if self.is_zero() {
            return Multiplicity {
                order: 0,
                saturated: true,
            };
        }
        let mut q = self.clone();
        for k in 0..=degree {
            if self.residual_of(&q, k, s0) > rel_tol {
                return Multiplicity {
                    order: k,
                    saturated: false,
                };
            }
            q = q.derivative();
        }
        Multiplicity {
            order: degree,
            saturated: true,
        }
    }

    /// `z -> tau * q(z / tau + s0)`. Roots `s` of `q` map to `tau (s - s0)`.
    pub fn normalize(&self, s0: f64, tau: f64) -> Result<Self, QuasiError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(QuasiError::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        if !s0.is_finite() {
            return Err(QuasiError::NonFinite("s0"));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let factor = tau * (t.lambda * s0).exp();
                let mut scale = factor;
                let coeffs = taylor_shift(&t.coeffs, s0)
                    .into_iter()
                    .map(|c| {
                        let v = c * scale;
                        scale /= tau;
                        v
                    })
                    .collect();
                Term::new(coeffs, t.lambda / tau)
            })
            .collect();
        Self::new(terms)
    }

    /// `s - a - exp(-s tau) (s d - a d + b c)`.
    pub fn from_ddae_scalar(sys: &DdaeScalar) -> Self {
        let DdaeScalar { a, b, c, d, tau } = *sys;
        Self::new(vec![
            Term::new(vec![-a, 1.0], 0.0),
            Term::new(vec![a * d - b * c, -d], -tau),
        ])
        .expect("validated system")
    }

    /// `s^n + sum a_k s^k + exp(-s tau) sum alpha_k s^k`.
    pub fn from_retarded(spec: &RetardedSpec) -> Self {
        let mut undelayed = spec.a_coeffs.clone();
        undelayed.push(1.0);
        Self::new(vec![
            Term::new(undelayed, 0.0),
            Term::new(spec.alpha_coeffs.clone(), -spec.tau),
        ])
        .expect("validated spec")
    }

    /// Closed loop of the two-output delayed feedback plant:
    /// `s - a - exp(-s tau) ((d1 k1 + d2 k2) s - k1 delta1 - k2 delta2)`.
    pub fn from_feedback(plant: &FeedbackPlant, gains: &FeedbackGains) -> Self {
        let [delta1, delta2] = plant.deltas();
        let slope = plant.d[0] * gains.k1 + plant.d[1] * gains.k2;
        let offset = gains.k1 * delta1 + gains.k2 * delta2;
        Self::new(vec![
            Term::new(vec![-plant.a, 1.0], 0.0),
            Term::new(vec![offset, -slope], -plant.tau),
        ])
        .expect("validated plant")
    }
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn abs_horner(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
}

/// Coefficients of the `order`-th derivative of `|P|(s) exp(|lambda| s)`.
fn majorant(t: &Term, order: usize) -> Vec<f64> {
    let mu = t.lambda.abs();
    let mut c: Vec<f64> = t.coeffs.iter().map(|v| v.abs()).collect();
    for _ in 0..order {
        let mut next = vec![0.0; c.len()];
        for (j, v) in c.iter().enumerate() {
            next[j] += mu * v;
            if j > 0 {
                next[j - 1] += j as f64 * v;
            }
        }
        c = next;
    }
    c
}

fn trim(coeffs: &mut Vec<f64>) {
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
}

fn poly_add_assign(acc: &mut Vec<f64>, other: &[f64]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), 0.0);
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

/// Coefficients of `w -> P(s0 + w)` by repeated synthetic division.
fn taylor_shift(coeffs: &[f64], s0: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            c[j] += s0 * c[j + 1];
        }
    }
    c
}

fn check_tau(tau: f64) -> Result<(), QuasiError> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(QuasiError::InvalidParameter(format!(
            "tau must be positive and finite, got {tau}"
        )))
    }
}

fn check_finite(values: &[f64], what: &'static str) -> Result<(), QuasiError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(QuasiError::NonFinite(what))
    }
}

/// Scalar single-delay system `x' = a x + b y(t - tau)`, `y = c x + d y(t - tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DdaeScalarRepr")]
pub struct DdaeScalar {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tau: f64,
}

#[derive(Deserialize)]
struct DdaeScalarRepr {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    tau: f64,
}

impl TryFrom<DdaeScalarRepr> for DdaeScalar {
    type Error = QuasiError;

    fn try_from(r: DdaeScalarRepr) -> Result<Self, Self::Error> {
        DdaeScalar::new(r.a, r.b, r.c, r.d, r.tau)
    }
}

impl DdaeScalar {
    pub fn new(a: f64, b: f64, c: f64, d: f64, tau: f64) -> Result<Self, QuasiError> {
        check_finite(&[a, b, c, d], "system coefficients")?;
        check_tau(tau)?;
        Ok(Self { a, b, c, d, tau })
    }
}

/// Order-`n` scalar retarded equation with a single delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RetardedSpecRepr")]
pub struct RetardedSpec {
    pub n: usize,
    /// `a_0 .. a_{n-1}`.
    pub a_coeffs: Vec<f64>,
    /// `alpha_0 .. alpha_{n-1}`.
    pub alpha_coeffs: Vec<f64>,
    pub tau: f64,
}

#[derive(Deserialize)]
struct RetardedSpecRepr {
    n: usize,
    a_coeffs: Vec<f64>,
    alpha_coeffs: Vec<f64>,
    tau: f64,
}

impl TryFrom<RetardedSpecRepr> for RetardedSpec {
    type Error = QuasiError;

    fn try_from(r: RetardedSpecRepr) -> Result<Self, Self::Error> {
        RetardedSpec::new(r.n, r.a_coeffs, r.alpha_coeffs, r.tau)
    }
}

impl RetardedSpec {
    pub fn new(
        n: usize,
        a_coeffs: Vec<f64>,
        alpha_coeffs: Vec<f64>,
        tau: f64,
    ) -> Result<Self, QuasiError> {
        if n == 0 {
            return Err(QuasiError::InvalidParameter(
                "order n must be at least 1".into(),
            ));
        }
        if a_coeffs.len() != n || alpha_coeffs.len() != n {
            return Err(QuasiError::Dimension(format!(
                "expected {n} coefficients, got {} and {}",
                a_coeffs.len(),
                alpha_coeffs.len()
            )));
        }
        check_finite(&a_coeffs, "a_coeffs")?;
        check_finite(&alpha_coeffs, "alpha_coeffs")?;
        check_tau(tau)?;
        Ok(Self {
            n,
            a_coeffs,
            alpha_coeffs,
            tau,
        })
    }
}

/// Dense real matrix, serialized as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, QuasiError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(QuasiError::Dimension("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(QuasiError::Dimension("ragged matrix rows".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        check_finite(&data, "matrix entries")?;
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `self * v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for RealMatrix {
    type Error = QuasiError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        RealMatrix::from_rows(rows)
    }
}

impl From<RealMatrix> for Vec<Vec<f64>> {
    fn from(m: RealMatrix) -> Self {
        m.data.chunks(m.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Delay differential-algebraic system
/// `x' = A x + sum_k B_k y(t - tau_k)`, `y = C x + sum_k D_k y(t - tau_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixDdaeRepr")]
pub struct MatrixDdae {
    pub a: RealMatrix,
    pub b: Vec<RealMatrix>,
    pub c: RealMatrix,
    pub d: Vec<RealMatrix>,
    pub taus: Vec<f64>,
}

#[derive(Deserialize)]
struct MatrixDdaeRepr {
    a: RealMatrix,
    b: Vec<RealMatrix>,
    c: RealMatrix,
    d: Vec<RealMatrix>,
    taus: Vec<f64>,
}

impl TryFrom<MatrixDdaeRepr> for MatrixDdae {
    type Error = QuasiError;

    fn try_from(r: MatrixDdaeRepr) -> Result<Self, Self::Error> {
        MatrixDdae::new(r.a, r.b, r.c, r.d, r.taus)
    }
}

impl MatrixDdae {
    pub fn new(
        a: RealMatrix,
        b: Vec<RealMatrix>,
        c: RealMatrix,
        d: Vec<RealMatrix>,
        taus: Vec<f64>,
    ) -> Result<Self, QuasiError> {
        let dx = a.rows();
        let dy = c.rows();
        if a.cols() != dx {
            return Err(QuasiError::Dimension("A must be square".into()));
        }
        if c.cols() != dx {
            return Err(QuasiError::Dimension(format!("C must be {dy}x{dx}")));
        }
        let n = taus.len();
        if n == 0 || b.len() != n || d.len() != n {
            return Err(QuasiError::Dimension(format!(
                "need N >= 1 delays with matching B_k, D_k (got {} taus, {} B, {} D)",
                n,
                b.len(),
                d.len()
            )));
        }
        if b.iter().any(|m| m.rows() != dx || m.cols() != dy) {
            return Err(QuasiError::Dimension(format!(
                "every B_k must be {dx}x{dy}"
            )));
        }
        if d.iter().any(|m| m.rows() != dy || m.cols() != dy) {
            return Err(QuasiError::Dimension(format!(
                "every D_k must be {dy}x{dy}"
            )));
        }
        for &tau in &taus {
            check_tau(tau)?;
        }
        Ok(Self { a, b, c, d, taus })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn algebraic_dim(&self) -> usize {
        self.c.rows()
    }

    pub fn from_scalar(sys: &DdaeScalar) -> Self {
        let m = |v: f64| RealMatrix::from_rows(vec![vec![v]]).expect("finite scalar");
        Self::new(
            m(sys.a),
            vec![m(sys.b)],
            m(sys.c),
            vec![m(sys.d)],
            vec![sys.tau],
        )
        .expect("validated system")
    }

    /// Closed loop of the delayed output feedback `u = K y(t - tau)` with
    /// one state, one input and two outputs.
    pub fn from_feedback(plant: &FeedbackPlant, gains: &FeedbackGains) -> Self {
        let k = [gains.k1, gains.k2];
        let rows = |v: Vec<Vec<f64>>| RealMatrix::from_rows(v).expect("finite entries");
        let a = rows(vec![vec![plant.a]]);
        let b = rows(vec![vec![plant.b * k[0], plant.b * k[1]]]);
        let c = rows(vec![vec![plant.c[0]], vec![plant.c[1]]]);
        let d = rows(vec![
            vec![plant.d[0] * k[0], plant.d[0] * k[1]],
            vec![plant.d[1] * k[0], plant.d[1] * k[1]],
        ]);
        Self::new(a, vec![b], c, vec![d], vec![plant.tau]).expect("validated plant")
    }

    /// `det(s E - A_hat - sum_k exp(-s tau_k) B_hat_k)` with the block
    /// matrices `E = [I 0; 0 0]`, `A_hat = [A 0; C -I]`, `B_hat_k = [0 B_k; 0 D_k]`.
    pub fn char_eval(&self, s: Complex64) -> Complex64 {
        let dx = self.state_dim();
        let dy = self.algebraic_dim();
        let n = dx + dy;
        let mut m = CMatrix::zeros(n);
        for i in 0..dx {
            for j in 0..dx {
                m[(i, j)] = Complex64::from(-self.a.get(i, j));
            }
            m[(i, i)] += s;
        }
        for i in 0..dy {
            for j in 0..dx {
                m[(dx + i, j)] = Complex64::from(-self.c.get(i, j));
            }
            m[(dx + i, dx + i)] = Complex64::from(1.0);
        }
        for ((bk, dk), &tau) in self.b.iter().zip(&self.d).zip(&self.taus) {
            let e = (-s * tau).exp();
            for j in 0..dy {
                for i in 0..dx {
                    m[(i, dx + j)] -= e * bk.get(i, j);
                }
                for i in 0..dy {
                    m[(dx + i, dx + j)] -= e * dk.get(i, j);
                }
            }
        }
        det_lu(m)
    }
}

/// Free-function form of [`MatrixDdae::char_eval`].
pub fn matrix_char_eval(sys: &MatrixDdae, s: Complex64) -> Complex64 {
    sys.char_eval(s)
}

pub(crate) fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}
