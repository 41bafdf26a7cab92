//! Delayed output feedback design for a scalar plant with two delayed
//! outputs, and the transmission-line circuit parameter map.
//!
//! The plant is `x' = a x + b u`, `y_i = c_i x + d_i u(t - tau)` driven by
//! `u = k1 y_1(t - tau) + k2 y_2(t - tau)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quasipoly::{
    DdaeScalar, Multiplicity, QuasiError, Quasipolynomial, DEFAULT_MULTIPLICITY_TOL,
};
use crate::rootfinder::{
    classify_dominance, find_roots_with, right_root_bound, Analytic, Dominance, QuasiEvaluator,
    Rectangle, Root, RootError, RootOptions,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeedbackError {
    #[error("no delayed feedback places a dominant triple root: need a <= 0 or tau < 2/a")]
    NotStabilizable,
    #[error("the gain equations have no solution")]
    Unsolvable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeedbackPlantRepr")]
pub struct FeedbackPlant {
    pub a: f64,
    pub b: f64,
    pub c: [f64; 2],
    pub d: [f64; 2],
    pub tau: f64,
}

#[derive(Deserialize)]
struct FeedbackPlantRepr {
    a: f64,
    b: f64,
    c: [f64; 2],
    d: [f64; 2],
    tau: f64,
}

impl TryFrom<FeedbackPlantRepr> for FeedbackPlant {
    type Error = QuasiError;

    fn try_from(r: FeedbackPlantRepr) -> Result<Self, Self::Error> {
        FeedbackPlant::new(r.a, r.b, r.c, r.d, r.tau)
    }
}

impl FeedbackPlant {
    pub fn new(a: f64, b: f64, c: [f64; 2], d: [f64; 2], tau: f64) -> Result<Self, QuasiError> {
        if ![a, b, c[0], c[1], d[0], d[1]].iter().all(|v| v.is_finite()) {
            return Err(QuasiError::NonFinite("plant coefficients"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(QuasiError::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        Ok(Self { a, b, c, d, tau })
    }

    /// `delta_i = a d_i - b c_i`.
    pub fn deltas(&self) -> [f64; 2] {
        [
            self.a * self.d[0] - self.b * self.c[0],
            self.a * self.d[1] - self.b * self.c[1],
        ]
    }

    /// Decay rate targeted by the design, `a - 2 / tau`.
    pub fn target_root(&self) -> f64 {
        self.a - 2.0 / self.tau
    }

    /// Right-hand side of the gain equations,
    /// `(-1, 4/tau - a) exp(a tau - 2)`.
    fn gain_rhs(&self) -> [f64; 2] {
        let e = (self.a * self.tau - 2.0).exp();
        [-e, (4.0 / self.tau - self.a) * e]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGains {
    pub k1: f64,
    pub k2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solvability {
    Unique,
    InfinitelyMany,
    None,
}

/// Solution structure of the gain equations
/// `d . k = -exp(a tau - 2)`, `delta . k = (4/tau - a) exp(a tau - 2)`.
pub fn solvability(plant: &FeedbackPlant) -> Solvability {
    let d = plant.d;
    let delta = plant.deltas();
    let det = d[0] * delta[1] - d[1] * delta[0];
    let norm_d = d[0].hypot(d[1]);
    let norm_delta = delta[0].hypot(delta[1]);
    if det.abs() > 1e-13 * norm_d * norm_delta {
        return Solvability::Unique;
    }
    if norm_d == 0.0 {
        // The first equation reads 0 = -exp(a tau - 2).
        return Solvability::None;
    }
    let lambda = plant.a - 4.0 / plant.tau;
    let defect = (delta[0] - lambda * d[0]).hypot(delta[1] - lambda * d[1]);
    if defect <= 1e-12 * (norm_delta + lambda.abs() * norm_d) {
        Solvability::InfinitelyMany
    } else {
        Solvability::None
    }
}

/// Gains placing a triple root at `s0 = a - 2 / tau`, returned with `s0`.
/// Picks the minimum-norm solution when the equations are rank deficient.
pub fn design_gains(plant: &FeedbackPlant) -> Result<(FeedbackGains, f64), FeedbackError> {
    if plant.a > 0.0 && plant.tau >= 2.0 / plant.a {
        return Err(FeedbackError::NotStabilizable);
    }
    let [r1, r2] = plant.gain_rhs();
    let d = plant.d;
    let delta = plant.deltas();
    let gains = match solvability(plant) {
        Solvability::Unique => {
            let det = d[0] * delta[1] - d[1] * delta[0];
            FeedbackGains {
                k1: (r1 * delta[1] - d[1] * r2) / det,
                k2: (d[0] * r2 - delta[0] * r1) / det,
            }
        }
        Solvability::InfinitelyMany => {
            let n2 = d[0] * d[0] + d[1] * d[1];
            FeedbackGains {
                k1: r1 * d[0] / n2,
                k2: r1 * d[1] / n2,
            }
        }
        Solvability::None => return Err(FeedbackError::Unsolvable),
    };
    Ok((gains, plant.target_root()))
}

/// Relative defects of the two gain equations.
pub fn gain_equation_residuals(plant: &FeedbackPlant, gains: &FeedbackGains) -> [f64; 2] {
    let [r1, r2] = plant.gain_rhs();
    let d = plant.d;
    let delta = plant.deltas();
    let k = [gains.k1, gains.k2];
    let rel = |row: [f64; 2], rhs: f64| {
        let lhs = row[0] * k[0] + row[1] * k[1];
        let scale = (row[0] * k[0]).abs() + (row[1] * k[1]).abs() + rhs.abs();
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    };
    [rel(d, r1), rel(delta, r2)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub s0: f64,
    pub multiplicity: Multiplicity,
    /// Relative residuals of the closed loop and its first three
    /// derivatives at `s0`.
    pub derivative_residuals: Vec<f64>,
    /// Relative defects of the two gain equations.
    pub gain_residuals: [f64; 2],
    /// `None` when `s0` is not a root of the closed loop.
    pub dominance: Option<Dominance>,
    /// Largest real part among the roots found in `window`.
    pub spectral_abscissa: Option<f64>,
    pub window: Rectangle,
    pub roots: Vec<Root>,
}

/// Checks a design: multiplicity at `s0`, dominance and spectral abscissa
/// over `Re s >= s0 - 1/tau`, `|Im s| <= 40/tau`. The window is widened by
/// 1% steps if a root falls on its boundary.
pub fn verify_design(
    plant: &FeedbackPlant,
    gains: &FeedbackGains,
    s0: f64,
) -> Result<VerifyReport, RootError> {
    let q = Quasipolynomial::from_feedback(plant, gains);
    let right = right_root_bound(&q)
        .ok_or(RootError::Unbounded)?
        .max(s0 + 1.0);
    let mut last_err = RootError::MaxDepth;
    for attempt in 0..8 {
        let stretch = 1.01f64.powi(attempt);
        let cap = 40.0 / plant.tau * stretch;
        let window = Rectangle::new(
            s0 - stretch / plant.tau,
            right + (stretch - 1.0) * (1.0 + right.abs()),
            -cap,
            cap,
        )?;
        match verify_design_in(plant, gains, s0, &window) {
            Err(e @ (RootError::BoundaryRoot(_) | RootError::NonConvergent(_))) => last_err = e,
            other => return other,
        }
    }
    Err(last_err)
}

/// [`verify_design`] on a caller-supplied window.
pub fn verify_design_in(
    plant: &FeedbackPlant,
    gains: &FeedbackGains,
    s0: f64,
    window: &Rectangle,
) -> Result<VerifyReport, RootError> {
    let q = Quasipolynomial::from_feedback(plant, gains);
    let ev = QuasiEvaluator::new(&q);
    let at = Complex64::new(s0, 0.0);
    let roots = find_roots_with(&ev, window, &RootOptions::default())?;
    let is_root = ev.relative_residual(at) <= DEFAULT_MULTIPLICITY_TOL;
    Ok(VerifyReport {
        s0,
        multiplicity: q.multiplicity_at(at, DEFAULT_MULTIPLICITY_TOL),
        derivative_residuals: (0..=3).map(|k| q.derivative_residual(k, at)).collect(),
        gain_residuals: gain_equation_residuals(plant, gains),
        dominance: is_root.then(|| classify_dominance(&roots, at)),
        spectral_abscissa: roots.iter().map(|r| r.location.re).max_by(f64::total_cmp),
        window: *window,
        roots,
    })
}

/// Lossless transmission line between a resistive source and a parallel
/// `R1 C1` load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitParamsRepr")]
pub struct CircuitParams {
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Deserialize)]
struct CircuitParamsRepr {
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "R1")]
    r1: f64,
    #[serde(rename = "C1")]
    c1: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "C")]
    c: f64,
}

impl TryFrom<CircuitParamsRepr> for CircuitParams {
    type Error = QuasiError;

    fn try_from(r: CircuitParamsRepr) -> Result<Self, Self::Error> {
        CircuitParams::new(r.r0, r.r1, r.c1, r.l, r.c)
    }
}

impl CircuitParams {
    pub fn new(r0: f64, r1: f64, c1: f64, l: f64, c: f64) -> Result<Self, QuasiError> {
        if ![r0, r1, c1, l, c].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(QuasiError::InvalidParameter(
                "circuit parameters must be positive and finite".into(),
            ));
        }
        Ok(Self { r0, r1, c1, l, c })
    }

    /// Source-end reflection coefficient.
    pub fn reflection(&self) -> f64 {
        let z = self.r0 * (self.l / self.c).sqrt();
        (1.0 - z) / (1.0 + z)
    }

    /// Round-trip travel time along the line.
    pub fn round_trip(&self) -> f64 {
        2.0 * (self.l * self.c).sqrt()
    }
}

/// Scalar DDAE of the circuit with the input voltage switched off.
pub fn circuit_to_ddae(p: &CircuitParams) -> DdaeScalar {
    let rho = p.reflection();
    let admittance = (p.c / p.l).sqrt();
    DdaeScalar::new(
        -(1.0 / p.c1) * (1.0 / p.r1 + admittance),
        -(2.0 / p.c1) * admittance * rho,
        1.0,
        rho,
        p.round_trip(),
    )
    .expect("positive parameters give finite coefficients")
}
