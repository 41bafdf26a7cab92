//! Method-of-steps integration of single-delay DDAEs
//! `x' = A x + B y(t - tau)`, `y = C x + D y(t - tau)`.
//!
//! On each interval `[j tau, (j + 1) tau)` the delayed output is known data
//! from the previous interval, so `x` is advanced by classical RK4 and `y`
//! follows from the algebraic equation. RK4 half-step stages take the
//! delayed output from a cubic interpolant of the stored previous interval.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quasipoly::MatrixDdae;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("simulation supports exactly one delay, got {0}")]
    MultipleDelays(usize),
    #[error("step {dt} does not divide the delay {tau} into at least 50 steps")]
    GridMismatch { dt: f64, tau: f64 },
    #[error("horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("fewer than 3 envelope points in the fit window")]
    Degenerate,
    #[error("invalid fit window [{0}, {1}]")]
    Window(f64, f64),
}

/// Past values of the algebraic variables on `[-tau, 0)`.
#[derive(Clone)]
pub enum PastOutput {
    /// Same vector at every past time.
    Constant(Vec<f64>),
    /// `t -> y(t)`. Its value at `t = 0` is taken as the left limit `y(0-)`.
    Function(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
    /// Rows `(t, y(t))` with ascending `t` covering `[-tau, 0]`, linearly
    /// interpolated.
    Table(Vec<(f64, Vec<f64>)>),
}

impl std::fmt::Debug for PastOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PastOutput::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            PastOutput::Function(_) => f.write_str("Function(..)"),
            PastOutput::Table(rows) => f.debug_tuple("Table").field(&rows.len()).finish(),
        }
    }
}

impl PastOutput {
    fn at(&self, t: f64) -> Vec<f64> {
        match self {
            PastOutput::Constant(v) => v.clone(),
            PastOutput::Function(f) => f(t),
            PastOutput::Table(rows) => {
                let i = rows.partition_point(|(s, _)| *s <= t);
                if i == 0 {
                    return rows[0].1.clone();
                }
                if i == rows.len() {
                    return rows[i - 1].1.clone();
                }
                let (t0, y0) = &rows[i - 1];
                let (t1, y1) = &rows[i];
                let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
                y0.iter().zip(y1).map(|(a, b)| a + w * (b - a)).collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct History {
    pub x0: Vec<f64>,
    pub y_past: PastOutput,
}

impl History {
    /// `x(0) = x0` and `y = 0` on `[-tau, 0)`.
    pub fn zero_past(x0: Vec<f64>, algebraic_dim: usize) -> Self {
        Self {
            x0,
            y_past: PastOutput::Constant(vec![0.0; algebraic_dim]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `x[i][n]` is state component `i` at `times[n]`.
    pub x: Vec<Vec<f64>>,
    /// `y[i][n]` is algebraic component `i` at `times[n]` (right limits at
    /// multiples of the delay).
    pub y: Vec<Vec<f64>>,
    /// `max_n |y - C x - D y(t - tau)|_inf / max(1, max_n |y|_inf)` over the
    /// stored grid.
    pub max_algebraic_residual: f64,
    /// `y(0+) - y(0-)`: the jump forced by history that is inconsistent with
    /// the algebraic equation.
    pub initial_jump: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Euclidean norm of the state at sample `n`.
    pub fn state_norm(&self, n: usize) -> f64 {
        self.x.iter().map(|c| c[n] * c[n]).sum::<f64>().sqrt()
    }

    /// `t,x1,..,y1,..` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.x.len() {
            let _ = write!(out, ",x{}", i + 1);
        }
        for i in 0..self.y.len() {
            let _ = write!(out, ",y{}", i + 1);
        }
        out.push('\n');
        for n in 0..self.times.len() {
            let _ = write!(out, "{:?}", self.times[n]);
            for c in self.x.iter().chain(&self.y) {
                let _ = write!(out, ",{:?}", c[n]);
            }
            out.push('\n');
        }
        out
    }
}

/// Smallest accepted number of steps per delay interval.
pub const MIN_STEPS_PER_DELAY: usize = 50;

fn mat_vec(m: &crate::quasipoly::RealMatrix, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..v.len()).map(|j| m.get(i, j) * v[j]).sum();
    }
}

/// Cubic Lagrange interpolation of equally spaced `samples` at fractional
/// index `pos`, with the stencil kept inside the sample range.
fn cubic_at(samples: &[Vec<f64>], pos: f64) -> Vec<f64> {
    let last = samples.len() - 1;
    let base = ((pos.floor() as isize) - 1).clamp(0, last as isize - 3) as usize;
    let u = pos - base as f64;
    let w = [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ];
    let dim = samples[0].len();
    (0..dim)
        .map(|i| (0..4).map(|k| w[k] * samples[base + k][i]).sum())
        .collect()
}

/// Integrates `sys` from `hist` over `[0, t_end]` with step `dt`, which must
/// equal `tau / m` for an integer `m >= 50`.
pub fn simulate(
    sys: &MatrixDdae,
    hist: &History,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    if sys.taus.len() != 1 {
        return Err(SimError::MultipleDelays(sys.taus.len()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SimError::Horizon(t_end));
    }
    let tau = sys.taus[0];
    let steps = tau / dt;
    let m = steps.round();
    if dt.is_nan()
        || dt <= 0.0
        || !steps.is_finite()
        || (steps - m).abs() > 1e-9 * steps
        || (m as usize) < MIN_STEPS_PER_DELAY
    {
        return Err(SimError::GridMismatch { dt, tau });
    }
    let m = m as usize;
    let h = tau / m as f64;
    let dx = sys.state_dim();
    let dy = sys.algebraic_dim();
    if hist.x0.len() != dx {
        return Err(SimError::Dimension(format!(
            "x0 has {} entries, expected {dx}",
            hist.x0.len()
        )));
    }
    let (b, d) = (&sys.b[0], &sys.d[0]);

    // Previous interval outputs at local indices 0..=m; index m holds the
    // left limit at the interval's right end.
    let mut prev: Vec<Vec<f64>> = (0..=m)
        .map(|l| hist.y_past.at(-tau + l as f64 * h))
        .collect();
    if prev.iter().any(|y| y.len() != dy) {
        return Err(SimError::Dimension(format!(
            "past output must have {dy} entries"
        )));
    }
    let y_left = prev[m].clone();

    let total = {
        let n = t_end / h;
        if (n - n.round()).abs() <= 1e-9 * n {
            n.round() as usize
        } else {
            n.ceil() as usize
        }
    };
    let mut times = Vec::with_capacity(total + 1);
    let mut xs: Vec<Vec<f64>> = vec![Vec::with_capacity(total + 1); dx];
    let mut ys: Vec<Vec<f64>> = vec![Vec::with_capacity(total + 1); dy];

    let mut x = hist.x0.clone();
    let mut cur: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut tmp_y = vec![0.0; dy];
    let algebraic = |x: &[f64], delayed: &[f64], out: &mut [f64]| {
        let mut cx = vec![0.0; dy];
        mat_vec(&sys.c, x, &mut cx);
        mat_vec(d, delayed, out);
        for (o, c) in out.iter_mut().zip(cx) {
            *o += c;
        }
    };
    let rhs = |x: &[f64], delayed: &[f64]| -> Vec<f64> {
        let mut ax = vec![0.0; dx];
        let mut by = vec![0.0; dx];
        mat_vec(&sys.a, x, &mut ax);
        mat_vec(b, delayed, &mut by);
        ax.iter().zip(by).map(|(p, q)| p + q).collect()
    };
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };

    let mut record = |n: usize, x: &[f64], y: &[f64]| {
        times.push(n as f64 * h);
        for (c, v) in xs.iter_mut().zip(x) {
            c.push(*v);
        }
        for (c, v) in ys.iter_mut().zip(y) {
            c.push(*v);
        }
    };

    for n in 0..=total {
        let l = n % m;
        if l == 0 && n > 0 {
            // Close the interval with the left limit at its right end.
            algebraic(&x, &prev[m], &mut tmp_y);
            cur.push(tmp_y.clone());
            prev = std::mem::take(&mut cur);
        }
        algebraic(&x, &prev[l], &mut tmp_y);
        cur.push(tmp_y.clone());
        record(n, &x, &tmp_y);
        if n == total {
            break;
        }
        let y_half = cubic_at(&prev, l as f64 + 0.5);
        let k1 = rhs(&x, &prev[l]);
        let k2 = rhs(&axpy(&x, &k1, 0.5 * h), &y_half);
        let k3 = rhs(&axpy(&x, &k2, 0.5 * h), &y_half);
        let k4 = rhs(&axpy(&x, &k3, h), &prev[l + 1]);
        for i in 0..dx {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    let initial_jump = ys.iter().zip(&y_left).map(|(c, l)| c[0] - l).collect();
    let mut traj = Trajectory {
        times,
        x: xs,
        y: ys,
        max_algebraic_residual: 0.0,
        initial_jump,
    };
    traj.max_algebraic_residual = algebraic_residual(sys, hist, &traj, m);
    Ok(traj)
}

/// Recomputes the algebraic defect from the stored samples, taking delayed
/// values from the trajectory itself (or the history before `t = tau`).
fn algebraic_residual(sys: &MatrixDdae, hist: &History, traj: &Trajectory, m: usize) -> f64 {
    let dx = traj.x.len();
    let dy = traj.y.len();
    let h = sys.taus[0] / m as f64;
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    let mut cx = vec![0.0; dy];
    let mut dyd = vec![0.0; dy];
    for n in 0..traj.len() {
        let x: Vec<f64> = (0..dx).map(|i| traj.x[i][n]).collect();
        let delayed: Vec<f64> = if n >= m {
            (0..dy).map(|i| traj.y[i][n - m]).collect()
        } else {
            hist.y_past.at(-sys.taus[0] + n as f64 * h)
        };
        mat_vec(&sys.c, &x, &mut cx);
        mat_vec(&sys.d[0], &delayed, &mut dyd);
        for i in 0..dy {
            let y = traj.y[i][n];
            scale = scale.max(y.abs());
            worst = worst.max((y - cx[i] - dyd[i]).abs());
        }
    }
    worst / scale
}

/// Least-squares slope of `ln |x|` through the local maxima of the state
/// norm inside `[t_lo, t_hi]`.
pub fn fit_decay_rate(traj: &Trajectory, t_lo: f64, t_hi: f64) -> Result<f64, SimError> {
    if !(t_lo >= 0.0 && t_lo < t_hi) {
        return Err(SimError::Window(t_lo, t_hi));
    }
    let norms: Vec<f64> = (0..traj.len()).map(|n| traj.state_norm(n)).collect();
    let points: Vec<(f64, f64)> = (1..traj.len().saturating_sub(1))
        .filter(|&n| traj.times[n] >= t_lo && traj.times[n] <= t_hi)
        .filter(|&n| norms[n] > 0.0 && norms[n] >= norms[n - 1] && norms[n] >= norms[n + 1])
        .map(|n| (traj.times[n], norms[n].ln()))
        .collect();
    if points.len() < 3 {
        return Err(SimError::Degenerate);
    }
    let count = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_v = points.iter().map(|p| p.1).sum::<f64>() / count;
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), &(t, v)| {
        (
            num + (t - mean_t) * (v - mean_v),
            den + (t - mean_t) * (t - mean_t),
        )
    });
    if den == 0.0 {
        return Err(SimError::Degenerate);
    }
    Ok(num / den)
}
