use std::sync::Arc;

use mid_delay::feedback::{design_gains, FeedbackPlant};
use mid_delay::mid::ddae_mid;
use mid_delay::quasipoly::MatrixDdae;
use mid_delay::simulate::{fit_decay_rate, simulate, History, PastOutput};
use proptest::prelude::*;

fn example_loop() -> MatrixDdae {
    let p = FeedbackPlant::new(1.0, 1.0, [2.0, 1.0], [1.0, 2.0], 1.5).unwrap();
    let (g, _) = design_gains(&p).unwrap();
    MatrixDdae::from_feedback(&p, &g)
}

#[test]
fn example_loop_is_consistent_and_decays() {
    let sys = example_loop();
    let traj = simulate(&sys, &History::zero_past(vec![1.0], 2), 30.0, 1.5 / 200.0).unwrap();
    assert!(traj.max_algebraic_residual < 1e-12);
    assert_eq!(traj.initial_jump, vec![2.0, 1.0]);
    let n = traj.len() - 1;
    assert!((traj.times[n] - 30.0).abs() < 1e-9);
    assert!(traj.x[0][n].abs() < 0.2);
    // x(t) e^{t/3} grows polynomially at most (triple root on the abscissa).
    let w = |i: usize| traj.x[0][i].abs() * (traj.times[i] / 3.0).exp();
    assert!(w(n) < 400.0 * w(n / 2).max(1.0));
}

#[test]
fn step_halving_is_fourth_order() {
    let sys = example_loop();
    let hist = History::zero_past(vec![1.0], 2);
    let end = |m: f64| {
        let t = simulate(&sys, &hist, 6.0, 1.5 / m).unwrap();
        *t.x[0].last().unwrap()
    };
    let (a, b, c) = (end(50.0), end(100.0), end(200.0));
    let order = ((a - b) / (b - c)).abs().log2();
    assert!(order >= 3.5, "observed order {order}");
}

#[test]
fn mid_system_at_zero_grows_like_t_squared() {
    // Triple root at 0 and the rest of the spectrum on Re s = 0: solutions
    // have a quadratic secular part instead of staying bounded.
    let sys = MatrixDdae::from_scalar(&ddae_mid(0.0, 1.0).system());
    let traj = simulate(&sys, &History::zero_past(vec![1.0], 1), 50.0, 0.01).unwrap();
    let at = |t: f64| traj.x[0][(t / 0.01).round() as usize];
    let ratio = at(50.0) / at(25.0);
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    assert!(traj.max_algebraic_residual < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulation_is_homogeneous(scale in -5.0f64..5.0, x0 in -2.0f64..2.0, y0 in -2.0f64..2.0) {
        let sys = example_loop();
        let base = History {
            x0: vec![x0],
            y_past: PastOutput::Function(Arc::new(move |t: f64| vec![y0 * (t + 1.0), y0])),
        };
        let scaled = History {
            x0: vec![scale * x0],
            y_past: PastOutput::Function(Arc::new(move |t: f64| vec![scale * y0 * (t + 1.0), scale * y0])),
        };
        let a = simulate(&sys, &base, 6.0, 0.015).unwrap();
        let b = simulate(&sys, &scaled, 6.0, 0.015).unwrap();
        let peak = a.x[0].iter().chain(&a.y[0]).fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in a.x[0].iter().zip(&b.x[0]).chain(a.y[1].iter().zip(&b.y[1])) {
            prop_assert!((scale * u - v).abs() <= 1e-12 * scale.abs().max(1.0) * peak.max(1.0));
        }
    }

    #[test]
    fn decoupled_scalar_matches_exponential(a in -2.0f64..1.0, x0 in -3.0f64..3.0) {
        let sys = MatrixDdae::from_scalar(&mid_delay::quasipoly::DdaeScalar::new(a, 0.0, 1.0, 0.3, 0.1).unwrap());
        let traj = simulate(&sys, &History::zero_past(vec![x0], 1), 1.0, 1e-3).unwrap();
        let last = *traj.x[0].last().unwrap();
        prop_assert!((last - x0 * a.exp()).abs() < 1e-8 * (1.0 + x0.abs()));
    }
}

#[test]
fn example_loop_has_a_single_envelope_peak() {
    // The triple root makes x(t) ~ t^2 exp(-t/3): one hump near t = 6 and a
    // monotone tail, so the envelope fit has too few maxima on [5, 30].
    let sys = example_loop();
    let traj = simulate(&sys, &History::zero_past(vec![1.0], 2), 30.0, 1.5 / 200.0).unwrap();
    let n = |j: usize| traj.state_norm(j);
    let peaks: Vec<f64> = (1..traj.len() - 1)
        .filter(|&i| traj.times[i] >= 5.0 && n(i) >= n(i - 1) && n(i) >= n(i + 1))
        .map(|i| traj.times[i])
        .collect();
    assert_eq!(peaks.len(), 1);
    assert!((peaks[0] - 6.0).abs() < 0.5, "{peaks:?}");
    assert_eq!(
        fit_decay_rate(&traj, 5.0, 30.0),
        Err(mid_delay::simulate::SimError::Degenerate)
    );
}
