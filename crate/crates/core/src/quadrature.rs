//! Gauss-Legendre rules computed in double-double precision.

use crate::dd::Dd;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(Dd, Dd)> {
    assert!(n >= 1, "rule needs at least one node");
    let one = Dd::from_f64(1.0);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = Dd::from_f64(guess);
        for _ in 0..10 {
            let (p, d) = legendre(n, x);
            let step = p.div(d);
            x = x - step;
            if step.hi.abs() < 1e-32 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        let w = Dd::from_f64(2.0).div((one - x.sqr()) * d.sqr());
        rule.push((x, w));
    }
    rule
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: Dd) -> (Dd, Dd) {
    let one = Dd::from_f64(1.0);
    let mut p0 = one;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = (x * p1).mul_f64(2.0 * k - 1.0) - p0.mul_f64(k - 1.0);
        let p2 = p2.div(Dd::from_f64(k));
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (one, Dd::from_f64(0.0));
    }
    let d = (x * p1 - p0).mul_f64(n as f64).div(x.sqr() - one);
    (p1, d)
}
