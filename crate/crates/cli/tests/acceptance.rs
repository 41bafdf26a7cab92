//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mid_delay::feedback::{design_gains, FeedbackPlant};
use mid_delay::mid::{
    ddae_mid, factorization_residual, imaginary_root_test, retarded_mid, symmetry_residual,
    xi_roots,
};
use mid_delay::quasipoly::{MatrixDdae, Quasipolynomial, Term, DEFAULT_MULTIPLICITY_TOL};
use mid_delay::rootfinder::{
    count_roots, find_roots, is_dominant, spectral_abscissa_in, Dominance, QuasiEvaluator,
    Rectangle, RootOptions,
};
use mid_delay::simulate::{fit_decay_rate, simulate, History};
use mid_delay::Complex64;
use mid_delay_cli::{execute, Command, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAIN_TOL: f64 = 1e-4;
const EXACT_TOL: f64 = 1e-15;
const DDAE_RESIDUAL: f64 = 1e-9;
const DDAE_NONVANISHING: f64 = 1e-6;
const RETARDED_RESIDUAL: f64 = 1e-8;
const FIRST_ORDER_TOL: f64 = 1e-12;
const LATTICE_TOL: f64 = 1e-8;
const ABSCISSA_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-12;
const FACTORIZATION_TOL: f64 = 1e-10;
const DECAY_REL_TOL: f64 = 0.10;
const ALGEBRAIC_TOL: f64 = 1e-12;
const XI_ASYMPTOTIC_TOL: f64 = 0.01;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn example_plant() -> FeedbackPlant {
    FeedbackPlant::new(1.0, 1.0, [2.0, 1.0], [1.0, 2.0], 1.5).unwrap()
}

fn within_time(start: Instant, limit: Duration, detail: String) -> Verdict {
    let elapsed = start.elapsed();
    if elapsed < limit {
        Ok(format!("{detail}; {elapsed:.2?}"))
    } else {
        Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn gain_reproduction() -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("plant.json");
    std::fs::write(&input, serde_json::to_string(&example_plant()).unwrap())
        .map_err(|e| e.to_string())?;
    let mut config = RunConfig::new(Command::Design);
    config.input_path = Some(input);
    let out = execute(&config).map_err(|e| e.to_json())?;
    let json: serde_json::Value = serde_json::from_str(&out.primary).map_err(|e| e.to_string())?;
    let k1 = json["k1"].as_f64().ok_or("missing k1")?;
    let k2 = json["k2"].as_f64().ok_or("missing k2")?;
    let e = (-0.5f64).exp();
    let exact = (-13.0 / 9.0 * e, 2.0 / 9.0 * e);
    let published = (-0.87610, 0.13478);
    let err_exact = (k1 - exact.0).abs().max((k2 - exact.1).abs());
    let err_published = (k1 - published.0).abs().max((k2 - published.1).abs());
    let detail = format!(
        "k1={k1:.6}, k2={k2:.6}, |closed form|={err_exact:.1e}, |published|={err_published:.1e}"
    );
    if err_exact >= 1e-12 || err_published >= GAIN_TOL {
        return Err(detail);
    }
    within_time(start, Duration::from_secs(1), detail)
}

fn unit_delay_conditions() -> Verdict {
    let c = ddae_mid(0.0, 1.0);
    let err = (c.a - 2.0)
        .abs()
        .max((c.d + 1.0).abs())
        .max((c.bc + 4.0).abs());
    let detail = format!(
        "(a, d, bc) = ({}, {}, {}), max error {err:.1e}",
        c.a, c.d, c.bc
    );
    if err <= EXACT_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ddae_multiplicity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut weakest) = (0.0f64, f64::INFINITY);
    for _ in 0..50 {
        let s0 = rng.gen_range(-2.0..=1.0);
        let tau = rng.gen_range(0.2..=4.0);
        let q = Quasipolynomial::from_ddae_scalar(&ddae_mid(s0, tau).system());
        let at = Complex64::new(s0, 0.0);
        for k in 0..3 {
            let r = q.derivative_residual(k, at);
            worst = worst.max(r);
            if r >= DDAE_RESIDUAL {
                return Err(format!(
                    "s0={s0}, tau={tau}: derivative {k} residual {r:.1e}"
                ));
            }
        }
        let third = q.nth_derivative(3).evaluate(at).norm() / q.derivative_scale(3, at);
        weakest = weakest.min(third);
        if third <= DDAE_NONVANISHING {
            return Err(format!(
                "s0={s0}, tau={tau}: third derivative ratio {third:.1e}"
            ));
        }
    }
    Ok(format!(
        "50 samples, max residual {worst:.1e}, min |third|/scale {weakest:.2e}"
    ))
}

fn retarded_multiplicity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut weakest, mut first) = (0.0f64, f64::INFINITY, 0.0f64);
    for n in 1..=4 {
        for _ in 0..20 {
            let s0 = rng.gen_range(-2.0..=1.0);
            let tau = rng.gen_range(0.2..=4.0);
            let spec = retarded_mid(n, s0, tau).map_err(|e| e.to_string())?;
            let q = Quasipolynomial::from_retarded(&spec);
            let at = Complex64::new(s0, 0.0);
            for k in 0..2 * n {
                let r = q.derivative_residual(k, at);
                worst = worst.max(r);
                if r >= RETARDED_RESIDUAL {
                    return Err(format!(
                        "n={n}, s0={s0}, tau={tau}: derivative {k} residual {r:.1e}"
                    ));
                }
            }
            let top = q.derivative_residual(2 * n, at);
            weakest = weakest.min(top);
            if top <= RETARDED_RESIDUAL {
                return Err(format!(
                    "n={n}, s0={s0}, tau={tau}: derivative {} vanishes ({top:.1e})",
                    2 * n
                ));
            }
            if n == 1 {
                let a0 = -s0 - 1.0 / tau;
                let alpha0 = (s0 * tau).exp() / tau;
                let err = (spec.a_coeffs[0] - a0)
                    .abs()
                    .max((spec.alpha_coeffs[0] - alpha0).abs());
                first = first.max(err);
                if err >= FIRST_ORDER_TOL {
                    return Err(format!(
                        "n=1, s0={s0}, tau={tau}: coefficient error {err:.1e}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "80 samples, max residual {worst:.1e}, min top-derivative ratio {weakest:.2e}, n=1 coefficient error {first:.1e}"
    ))
}

fn root_set() -> Verdict {
    let start = Instant::now();
    let delta_hat = Quasipolynomial::new(vec![
        Term::new(vec![-2.0, 1.0], 0.0),
        Term::new(vec![2.0, 1.0], -1.0),
    ])
    .map_err(|e| e.to_string())?;
    let ev = QuasiEvaluator::new(&delta_hat);
    let rect = Rectangle::new(-4.0, 4.0, -50.0, 50.0).map_err(|e| e.to_string())?;
    let roots = find_roots(&ev, &rect, 1e-10).map_err(|e| e.to_string())?;
    let mut expected = vec![(Complex64::new(0.0, 0.0), 3usize)];
    for &xi in &xi_roots(20).xis[1..] {
        if 2.0 * xi <= 50.0 {
            expected.push((Complex64::new(0.0, 2.0 * xi), 1));
            expected.push((Complex64::new(0.0, -2.0 * xi), 1));
        }
    }
    if roots.len() != expected.len() {
        return Err(format!(
            "found {} distinct roots, expected {}",
            roots.len(),
            expected.len()
        ));
    }
    let mut worst = 0.0f64;
    for &(point, m) in &expected {
        let hit = roots
            .iter()
            .min_by(|a, b| {
                (a.location - point)
                    .norm()
                    .total_cmp(&(b.location - point).norm())
            })
            .ok_or("no roots")?;
        let dist = (hit.location - point).norm();
        worst = worst.max(dist);
        if dist >= LATTICE_TOL || hit.multiplicity != m {
            return Err(format!("expected {point} (mult {m}), nearest {:?}", hit));
        }
    }
    let total: usize = roots.iter().map(|r| r.multiplicity).sum();
    let counted = count_roots(&ev, &rect).map_err(|e| e.to_string())?;
    if total != counted {
        return Err(format!(
            "total multiplicity {total} but winding number {counted}"
        ));
    }
    within_time(
        start,
        Duration::from_secs(30),
        format!(
            "{} roots, total multiplicity {total}, max distance {worst:.1e}",
            roots.len()
        ),
    )
}

fn dominance() -> Verdict {
    let plant = example_plant();
    let (gains, _) = design_gains(&plant).map_err(|e| e.to_string())?;
    let q = Quasipolynomial::from_feedback(&plant, &gains);
    let s0 = Complex64::new(-1.0 / 3.0, 0.0);
    let window = Rectangle::new(-0.35, 2.0, -27.0, 27.0).map_err(|e| e.to_string())?;
    let verdict = is_dominant(&q, s0, &window).map_err(|e| e.to_string())?;
    let abscissa = spectral_abscissa_in(&q, &window, &RootOptions::default())
        .map_err(|e| e.to_string())?
        .value;
    let err = (abscissa + 1.0 / 3.0).abs();
    let detail = format!("{verdict:?}, spectral abscissa {abscissa:.12} (error {err:.1e})");
    if verdict == Dominance::Dominant && err <= ABSCISSA_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sym = 0.0f64;
    for _ in 0..1000 {
        let r = 20.0 * rng.gen::<f64>().sqrt();
        let z = Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI));
        sym = sym.max(symmetry_residual(z));
    }
    if sym >= SYMMETRY_TOL {
        return Err(format!("symmetry residual {sym:.1e}"));
    }
    let mut fact = 0.0f64;
    for i in 0..21 {
        for j in 0..21 {
            let z = Complex64::new(-10.0 + i as f64, -10.0 + j as f64);
            fact = fact.max(factorization_residual(z, 32));
        }
    }
    if fact >= FACTORIZATION_TOL {
        return Err(format!("factorization residual {fact:.1e}"));
    }
    let mut zetas: Vec<f64> = xi_roots(4).xis.iter().map(|x| 2.0 * x).collect();
    while zetas.len() < 200 {
        zetas.push(rng.gen_range(0.0..=30.0));
    }
    let mut hits = 0;
    for &zeta in &zetas {
        let t = imaginary_root_test(zeta);
        if !t.agree() {
            return Err(format!("predicates disagree at zeta={zeta}: {t:?}"));
        }
        hits += t.root_of_delta as usize;
    }
    Ok(format!(
        "symmetry {sym:.1e}, factorization {fact:.1e}, 200 zeta agree ({hits} on the root set)"
    ))
}

fn simulation() -> Verdict {
    let start = Instant::now();
    let plant = example_plant();
    let (gains, _) = design_gains(&plant).map_err(|e| e.to_string())?;
    let sys = MatrixDdae::from_feedback(&plant, &gains);
    let traj = simulate(
        &sys,
        &History::zero_past(vec![1.0], 2),
        30.0,
        plant.tau / 200.0,
    )
    .map_err(|e| e.to_string())?;
    let residual = traj.max_algebraic_residual;
    let elapsed = start.elapsed();
    let fit = fit_decay_rate(&traj, 5.0, 30.0);
    let mut detail = format!("algebraic residual {residual:.1e}, {elapsed:.2?}");
    let decay_ok = match &fit {
        Ok(rate) => {
            detail.push_str(&format!(", decay rate {rate:.5}"));
            (rate + 1.0 / 3.0).abs() <= DECAY_REL_TOL / 3.0
        }
        Err(e) => {
            detail.push_str(&format!(", decay fit failed: {e}"));
            false
        }
    };
    if decay_ok && residual < ALGEBRAIC_TOL && elapsed < Duration::from_secs(5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn xi_asymptotics() -> Verdict {
    let xis = xi_roots(100).xis;
    let gaps: Vec<(usize, f64)> = (30..=100)
        .map(|k| (k, (xis[k] - k as f64 * PI - PI / 2.0).abs()))
        .collect();
    let worst = gaps.iter().map(|g| g.1).fold(0.0f64, f64::max);
    let violating: Vec<usize> = gaps
        .iter()
        .filter(|g| g.1 >= XI_ASYMPTOTIC_TOL)
        .map(|g| g.0)
        .collect();
    let detail = format!("max |xi_k - k pi - pi/2| over 30..=100 is {worst:.4e}");
    if violating.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; bound exceeded at k = {violating:?}"))
    }
}

fn random_quasipolynomial(rng: &mut ChaCha8Rng) -> Quasipolynomial {
    loop {
        let terms = rng.gen_range(1..=3usize);
        let budget = 8 - (terms - 1);
        let mut degrees: Vec<usize> = (0..terms)
            .map(|_| rng.gen_range(0..=budget / terms))
            .collect();
        degrees[0] = degrees[0].max(1);
        let mut lambdas: Vec<f64> = (0..terms)
            .map(|i| -(i as f64) * rng.gen_range(0.3..1.5))
            .collect();
        lambdas[0] = 0.0;
        let built: Vec<Term> = degrees
            .iter()
            .zip(&lambdas)
            .map(|(&d, &l)| {
                let mut coeffs: Vec<f64> = (0..=d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                coeffs[d] = if rng.gen() {
                    1.0
                } else {
                    -rng.gen_range(0.5..2.0)
                };
                Term::new(coeffs, l)
            })
            .collect();
        if let Ok(q) = Quasipolynomial::new(built) {
            if q.degree() <= 8 {
                return q;
            }
        }
    }
}

fn multiplicity_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut located, mut tight) = (0usize, 0usize);
    for i in 0..200 {
        // Every fifth sample has a root of multiplicity equal to its degree.
        let q = if i % 5 == 0 {
            let n = 1 + (i / 5) % 4;
            let spec = retarded_mid(n, rng.gen_range(-1.0..0.5), rng.gen_range(0.5..2.0))
                .map_err(|e| e.to_string())?;
            Quasipolynomial::from_retarded(&spec)
        } else {
            random_quasipolynomial(&mut rng)
        };
        let ev = QuasiEvaluator::new(&q);
        let mut roots = None;
        for attempt in 0..4 {
            let grow = 1.0 + 0.0137 * attempt as f64;
            let rect = Rectangle::new(-2.5 * grow, 2.1 * grow, -8.3 * grow, 8.1 * grow)
                .map_err(|e| e.to_string())?;
            if let Ok(r) = find_roots(&ev, &rect, 1e-10) {
                roots = Some(r);
                break;
            }
        }
        let roots = roots.ok_or_else(|| format!("sample {i}: root location failed"))?;
        for r in &roots {
            let m = q.multiplicity_at(r.location, DEFAULT_MULTIPLICITY_TOL);
            located += 1;
            if m.order > q.degree() {
                return Err(format!(
                    "sample {i}: multiplicity {} at {} exceeds degree {}",
                    m.order,
                    r.location,
                    q.degree()
                ));
            }
            tight += (m.order == q.degree() && q.degree() > 1) as usize;
        }
    }
    Ok(format!(
        "200 quasipolynomials, {located} roots checked, {tight} at the bound"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gain reproduction", gain_reproduction),
        (
            "triple-root conditions at s0=0, tau=1",
            unit_delay_conditions,
        ),
        ("scalar DDAE maximal multiplicity", ddae_multiplicity),
        ("retarded maximal multiplicity", retarded_multiplicity),
        ("normalized root set", root_set),
        ("closed-loop dominance", dominance),
        ("normalized function identities", identities),
        ("closed-loop simulation", simulation),
        ("asymptotics of xi_k", xi_asymptotics),
        ("multiplicity bounded by degree", multiplicity_bound),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
