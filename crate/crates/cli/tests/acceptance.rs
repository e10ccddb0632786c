//! Acceptance suite: every criterion at its stated tolerance, one line each.
//!
//! Runs with a custom harness so the per-criterion lines are always printed.
//! The quadratic closed form and the Newton-identity value of `c` are
//! computed here from first principles, independently of the library.

use std::f64::consts::TAU;
use std::process::Command;
use std::time::{Duration, Instant};

use iterfix::bounds::{scan_family, Flavor};
use iterfix::dynamics::{fixed_points, max_multiplier, DynamicsConfig};
use iterfix::identities::{
    check_trace_identity_with_tol, default_w_samples, preimage_sum, quadratic_cycle_sum_check, re_c2_identity,
};
use iterfix::search::{minimize, SearchConfig};
use iterfix::{AffineMap, Complex64, Execution, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * TAU)
}

/// Coefficients in the unit disk, leading modulus in `[0.5, 2]`.
fn random_poly(rng: &mut ChaCha8Rng, d: usize) -> Polynomial {
    let mut c: Vec<Complex64> = (0..d).map(|_| disk(rng, 1.0)).collect();
    c.push(Complex64::from_polar(rng.gen_range(0.5..=2.0), rng.gen::<f64>() * TAU));
    Polynomial::new(c)
}

fn quadratic(c: Complex64) -> Polynomial {
    Polynomial::new(vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
}

/// `sum p'(z)` over `p(z) = w` via Newton's identities on the coefficients.
fn newton_identity_c(p: &Polynomial) -> Complex64 {
    let a = p.coeffs();
    let d = p.degree();
    let b: Vec<Complex64> = (0..=d).map(|k| a[d - k] / a[d]).collect();
    let mut s = vec![Complex64::new(d as f64, 0.0)];
    for j in 1..d {
        let mut sj = -(j as f64) * b[j];
        for i in 1..j {
            sj -= b[i] * s[j - i];
        }
        s.push(sj);
    }
    (1..=d).map(|k| k as f64 * a[k] * s[k - 1]).sum()
}

/// `n = 2` multipliers of `z^2 + c`: `(2 xi)^2` at the roots of
/// `z^2 - z + c`, and `4 (c + 1)` twice for the 2-cycle `z^2 + z + c + 1`.
fn quadratic_oracle(c: Complex64) -> Vec<Complex64> {
    let s = (1.0 - 4.0 * c).sqrt();
    let cycle = 4.0 * (c + 1.0);
    vec![(1.0 + s) * (1.0 + s), (1.0 - s) * (1.0 - s), cycle, cycle]
}

fn multiset_gap(actual: &[Complex64], expected: &[Complex64]) -> f64 {
    if actual.len() != expected.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; actual.len()];
    let mut worst: f64 = 0.0;
    for y in expected {
        let (j, gap) = (0..actual.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (actual[j] - y).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(gap / y.norm().max(1.0));
    }
    worst
}

fn trace_grid() -> Vec<(usize, usize)> {
    (2..=6usize)
        .flat_map(|d| {
            (1..=3u32)
                .filter(move |&n| d.pow(n) <= 256)
                .map(move |n| (d, n as usize))
        })
        .collect()
}

/// Criteria 1 and 2 share their polynomials.
fn trace_and_w(cfg: &DynamicsConfig) -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let w = default_w_samples();
    let (mut worst_rel, mut worst_oracle, mut worst_spread, mut failures) = (0.0f64, 0.0f64, 0.0f64, 0);
    let mut count = 0;
    for (d, n) in trace_grid() {
        for _ in 0..100 {
            let p = random_poly(&mut rng, d);
            count += 1;
            match check_trace_identity_with_tol(&p, n, &w, cfg, f64::INFINITY) {
                Ok(r) => {
                    worst_rel = worst_rel.max(r.rel_residual);
                    worst_spread = worst_spread.max(r.c_spread);
                    let dn = (d as f64).powi(n as i32);
                    let rhs = dn * (dn - 1.0) + newton_identity_c(&p).powu(n as u32);
                    worst_oracle = worst_oracle.max((r.lhs - rhs).norm() / rhs.norm().max(1.0));
                }
                Err(_) => failures += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    let c1 = outcome(
        failures == 0 && worst_rel < 1e-6 && worst_oracle < 1e-6 && elapsed < Duration::from_secs(60),
        format!(
            "{count} polynomials, worst rel_residual {worst_rel:.2e}, worst vs Newton-identity rhs {worst_oracle:.2e}, {failures} solver failures, {:.1}s single-threaded (limits 1e-6, 60s)",
            elapsed.as_secs_f64()
        ),
    );

    let mut worst_quad: f64 = 0.0;
    let mut quad_failures = 0;
    for _ in 0..200 {
        let p = random_poly(&mut rng, 2);
        match preimage_sum(&p, disk(&mut rng, 10.0), &cfg.roots) {
            Ok(c) => worst_quad = worst_quad.max(c.norm()),
            Err(_) => quad_failures += 1,
        }
    }
    let c2 = outcome(
        failures == 0 && quad_failures == 0 && worst_spread < 1e-7 && worst_quad < 1e-9,
        format!(
            "worst pairwise c disagreement {worst_spread:.2e} (limit 1e-7), worst |c| over 200 quadratics {worst_quad:.2e} (limit 1e-9)"
        ),
    );
    (c1, c2)
}

fn theorem3(cfg: &DynamicsConfig) -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for d in 2..=4 {
        match scan_family(d, 2, Flavor::Theorem3, 1000, SEED, cfg, Execution::Parallel) {
            Ok(s) => {
                let margin = s.min_observed_max - 4.0;
                ok &= s.violations.is_empty() && s.skipped == 0 && margin >= -1e-6;
                parts.push(format!(
                    "d={d}: {} violations, {} skipped, min M_2 {:.4}",
                    s.violations.len(),
                    s.skipped,
                    s.min_observed_max
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("d={d}: error {e}"));
            }
        }
    }
    let m = max_multiplier(&quadratic(Complex64::new(0.0, 0.0)), 2, cfg).unwrap_or(f64::NAN);
    ok &= (m - 4.0).abs() <= 1e-9;
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    outcome(
        ok,
        format!(
            "{}; M_2(z^2) - 4 = {:.1e}; {:.1}s (limit 120s)",
            parts.join("; "),
            m - 4.0,
            elapsed.as_secs_f64()
        ),
    )
}

fn quadratic_oracle_check(cfg: &DynamicsConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let c = disk(&mut rng, 2.0);
        let gap = fixed_points(&quadratic(c), 2, cfg)
            .map(|r| multiset_gap(&r.multiplier_multiset(), &quadratic_oracle(c)))
            .unwrap_or(f64::INFINITY);
        worst = worst.max(gap);
    }
    outcome(
        worst < 1e-8,
        format!("500 values of c, worst multiset gap {worst:.2e} (limit 1e-8)"),
    )
}

fn proof_identities(cfg: &DynamicsConfig) -> Outcome {
    let mut worst_grid: f64 = 0.0;
    for di in 0..20 {
        let d = 2 + (di * 5 / 20) as u32;
        for ri in 0..20 {
            let r = 2.0 * d as f64 * ri as f64 / 20.0;
            for ti in 0..20 {
                let t = TAU * ti as f64 / 20.0;
                let (lhs, rhs) = re_c2_identity(d, r, t);
                // Direct evaluation of Re(c^2) as an independent check of lhs.
                let c = Complex64::new(-((d * (d - 1)) as f64), 0.0) + Complex64::from_polar(r, t);
                let direct = (c * c).re;
                let scale = lhs.abs().max(1.0);
                worst_grid = worst_grid
                    .max((lhs - rhs).abs() / scale)
                    .max((lhs - direct).abs() / scale);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst_cycle: f64 = 0.0;
    let mut holds = true;
    for i in 0..300 {
        let p = if i == 0 {
            quadratic(Complex64::new(0.25, 0.0))
        } else {
            random_poly(&mut rng, 2)
        };
        match quadratic_cycle_sum_check(&p, cfg) {
            Ok(chk) => {
                holds &= chk.holds(1e-6);
                worst_cycle = worst_cycle.max(chk.cycle_rel_error());
            }
            Err(_) => holds = false,
        }
    }
    outcome(
        worst_grid < 1e-10 && holds,
        format!(
            "Re(c^2) grid worst {worst_grid:.2e} (limit 1e-10); 300 quadratics incl. c = 1/4, worst cycle-sum error {worst_cycle:.2e} (limit 1e-6)"
        ),
    )
}

fn parabolic(cfg: &DynamicsConfig) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    match fixed_points(&Polynomial::from_real(&[0.0, 1.0, 1.0]), 1, cfg) {
        Ok(r) => {
            let trace: Complex64 = r.points.iter().map(|pt| pt.multiplier * pt.multiplicity as f64).sum();
            let single = r.points.len() == 1 && r.points[0].multiplicity == 2;
            let m1 = r
                .points
                .first()
                .map_or(f64::INFINITY, |pt| (pt.multiplier - 1.0).norm());
            ok &= single && m1 < 1e-6 && (trace - 2.0).norm() < 1e-6;
            notes.push(format!(
                "z + z^2: {} point(s), multiplicity {}, |m - 1| {m1:.1e}, trace {}",
                r.points.len(),
                r.points.first().map_or(0, |pt| pt.multiplicity),
                trace.re
            ));
        }
        Err(e) => {
            ok = false;
            notes.push(format!("z + z^2: error {e}"));
        }
    }
    let q = quadratic(Complex64::new(0.25, 0.0));
    match fixed_points(&q, 2, cfg) {
        Ok(r) => {
            let double = r.points.iter().find(|pt| pt.multiplicity == 2);
            let m1 = double.map_or(f64::INFINITY, |pt| (pt.multiplier - 1.0).norm());
            let at_half = double.is_some_and(|pt| (pt.location - 0.5).norm() < 1e-4);
            let m2 = r.points.iter().map(|pt| pt.abs_multiplier()).fold(0.0, f64::max);
            ok &= at_half && m1 < 1e-6 && (m2 - 5.0).abs() < 1e-6;
            notes.push(format!(
                "z^2 + 1/4: double point at 1/2 {at_half}, |m - 1| {m1:.1e}, M_2 - 5 = {:.1e}",
                m2 - 5.0
            ));
        }
        Err(e) => {
            ok = false;
            notes.push(format!("z^2 + 1/4: error {e}"));
        }
    }
    outcome(ok, notes.join("; "))
}

fn search_floor() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 1..=5 {
        let cfg = SearchConfig::new(2, 2, seed);
        match minimize(&cfg, Execution::Parallel) {
            Ok(r) => {
                let radius = r.best_params.iter().map(|x| x * x).sum::<f64>().sqrt();
                ok &= (r.best_value - 4.0).abs() <= 1e-3 && radius <= 0.05;
                parts.push(format!("seed {seed}: {:.6} at |params| {radius:.1e}", r.best_value));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("seed {seed}: error {e}"));
            }
        }
    }
    for (d, n) in [(2, 3), (3, 2)] {
        let cfg = SearchConfig::new(d, n, 1);
        match minimize(&cfg, Execution::Parallel) {
            Ok(r) => {
                let confirmed = r.reverification.as_ref().is_some_and(|v| v.confirmed);
                ok &= r.respects_floor || !confirmed;
                parts.push(format!(
                    "exploratory d={d} n={n}: {:.6} vs floor {} ({})",
                    r.best_value,
                    r.conjecture_floor,
                    if r.respects_floor {
                        "respected"
                    } else if confirmed {
                        "CONFIRMED below"
                    } else {
                        "not confirmed"
                    }
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("exploratory d={d} n={n}: error {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    outcome(
        ok,
        format!("{}; {:.1}s (limit 300s)", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn run_cli(threads: &str, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_iterfix"))
        .args(args)
        .env("ITERFIX_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &[
            "scan",
            "--d",
            "3",
            "--n",
            "2",
            "--flavor",
            "C",
            "--samples",
            "200",
            "--seed",
            "7",
        ],
        &[
            "scan",
            "--d",
            "2",
            "--n",
            "3",
            "--flavor",
            "B",
            "--samples",
            "200",
            "--seed",
            "8",
            "--format",
            "csv",
        ],
        &[
            "search", "--d", "2", "--n", "2", "--starts", "16", "--iters", "150", "--seed", "1",
        ],
        &[
            "search", "--d", "3", "--n", "2", "--starts", "8", "--iters", "100", "--seed", "2", "--format", "csv",
        ],
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for args in runs {
        let label = args.join(" ");
        match (run_cli("1", args), run_cli("4", args)) {
            (Ok(a), Ok(b)) => {
                let same = a == b && !a.is_empty();
                ok &= same;
                notes.push(format!(
                    "{label}: {} bytes {}",
                    a.len(),
                    if same { "identical" } else { "DIFFER" }
                ));
            }
            (a, b) => {
                ok = false;
                notes.push(format!("{label}: {:?} / {:?}", a.err(), b.err()));
            }
        }
    }
    outcome(ok, format!("ITERFIX_THREADS 1 vs 4: {}", notes.join("; ")))
}

fn conjugation(cfg: &DynamicsConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = 2 + i % 3;
        let n = 1 + (i / 3) % 2;
        let p = random_poly(&mut rng, d);
        let alpha = Complex64::from_polar(rng.gen_range(0.5..=2.0), rng.gen::<f64>() * TAU);
        let map = AffineMap::new(alpha, disk(&mut rng, 1.0)).expect("nonzero scale");
        let gap = match (
            fixed_points(&p, n, cfg),
            fixed_points(&p.affine_conjugate(&map), n, cfg),
        ) {
            (Ok(a), Ok(b)) => multiset_gap(&b.multiplier_multiset(), &a.multiplier_multiset()),
            _ => f64::INFINITY,
        };
        worst = worst.max(gap);
    }
    outcome(
        worst < 1e-6,
        format!("100 random affine conjugations, worst relative spectrum gap {worst:.2e} (limit 1e-6)"),
    )
}

fn main() {
    // Under `cargo test -- --list` and similar the harness must not run.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let cfg = DynamicsConfig::default();
    let (c1, c2) = trace_and_w(&cfg);
    let results = [
        ("1 trace identity", c1),
        ("2 w-independence of c", c2),
        ("3 M_2 >= 4 scan and M_2(z^2) = 4", theorem3(&cfg)),
        ("4 quadratic closed-form oracle", quadratic_oracle_check(&cfg)),
        ("5 proof identities", proof_identities(&cfg)),
        ("6 parabolic and multiplicity handling", parabolic(&cfg)),
        ("7 search floor", search_floor()),
        ("8 determinism across thread counts", determinism()),
        ("9 conjugation invariance", conjugation(&cfg)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
