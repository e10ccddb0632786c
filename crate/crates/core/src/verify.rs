//! Built-in invariant suites at desk scale.
//!
//! Each check draws its samples from its own block of streams under the run
//! seed, evaluates them through [`Execution`], and reports the worst error
//! against a fixed tolerance. A solver failure on any sample fails the
//! check: every instance here is one the pipeline is expected to handle.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{quadratic_closed_form, scan_family, strictness_probe, Flavor, VIOLATION_TOL};
use crate::dynamics::{fixed_points, max_multiplier, multiplier, DynamicsConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::identities::{
    check_trace_identity_with_tol, preimage_sum, quadratic_cycle_sum_check, re_c2_identity, trace_sum,
};
use crate::poly::{AffineMap, Polynomial};
use crate::rootfind::find_roots;
use crate::sampling::{job_rng, monic_centered, uniform_disk};

/// Streams reserved per check, so checks never share samples.
const STREAM_BLOCK: usize = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Bounds,
    Oracles,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Bounds => "bounds",
            Suite::Oracles => "oracles",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identities" => Ok(Suite::Identities),
            "bounds" => Ok(Suite::Bounds),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            _ => Err(Error::Parse {
                input: s.to_string(),
                reason: "expected identities, bounds, oracles or all".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    /// Largest error metric over the samples (0 when there is none).
    pub worst: f64,
    pub tolerance: f64,
    /// Samples on which the pipeline returned an error.
    pub errors: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

struct Ctx<'a> {
    seed: u64,
    cfg: &'a DynamicsConfig,
    exec: Execution,
    next_block: usize,
}

impl Ctx<'_> {
    /// Runs `f` on `samples` indices with dedicated streams and folds the
    /// per-sample errors into a check result.
    fn check<F>(&mut self, name: &str, samples: usize, tolerance: f64, f: F) -> CheckResult
    where
        F: Fn(&mut rand_chacha::ChaCha8Rng, usize) -> Result<f64> + Sync + Send,
    {
        let block = self.next_block;
        self.next_block += 1;
        let seed = self.seed;
        let outcomes = self
            .exec
            .map(samples, |i| f(&mut job_rng(seed, block * STREAM_BLOCK + i), i));
        let errors = outcomes.iter().filter(|o| o.is_err()).count();
        let worst = outcomes
            .iter()
            .filter_map(|o| o.as_ref().ok())
            .fold(0.0, |w: f64, &e| w.max(e));
        CheckResult {
            name: name.to_string(),
            samples,
            worst,
            tolerance,
            errors,
            passed: errors == 0 && worst < tolerance,
        }
    }
}

/// Coefficients uniform in the unit disk, leading modulus in `[0.5, 2]`.
pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Polynomial {
    let mut coeffs: Vec<Complex64> = (0..d).map(|_| uniform_disk(rng, 1.0)).collect();
    coeffs.push(Complex64::from_polar(rng.gen_range(0.5..=2.0), rng.gen::<f64>() * TAU));
    Polynomial::new(coeffs)
}

/// Largest relative gap `|x - y| / max(1, |y|)` after greedily pairing each
/// element of `expected` with its nearest unused element of `actual`.
/// Infinite when the sizes differ.
pub fn multiset_gap(actual: &[Complex64], expected: &[Complex64]) -> f64 {
    if actual.len() != expected.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; actual.len()];
    let mut worst: f64 = 0.0;
    for y in expected {
        let (j, gap) = actual
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, x)| (j, (x - y).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("sizes match");
        used[j] = true;
        worst = worst.max(gap / y.norm().max(1.0));
    }
    worst
}

fn trace_grid() -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for d in 2..=6usize {
        for n in 1..=3u32 {
            if d.pow(n) <= 256 {
                cells.push((d, n as usize));
            }
        }
    }
    cells
}

fn identities(ctx: &mut Ctx) -> Vec<CheckResult> {
    let cfg = *ctx.cfg;
    let grid = trace_grid();
    let per_cell = 20;
    let samples = grid.len() * per_cell;
    let mut out = Vec::new();

    out.push(
        ctx.check("trace identity over the (d, n) grid", samples, 1e-6, |rng, i| {
            let (d, n) = grid[i / per_cell];
            let p = random_polynomial(rng, d);
            let w: Vec<Complex64> = (0..3).map(|_| uniform_disk(rng, 2.0)).collect();
            Ok(check_trace_identity_with_tol(&p, n, &w, &cfg, f64::INFINITY)?.rel_residual)
        }),
    );

    out.push(ctx.check("preimage sum independent of w", 200, 1e-7, |rng, _| {
        let d = rng.gen_range(2..=6);
        let p = random_polynomial(rng, d);
        let a = preimage_sum(&p, uniform_disk(rng, 10.0), &cfg.roots)?;
        let b = preimage_sum(&p, uniform_disk(rng, 10.0), &cfg.roots)?;
        Ok((a - b).norm())
    }));

    out.push(ctx.check("preimage sum of quadratics vanishes", 200, 1e-9, |rng, _| {
        let p = random_polynomial(rng, 2);
        Ok(preimage_sum(&p, uniform_disk(rng, 10.0), &cfg.roots)?.norm())
    }));

    out.push(ctx.check("n = 1 trace minus d(d-1) equals c", 200, 1e-7, |rng, _| {
        let d = rng.gen_range(2..=6);
        let p = random_polynomial(rng, d);
        let c = preimage_sum(&p, uniform_disk(rng, 10.0), &cfg.roots)?;
        let t = trace_sum(&p, 1, &cfg)?;
        Ok((t - (d * (d - 1)) as f64 - c).norm())
    }));

    out.push(
        ctx.check("Re(c^2) decomposition on a 20x20x20 grid", 8000, 1e-10, |_, i| {
            let (di, ri, ti) = (i / 400, (i / 20) % 20, i % 20);
            let d = 2 + (di * 5 / 20) as u32;
            let r = 2.0 * d as f64 * ri as f64 / 20.0;
            let t = TAU * ti as f64 / 20.0;
            let (lhs, rhs) = re_c2_identity(d, r, t);
            Ok((lhs - rhs).abs() / lhs.abs().max(1.0))
        }),
    );

    out.push(
        ctx.check("quadratic 2-cycle sum equals 2(5 - a^2)", 301, 1e-6, |rng, i| {
            // Index 0 is the parabolic map z^2 + 1/4.
            let p = if i == 0 {
                Polynomial::from_real(&[0.25, 0.0, 1.0])
            } else {
                random_polynomial(rng, 2)
            };
            let chk = quadratic_cycle_sum_check(&p, &cfg)?;
            if chk.fixed_sum_error() >= 1e-8 {
                return Ok(f64::INFINITY);
            }
            Ok(chk.cycle_rel_error())
        }),
    );
    out
}

fn bounds(ctx: &mut Ctx) -> Vec<CheckResult> {
    let cfg = *ctx.cfg;
    let (seed, exec) = (ctx.seed, ctx.exec);
    let mut out = Vec::new();

    for d in 2..=4 {
        // The scan runs its own parallel map, so this check is a single job.
        out.push(ctx.check(
            &format!("theorem3 scan, d = {d}, 300 samples"),
            1,
            VIOLATION_TOL,
            |_, _| {
                let s = scan_family(d, 2, Flavor::Theorem3, 300, seed, &cfg, exec)?;
                if s.skipped > 0 || !s.violations.is_empty() {
                    return Ok(f64::INFINITY);
                }
                Ok((s.family.threshold - s.min_observed_max).max(0.0))
            },
        ));
    }

    let monomials: Vec<(usize, usize)> = (2..=6usize)
        .flat_map(|d| {
            (1..=8u32)
                .filter(move |&n| d.pow(n) <= 256)
                .map(move |n| (d, n as usize))
        })
        .collect();
    out.push(ctx.check("M_n(z^d) = d^n", monomials.len(), 1e-9, |_, i| {
        let (d, n) = monomials[i];
        let expected = (d as f64).powi(n as i32);
        let m = max_multiplier(&Polynomial::monomial(Complex64::new(1.0, 0.0), d), n, &cfg)?;
        Ok((m - expected).abs() / expected)
    }));

    out.push(
        ctx.check("multiplier spectrum under affine conjugation", 100, 1e-6, |rng, _| {
            let d = rng.gen_range(2..=4);
            let n = rng.gen_range(1..=2);
            let p = random_polynomial(rng, d);
            let alpha = Complex64::from_polar(rng.gen_range(0.5..=2.0), rng.gen::<f64>() * TAU);
            let map = AffineMap::new(alpha, uniform_disk(rng, 1.0))?;
            let original = fixed_points(&p, n, &cfg)?.multiplier_multiset();
            let conjugated = fixed_points(&p.affine_conjugate(&map), n, &cfg)?.multiplier_multiset();
            Ok(multiset_gap(&conjugated, &original))
        }),
    );

    out.push(ctx.check("strictness probe on z^2 and z^2 - 1", 2, 0.5, |_, i| {
        let (p, strict) = if i == 0 {
            (Polynomial::from_real(&[0.0, 0.0, 1.0]), false)
        } else {
            (Polynomial::from_real(&[-1.0, 0.0, 1.0]), true)
        };
        let entries = strictness_probe(&p, 3, &cfg)?;
        let ok = entries.iter().all(|e| e.strict == strict);
        Ok(if ok { 0.0 } else { 1.0 })
    }));
    out
}

fn oracles(ctx: &mut Ctx) -> Vec<CheckResult> {
    let cfg = *ctx.cfg;
    let mut out = Vec::new();

    out.push(ctx.check("quadratic closed form vs pipeline", 200, 1e-8, |rng, _| {
        let c = uniform_disk(rng, 2.0);
        let p = monic_centered(&[c]);
        let report = fixed_points(&p, 2, &cfg)?;
        Ok(multiset_gap(&report.multiplier_multiset(), &quadratic_closed_form(c)))
    }));

    out.push(
        ctx.check("roots recovered from factored polynomials", 100, 1e-8, |rng, _| {
            let degree = rng.gen_range(1..=32);
            let mut roots: Vec<Complex64> = Vec::with_capacity(degree);
            while roots.len() < degree {
                let z = uniform_disk(rng, 2.0);
                if roots.iter().all(|r| (r - z).norm() > 0.05) {
                    roots.push(z);
                }
            }
            let q = roots
                .iter()
                .fold(Polynomial::constant(Complex64::new(1.0, 0.0)), |acc, &r| {
                    &acc * &Polynomial::new(vec![-r, Complex64::new(1.0, 0.0)])
                });
            let found = find_roots(&q, &cfg.roots)?.expanded();
            Ok(multiset_gap(&found, &roots))
        }),
    );

    out.push(ctx.check(
        "fixed points of p^m reappear in p^n with multiplier^(n/m)",
        100,
        1e-6,
        |rng, _| {
            let d: usize = rng.gen_range(2..=4);
            let (m, n) = [(1, 2), (1, 3), (2, 4)][rng.gen_range(0..3)];
            if d.pow(n as u32) > 256 {
                return Ok(0.0);
            }
            let p = random_polynomial(rng, d);
            let small = fixed_points(&p, m, &cfg)?;
            let big = fixed_points(&p, n, &cfg)?;
            let mut worst: f64 = 0.0;
            for pt in small.points.iter().filter(|pt| pt.multiplicity == 1) {
                let nearest = big
                    .points
                    .iter()
                    .map(|q| (q.location - pt.location).norm())
                    .fold(f64::INFINITY, f64::min);
                if nearest > 1e-7 * pt.location.norm().max(1.0) {
                    return Ok(f64::INFINITY);
                }
                let lifted = pt.multiplier.powu((n / m) as u32);
                let direct = multiplier(&p, n, pt.location);
                worst = worst.max((lifted - direct).norm() / direct.norm().max(1.0));
            }
            Ok(worst)
        },
    ));

    out.push(
        ctx.check("classification of multipliers on the unit circle", 64, 0.5, |_, i| {
            use crate::dynamics::{classify_multiplier, Stability};
            let theta = PI * i as f64 / 32.0;
            let on = classify_multiplier(Complex64::from_polar(1.0, theta), cfg.classify_tol);
            let out = classify_multiplier(Complex64::from_polar(1.0 + 1e-6, theta), cfg.classify_tol);
            let inside = classify_multiplier(Complex64::from_polar(1.0 - 1e-6, theta), cfg.classify_tol);
            let ok = on == Stability::Indifferent && out == Stability::Repelling && inside == Stability::Attracting;
            Ok(if ok { 0.0 } else { 1.0 })
        }),
    );
    out
}

pub fn run_suite(suite: Suite, seed: u64, cfg: &DynamicsConfig, exec: Execution) -> VerifyReport {
    let mut ctx = Ctx {
        seed,
        cfg,
        exec,
        next_block: 0,
    };
    let checks = match suite {
        Suite::Identities => identities(&mut ctx),
        Suite::Bounds => bounds(&mut ctx),
        Suite::Oracles => oracles(&mut ctx),
        Suite::All => {
            let mut all = identities(&mut ctx);
            all.extend(bounds(&mut ctx));
            all.extend(oracles(&mut ctx));
            all
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport {
        suite,
        seed,
        checks,
        passed,
    }
}
