//! Multi-start Nelder–Mead minimization of `M_n` over monic centered
//! polynomials, parametrized by the real and imaginary parts of their free
//! coefficients.
//!
//! Multipliers are conjugacy invariants, and every polynomial of degree
//! `d >= 2` is affinely conjugate to a monic centered one, so nothing is
//! lost by the normalization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{reverify, Flavor, Reverification};
use crate::dynamics::{max_multiplier, DynamicsConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::poly::{checked_power_degree, Polynomial};
use crate::sampling::{job_rng, monic_centered, uniform_disk};

/// Objective value for parameters the solver could not handle.
pub const PENALTY: f64 = 1e12;
/// A search is a candidate counterexample when its best value drops this far
/// below the conjectured floor.
pub const FLOOR_SLACK: f64 = 1e-3;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub d: usize,
    pub n: usize,
    pub starts: usize,
    pub iters_per_start: usize,
    pub seed: u64,
    pub simplex_init_scale: f64,
    /// Stop a start once the simplex diameter drops below this.
    pub objective_tol: f64,
    /// Starts are uniform on the polydisk of this radius.
    pub domain_radius: f64,
    /// Which floor the result is compared against.
    pub flavor: Flavor,
    pub dynamics: DynamicsConfig,
}

impl SearchConfig {
    pub fn new(d: usize, n: usize, seed: u64) -> Self {
        SearchConfig {
            d,
            n,
            starts: 64,
            iters_per_start: 400,
            seed,
            simplex_init_scale: 0.3,
            objective_tol: 1e-7,
            domain_radius: 2.0,
            flavor: Flavor::C,
            dynamics: DynamicsConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::DegreeTooLow(self.d));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("n must be at least 2, got {}", self.n)));
        }
        if self.flavor == Flavor::Theorem3 && self.n != 2 {
            return Err(Error::InvalidArgument("theorem3 requires n = 2".into()));
        }
        if self.starts == 0 {
            return Err(Error::InvalidArgument("starts must be positive".into()));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(self.simplex_init_scale) && positive(self.objective_tol) && positive(self.domain_radius)) {
            return Err(Error::InvalidArgument(
                "simplex_init_scale, objective_tol and domain_radius must be positive".into(),
            ));
        }
        checked_power_degree(self.d, self.n, self.dynamics.max_degree)?;
        self.dynamics.roots.validate()
    }

    /// Real dimension of the search space.
    pub fn dimension(&self) -> usize {
        2 * (self.d - 1)
    }

    pub fn floor(&self) -> f64 {
        self.flavor.threshold(self.d, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub config: SearchConfig,
    pub best_value: f64,
    pub best_params: Vec<f64>,
    pub best_polynomial: Polynomial,
    pub best_start: usize,
    pub evaluations: usize,
    pub per_start_bests: Vec<f64>,
    /// `d^n` for C, `2^n` for B, 4 for theorem3.
    pub conjecture_floor: f64,
    /// `best_value >= conjecture_floor - FLOOR_SLACK`.
    pub respects_floor: bool,
    /// Present when the floor was not respected.
    pub reverification: Option<Reverification>,
}

/// `z^d + sum a_k z^k` with `a_k = params[2k] + i params[2k+1]`, `k < d - 1`.
pub fn encode(params: &[f64], d: usize) -> Result<Polynomial> {
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    let expected = 2 * (d - 1);
    if params.len() != expected {
        return Err(Error::BadLength {
            expected,
            got: params.len(),
        });
    }
    let free: Vec<Complex64> = params.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(monic_centered(&free))
}

/// `M_n(encode(params))`, or [`PENALTY`] when the parameters are not
/// finite, have the wrong length, or the solver fails.
pub fn objective(params: &[f64], cfg: &SearchConfig) -> f64 {
    if params.iter().any(|x| !x.is_finite()) {
        return PENALTY;
    }
    encode(params, cfg.d)
        .and_then(|p| max_multiplier(&p, cfg.n, &cfg.dynamics))
        .ok()
        .filter(|m| m.is_finite())
        .unwrap_or(PENALTY)
}

struct StartOutcome {
    best: Vec<f64>,
    value: f64,
    evaluations: usize,
}

fn start_point(cfg: &SearchConfig, index: usize) -> Vec<f64> {
    let mut rng = job_rng(cfg.seed, index);
    (0..cfg.d - 1)
        .flat_map(|_| {
            let z = uniform_disk(&mut rng, cfg.domain_radius);
            [z.re, z.im]
        })
        .collect()
}

/// Nelder–Mead from `x0` with an axis-aligned initial simplex.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: Vec<f64>, cfg: &SearchConfig) -> StartOutcome {
    let dim = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(&x0);
    simplex.push((x0.clone(), f0));
    if cfg.iters_per_start == 0 {
        return StartOutcome {
            best: x0,
            value: f0,
            evaluations,
        };
    }
    for i in 0..dim {
        let mut x = x0.clone();
        x[i] += cfg.simplex_init_scale;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let lerp =
        |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect() };
    for _ in 0..cfg.iters_per_start {
        // Stable sort keeps the older vertex first on ties.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < cfg.objective_tol {
            break;
        }

        let worst = simplex[dim].clone();
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        // Points on the line centroid + t (centroid - worst).
        let reflected = lerp(&centroid, &worst.0, -REFLECT);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -EXPAND);
            let fe = eval(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = lerp(&centroid, &worst.0, -CONTRACT);
            let fx = eval(&x);
            (x, fx)
        } else {
            let x = lerp(&centroid, &worst.0, CONTRACT);
            let fx = eval(&x);
            (x, fx)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex[1..].iter_mut() {
            let x = lerp(&anchor, &vertex.0, SHRINK);
            let fx = eval(&x);
            *vertex = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, value) = simplex.swap_remove(0);
    StartOutcome {
        best,
        value,
        evaluations,
    }
}

/// Runs every start (in parallel under [`Execution::Parallel`]) and keeps
/// the smallest value, lowest start index on ties.
pub fn minimize(cfg: &SearchConfig, exec: Execution) -> Result<SearchResult> {
    cfg.validate()?;
    let outcomes = exec.map(cfg.starts, |i| {
        nelder_mead(|x| objective(x, cfg), start_point(cfg, i), cfg)
    });

    let mut best_start = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value < outcomes[best_start].value {
            best_start = i;
        }
    }
    let best = &outcomes[best_start];
    let best_polynomial = encode(&best.best, cfg.d)?;
    let floor = cfg.floor();
    let respects_floor = best.value >= floor - FLOOR_SLACK;
    let reverification = (!respects_floor).then(|| reverify(&best_polynomial, cfg.n, cfg.flavor, &cfg.dynamics));
    Ok(SearchResult {
        config: cfg.clone(),
        best_value: best.value,
        best_params: best.best.clone(),
        best_polynomial,
        best_start,
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        per_start_bests: outcomes.iter().map(|o| o.value).collect(),
        conjecture_floor: floor,
        respects_floor,
        reverification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode(&[0.0, 0.0], 2).unwrap(), Polynomial::from_real(&[0.0, 0.0, 1.0]));
        assert_eq!(
            encode(&[-1.0, 0.0], 2).unwrap(),
            Polynomial::from_real(&[-1.0, 0.0, 1.0])
        );
        let p = encode(&[1.0, 0.0, 0.0, 1.0], 3).unwrap();
        let expected = Polynomial::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        assert_eq!(p, expected);
        assert!(matches!(
            encode(&[1.0, 2.0, 3.0], 3),
            Err(Error::BadLength { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn objective_examples() {
        let cfg = SearchConfig::new(2, 2, 0);
        assert!((objective(&[0.0, 0.0], &cfg) - 4.0).abs() < 1e-9);
        assert!((objective(&[-1.0, 0.0], &cfg) - (6.0 + 2.0 * 5f64.sqrt())).abs() < 1e-9);
        let cfg3 = SearchConfig::new(2, 3, 0);
        assert!((objective(&[0.0, 0.0], &cfg3) - 8.0).abs() < 1e-9);
        assert_eq!(objective(&[f64::NAN, 0.0], &cfg), PENALTY);
        assert_eq!(objective(&[0.0], &cfg), PENALTY);
    }

    #[test]
    fn zero_budget_returns_start_value() {
        let mut cfg = SearchConfig::new(2, 2, 9);
        cfg.starts = 1;
        cfg.iters_per_start = 0;
        let r = minimize(&cfg, Execution::Sequential).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.best_value, objective(&start_point(&cfg, 0), &cfg));
        assert_eq!(r.per_start_bests, vec![r.best_value]);
    }

    #[test]
    fn nelder_mead_on_a_quadratic_bowl() {
        let mut cfg = SearchConfig::new(2, 2, 0);
        cfg.iters_per_start = 500;
        cfg.objective_tol = 1e-10;
        let out = nelder_mead(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2),
            vec![0.0, 0.0],
            &cfg,
        );
        assert!((out.best[0] - 1.0).abs() < 1e-6 && (out.best[1] + 0.5).abs() < 1e-6);
        assert!(out.value < 1e-11);
    }

    #[test]
    fn quadratic_search_finds_the_floor() {
        let mut cfg = SearchConfig::new(2, 2, 3);
        cfg.starts = 8;
        let r = minimize(&cfg, Execution::Parallel).unwrap();
        assert!((r.best_value - 4.0).abs() < 1e-3, "{}", r.best_value);
        assert!(r.best_params.iter().map(|x| x * x).sum::<f64>().sqrt() < 0.05);
        assert!(r.respects_floor && r.reverification.is_none());
        assert_eq!(
            r.best_value,
            r.per_start_bests.iter().cloned().fold(f64::INFINITY, f64::min)
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = SearchConfig::new(2, 1, 0);
        assert!(cfg.validate().is_err());
        cfg.n = 2;
        cfg.starts = 0;
        assert!(cfg.validate().is_err());
        cfg.starts = 1;
        cfg.domain_radius = -1.0;
        assert!(cfg.validate().is_err());
        assert!(SearchConfig::new(8, 5, 0).validate().is_err());
    }
}
