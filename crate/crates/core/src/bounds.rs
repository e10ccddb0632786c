//! Lower bounds on `M_n(p)`: the proved `M_2 >= 4`, the conjectured
//! `M_n >= 2^n` and `M_n >= d^n`, family scans, and a probe of strict
//! inequality `M_n > d^n`.
//!
//! A failed check is only a candidate. Before it is reported as a violation
//! it is recomputed with tightened root-finding tolerances and, for
//! quadratics with `n = 2`, compared against the closed-form multipliers
//! of the conjugate `z^2 + c`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fixed_points, DynamicsConfig, PeriodicPoint};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::poly::{checked_power_degree, AffineMap, Polynomial};
use crate::sampling::{job_rng, SamplingMeasure};
use crate::serde_complex;

pub const VIOLATION_TOL: f64 = 1e-6;
pub const STRICTNESS_TOL: f64 = 1e-6;
/// Free coefficients of scanned polynomials are drawn from this disk.
pub const SCAN_COEFFICIENT_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// `M_2(p) >= 4`.
    #[serde(rename = "theorem3")]
    Theorem3,
    /// `M_n(p) >= 2^n`.
    B,
    /// `M_n(p) >= d^n`.
    C,
}

impl Flavor {
    pub fn threshold(self, d: usize, n: usize) -> f64 {
        match self {
            Flavor::Theorem3 => 4.0,
            Flavor::B => 2f64.powi(n as i32),
            Flavor::C => (d as f64).powi(n as i32),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Theorem3 => "theorem3",
            Flavor::B => "B",
            Flavor::C => "C",
        }
    }

    fn check_n(self, n: usize) -> Result<()> {
        match self {
            Flavor::Theorem3 if n != 2 => Err(Error::InvalidArgument(format!(
                "theorem3 is a statement about n = 2, got n = {n}"
            ))),
            Flavor::B | Flavor::C if n < 2 => Err(Error::InvalidArgument(format!(
                "conjecture checks need n >= 2, got n = {n}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theorem3" => Ok(Flavor::Theorem3),
            "b" => Ok(Flavor::B),
            "c" => Ok(Flavor::C),
            _ => Err(Error::Parse {
                input: s.to_string(),
                reason: "expected theorem3, B or C".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub d: usize,
    pub flavor: Flavor,
    pub threshold: f64,
    /// `M_n(p)`.
    pub observed_max: f64,
    /// `observed_max - threshold`.
    pub margin: f64,
    pub witness: PeriodicPoint,
    /// `margin >= -VIOLATION_TOL`.
    pub passed: bool,
}

fn bound_report(p: &Polynomial, n: usize, flavor: Flavor, cfg: &DynamicsConfig) -> Result<BoundReport> {
    let d = p.degree();
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    flavor.check_n(n)?;
    let report = fixed_points(p, n, cfg)?;
    let witness = *report.witness().expect("degree >= 2 gives at least one fixed point");
    let threshold = flavor.threshold(d, n);
    let observed_max = witness.abs_multiplier();
    let margin = observed_max - threshold;
    Ok(BoundReport {
        n,
        d,
        flavor,
        threshold,
        observed_max,
        margin,
        witness,
        passed: margin >= -VIOLATION_TOL,
    })
}

/// `M_2(p)` against the threshold 4.
pub fn check_theorem3(p: &Polynomial, cfg: &DynamicsConfig) -> Result<BoundReport> {
    bound_report(p, 2, Flavor::Theorem3, cfg)
}

/// `M_n(p)` against `2^n` (B) or `d^n` (C); `Theorem3` requires `n = 2`.
pub fn check_conjecture(p: &Polynomial, n: usize, flavor: Flavor, cfg: &DynamicsConfig) -> Result<BoundReport> {
    bound_report(p, n, flavor, cfg)
}

/// Multipliers of the four fixed points of `(z^2 + c)^2`: the two fixed
/// points of `z^2 + c` and the 2-cycle, counted twice.
pub fn quadratic_closed_form(c: Complex64) -> [Complex64; 4] {
    let s = (Complex64::new(1.0, 0.0) - 4.0 * c).sqrt();
    let cycle = 4.0 * (c + 1.0);
    [(1.0 + s).powu(2), (1.0 - s).powu(2), cycle, cycle]
}

/// The constant `c` of the monic centered conjugate `z^2 + c` of a quadratic.
pub fn quadratic_normal_constant(p: &Polynomial) -> Result<Complex64> {
    if p.degree() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected a quadratic, got degree {}",
            p.degree()
        )));
    }
    let map = AffineMap::normalizing(p)?;
    Ok(p.affine_conjugate(&map).coeffs()[0])
}

/// Outcome of recomputing a failed check at tightened tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reverification {
    pub residual_tol: f64,
    pub newton_polish_steps: usize,
    /// `M_n(p)` at the tightened tolerances, `None` if the solver failed.
    pub observed_max: Option<f64>,
    /// `M_2` from the closed form, for quadratics with `n = 2`.
    pub closed_form_max: Option<f64>,
    /// Every available recomputation also falls below the threshold.
    pub confirmed: bool,
}

/// Tightened settings for re-verifying a candidate violation.
pub fn reverification_config(cfg: &DynamicsConfig) -> DynamicsConfig {
    let mut tight = *cfg;
    tight.roots.residual_tol = 1e-14;
    tight.roots.newton_polish_steps = 10;
    tight
}

pub fn reverify(p: &Polynomial, n: usize, flavor: Flavor, cfg: &DynamicsConfig) -> Reverification {
    let tight = reverification_config(cfg);
    let threshold = flavor.threshold(p.degree(), n);
    let observed_max = bound_report(p, n, flavor, &tight).ok().map(|r| r.observed_max);
    let closed_form_max = if p.degree() == 2 && n == 2 {
        quadratic_normal_constant(p)
            .ok()
            .map(|c| quadratic_closed_form(c).iter().map(|m| m.norm()).fold(0.0, f64::max))
    } else {
        None
    };
    let below = |m: f64| m - threshold < -VIOLATION_TOL;
    let confirmed = match (observed_max, closed_form_max) {
        (None, _) => false,
        (Some(m), None) => below(m),
        (Some(m), Some(exact)) => below(m) && below(exact),
    };
    Reverification {
        residual_tol: tight.roots.residual_tol,
        newton_polish_steps: tight.roots.newton_polish_steps,
        observed_max,
        closed_form_max,
        confirmed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub d: usize,
    pub n: usize,
    pub flavor: Flavor,
    pub threshold: f64,
    pub measure: SamplingMeasure,
}

/// A sample whose check failed and survived re-verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub polynomial: Polynomial,
    pub report: BoundReport,
    pub reverification: Reverification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub family: FamilyDescriptor,
    pub sample_count: usize,
    /// Samples dropped because the solver failed.
    pub skipped: usize,
    pub skipped_indices: Vec<usize>,
    /// Smallest `M_n` seen; `null` in JSON (infinity) for an empty scan.
    #[serde(with = "serde_complex::unbounded")]
    pub min_observed_max: f64,
    pub argmin: Option<Polynomial>,
    pub argmin_index: Option<usize>,
    pub violations: Vec<Violation>,
    /// Indices that failed at default tolerances but not on re-verification.
    pub unconfirmed_candidates: Vec<usize>,
    pub seed: u64,
}

enum Sample {
    Checked(Polynomial, BoundReport),
    Skipped,
}

/// Checks `samples` random monic centered polynomials of degree `d`.
/// Sample `i` draws from stream `i` of the run seed; results are
/// aggregated in index order.
pub fn scan_family(
    d: usize,
    n: usize,
    flavor: Flavor,
    samples: usize,
    seed: u64,
    cfg: &DynamicsConfig,
    exec: Execution,
) -> Result<ScanSummary> {
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    flavor.check_n(n)?;
    checked_power_degree(d, n, cfg.max_degree)?;
    let measure = SamplingMeasure::monic_centered(d, SCAN_COEFFICIENT_RADIUS);

    let outcomes = exec.map(samples, |i| {
        let p = measure.sample(&mut job_rng(seed, i));
        match bound_report(&p, n, flavor, cfg) {
            Ok(report) => Ok(Sample::Checked(p, report)),
            Err(e) if e.is_numerical() => Ok(Sample::Skipped),
            Err(e) => Err(e),
        }
    });

    let mut summary = ScanSummary {
        family: FamilyDescriptor {
            d,
            n,
            flavor,
            threshold: flavor.threshold(d, n),
            measure,
        },
        sample_count: samples,
        skipped: 0,
        skipped_indices: Vec::new(),
        min_observed_max: f64::INFINITY,
        argmin: None,
        argmin_index: None,
        violations: Vec::new(),
        unconfirmed_candidates: Vec::new(),
        seed,
    };
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Sample::Skipped => {
                summary.skipped += 1;
                summary.skipped_indices.push(i);
            }
            Sample::Checked(p, report) => {
                if report.observed_max < summary.min_observed_max {
                    summary.min_observed_max = report.observed_max;
                    summary.argmin = Some(p.clone());
                    summary.argmin_index = Some(i);
                }
                if !report.passed {
                    let reverification = reverify(&p, n, flavor, cfg);
                    if reverification.confirmed {
                        summary.violations.push(Violation {
                            index: i,
                            polynomial: p,
                            report,
                            reverification,
                        });
                    } else {
                        summary.unconfirmed_candidates.push(i);
                    }
                }
            }
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrictnessEntry {
    pub n: usize,
    pub m_n: f64,
    pub d_pow_n: f64,
    /// `M_n > d^n + STRICTNESS_TOL`.
    pub strict: bool,
}

/// For `n = 2..=n_max`, whether `M_n(p)` strictly exceeds `d^n`.
pub fn strictness_probe(p: &Polynomial, n_max: usize, cfg: &DynamicsConfig) -> Result<Vec<StrictnessEntry>> {
    let d = p.degree();
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    checked_power_degree(d, n_max.max(1), cfg.max_degree)?;
    (2..=n_max)
        .map(|n| {
            let report = bound_report(p, n, Flavor::C, cfg)?;
            Ok(StrictnessEntry {
                n,
                m_n: report.observed_max,
                d_pow_n: report.threshold,
                strict: report.observed_max > report.threshold + STRICTNESS_TOL,
            })
        })
        .collect()
}
