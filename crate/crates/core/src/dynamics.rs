//! Fixed points of iterates `p^n`, their multipliers, exact periods and
//! cycles, and the max-multiplier functional `M_n(p)`.
//!
//! Everything that matters for accuracy is evaluated along orbits of `p`:
//! the root finder chases `p^n(z) - z` through `n` Horner passes, and a
//! multiplier is the chain-rule product of `p'` over the orbit. The expanded
//! coefficients of `p^n` are only used for the degree check, the initial
//! radius, and as a fallback evaluator far from the filled Julia set where
//! the orbit overflows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{checked_power_degree, Polynomial, DEFAULT_MAX_DEGREE};
use crate::rootfind::{
    find_roots_of, newton_polygon_guesses, robust_div, BalancedPolynomial, Probe, RootFindConfig, RootTarget,
    DERIVATIVE_FLOOR,
};
use crate::serde_complex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub roots: RootFindConfig,
    pub fixpoint_tol: f64,
    pub classify_tol: f64,
    pub parabolic_tol: f64,
    pub max_degree: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            roots: RootFindConfig::default(),
            fixpoint_tol: 1e-8,
            classify_tol: 1e-9,
            parabolic_tol: 1e-4,
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Indifferent,
    Repelling,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Attracting => "attracting",
            Stability::Indifferent => "indifferent",
            Stability::Repelling => "repelling",
        }
    }
}

/// A fixed point of `p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    #[serde(with = "serde_complex::object")]
    pub location: Complex64,
    /// `(p^n)'(location)`.
    #[serde(with = "serde_complex::object")]
    pub multiplier: Complex64,
    /// Multiplicity as a root of `p^n(z) - z`.
    pub multiplicity: usize,
    pub exact_period: usize,
    pub cycle_id: usize,
}

impl PeriodicPoint {
    pub fn abs_multiplier(&self) -> f64 {
        self.multiplier.norm()
    }
}

/// Repelling iff `|multiplier| > 1 + tol`, attracting iff `< 1 - tol`.
pub fn classify(pt: &PeriodicPoint, tol: f64) -> Stability {
    classify_multiplier(pt.multiplier, tol)
}

pub fn classify_multiplier(multiplier: Complex64, tol: f64) -> Stability {
    let r = multiplier.norm();
    if r > 1.0 + tol {
        Stability::Repelling
    } else if r < 1.0 - tol {
        Stability::Attracting
    } else {
        Stability::Indifferent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub n: usize,
    pub d: usize,
    pub points: Vec<PeriodicPoint>,
    pub total_count_with_multiplicity: usize,
    /// Multiple points whose multiplier is not near 1, and similar anomalies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FixedPointReport {
    /// Multipliers repeated according to multiplicity.
    pub fn multiplier_multiset(&self) -> Vec<Complex64> {
        self.points
            .iter()
            .flat_map(|pt| std::iter::repeat_n(pt.multiplier, pt.multiplicity))
            .collect()
    }

    /// A point of maximal `|multiplier|`, first one on ties.
    pub fn witness(&self) -> Option<&PeriodicPoint> {
        self.points
            .iter()
            .fold(None, |best: Option<&PeriodicPoint>, pt| match best {
                Some(b) if b.abs_multiplier() >= pt.abs_multiplier() => Some(b),
                _ => Some(pt),
            })
    }
}

/// Radius outside of which `|p(z)| > |z|`, so every periodic point lies in
/// the closed disk of this radius.
///
/// This is the unique positive root of
/// `|a_d| r^d - sum_{k<d} |a_k| r^k - r`, found by bisection.
pub fn escape_radius(p: &Polynomial) -> f64 {
    let d = p.degree();
    let moduli: Vec<f64> = p.coeffs().iter().map(|a| a.norm()).collect();
    let h = |r: f64| {
        let lower: f64 = moduli[..d].iter().rev().fold(0.0, |acc, m| acc * r + m) + r;
        moduli[d] * r.powi(d as i32) - lower
    };
    // Crude upper bound where h is positive, then bisect.
    let tail: f64 = moduli[..d].iter().sum();
    let mut hi = ((tail + 1.0) / moduli[d]).max(1.0);
    while h(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `p^n(z) - z`, evaluated along the orbit.
struct FixedPointTarget<'a> {
    p: &'a Polynomial,
    n: usize,
    expanded: BalancedPolynomial,
    escape: f64,
}

impl<'a> FixedPointTarget<'a> {
    fn new(p: &'a Polynomial, n: usize, max_degree: usize) -> Result<Self> {
        let pn = p.iterate_with_limit(n, max_degree)?;
        let q = &pn - &Polynomial::identity();
        let expanded = BalancedPolynomial::new(&q);
        Ok(FixedPointTarget {
            p,
            n,
            expanded,
            escape: escape_radius(p),
        })
    }

    /// Value, derivative and running error scale of `p^n(z) - z`.
    fn orbit_eval(&self, z: Complex64) -> (Complex64, Complex64, f64) {
        let mut w = z;
        let mut deriv = Complex64::new(1.0, 0.0);
        let mut scale = 0.0;
        for _ in 0..self.n {
            let (v, dv) = self.p.evaluate_with_derivative(w);
            scale = dv.norm() * scale + self.p.evaluation_scale(w);
            deriv *= dv;
            w = v;
        }
        (w - z, deriv - 1.0, scale + z.norm())
    }
}

impl RootTarget for FixedPointTarget<'_> {
    fn degree(&self) -> usize {
        self.expanded.polynomial().degree()
    }

    fn initial_guesses(&self) -> Vec<Complex64> {
        newton_polygon_guesses(self.expanded.polynomial().coeffs(), self.escape)
    }

    fn probe(&self, z: Complex64) -> Probe {
        let (f, df, scale) = self.orbit_eval(z);
        if !(f.is_finite() && df.is_finite() && scale.is_finite()) {
            return self.expanded.probe(z);
        }
        Probe {
            newton_ratio: (df.norm() > DERIVATIVE_FLOOR).then(|| robust_div(f, df)),
            residual: f.norm() / scale.max(1.0),
        }
    }

    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let (f, df, _) = self.orbit_eval(z);
        (f, df)
    }
}

/// `(p^n)'(xi)` as the product of `p'` along the orbit of `xi`.
pub fn multiplier(p: &Polynomial, n: usize, xi: Complex64) -> Complex64 {
    let mut w = xi;
    let mut product = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        let (v, dv) = p.evaluate_with_derivative(w);
        product *= dv;
        w = v;
    }
    product
}

/// All fixed points of `p^n` with multiplicities, multipliers and cycles.
pub fn fixed_points(p: &Polynomial, n: usize, cfg: &DynamicsConfig) -> Result<FixedPointReport> {
    let d = p.degree();
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let expected = checked_power_degree(d, n, cfg.max_degree)?;
    let target = FixedPointTarget::new(p, n, cfg.max_degree)?;
    let set = find_roots_of(&target, &cfg.roots)?;

    let points: Vec<PeriodicPoint> = set
        .roots
        .iter()
        .map(|r| PeriodicPoint {
            location: r.location,
            multiplier: multiplier(p, n, r.location),
            multiplicity: r.multiplicity,
            exact_period: n,
            cycle_id: 0,
        })
        .collect();
    let (points, mut warnings) = group_cycles_with_warnings(points, p, n, cfg.fixpoint_tol);

    for pt in points.iter().filter(|pt| pt.multiplicity >= 2) {
        if (pt.multiplier - 1.0).norm() >= cfg.parabolic_tol {
            warnings.push(format!(
                "point {} has multiplicity {} but multiplier {} (not parabolic); \
                 likely two distinct roots closer than the cluster radius",
                pt.location, pt.multiplicity, pt.multiplier
            ));
        }
    }

    let total = points.iter().map(|pt| pt.multiplicity).sum();
    debug_assert_eq!(total, expected);
    Ok(FixedPointReport {
        n,
        d,
        points,
        total_count_with_multiplicity: total,
        warnings,
    })
}

/// Fills `exact_period` and `cycle_id` for fixed points of `p^n`.
pub fn group_cycles(points: Vec<PeriodicPoint>, p: &Polynomial, n: usize, fixpoint_tol: f64) -> Vec<PeriodicPoint> {
    group_cycles_with_warnings(points, p, n, fixpoint_tol).0
}

fn group_cycles_with_warnings(
    mut points: Vec<PeriodicPoint>,
    p: &Polynomial,
    n: usize,
    fixpoint_tol: f64,
) -> (Vec<PeriodicPoint>, Vec<String>) {
    let mut warnings = Vec::new();
    let divisors: Vec<usize> = (1..n).filter(|&m| n.is_multiple_of(m)).collect();
    for pt in points.iter_mut() {
        let xi = pt.location;
        let tol = fixpoint_tol * xi.norm().max(1.0);
        let mut w = xi;
        let mut steps = 0;
        pt.exact_period = n;
        for &m in &divisors {
            while steps < m {
                w = p.evaluate(w);
                steps += 1;
            }
            if (w - xi).norm() < tol {
                pt.exact_period = m;
                break;
            }
        }
    }

    // Follow each orbit, matching the image to the nearest unassigned point
    // of the same exact period.
    let mut assigned = vec![false; points.len()];
    let mut next_id = 0;
    for start in 0..points.len() {
        if assigned[start] {
            continue;
        }
        let period = points[start].exact_period;
        assigned[start] = true;
        points[start].cycle_id = next_id;
        let mut current = points[start].location;
        for _ in 1..period {
            let image = p.evaluate(current);
            let nearest = points
                .iter()
                .enumerate()
                .filter(|&(j, q)| !assigned[j] && q.exact_period == period)
                .map(|(j, q)| (j, (q.location - image).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let Some((j, gap)) = nearest else {
                warnings.push(format!("cycle through {} is incomplete", points[start].location));
                break;
            };
            if gap > fixpoint_tol.sqrt() * image.norm().max(1.0) {
                warnings.push(format!(
                    "image {image} matched to {} at distance {gap:e}",
                    points[j].location
                ));
            }
            assigned[j] = true;
            points[j].cycle_id = next_id;
            current = points[j].location;
        }
        next_id += 1;
    }
    (points, warnings)
}

/// `M_n(p)`: the largest `|(p^n)'(xi)|` over fixed points of `p^n`.
pub fn max_multiplier(p: &Polynomial, n: usize, cfg: &DynamicsConfig) -> Result<f64> {
    Ok(max_multiplier_point(p, n, cfg)?.abs_multiplier())
}

/// A fixed point attaining `M_n(p)`.
pub fn max_multiplier_point(p: &Polynomial, n: usize, cfg: &DynamicsConfig) -> Result<PeriodicPoint> {
    let report = fixed_points(p, n, cfg)?;
    Ok(*report.witness().expect("degree >= 2 gives at least one fixed point"))
}
