//! Simultaneous root finding (Aberth–Ehrlich) with Newton polishing and
//! clustering of near-coincident roots into multiplicities.
//!
//! The iteration is generic over [`RootTarget`], so the same driver solves
//! an explicit polynomial and an implicitly evaluated map such as
//! `p^n(z) - z` computed along the orbit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::serde_complex;

/// Rotation of the initial rings, keeps guesses off symmetry axes.
const INITIAL_ANGLE_OFFSET: f64 = 0.4;

/// Absolute floor on the evaluation scale of a balanced polynomial (largest
/// coefficient modulus 1). It only binds near roots at the origin, where
/// `|q| / scale` tends to 1 and could never reach the tolerance.
const BALANCED_SCALE_FLOOR: f64 = 1e-24;

/// Below this modulus a derivative counts as zero.
pub const DERIVATIVE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootFindConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the relative residual `|f(z)| / scale(z)`.
    pub residual_tol: f64,
    pub cluster_radius: f64,
    pub newton_polish_steps: usize,
    pub restart_perturbation: f64,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        RootFindConfig {
            max_iterations: 200,
            residual_tol: 1e-12,
            cluster_radius: 1e-6,
            newton_polish_steps: 3,
            restart_perturbation: 1e-3,
        }
    }
}

impl RootFindConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iterations > 0
            && self.residual_tol > 0.0
            && self.cluster_radius > 0.0
            && self.newton_polish_steps > 0
            && self.restart_perturbation > 0.0;
        if !positive {
            return Err(Error::InvalidArgument(
                "root-finding parameters must all be positive".into(),
            ));
        }
        if self.cluster_radius <= self.residual_tol {
            return Err(Error::InvalidArgument("cluster_radius must exceed residual_tol".into()));
        }
        Ok(())
    }
}

/// `a / b` without forming `|b|^2`, so huge finite operands do not
/// overflow to NaN (Smith's algorithm).
pub fn robust_div(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let den = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / den, (a.im - a.re * r) / den)
    } else {
        let r = b.re / b.im;
        let den = b.re * r + b.im;
        Complex64::new((a.re * r + a.im) / den, (a.im * r - a.re) / den)
    }
}

/// One cluster of roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    #[serde(with = "serde_complex::object")]
    pub location: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Every root repeated according to its multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.location, r.multiplicity))
            .collect()
    }
}

/// Local information the Aberth driver needs at a point.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    /// `f(z) / f'(z)`, or `None` when the derivative vanishes.
    pub newton_ratio: Option<Complex64>,
    /// `|f(z)|` divided by the evaluation scale at `z`; small means "is a root".
    pub residual: f64,
}

/// A function with exactly `degree()` roots (counted with multiplicity).
pub trait RootTarget {
    fn degree(&self) -> usize;

    /// Starting approximations for the Aberth sweep, one per root.
    fn initial_guesses(&self) -> Vec<Complex64>;

    fn probe(&self, z: Complex64) -> Probe;

    /// Plain value and derivative, used for Newton polishing.
    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64);
}

/// A polynomial with coefficients divided by their largest modulus.
#[derive(Debug, Clone)]
pub struct BalancedPolynomial {
    poly: Polynomial,
    reversed: Polynomial,
}

impl BalancedPolynomial {
    pub fn new(q: &Polynomial) -> Self {
        let scale = q.max_coeff_norm();
        let poly = if scale > 0.0 && scale.is_finite() {
            q.scale(Complex64::new(1.0 / scale, 0.0))
        } else {
            q.clone()
        };
        let mut rev = poly.coeffs().to_vec();
        rev.reverse();
        // Dropping zero high-order terms of the reversal leaves its value unchanged.
        let reversed = Polynomial::new(rev);
        BalancedPolynomial { poly, reversed }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    /// `1 + max_k |a_k / a_d|`.
    pub fn cauchy_radius(&self) -> f64 {
        let lead = self.poly.leading().norm();
        let d = self.poly.degree();
        1.0 + self.poly.coeffs()[..d]
            .iter()
            .map(|a| a.norm() / lead)
            .fold(0.0, f64::max)
    }
}

impl RootTarget for BalancedPolynomial {
    fn degree(&self) -> usize {
        self.poly.degree()
    }

    fn initial_guesses(&self) -> Vec<Complex64> {
        newton_polygon_guesses(self.poly.coeffs(), self.cauchy_radius())
    }

    fn probe(&self, z: Complex64) -> Probe {
        let d = self.poly.degree();
        if z.norm() <= 1.0 {
            let (f, df) = self.poly.evaluate_with_derivative(z);
            let scale = self.poly.evaluation_scale(z).max(BALANCED_SCALE_FLOOR);
            return Probe {
                newton_ratio: (df.norm() > DERIVATIVE_FLOOR).then(|| robust_div(f, df)),
                residual: f.norm() / scale,
            };
        }
        // q(z) = z^d r(1/z) with r the reversed polynomial; evaluate r at w = 1/z.
        let w = z.inv();
        let rev_coeffs = self.reversed.coeffs();
        let mut r = Complex64::new(0.0, 0.0);
        let mut dr = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        let wn = w.norm();
        for &a in rev_coeffs.iter().rev() {
            dr = dr * w + r;
            r = r * w + a;
            scale = scale * wn + a.norm();
        }
        let denom = r * d as f64 - w * dr;
        // |q| / max(S, floor) rewritten with q = z^d r and S = |z|^d scale.
        let floor = BALANCED_SCALE_FLOOR * (-(d as f64) * z.norm().ln()).exp();
        Probe {
            newton_ratio: (denom.norm() > DERIVATIVE_FLOOR).then(|| robust_div(z * r, denom)),
            residual: r.norm() / scale.max(floor),
        }
    }

    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        self.poly.evaluate_with_derivative(z)
    }
}

/// Roots of `q` with multiplicities.
pub fn find_roots(q: &Polynomial, cfg: &RootFindConfig) -> Result<RootSet> {
    if q.degree() < 1 {
        return Err(Error::InvalidArgument("root finding needs degree at least 1".into()));
    }
    find_roots_of(&BalancedPolynomial::new(q), cfg)
}

/// Aberth iteration, one perturbed restart, Newton polishing, clustering.
pub fn find_roots_of<T: RootTarget>(target: &T, cfg: &RootFindConfig) -> Result<RootSet> {
    cfg.validate()?;
    let guesses = target.initial_guesses();
    let (mut raw, iterations_used) = match aberth(target, guesses.clone(), cfg) {
        Ok(out) => out,
        Err(first) => {
            let stretch = 1.0 + cfg.restart_perturbation;
            let restart = guesses.iter().map(|z| z * stretch).collect();
            aberth(target, restart, cfg).map_err(|second| Error::NoConvergence {
                iterations: first + second,
            })?
        }
    };

    let max_move = 10.0 * cfg.cluster_radius;
    for z in raw.iter_mut() {
        if let Ok(polished) = newton_polish(
            |x| target.value_and_derivative(x),
            *z,
            cfg.newton_polish_steps,
            max_move,
        ) {
            *z = polished;
        }
    }

    let roots = cluster_with_residual_links(&raw, cfg, |z| target.probe(z).residual)
        .into_iter()
        .map(|(location, multiplicity)| Root { location, multiplicity })
        .collect();
    Ok(RootSet {
        roots,
        converged: true,
        iterations_used,
    })
}

/// Starting points on concentric circles read off the Newton polygon of
/// the coefficient moduli: an edge of the upper convex hull of
/// `(k, log |a_k|)` from `i` to `j` places `j - i` points on the circle of
/// radius `(|a_i| / |a_j|)^(1 / (j - i))`. Radii are capped at `max_radius`.
/// Points are rotated by a fixed offset to avoid symmetry locking.
pub fn newton_polygon_guesses(coeffs: &[Complex64], max_radius: f64) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    let points: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(k, a)| (k, a.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }

    let mut guesses = Vec::with_capacity(degree);
    let mut smallest = max_radius;
    // Edges beyond the cap share a single evenly spaced ring.
    let mut capped = 0;
    for edge in hull.windows(2) {
        let ((i, yi), (j, yj)) = (edge[0], edge[1]);
        let count = j - i;
        let radius = ((yi - yj) / count as f64).exp();
        if radius >= max_radius {
            capped += count;
            continue;
        }
        smallest = smallest.min(radius);
        for m in 0..count {
            let theta = 2.0 * PI * (m as f64 / count as f64 + i as f64 / degree as f64) + INITIAL_ANGLE_OFFSET;
            guesses.push(Complex64::from_polar(radius, theta));
        }
    }
    for m in 0..capped {
        let theta = 2.0 * PI * m as f64 / capped as f64 + INITIAL_ANGLE_OFFSET;
        guesses.push(Complex64::from_polar(max_radius, theta));
    }
    // Roots at the origin (vanishing low-order coefficients), or a monomial.
    let zeros = degree - guesses.len();
    let inner = if guesses.is_empty() {
        1.0_f64.min(max_radius)
    } else {
        1e-2 * smallest
    };
    for m in 0..zeros {
        let theta = 2.0 * PI * m as f64 / zeros as f64 + INITIAL_ANGLE_OFFSET;
        guesses.push(Complex64::from_polar(inner, theta));
    }
    guesses
}

/// Jacobi-style Aberth–Ehrlich sweep from the given starting points.
/// Returns the raw approximations, or the number of iterations spent.
fn aberth<T: RootTarget>(
    target: &T,
    mut z: Vec<Complex64>,
    cfg: &RootFindConfig,
) -> std::result::Result<(Vec<Complex64>, usize), usize> {
    let d = target.degree();
    let mut done = vec![false; d];
    // Consecutive sweeps with the residual under tolerance. A root is frozen
    // on the second one, so it always receives one step past the threshold.
    let mut hits = vec![0u8; d];
    let mut step = vec![Complex64::new(0.0, 0.0); d];

    for iter in 0..cfg.max_iterations {
        let mut all_done = true;
        for i in 0..d {
            if done[i] {
                step[i] = Complex64::new(0.0, 0.0);
                continue;
            }
            let probe = target.probe(z[i]);
            if !probe.residual.is_finite() && probe.newton_ratio.is_none() {
                return Err(iter + 1);
            }
            if probe.residual <= cfg.residual_tol {
                hits[i] += 1;
                if hits[i] >= 2 {
                    done[i] = true;
                    step[i] = Complex64::new(0.0, 0.0);
                    continue;
                }
            } else {
                hits[i] = 0;
            }
            all_done = false;
            let repulsion: Complex64 = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            step[i] = aberth_correction(probe.newton_ratio, repulsion);
            if !step[i].is_finite() {
                // Exact coincidence with another approximation.
                let kick = cfg.cluster_radius * z[i].norm().max(1.0);
                step[i] = Complex64::from_polar(kick, i as f64 + INITIAL_ANGLE_OFFSET);
            }
        }
        if all_done {
            return Ok((z, iter));
        }
        for i in 0..d {
            z[i] -= step[i];
        }
        if z.iter().any(|w| !w.is_finite()) {
            return Err(iter + 1);
        }
    }
    Err(cfg.max_iterations)
}

/// Non-finite when the approximation coincides with another one.
fn aberth_correction(ratio: Option<Complex64>, repulsion: Complex64) -> Complex64 {
    // Limit of the Aberth step as f/f' grows without bound.
    let repel = || {
        if !repulsion.is_finite() {
            Complex64::new(f64::NAN, f64::NAN)
        } else if repulsion.norm() > 0.0 {
            -repulsion.inv()
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    match ratio {
        Some(n) => {
            let w = robust_div(n, Complex64::new(1.0, 0.0) - n * repulsion);
            // A vanishing denominator means the Newton target is already held
            // by a neighbour; falling back to the plain Newton step would
            // duplicate it.
            if w.is_finite() {
                w
            } else {
                repel()
            }
        }
        None => repel(),
    }
}

/// At most `steps` Newton updates from `z0`, never leaving the disk of
/// radius `max_move` around `z0`. Returns the visited point with the
/// smallest `|f|`.
pub fn newton_polish<F>(f: F, z0: Complex64, steps: usize, max_move: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let (mut value, mut deriv) = f(z0);
    let mut best = (z0, value.norm());
    let mut z = z0;
    for _ in 0..steps {
        if value.norm() == 0.0 || !value.is_finite() {
            break;
        }
        if deriv.norm() < DERIVATIVE_FLOOR {
            return Err(Error::DerivativeVanishes { re: z.re, im: z.im });
        }
        let next = z - robust_div(value, deriv);
        if !next.is_finite() || (next - z0).norm() > max_move {
            break;
        }
        z = next;
        (value, deriv) = f(z);
        if value.norm() < best.1 {
            best = (z, value.norm());
        }
    }
    Ok(best.0)
}

/// Single-linkage clustering: points closer than `radius` (transitively)
/// form one cluster, reported as its centroid and size. Clusters are ordered
/// by their first member.
pub fn cluster_roots(raw: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    cluster_by(raw, |a, b| (raw[a] - raw[b]).norm() < radius)
}

/// Geometric clustering plus residual links: two roots are also joined when
/// the midpoint between them is itself numerically a root, which catches the
/// spread of a multiple root beyond `cluster_radius`.
fn cluster_with_residual_links<R>(raw: &[Complex64], cfg: &RootFindConfig, residual: R) -> Vec<(Complex64, usize)>
where
    R: Fn(Complex64) -> f64,
{
    const LINK_WINDOW: f64 = 1e-3;
    cluster_by(raw, |a, b| {
        let gap = (raw[a] - raw[b]).norm();
        if gap < cfg.cluster_radius {
            return true;
        }
        let scale = raw[a].norm().max(raw[b].norm()).max(1.0);
        gap < LINK_WINDOW * scale && residual((raw[a] + raw[b]) * 0.5) <= cfg.residual_tol
    })
}

fn cluster_by<L>(raw: &[Complex64], linked: L) -> Vec<(Complex64, usize)>
where
    L: Fn(usize, usize) -> bool,
{
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb && linked(a, b) {
                // Root at the smaller index so ordering follows first members.
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut sums: Vec<(Complex64, usize)> = vec![(Complex64::new(0.0, 0.0), 0); n];
    for (i, &z) in raw.iter().enumerate() {
        let r = find(&mut parent, i);
        if sums[r].1 == 0 {
            order.push(r);
        }
        sums[r].0 += z;
        sums[r].1 += 1;
    }
    order
        .into_iter()
        .map(|r| (sums[r].0 / sums[r].1 as f64, sums[r].1))
        .collect()
}
