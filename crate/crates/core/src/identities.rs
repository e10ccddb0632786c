//! Numerical checks of the fixed-point trace identity
//!
//! ```text
//! sum over {z : p^n(z) = z} of (p^n)'(z)  =  d^n (d^n - 1) + c^n,
//! c = sum over {z : p(z) = w} of p'(z)   (independent of w)
//! ```
//!
//! and of the algebraic identities that bound `M_2(p)` from below.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fixed_points, DynamicsConfig};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rootfind::{find_roots, RootFindConfig};
use crate::serde_complex;

/// Largest allowed spread of the preimage sums over the `w` samples.
pub const C_AGREEMENT_TOL: f64 = 1e-6;

pub fn default_w_samples() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(-2.0, 0.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub n: usize,
    pub d: usize,
    #[serde(with = "serde_complex::object")]
    pub c: Complex64,
    /// Multiplicity-weighted sum of multipliers.
    #[serde(with = "serde_complex::object")]
    pub lhs: Complex64,
    /// `d^n (d^n - 1) + c^n`.
    #[serde(with = "serde_complex::object")]
    pub rhs: Complex64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    #[serde(with = "serde_complex::object_vec")]
    pub w_samples: Vec<Complex64>,
    /// Largest pairwise disagreement of the per-sample preimage sums.
    pub c_spread: f64,
}

/// `sum p'(z)` over the roots of `p(z) = w`, counted with multiplicity.
pub fn preimage_sum(p: &Polynomial, w: Complex64, cfg: &RootFindConfig) -> Result<Complex64> {
    if p.degree() < 2 {
        return Err(Error::DegreeTooLow(p.degree()));
    }
    let shifted = p - &Polynomial::constant(w);
    let dp = p.derivative();
    let roots = find_roots(&shifted, cfg)?;
    Ok(roots
        .roots
        .iter()
        .map(|r| dp.evaluate(r.location) * r.multiplicity as f64)
        .sum())
}

/// Multiplicity-weighted sum of `(p^n)'` over the fixed points of `p^n`.
pub fn trace_sum(p: &Polynomial, n: usize, cfg: &DynamicsConfig) -> Result<Complex64> {
    let report = fixed_points(p, n, cfg)?;
    Ok(report
        .points
        .iter()
        .map(|pt| pt.multiplier * pt.multiplicity as f64)
        .sum())
}

pub fn check_trace_identity(
    p: &Polynomial,
    n: usize,
    w_samples: &[Complex64],
    cfg: &DynamicsConfig,
) -> Result<TraceReport> {
    check_trace_identity_with_tol(p, n, w_samples, cfg, C_AGREEMENT_TOL)
}

pub fn check_trace_identity_with_tol(
    p: &Polynomial,
    n: usize,
    w_samples: &[Complex64],
    cfg: &DynamicsConfig,
    c_agreement_tol: f64,
) -> Result<TraceReport> {
    if w_samples.is_empty() {
        return Err(Error::InvalidArgument("need at least one w sample".into()));
    }
    let d = p.degree();
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    let cs = w_samples
        .iter()
        .map(|&w| preimage_sum(p, w, &cfg.roots))
        .collect::<Result<Vec<_>>>()?;
    let mut spread: f64 = 0.0;
    for (i, a) in cs.iter().enumerate() {
        for b in &cs[i + 1..] {
            spread = spread.max((a - b).norm());
        }
    }
    if spread > c_agreement_tol {
        return Err(Error::CInconsistent {
            spread,
            tol: c_agreement_tol,
        });
    }
    let c = cs.iter().sum::<Complex64>() / cs.len() as f64;

    let lhs = trace_sum(p, n, cfg)?;
    let dn = (d as f64).powi(n as i32);
    let rhs = Complex64::new(dn * (dn - 1.0), 0.0) + c.powu(n as u32);
    let abs_residual = (lhs - rhs).norm();
    Ok(TraceReport {
        n,
        d,
        c,
        lhs,
        rhs,
        abs_residual,
        rel_residual: abs_residual / rhs.norm().max(1.0),
        w_samples: w_samples.to_vec(),
        c_spread: spread,
    })
}

/// Both sides of
/// `Re(c^2) = d^2 (d-1)^2 / 2 - r^2 + 2 (d (d-1) / 2 - r cos t)^2`
/// for `c = -d (d-1) + r e^{it}`.
pub fn re_c2_identity(d: u32, r: f64, t: f64) -> (f64, f64) {
    let k = (d * (d - 1)) as f64;
    let c = Complex64::new(-k, 0.0) + Complex64::from_polar(r, t);
    let lhs = (c * c).re;
    let half = 0.5 * k - r * t.cos();
    let rhs = 0.5 * k * k - r * r + 2.0 * half * half;
    (lhs, rhs)
}

/// The degree-2 bookkeeping: `p'(xi_{1,2}) = 1 ± a` at the fixed points and
/// the multiplier sum over the exact-period-2 points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCycleCheck {
    #[serde(with = "serde_complex::object")]
    pub a: Complex64,
    #[serde(with = "serde_complex::object")]
    pub fixed_deriv_sum: Complex64,
    #[serde(with = "serde_complex::object")]
    pub cycle_sum: Complex64,
    /// `2 (5 - a^2)`.
    #[serde(with = "serde_complex::object")]
    pub predicted: Complex64,
}

impl QuadraticCycleCheck {
    pub fn fixed_sum_error(&self) -> f64 {
        (self.fixed_deriv_sum - 2.0).norm()
    }

    pub fn cycle_rel_error(&self) -> f64 {
        (self.cycle_sum - self.predicted).norm() / self.predicted.norm().max(1.0)
    }

    /// Fixed-point derivatives sum to 2 within `1e-8` and the cycle sum
    /// matches `2 (5 - a^2)` within `rel_tol`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.fixed_sum_error() < 1e-8 && self.cycle_rel_error() < rel_tol
    }
}

pub fn quadratic_cycle_sum_check(p: &Polynomial, cfg: &DynamicsConfig) -> Result<QuadraticCycleCheck> {
    if p.degree() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected a quadratic, got degree {}",
            p.degree()
        )));
    }
    let dp = p.derivative();
    let fixed = fixed_points(p, 1, cfg)?;
    let fixed_deriv_sum: Complex64 = fixed
        .points
        .iter()
        .map(|pt| dp.evaluate(pt.location) * pt.multiplicity as f64)
        .sum();
    let a = dp.evaluate(fixed.points[0].location) - 1.0;

    // Period-2 points, plus any excess multiplicity that a period-2 cycle
    // leaves on a fixed point of p when the two collide.
    let second = fixed_points(p, 2, cfg)?;
    let mut cycle_sum = Complex64::new(0.0, 0.0);
    for pt in &second.points {
        let weight = if pt.exact_period == 2 {
            pt.multiplicity
        } else {
            let own = fixed
                .points
                .iter()
                .min_by(|x, y| {
                    (x.location - pt.location)
                        .norm()
                        .total_cmp(&(y.location - pt.location).norm())
                })
                .map_or(0, |f| f.multiplicity);
            pt.multiplicity.saturating_sub(own)
        };
        cycle_sum += pt.multiplier * weight as f64;
    }
    Ok(QuadraticCycleCheck {
        a,
        fixed_deriv_sum,
        cycle_sum,
        predicted: (Complex64::new(5.0, 0.0) - a * a) * 2.0,
    })
}
