//! Dense complex polynomials in a single variable.
//!
//! Coefficients are stored constant term first. Trailing coefficients whose
//! modulus does not exceed [`LEADING_ZERO_THRESHOLD`] are stripped on
//! construction, so `degree()` is always the index of a genuinely nonzero
//! leading coefficient (the zero polynomial is stored as `[0]`).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_complex::ComplexRepr;

/// Coefficients at or below this modulus are treated as zero at the leading end.
pub const LEADING_ZERO_THRESHOLD: f64 = 1e-300;

/// Guard against `d^n` blowup when composing.
pub const DEFAULT_MAX_DEGREE: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    degree: usize,
    coeffs: Vec<ComplexRepr>,
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr {
            degree: p.degree(),
            coeffs: p.coeffs.into_iter().map(ComplexRepr::from).collect(),
        }
    }
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = Error;

    fn try_from(repr: PolynomialRepr) -> Result<Self> {
        let p = Polynomial::new(repr.coeffs.into_iter().map(Complex64::from).collect());
        if p.degree() != repr.degree {
            return Err(Error::Parse {
                input: format!("degree {}", repr.degree),
                reason: format!("coefficients describe degree {}", p.degree()),
            });
        }
        Ok(p)
    }
}

impl Polynomial {
    /// Builds a polynomial from constant-first coefficients, stripping
    /// negligible leading terms.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= LEADING_ZERO_THRESHOLD {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        if coeffs.len() == 1 && coeffs[0].norm() <= LEADING_ZERO_THRESHOLD {
            coeffs[0] = ZERO;
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![ZERO] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The identity map `z`.
    pub fn identity() -> Self {
        Polynomial {
            coeffs: vec![ZERO, ONE],
        }
    }

    /// `a * z^d`.
    pub fn monomial(a: Complex64, d: usize) -> Self {
        let mut coeffs = vec![ZERO; d + 1];
        coeffs[d] = a;
        Self::new(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == ZERO
    }

    /// Largest coefficient modulus.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation. Overflow shows up as a non-finite result.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &a| acc * z + a)
    }

    /// Value and first derivative in one Horner pass.
    pub fn evaluate_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut value = ZERO;
        let mut deriv = ZERO;
        for &a in self.coeffs.iter().rev() {
            deriv = deriv * z + value;
            value = value * z + a;
        }
        (value, deriv)
    }

    /// `sum |a_k| |z|^k`, the natural scale of rounding error in `evaluate`.
    pub fn evaluation_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * r + a.norm())
    }

    pub fn derivative(&self) -> Polynomial {
        if self.degree() == 0 {
            return Polynomial::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &a)| a * k as f64)
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, factor: Complex64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|&a| a * factor).collect())
    }

    /// `p(q(z))`, refusing results above [`DEFAULT_MAX_DEGREE`].
    pub fn compose(&self, q: &Polynomial) -> Result<Polynomial> {
        self.compose_with_limit(q, DEFAULT_MAX_DEGREE)
    }

    pub fn compose_with_limit(&self, q: &Polynomial, max_degree: usize) -> Result<Polynomial> {
        let degree = self.degree() * q.degree();
        if degree > max_degree {
            return Err(Error::DegreeOverflow {
                degree,
                max: max_degree,
            });
        }
        // Horner over polynomials: acc <- acc * q + a_k.
        let mut acc = Polynomial::constant(self.leading());
        for &a in self.coeffs.iter().rev().skip(1) {
            acc = &acc * q;
            acc.coeffs[0] += a;
        }
        Ok(Polynomial::new(acc.coeffs))
    }

    /// The n-th iterate `p^n = p^{n-1} ∘ p`, with `p^1 = p`.
    pub fn iterate(&self, n: usize) -> Result<Polynomial> {
        self.iterate_with_limit(n, DEFAULT_MAX_DEGREE)
    }

    pub fn iterate_with_limit(&self, n: usize, max_degree: usize) -> Result<Polynomial> {
        if n == 0 {
            return Err(Error::InvalidArgument("iterate count must be positive".into()));
        }
        checked_power_degree(self.degree(), n, max_degree)?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.compose_with_limit(self, max_degree)?;
        }
        Ok(acc)
    }

    /// `L^{-1} ∘ p ∘ L`.
    pub fn affine_conjugate(&self, map: &AffineMap) -> Polynomial {
        let inner = self
            .compose_with_limit(&map.as_polynomial(), usize::MAX)
            .expect("degree is unchanged by an affine substitution");
        let mut coeffs = inner.coeffs;
        coeffs[0] -= map.beta;
        let inv_alpha = map.alpha.inv();
        Polynomial::new(coeffs.into_iter().map(|c| c * inv_alpha).collect())
    }

    /// `[z0, p(z0), ..., p^n(z0)]`.
    pub fn orbit(&self, z0: Complex64, n: usize) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(z0);
        let mut z = z0;
        for step in 1..=n {
            z = self.evaluate(z);
            if !z.is_finite() {
                return Err(Error::NonFinite { step });
            }
            out.push(z);
        }
        Ok(out)
    }
}

/// `base^exp`, or `DegreeOverflow` when it exceeds `max_degree`.
pub fn checked_power_degree(base: usize, exp: usize, max_degree: usize) -> Result<usize> {
    let mut degree: usize = 1;
    for _ in 0..exp {
        degree = degree.saturating_mul(base);
        if degree > max_degree {
            return Err(Error::DegreeOverflow {
                degree,
                max: max_degree,
            });
        }
    }
    Ok(degree)
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..len)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(ZERO) + rhs.coeffs.get(k).copied().unwrap_or(ZERO))
            .collect();
        Polynomial::new(coeffs)
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut coeffs = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }
}

/// `L(z) = alpha * z + beta` with `alpha != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl AffineMap {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        if alpha.norm() <= LEADING_ZERO_THRESHOLD || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidArgument("affine map needs a finite nonzero scale".into()));
        }
        Ok(AffineMap { alpha, beta })
    }

    pub fn identity() -> Self {
        AffineMap { alpha: ONE, beta: ZERO }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.alpha * z + self.beta
    }

    pub fn inverse(&self) -> AffineMap {
        let alpha = self.alpha.inv();
        AffineMap {
            alpha,
            beta: -self.beta * alpha,
        }
    }

    pub fn as_polynomial(&self) -> Polynomial {
        Polynomial::new(vec![self.beta, self.alpha])
    }

    /// A map `L` with `L^{-1} ∘ p ∘ L` monic and centered (vanishing
    /// `z^{d-1}` coefficient). Uses the principal `(d-1)`-th root.
    pub fn normalizing(p: &Polynomial) -> Result<AffineMap> {
        let d = p.degree();
        if d < 2 {
            return Err(Error::DegreeTooLow(d));
        }
        let lead = p.leading();
        let alpha = lead.powf(-1.0 / (d - 1) as f64);
        let beta = -p.coeffs[d - 1] / (lead * d as f64);
        AffineMap::new(alpha, beta)
    }
}

/// Shortest round-trip form of `x`, positional for moderate magnitudes and
/// exponent form (`1.5e-20`) otherwise.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Formats a complex number in the text form `a`, `bi`, `a+bi` or `a-bi`.
///
/// Uses the shortest round-trip representation of each part, so
/// `parse_complex(&format_complex(z))` reproduces `z` bit for bit.
pub fn format_complex(z: Complex64) -> String {
    let re_is_pos_zero = z.re.to_bits() == 0;
    let im_is_pos_zero = z.im.to_bits() == 0;
    if im_is_pos_zero {
        format_real(z.re)
    } else if re_is_pos_zero {
        format!("{}i", format_real(z.im))
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", format_real(z.re), format_real(-z.im))
    } else {
        format!("{}+{}i", format_real(z.re), format_real(z.im))
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i` and `-i`).
pub fn parse_complex(input: &str) -> Result<Complex64> {
    let s = input.trim();
    let err = |reason: &str| Error::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(err("empty coefficient"));
    }
    let parse_real = |t: &str| -> Result<f64> {
        let v: f64 = t.parse().map_err(|_| err("not a number"))?;
        if !v.is_finite() {
            return Err(err("coefficient must be finite"));
        }
        Ok(v)
    };
    let parse_imag = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => parse_real(t),
        }
    };

    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(s)?, 0.0));
    };
    // Split at the last sign that is not a leading sign or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(parse_real(&body[..k])?, parse_imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, parse_imag(body)?)),
    }
}

/// Parses a comma-separated list of complex numbers.
pub fn parse_complex_list(input: &str) -> Result<Vec<Complex64>> {
    input.split(',').map(parse_complex).collect()
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|&c| format_complex(c)).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    /// Parses the constant-first text form, e.g. `-1,0,1` for `z^2 - 1`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(Polynomial::new(parse_complex_list(s)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_coeffs_close(p: &Polynomial, expected: &[Complex64], tol: f64) {
        assert_eq!(p.degree() + 1, expected.len(), "degree mismatch: {p}");
        for (a, b) in p.coeffs().iter().zip(expected) {
            assert!((a - b).norm() < tol, "{a} vs {b} in {p}");
        }
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(
            Polynomial::from_real(&[1.0, 0.0, 1.0]).evaluate(c(2.0, 0.0)),
            c(5.0, 0.0)
        );
        assert_eq!(Polynomial::identity().evaluate(c(3.0, 4.0)), c(3.0, 4.0));
        assert_eq!(Polynomial::monomial(c(1.0, 1.0), 2).evaluate(c(1.0, 0.0)), c(1.0, 1.0));
        assert_eq!(Polynomial::constant(c(7.0, -1.0)).evaluate(c(1e300, 0.0)), c(7.0, -1.0));
    }

    #[test]
    fn evaluate_overflow_is_non_finite() {
        let p = Polynomial::monomial(c(1.0, 0.0), 400);
        assert!(!p.evaluate(c(10.0, 0.0)).is_finite());
    }

    #[test]
    fn derivative_examples() {
        let p = Polynomial::new(vec![c(0.3, -0.2), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(p.derivative(), Polynomial::new(vec![c(0.0, 0.0), c(2.0, 0.0)]));
        assert!(Polynomial::constant(c(5.0, 0.0)).derivative().is_zero());
        assert_eq!(
            Polynomial::monomial(c(0.0, 2.0), 2).derivative(),
            Polynomial::monomial(c(0.0, 4.0), 1)
        );
    }

    #[test]
    fn trailing_zeros_are_stripped() {
        let p = Polynomial::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1e-301, 0.0)]);
        assert_eq!(p.degree(), 1);
        assert_eq!(Polynomial::new(vec![]).degree(), 0);
        assert!(Polynomial::new(vec![c(0.0, 0.0), c(0.0, 0.0)]).is_zero());
    }

    #[test]
    fn compose_examples() {
        let sq = Polynomial::monomial(c(1.0, 0.0), 2);
        assert_eq!(sq.compose(&sq).unwrap(), Polynomial::monomial(c(1.0, 0.0), 4));

        let p = Polynomial::from_real(&[1.0, 0.0, 1.0]);
        assert_coeffs_close(
            &p.compose(&p).unwrap(),
            &[c(2.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            0.0 + 1e-15,
        );

        // a(a z^2)^2 = a^3 z^4
        let a = c(0.7, -1.3);
        let q = Polynomial::monomial(a, 2);
        let composed = q.compose(&q).unwrap();
        assert_eq!(composed.degree(), 4);
        assert!((composed.leading() - a * a * a).norm() < 1e-14);
    }

    #[test]
    fn compose_respects_max_degree() {
        let p = Polynomial::monomial(c(1.0, 0.0), 64);
        assert_eq!(
            p.compose_with_limit(&p, 4095),
            Err(Error::DegreeOverflow {
                degree: 4096,
                max: 4095
            })
        );
        assert!(p.compose(&p).is_ok());
        assert!(matches!(
            Polynomial::monomial(c(1.0, 0.0), 2).iterate(13),
            Err(Error::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn iterate_examples() {
        let sq = Polynomial::monomial(c(1.0, 0.0), 2);
        assert_eq!(sq.iterate(2).unwrap(), Polynomial::monomial(c(1.0, 0.0), 4));
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]);
        assert_eq!(
            p.iterate(2).unwrap(),
            Polynomial::from_real(&[0.0, 0.0, -2.0, 0.0, 1.0])
        );
        let r = Polynomial::new(vec![c(0.1, 0.2), c(-0.3, 0.0), c(0.0, 1.5)]);
        assert_eq!(r.iterate(1).unwrap(), r);
        assert!(r.iterate(0).is_err());
    }

    #[test]
    fn affine_conjugate_examples() {
        let sq = Polynomial::monomial(c(1.0, 0.0), 2);
        assert_eq!(sq.affine_conjugate(&AffineMap::identity()), sq);

        let doubling = AffineMap::new(c(2.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(sq.affine_conjugate(&doubling), Polynomial::monomial(c(2.0, 0.0), 2));

        // z^2 + z = (z + 1/2)^2 - 1/4; conjugating by z - 1/2 gives z^2 + 1/4.
        let p = Polynomial::from_real(&[0.0, 1.0, 1.0]);
        let shift = AffineMap::new(c(1.0, 0.0), c(-0.5, 0.0)).unwrap();
        assert_coeffs_close(
            &p.affine_conjugate(&shift),
            &[c(0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            1e-15,
        );
        assert_eq!(AffineMap::normalizing(&p).unwrap(), shift);
    }

    #[test]
    fn normalizing_gives_monic_centered() {
        let p = Polynomial::new(vec![c(0.3, 0.1), c(-1.0, 2.0), c(0.5, 0.5), c(2.0, -1.0)]);
        let q = p.affine_conjugate(&AffineMap::normalizing(&p).unwrap());
        assert_eq!(q.degree(), 3);
        assert!((q.leading() - c(1.0, 0.0)).norm() < 1e-14);
        assert!(q.coeffs()[2].norm() < 1e-14);
    }

    #[test]
    fn affine_inverse_round_trip() {
        let map = AffineMap::new(c(0.3, -1.7), c(2.0, 0.5)).unwrap();
        let back = map.inverse();
        for z in [c(0.0, 0.0), c(1.0, 1.0), c(-3.0, 0.25)] {
            let w = back.apply(map.apply(z));
            assert!((w - z).norm() <= 1e-14 * z.norm().max(1.0));
        }
        assert!(AffineMap::new(c(0.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn orbit_examples() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]);
        assert_eq!(
            p.orbit(c(0.0, 0.0), 2).unwrap(),
            vec![c(0.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]
        );
        let sq = Polynomial::monomial(c(1.0, 0.0), 2);
        assert_eq!(sq.orbit(c(1.0, 0.0), 3).unwrap(), vec![c(1.0, 0.0); 4]);
        let q = Polynomial::from_real(&[1.0, 0.0, 1.0]);
        let expected: Vec<_> = [0.0, 1.0, 2.0, 5.0].iter().map(|&x| c(x, 0.0)).collect();
        assert_eq!(q.orbit(c(0.0, 0.0), 3).unwrap(), expected);
        assert_eq!(sq.orbit(c(1e100, 0.0), 3), Err(Error::NonFinite { step: 2 }));
    }

    #[test]
    fn parse_text_forms() {
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("2.5i").unwrap(), c(0.0, 2.5));
        assert_eq!(parse_complex("-1+2i").unwrap(), c(-1.0, 2.0));
        assert_eq!(parse_complex("1-2i").unwrap(), c(1.0, -2.0));
        assert_eq!(parse_complex(" 1e-5-3E+2i ").unwrap(), c(1e-5, -300.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert!(parse_complex("").is_err());
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("inf").is_err());
        assert!(parse_complex("1+2").is_err());

        let p: Polynomial = "-1,0,1".parse().unwrap();
        assert_eq!(p, Polynomial::from_real(&[-1.0, 0.0, 1.0]));
        assert!("1,,2".parse::<Polynomial>().is_err());
    }

    #[test]
    fn format_signed_zeros_survive() {
        for z in [c(-0.0, 2.0), c(1.0, -0.0), c(-0.0, -0.0), c(0.0, 0.0), c(-0.0, 0.0)] {
            let back = parse_complex(&format_complex(z)).unwrap();
            assert_eq!(back.re.to_bits(), z.re.to_bits(), "{z}");
            assert_eq!(back.im.to_bits(), z.im.to_bits(), "{z}");
        }
    }
}
