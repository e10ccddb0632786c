//! JSON-friendly serialization helpers: complex numbers as `{re, im}`
//! objects and unbounded reals with `null` standing in for infinity.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRepr {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexRepr {
    fn from(z: Complex64) -> Self {
        ComplexRepr { re: z.re, im: z.im }
    }
}

impl From<ComplexRepr> for Complex64 {
    fn from(r: ComplexRepr) -> Self {
        Complex64::new(r.re, r.im)
    }
}

/// `#[serde(with = "crate::serde_complex::object")]` for a `Complex64` field.
pub mod object {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        ComplexRepr::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        ComplexRepr::deserialize(d).map(Complex64::from)
    }
}

/// Same as [`object`] for `Vec<Complex64>`.
pub mod object_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&z| ComplexRepr::from(z)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Vec::<ComplexRepr>::deserialize(d).map(|v| v.into_iter().map(Complex64::from).collect())
    }
}

/// A real that may be `+inf` (e.g. the minimum over an empty scan),
/// written as `null` because JSON has no infinity.
pub mod unbounded {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_some(x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
