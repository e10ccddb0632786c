//! Seeded sampling. Job `index` of a run draws from ChaCha8 stream number
//! `index` under the key derived from the run seed, so every sample is
//! reproducible on its own and independent of scheduling. Runs with
//! different seeds never share a stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::poly::Polynomial;

pub fn job_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Uniform (area measure) on the closed disk `|z| <= radius`.
pub fn uniform_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    Complex64::from_polar(r, theta)
}

/// `z^d + a_{d-2} z^{d-2} + ... + a_0` from the free coefficients
/// `a_0, ..., a_{d-2}`.
pub fn monic_centered(free: &[Complex64]) -> Polynomial {
    let mut coeffs = free.to_vec();
    coeffs.push(Complex64::new(0.0, 0.0));
    coeffs.push(Complex64::new(1.0, 0.0));
    Polynomial::new(coeffs)
}

/// The measure a family scan draws polynomials from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingMeasure {
    pub form: String,
    pub degree: usize,
    pub coefficient_radius: f64,
    pub description: String,
}

impl SamplingMeasure {
    pub fn monic_centered(degree: usize, coefficient_radius: f64) -> Self {
        SamplingMeasure {
            form: "monic centered".into(),
            degree,
            coefficient_radius,
            description: format!(
                "z^{degree} + sum_{{k<{}}} a_k z^k, each a_k independent and uniform on the disk |a| <= {coefficient_radius}",
                degree - 1
            ),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Polynomial {
        let free: Vec<Complex64> = (0..self.degree - 1)
            .map(|_| uniform_disk(rng, self.coefficient_radius))
            .collect();
        monic_centered(&free)
    }
}
