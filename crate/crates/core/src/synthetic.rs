//! Seeded synthetic datasets.
//!
//! All generators draw from ChaCha8 seeded with a `u64`, so a given seed
//! produces the same points on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::PointMatrix;
use crate::error::{Result, SnnError};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points i.i.d. uniform on `[0, 1]^d`.
pub fn uniform(n: usize, d: usize, seed: u64) -> Result<PointMatrix> {
    let mut r = rng(seed);
    let data = (0..n * d).map(|_| r.random::<f64>()).collect();
    PointMatrix::new(n, d, data)
}

/// `n` points of a zero-mean Gaussian with standard deviations `(1, s, …, s)`.
pub fn blob(n: usize, d: usize, s: f64, seed: u64) -> Result<PointMatrix> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(SnnError::InvalidParameter(format!(
            "elongation s = {s} must be positive"
        )));
    }
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for k in 0..d {
            let z: f64 = StandardNormal.sample(&mut r);
            data.push(if k == 0 { z } else { s * z });
        }
    }
    PointMatrix::new(n, d, data)
}

/// Isotropic Gaussian cluster around `center` with standard deviation `std`.
pub fn gaussian_cluster(n: usize, center: &[f64], std: f64, seed: u64) -> Result<PointMatrix> {
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(n * center.len());
    for _ in 0..n {
        for &c in center {
            let z: f64 = StandardNormal.sample(&mut r);
            data.push(c + std * z);
        }
    }
    PointMatrix::new(n, center.len(), data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Synthetic {
    Uniform,
    Blob { s: f64 },
}

impl Synthetic {
    pub fn generate(&self, n: usize, d: usize, seed: u64) -> Result<PointMatrix> {
        match *self {
            Self::Uniform => uniform(n, d, seed),
            Self::Blob { s } => blob(n, d, s, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generators_are_reproducible() {
        assert_eq!(uniform(10, 3, 7).unwrap(), uniform(10, 3, 7).unwrap());
        assert_ne!(uniform(10, 3, 7).unwrap(), uniform(10, 3, 8).unwrap());
        assert_eq!(blob(10, 3, 0.2, 1).unwrap(), blob(10, 3, 0.2, 1).unwrap());
    }

    #[test]
    fn uniform_stays_in_unit_cube() {
        let u = uniform(1000, 4, 3).unwrap();
        assert!(u.as_slice().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn blob_has_requested_spread() {
        let b = blob(20_000, 3, 0.25, 11).unwrap();
        for (k, want) in [(0usize, 1.0f64), (1, 0.25), (2, 0.25)] {
            let col: Vec<f64> = b.rows().map(|r| r[k]).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!((sd - want).abs() < 0.02 * want.max(0.5), "col {k}: {sd}");
        }
        assert!(blob(5, 2, 0.0, 1).is_err());
    }
}
