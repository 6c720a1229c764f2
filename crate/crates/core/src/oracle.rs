//! Exhaustive reference engines and floating-point distance machinery.
//!
//! [`brute_force_loop`] is the root of trust for every other query path. It
//! scans all points with exactly the comparison SNN uses on its candidate
//! block, so the two agree bit-for-bit even at the radius boundary.
//! [`brute_force_matvec`] evaluates the same test through a dense
//! matrix-vector product with its own accumulation order.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{center, check_vector, column_mean, PointMatrix};
use crate::error::Result;
use crate::kernels::{dot, expanded_distance, half_norm, radius_threshold};
use crate::query::{check_radius, Hit, QueryResult};

/// Exhaustive scan over centered points in original order.
#[derive(Debug, Clone)]
pub struct BruteForce {
    mean: Vec<f64>,
    centered: PointMatrix,
    half_norms: Vec<f64>,
}

impl BruteForce {
    pub fn new(points: &PointMatrix) -> Result<Self> {
        let mean = column_mean(points)?;
        let centered = center(points, &mean)?;
        let half_norms = centered.rows().map(half_norm).collect();
        Ok(Self {
            mean,
            centered,
            half_norms,
        })
    }

    pub fn len(&self) -> usize {
        self.centered.n()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    pub fn query(&self, q: &[f64], radius: f64) -> Result<QueryResult> {
        check_radius(radius)?;
        check_vector(self.centered.d(), q)?;
        let xq: Vec<f64> = q.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let sq_norm = dot(&xq, &xq);
        let threshold = radius_threshold(radius, sq_norm);
        let hits = self
            .centered
            .rows()
            .zip(&self.half_norms)
            .enumerate()
            .filter_map(|(id, (row, &hn))| {
                let inner = dot(row, &xq);
                (hn - inner <= threshold).then(|| Hit {
                    id,
                    dist: expanded_distance(hn, inner, sq_norm),
                })
            })
            .collect();
        Ok(QueryResult { hits })
    }
}

/// Every point within `radius` of `q`, by a per-point loop.
pub fn brute_force_loop(points: &PointMatrix, q: &[f64], radius: f64) -> Result<QueryResult> {
    BruteForce::new(points)?.query(q, radius)
}

/// Exhaustive scan evaluating all inner products as one `gemv`.
#[derive(Debug, Clone)]
pub struct MatvecBruteForce {
    mean: DVector<f64>,
    centered: DMatrix<f64>,
    half_norms: DVector<f64>,
}

impl MatvecBruteForce {
    pub fn new(points: &PointMatrix) -> Result<Self> {
        let mean = column_mean(points)?;
        let centered = center(points, &mean)?;
        let centered = DMatrix::from_row_slice(centered.n(), centered.d(), centered.as_slice());
        let half_norms = DVector::from_iterator(centered.nrows(), centered.row_iter().map(|r| 0.5 * r.norm_squared()));
        Ok(Self {
            mean: DVector::from_vec(mean),
            centered,
            half_norms,
        })
    }

    pub fn query(&self, q: &[f64], radius: f64) -> Result<QueryResult> {
        check_radius(radius)?;
        check_vector(self.centered.ncols(), q)?;
        let xq = DVector::from_column_slice(q) - &self.mean;
        let sq_norm = xq.norm_squared();
        let threshold = radius_threshold(radius, sq_norm);
        let inner = &self.centered * &xq;
        let hits = self
            .half_norms
            .iter()
            .zip(inner.iter())
            .enumerate()
            .filter(|(_, (&hn, &ip))| hn - ip <= threshold)
            .map(|(id, (&hn, &ip))| Hit {
                id,
                dist: expanded_distance(hn, ip, sq_norm),
            })
            .collect();
        Ok(QueryResult { hits })
    }
}

/// Every point within `radius` of `q`, by one dense matrix-vector product.
pub fn brute_force_matvec(points: &PointMatrix, q: &[f64], radius: f64) -> Result<QueryResult> {
    MatvecBruteForce::new(points)?.query(q, radius)
}

/// Which algebraic form evaluates a squared distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceFormula {
    /// `Σ (x_k − y_k)²`
    Direct,
    /// `x·x + y·y − 2 x·y`
    Expanded,
}

/// Squared distance with strictly left-to-right accumulation.
///
/// The expanded form is returned raw; it can be slightly negative for
/// nearly identical inputs.
pub fn distance_sq(x: &[f64], y: &[f64], formula: DistanceFormula) -> Result<f64> {
    check_vector(x.len(), y)?;
    Ok(match formula {
        DistanceFormula::Direct => x.iter().zip(y).fold(0.0, |s, (a, b)| {
            let t = a - b;
            s + t * t
        }),
        DistanceFormula::Expanded => {
            let lr = |u: &[f64], v: &[f64]| u.iter().zip(v).fold(0.0, |s, (a, b)| s + a * b);
            lr(x, x) + lr(y, y) - 2.0 * lr(x, y)
        }
    })
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Angle between two vectors as `2·atan2(‖x̂ − ŷ‖, ‖x̂ + ŷ‖)` on the
/// normalized inputs, which stays accurate near 0 and π where `acos` of the
/// cosine loses digits.
pub fn angle(x: &[f64], y: &[f64]) -> Result<f64> {
    check_vector(x.len(), x)?;
    check_vector(x.len(), y)?;
    let (nx, ny) = (dot(x, x).sqrt(), dot(y, y).sqrt());
    if nx == 0.0 || ny == 0.0 {
        return Err(crate::error::SnnError::InvalidParameter(
            "angle with a zero vector".into(),
        ));
    }
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (u, v) = (a / nx, b / ny);
        minus += (u - v) * (u - v);
        plus += (u + v) * (u + v);
    }
    Ok(2.0 * minus.sqrt().atan2(plus.sqrt()))
}

/// Squared distance evaluated with error-free transformations.
///
/// Each difference is split exactly into `s + e`, its square into
/// `s² + 2se + e²` with `s²` split exactly, and every piece is accumulated
/// by compensated summation. The result carries roughly doubled working
/// precision.
pub fn reference_distance_sq(x: &[f64], y: &[f64]) -> Result<f64> {
    check_vector(x.len(), y)?;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut add = |v: f64| {
        let (s, e) = two_sum(sum, v);
        sum = s;
        comp += e;
    };
    for (&a, &b) in x.iter().zip(y) {
        let (s, e) = two_sum(a, -b);
        let (p, pe) = two_prod(s, s);
        add(p);
        add(pe);
        add(2.0 * s * e + e * e);
    }
    Ok(sum + comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gamma;

    #[test]
    fn angle_examples() {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
        assert!((angle(&[1.0, 0.0], &[0.0, 3.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((angle(&[1.0, 0.0], &[-2.0, 0.0]).unwrap() - PI).abs() < 1e-15);
        assert!((angle(&[1.0, 0.0], &[0.5, 0.75f64.sqrt()]).unwrap() - FRAC_PI_3).abs() < 1e-15);
        let tiny = angle(&[1.0, 0.0], &[1.0, 1e-12]).unwrap();
        assert!((tiny - 1e-12).abs() < 1e-24, "{tiny}");
        assert!(angle(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    fn d3() -> PointMatrix {
        PointMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]).unwrap()
    }

    #[test]
    fn loop_and_matvec_examples() {
        for f in [brute_force_loop, brute_force_matvec] {
            assert_eq!(f(&d3(), &[3.0, 4.0], 5.0).unwrap().ids(), vec![0, 1, 2]);
            assert!(f(&d3(), &[1.0, 1.0], 0.0).unwrap().is_empty());
            let one = PointMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
            assert_eq!(f(&one, &[1.5, 1.0], 0.5).unwrap().ids(), vec![0]);
            assert!(f(&one, &[1.5, 1.0], 0.49).unwrap().is_empty());
            assert!(f(&d3(), &[1.0], 1.0).is_err());
            assert!(f(&d3(), &[1.0, 1.0], -1.0).is_err());
        }
    }

    #[test]
    fn distance_sq_examples() {
        let x = [3.0, 4.0];
        let y = [0.0, 0.0];
        assert_eq!(distance_sq(&x, &y, DistanceFormula::Direct).unwrap(), 25.0);
        assert_eq!(distance_sq(&x, &y, DistanceFormula::Expanded).unwrap(), 25.0);
        let z = [0.1, 0.7, 1.3];
        assert_eq!(distance_sq(&z, &z, DistanceFormula::Direct).unwrap(), 0.0);
        let e = distance_sq(&z, &z, DistanceFormula::Expanded).unwrap();
        assert!(e.abs() < 1e-15);
        assert!(distance_sq(&x, &[1.0], DistanceFormula::Direct).is_err());
    }

    #[test]
    fn reference_is_exact_on_representable_cases() {
        assert_eq!(reference_distance_sq(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 25.0);
        // (1 + 2^-30 − 1)² = 2^-60 exactly; the direct form is also exact.
        let a = 1.0 + 2f64.powi(-30);
        assert_eq!(reference_distance_sq(&[a], &[1.0]).unwrap(), 2f64.powi(-60));
        // 0.1 − 0.3 is inexact in binary; the reference keeps the residual.
        let r = reference_distance_sq(&[0.1], &[0.3]).unwrap();
        let d = distance_sq(&[0.1], &[0.3], DistanceFormula::Direct).unwrap();
        assert!((r - d).abs() <= gamma(3) * r);
    }
}
