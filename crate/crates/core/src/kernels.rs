//! Dense inner-product kernels shared by every expanded-form comparison.
//!
//! Index construction, single and batched queries, and the brute-force loop
//! oracle all route their inner products through [`dot`]. The accumulation
//! order is fixed, so the same pair of rows always yields the same bits no
//! matter which path asked for it. That property is what makes SNN results
//! and oracle results set-identical even at the radius boundary.

const LANES: usize = 4;

/// Inner product with four interleaved accumulators, combined as
/// `(s0 + s1) + (s2 + s3)` followed by the scalar tail.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        sum += x * y;
    }
    sum
}

/// Half of the squared Euclidean norm, `dot(x, x) / 2`.
#[inline]
pub fn half_norm(x: &[f64]) -> f64 {
    0.5 * dot(x, x)
}

/// Right-hand side of the expanded radius test: `(R² − x_q·x_q) / 2`.
#[inline]
pub fn radius_threshold(radius: f64, query_sq_norm: f64) -> f64 {
    (radius * radius - query_sq_norm) / 2.0
}

/// Distance recovered from a half-norm, an inner product and the query's
/// squared norm. Tiny negative radicands from cancellation clamp to zero.
#[inline]
pub fn expanded_distance(half_norm: f64, inner: f64, query_sq_norm: f64) -> f64 {
    (2.0 * (half_norm - inner) + query_sq_norm).max(0.0).sqrt()
}

/// Manhattan distance.
#[inline]
pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Unit roundoff for binary64.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// `γ_k = k·u / (1 − k·u)`.
pub fn gamma(k: usize) -> f64 {
    let ku = k as f64 * UNIT_ROUNDOFF;
    ku / (1.0 - ku)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_on_small_integers() {
        let a: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..11).map(|i| (2 * i + 1) as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_eq!(dot(&a, &b), naive);
        assert_eq!(dot(&[], &[]), 0.0);
    }

    #[test]
    fn dot_is_symmetric_bitwise() {
        let a = [0.1, 0.7, -0.3, 1e-9, 3.3, 2.5];
        let b = [1.1, -0.2, 0.9, 4.0, -1e5, 0.25];
        assert_eq!(dot(&a, &b).to_bits(), dot(&b, &a).to_bits());
    }

    #[test]
    fn self_distance_is_exactly_zero() {
        let x = [0.3, -1.7, 2.9, 0.001, 5.5];
        let hn = half_norm(&x);
        let qq = dot(&x, &x);
        let ip = dot(&x, &x);
        assert!(hn - ip <= radius_threshold(0.0, qq));
        assert_eq!(expanded_distance(hn, ip, qq), 0.0);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(0), 0.0);
        assert!((gamma(4) - 4.0 * UNIT_ROUNDOFF).abs() < 1e-30);
    }
}
