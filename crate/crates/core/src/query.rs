//! Radius queries: score band by binary search, then the half-norm filter
//! over the contiguous candidate block.

use crate::dataset::{check_dim, PointMatrix};
use crate::error::{Result, SnnError};
use crate::indexer::SnnIndex;
use crate::kernels::{dot, expanded_distance, gamma, radius_threshold};

/// Half-open block `[lo, hi)` of sorted positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CandidateRange {
    pub lo: usize,
    pub hi: usize,
}

impl CandidateRange {
    #[inline]
    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    #[inline]
    pub fn contains(&self, pos: usize) -> bool {
        self.lo <= pos && pos < self.hi
    }
}

/// One neighbor: original point id and its Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub id: usize,
    pub dist: f64,
}

/// Neighbors of a query, sorted by ascending id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryResult {
    pub hits: Vec<Hit>,
}

impl QueryResult {
    pub(crate) fn from_unsorted(mut hits: Vec<Hit>) -> Self {
        hits.sort_unstable_by_key(|h| h.id);
        Self { hits }
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.hits.iter().map(|h| h.id).collect()
    }
}

/// A query result together with the candidate block that was scanned.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub result: QueryResult,
    pub range: CandidateRange,
}

pub(crate) fn check_radius(radius: f64) -> Result<()> {
    if radius.is_nan() || radius < 0.0 {
        return Err(SnnError::NegativeRadius(radius));
    }
    Ok(())
}

/// Query state shared by the single and batched paths.
pub(crate) struct PreparedQuery {
    pub xq: Vec<f64>,
    pub sq_norm: f64,
    pub threshold: f64,
    pub range: CandidateRange,
}

impl SnnIndex {
    /// Sorted positions whose score lies in `[alpha_q − radius, alpha_q + radius]`.
    pub fn candidate_range(&self, alpha_q: f64, radius: f64) -> Result<CandidateRange> {
        check_radius(radius)?;
        Ok(self.score_band(alpha_q, radius))
    }

    fn score_band(&self, alpha_q: f64, half_width: f64) -> CandidateRange {
        let scores = self.scores();
        let lo = scores.partition_point(|&a| a < alpha_q - half_width);
        let hi = lo + scores[lo..].partition_point(|&a| a <= alpha_q + half_width);
        CandidateRange { lo, hi }
    }

    /// Band half-width actually scanned for radius `radius`.
    ///
    /// The score difference bounds the true distance from below only in
    /// exact arithmetic. The half-width is widened by the rounding envelope
    /// of the score and expanded-distance evaluations so that every point
    /// accepted by the expanded comparison is inside the band.
    pub(crate) fn band_half_width(&self, sq_norm: f64, radius: f64) -> f64 {
        let d = self.dim();
        let scale = self.max_norm() + sq_norm.sqrt();
        let sq_slack = 4.0 * gamma(d + 4) * scale * scale;
        let g = gamma(d + 2);
        (radius * radius + sq_slack).sqrt() * (1.0 + 2.0 * g) + 2.0 * g * scale
    }

    /// Centers `q`, scores it and locates its band, using `band_radius` for
    /// the band and `radius` for the distance threshold.
    pub(crate) fn prepare(&self, q: &[f64], radius: f64, band_radius: f64) -> Result<PreparedQuery> {
        check_radius(radius)?;
        let xq = self.center_query(q)?;
        let sq_norm = dot(&xq, &xq);
        let alpha = dot(&xq, self.direction());
        let range = self.score_band(alpha, self.band_half_width(sq_norm, band_radius));
        Ok(PreparedQuery {
            threshold: radius_threshold(radius, sq_norm),
            xq,
            sq_norm,
            range,
        })
    }

    /// All points within Euclidean distance `radius` of `q` (boundary inclusive).
    pub fn query_radius(&self, q: &[f64], radius: f64) -> Result<QueryResult> {
        Ok(self.query_radius_with_range(q, radius)?.result)
    }

    /// Like [`SnnIndex::query_radius`], also reporting the scanned block.
    pub fn query_radius_with_range(&self, q: &[f64], radius: f64) -> Result<QueryOutcome> {
        let pq = self.prepare(q, radius, radius)?;
        let half_norms = self.half_norms();
        let perm = self.perm();
        let mut hits = Vec::new();
        for pos in pq.range.lo..pq.range.hi {
            let inner = dot(self.sorted_row(pos), &pq.xq);
            let lhs = half_norms[pos] - inner;
            if lhs <= pq.threshold {
                hits.push(Hit {
                    id: perm[pos],
                    dist: expanded_distance(half_norms[pos], inner, pq.sq_norm),
                });
            }
        }
        Ok(QueryOutcome {
            result: QueryResult::from_unsorted(hits),
            range: pq.range,
        })
    }

    /// Answers every row of `queries` with one block product over the union
    /// of their candidate bands.
    ///
    /// Element `k` of the output equals `query_radius(queries.row(k), radius)`.
    pub fn query_radius_batch(&self, queries: &PointMatrix, radius: f64) -> Result<Vec<QueryResult>> {
        check_radius(radius)?;
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        check_dim(self.dim(), queries.d())?;
        let prepared = queries
            .rows()
            .map(|q| self.prepare(q, radius, radius))
            .collect::<Result<Vec<_>>>()?;

        let mut hits: Vec<Vec<Hit>> = vec![Vec::new(); prepared.len()];
        let live = prepared.iter().filter(|p| !p.range.is_empty());
        let union = live.fold(None, |acc: Option<CandidateRange>, p| {
            Some(match acc {
                None => p.range,
                Some(u) => CandidateRange {
                    lo: u.lo.min(p.range.lo),
                    hi: u.hi.max(p.range.hi),
                },
            })
        });
        let Some(union) = union else {
            return Ok(hits.into_iter().map(QueryResult::from_unsorted).collect());
        };

        const BLOCK_ROWS: usize = 256;
        let ell = prepared.len();
        let half_norms = self.half_norms();
        let perm = self.perm();
        let mut products = vec![0.0; BLOCK_ROWS * ell];
        let mut start = union.lo;
        while start < union.hi {
            let end = (start + BLOCK_ROWS).min(union.hi);
            for (r, pos) in (start..end).enumerate() {
                let row = self.sorted_row(pos);
                let out = &mut products[r * ell..(r + 1) * ell];
                for (o, pq) in out.iter_mut().zip(&prepared) {
                    *o = dot(row, &pq.xq);
                }
            }
            for (k, pq) in prepared.iter().enumerate() {
                let lo = pq.range.lo.max(start);
                let hi = pq.range.hi.min(end);
                for pos in lo..hi {
                    let inner = products[(pos - start) * ell + k];
                    if half_norms[pos] - inner <= pq.threshold {
                        hits[k].push(Hit {
                            id: perm[pos],
                            dist: expanded_distance(half_norms[pos], inner, pq.sq_norm),
                        });
                    }
                }
            }
            start = end;
        }
        Ok(hits.into_iter().map(QueryResult::from_unsorted).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> SnnIndex {
        SnnIndex::build(&PointMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]).unwrap()).unwrap()
    }

    fn pairs(r: &QueryResult) -> Vec<(usize, f64)> {
        r.hits.iter().map(|h| (h.id, h.dist)).collect()
    }

    fn assert_hits(r: &QueryResult, want: &[(usize, f64)]) {
        assert_eq!(r.ids(), want.iter().map(|w| w.0).collect::<Vec<_>>());
        for (h, w) in r.hits.iter().zip(want) {
            assert!((h.dist - w.1).abs() <= 1e-12, "{:?} vs {:?}", pairs(r), want);
        }
    }

    #[test]
    fn candidate_range_examples() {
        let idx = SnnIndex::from_parts(
            1,
            vec![0.0],
            vec![1.0],
            [0.0, 0.0],
            vec![-5.0, 0.0, 5.0],
            vec![12.5, 0.0, 12.5],
            vec![0, 1, 2],
            vec![-5.0, 0.0, 5.0],
        )
        .unwrap();
        assert_eq!(idx.candidate_range(0.0, 4.9).unwrap(), CandidateRange { lo: 1, hi: 2 });
        assert_eq!(idx.candidate_range(0.0, 5.0).unwrap(), CandidateRange { lo: 0, hi: 3 });
        let empty = idx.candidate_range(100.0, 1.0).unwrap();
        assert_eq!(empty, CandidateRange { lo: 3, hi: 3 });
        assert!(empty.is_empty());
        let err = idx.candidate_range(0.0, -1.0).unwrap_err();
        assert!(err.to_string().starts_with("negative radius"));
    }

    #[test]
    fn query_examples() {
        let idx = d3();
        assert_hits(&idx.query_radius(&[3.0, 4.0], 0.0).unwrap(), &[(1, 0.0)]);
        assert_hits(
            &idx.query_radius(&[3.0, 4.0], 5.0).unwrap(),
            &[(0, 5.0), (1, 0.0), (2, 5.0)],
        );
        assert_hits(&idx.query_radius(&[0.0, 0.0], 4.9).unwrap(), &[(0, 0.0)]);
    }

    #[test]
    fn query_errors() {
        let idx = d3();
        assert!(matches!(
            idx.query_radius(&[1.0], 1.0),
            Err(SnnError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            idx.query_radius(&[1.0, 1.0], -0.5),
            Err(SnnError::NegativeRadius(_))
        ));
        assert!(idx.query_radius(&[1.0, f64::NAN], 1.0).is_err());
    }

    #[test]
    fn batch_examples() {
        let idx = d3();
        let q = PointMatrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]]).unwrap();
        let out = idx.query_radius_batch(&q, 5.0).unwrap();
        assert_eq!(out.len(), 2);
        assert_hits(&out[0], &[(0, 5.0), (1, 0.0), (2, 5.0)]);
        assert_hits(&out[1], &[(0, 0.0), (1, 5.0)]);

        assert!(idx
            .query_radius_batch(&PointMatrix::empty(2).unwrap(), 1.0)
            .unwrap()
            .is_empty());

        let one = PointMatrix::from_rows(&[[2.0, 2.5]]).unwrap();
        assert_eq!(
            idx.query_radius_batch(&one, 3.0).unwrap()[0],
            idx.query_radius(&[2.0, 2.5], 3.0).unwrap()
        );
    }

    #[test]
    fn duplicate_after_append_is_found_at_zero_radius() {
        let mut idx = d3();
        idx.append_point(&[3.0, 4.0]).unwrap();
        assert_eq!(idx.query_radius(&[3.0, 4.0], 0.0).unwrap().ids(), vec![1, 3]);
    }

    #[test]
    fn collinear_candidates_are_all_hits() {
        let idx = d3();
        let out = idx.query_radius_with_range(&[4.5, 6.0], 4.0).unwrap();
        assert_eq!(out.result.len(), out.range.len());
    }
}
