//! Reductions of cosine, angular, inner-product and Manhattan searches to
//! Euclidean radius queries.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dataset::PointMatrix;
use crate::error::{Result, SnnError};
use crate::indexer::SnnIndex;
use crate::kernels::{dot, expanded_distance, l1};
use crate::query::{check_radius, Hit, QueryOutcome, QueryResult};

/// Rows of a cosine or angular index must have norm within this of 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Euclidean,
    Cosine,
    Angular,
    Mips,
    Manhattan,
}

impl FromStr for MetricKind {
    type Err = SnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "cosine" => Ok(Self::Cosine),
            "angular" => Ok(Self::Angular),
            "mips" => Ok(Self::Mips),
            "manhattan" => Ok(Self::Manhattan),
            other => Err(SnnError::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Euclidean => "euclidean",
            Self::Cosine => "cosine",
            Self::Angular => "angular",
            Self::Mips => "mips",
            Self::Manhattan => "manhattan",
        })
    }
}

/// A metric together with a radius in that metric's native unit.
///
/// `xi` is the augmentation norm of MIPS-transformed data. MIPS has no
/// radius semantics; its queries are answered by
/// [`MipsIndex::max_inner_product`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub radius: f64,
    pub xi: Option<f64>,
}

impl MetricSpec {
    pub fn new(kind: MetricKind, radius: f64) -> Result<Self> {
        match kind {
            MetricKind::Cosine => {
                cosine_radius_to_euclidean(radius)?;
            }
            MetricKind::Angular => {
                angular_radius_to_euclidean(radius)?;
            }
            _ => check_radius(radius)?,
        }
        Ok(Self { kind, radius, xi: None })
    }

    /// Euclidean radius that answers this query; Manhattan radii are used as
    /// is for the band prune.
    pub fn euclidean_radius(&self) -> Result<f64> {
        match self.kind {
            MetricKind::Cosine => cosine_radius_to_euclidean(self.radius),
            MetricKind::Angular => angular_radius_to_euclidean(self.radius),
            _ => {
                check_radius(self.radius)?;
                Ok(self.radius)
            }
        }
    }
}

/// Parses a radius, accepting multiples of π written as `0.30pi`.
pub fn parse_radius(s: &str) -> Result<f64> {
    let bad = || SnnError::InvalidParameter(format!("invalid radius {s:?}"));
    let t = s.trim();
    let value = match t.strip_suffix("pi").or_else(|| t.strip_suffix('π')) {
        Some("") => PI,
        Some(m) => m.trim().parse::<f64>().map_err(|_| bad())? * PI,
        None => t.parse::<f64>().map_err(|_| bad())?,
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

/// `R = sqrt(2 rc)`: on unit vectors `1 − u·v ≤ rc` iff `‖u − v‖ ≤ R`.
pub fn cosine_radius_to_euclidean(rc: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&rc) {
        return Err(SnnError::InvalidParameter(format!("cosine radius {rc} outside [0, 2]")));
    }
    Ok((2.0 * rc).sqrt())
}

/// `R = sqrt(2 − 2 cos θ)`: on unit vectors the angle is at most `θ` iff
/// `‖u − v‖ ≤ R`.
pub fn angular_radius_to_euclidean(theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(SnnError::InvalidParameter(format!(
            "angular radius {theta} outside [0, pi]"
        )));
    }
    // 2 − 2cos θ = 4 sin²(θ/2), free of cancellation near 0.
    Ok(2.0 * (theta / 2.0).sin())
}

/// Scales every row to unit Euclidean norm.
pub fn normalize_rows(points: &PointMatrix) -> Result<PointMatrix> {
    if let Some(row) = points.rows().position(|r| dot(r, r) == 0.0) {
        return Err(SnnError::ZeroVector(row));
    }
    points.map_rows(points.d(), |r, out| {
        let norm = dot(r, r).sqrt();
        out.extend(r.iter().map(|v| v / norm));
    })
}

/// Fails unless every row has norm within [`UNIT_NORM_TOLERANCE`] of 1.
pub fn check_unit_rows(points: &PointMatrix) -> Result<()> {
    for (i, r) in points.rows().enumerate() {
        let norm = dot(r, r).sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(SnnError::InvalidParameter(format!(
                "row {i} has norm {norm}; cosine and angular metrics need unit-normalized rows"
            )));
        }
    }
    Ok(())
}

fn check_unit_query(q: &[f64]) -> Result<()> {
    let norm = dot(q, q).sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(SnnError::InvalidParameter(format!(
            "query has norm {norm}; cosine and angular metrics need unit-normalized queries"
        )));
    }
    Ok(())
}

/// Augments each row to `[sqrt(ξ² − ‖p‖²), p]` with `ξ = max ‖p‖`, so every
/// augmented row has norm `ξ`.
pub fn mips_transform(points: &PointMatrix) -> Result<(PointMatrix, f64)> {
    if points.is_empty() {
        return Err(SnnError::EmptyDataset);
    }
    let sq: Vec<f64> = points.rows().map(|r| dot(r, r)).collect();
    let xi_sq = sq.iter().copied().fold(0.0, f64::max);
    let mut i = 0;
    let out = points.map_rows(points.d() + 1, |r, out| {
        out.push((xi_sq - sq[i]).max(0.0).sqrt());
        out.extend_from_slice(r);
        i += 1;
    })?;
    Ok((out, xi_sq.sqrt()))
}

/// Prepends a zero coordinate to a query.
pub fn mips_query_transform(q: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.len() + 1);
    out.push(0.0);
    out.extend_from_slice(q);
    out
}

/// An index over MIPS-augmented data.
///
/// Appends whose norm would exceed `ξ` are rejected because the augmented
/// coordinate would be undefined.
#[derive(Debug, Clone)]
pub struct MipsIndex {
    index: SnnIndex,
    xi: f64,
}

impl MipsIndex {
    pub fn build(points: &PointMatrix) -> Result<Self> {
        let (augmented, xi) = mips_transform(points)?;
        Ok(Self {
            index: SnnIndex::build(&augmented)?,
            xi,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn index(&self) -> &SnnIndex {
        &self.index
    }

    pub fn append_point(&mut self, p: &[f64]) -> Result<usize> {
        let sq = dot(p, p);
        if sq.sqrt() > self.xi {
            return Err(SnnError::InvalidParameter(format!(
                "point norm {} exceeds xi = {}",
                sq.sqrt(),
                self.xi
            )));
        }
        let mut aug = Vec::with_capacity(p.len() + 1);
        aug.push((self.xi * self.xi - sq).max(0.0).sqrt());
        aug.extend_from_slice(p);
        self.index.append_point(&aug)
    }

    /// See [`max_inner_product`].
    pub fn max_inner_product(&self, q: &[f64]) -> Result<(usize, f64)> {
        max_inner_product(&self.index, q)
    }
}

/// Point of a MIPS-augmented `index` with the largest inner product with
/// the original-space query `q`, as `(id, inner product)`; ties go to the lowest id.
///
/// Answered as the nearest augmented neighbor: the closer of the two
/// points bracketing the query's score bounds the nearest distance, and
/// one radius query at that bound returns a set containing the nearest.
pub fn max_inner_product(index: &SnnIndex, q: &[f64]) -> Result<(usize, f64)> {
    let qa = mips_query_transform(q);
    let xq = index.center_query(&qa)?;
    let alpha = dot(&xq, index.direction());
    let scores = index.scores();
    let at = scores.partition_point(|&a| a < alpha).min(scores.len() - 1);
    let qq = dot(&xq, &xq);
    let dist = |pos: usize| {
        let x = index.sorted_row(pos);
        expanded_distance(index.half_norms()[pos], dot(x, &xq), qq)
    };
    let mut bound = dist(at);
    if at > 0 {
        bound = bound.min(dist(at - 1));
    }
    // Slack so the bracketing point itself passes the expanded test.
    let scale = index.max_norm() + qq.sqrt();
    let radius = (bound * bound + 8.0 * f64::EPSILON * scale * scale).sqrt() * (1.0 + 8.0 * f64::EPSILON);
    let found = index.query_radius(&qa, radius)?;
    let best = found
        .hits
        .iter()
        .fold(None::<&Hit>, |best, h| match best {
            Some(b) if b.dist <= h.dist => Some(b),
            _ => Some(h),
        })
        .ok_or_else(|| SnnError::InvalidIndex("nearest augmented point not found".into()))?;
    let mean_ip = dot(index.mean(), &qa);
    let pos = index.perm().iter().position(|&id| id == best.id).unwrap();
    let ip = dot(index.sorted_row(pos), &qa) + mean_ip;
    Ok((best.id, ip))
}

/// Cosine-distance radius query on unit-normalized data and query.
pub fn cosine_query(index: &SnnIndex, q: &[f64], rc: f64) -> Result<QueryResult> {
    check_unit_query(q)?;
    index.query_radius(q, cosine_radius_to_euclidean(rc)?)
}

/// Angular radius query on unit-normalized data and query.
pub fn angular_query(index: &SnnIndex, q: &[f64], theta: f64) -> Result<QueryResult> {
    check_unit_query(q)?;
    index.query_radius(q, angular_radius_to_euclidean(theta)?)
}

/// All points within Manhattan distance `r1` of `q`.
///
/// `|α_j − α_q| ≤ ‖x_j − x_q‖₂ ≤ ‖x_j − x_q‖₁`, so the Euclidean band of
/// half-width `r1` still contains every answer; candidates are then checked
/// by their L1 distance.
pub fn manhattan_query(index: &SnnIndex, q: &[f64], r1: f64) -> Result<QueryResult> {
    Ok(manhattan_query_with_range(index, q, r1)?.result)
}

/// [`manhattan_query`] together with the scanned band.
pub fn manhattan_query_with_range(index: &SnnIndex, q: &[f64], r1: f64) -> Result<QueryOutcome> {
    let pq = index.prepare(q, r1, r1)?;
    let perm = index.perm();
    let hits = (pq.range.lo..pq.range.hi)
        .filter_map(|pos| {
            let dist = l1(index.sorted_row(pos), &pq.xq);
            (dist <= r1).then(|| Hit { id: perm[pos], dist })
        })
        .collect();
    Ok(QueryOutcome {
        result: QueryResult::from_unsorted(hits),
        range: pq.range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_radius_examples() {
        assert_eq!(cosine_radius_to_euclidean(0.0).unwrap(), 0.0);
        assert_eq!(cosine_radius_to_euclidean(2.0).unwrap(), 2.0);
        assert_eq!(cosine_radius_to_euclidean(0.5).unwrap(), 1.0);
        assert!(cosine_radius_to_euclidean(2.1).is_err());
        assert!(cosine_radius_to_euclidean(-0.1).is_err());
    }

    #[test]
    fn cosine_sweep_on_circle() {
        let u = [1.0, 0.0];
        let r = cosine_radius_to_euclidean(0.5).unwrap();
        for i in 0..=720 {
            // Skip the two exact boundary angles ±π/3.
            let t = -PI + i as f64 * (2.0 * PI / 720.0) + 1e-7;
            let v = [t.cos(), t.sin()];
            let cdist = 1.0 - dot(&u, &v);
            let e = ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt();
            assert_eq!(cdist <= 0.5, e <= r, "t = {t}");
        }
    }

    #[test]
    fn angular_radius_examples() {
        assert!((angular_radius_to_euclidean(PI / 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(angular_radius_to_euclidean(0.0).unwrap(), 0.0);
        assert!((angular_radius_to_euclidean(PI).unwrap() - 2.0).abs() < 1e-15);
        assert!(angular_radius_to_euclidean(3.2).is_err());
        assert!(angular_radius_to_euclidean(-1e-3).is_err());
    }

    #[test]
    fn parse_radius_accepts_pi_multiples() {
        assert_eq!(parse_radius("0.5").unwrap(), 0.5);
        assert!((parse_radius("0.30pi").unwrap() - 0.3 * PI).abs() < 1e-15);
        assert_eq!(parse_radius("pi").unwrap(), PI);
        assert!(parse_radius("abc").is_err());
        assert!(parse_radius("inf").is_err());
    }

    #[test]
    fn mips_transform_examples() {
        let p = PointMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let (t, xi) = mips_transform(&p).unwrap();
        assert_eq!(xi, 2.0);
        assert_eq!(t.as_slice(), &[3f64.sqrt(), 1.0, 0.0, 0.0, 0.0, 2.0]);

        let z = PointMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        let (tz, xz) = mips_transform(&z).unwrap();
        assert_eq!(xz, 0.0);
        assert!(tz.as_slice().iter().all(|&v| v == 0.0));

        let one = PointMatrix::from_rows(&[[3.0, -4.0]]).unwrap();
        let (t1, x1) = mips_transform(&one).unwrap();
        assert_eq!((t1.row(0)[0], x1), (0.0, 5.0));
    }

    #[test]
    fn mips_query_example() {
        let p = PointMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let (t, _) = mips_transform(&p).unwrap();
        let q = mips_query_transform(&[1.0, 1.0]);
        assert_eq!(q, vec![0.0, 1.0, 1.0]);
        let d2: Vec<f64> = t
            .rows()
            .map(|r| r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum())
            .collect();
        assert!((d2[0] - 4.0).abs() < 1e-12 && (d2[1] - 2.0).abs() < 1e-12);

        let zq = mips_query_transform(&[0.0, 0.0]);
        for r in t.rows() {
            let d: f64 = r.iter().zip(&zq).map(|(a, b)| (a - b).powi(2)).sum();
            assert!((d.sqrt() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mips_index_rejects_oversized_append() {
        let p = PointMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let mut idx = MipsIndex::build(&p).unwrap();
        assert!(idx.append_point(&[3.0, 0.0]).is_err());
        assert_eq!(idx.append_point(&[1.0, 1.0]).unwrap(), 2);
    }

    #[test]
    fn mips_argmax_examples() {
        let p = PointMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [-3.0, 0.0]]).unwrap();
        let idx = MipsIndex::build(&p).unwrap();
        let (id, ip) = idx.max_inner_product(&[1.0, 1.0]).unwrap();
        assert_eq!(id, 1);
        assert!((ip - 2.0).abs() < 1e-12);
        assert_eq!(idx.max_inner_product(&[1.0, 0.0]).unwrap().0, 0);
        assert_eq!(idx.max_inner_product(&[-1.0, 0.0]).unwrap().0, 2);
        assert!(idx.max_inner_product(&[1.0]).is_err());
    }

    #[test]
    fn manhattan_examples() {
        let p = PointMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let idx = SnnIndex::build(&p).unwrap();
        let out = manhattan_query(&idx, &[0.0, 0.0], 1.5).unwrap();
        assert_eq!(out.ids(), vec![0]);
        assert_eq!(idx.query_radius(&[0.0, 0.0], 1.5).unwrap().ids(), vec![0, 1]);
        assert_eq!(manhattan_query(&idx, &[1.0, 1.0], 0.0).unwrap().ids(), vec![1]);

        let line = PointMatrix::from_rows(&[[0.0], [0.4], [1.5], [-2.0]]).unwrap();
        let li = SnnIndex::build(&line).unwrap();
        assert_eq!(
            manhattan_query(&li, &[0.2], 1.3).unwrap().ids(),
            li.query_radius(&[0.2], 1.3).unwrap().ids()
        );
    }

    #[test]
    fn normalize_examples() {
        let p = PointMatrix::from_rows(&[[3.0, 4.0], [1.0, 0.0]]).unwrap();
        let n = normalize_rows(&p).unwrap();
        assert_eq!(n.as_slice(), &[0.6, 0.8, 1.0, 0.0]);
        assert!(check_unit_rows(&n).is_ok());
        assert!(check_unit_rows(&p).is_err());
        let z = PointMatrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        let err = normalize_rows(&z).unwrap_err();
        assert!(err.to_string().starts_with("cannot normalize zero vector"));
    }

    #[test]
    fn metric_spec_conversion() {
        let s = MetricSpec::new(MetricKind::Angular, PI / 3.0).unwrap();
        assert!((s.euclidean_radius().unwrap() - 1.0).abs() < 1e-15);
        assert!(MetricSpec::new(MetricKind::Cosine, 3.0).is_err());
        assert!(MetricSpec::new(MetricKind::Manhattan, -1.0).is_err());
        assert_eq!("mips".parse::<MetricKind>().unwrap(), MetricKind::Mips);
        assert!("hamming".parse::<MetricKind>().is_err());
    }
}
