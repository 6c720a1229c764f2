//! DBSCAN over a pluggable radius-query backend, and NMI scoring.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::dataset::PointMatrix;
use crate::error::{Result, SnnError};
use crate::indexer::SnnIndex;
use crate::oracle::BruteForce;

pub const NOISE: i64 = -1;

/// Neighborhood engine used by [`dbscan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Snn,
    BruteForce,
}

impl FromStr for Backend {
    type Err = SnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snn" => Ok(Self::Snn),
            "bruteforce" | "brute-force" => Ok(Self::BruteForce),
            other => Err(SnnError::InvalidParameter(format!("unknown backend {other:?}"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Snn => "snn",
            Self::BruteForce => "bruteforce",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_samples: usize,
    pub backend: Backend,
}

impl DbscanParams {
    pub fn new(eps: f64, min_samples: usize, backend: Backend) -> Result<Self> {
        let p = Self {
            eps,
            min_samples,
            backend,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(SnnError::InvalidParameter(format!(
                "eps = {} must be positive",
                self.eps
            )));
        }
        if self.min_samples < 1 {
            return Err(SnnError::InvalidParameter("min_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cluster assignment per point; [`NOISE`] marks noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub labels: Vec<i64>,
    pub clusters: usize,
}

impl Labeling {
    /// Wraps raw labels, checking that cluster ids are dense.
    pub fn from_labels(labels: Vec<i64>) -> Result<Self> {
        let max = labels.iter().copied().max().unwrap_or(NOISE);
        if labels.iter().any(|&l| l < NOISE) {
            return Err(SnnError::InvalidParameter("labels below -1".into()));
        }
        let clusters = (max + 1) as usize;
        let mut seen = vec![false; clusters];
        for &l in labels.iter().filter(|&&l| l >= 0) {
            seen[l as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(SnnError::InvalidParameter("cluster ids are not dense".into()));
        }
        Ok(Self { labels, clusters })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

/// Closed-ball neighborhoods (self included), as ascending ids.
trait Neighborhoods {
    fn neighbors(&self, points: &PointMatrix, i: usize, eps: f64) -> Result<Vec<usize>>;
}

impl Neighborhoods for SnnIndex {
    fn neighbors(&self, points: &PointMatrix, i: usize, eps: f64) -> Result<Vec<usize>> {
        Ok(self.query_radius(points.row(i), eps)?.ids())
    }
}

impl Neighborhoods for BruteForce {
    fn neighbors(&self, points: &PointMatrix, i: usize, eps: f64) -> Result<Vec<usize>> {
        Ok(self.query(points.row(i), eps)?.ids())
    }
}

/// Clusters `points`, visiting seeds in ascending id order.
///
/// A point is core when its closed `eps`-ball holds at least `min_samples`
/// points, itself included. Clusters grow from each unvisited core seed by
/// a FIFO queue; a border point joins the first cluster that reaches it.
/// Both backends return identical neighbor sets, so their labelings are
/// identical.
pub fn dbscan(points: &PointMatrix, params: &DbscanParams) -> Result<Labeling> {
    let order: Vec<usize> = (0..points.n()).collect();
    dbscan_in_order(points, params, &order)
}

/// [`dbscan`] with an explicit seed-consideration order.
///
/// Core points and the partition of core points do not depend on the
/// order; border assignments and cluster numbering may.
pub fn dbscan_in_order(points: &PointMatrix, params: &DbscanParams, order: &[usize]) -> Result<Labeling> {
    params.validate()?;
    if points.is_empty() {
        return Err(SnnError::EmptyDataset);
    }
    if order.len() != points.n() {
        return Err(SnnError::LengthMismatch(order.len(), points.n()));
    }
    match params.backend {
        Backend::Snn => run(points, params, order, &SnnIndex::build(points)?),
        Backend::BruteForce => run(points, params, order, &BruteForce::new(points)?),
    }
}

fn run<B: Neighborhoods>(
    points: &PointMatrix,
    params: &DbscanParams,
    order: &[usize],
    backend: &B,
) -> Result<Labeling> {
    const UNVISITED: i64 = -2;
    let n = points.n();
    let mut labels = vec![UNVISITED; n];
    let mut clusters = 0i64;
    let mut queue = VecDeque::new();

    for &seed in order {
        if labels[seed] != UNVISITED {
            continue;
        }
        let nbrs = backend.neighbors(points, seed, params.eps)?;
        if nbrs.len() < params.min_samples {
            labels[seed] = NOISE;
            continue;
        }
        let cluster = clusters;
        clusters += 1;
        labels[seed] = cluster;
        queue.extend(nbrs);
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                NOISE => labels[j] = cluster,
                UNVISITED => {
                    labels[j] = cluster;
                    let next = backend.neighbors(points, j, params.eps)?;
                    if next.len() >= params.min_samples {
                        queue.extend(next);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(Labeling {
        labels,
        clusters: clusters as usize,
    })
}

/// Normalized mutual information, `I(a; b) / sqrt(H(a) H(b))`, natural log.
///
/// Noise is scored as an ordinary category. Two single-category labelings
/// score 1; otherwise a zero entropy on either side scores 0.
pub fn nmi(a: &[i64], b: &[i64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SnnError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(SnnError::EmptyDataset);
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(i64, i64), usize> = HashMap::new();
    let mut ca: HashMap<i64, usize> = HashMap::new();
    let mut cb: HashMap<i64, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let entropy = |m: &HashMap<i64, usize>| -> f64 {
        let mut counts: Vec<usize> = m.values().copied().collect();
        counts.sort_unstable();
        -counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    };
    let (ha, hb) = (entropy(&ca), entropy(&cb));
    if ca.len() == 1 && cb.len() == 1 {
        return Ok(1.0);
    }
    if ha <= 0.0 || hb <= 0.0 {
        return Ok(0.0);
    }
    let mut cells: Vec<((i64, i64), usize)> = joint.into_iter().collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .iter()
        .map(|&((x, y), c)| {
            let pxy = c as f64 / n;
            let px = ca[&x] as f64 / n;
            let py = cb[&y] as f64 / n;
            pxy * (pxy / (px * py)).ln()
        })
        .sum();
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_all_noise() {
        let rows: Vec<[f64; 2]> = (0..5)
            .flat_map(|i| (0..5).map(move |j| [10.0 * i as f64, 10.0 * j as f64]))
            .collect();
        let p = PointMatrix::from_rows(&rows).unwrap();
        for backend in [Backend::Snn, Backend::BruteForce] {
            let l = dbscan(&p, &DbscanParams::new(0.1, 5, backend).unwrap()).unwrap();
            assert_eq!(l.clusters, 0);
            assert_eq!(l.noise_count(), 25);
        }
    }

    #[test]
    fn huge_eps_gives_one_cluster() {
        let p = PointMatrix::from_rows(&[[0.0, 1.0], [5.0, -2.0], [100.0, 3.0], [7.0, 7.0]]).unwrap();
        let l = dbscan(&p, &DbscanParams::new(1e6, 1, Backend::Snn).unwrap()).unwrap();
        assert_eq!(l.clusters, 1);
        assert_eq!(l.labels, vec![0; 4]);
    }

    #[test]
    fn line_ends_are_border_points() {
        // Interior points see three neighbors and are core; the two ends see two.
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        let p = PointMatrix::from_rows(&rows).unwrap();
        let params = DbscanParams::new(1.0, 3, Backend::Snn).unwrap();
        let l = dbscan(&p, &params).unwrap();
        assert_eq!(l.clusters, 1);
        let bf = dbscan(
            &p,
            &DbscanParams {
                backend: Backend::BruteForce,
                ..params
            },
        )
        .unwrap();
        assert_eq!(l, bf);
        assert!(Labeling::from_labels(l.labels.clone()).is_ok());
    }

    #[test]
    fn params_validation() {
        assert!(DbscanParams::new(0.0, 5, Backend::Snn).is_err());
        assert!(DbscanParams::new(1.0, 0, Backend::Snn).is_err());
        assert!(DbscanParams::new(f64::NAN, 5, Backend::Snn).is_err());
        let p = PointMatrix::empty(2).unwrap();
        assert!(dbscan(&p, &DbscanParams::new(1.0, 2, Backend::Snn).unwrap()).is_err());
    }

    #[test]
    fn nmi_examples() {
        let a = [0, 0, 1, 1];
        assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((nmi(&a, &[1, 1, 0, 0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmi(&a, &[0, 1, 0, 1]).unwrap().abs() < 1e-15);
        assert_eq!(nmi(&[3, 3, 3], &[-1, -1, -1]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert!(nmi(&a, &[0, 1]).is_err());
    }

    #[test]
    fn labeling_rejects_sparse_ids() {
        assert!(Labeling::from_labels(vec![0, 2, -1]).is_err());
        assert_eq!(Labeling::from_labels(vec![1, 0, -1]).unwrap().clusters, 2);
        assert_eq!(Labeling::from_labels(vec![-1, -1]).unwrap().clusters, 0);
    }

    #[test]
    fn backend_parse() {
        assert_eq!("snn".parse::<Backend>().unwrap(), Backend::Snn);
        assert_eq!("bruteforce".parse::<Backend>().unwrap(), Backend::BruteForce);
        assert!("kdtree".parse::<Backend>().is_err());
    }
}
