//! Index construction: centering, first principal direction, score sort.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::{center, check_vector, column_mean, PointMatrix};
use crate::error::{Result, SnnError};
use crate::kernels::{dot, half_norm};

/// Leading principal direction of a centered matrix and its two largest
/// singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalDirection {
    pub direction: Vec<f64>,
    /// `[σ1, σ2]`; `σ2` is zero when `d = 1` or the data has rank ≤ 1.
    pub sigma: [f64; 2],
}

/// Computes the unit direction maximizing `Σ (x_i · v)²` over the rows of a
/// mean-centered matrix.
///
/// The symmetric eigenproblem of the `d × d` Gram matrix `XᵀX` yields the
/// direction; the singular values are then measured directly as `‖X v‖`
/// so that rank-deficient data reports a clean zero for `σ2`. The sign is
/// fixed by making the entry of largest magnitude positive (lowest index on
/// ties). All-zero input falls back to the first canonical unit vector.
pub fn principal_direction(centered: &PointMatrix) -> PrincipalDirection {
    let d = centered.d();
    let fallback = || {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        PrincipalDirection {
            direction: e1,
            sigma: [0.0, 0.0],
        }
    };

    let gram = gram_matrix(centered);
    if gram.iter().all(|&g| g == 0.0) {
        return fallback();
    }
    if d == 1 {
        return PrincipalDirection {
            direction: vec![1.0],
            sigma: [gram[0].sqrt(), 0.0],
        };
    }

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &gram));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let column = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    };
    let mut v1 = column(order[0]);
    fix_sign(&mut v1);
    let v2 = column(order[1]);

    let sigma1 = projected_norm(centered, &v1);
    let sigma2 = projected_norm(centered, &v2);
    PrincipalDirection {
        direction: v1,
        sigma: [sigma1, sigma2],
    }
}

fn gram_matrix(x: &PointMatrix) -> Vec<f64> {
    let d = x.d();
    let mut g = vec![0.0; d * d];
    for r in x.rows() {
        for a in 0..d {
            let ra = r[a];
            if ra == 0.0 {
                continue;
            }
            let row = &mut g[a * d..(a + 1) * d];
            for b in a..d {
                row[b] += ra * r[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[a * d + b] = g[b * d + a];
        }
    }
    g
}

fn projected_norm(x: &PointMatrix, v: &[f64]) -> f64 {
    x.rows().map(|r| dot(r, v).powi(2)).sum::<f64>().sqrt()
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Immutable search structure over a point set.
///
/// Centered points are stored contiguously in ascending score order so that
/// every candidate band is a single row block.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnIndex {
    dim: usize,
    mean: Vec<f64>,
    direction: Vec<f64>,
    sigma: [f64; 2],
    sorted: Vec<f64>,
    scores: Vec<f64>,
    half_norms: Vec<f64>,
    perm: Vec<usize>,
    max_half_norm: f64,
}

impl SnnIndex {
    /// Builds the index, sorting along the first principal direction.
    pub fn build(points: &PointMatrix) -> Result<Self> {
        let mean = column_mean(points)?;
        let centered = center(points, &mean)?;
        let pd = principal_direction(&centered);
        Ok(Self::assemble(mean, centered, pd.direction, pd.sigma))
    }

    /// Builds the index with a caller-chosen sort direction.
    ///
    /// Any fixed unit vector keeps queries exact; only the candidate counts
    /// change. The direction is normalized here.
    pub fn build_with_direction(points: &PointMatrix, direction: &[f64]) -> Result<Self> {
        check_vector(points.d(), direction)?;
        let norm = dot(direction, direction).sqrt();
        if norm == 0.0 {
            return Err(SnnError::InvalidParameter("zero sort direction".into()));
        }
        let direction: Vec<f64> = direction.iter().map(|x| x / norm).collect();
        let mean = column_mean(points)?;
        let centered = center(points, &mean)?;
        let sigma = principal_direction(&centered).sigma;
        Ok(Self::assemble(mean, centered, direction, sigma))
    }

    fn assemble(mean: Vec<f64>, centered: PointMatrix, direction: Vec<f64>, sigma: [f64; 2]) -> Self {
        let dim = centered.d();
        let raw: Vec<f64> = centered.rows().map(|r| dot(r, &direction)).collect();
        let mut perm: Vec<usize> = (0..centered.n()).collect();
        perm.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));

        let mut sorted = Vec::with_capacity(centered.n() * dim);
        let mut half_norms = Vec::with_capacity(centered.n());
        let mut scores = Vec::with_capacity(centered.n());
        for &id in &perm {
            let row = centered.row(id);
            sorted.extend_from_slice(row);
            half_norms.push(half_norm(row));
            scores.push(raw[id]);
        }
        let max_half_norm = half_norms.iter().copied().fold(0.0, f64::max);
        Self {
            dim,
            mean,
            direction,
            sigma,
            sorted,
            scores,
            half_norms,
            perm,
            max_half_norm,
        }
    }

    /// Reassembles an index from stored parts, checking every invariant.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        dim: usize,
        mean: Vec<f64>,
        direction: Vec<f64>,
        sigma: [f64; 2],
        scores: Vec<f64>,
        half_norms: Vec<f64>,
        perm: Vec<usize>,
        sorted: Vec<f64>,
    ) -> Result<Self> {
        let bad = |m: &str| Err(SnnError::InvalidIndex(m.to_string()));
        let n = scores.len();
        if dim == 0 {
            return bad("dimension is zero");
        }
        if n == 0 {
            return bad("index holds no points");
        }
        if mean.len() != dim || direction.len() != dim || half_norms.len() != n || perm.len() != n {
            return bad("section lengths disagree with header");
        }
        if sorted.len() != n * dim {
            return bad("point block length disagrees with header");
        }
        let all_finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(all_finite(&mean)
            && all_finite(&direction)
            && all_finite(&sigma)
            && all_finite(&scores)
            && all_finite(&half_norms)
            && all_finite(&sorted))
        {
            return bad("non-finite value");
        }
        if (dot(&direction, &direction).sqrt() - 1.0).abs() > 1e-12 {
            return bad("direction is not a unit vector");
        }
        if scores.windows(2).any(|w| w[0] > w[1]) {
            return bad("scores are not sorted");
        }
        if half_norms.iter().any(|&h| h < 0.0) {
            return bad("negative half-norm");
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return bad("permutation is not a bijection");
            }
        }
        let max_half_norm = half_norms.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            dim,
            mean,
            direction,
            sigma,
            sorted,
            scores,
            half_norms,
            perm,
            max_half_norm,
        })
    }

    /// Inserts a new point with id `n`, keeping the scores sorted.
    ///
    /// The mean and direction stay frozen; the stored scores remain valid
    /// sort keys for them.
    pub fn append_point(&mut self, point: &[f64]) -> Result<usize> {
        check_vector(self.dim, point)?;
        let x: Vec<f64> = point.iter().zip(&self.mean).map(|(p, m)| p - m).collect();
        let score = dot(&x, &self.direction);
        let pos = self.scores.partition_point(|&a| a <= score);
        let id = self.perm.len();
        let hn = half_norm(&x);
        self.scores.insert(pos, score);
        self.half_norms.insert(pos, hn);
        self.perm.insert(pos, id);
        let at = pos * self.dim;
        self.sorted.splice(at..at, x);
        self.max_half_norm = self.max_half_norm.max(hn);
        Ok(id)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn sigma(&self) -> [f64; 2] {
        self.sigma
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn half_norms(&self) -> &[f64] {
        &self.half_norms
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Centered points in score order, row-major.
    pub fn sorted_points(&self) -> &[f64] {
        &self.sorted
    }

    #[inline]
    pub fn sorted_row(&self, pos: usize) -> &[f64] {
        &self.sorted[pos * self.dim..(pos + 1) * self.dim]
    }

    pub(crate) fn max_norm(&self) -> f64 {
        (2.0 * self.max_half_norm).sqrt()
    }

    /// Mean-centers a query against this index.
    pub fn center_query(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_vector(self.dim, q)?;
        Ok(q.iter().zip(&self.mean).map(|(a, m)| a - m).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> PointMatrix {
        PointMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn collinear_direction() {
        let c = PointMatrix::from_rows(&[[-3.0, -4.0], [0.0, 0.0], [3.0, 4.0]]).unwrap();
        let pd = principal_direction(&c);
        assert!(close(pd.direction[0], 0.6, 1e-12));
        assert!(close(pd.direction[1], 0.8, 1e-12));
        assert!(close(pd.sigma[0], 50f64.sqrt(), 1e-12));
        assert!(pd.sigma[1] <= 1e-12);
    }

    #[test]
    fn one_dimensional_direction() {
        let c = PointMatrix::from_rows(&[[-2.0], [1.0], [1.0]]).unwrap();
        let pd = principal_direction(&c);
        assert_eq!(pd.direction, vec![1.0]);
        assert_eq!(pd.sigma[1], 0.0);
    }

    #[test]
    fn isotropic_direction_is_unit_and_deterministic() {
        let c = PointMatrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let a = principal_direction(&c);
        let b = principal_direction(&c);
        assert_eq!(a, b);
        assert!(close(dot(&a.direction, &a.direction), 1.0, 1e-12));
        assert!(close(a.sigma[0], a.sigma[1], 1e-12));
    }

    #[test]
    fn zero_data_falls_back_to_e1() {
        let c = PointMatrix::new(3, 3, vec![0.0; 9]).unwrap();
        let pd = principal_direction(&c);
        assert_eq!(pd.direction, vec![1.0, 0.0, 0.0]);
        assert_eq!(pd.sigma, [0.0, 0.0]);
    }

    #[test]
    fn sign_convention() {
        let c = PointMatrix::from_rows(&[[0.1, -3.0], [-0.1, 3.0]]).unwrap();
        let pd = principal_direction(&c);
        assert!(pd.direction[1] > 0.0);
        let mut tie = vec![-0.5, 0.5];
        fix_sign(&mut tie);
        assert_eq!(tie, vec![0.5, -0.5]);
    }

    #[test]
    fn build_d3() {
        let idx = SnnIndex::build(&d3()).unwrap();
        assert_eq!(idx.mean(), &[3.0, 4.0]);
        assert!(close(idx.direction()[0], 0.6, 1e-12));
        assert!(close(idx.direction()[1], 0.8, 1e-12));
        let want = [-5.0, 0.0, 5.0];
        for (a, w) in idx.scores().iter().zip(want) {
            assert!(close(*a, w, 1e-12));
        }
        assert_eq!(idx.half_norms(), &[12.5, 0.0, 12.5]);
        assert_eq!(idx.perm(), &[0, 1, 2]);
    }

    #[test]
    fn build_single_point() {
        let idx = SnnIndex::build(&PointMatrix::from_rows(&[[7.0, 7.0]]).unwrap()).unwrap();
        assert_eq!(idx.scores(), &[0.0]);
        assert_eq!(idx.half_norms(), &[0.0]);
        assert_eq!(idx.direction(), &[1.0, 0.0]);
    }

    #[test]
    fn build_duplicates_keep_id_order() {
        let p = PointMatrix::from_rows(&[[2.0, 1.0]; 5]).unwrap();
        let idx = SnnIndex::build(&p).unwrap();
        assert_eq!(idx.scores(), &[0.0; 5]);
        assert_eq!(idx.half_norms(), &[0.0; 5]);
        assert_eq!(idx.perm(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn build_rejects_empty() {
        let err = SnnIndex::build(&PointMatrix::empty(2).unwrap()).unwrap_err();
        assert!(matches!(err, SnnError::EmptyDataset));
    }

    #[test]
    fn append_examples() {
        let mut idx = SnnIndex::build(&d3()).unwrap();
        let id = idx.append_point(&[9.0, 12.0]).unwrap();
        assert_eq!(id, 3);
        assert_eq!(idx.perm(), &[0, 1, 2, 3]);
        let want = [-5.0, 0.0, 5.0, 10.0];
        for (a, w) in idx.scores().iter().zip(want) {
            assert!(close(*a, w, 1e-12));
        }
        assert_eq!(idx.mean(), &[3.0, 4.0]);
        assert!(matches!(
            idx.append_point(&[1.0]),
            Err(SnnError::DimensionMismatch { .. })
        ));

        let mut twin = SnnIndex::build(&d3()).unwrap();
        twin.append_point(&[3.0, 4.0]).unwrap();
        assert_eq!(twin.perm(), &[0, 1, 3, 2]);

        let mut single = SnnIndex::build(&PointMatrix::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
        single.append_point(&[-4.0, 0.5]).unwrap();
        assert_eq!(single.len(), 2);
        assert!(single.scores()[0] <= single.scores()[1]);
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let p =
            PointMatrix::from_rows(&[[0.3, 1.2, -0.7], [2.2, -0.1, 0.4], [1.0, 1.0, 1.0], [-3.0, 0.5, 0.25]]).unwrap();
        assert_eq!(SnnIndex::build(&p).unwrap(), SnnIndex::build(&p).unwrap());
    }
}
