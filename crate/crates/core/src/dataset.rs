//! Row-major point matrices and the column statistics built on them.

use crate::error::{Result, SnnError};

/// `n × d` matrix of finite `f64` values, one point per row.
///
/// Row `i` is the point with original id `i`. Construction rejects NaN and
/// infinities so every downstream score is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PointMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(SnnError::ZeroDimension);
        }
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(SnnError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(SnnError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(SnnError::RaggedRow {
                    row: i + 1,
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Empty matrix with `d` columns.
    pub fn empty(cols: usize) -> Result<Self> {
        Self::new(0, cols, Vec::new())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Applies `f` to every row, producing a matrix of `out_cols` columns.
    pub(crate) fn map_rows<F>(&self, out_cols: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut Vec<f64>),
    {
        let mut out = Vec::with_capacity(self.rows * out_cols);
        for r in self.rows() {
            f(r, &mut out);
        }
        Self::new(self.rows, out_cols, out)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(SnnError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Checks that a query vector is finite and of the expected dimension.
pub(crate) fn check_vector(expected: usize, v: &[f64]) -> Result<()> {
    check_dim(expected, v.len())?;
    if let Some(col) = v.iter().position(|x| !x.is_finite()) {
        return Err(SnnError::NonFinite { row: 0, col });
    }
    Ok(())
}

/// Mean of every column.
pub fn column_mean(points: &PointMatrix) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(SnnError::EmptyDataset);
    }
    let mut mean = vec![0.0; points.d()];
    for r in points.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    let n = points.n() as f64;
    for m in &mut mean {
        *m /= n;
    }
    Ok(mean)
}

/// Subtracts `mean` from every row, keeping row order.
pub fn center(points: &PointMatrix, mean: &[f64]) -> Result<PointMatrix> {
    check_vector(points.d(), mean)?;
    points.map_rows(points.d(), |r, out| {
        out.extend(r.iter().zip(mean).map(|(v, m)| v - m));
    })
}

/// Shifts each column to zero mean and scales it to unit population variance.
///
/// Columns whose entries are all equal become all zeros.
pub fn zscore_standardize(points: &PointMatrix) -> Result<PointMatrix> {
    if points.n() < 2 {
        return Err(SnnError::InvalidParameter(format!(
            "z-score standardization needs at least 2 rows, got {}",
            points.n()
        )));
    }
    let mean = column_mean(points)?;
    let centered = center(points, &mean)?;
    let d = points.d();
    let mut var = vec![0.0; d];
    let mut constant = vec![true; d];
    let first = points.row(0);
    for (r, c) in points.rows().zip(centered.rows()) {
        for k in 0..d {
            var[k] += c[k] * c[k];
            constant[k] &= r[k] == first[k];
        }
    }
    let n = points.n() as f64;
    let scale: Vec<f64> = var
        .iter()
        .zip(&constant)
        .map(|(v, &c)| if c { 0.0 } else { 1.0 / (v / n).sqrt() })
        .collect();
    centered.map_rows(d, |r, out| {
        out.extend(r.iter().zip(&scale).map(|(v, s)| v * s));
    })
}
