//! CSV ingestion and the little-endian binary matrix and index formats.
//!
//! Matrix file (`SNNB`):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `SNNB` |
//! | 4 | version, u32 = 1 |
//! | 8 | n, u64 |
//! | 8 | d, u64 |
//! | 8·n·d | values, f64, row-major |
//!
//! Index file (`SNNI`): magic, version, n, d as above, then the mean
//! (d f64), direction (d f64), singular values (d f64, zero-padded past the
//! two that are kept), scores (n f64), half-norms (n f64), permutation
//! (n u64) and the centered points in score order (n·d f64). Every field is
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::PointMatrix;
use crate::error::{Result, SnnError};
use crate::indexer::SnnIndex;

pub const MATRIX_MAGIC: [u8; 4] = *b"SNNB";
pub const INDEX_MAGIC: [u8; 4] = *b"SNNI";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 24;

/// Parses comma-separated numeric rows. Row numbers in errors are 1-based
/// line numbers of data rows, counting the header when present.
pub fn parse_csv<R: Read>(reader: R, has_header: bool) -> Result<PointMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let offset = usize::from(has_header) + 1;
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + offset;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(SnnError::RaggedRow {
                row,
                expected,
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| SnnError::Parse {
                row,
                col: j + 1,
                field: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(SnnError::Parse {
                    row,
                    col: j + 1,
                    field: field.to_string(),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    let Some(cols) = cols else {
        return Err(SnnError::EmptyFile);
    };
    PointMatrix::new(rows, cols, data)
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<PointMatrix> {
    parse_csv(BufReader::new(File::open(path)?), has_header)
}

fn write_header<W: Write>(w: &mut W, magic: [u8; 4], n: usize, d: usize) -> Result<()> {
    w.write_all(&magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(d as u64).to_le_bytes())?;
    Ok(())
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_matrix<W: Write>(w: &mut W, points: &PointMatrix) -> Result<()> {
    write_header(w, MATRIX_MAGIC, points.n(), points.d())?;
    write_f64s(w, points.as_slice())
}

pub fn save_binary(points: &PointMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, points)?;
    w.flush()?;
    Ok(())
}

/// Bounds-checked little-endian cursor over a byte buffer.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(SnnError::Truncated {
                needed: (self.pos as u64).saturating_add(len as u64),
                available: self.buf.len() as u64,
            });
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = self.take(count.checked_mul(8).ok_or(SnnError::Truncated {
            needed: u64::MAX,
            available: self.buf.len() as u64,
        })?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        let extra = self.buf.len() - self.pos;
        if extra != 0 {
            return Err(SnnError::TrailingBytes(extra as u64));
        }
        Ok(())
    }
}

/// Reads and checks magic, version and sizes, and verifies that the file
/// is long enough for the payload they declare.
fn read_header<'a>(
    buf: &'a [u8],
    magic: [u8; 4],
    payload_words: impl Fn(u64, u64) -> Option<u64>,
) -> Result<(Cursor<'a>, usize, usize)> {
    let mut c = Cursor { buf, pos: 0 };
    let m: [u8; 4] = c.take(4)?.try_into().unwrap();
    if m != magic {
        return Err(SnnError::BadMagic(m));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(SnnError::UnsupportedVersion(version));
    }
    let n = c.u64()?;
    let d = c.u64()?;
    let needed = payload_words(n, d)
        .and_then(|w| w.checked_mul(8))
        .and_then(|b| b.checked_add(HEADER_LEN));
    let available = buf.len() as u64;
    match needed {
        Some(needed) if needed <= available => {}
        needed => {
            return Err(SnnError::Truncated {
                needed: needed.unwrap_or(u64::MAX),
                available,
            })
        }
    }
    Ok((c, n as usize, d as usize))
}

pub fn decode_matrix(buf: &[u8]) -> Result<PointMatrix> {
    let (mut c, n, d) = read_header(buf, MATRIX_MAGIC, |n, d| n.checked_mul(d))?;
    let values = c.f64s(n * d)?;
    c.finish()?;
    PointMatrix::new(n, d, values)
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<PointMatrix> {
    decode_matrix(&std::fs::read(path)?)
}

pub fn write_index<W: Write>(w: &mut W, index: &SnnIndex) -> Result<()> {
    let d = index.dim();
    write_header(w, INDEX_MAGIC, index.len(), d)?;
    write_f64s(w, index.mean())?;
    write_f64s(w, index.direction())?;
    let mut sigma = vec![0.0; d];
    for (slot, s) in sigma.iter_mut().zip(index.sigma()) {
        *slot = s;
    }
    write_f64s(w, &sigma)?;
    write_f64s(w, index.scores())?;
    write_f64s(w, index.half_norms())?;
    for &p in index.perm() {
        w.write_all(&(p as u64).to_le_bytes())?;
    }
    write_f64s(w, index.sorted_points())
}

pub fn encode_index(index: &SnnIndex) -> Vec<u8> {
    let mut buf = Vec::new();
    write_index(&mut buf, index).expect("writing to a Vec cannot fail");
    buf
}

pub fn save_index(index: &SnnIndex, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_index(&mut w, index)?;
    w.flush()?;
    Ok(())
}

pub fn decode_index(buf: &[u8]) -> Result<SnnIndex> {
    let words = |n: u64, d: u64| {
        let per_point = d.checked_add(3)?;
        n.checked_mul(per_point)?.checked_add(d.checked_mul(3)?)
    };
    let (mut c, n, d) = read_header(buf, INDEX_MAGIC, words)?;
    let mean = c.f64s(d)?;
    let direction = c.f64s(d)?;
    let sigma_all = c.f64s(d)?;
    let sigma = [
        sigma_all.first().copied().unwrap_or(0.0),
        sigma_all.get(1).copied().unwrap_or(0.0),
    ];
    if sigma_all.iter().skip(2).any(|&s| s != 0.0) {
        return Err(SnnError::InvalidIndex(
            "unexpected singular values past the second".into(),
        ));
    }
    let scores = c.f64s(n)?;
    let half_norms = c.f64s(n)?;
    let mut perm = Vec::with_capacity(n);
    for _ in 0..n {
        let p = c.u64()?;
        perm.push(usize::try_from(p).map_err(|_| SnnError::InvalidIndex("permutation entry out of range".into()))?);
    }
    let sorted = c.f64s(n * d)?;
    c.finish()?;
    SnnIndex::from_parts(d, mean, direction, sigma, scores, half_norms, perm, sorted)
}

pub fn load_index(path: impl AsRef<Path>) -> Result<SnnIndex> {
    decode_index(&std::fs::read(path)?)
}

/// Loads a matrix by format name (`csv` or `binary`).
pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat, has_header: bool) -> Result<PointMatrix> {
    match format {
        MatrixFormat::Csv => load_csv(path, has_header),
        MatrixFormat::Binary => load_binary(path),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixFormat {
    #[default]
    Csv,
    Binary,
}

impl std::str::FromStr for MatrixFormat {
    type Err = SnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "binary" | "bin" => Ok(Self::Binary),
            other => Err(SnnError::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}
