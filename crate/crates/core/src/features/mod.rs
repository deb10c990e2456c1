//! Sample representations.
//!
//! Everything downstream works on a [`FeatureMatrix`]: `n` rows of `d` 32-bit
//! values, usually L2-normalized so that a dot product is a cosine
//! similarity. Matrices come from [`build_tfidf`] over raw text, from
//! [`mean_pool`] over token embeddings produced elsewhere, or from a file in
//! the binary layout handled by [`load_features`] / [`save_features`].

mod format;
mod tfidf;

pub use format::{load_features, read_features, save_features, write_features, Layout};
pub use tfidf::{build_tfidf, SparseFeatureMatrix, TfidfConfig};

use crate::error::{Error, Result};

/// Row norms of a normalized matrix must fall within this distance of 1.
pub const NORM_TOLERANCE: f64 = 1e-5;

/// Dense row-major `n × d` matrix of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
    normalized: bool,
}

impl FeatureMatrix {
    /// Builds an un-normalized matrix, rejecting bad shapes and non-finite values.
    pub fn new(n: usize, d: usize, values: Vec<f32>) -> Result<Self> {
        Self::with_flag(n, d, values, false)
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::invalid(format!(
                    "row {i} has dimension {}, expected {d}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), d, values)
    }

    /// Builds a matrix that claims to be normalized. The claim is checked:
    /// every row must be unit length or exactly zero.
    pub fn new_normalized(n: usize, d: usize, values: Vec<f32>) -> Result<Self> {
        Self::with_flag(n, d, values, true)
    }

    pub(crate) fn with_flag(n: usize, d: usize, values: Vec<f32>, normalized: bool) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("feature matrix must be non-empty, got {n}x{d}")));
        }
        if values.len() != n * d {
            return Err(Error::invalid(format!(
                "expected {} values for a {n}x{d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let m = FeatureMatrix {
            n,
            d,
            values,
            normalized,
        };
        if normalized {
            if let Some(i) = (0..n).find(|&i| {
                let norm = l2_norm(m.row(i));
                norm != 0.0 && (norm - 1.0).abs() > NORM_TOLERANCE
            }) {
                return Err(Error::invalid(format!(
                    "row {i} is flagged normalized but has norm {}",
                    l2_norm(m.row(i))
                )));
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.values.chunks_exact(self.d)
    }

    /// Indices of all-zero rows.
    pub fn zero_rows(&self) -> Vec<usize> {
        self.rows()
            .enumerate()
            .filter(|(_, r)| r.iter().all(|&v| v == 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> Result<FeatureMatrix> {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            if r >= self.n {
                return Err(Error::invalid(format!("row {r} out of range for n={}", self.n)));
            }
            values.extend_from_slice(self.row(r));
        }
        Self::with_flag(rows.len(), self.d, values, self.normalized)
    }
}

pub(crate) fn l2_norm(row: &[f32]) -> f64 {
    row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
}

/// Result of [`normalize_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub matrix: FeatureMatrix,
    /// Rows that were all zero; they stay zero and are treated as
    /// dissimilar to everything by the kernel.
    pub zero_rows: Vec<usize>,
}

/// Divides every nonzero row by its L2 norm.
pub fn normalize_rows(m: FeatureMatrix) -> Normalized {
    let FeatureMatrix { n, d, mut values, .. } = m;
    let mut zero_rows = Vec::new();
    for (i, row) in values.chunks_exact_mut(d).enumerate() {
        let norm = l2_norm(row);
        if norm == 0.0 {
            zero_rows.push(i);
            continue;
        }
        for v in row.iter_mut() {
            *v = (f64::from(*v) / norm) as f32;
        }
    }
    Normalized {
        matrix: FeatureMatrix {
            n,
            d,
            values,
            normalized: true,
        },
        zero_rows,
    }
}

/// Component-wise mean of token embeddings, accumulated in 64-bit.
pub fn mean_pool<R: AsRef<[f32]>>(token_embeddings: &[R]) -> Result<Vec<f32>> {
    let first = token_embeddings
        .first()
        .ok_or_else(|| Error::invalid("mean_pool of an empty token sequence"))?;
    let d = first.as_ref().len();
    if d == 0 {
        return Err(Error::invalid("mean_pool of zero-dimensional embeddings"));
    }
    let mut acc = vec![0f64; d];
    for (t, emb) in token_embeddings.iter().enumerate() {
        let emb = emb.as_ref();
        if emb.len() != d {
            return Err(Error::invalid(format!(
                "token {t} has dimension {}, expected {d}",
                emb.len()
            )));
        }
        for (a, &v) in acc.iter_mut().zip(emb) {
            *a += f64::from(v);
        }
    }
    let count = token_embeddings.len() as f64;
    Ok(acc.into_iter().map(|a| (a / count) as f32).collect())
}
