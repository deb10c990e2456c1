use std::collections::BTreeMap;

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Tokenization and vocabulary pruning for [`build_tfidf`].
///
/// IDF is always the smoothed form `ln((1 + n) / (1 + df)) + 1` and term
/// frequencies are raw counts. Changing `lowercase` changes the vocabulary
/// and therefore every downstream selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TfidfConfig {
    pub lowercase: bool,
    /// Terms appearing in fewer documents than this are dropped.
    pub min_df: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            lowercase: true,
            min_df: 1,
        }
    }
}

impl TfidfConfig {
    /// Splits on Unicode whitespace, lowercasing first if configured.
    pub fn tokenize(&self, doc: &str) -> Vec<String> {
        doc.split_whitespace()
            .map(|t| if self.lowercase { t.to_lowercase() } else { t.to_owned() })
            .collect()
    }
}

/// Sparse TF-IDF rows over a sorted vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeatureMatrix {
    vocabulary: Vec<String>,
    /// Per row, `(term index, weight)` with strictly increasing term indices.
    rows: Vec<Vec<(u32, f64)>>,
    degenerate: Vec<usize>,
}

impl SparseFeatureMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    /// Weight of `term` in row `i`, zero if absent.
    pub fn weight(&self, i: usize, term: &str) -> f64 {
        let Ok(t) = self.vocabulary.binary_search_by(|v| v.as_str().cmp(term)) else {
            return 0.0;
        };
        self.rows[i]
            .binary_search_by_key(&(t as u32), |&(idx, _)| idx)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Documents with no surviving terms. Their rows are all zero.
    pub fn degenerate_rows(&self) -> &[usize] {
        &self.degenerate
    }

    /// Densifies into an `n × |vocabulary|` normalized matrix.
    pub fn to_dense(&self) -> Result<FeatureMatrix> {
        let d = self.vocabulary.len();
        let mut values = vec![0f32; self.n() * d];
        for (i, row) in self.rows.iter().enumerate() {
            for &(t, w) in row {
                values[i * d + t as usize] = w as f32;
            }
        }
        FeatureMatrix::with_flag(self.n(), d, values, true)
    }
}

/// TF-IDF over a corpus of raw documents, L2-normalized per row.
pub fn build_tfidf<S: AsRef<str>>(corpus: &[S], config: &TfidfConfig) -> Result<SparseFeatureMatrix> {
    let n = corpus.len();
    if n == 0 {
        return Err(Error::invalid("empty corpus"));
    }
    if config.min_df == 0 || config.min_df > n {
        return Err(Error::invalid(format!(
            "min_df must be in 1..={n}, got {}",
            config.min_df
        )));
    }

    let counts: Vec<BTreeMap<String, u64>> = corpus
        .iter()
        .map(|doc| {
            let mut tf = BTreeMap::new();
            for tok in config.tokenize(doc.as_ref()) {
                *tf.entry(tok).or_insert(0) += 1;
            }
            tf
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tf in &counts {
        for term in tf.keys() {
            *df.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    let kept: Vec<(&str, f64)> = df
        .iter()
        .filter(|&(_, &df)| df >= config.min_df)
        .map(|(&t, &df)| (t, ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0))
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid("no terms survive the min_df cut"));
    }
    let index: BTreeMap<&str, (u32, f64)> = kept
        .iter()
        .enumerate()
        .map(|(i, &(t, idf))| (t, (i as u32, idf)))
        .collect();

    let mut degenerate = Vec::new();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(doc, tf)| {
            // BTreeMap iteration is sorted, and so are the vocabulary indices.
            let mut row: Vec<(u32, f64)> = tf
                .iter()
                .filter_map(|(term, &c)| index.get(term.as_str()).map(|&(t, idf)| (t, c as f64 * idf)))
                .collect();
            let norm = row.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
            if norm == 0.0 {
                degenerate.push(doc);
            } else {
                for (_, w) in &mut row {
                    *w /= norm;
                }
            }
            row
        })
        .collect();

    Ok(SparseFeatureMatrix {
        vocabulary: kept.iter().map(|&(t, _)| t.to_owned()).collect(),
        rows,
        degenerate,
    })
}
