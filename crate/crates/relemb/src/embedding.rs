//! Dense row-major embedding matrices.

use crate::error::{Error, Result};

/// What an embedding matrix's rows stand for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    /// Encoder hidden activations, one row per vocabulary term.
    WordEmb,
    /// Autoencoder hidden activations, one row per vocabulary term.
    WordEmbAe,
    /// Truncated-SVD scores of the word-representation matrix.
    Svd,
    /// PCA scores of the word-representation matrix.
    Pca,
    /// Aggregated app embeddings built from [`EmbeddingKind::WordEmb`].
    RelEmb,
    /// Aggregated app embeddings built from [`EmbeddingKind::WordEmbAe`].
    RelEmbAe,
}

impl EmbeddingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingKind::WordEmb => "wordemb",
            EmbeddingKind::WordEmbAe => "wordembae",
            EmbeddingKind::Svd => "svd",
            EmbeddingKind::Pca => "pca",
            EmbeddingKind::RelEmb => "relemb",
            EmbeddingKind::RelEmbAe => "relembae",
        }
    }

    /// Every kind, in the order word-level methods precede app-level ones.
    pub const ALL: [EmbeddingKind; 6] = [
        EmbeddingKind::WordEmb,
        EmbeddingKind::WordEmbAe,
        EmbeddingKind::Svd,
        EmbeddingKind::Pca,
        EmbeddingKind::RelEmb,
        EmbeddingKind::RelEmbAe,
    ];
}

impl std::str::FromStr for EmbeddingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EmbeddingKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown embedding kind {s:?} (expected one of wordemb, wordembae, svd, \
                     pca, relemb, relembae)"
                ))
            })
    }
}

/// A dense `rows x cols` matrix of f64 with cached row norms.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    kind: EmbeddingKind,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    row_norms: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Wraps row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_data(kind: EmbeddingKind, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "embedding data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        let row_norms = (0..rows)
            .map(|r| {
                data[r * cols..(r + 1) * cols]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Ok(EmbeddingMatrix {
            kind,
            rows,
            cols,
            data,
            row_norms,
        })
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Cached Euclidean norm of row `r`.
    pub fn row_norm(&self, r: usize) -> f64 {
        self.row_norms[r]
    }

    /// Cosine similarity between row `r` and a dense query of equal width.
    /// Zero-norm operands yield `None`.
    pub fn cosine_to_row(&self, query: &[f64], query_norm: f64, r: usize) -> Option<f64> {
        let norm = self.row_norms[r];
        if norm == 0.0 || query_norm == 0.0 {
            return None;
        }
        let dot: f64 = self
            .row(r)
            .iter()
            .zip(query.iter())
            .map(|(a, b)| a * b)
            .sum();
        Some(dot / (norm * query_norm))
    }
}

/// Cosine similarity of two dense slices; `None` when either has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na.sqrt() * nb.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn row_access_and_norms() {
        let m =
            EmbeddingMatrix::from_data(EmbeddingKind::WordEmb, 2, 2, vec![3.0, 4.0, 0.0, 0.0])
                .unwrap();
        assert_eq!(m.row(0), &[3.0, 4.0]);
        assert_eq!(m.row_norm(0), 5.0);
        assert_eq!(m.row_norm(1), 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let err = EmbeddingMatrix::from_data(EmbeddingKind::Svd, 2, 3, vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn cosine_is_scale_invariant() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 4.0, 6.0];
        assert_relative_eq!(cosine_similarity(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
        let c = [-1.0, -2.0, -3.0];
        assert_relative_eq!(cosine_similarity(&a, &c).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn cosine_of_zero_vector_is_none() {
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn cosine_to_row_skips_zero_rows() {
        let m =
            EmbeddingMatrix::from_data(EmbeddingKind::WordEmb, 2, 2, vec![1.0, 0.0, 0.0, 0.0])
                .unwrap();
        let q = [1.0, 0.0];
        assert_relative_eq!(m.cosine_to_row(&q, 1.0, 0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(m.cosine_to_row(&q, 1.0, 1).is_none());
    }
}
