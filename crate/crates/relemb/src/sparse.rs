//! Sparse vectors with sorted indices.
//!
//! All sparse rows in the crate (tf-idf document vectors, relevance-based
//! word representations) share this layout: strictly ascending indices and
//! no stored zeros.

use std::collections::BTreeMap;

/// A sparse vector over `u32` component indices.
///
/// Invariants: `indices` is strictly ascending, `values` has the same length,
/// and no stored value is `0.0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// An empty (all-zero) vector.
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from parallel `(index, value)` pairs, which must already be
    /// strictly ascending by index. Zero values are dropped.
    pub fn from_sorted(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in pairs {
            if let Some(&last) = indices.last() {
                assert!(i > last, "sparse indices must be strictly ascending");
            }
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        SparseVector { indices, values }
    }

    /// Builds from an index-keyed map (already sorted by construction).
    pub fn from_map(map: &BTreeMap<u32, f64>) -> Self {
        Self::from_sorted(map.iter().map(|(&i, &v)| (i, v)))
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Value at `index`, `0.0` when absent.
    pub fn get(&self, index: u32) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product against a dense slice indexed by component.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i as usize]).sum()
    }

    /// Sum of `value * value` over shared indices of two sparse vectors.
    pub fn dot_sparse(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// Scatters `scale * self` into a dense accumulator.
    pub fn add_scaled_into(&self, scale: f64, dense: &mut [f64]) {
        for (i, v) in self.iter() {
            dense[i as usize] += scale * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_sorted_drops_zeros() {
        let v = SparseVector::from_sorted([(1, 0.5), (3, 0.0), (7, 2.0)]);
        assert_eq!(v.indices(), &[1, 7]);
        assert_eq!(v.values(), &[0.5, 2.0]);
    }

    #[test]
    #[should_panic(expected = "strictly ascending")]
    fn from_sorted_rejects_unsorted() {
        let _ = SparseVector::from_sorted([(3, 1.0), (1, 1.0)]);
    }

    #[test]
    fn get_and_dot() {
        let v = SparseVector::from_sorted([(0, 1.0), (2, 3.0)]);
        assert_eq!(v.get(2), 3.0);
        assert_eq!(v.get(1), 0.0);
        assert_eq!(v.dot_dense(&[2.0, 9.0, 1.0]), 5.0);
        let w = SparseVector::from_sorted([(2, 2.0), (5, 1.0)]);
        assert_eq!(v.dot_sparse(&w), 6.0);
    }

    #[test]
    fn norm_matches_dense() {
        let v = SparseVector::from_sorted([(1, 3.0), (4, 4.0)]);
        assert_eq!(v.norm(), 5.0);
    }
}
