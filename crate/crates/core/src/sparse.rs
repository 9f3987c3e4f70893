//! Compressed-row storage sharing one sparsity pattern between matrices.

use alloc::vec;
use alloc::vec::Vec;

/// Sparsity pattern of the P1 stencil: row `i` lists `N_i` (including `i`)
/// in increasing column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    diag: Vec<usize>,
    transpose: Vec<usize>,
}

impl Pattern {
    /// Builds the pattern from per-row neighbor lists. Each list must contain
    /// the row index itself, and the relation must be symmetric.
    pub fn from_rows(rows: &[Vec<usize>]) -> Pattern {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut cols = row.clone();
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend_from_slice(&cols);
            row_ptr.push(col_idx.len());
        }
        let n = rows.len();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[k] == i {
                    diag[i] = k;
                }
            }
            assert!(diag[i] != usize::MAX, "row {i} lacks its diagonal");
        }
        let mut pattern = Pattern {
            row_ptr,
            col_idx,
            diag,
            transpose: Vec::new(),
        };
        let mut transpose = vec![usize::MAX; pattern.nnz()];
        for i in 0..n {
            for k in pattern.row_range(i) {
                let j = pattern.col_idx[k];
                transpose[k] = pattern
                    .find(j, i)
                    .expect("stencil relation must be symmetric");
            }
        }
        pattern.transpose = transpose;
        pattern
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row_range(&self, i: usize) -> core::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    #[inline]
    pub fn col(&self, k: usize) -> usize {
        self.col_idx[k]
    }

    pub fn cols(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_range(i)]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> usize {
        self.diag[i]
    }

    /// Index of entry `(j, i)` given the index of `(i, j)`.
    #[inline]
    pub fn transpose(&self, k: usize) -> usize {
        self.transpose[k]
    }

    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.row_range(i);
        self.col_idx[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|pos| range.start + pos)
    }

    /// Off-diagonal entries `(i, j, k)` of row `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_range(i)
            .map(move |k| (self.col_idx[k], k))
            .filter(move |&(j, _)| j != i)
    }
}

/// Values laid out over a [`Pattern`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: &Pattern) -> CsrMatrix {
        CsrMatrix {
            values: vec![0.0; pattern.nnz()],
        }
    }

    pub fn get(&self, pattern: &Pattern, i: usize, j: usize) -> f64 {
        pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row_sum(&self, pattern: &Pattern, i: usize) -> f64 {
        self.values[pattern.row_range(i)].iter().sum()
    }

    /// Adds `value` at `(i, j)`. Panics if the entry is outside the pattern.
    pub fn add(&mut self, pattern: &Pattern, i: usize, j: usize, value: f64) {
        let k = pattern
            .find(i, j)
            .expect("entry outside the sparsity pattern");
        self.values[k] += value;
    }
}
