//! Compressed-row complex matrices for superoperators.

use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::C64;

/// Rows per rayon task in [`CsrMatrix::matvec_into`].
const PAR_CHUNK_ROWS: usize = 256;
/// Below this row count matvec runs sequentially.
const PAR_MIN_ROWS: usize = 4096;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows: Vec<usize> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != C64::new(0.0, 0.0)).collect();
        let mut k = 0;
        let (mut cols2, mut vals2) = (Vec::new(), Vec::new());
        for (i, &r) in rows.iter().enumerate() {
            if keep[i] {
                row_ptr[r + 1] += 1;
                cols2.push(col_idx[i]);
                vals2.push(values[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, vals2.len());
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, col_idx: cols2, values: vals2 }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += self.values[k] * x[self.col_idx[k]];
        }
        acc
    }

    /// `y = A x`. Each output entry is summed in a fixed order, so results
    /// do not depend on the thread count.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n < PAR_MIN_ROWS {
            for (r, out) in y.iter_mut().enumerate() {
                *out = self.row_dot(r, x);
            }
        } else {
            y.par_chunks_mut(PAR_CHUNK_ROWS).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * PAR_CHUNK_ROWS;
                for (i, out) in ys.iter_mut().enumerate() {
                    *out = self.row_dot(base + i, x);
                }
            });
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Column-major faer copy of `A + shift I`.
    pub fn to_faer_shifted(&self, shift: C64) -> Result<SparseColMat<usize, C64>> {
        let mut t: Vec<Triplet<usize, usize, C64>> =
            self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        if shift != C64::new(0.0, 0.0) {
            t.extend((0..self.n).map(|i| Triplet::new(i, i, shift)));
        }
        // faer rejects duplicate entries, so merge the shifted diagonal first.
        t.sort_unstable_by(|a, b| (a.col, a.row).cmp(&(b.col, b.row)));
        let mut merged: Vec<Triplet<usize, usize, C64>> = Vec::with_capacity(t.len());
        for e in t {
            match merged.last_mut() {
                Some(last) if last.row == e.row && last.col == e.col => last.val += e.val,
                _ => merged.push(e),
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &merged)
            .map_err(|e| Error::LinearAlgebra(format!("sparse assembly failed: {e:?}")))
    }

    pub fn to_dense(&self) -> faer::Mat<C64> {
        let mut m = faer::Mat::<C64>::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }
}
