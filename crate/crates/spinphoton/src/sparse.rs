//! Minimal complex sparse matrices (CSR) with deterministic element order.
//!
//! Dimensions here are small (tens of states), so this exists for structure,
//! reproducibility, and exact sparsity-pattern arithmetic rather than speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

/// Square sparse matrix in compressed-row form. Entries within a row are
/// stored in increasing column order, so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet out of bounds");
            *map.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len());
        for (&(r, c), &v) in &map {
            if v.norm() == 0.0 {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { dim, row_ptr, cols, vals }
    }

    pub fn zeros(dim: usize) -> Self {
        CsrMatrix { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterate stored entries as (row, col, value), row-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &DVector<C64>, y: &mut DVector<C64>) {
        assert_eq!(x.len(), self.dim);
        y.fill(C64::new(0.0, 0.0));
        for (r, c, v) in self.iter() {
            y[r] += v * x[c];
        }
    }

    pub fn mul_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::zeros(self.dim);
        self.matvec(x, &mut y);
        y
    }

    /// `self + s * other`, pattern union.
    pub fn add_scaled(&self, other: &CsrMatrix, s: C64) -> CsrMatrix {
        assert_eq!(self.dim, other.dim);
        CsrMatrix::from_triplets(
            self.dim,
            self.iter().chain(other.iter().map(|(r, c, v)| (r, c, s * v))),
        )
    }

    pub fn scale(&self, s: C64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= s;
        }
        out
    }

    pub fn adjoint(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// Sparse matrix product (used for exact commutator checks).
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.dim, other.dim);
        let mut triplets = Vec::new();
        for (r, k, v) in self.iter() {
            for idx in other.row_ptr[k]..other.row_ptr[k + 1] {
                triplets.push((r, other.cols[idx], v * other.vals[idx]));
            }
        }
        CsrMatrix::from_triplets(self.dim, triplets)
    }

    /// Commutator `[self, other]` with exact cancellation of equal entries.
    pub fn commutator(&self, other: &CsrMatrix) -> CsrMatrix {
        self.matmul(other).add_scaled(&other.matmul(self), C64::new(-1.0, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.add_scaled(&self.adjoint(), C64::new(-1.0, 0.0)).max_abs() <= tol
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn build_and_matvec() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 1, c(2.0, 0.0)), (2, 0, c(0.0, 1.0)), (0, 1, c(1.0, 0.0))]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
        let x = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let y = m.mul_vec(&x);
        assert_eq!(y[0], c(3.0, 0.0));
        assert_eq!(y[2], c(0.0, 1.0));
    }

    #[test]
    fn commutator_of_commuting_is_empty() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, c(1.0, 0.0)), (1, 1, c(2.0, 0.0))]);
        let b = CsrMatrix::from_triplets(2, vec![(0, 0, c(5.0, 0.0)), (1, 1, c(-1.0, 0.0))]);
        assert_eq!(a.commutator(&b).nnz(), 0);
    }

    #[test]
    fn hermitian_check() {
        let h = CsrMatrix::from_triplets(2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]);
        assert!(h.is_hermitian(0.0));
        let n = CsrMatrix::from_triplets(2, vec![(0, 1, c(0.0, 1.0))]);
        assert!(!n.is_hermitian(1e-12));
    }
}
