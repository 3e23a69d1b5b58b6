//! Compressed-sparse-column complex matrices.
//!
//! Row indices within each column are kept sorted and free of duplicates;
//! every constructor establishes that and every operation preserves it.

use ndarray::Array2;
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<C64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowind = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        colptr.push(0);
        for (i, &v) in diag.iter().enumerate() {
            if v != C64::new(0.0, 0.0) {
                rowind.push(i);
                values.push(v);
            }
            colptr.push(rowind.len());
        }
        Self {
            nrows: n,
            ncols: n,
            colptr,
            rowind,
            values,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and entries that end up exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 != C64::new(0.0, 0.0));
        let mut colptr = vec![0usize; ncols + 1];
        for &(_, c, _) in &merged {
            colptr[c + 1] += 1;
        }
        for c in 0..ncols {
            colptr[c + 1] += colptr[c];
        }
        Self {
            nrows,
            ncols,
            colptr,
            rowind: merged.iter().map(|e| e.0).collect(),
            values: merged.iter().map(|e| e.2).collect(),
        }
    }

    pub fn from_dense(dense: &Array2<C64>) -> Self {
        let (nrows, ncols) = dense.dim();
        let zero = C64::new(0.0, 0.0);
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowind = Vec::new();
        let mut values = Vec::new();
        colptr.push(0);
        for c in 0..ncols {
            for r in 0..nrows {
                let v = dense[[r, c]];
                if v != zero {
                    rowind.push(r);
                    values.push(v);
                }
            }
            colptr.push(rowind.len());
        }
        Self {
            nrows,
            ncols,
            colptr,
            rowind,
            values,
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.iter() {
            out[[r, c]] = v;
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowind(&self) -> &[usize] {
        &self.rowind
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Iterates stored entries as `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            (self.colptr[c]..self.colptr[c + 1]).map(move |k| (self.rowind[k], c, self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.colptr[c]..self.colptr[c + 1];
        match self.rowind[range.clone()].binary_search(&r) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        if alpha == C64::new(0.0, 0.0) {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.iter().map(|(r, c, v)| (r, c, f(v))))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.iter().map(|(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: C64, other: &Self, beta: C64) -> Self {
        assert_eq!(self.shape(), other.shape(), "sparse add: shape mismatch");
        let zero = C64::new(0.0, 0.0);
        let mut colptr = Vec::with_capacity(self.ncols + 1);
        let mut rowind = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        colptr.push(0);
        for c in 0..self.ncols {
            let (mut i, iend) = (self.colptr[c], self.colptr[c + 1]);
            let (mut j, jend) = (other.colptr[c], other.colptr[c + 1]);
            while i < iend || j < jend {
                let ri = if i < iend { self.rowind[i] } else { usize::MAX };
                let rj = if j < jend { other.rowind[j] } else { usize::MAX };
                let (r, v) = if ri < rj {
                    i += 1;
                    (ri, alpha * self.values[i - 1])
                } else if rj < ri {
                    j += 1;
                    (rj, beta * other.values[j - 1])
                } else {
                    i += 1;
                    j += 1;
                    (ri, alpha * self.values[i - 1] + beta * other.values[j - 1])
                };
                if v != zero {
                    rowind.push(r);
                    values.push(v);
                }
            }
            colptr.push(rowind.len());
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            colptr,
            rowind,
            values,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// Sparse product `self * other` (Gustavson's column algorithm).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "sparse matmul: inner dimension mismatch");
        let zero = C64::new(0.0, 0.0);
        let mut acc = vec![zero; self.nrows];
        let mut mark = vec![usize::MAX; self.nrows];
        let mut pattern: Vec<usize> = Vec::new();
        let mut colptr = Vec::with_capacity(other.ncols + 1);
        let mut rowind = Vec::new();
        let mut values = Vec::new();
        colptr.push(0);
        for c in 0..other.ncols {
            pattern.clear();
            for k in other.colptr[c]..other.colptr[c + 1] {
                let inner = other.rowind[k];
                let b = other.values[k];
                for p in self.colptr[inner]..self.colptr[inner + 1] {
                    let r = self.rowind[p];
                    if mark[r] != c {
                        mark[r] = c;
                        acc[r] = zero;
                        pattern.push(r);
                    }
                    acc[r] += self.values[p] * b;
                }
            }
            pattern.sort_unstable();
            for &r in &pattern {
                if acc[r] != zero {
                    rowind.push(r);
                    values.push(acc[r]);
                }
            }
            colptr.push(rowind.len());
        }
        Self {
            nrows: self.nrows,
            ncols: other.ncols,
            colptr,
            rowind,
            values,
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (m, n) = self.shape();
        let (p, q) = other.shape();
        let mut colptr = Vec::with_capacity(n * q + 1);
        let mut rowind = Vec::with_capacity(self.nnz() * other.nnz());
        let mut values = Vec::with_capacity(self.nnz() * other.nnz());
        colptr.push(0);
        for ca in 0..n {
            for cb in 0..q {
                for ka in self.colptr[ca]..self.colptr[ca + 1] {
                    let ra = self.rowind[ka];
                    let va = self.values[ka];
                    for kb in other.colptr[cb]..other.colptr[cb + 1] {
                        rowind.push(ra * p + other.rowind[kb]);
                        values.push(va * other.values[kb]);
                    }
                }
                colptr.push(rowind.len());
            }
        }
        Self {
            nrows: m * p,
            ncols: n * q,
            colptr,
            rowind,
            values,
        }
    }

    /// `y += alpha * self * x`, allocation free.
    #[inline]
    pub fn mul_vec_acc(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            let s = alpha * xc;
            for k in self.colptr[c]..self.colptr[c + 1] {
                y[self.rowind[k]] += self.values[k] * s;
            }
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.mul_vec_acc(C64::new(1.0, 0.0), x, &mut y);
        y
    }

    /// Sparse times dense.
    pub fn mul_dense(&self, b: &Array2<C64>) -> Array2<C64> {
        assert_eq!(self.ncols, b.nrows(), "sparse*dense: inner dimension mismatch");
        let mut out = Array2::zeros((self.nrows, b.ncols()));
        for (r, c, v) in self.iter() {
            let row_b = b.row(c);
            let mut row_o = out.row_mut(r);
            row_o.scaled_add(v, &row_b);
        }
        out
    }

    /// Dense times sparse.
    pub fn dense_mul(a: &Array2<C64>, s: &Self) -> Array2<C64> {
        assert_eq!(a.ncols(), s.nrows, "dense*sparse: inner dimension mismatch");
        let mut out = Array2::zeros((a.nrows(), s.ncols));
        for (r, c, v) in s.iter() {
            let col_a = a.column(r);
            let mut col_o = out.column_mut(c);
            col_o.scaled_add(v, &col_a);
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == C64::new(0.0, 0.0))
    }

    /// Converts to a faer sparse matrix for factorization.
    pub(crate) fn to_faer(&self) -> faer::sparse::SparseColMat<usize, C64> {
        let triplets: Vec<faer::sparse::Triplet<usize, usize, C64>> = self
            .iter()
            .map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .expect("valid sparse structure")
    }
}
