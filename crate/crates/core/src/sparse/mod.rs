//! Compressed sparse column storage, triplet assembly and a sparse Cholesky solver.

mod cholesky;
mod ordering;

pub use cholesky::{Cholesky, CholeskySolver, SymbolicCholesky};
pub use ordering::minimum_degree;

use nalgebra::DMatrix;

/// Coordinate-format builder; duplicate entries are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            ..Default::default()
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn reserve(&mut self, additional: usize) {
        self.rows.reserve(additional);
        self.cols.reserve(additional);
        self.vals.reserve(additional);
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn append(&mut self, other: Triplets) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.rows.extend(other.rows);
        self.cols.extend(other.cols);
        self.vals.extend(other.vals);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .zip(&self.vals)
            .map(|((&r, &c), &v)| (r, c, v))
    }

    /// Bucket by column, then sort rows inside each column and merge duplicates.
    pub fn to_csc(&self) -> CscMatrix {
        let ncols = self.ncols;
        let mut count = vec![0usize; ncols + 1];
        for &c in &self.cols {
            count[c + 1] += 1;
        }
        for j in 0..ncols {
            count[j + 1] += count[j];
        }
        let mut next = count.clone();
        let mut entries = vec![(0usize, 0.0f64); self.vals.len()];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            entries[next[c]] = (r, v);
            next[c] += 1;
        }
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowind = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        colptr.push(0);
        for j in 0..ncols {
            let col = &mut entries[count[j]..count[j + 1]];
            col.sort_unstable_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(r, v) in col.iter() {
                if r == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    rowind.push(r);
                    values.push(v);
                    last = r;
                }
            }
            colptr.push(rowind.len());
        }
        CscMatrix {
            nrows: self.nrows,
            ncols,
            colptr,
            rowind,
            values,
        }
    }
}

/// Compressed sparse column matrix with sorted, unique row indices per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowind: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Wraps raw CSC arrays. Row indices must be sorted and unique within each column.
    pub fn from_parts(nrows: usize, ncols: usize, colptr: Vec<usize>, rowind: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(colptr.len(), ncols + 1);
        assert_eq!(rowind.len(), values.len());
        assert_eq!(colptr[ncols], rowind.len());
        debug_assert!((0..ncols).all(|j| rowind[colptr[j]..colptr[j + 1]].windows(2).all(|w| w[0] < w[1])));
        debug_assert!(rowind.iter().all(|&r| r < nrows));
        CscMatrix {
            nrows,
            ncols,
            colptr,
            rowind,
            values,
        }
    }

    /// `A + B` by merging sorted columns.
    pub fn add(&self, other: &CscMatrix) -> CscMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut colptr = Vec::with_capacity(self.ncols + 1);
        let mut rowind = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        colptr.push(0);
        for j in 0..self.ncols {
            let (mut a, ea) = (self.colptr[j], self.colptr[j + 1]);
            let (mut b, eb) = (other.colptr[j], other.colptr[j + 1]);
            while a < ea || b < eb {
                let ra = if a < ea { self.rowind[a] } else { usize::MAX };
                let rb = if b < eb { other.rowind[b] } else { usize::MAX };
                if ra < rb {
                    rowind.push(ra);
                    values.push(self.values[a]);
                    a += 1;
                } else if rb < ra {
                    rowind.push(rb);
                    values.push(other.values[b]);
                    b += 1;
                } else {
                    rowind.push(ra);
                    values.push(self.values[a] + other.values[b]);
                    a += 1;
                    b += 1;
                }
            }
            colptr.push(rowind.len());
        }
        CscMatrix::from_parts(self.nrows, self.ncols, colptr, rowind, values)
    }

    /// Square blocks placed along the diagonal.
    pub fn block_diagonal(blocks: &[CscMatrix]) -> CscMatrix {
        let n: usize = blocks.iter().map(|b| b.ncols).sum();
        let nnz = blocks.iter().map(|b| b.nnz()).sum();
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowind = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        colptr.push(0);
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.nrows, b.ncols);
            for j in 0..b.ncols {
                for (i, v) in b.column(j) {
                    rowind.push(offset + i);
                    values.push(v);
                }
                colptr.push(rowind.len());
            }
            offset += b.ncols;
        }
        CscMatrix::from_parts(n, n, colptr, rowind, values)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::identity(diag.len());
        m.values.copy_from_slice(diag);
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `(row, value)` pairs of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.colptr[j]..self.colptr[j + 1];
        self.rowind[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.colptr[j]..self.colptr[j + 1];
        match self.rowind[r.clone()].binary_search(&i) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn same_pattern(&self, other: &CscMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.colptr == other.colptr
            && self.rowind == other.rowind
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.column(j) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `y = Aᵀ x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.column(j).map(|(i, v)| v * x[i]).sum())
            .collect()
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut t = Triplets::with_capacity(self.ncols, self.nrows, self.nnz());
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                t.push(j, i, v);
            }
        }
        t.to_csc()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets::with_capacity(self.nrows, self.ncols, self.nnz());
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                t.push(i, j, v);
            }
        }
        t
    }

    /// `A + s·B` (patterns are merged).
    pub fn add_scaled(&self, other: &CscMatrix, s: f64) -> CscMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.to_triplets();
        for j in 0..other.ncols {
            for (i, v) in other.column(j) {
                t.push(i, j, s * v);
            }
        }
        t.to_csc()
    }

    /// Restriction to the rows and columns selected by `map` (`map[old] = Some(new)`).
    pub fn select(&self, row_map: &[Option<usize>], nrows: usize, col_map: &[Option<usize>], ncols: usize) -> CscMatrix {
        let mut t = Triplets::with_capacity(nrows, ncols, self.nnz());
        for j in 0..self.ncols {
            let Some(nj) = col_map[j] else { continue };
            for (i, v) in self.column(j) {
                if let Some(ni) = row_map[i] {
                    t.push(ni, nj, v);
                }
            }
        }
        t.to_csc()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn from_dense(d: &DMatrix<f64>) -> CscMatrix {
        let mut t = Triplets::new(d.nrows(), d.ncols());
        for j in 0..d.ncols() {
            for i in 0..d.nrows() {
                if d[(i, j)] != 0.0 {
                    t.push(i, j, d[(i, j)]);
                }
            }
        }
        t.to_csc()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                m = m.max((v - self.get(j, i)).abs());
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let mut t = Triplets::new(3, 3);
        t.push(2, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(2, 0, 3.0);
        t.push(1, 2, -1.0);
        let a = t.to_csc();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(2, 0), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 2), -1.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![2.0, -1.0, 4.0]);
        assert_eq!(a.transpose_mul_vec(&[1.0, 1.0, 1.0]), vec![6.0, 0.0, -1.0]);
        assert_eq!(a.transpose().get(0, 2), 4.0);
    }

    #[test]
    fn merge_and_stack() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 1.0);
        t.push(2, 1, 2.0);
        let a = t.to_csc();
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 3.0);
        t.push(1, 1, 4.0);
        t.push(1, 2, 5.0);
        let b = t.to_csc();
        let sum = a.add(&b);
        assert_eq!(sum.to_dense(), a.to_dense() + b.to_dense());
        assert_eq!(sum, a.add_scaled(&b, 1.0));
        let d = CscMatrix::block_diagonal(&[a.clone(), b.clone()]);
        assert_eq!(d.nrows(), 6);
        assert_eq!(d.get(2, 1), 2.0);
        assert_eq!(d.get(4, 5), 5.0);
        assert_eq!(d.get(0, 3), 0.0);
        assert_eq!(d.nnz(), a.nnz() + b.nnz());
    }
}
