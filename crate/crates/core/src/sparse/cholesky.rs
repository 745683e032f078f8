use std::sync::Arc;

use super::{minimum_degree, CscMatrix};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Ordering, elimination tree and the scatter map from a symmetric pattern into the permuted
/// upper triangle. Reusable for every matrix with the same pattern.
#[derive(Debug, Clone)]
pub struct SymbolicCholesky {
    n: usize,
    a_colptr: Vec<usize>,
    a_rowind: Vec<usize>,
    perm: Vec<usize>,
    parent: Vec<usize>,
    // permuted upper triangle C = P A Pᵀ (diagonal always present)
    c_colptr: Vec<usize>,
    c_rowind: Vec<usize>,
    a_to_c: Vec<usize>,
    c_diag: Vec<usize>,
    l_colptr: Vec<usize>,
}

impl SymbolicCholesky {
    /// Analyse a square matrix whose pattern holds both triangles.
    pub fn analyse(a: &CscMatrix) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "Cholesky needs a square matrix");
        let n = a.ncols();
        let perm = minimum_degree(n, a.colptr(), a.rowind());
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Upper triangle of C, diagonal first in each column.
        let mut count = vec![1usize; n];
        for j in 0..n {
            for &i in &a.rowind()[a.colptr()[j]..a.colptr()[j + 1]] {
                let (pi, pj) = (iperm[i], iperm[j]);
                if pi < pj {
                    count[pj] += 1;
                }
            }
        }
        let mut c_colptr = vec![0; n + 1];
        for j in 0..n {
            c_colptr[j + 1] = c_colptr[j] + count[j];
        }
        let mut c_rowind = vec![0; c_colptr[n]];
        let mut next = c_colptr.clone();
        let mut c_diag = vec![0; n];
        for j in 0..n {
            c_rowind[next[j]] = j;
            c_diag[j] = next[j];
            next[j] += 1;
        }
        let mut a_to_c = vec![NONE; a.nnz()];
        for j in 0..n {
            for p in a.colptr()[j]..a.colptr()[j + 1] {
                let i = a.rowind()[p];
                let (pi, pj) = (iperm[i], iperm[j]);
                if pi < pj {
                    c_rowind[next[pj]] = pi;
                    a_to_c[p] = next[pj];
                    next[pj] += 1;
                } else if pi == pj {
                    a_to_c[p] = c_diag[pj];
                }
            }
        }

        let parent = etree(n, &c_colptr, &c_rowind);

        // Column counts of L from the row patterns.
        let mut col_count = vec![1usize; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(k, &c_colptr, &c_rowind, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                col_count[i] += 1;
            }
        }
        let mut l_colptr = vec![0; n + 1];
        for j in 0..n {
            l_colptr[j + 1] = l_colptr[j] + col_count[j];
        }

        SymbolicCholesky {
            n,
            a_colptr: a.colptr().to_vec(),
            a_rowind: a.rowind().to_vec(),
            perm,
            parent,
            c_colptr,
            c_rowind,
            a_to_c,
            c_diag,
            l_colptr,
        }
    }

    pub fn matches(&self, a: &CscMatrix) -> bool {
        a.nrows() == self.n && a.colptr() == self.a_colptr && a.rowind() == self.a_rowind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in the factor.
    pub fn factor_nnz(&self) -> usize {
        self.l_colptr[self.n]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Numeric factorization of `A + shift·I`.
    pub fn factor(self: &Arc<Self>, a: &CscMatrix, shift: f64) -> Result<Cholesky> {
        debug_assert!(self.matches(a));
        let n = self.n;
        let mut cx = vec![0.0; self.c_rowind.len()];
        for (p, &v) in a.values().iter().enumerate() {
            let q = self.a_to_c[p];
            if q != NONE {
                cx[q] += v;
            }
        }
        if shift != 0.0 {
            for &d in &self.c_diag {
                cx[d] += shift;
            }
        }

        let nnz = self.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut next: Vec<usize> = self.l_colptr[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];

        for k in 0..n {
            let top = ereach(k, &self.c_colptr, &self.c_rowind, &self.parent, &mut stack, &mut mark);
            for p in self.c_colptr[k]..self.c_colptr[k + 1] {
                x[self.c_rowind[p]] = cx[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / lx[self.l_colptr[i]];
                x[i] = 0.0;
                for p in self.l_colptr[i] + 1..next[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
        }
        Ok(Cholesky {
            symbolic: Arc::clone(self),
            li,
            lx,
        })
    }
}

/// Elimination tree of the matrix whose upper triangle is given.
fn etree(n: usize, colptr: &[usize], rowind: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &r in &rowind[colptr[k]..colptr[k + 1]] {
            let mut i = r;
            while i != NONE && i < k {
                let inext = ancestor[i];
                ancestor[i] = k;
                if inext == NONE {
                    parent[i] = k;
                }
                i = inext;
            }
        }
    }
    parent
}

/// Pattern of row `k` of L (excluding the diagonal), written to `stack[top..]` in topological order.
fn ereach(
    k: usize,
    colptr: &[usize],
    rowind: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for &r in &rowind[colptr[k]..colptr[k + 1]] {
        let mut i = r;
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

/// A numeric factor `P A Pᵀ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    symbolic: Arc<SymbolicCholesky>,
    li: Vec<usize>,
    lx: Vec<f64>,
}

impl Cholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let s = &self.symbolic;
        let n = s.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = s.perm.iter().map(|&o| b[o]).collect();
        // L y = b
        for j in 0..n {
            let start = s.l_colptr[j];
            y[j] /= self.lx[start];
            let yj = y[j];
            for p in start + 1..s.l_colptr[j + 1] {
                y[self.li[p]] -= self.lx[p] * yj;
            }
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let start = s.l_colptr[j];
            let mut v = y[j];
            for p in start + 1..s.l_colptr[j + 1] {
                v -= self.lx[p] * y[self.li[p]];
            }
            y[j] = v / self.lx[start];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in s.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// `log det A`.
    pub fn log_determinant(&self) -> f64 {
        let s = &self.symbolic;
        (0..s.n).map(|j| 2.0 * self.lx[s.l_colptr[j]].ln()).sum()
    }
}

/// Factorizes repeatedly, redoing the symbolic phase only when the pattern changes.
#[derive(Debug, Default, Clone)]
pub struct CholeskySolver {
    symbolic: Option<Arc<SymbolicCholesky>>,
    analyses: usize,
}

impl CholeskySolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&mut self, a: &CscMatrix, shift: f64) -> Result<Cholesky> {
        let reuse = matches!(&self.symbolic, Some(s) if s.matches(a));
        if !reuse {
            self.symbolic = Some(Arc::new(SymbolicCholesky::analyse(a)));
            self.analyses += 1;
        }
        self.symbolic.as_ref().unwrap().factor(a, shift)
    }

    /// Number of symbolic analyses performed so far.
    pub fn analyses(&self) -> usize {
        self.analyses
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, density: f64, seed: u64) -> CscMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, n as f64 * 0.5 + 1.0);
            for j in 0..i {
                if rng.gen::<f64>() < density {
                    let v = rng.gen_range(-1.0..1.0);
                    t.push(i, j, v);
                    t.push(j, i, v);
                }
            }
        }
        t.to_csc()
    }

    #[test]
    fn solve_matches_dense() {
        for seed in 0..5 {
            let a = random_spd(40, 0.1, seed);
            let mut solver = CholeskySolver::new();
            let f = solver.factor(&a, 0.0).unwrap();
            let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
            let x = f.solve(&b);
            let dense = a.to_dense().cholesky().unwrap();
            let xd = dense.solve(&DVector::from_vec(b.clone()));
            for i in 0..40 {
                assert!((x[i] - xd[i]).abs() < 1e-12, "{} vs {}", x[i], xd[i]);
            }
            let ld = a.to_dense().cholesky().unwrap().l().diagonal().map(|v| 2.0 * v.ln()).sum();
            assert!((f.log_determinant() - ld).abs() < 1e-9);
        }
    }

    #[test]
    fn shift_and_pattern_reuse() {
        let a = random_spd(25, 0.2, 9);
        let mut solver = CholeskySolver::new();
        let f1 = solver.factor(&a, 0.0).unwrap();
        let f2 = solver.factor(&a, 2.5).unwrap();
        assert_eq!(solver.analyses(), 1);
        let b = vec![1.0; 25];
        let x = f2.solve(&b);
        let shifted = a.to_dense() + DMatrix::identity(25, 25) * 2.5;
        let r = &shifted * DVector::from_vec(x) - DVector::from_vec(b.clone());
        assert!(r.amax() < 1e-12);
        assert!(f1.solve(&b) != f2.solve(&b));
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 1.0);
        t.push(1, 1, -1.0);
        t.push(2, 2, 1.0);
        t.push(0, 1, 0.5);
        t.push(1, 0, 0.5);
        let a = t.to_csc();
        assert!(matches!(
            CholeskySolver::new().factor(&a, 0.0),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(CholeskySolver::new().factor(&a, 2.0).is_ok());
    }

    #[test]
    fn missing_diagonal_gets_shift() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 1, 0.1);
        t.push(1, 0, 0.1);
        let a = t.to_csc();
        let f = CholeskySolver::new().factor(&a, 1.0).unwrap();
        let x = f.solve(&[1.0, 0.0]);
        let det = 1.0 - 0.01;
        assert!((x[0] - 1.0 / det).abs() < 1e-14);
        assert!((x[1] + 0.1 / det).abs() < 1e-14);
    }
}
