//! Row-major sparse matrices used while assembling stencil products.

use faer::Mat;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, Default)]
pub struct SparseRows {
    rows: Vec<Vec<(usize, C64)>>,
    ncols: usize,
}

impl SparseRows {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseRows {
            rows: vec![Vec::new(); nrows],
            ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut s = Self::zeros(n, n);
        for (i, row) in s.rows.iter_mut().enumerate() {
            row.push((i, C64::new(1.0, 0.0)));
        }
        s
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Accumulates `v` into entry `(r, c)`.
    pub fn add(&mut self, r: usize, c: usize, v: C64) {
        let row = &mut self.rows[r];
        match row.iter_mut().find(|(j, _)| *j == c) {
            Some((_, x)) => *x += v,
            None => row.push((c, v)),
        }
    }

    pub fn row(&self, r: usize) -> &[(usize, C64)] {
        &self.rows[r]
    }

    /// `self * other`
    pub fn compose(&self, other: &SparseRows) -> SparseRows {
        assert_eq!(self.ncols, other.nrows());
        let mut out = SparseRows::zeros(self.nrows(), other.ncols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(c, b) in other.row(k) {
                    out.add(r, c, a * b);
                }
            }
        }
        out
    }

    /// Multiplies row `r` by `s[r]`.
    pub fn scale_rows(&self, s: &[f64]) -> SparseRows {
        let mut out = self.clone();
        for (row, &f) in out.rows.iter_mut().zip(s) {
            for (_, v) in row.iter_mut() {
                *v *= f;
            }
        }
        out
    }

    /// `self += coef * other`
    pub fn axpy(&mut self, coef: C64, other: &SparseRows) {
        if coef == C64::new(0.0, 0.0) {
            return;
        }
        for (r, row) in other.rows.iter().enumerate() {
            for &(c, v) in row {
                self.add(r, c, coef * v);
            }
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.nrows(), self.ncols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn from_dense(m: &Mat<C64>) -> SparseRows {
        let mut s = SparseRows::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    s.rows[r].push((c, v));
                }
            }
        }
        s
    }
}
