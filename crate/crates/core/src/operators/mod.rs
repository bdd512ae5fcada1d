//! Finite Hermitian discretizations of the branched Hamiltonian.
//!
//! Every builder returns an [`OperatorMatrix`]: a dense complex matrix, a tag
//! saying which construction produced it, and the discretization its basis
//! refers to.

mod convolution;
mod folded;
pub mod sparse;
mod symbol;
mod unfolded;

pub use convolution::{
    build_convolution_hamiltonian, build_convolution_potential,
    build_fourier_conjugate_hamiltonian, KernelMode, KernelSpec,
};
pub use folded::{
    build_dual_wire_hamiltonian, build_folded_hamiltonian, build_folded_hamiltonian_with,
    FoldedLayout, FoldedOptions,
};
pub use symbol::{DifferentialSymbol, StencilOrder};
pub use unfolded::{build_unfolded_hamiltonian, build_unfolded_hamiltonian_with};

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::graph::GraphLayout;
use crate::grid::Grid;

/// Relative Hermiticity threshold: `max|H - H^dagger| <= HERMITIAN_TOLERANCE * max|H|`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Folded,
    Unfolded,
    DualWire,
    Convolution(KernelMode),
    FourierConjugate,
    Graph,
}

#[derive(Clone, Debug)]
pub enum Discretization {
    /// One array over the nodes of a grid (unfolded line or a plain interval).
    Line(Grid),
    /// Three branch blocks over a folded grid.
    Folded(FoldedLayout),
    Graph(GraphLayout),
}

impl Discretization {
    pub fn dimension(&self) -> usize {
        match self {
            Discretization::Line(g) => g.len(),
            Discretization::Folded(f) => f.len(),
            Discretization::Graph(g) => g.dimension(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub data: Mat<C64>,
    pub provenance: Provenance,
    pub discretization: Discretization,
}

impl OperatorMatrix {
    pub fn new(data: Mat<C64>, provenance: Provenance, discretization: Discretization) -> Self {
        debug_assert_eq!(data.nrows(), discretization.dimension());
        OperatorMatrix {
            data,
            provenance,
            discretization,
        }
    }

    pub fn dimension(&self) -> usize {
        self.data.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data)
    }

    /// Ok when the defect is within the relative tolerance.
    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        let threshold = HERMITIAN_TOLERANCE * self.max_abs().max(f64::MIN_POSITIVE);
        if defect <= threshold {
            Ok(())
        } else {
            Err(Error::NotHermitian { defect, threshold })
        }
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        let n = self.dimension();
        (0..n).all(|j| (0..n).all(|i| self.data[(i, j)].im == 0.0))
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dimension();
        assert_eq!(x.len(), n);
        let mut y = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let xj = x[j];
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.data.col(j);
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += col[i] * xj;
            }
        }
        y
    }

    /// Sparse copy for repeated products with mostly-banded matrices.
    pub fn to_sparse(&self) -> sparse::SparseRows {
        sparse::SparseRows::from_dense(&self.data)
    }
}

pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// `max_ij |H_ij - conj(H_ji)|`
pub fn hermiticity_defect(m: &Mat<C64>) -> f64 {
    assert_eq!(
        m.nrows(),
        m.ncols(),
        "hermiticity_defect needs a square matrix"
    );
    let n = m.nrows();
    let mut defect = 0.0f64;
    for j in 0..n {
        for i in j..n {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    defect
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_symmetric_has_zero_defect() {
        let m = Mat::<C64>::from_fn(4, 4, |i, j| {
            C64::new((i + j) as f64 * 0.3 - (i * j) as f64, 0.0)
        });
        assert_eq!(hermiticity_defect(&m), 0.0);
    }

    #[test]
    fn complex_hermitian_and_not() {
        let mut m = Mat::<C64>::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 2.0);
        m[(1, 0)] = C64::new(1.0, -2.0);
        assert_eq!(hermiticity_defect(&m), 0.0);
        m[(1, 0)] = C64::new(1.0, 2.0);
        assert!((hermiticity_defect(&m) - 4.0).abs() < 1e-15);
    }
}
