//! Eigenpairs by dense diagonalization, by commutator stationarity and by
//! variance minimization.

mod refine;
mod stationarity;
mod variance;

pub use refine::rayleigh_refine;
pub use stationarity::{
    newton_refine, pair_form_residual, stationarity_residual, NewtonOutcome, OperatorBasis, Probe,
};
pub use variance::{variance, variance_minimize, VarianceOutcome};

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::OperatorMatrix;

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// ascending
    pub values: Vec<f64>,
    /// orthonormal columns matching `values`
    pub vectors: Mat<C64>,
    /// `||H v - lambda v||`
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.col(i).iter().copied().collect()
    }

    /// `max |V^dagger V - I|`
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let mut worst = 0.0f64;
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }
}

fn real_part(h: &OperatorMatrix) -> Mat<f64> {
    Mat::<f64>::from_fn(h.dimension(), h.dimension(), |i, j| h.data[(i, j)].re)
}

/// The `k` lowest eigenpairs. Real matrices go through the real solver.
pub fn solve_eigensystem(h: &OperatorMatrix, k: usize) -> Result<EigenResult> {
    h.check_hermitian()?;
    let n = h.dimension();
    let k = k.min(n);
    let err = |e: faer::linalg::evd::EvdError| Error::Eigensolver(format!("{e:?}"));
    let (values, vectors) = if h.is_real() {
        let evd = real_part(h).self_adjoint_eigen(Side::Lower).map_err(err)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        (
            (0..k).map(|i| s[i]).collect::<Vec<_>>(),
            Mat::<C64>::from_fn(n, k, |i, j| C64::new(u[(i, j)], 0.0)),
        )
    } else {
        let evd = h.data.self_adjoint_eigen(Side::Lower).map_err(err)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        (
            (0..k).map(|i| s[i].re).collect::<Vec<_>>(),
            Mat::<C64>::from_fn(n, k, |i, j| u[(i, j)]),
        )
    };
    let sparse = h.to_sparse();
    let residuals = (0..k)
        .map(|j| {
            let v: Vec<C64> = vectors.col(j).iter().copied().collect();
            let hv = sparse.matvec(&v);
            hv.iter()
                .zip(&v)
                .map(|(a, b)| (a - b * values[j]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(EigenResult {
        values,
        vectors,
        residuals,
    })
}

/// All eigenvalues, ascending, without vectors.
pub fn eigenvalues(h: &OperatorMatrix) -> Result<Vec<f64>> {
    h.check_hermitian()?;
    let err = |e: faer::linalg::evd::EvdError| Error::Eigensolver(format!("{e:?}"));
    let mut v = if h.is_real() {
        real_part(h)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(err)?
    } else {
        h.data.self_adjoint_eigenvalues(Side::Lower).map_err(err)?
    };
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `|<a|b>|` for normalized vectors.
pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm()
}

/// Norm of the projection of `v` onto the span of eigenvectors whose
/// eigenvalue lies within `window` of `energy`. Handles degenerate levels.
pub fn subspace_overlap(eig: &EigenResult, energy: f64, window: f64, v: &[C64]) -> f64 {
    (0..eig.values.len())
        .filter(|&i| (eig.values[i] - energy).abs() <= window)
        .map(|i| {
            let col = eig.vectors.col(i);
            col.iter()
                .zip(v)
                .map(|(x, y)| x.conj() * y)
                .sum::<C64>()
                .norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn normalize(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
    n
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
