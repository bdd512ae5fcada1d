//! Kernel realization of decaying potentials on the unfolded momentum line.
//!
//! `(V psi)(xi) = int dxi'/(2 pi) K(xi - xi') psi(xi')` with
//! `K(q) = int exp(-i q x) V(x) dx`. The naive construction windows each
//! branch and uses `K_2 = conj(K_1)` on the medial one; for asymmetric `V`
//! that operator is not Hermitian. Using `K_1` everywhere is the
//! Hermitian choice.

use faer::Mat;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::unfolded::kinetic_diagonal;
use super::{Discretization, OperatorMatrix, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{Branch, DispersionLaw};
use crate::grid::{Boundary, CoordinateKind, Grid};
use crate::potential::PotentialSpec;

const IMAGE_LIMIT: i64 = 64;
const IMAGE_CUTOFF: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// `K_2 = conj(K_1)`, `K_3 = K_1` behind branch windows.
    Naive,
    /// `K_2 = K_1`: one convolution on the whole line.
    Hermitian,
}

/// Kernel samples `K(d h)` for integer offsets `d` in `-(n-1)..=(n-1)`.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    pub mode: KernelMode,
    pub spacing: f64,
    samples: Vec<C64>,
}

impl KernelSpec {
    pub fn sample(v: &PotentialSpec, grid: &Grid, mode: KernelMode) -> Result<KernelSpec> {
        let n = grid.len() as i64;
        let h = grid.spacing();
        let periodic = grid.boundary == Boundary::Periodic;
        let samples = (-(n - 1)..n)
            .map(|d| {
                if !periodic {
                    return v.fourier(d as f64 * h);
                }
                // images of the ring, summed until they stop contributing
                let mut acc = v.fourier(d as f64 * h)?;
                for r in 1..=IMAGE_LIMIT {
                    let a = v.fourier((d + r * n) as f64 * h)?;
                    let b = v.fourier((d - r * n) as f64 * h)?;
                    acc += a + b;
                    if a.norm() + b.norm() < IMAGE_CUTOFF {
                        break;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<C64>>>()?;
        Ok(KernelSpec {
            mode,
            spacing: h,
            samples,
        })
    }

    /// `K(d h)`
    pub fn at(&self, d: i64) -> C64 {
        let mid = (self.samples.len() / 2) as i64;
        self.samples[(mid + d) as usize]
    }
}

pub fn build_convolution_potential(
    v: &PotentialSpec,
    grid: &Grid,
    mode: KernelMode,
) -> Result<OperatorMatrix> {
    let kernel = KernelSpec::sample(v, grid, mode)?;
    let n = grid.len();
    let measure = grid.spacing() / (2.0 * PI);
    let branch_of: Vec<Branch> = (0..n).map(|j| grid.folded(j).1).collect();
    let periodic = grid.boundary == Boundary::Periodic;
    let m = Mat::<C64>::from_fn(n, n, |j, k| {
        let mut d = j as i64 - k as i64;
        if periodic {
            d = d.rem_euclid(n as i64);
            if d > (n as i64 - 1) / 2 {
                d -= n as i64;
            }
        }
        let kv = kernel.at(d) * measure;
        match (mode, branch_of[k]) {
            (KernelMode::Naive, Branch::Two) => kv.conj(),
            _ => kv,
        }
    });
    Ok(OperatorMatrix::new(
        m,
        Provenance::Convolution(mode),
        Discretization::Line(grid.clone()),
    ))
}

/// Kinetic energy on the diagonal plus the kernel potential.
pub fn build_convolution_hamiltonian(
    law: &DispersionLaw,
    grid: &Grid,
    v: &PotentialSpec,
    mode: KernelMode,
) -> Result<OperatorMatrix> {
    let mut op = build_convolution_potential(v, grid, mode)?;
    for (j, e) in kinetic_diagonal(law, grid)?.into_iter().enumerate() {
        op.data[(j, j)] += e;
    }
    Ok(op)
}

/// The same ring Hamiltonian written on the conjugate position grid
/// `x_n = n dx`, `dx = 2 pi / (N h)`: the periodized potential on the diagonal
/// and the kinetic energy as a circulant built by an inverse DFT.
pub fn build_fourier_conjugate_hamiltonian(
    law: &DispersionLaw,
    grid: &Grid,
    v: &PotentialSpec,
) -> Result<OperatorMatrix> {
    if grid.boundary != Boundary::Periodic {
        return Err(Error::InvalidGrid(
            "the Fourier conjugate needs a periodic grid".into(),
        ));
    }
    let n = grid.len();
    let dx = 2.0 * PI / (n as f64 * grid.spacing());
    let period = n as f64 * dx;

    let mut spectrum: Vec<C64> = kinetic_diagonal(law, grid)?
        .into_iter()
        .map(|e| C64::new(e, 0.0))
        .collect();
    FftPlanner::<f64>::new()
        .plan_fft_inverse(n)
        .process(&mut spectrum);
    let g: Vec<C64> = spectrum.into_iter().map(|z| z / n as f64).collect();

    let periodized = |x: f64| {
        let mut acc = v.eval(x);
        for r in 1..=IMAGE_LIMIT {
            let t = v.eval(x + r as f64 * period) + v.eval(x - r as f64 * period);
            acc += t;
            if t.abs() < IMAGE_CUTOFF {
                break;
            }
        }
        acc
    };
    let half = (n / 2) as i64;
    let mut m = Mat::<C64>::from_fn(n, n, |a, b| {
        g[(a as i64 - b as i64).rem_euclid(n as i64) as usize]
    });
    for a in 0..n {
        m[(a, a)] += periodized((a as i64 - half) as f64 * dx);
    }
    let line = grid.with_kind(CoordinateKind::FoldedX);
    Ok(OperatorMatrix::new(
        m,
        Provenance::FourierConjugate,
        Discretization::Line(line),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi_grid() -> Grid {
        Grid::with_count(
            CoordinateKind::UnfoldedXi,
            DispersionLaw::cubic(3.0).domain(),
            121,
            6.0,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_kernel_values() {
        let g = xi_grid();
        let k = KernelSpec::sample(
            &PotentialSpec::gaussian(1.0, 0.0, 1.0),
            &g,
            KernelMode::Hermitian,
        )
        .unwrap();
        for d in [-5i64, 0, 3, 17] {
            let q = d as f64 * g.spacing();
            assert!((k.at(d).re - (2.0 * PI).sqrt() * (-0.5 * q * q).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_potential_modes_coincide() {
        let g = xi_grid();
        let v = PotentialSpec::gaussian(0.8, 0.0, 0.7);
        let a = build_convolution_potential(&v, &g, KernelMode::Naive).unwrap();
        let b = build_convolution_potential(&v, &g, KernelMode::Hermitian).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert_eq!(a.data[(i, j)], b.data[(i, j)]);
            }
        }
    }

    #[test]
    fn asymmetric_naive_is_not_hermitian() {
        let g = xi_grid();
        let v = PotentialSpec::gaussian(1.0, 1.0, 1.0);
        let naive = build_convolution_potential(&v, &g, KernelMode::Naive).unwrap();
        let herm = build_convolution_potential(&v, &g, KernelMode::Hermitian).unwrap();
        assert!(naive.hermiticity_defect() > 1e-3);
        assert!(herm.hermiticity_defect() <= 1e-12 * herm.max_abs());
    }

    #[test]
    fn polynomial_is_rejected() {
        let err = build_convolution_potential(
            &PotentialSpec::harmonic(1.0),
            &xi_grid(),
            KernelMode::Hermitian,
        );
        assert!(matches!(err, Err(Error::UnsupportedPotential(_))));
    }
}
