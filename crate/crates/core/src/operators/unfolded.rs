//! Assembly on the unfolded line, where branch matching is plain smoothness.

use faer::Mat;
use num_complex::Complex64 as C64;

use super::symbol::{first_difference, second_difference, DifferentialSymbol, StencilOrder};
use super::{build_convolution_potential, Discretization, KernelMode, OperatorMatrix, Provenance};
use crate::error::{Error, Result};
use crate::geometry::DispersionLaw;
use crate::grid::{Boundary, Grid};
use crate::potential::PotentialSpec;

const THIRD: [(isize, f64); 4] = [(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)];
const FOURTH: [(isize, f64); 5] = [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];

/// Rejects a grid whose fold points differ from the cusps of `law`.
pub(crate) fn check_domain(law: &DispersionLaw, grid: &Grid) -> Result<()> {
    let d = law.domain();
    let g = grid.domain;
    let same = d.is_branched() == g.is_branched()
        && (!d.is_branched()
            || ((d.q_minus - g.q_minus).abs() < 1e-12 && (d.q_plus - g.q_plus).abs() < 1e-12));
    if same {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "grid fold points {:?} do not match the cusps {:?} of the dispersion",
            (g.q_minus, g.q_plus),
            (d.q_minus, d.q_plus)
        )))
    }
}

/// Kinetic energy at every node, evaluated on the branch the node folds onto.
pub(crate) fn kinetic_diagonal(law: &DispersionLaw, grid: &Grid) -> Result<Vec<f64>> {
    check_domain(law, grid)?;
    (0..grid.len())
        .map(|j| {
            let (q, b) = grid.folded(j);
            law.branch_energy(q, b)
        })
        .collect()
}

fn add_stencil(m: &mut Mat<C64>, grid: &Grid, stencil: &[(isize, f64)], coef: C64) {
    if coef == C64::new(0.0, 0.0) {
        return;
    }
    let n = grid.len() as isize;
    for j in 0..n {
        for &(k, w) in stencil {
            let c = match grid.boundary {
                Boundary::Periodic => (j + k).rem_euclid(n),
                Boundary::Dirichlet if (0..n).contains(&(j + k)) => j + k,
                Boundary::Dirichlet => continue,
            };
            m[(j as usize, c as usize)] += coef * w;
        }
    }
}

/// Adds `sum a_n d^n` as Toeplitz stencils. On a Dirichlet grid the fourth
/// difference uses the hinged closure, diagonal 5 on the end rows.
pub(crate) fn add_symbol(
    m: &mut Mat<C64>,
    grid: &Grid,
    symbol: &DifferentialSymbol,
    order: StencilOrder,
) -> Result<()> {
    symbol.check_order(order)?;
    let h = grid.spacing();
    let a = symbol.coefficients;
    let scaled = |n: usize| a[n] / h.powi(n as i32);
    let n = grid.len();
    for j in 0..n {
        m[(j, j)] += a[0];
    }
    add_stencil(m, grid, first_difference(order), scaled(1));
    add_stencil(m, grid, second_difference(order), scaled(2));
    add_stencil(m, grid, &THIRD, scaled(3));
    add_stencil(m, grid, &FOURTH, scaled(4));
    if grid.boundary == Boundary::Dirichlet {
        m[(0, 0)] -= scaled(4);
        m[(n - 1, n - 1)] -= scaled(4);
    }
    Ok(())
}

pub fn build_unfolded_hamiltonian(
    law: &DispersionLaw,
    grid: &Grid,
    v: &PotentialSpec,
) -> Result<OperatorMatrix> {
    build_unfolded_hamiltonian_with(law, grid, v, StencilOrder::Second)
}

/// `E(p(fold(u)))` on the diagonal plus `V(i d/du)`. Non-polynomial potentials
/// go through the Hermitian kernel realization instead.
pub fn build_unfolded_hamiltonian_with(
    law: &DispersionLaw,
    grid: &Grid,
    v: &PotentialSpec,
    order: StencilOrder,
) -> Result<OperatorMatrix> {
    let n = grid.len();
    let diag = kinetic_diagonal(law, grid)?;
    let mut m = if v.is_polynomial() {
        let mut m = Mat::<C64>::zeros(n, n);
        add_symbol(
            &mut m,
            grid,
            &DifferentialSymbol::from_position_potential(v)?,
            order,
        )?;
        m
    } else {
        build_convolution_potential(v, grid, KernelMode::Hermitian)?.data
    };
    for (j, e) in diag.into_iter().enumerate() {
        m[(j, j)] += e;
    }
    Ok(OperatorMatrix::new(
        m,
        Provenance::Unfolded,
        Discretization::Line(grid.clone()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BranchedDomain;
    use crate::grid::CoordinateKind;

    #[test]
    fn free_branched_is_diagonal_with_cusp_minimum() {
        let law = DispersionLaw::cubic(3.0);
        let g = Grid::with_count(CoordinateKind::UnfoldedXi, law.domain(), 401, 6.0).unwrap();
        let h = build_unfolded_hamiltonian(&law, &g, &PotentialSpec::zero()).unwrap();
        let mut min = f64::INFINITY;
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i != j {
                    assert_eq!(h.data[(i, j)], C64::new(0.0, 0.0));
                }
            }
            min = min.min(h.data[(i, i)].re);
        }
        // the inner branch minimum at xdot = 1 sits at p = -2, a grid node
        assert!((min + 0.75).abs() < 1e-12);
    }

    #[test]
    fn mismatched_domain_rejected() {
        let law = DispersionLaw::cubic(3.0);
        let g = Grid::with_count(
            CoordinateKind::UnfoldedXi,
            BranchedDomain::new(-1.0, 1.0),
            101,
            6.0,
        )
        .unwrap();
        assert!(build_unfolded_hamiltonian(&law, &g, &PotentialSpec::zero()).is_err());
    }

    #[test]
    fn hinged_fourth_difference_is_laplacian_squared() {
        let g = Grid::interval(CoordinateKind::FoldedX, 0.0, 1.0, 7).unwrap();
        let mut a = Mat::<C64>::zeros(7, 7);
        let mut sym = DifferentialSymbol::from_momentum_polynomial([0.0; 5]);
        sym.coefficients[4] = C64::new(1.0, 0.0);
        add_symbol(&mut a, &g, &sym, StencilOrder::Second).unwrap();
        let mut l = Mat::<C64>::zeros(7, 7);
        sym.coefficients = [C64::new(0.0, 0.0); 5];
        sym.coefficients[2] = C64::new(1.0, 0.0);
        add_symbol(&mut l, &g, &sym, StencilOrder::Second).unwrap();
        let l2 = &l * &l;
        for i in 0..7 {
            for j in 0..7 {
                assert!((a[(i, j)] - l2[(i, j)]).norm() < 1e-6 * l2[(3, 3)].norm());
            }
        }
    }
}
