//! Assembly on the three folded branches.
//!
//! Each branch keeps its own increasing coordinate. A stencil that runs past a
//! fold point continues on the partner branch through the reflection
//! `psi_a(J + k h) = psi_b(J - k h)`, which eliminates the ghost values and
//! encodes `d^n psi_a = (-1)^n d^n psi_b` at the junction for every order the
//! stencil touches.
//!
//! Every derivative is taken in the frame of the row's own branch. Odd-order
//! terms change sign under the reflection, so their coefficients carry the
//! branch orientation; dropping that sign makes the matrix non-Hermitian.

use num_complex::Complex64 as C64;

use super::sparse::SparseRows;
use super::symbol::{first_difference, second_difference, DifferentialSymbol, StencilOrder};
use super::unfolded::check_domain;
use super::{Discretization, OperatorMatrix, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{Branch, DispersionLaw, Junction};
use crate::grid::{Boundary, Grid};
use crate::potential::PotentialSpec;

/// Degrees of freedom of a folded grid.
///
/// Order: branch 1 ascending (ends with the `q_plus` node), branch-2 interior
/// ascending, branch 3 ascending (starts with the `q_minus` node).
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedLayout {
    grid: Grid,
    coordinates: Vec<(f64, Branch)>,
    position: Vec<usize>,
    branch_nodes: [Vec<usize>; 3],
    unfolded_index: Vec<usize>,
}

impl FoldedLayout {
    pub fn new(grid: &Grid) -> Result<FoldedLayout> {
        if grid.boundary != Boundary::Dirichlet {
            return Err(Error::InvalidGrid(
                "folded assembly needs Dirichlet truncation".into(),
            ));
        }
        let h = grid.spacing();
        let mut per_branch: [Vec<(f64, usize)>; 3] = Default::default();
        for j in 0..grid.len() {
            let (q, b) = grid.folded(j);
            per_branch[b.index() - 1].push((q, j));
        }
        for list in per_branch.iter_mut() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in list.windows(2) {
                let step = (w[1].0 - w[0].0) / h;
                if (step - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidGrid(format!(
                        "non-uniform folded spacing {step} h"
                    )));
                }
            }
        }
        let mut coordinates = Vec::with_capacity(grid.len());
        let mut unfolded_index = Vec::with_capacity(grid.len());
        let mut own: [Vec<usize>; 3] = Default::default();
        for (bi, list) in per_branch.iter().enumerate() {
            let b = Branch::from_index(bi + 1).unwrap();
            for &(q, j) in list {
                own[bi].push(coordinates.len());
                coordinates.push((q, b));
                unfolded_index.push(j);
            }
        }
        let mut position = vec![0; coordinates.len()];
        let mut branch_nodes = own.clone();
        if grid.domain.is_branched() {
            let (&top, &bottom) = match (own[0].last(), own[2].first()) {
                (Some(t), Some(b)) => (t, b),
                _ => {
                    return Err(Error::InvalidGrid(
                        "folded grid misses an outer branch".into(),
                    ))
                }
            };
            let d = grid.domain;
            for (dof, target) in [(top, d.q_plus), (bottom, d.q_minus)] {
                let off = (coordinates[dof].0 - target) / h;
                if off.abs() > 1e-9 {
                    return Err(Error::JunctionOffGrid {
                        coordinate: target,
                        offset: off,
                    });
                }
            }
            let mut medial = vec![bottom];
            medial.extend_from_slice(&own[1]);
            medial.push(top);
            branch_nodes[1] = medial;
        }
        for (bi, nodes) in branch_nodes.iter().enumerate() {
            for (i, &dof) in nodes.iter().enumerate() {
                if coordinates[dof].1.index() == bi + 1 {
                    position[dof] = i;
                }
            }
        }
        Ok(FoldedLayout {
            grid: grid.clone(),
            coordinates,
            position,
            branch_nodes,
            unfolded_index,
        })
    }

    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Folded coordinate and owning branch of a degree of freedom.
    pub fn coordinate(&self, dof: usize) -> (f64, Branch) {
        self.coordinates[dof]
    }

    /// Degrees of freedom along `branch` in increasing folded coordinate,
    /// shared junction nodes included.
    pub fn branch_nodes(&self, branch: Branch) -> &[usize] {
        &self.branch_nodes[branch.index() - 1]
    }

    pub fn junction_dof(&self, junction: Junction) -> Option<usize> {
        if !self.grid.domain.is_branched() {
            return None;
        }
        Some(match junction {
            Junction::Plus => *self.branch_nodes[0].last()?,
            Junction::Minus => *self.branch_nodes[2].first()?,
        })
    }

    pub fn unfolded_index(&self, dof: usize) -> usize {
        self.unfolded_index[dof]
    }

    pub fn to_unfolded(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (dof, &v) in psi.iter().enumerate() {
            out[self.unfolded_index[dof]] = v;
        }
        out
    }

    pub fn from_unfolded(&self, psi: &[C64]) -> Vec<C64> {
        (0..self.len())
            .map(|dof| psi[self.unfolded_index[dof]])
            .collect()
    }

    /// Degree of freedom `k` steps from position `pos` on `branch`, continuing
    /// through fold points by reflection; `None` past the truncation.
    pub fn neighbor(&self, branch: Branch, pos: usize, k: isize) -> Option<usize> {
        let count = |b: Branch| self.branch_nodes[b.index() - 1].len() as isize;
        let mut b = branch;
        let mut i = pos as isize + k;
        loop {
            let n = count(b);
            if (0..n).contains(&i) {
                return Some(self.branch_nodes[b.index() - 1][i as usize]);
            }
            if !self.grid.domain.is_branched() {
                return None;
            }
            if i >= n {
                let excess = i - (n - 1);
                match b {
                    Branch::One => (b, i) = (Branch::Two, count(Branch::Two) - 1 - excess),
                    Branch::Two => (b, i) = (Branch::One, count(Branch::One) - 1 - excess),
                    Branch::Three => return None,
                }
            } else {
                let excess = -i;
                match b {
                    Branch::One => return None,
                    Branch::Two => (b, i) = (Branch::Three, excess),
                    Branch::Three => (b, i) = (Branch::Two, excess),
                }
            }
        }
    }

    /// Neighbor of a degree of freedom in its own branch frame.
    pub fn step(&self, dof: usize, k: isize) -> Option<usize> {
        self.neighbor(self.coordinates[dof].1, self.position[dof], k)
    }

    fn frame_signs(&self) -> Vec<f64> {
        self.coordinates
            .iter()
            .map(|&(_, b)| b.orientation())
            .collect()
    }

    fn difference(&self, stencil: &[(isize, f64)], scale: f64) -> SparseRows {
        let mut m = SparseRows::zeros(self.len(), self.len());
        for r in 0..self.len() {
            for &(k, w) in stencil {
                if let Some(c) = self.step(r, k) {
                    m.add(r, c, C64::new(w * scale, 0.0));
                }
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoldedOptions {
    /// Multiply odd-order coefficients by the branch orientation.
    pub flip_odd: bool,
    pub order: StencilOrder,
}

impl Default for FoldedOptions {
    fn default() -> Self {
        FoldedOptions {
            flip_odd: true,
            order: StencilOrder::Second,
        }
    }
}

fn assemble(
    layout: &FoldedLayout,
    diagonal: &[f64],
    symbol: &DifferentialSymbol,
    options: FoldedOptions,
) -> Result<faer::Mat<C64>> {
    symbol.check_order(options.order)?;
    let n = layout.len();
    let h = layout.grid.spacing();
    let d = layout.difference(first_difference(options.order), 1.0 / h);
    let l = layout.difference(second_difference(options.order), 1.0 / (h * h));
    let signs = layout.frame_signs();
    let odd_signs: Vec<f64> = if options.flip_odd {
        signs.clone()
    } else {
        vec![1.0; n]
    };
    let a = symbol.coefficients;

    let mut total = SparseRows::identity(n).scale_rows(diagonal);
    total.axpy(a[0], &SparseRows::identity(n));
    total.axpy(a[1], &d.scale_rows(&odd_signs));
    total.axpy(a[2], &l);
    if a[3] != C64::new(0.0, 0.0) {
        // 1/2 (D L + S L S D) in the row frame
        let mut third = d.compose(&l);
        let sls = l
            .scale_rows(&signs)
            .compose(&SparseRows::identity(n).scale_rows(&signs));
        third.axpy(C64::new(1.0, 0.0), &sls.compose(&d));
        total.axpy(a[3] * 0.5, &third.scale_rows(&odd_signs));
    }
    if a[4] != C64::new(0.0, 0.0) {
        total.axpy(a[4], &l.compose(&l));
    }
    Ok(total.to_dense())
}

pub fn build_folded_hamiltonian(
    law: &DispersionLaw,
    grid: &Grid,
    v: &PotentialSpec,
) -> Result<OperatorMatrix> {
    build_folded_hamiltonian_with(law, grid, v, FoldedOptions::default())
}

/// Branch energies on the diagonal plus `V(i d/dp)` with junction reflection.
pub fn build_folded_hamiltonian_with(
    law: &DispersionLaw,
    grid: &Grid,
    v: &PotentialSpec,
    options: FoldedOptions,
) -> Result<OperatorMatrix> {
    check_domain(law, grid)?;
    let symbol = DifferentialSymbol::from_position_potential(v)?;
    let layout = FoldedLayout::new(grid)?;
    let diagonal = (0..layout.len())
        .map(|dof| {
            let (q, b) = layout.coordinate(dof);
            law.branch_energy(q, b)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = assemble(&layout, &diagonal, &symbol, options)?;
    Ok(OperatorMatrix::new(
        m,
        Provenance::Folded,
        Discretization::Folded(layout),
    ))
}

/// Position-space wire: kinetic symbol `c4 p^4 + c3 p^3 + c2 p^2 + c1 p` with
/// `p = -i d/dx` on three branches carrying potentials `w(x, branch)`.
///
/// Junction nodes take the value of their owning outer branch.
pub fn build_dual_wire_hamiltonian(
    kinetic: &DispersionLaw,
    w: &dyn Fn(f64, Branch) -> f64,
    grid: &Grid,
) -> Result<OperatorMatrix> {
    let DispersionLaw::Quartic { c4, c3, c2, c1 } = *kinetic else {
        return Err(Error::UnsupportedPotential(
            "the wire kinetic term must be a momentum polynomial".into(),
        ));
    };
    let symbol = DifferentialSymbol::from_momentum_polynomial([0.0, c1, c2, c3, c4]);
    let layout = FoldedLayout::new(grid)?;
    let diagonal: Vec<f64> = (0..layout.len())
        .map(|dof| {
            let (q, b) = layout.coordinate(dof);
            w(q, b)
        })
        .collect();
    let m = assemble(&layout, &diagonal, &symbol, FoldedOptions::default())?;
    Ok(OperatorMatrix::new(
        m,
        Provenance::DualWire,
        Discretization::Folded(layout),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CoordinateKind;
    use crate::operators::build_unfolded_hamiltonian;

    fn grid(n: usize) -> Grid {
        Grid::with_count(
            CoordinateKind::FoldedP,
            DispersionLaw::cubic(3.0).domain(),
            n,
            8.0,
        )
        .unwrap()
    }

    #[test]
    fn layout_orders_branches() {
        let g = grid(41);
        let lay = FoldedLayout::new(&g).unwrap();
        let top = lay.junction_dof(Junction::Plus).unwrap();
        let bottom = lay.junction_dof(Junction::Minus).unwrap();
        assert_eq!(lay.coordinate(top), (2.0, Branch::One));
        assert_eq!(lay.coordinate(bottom).1, Branch::Three);
        let medial = lay.branch_nodes(Branch::Two);
        assert_eq!(medial.first(), Some(&bottom));
        assert_eq!(medial.last(), Some(&top));
        let (a, b) = g.junction_indices().unwrap();
        assert_eq!(lay.unfolded_index(top), a);
        assert_eq!(lay.unfolded_index(bottom), b);
    }

    #[test]
    fn reflection_walk_matches_unfolded_adjacency() {
        let g = grid(61);
        let lay = FoldedLayout::new(&g).unwrap();
        for dof in 0..lay.len() {
            let j = lay.unfolded_index(dof) as isize;
            let sigma = lay.coordinate(dof).1.orientation() as isize;
            for k in -3..=3isize {
                let expect = j + sigma * k;
                let got = lay.step(dof, k).map(|c| lay.unfolded_index(c) as isize);
                if (0..g.len() as isize).contains(&expect) {
                    assert_eq!(got, Some(expect), "dof {dof} k {k}");
                } else {
                    assert_eq!(got, None);
                }
            }
        }
    }

    #[test]
    fn equals_unfolded_after_permutation() {
        let law = DispersionLaw::cubic(3.0);
        let g = grid(101);
        let v = PotentialSpec::quartic(0.4, -0.3, 0.2);
        let f = build_folded_hamiltonian(&law, &g, &v).unwrap();
        let u = build_unfolded_hamiltonian(&law, &g, &v).unwrap();
        let Discretization::Folded(lay) = &f.discretization else {
            panic!()
        };
        let scale = u.max_abs();
        for r in 0..lay.len() {
            for c in 0..lay.len() {
                let a = f.data[(r, c)];
                let b = u.data[(lay.unfolded_index(r), lay.unfolded_index(c))];
                assert!((a - b).norm() <= 1e-13 * scale, "({r},{c}) {a} vs {b}");
            }
        }
    }

    #[test]
    fn free_case_is_diagonal() {
        let law = DispersionLaw::cubic(3.0);
        let f = build_folded_hamiltonian(&law, &grid(51), &PotentialSpec::zero()).unwrap();
        for r in 0..f.dimension() {
            for c in 0..f.dimension() {
                if r != c {
                    assert_eq!(f.data[(r, c)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn missing_odd_flip_breaks_hermiticity() {
        let law = DispersionLaw::cubic(3.0);
        let v = PotentialSpec::quartic(0.5, 0.0, 0.7);
        let g = grid(81);
        let good = build_folded_hamiltonian(&law, &g, &v).unwrap();
        let bad = build_folded_hamiltonian_with(
            &law,
            &g,
            &v,
            FoldedOptions {
                flip_odd: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(good.hermiticity_defect() <= 1e-12 * good.max_abs());
        assert!(bad.hermiticity_defect() > 1e-3);
    }
}
