//! Wave functions on folded or unfolded grids, Crank-Nicolson propagation,
//! and the density, current and junction-flux diagnostics.

mod current;
mod propagate;

pub use current::{
    continuity_residual, current, current_quadratic, current_quartic, junction_flux_residual,
    CurrentLaw,
};
pub use propagate::{
    propagate, propagate_with, spectral_radius, EvolutionReport, PropagationOptions,
};

use num_complex::Complex64 as C64;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Branch;
use crate::grid::{Boundary, Grid};
use crate::operators::{Discretization, FoldedLayout, OperatorMatrix};

/// How the amplitudes of a [`MultiWave`] are laid out.
#[derive(Clone, Debug)]
pub enum Representation {
    /// One block over the unfolded line, in node order.
    Unfolded(Grid),
    /// Three branch blocks in the order of the folded layout.
    Folded(FoldedLayout),
}

impl Representation {
    pub fn of(h: &OperatorMatrix) -> Result<Representation> {
        match &h.discretization {
            Discretization::Line(g) => Ok(Representation::Unfolded(g.clone())),
            Discretization::Folded(f) => Ok(Representation::Folded(f.clone())),
            Discretization::Graph(_) => Err(Error::InvalidGrid(
                "graph states are not branch waves".into(),
            )),
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Representation::Unfolded(g) => g,
            Representation::Folded(f) => f.grid(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Representation::Unfolded(g) => g.len(),
            Representation::Folded(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.grid().spacing()
    }

    pub fn is_folded(&self) -> bool {
        matches!(self, Representation::Folded(_))
    }

    /// Coordinate of a degree of freedom in its own frame, and its branch.
    pub fn coordinate(&self, dof: usize) -> (f64, Branch) {
        match self {
            Representation::Unfolded(g) => (g.node(dof), g.folded(dof).1),
            Representation::Folded(f) => f.coordinate(dof),
        }
    }

    /// Unfolded-line coordinate of a degree of freedom.
    pub fn unfolded_coordinate(&self, dof: usize) -> f64 {
        match self {
            Representation::Unfolded(g) => g.node(dof),
            Representation::Folded(f) => f.grid().node(f.unfolded_index(dof)),
        }
    }

    /// Orientation of the frame in which derivatives at `dof` are taken.
    pub(crate) fn frame_sign(&self, branch: Branch) -> f64 {
        if self.is_folded() {
            branch.orientation()
        } else {
            1.0
        }
    }

    /// Degree of freedom `k` steps along the frame of `branch` from block
    /// position `pos`; reflection through fold points in folded form.
    pub(crate) fn walk(&self, branch: Branch, pos: usize, k: isize) -> Option<usize> {
        match self {
            Representation::Unfolded(g) => {
                let n = g.len() as isize;
                let i = pos as isize + k;
                if g.boundary == Boundary::Periodic {
                    Some(i.rem_euclid(n) as usize)
                } else {
                    (0..n).contains(&i).then_some(i as usize)
                }
            }
            Representation::Folded(f) => f.neighbor(branch, pos, k),
        }
    }

    /// Degrees of freedom of one branch in increasing frame coordinate.
    pub fn block(&self, branch: Branch) -> Vec<usize> {
        match self {
            Representation::Unfolded(g) => {
                (0..g.len()).filter(|&j| g.folded(j).1 == branch).collect()
            }
            Representation::Folded(f) => f.branch_nodes(branch).to_vec(),
        }
    }

    pub(crate) fn block_len(&self, branch: Branch) -> usize {
        match self {
            Representation::Unfolded(g) => g.len(),
            Representation::Folded(f) => f.branch_nodes(branch).len(),
        }
    }

    /// Frame position and branch of each degree of freedom.
    pub(crate) fn frames(&self) -> Vec<(Branch, usize)> {
        match self {
            Representation::Unfolded(g) => (0..g.len()).map(|j| (Branch::One, j)).collect(),
            Representation::Folded(f) => {
                let mut out = vec![(Branch::One, 0); f.len()];
                for b in Branch::ALL {
                    for (pos, &dof) in f.branch_nodes(b).iter().enumerate() {
                        if f.coordinate(dof).1 == b {
                            out[dof] = (b, pos);
                        }
                    }
                }
                out
            }
        }
    }
}

/// Normalized Gaussian `exp(-(u - c)^2 / (4 w^2) + i k u)` in the unfolded
/// coordinate, so `|psi|^2` has standard deviation `w`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianPacket {
    pub center: f64,
    pub width: f64,
    pub boost: f64,
}

/// Values just past the fold-point ends of each folded branch block,
/// `[branch][lower, upper][step - 1]`.
pub type GhostLayers = [[[C64; GHOST_DEPTH]; 2]; 3];

pub const GHOST_DEPTH: usize = 2;

#[derive(Clone, Debug)]
pub struct MultiWave {
    pub representation: Representation,
    pub values: Vec<C64>,
    /// Explicit continuation of each branch past the fold points. `None`
    /// means the grid reflection supplies it, which is the state the
    /// Hamiltonian acts on.
    pub ghosts: Option<GhostLayers>,
    pub time: f64,
}

impl MultiWave {
    pub fn new(representation: Representation, values: Vec<C64>, time: f64) -> Result<MultiWave> {
        if values.len() != representation.len() {
            return Err(Error::DimensionMismatch {
                expected: representation.len(),
                found: values.len(),
            });
        }
        Ok(MultiWave {
            representation,
            values,
            ghosts: None,
            time,
        })
    }

    /// Samples `f(coordinate, branch)` in each node's own frame. In folded
    /// form each branch function is also sampled just past its fold-point
    /// ends, so data that violate the junction conditions stay visible to
    /// the flux diagnostics.
    pub fn from_fn(representation: Representation, f: impl Fn(f64, Branch) -> C64) -> MultiWave {
        let values: Vec<C64> = (0..representation.len())
            .map(|dof| {
                let (q, b) = representation.coordinate(dof);
                f(q, b)
            })
            .collect();
        let ghosts = match &representation {
            Representation::Folded(lay) if lay.grid().domain.is_branched() => {
                let h = lay.grid().spacing();
                let mut g: GhostLayers = [[[C64::new(0.0, 0.0); GHOST_DEPTH]; 2]; 3];
                for b in Branch::ALL {
                    let nodes = lay.branch_nodes(b);
                    let lo = lay.coordinate(nodes[0]).0;
                    let hi = lay.coordinate(nodes[nodes.len() - 1]).0;
                    for k in 0..GHOST_DEPTH {
                        let step = (k + 1) as f64 * h;
                        g[b.index() - 1][0][k] = f(lo - step, b);
                        g[b.index() - 1][1][k] = f(hi + step, b);
                    }
                }
                Some(g)
            }
            _ => None,
        };
        MultiWave {
            representation,
            values,
            ghosts,
            time: 0.0,
        }
    }

    pub fn gaussian(representation: Representation, packet: GaussianPacket) -> Result<MultiWave> {
        if !(packet.width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "packet width must be positive, got {}",
                packet.width
            )));
        }
        let values = (0..representation.len())
            .map(|dof| {
                let u = representation.unfolded_coordinate(dof);
                let z = (u - packet.center) / packet.width;
                C64::from_polar((-0.25 * z * z).exp(), packet.boost * u)
            })
            .collect();
        let mut w = MultiWave {
            representation,
            values,
            ghosts: None,
            time: 0.0,
        };
        w.normalize()?;
        Ok(w)
    }

    /// `h sum |psi|^2`
    pub fn norm(&self) -> f64 {
        self.representation.spacing() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|z| *z *= s);
        if let Some(g) = self.ghosts.as_mut() {
            g.iter_mut().flatten().flatten().for_each(|z| *z *= s);
        }
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<psi|H|psi> / <psi|psi>`
    pub fn energy(&self, h: &OperatorMatrix) -> f64 {
        let hv = h.apply(&self.values);
        let num: C64 = self.values.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        num.re / self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// `h sum u |psi|^2` over the unfolded coordinate.
    pub fn mean_coordinate(&self) -> f64 {
        let h = self.representation.spacing();
        (0..self.values.len())
            .map(|dof| self.representation.unfolded_coordinate(dof) * self.values[dof].norm_sqr())
            .sum::<f64>()
            * h
            / self.norm()
    }

    /// Same amplitudes in unfolded node order.
    pub fn to_unfolded(&self) -> MultiWave {
        match &self.representation {
            Representation::Unfolded(_) => self.clone(),
            Representation::Folded(f) => MultiWave {
                representation: Representation::Unfolded(f.grid().clone()),
                values: f.to_unfolded(&self.values),
                ghosts: None,
                time: self.time,
            },
        }
    }

    /// CSV rows `time,coordinate,branch,re,im,rho,j` with 17 significant digits.
    pub fn write_csv(
        &self,
        out: &mut dyn Write,
        law: &CurrentLaw,
        header: bool,
    ) -> std::io::Result<()> {
        let j = current(self, law);
        if header {
            writeln!(out, "time,coordinate,branch,re,im,rho,j")?;
        }
        for (dof, z) in self.values.iter().enumerate() {
            let (q, b) = self.representation.coordinate(dof);
            writeln!(
                out,
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.time,
                q,
                b.index(),
                z.re,
                z.im,
                z.norm_sqr(),
                j[dof]
            )?;
        }
        Ok(())
    }
}
