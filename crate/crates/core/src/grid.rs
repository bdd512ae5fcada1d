//! Uniform grids on the unfolded line with the fold points placed on nodes.

use crate::error::{Error, Result};
use crate::geometry::{Branch, BranchedDomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordinateKind {
    FoldedP,
    UnfoldedXi,
    FoldedX,
    UnfoldedChi,
    GraphEdge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// `psi = 0` one spacing beyond the first and last node.
    Dirichlet,
    Periodic,
}

/// Contiguous run of unfolded node indices belonging to one branch, ends
/// inclusive. Adjacent segments share their junction node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub branch: Branch,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub kind: CoordinateKind,
    pub domain: BranchedDomain,
    pub boundary: Boundary,
    h: f64,
    first: f64,
    len: usize,
    /// unfolded indices of the nodes at `q_minus` and `q_plus`
    junctions: Option<(usize, usize)>,
}

fn junction_count(domain: &BranchedDomain, h: f64) -> Result<usize> {
    if !domain.is_branched() {
        return Ok(0);
    }
    let width = domain.q_plus - domain.q_minus;
    let m = width / h;
    let mr = m.round();
    if (m - mr).abs() > 1e-9 * m.max(1.0) || mr < 1.0 {
        return Err(Error::JunctionOffGrid {
            coordinate: domain.q_plus,
            offset: m - mr,
        });
    }
    Ok(mr as usize)
}

impl Grid {
    /// Nodes `q_minus + j h` strictly inside `(c - L, c + L)`, `c` the midpoint of
    /// the fold points, Dirichlet beyond.
    pub fn with_spacing(
        kind: CoordinateKind,
        domain: BranchedDomain,
        h: f64,
        half_width: f64,
    ) -> Result<Grid> {
        if !(h > 0.0) || !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need h > 0 and L > 0, got h = {h}, L = {half_width}"
            )));
        }
        let m = junction_count(&domain, h)?;
        let width = m as f64 * h;
        let outer = ((half_width - 0.5 * width) / h - 1e-9).ceil() as i64 - 1;
        if outer < 1 {
            return Err(Error::InvalidGrid(format!(
                "half-width {half_width} leaves no nodes outside the fold points"
            )));
        }
        let outer = outer as usize;
        let len = m + 1 + 2 * outer;
        let first = domain.q_minus - outer as f64 * h;
        let junctions = domain.is_branched().then_some((outer, outer + m));
        Ok(Grid {
            kind,
            domain,
            boundary: Boundary::Dirichlet,
            h,
            first,
            len,
            junctions,
        })
    }

    /// Exactly `n` interior nodes spanning roughly `(c - L, c + L)`; the spacing is
    /// adjusted so the fold points are nodes.
    pub fn with_count(
        kind: CoordinateKind,
        domain: BranchedDomain,
        n: usize,
        half_width: f64,
    ) -> Result<Grid> {
        if n < 3 || !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need n >= 3 and L > 0, got n = {n}, L = {half_width}"
            )));
        }
        if !domain.is_branched() {
            let h = 2.0 * half_width / (n + 1) as f64;
            return Ok(Grid {
                kind,
                domain,
                boundary: Boundary::Dirichlet,
                h,
                first: -half_width + h,
                len: n,
                junctions: None,
            });
        }
        let width = domain.q_plus - domain.q_minus;
        if width >= 2.0 * half_width {
            return Err(Error::InvalidGrid(format!(
                "half-width {half_width} does not contain the fold points"
            )));
        }
        // (n + 1) h = 2 L with h = width / m, and n - 1 - m even
        let mut m = ((n + 1) as f64 * width / (2.0 * half_width))
            .round()
            .max(1.0) as usize;
        if (n - 1 - m.min(n - 1)) % 2 == 1 {
            m += 1;
        }
        if m + 3 > n {
            return Err(Error::InvalidGrid(format!(
                "{n} nodes cannot resolve the fold points"
            )));
        }
        let outer = (n - 1 - m) / 2;
        let h = width / m as f64;
        Ok(Grid {
            kind,
            domain,
            boundary: Boundary::Dirichlet,
            h,
            first: domain.q_minus - outer as f64 * h,
            len: n,
            junctions: Some((outer, outer + m)),
        })
    }

    /// `n` nodes of spacing `h` on a ring, with the fold points on nodes.
    pub fn periodic(
        kind: CoordinateKind,
        domain: BranchedDomain,
        n: usize,
        h: f64,
    ) -> Result<Grid> {
        let m = junction_count(&domain, h)?;
        if n < m + 3 {
            return Err(Error::InvalidGrid(format!(
                "{n} periodic nodes cannot hold the fold points"
            )));
        }
        let outer = (n - 1 - m) / 2;
        let first = if domain.is_branched() {
            domain.q_minus - outer as f64 * h
        } else {
            -((n / 2) as f64) * h
        };
        let junctions = domain.is_branched().then_some((outer, outer + m));
        Ok(Grid {
            kind,
            domain,
            boundary: Boundary::Periodic,
            h,
            first,
            len: n,
            junctions,
        })
    }

    /// Single unbranched interval `[a, b]` with Dirichlet ends and `n` interior nodes.
    pub fn interval(kind: CoordinateKind, a: f64, b: f64, n: usize) -> Result<Grid> {
        if !(b > a) || n < 3 {
            return Err(Error::InvalidGrid(format!(
                "bad interval [{a}, {b}] with {n} nodes"
            )));
        }
        let h = (b - a) / (n + 1) as f64;
        Ok(Grid {
            kind,
            domain: BranchedDomain::unbranched(),
            boundary: Boundary::Dirichlet,
            h,
            first: a + h,
            len: n,
            junctions: None,
        })
    }

    /// Same nodes relabelled as a different coordinate.
    pub fn with_kind(&self, kind: CoordinateKind) -> Grid {
        Grid {
            kind,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Unfolded coordinate of node `j`.
    pub fn node(&self, j: usize) -> f64 {
        self.first + j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.node(j)).collect()
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.len + 1) as f64 * self.h
    }

    pub fn junction_indices(&self) -> Option<(usize, usize)> {
        self.junctions
    }

    /// Folded coordinate and branch of node `j`; fold points belong to the
    /// outer branches.
    pub fn folded(&self, j: usize) -> (f64, Branch) {
        match self.junctions {
            Some((a, _)) if j == a => (self.domain.q_plus, Branch::One),
            Some((_, b)) if j == b => (self.domain.q_minus, Branch::Three),
            _ => self.domain.fold(self.node(j)),
        }
    }

    pub fn segments(&self) -> Vec<Segment> {
        match self.junctions {
            Some((a, b)) => vec![
                Segment {
                    branch: Branch::One,
                    start: 0,
                    end: a,
                },
                Segment {
                    branch: Branch::Two,
                    start: a,
                    end: b,
                },
                Segment {
                    branch: Branch::Three,
                    start: b,
                    end: self.len - 1,
                },
            ],
            None => vec![Segment {
                branch: Branch::One,
                start: 0,
                end: self.len - 1,
            }],
        }
    }

    /// Same layout with a different spacing: each interval is split into
    /// `factor` pieces, keeping the physical extent of every branch.
    pub fn refined(&self, factor: usize) -> Grid {
        let h = self.h / factor as f64;
        let len = (self.len + 1) * factor - 1;
        let first = self.first - self.h + h;
        let junctions = self
            .junctions
            .map(|(a, b)| ((a + 1) * factor - 1, (b + 1) * factor - 1));
        Grid {
            h,
            first,
            len,
            junctions,
            ..self.clone()
        }
    }
}
