//! Classical kinetic structure of the branched system and the folded/unfolded
//! coordinate maps.
//!
//! For `L = xdot^4 / 4 - kappa xdot^2 / 2` the momentum `p = xdot^3 - kappa xdot`
//! is not monotone when `kappa > 0`, so the energy `E = 3/4 xdot^4 - kappa/2 xdot^2`
//! is a three-valued function of `p` between the cusps. Branches are numbered
//! in the order they are met as `xdot` increases: branch 1 (`xdot < -s`),
//! branch 2 (`|xdot| < s`, traversed with decreasing `p`) and branch 3
//! (`xdot > s`), with `s = sqrt(kappa / 3)`.

use crate::cubic::depressed_cubic_roots;
use crate::error::{Error, Result};

/// Distance in momentum below which a root is classified as a cusp (junction) root.
pub const JUNCTION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    One,
    Two,
    Three,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::One, Branch::Two, Branch::Three];

    /// 1-based label, as used in output files.
    pub fn index(self) -> usize {
        match self {
            Branch::One => 1,
            Branch::Two => 2,
            Branch::Three => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Branch> {
        match i {
            1 => Some(Branch::One),
            2 => Some(Branch::Two),
            3 => Some(Branch::Three),
            _ => None,
        }
    }

    /// `+1` where the folded coordinate increases with the unfolded one, `-1` on
    /// the medial branch.
    pub fn orientation(self) -> f64 {
        match self {
            Branch::Two => -1.0,
            _ => 1.0,
        }
    }
}

/// One of the two fold points of a branched domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Junction {
    /// `q_minus`, shared by branches 2 and 3.
    Minus,
    /// `q_plus`, shared by branches 1 and 2.
    Plus,
}

impl Junction {
    pub const ALL: [Junction; 2] = [Junction::Minus, Junction::Plus];

    /// The outer branch (which owns the node in folded layouts) and the medial branch.
    pub fn branches(self) -> (Branch, Branch) {
        match self {
            Junction::Minus => (Branch::Three, Branch::Two),
            Junction::Plus => (Branch::One, Branch::Two),
        }
    }
}

/// Branch assignment of one real root of the momentum map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootLabel {
    Branch(Branch),
    /// A double root at a cusp, shared by two adjacent branches.
    Junction(Branch, Branch),
}

impl RootLabel {
    pub fn contains(&self, b: Branch) -> bool {
        match *self {
            RootLabel::Branch(x) => x == b,
            RootLabel::Junction(x, y) => x == b || y == b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchRoot {
    pub label: RootLabel,
    pub xdot: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspData {
    pub p_minus: f64,
    pub p_plus: f64,
    pub xdot_minus: f64,
    pub xdot_plus: f64,
}

/// Kinetic part of the classical system.
///
/// `Cubic` is the time-crystal Lagrangian with momentum `xdot^3 - kappa xdot`;
/// `Quartic` is a single-valued kinetic symbol `c4 p^4 + c3 p^3 + c2 p^2 + c1 p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DispersionLaw {
    Cubic { kappa: f64 },
    Quartic { c4: f64, c3: f64, c2: f64, c1: f64 },
}

impl DispersionLaw {
    pub fn cubic(kappa: f64) -> Self {
        DispersionLaw::Cubic { kappa }
    }

    /// `p^2 / 2`, the ordinary single-branch kinetic energy.
    pub fn free_particle() -> Self {
        DispersionLaw::Quartic {
            c4: 0.0,
            c3: 0.0,
            c2: 0.5,
            c1: 0.0,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            DispersionLaw::Cubic { kappa } => Some(kappa),
            DispersionLaw::Quartic { .. } => None,
        }
    }

    pub fn is_branched(&self) -> bool {
        matches!(*self, DispersionLaw::Cubic { kappa } if kappa > 0.0)
    }

    /// The folded momentum domain: cusps as junctions, or a single line.
    pub fn domain(&self) -> BranchedDomain {
        match self.cusp_points() {
            Ok(c) => BranchedDomain::new(c.p_minus, c.p_plus),
            Err(_) => BranchedDomain::unbranched(),
        }
    }

    /// Momentum `xdot^3 - kappa xdot`. Only meaningful for the cubic law.
    pub fn momentum_of_velocity(&self, xdot: f64) -> f64 {
        let kappa = self
            .kappa()
            .expect("momentum_of_velocity needs the cubic law");
        xdot * xdot * xdot - kappa * xdot
    }

    /// Energy `3/4 xdot^4 - kappa/2 xdot^2`. Only meaningful for the cubic law.
    pub fn energy_of_velocity(&self, xdot: f64) -> f64 {
        let kappa = self
            .kappa()
            .expect("energy_of_velocity needs the cubic law");
        let v2 = xdot * xdot;
        0.75 * v2 * v2 - 0.5 * kappa * v2
    }

    pub fn cusp_points(&self) -> Result<CuspData> {
        match *self {
            DispersionLaw::Cubic { kappa } if kappa > 0.0 => {
                let s = (kappa / 3.0).sqrt();
                // stationary points of xdot^3 - kappa xdot; the local maximum of p
                // sits at negative velocity
                let p_plus = self.momentum_of_velocity(-s);
                let p_minus = self.momentum_of_velocity(s);
                Ok(CuspData {
                    p_minus,
                    p_plus,
                    xdot_minus: -s,
                    xdot_plus: s,
                })
            }
            DispersionLaw::Cubic { kappa } => Err(Error::UnbranchedDispersion { kappa }),
            DispersionLaw::Quartic { .. } => Err(Error::UnbranchedDispersion { kappa: f64::NAN }),
        }
    }

    /// All real velocities with momentum `p`, labelled by branch.
    pub fn invert_momentum(&self, p: f64) -> Vec<BranchRoot> {
        let kappa = self.kappa().expect("invert_momentum needs the cubic law");
        let cusps = match self.cusp_points() {
            Ok(c) => c,
            Err(_) => {
                let r = depressed_cubic_roots(-kappa, -p);
                return vec![BranchRoot {
                    label: RootLabel::Branch(Branch::One),
                    xdot: r[0],
                }];
            }
        };
        if (p - cusps.p_plus).abs() < JUNCTION_TOLERANCE {
            // (xdot + s)^2 (xdot - 2 s)
            return vec![
                BranchRoot {
                    label: RootLabel::Junction(Branch::One, Branch::Two),
                    xdot: cusps.xdot_minus,
                },
                BranchRoot {
                    label: RootLabel::Branch(Branch::Three),
                    xdot: -2.0 * cusps.xdot_minus,
                },
            ];
        }
        if (p - cusps.p_minus).abs() < JUNCTION_TOLERANCE {
            return vec![
                BranchRoot {
                    label: RootLabel::Branch(Branch::One),
                    xdot: -2.0 * cusps.xdot_plus,
                },
                BranchRoot {
                    label: RootLabel::Junction(Branch::Two, Branch::Three),
                    xdot: cusps.xdot_plus,
                },
            ];
        }
        let roots = depressed_cubic_roots(-kappa, -p);
        if p > cusps.p_minus && p < cusps.p_plus && roots.len() == 3 {
            roots
                .iter()
                .zip(Branch::ALL)
                .map(|(&xdot, b)| BranchRoot {
                    label: RootLabel::Branch(b),
                    xdot,
                })
                .collect()
        } else {
            // outside the cusps only the outer root survives; pick the branch by side
            let (branch, xdot) = if p >= cusps.p_plus {
                (Branch::Three, *roots.last().unwrap())
            } else {
                (Branch::One, roots[0])
            };
            vec![BranchRoot {
                label: RootLabel::Branch(branch),
                xdot,
            }]
        }
    }

    /// Is `p` inside the momentum range covered by `branch`?
    pub fn branch_contains(&self, p: f64, branch: Branch) -> bool {
        match self.cusp_points() {
            Ok(c) => {
                let lo = c.p_minus - JUNCTION_TOLERANCE;
                let hi = c.p_plus + JUNCTION_TOLERANCE;
                match branch {
                    Branch::One => p <= hi,
                    Branch::Two => p >= lo && p <= hi,
                    Branch::Three => p >= lo,
                }
            }
            Err(_) => branch == Branch::One,
        }
    }

    /// Velocity on `branch` with momentum `p`.
    pub fn branch_velocity(&self, p: f64, branch: Branch) -> Result<f64> {
        if !self.branch_contains(p, branch) {
            return Err(Error::OffBranchMomentum {
                p,
                branch: branch.index(),
            });
        }
        self.invert_momentum(p)
            .into_iter()
            .find(|r| r.label.contains(branch))
            .map(|r| r.xdot)
            .ok_or(Error::OffBranchMomentum {
                p,
                branch: branch.index(),
            })
    }

    /// Kinetic energy as a function of momentum on one branch.
    ///
    /// For the quartic law there is a single branch and the symbol itself is
    /// returned.
    pub fn branch_energy(&self, p: f64, branch: Branch) -> Result<f64> {
        match *self {
            DispersionLaw::Cubic { .. } => {
                let v = self.branch_velocity(p, branch)?;
                Ok(self.energy_of_velocity(v))
            }
            DispersionLaw::Quartic { c4, c3, c2, c1 } => {
                if branch != Branch::One {
                    return Err(Error::OffBranchMomentum {
                        p,
                        branch: branch.index(),
                    });
                }
                Ok(((c4 * p + c3) * p + c2) * p * p + c1 * p)
            }
        }
    }
}

/// Three folded branches over one coordinate with fold points `q_minus < q_plus`,
/// or a single unbranched line.
///
/// Branch 1 covers `(-inf, q_plus]`, branch 2 covers `[q_minus, q_plus]` with
/// reversed orientation, branch 3 covers `[q_minus, inf)`. The unfolding maps
/// them onto `(-inf, q_minus]`, `[q_minus, q_plus]` and `[q_plus, inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchedDomain {
    pub q_minus: f64,
    pub q_plus: f64,
    branched: bool,
}

impl BranchedDomain {
    pub fn new(q_minus: f64, q_plus: f64) -> Self {
        assert!(
            q_minus < q_plus,
            "fold points must satisfy q_minus < q_plus"
        );
        BranchedDomain {
            q_minus,
            q_plus,
            branched: true,
        }
    }

    pub fn unbranched() -> Self {
        BranchedDomain {
            q_minus: 0.0,
            q_plus: 0.0,
            branched: false,
        }
    }

    pub fn is_branched(&self) -> bool {
        self.branched
    }

    pub fn branches(&self) -> &'static [Branch] {
        if self.branched {
            &Branch::ALL
        } else {
            &Branch::ALL[..1]
        }
    }

    /// Folded range `[lo, hi]` of a branch (infinite ends as `f64::INFINITY`).
    pub fn branch_range(&self, branch: Branch) -> (f64, f64) {
        if !self.branched {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        match branch {
            Branch::One => (f64::NEG_INFINITY, self.q_plus),
            Branch::Two => (self.q_minus, self.q_plus),
            Branch::Three => (self.q_minus, f64::INFINITY),
        }
    }

    pub fn unfold(&self, q: f64, branch: Branch) -> Result<f64> {
        let off = Error::OffBranchCoordinate {
            q,
            branch: branch.index(),
        };
        if !self.branched {
            return if branch == Branch::One {
                Ok(q)
            } else {
                Err(off)
            };
        }
        let tol = 1e-12 * (1.0 + self.q_plus.abs().max(self.q_minus.abs()));
        let (lo, hi) = self.branch_range(branch);
        if q < lo - tol || q > hi + tol || q.is_nan() {
            return Err(off);
        }
        let (qm, qp) = (self.q_minus, self.q_plus);
        Ok(match branch {
            Branch::One => q - qp + qm,
            Branch::Two => qp + qm - q,
            Branch::Three => q + qp - qm,
        })
    }

    /// Inverse of [`unfold`](Self::unfold). The fold points themselves go to the
    /// outer branches.
    pub fn fold(&self, u: f64) -> (f64, Branch) {
        if !self.branched {
            return (u, Branch::One);
        }
        let (qm, qp) = (self.q_minus, self.q_plus);
        if u <= qm {
            (u + qp - qm, Branch::One)
        } else if u < qp {
            (qp + qm - u, Branch::Two)
        } else {
            (u - qp + qm, Branch::Three)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn momentum_examples() {
        let law = DispersionLaw::cubic(3.0);
        assert_eq!(law.momentum_of_velocity(0.0), 0.0);
        assert_eq!(law.momentum_of_velocity(1.0), -2.0);
        assert_eq!(law.momentum_of_velocity(2.0), 2.0);
    }

    #[test]
    fn energy_examples() {
        let law = DispersionLaw::cubic(3.0);
        assert_eq!(law.energy_of_velocity(0.0), 0.0);
        assert_eq!(law.energy_of_velocity(1.0), -0.75);
    }

    #[test]
    fn energy_minimum_by_scan() {
        // brute-force minimum of E(xdot) over the inner branch
        let law = DispersionLaw::cubic(3.0);
        let min = (0..=200_000)
            .map(|i| -1.0 + 2.0 * i as f64 / 200_000.0)
            .map(|v| law.energy_of_velocity(v))
            .fold(f64::INFINITY, f64::min);
        assert!((min + 0.75).abs() < 1e-12);
        assert_eq!(law.energy_of_velocity(1.0), min);
    }

    #[test]
    fn cusp_examples() {
        let c = DispersionLaw::cubic(3.0).cusp_points().unwrap();
        assert!((c.xdot_plus - 1.0).abs() < 1e-15 && (c.xdot_minus + 1.0).abs() < 1e-15);
        assert!((c.p_plus - 2.0).abs() < 1e-15 && (c.p_minus + 2.0).abs() < 1e-15);
        let c = DispersionLaw::cubic(0.75).cusp_points().unwrap();
        assert!((c.xdot_plus - 0.5).abs() < 1e-15);
        assert!((c.p_plus - 0.25).abs() < 1e-15 && (c.p_minus + 0.25).abs() < 1e-15);
        let c = DispersionLaw::cubic(1e-12).cusp_points().unwrap();
        assert!(c.p_plus - c.p_minus < 1e-17);
        assert!(matches!(
            DispersionLaw::cubic(0.0).cusp_points(),
            Err(Error::UnbranchedDispersion { .. })
        ));
    }

    #[test]
    fn invert_examples() {
        let law = DispersionLaw::cubic(3.0);
        let r = law.invert_momentum(0.0);
        let s3 = 3f64.sqrt();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].label, RootLabel::Branch(Branch::One));
        assert!((r[0].xdot + s3).abs() < 1e-14);
        assert_eq!(r[1].label, RootLabel::Branch(Branch::Two));
        assert!(r[1].xdot.abs() < 1e-14);
        assert_eq!(r[2].label, RootLabel::Branch(Branch::Three));
        assert!((r[2].xdot - s3).abs() < 1e-14);

        let r = law.invert_momentum(2.0);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].label, RootLabel::Junction(Branch::One, Branch::Two));
        assert!((r[0].xdot + 1.0).abs() < 1e-15);
        assert_eq!(r[1].label, RootLabel::Branch(Branch::Three));
        assert!((r[1].xdot - 2.0).abs() < 1e-15);
    }

    #[test]
    fn invert_outside_matches_newton_oracle() {
        // independent Newton iteration on xdot^3 - 3 xdot - 3 = 0
        let mut v: f64 = 2.0;
        for _ in 0..100 {
            v -= (v * v * v - 3.0 * v - 3.0) / (3.0 * v * v - 3.0);
        }
        let r = DispersionLaw::cubic(3.0).invert_momentum(3.0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].label, RootLabel::Branch(Branch::Three));
        assert!((r[0].xdot - v).abs() < 1e-12);
        assert!((v - 2.1038).abs() < 1e-4);
    }

    #[test]
    fn branch_energy_examples() {
        let law = DispersionLaw::cubic(3.0);
        assert!(law.branch_energy(0.0, Branch::Two).unwrap().abs() < 1e-14);
        assert!((law.branch_energy(0.0, Branch::Three).unwrap() - 2.25).abs() < 1e-13);
        let e1 = law.branch_energy(2.0, Branch::One).unwrap();
        let e2 = law.branch_energy(2.0, Branch::Two).unwrap();
        assert_eq!(e1, e2);
        assert!((e1 + 0.75).abs() < 1e-15);
        assert!(matches!(
            law.branch_energy(2.5, Branch::Two),
            Err(Error::OffBranchMomentum { .. })
        ));
        assert!(law.branch_energy(-3.0, Branch::Three).is_err());
    }

    #[test]
    fn unbranched_law_has_one_root() {
        let law = DispersionLaw::cubic(-1.0);
        for p in [-5.0, 0.0, 0.3, 7.0] {
            let r = law.invert_momentum(p);
            assert_eq!(r.len(), 1);
            assert!((r[0].xdot.powi(3) + r[0].xdot - p).abs() < 1e-12);
        }
        assert!(!law.domain().is_branched());
    }

    #[test]
    fn unfold_examples() {
        let d = BranchedDomain::new(-2.0, 2.0);
        assert_eq!(d.unfold(2.0, Branch::One).unwrap(), -2.0);
        assert_eq!(d.unfold(0.0, Branch::Two).unwrap(), 0.0);
        assert_eq!(d.unfold(-2.0, Branch::Three).unwrap(), 2.0);
        assert_eq!(d.fold(2.0), (-2.0, Branch::Three));
        assert!(matches!(
            d.unfold(3.0, Branch::Two),
            Err(Error::OffBranchCoordinate { .. })
        ));
        assert!(d.unfold(2.5, Branch::One).is_err());
    }

    #[test]
    fn velocity_sweep_unfolds_monotonically() {
        let law = DispersionLaw::cubic(3.0);
        let dom = law.domain();
        let mut prev = f64::NEG_INFINITY;
        let mut branches = Vec::new();
        for i in 0..=6000 {
            let v = -3.0 + i as f64 * 1e-3;
            let p = law.momentum_of_velocity(v);
            let b = if v < -1.0 {
                Branch::One
            } else if v <= 1.0 {
                Branch::Two
            } else {
                Branch::Three
            };
            if branches.last() != Some(&b) {
                branches.push(b);
            }
            let u = dom.unfold(p, b).unwrap();
            assert!(u > prev, "unfolded coordinate not increasing at xdot = {v}");
            prev = u;
        }
        assert_eq!(branches, Branch::ALL.to_vec());
    }
}
