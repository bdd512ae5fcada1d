//! Probability current of a constant-coefficient symbol `sum s_n P^n`,
//! `P = -i d/dq`, with the convention `d rho/dt + dj/dq = 0`.
//!
//! Per order: `j_1 = s_1 |psi|^2`, `j_2 = 2 s_2 Im(psi* psi')`,
//! `j_3 = -s_3 (2 Re(psi* psi'') - |psi'|^2)`,
//! `j_4 = -2 s_4 Im(psi* psi''' - psi*' psi'')`.
//! In a folded frame of orientation `sigma` the odd orders pick up `sigma`.

use num_complex::Complex64 as C64;

use super::{GhostLayers, MultiWave, Representation, GHOST_DEPTH};
use crate::error::{Error, Result};
use crate::geometry::{Branch, Junction};
use crate::operators::DifferentialSymbol;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurrentLaw {
    /// `s[n]` multiplies `P^n`; `s[0]` carries no current.
    pub symbol: [f64; 5],
}

impl CurrentLaw {
    /// From derivative coefficients `a_n d^n`, using `d^n = i^n P^n`.
    pub fn from_symbol(symbol: &DifferentialSymbol) -> CurrentLaw {
        let mut s = [0.0; 5];
        let mut ipow = C64::new(1.0, 0.0);
        for (dst, a) in s.iter_mut().zip(symbol.coefficients.iter()) {
            *dst = (a * ipow).re;
            ipow *= C64::new(0.0, 1.0);
        }
        CurrentLaw { symbol: s }
    }

    /// `V = alpha x^2 / 2` acting as `-(alpha/2) d^2/dp^2`.
    pub fn quadratic(alpha: f64) -> CurrentLaw {
        CurrentLaw {
            symbol: [0.0, 0.0, 0.5 * alpha, 0.0, 0.0],
        }
    }

    /// `p^4 - alpha p^3 + beta p^2 - gamma p`.
    pub fn quartic(alpha: f64, beta: f64, gamma: f64) -> CurrentLaw {
        CurrentLaw {
            symbol: [0.0, -gamma, beta, -alpha, 1.0],
        }
    }

    fn at(&self, d: &[C64; 4], sigma: f64) -> f64 {
        let s = self.symbol;
        let (f, f1, f2, f3) = (d[0], d[1], d[2], d[3]);
        sigma * s[1] * f.norm_sqr() + 2.0 * s[2] * (f.conj() * f1).im
            - sigma * s[3] * (2.0 * (f.conj() * f2).re - f1.norm_sqr())
            - 2.0 * s[4] * (f.conj() * f3 - f1.conj() * f2).im
    }
}

/// Value and central first to third differences at frame position `pos`.
fn derivatives(
    rep: &Representation,
    v: &[C64],
    ghosts: Option<&GhostLayers>,
    branch: Branch,
    pos: usize,
) -> [C64; 4] {
    let len = rep.block_len(branch) as isize;
    let at = |k: isize| {
        let i = pos as isize + k;
        if let Some(g) = ghosts {
            let side = &g[branch.index() - 1];
            let junction_below = branch != Branch::One;
            let junction_above = branch != Branch::Three;
            if i < 0 && junction_below && (-i as usize) <= GHOST_DEPTH {
                return side[0][(-i - 1) as usize];
            }
            if i >= len && junction_above && ((i - len + 1) as usize) <= GHOST_DEPTH {
                return side[1][(i - len) as usize];
            }
        }
        rep.walk(branch, pos, k)
            .map_or(C64::new(0.0, 0.0), |d| v[d])
    };
    let h = rep.spacing();
    let (m2, m1, z, p1, p2) = (at(-2), at(-1), at(0), at(1), at(2));
    [
        z,
        (p1 - m1) * (0.5 / h),
        (p1 - z * 2.0 + m1) / (h * h),
        (p2 - p1 * 2.0 + m1 * 2.0 - m2) * (0.5 / (h * h * h)),
    ]
}

fn current_of(
    rep: &Representation,
    values: &[C64],
    ghosts: Option<&GhostLayers>,
    law: &CurrentLaw,
) -> Vec<f64> {
    let ghosts = ghosts.filter(|_| rep.is_folded() && rep.grid().domain.is_branched());
    rep.frames()
        .into_iter()
        .map(|(b, pos)| law.at(&derivatives(rep, values, ghosts, b, pos), rep.frame_sign(b)))
        .collect()
}

/// Current at every node, in the node's own frame.
pub fn current(psi: &MultiWave, law: &CurrentLaw) -> Vec<f64> {
    current_of(&psi.representation, &psi.values, psi.ghosts.as_ref(), law)
}

pub fn current_quadratic(psi: &MultiWave, alpha: f64) -> Vec<f64> {
    current(psi, &CurrentLaw::quadratic(alpha))
}

pub fn current_quartic(psi: &MultiWave, alpha: f64, beta: f64, gamma: f64) -> Vec<f64> {
    current(psi, &CurrentLaw::quartic(alpha, beta, gamma))
}

/// `|j_a + j_b|` for the two branches meeting at a fold point, each taken at
/// its own end of the junction in its own frame. Both branches end at `q_plus`
/// and both start at `q_minus`, so conservation means the two cancel.
pub fn junction_flux_residual(
    psi: &MultiWave,
    junction: Junction,
    law: &CurrentLaw,
) -> Result<f64> {
    let rep = &psi.representation;
    if !rep.is_folded() || !rep.grid().domain.is_branched() {
        return Err(Error::InvalidGrid(
            "junction flux needs a branched folded representation".into(),
        ));
    }
    let (outer, medial) = junction.branches();
    let end = |b: Branch| {
        let n = rep.block_len(b);
        match junction {
            Junction::Plus => n - 1,
            Junction::Minus => 0,
        }
    };
    let j = |b: Branch| {
        law.at(
            &derivatives(rep, &psi.values, psi.ghosts.as_ref(), b, end(b)),
            rep.frame_sign(b),
        )
    };
    Ok((j(outer) + j(medial)).abs())
}

/// Largest `|(rho_1 - rho_0)/dt + dj/dq|` over nodes at least `margin` steps
/// from fold points and truncation edges, with `j` taken at the midpoint
/// state as Crank-Nicolson implies.
pub fn continuity_residual(
    before: &MultiWave,
    after: &MultiWave,
    law: &CurrentLaw,
    margin: usize,
) -> Result<f64> {
    if before.values.len() != after.values.len() {
        return Err(Error::DimensionMismatch {
            expected: before.values.len(),
            found: after.values.len(),
        });
    }
    let dt = after.time - before.time;
    if !(dt != 0.0) {
        return Err(Error::InvalidGrid(
            "continuity needs two distinct times".into(),
        ));
    }
    let rep = &before.representation;
    let mid: Vec<C64> = before
        .values
        .iter()
        .zip(&after.values)
        .map(|(a, b)| (a + b) * 0.5)
        .collect();
    let j = current_of(rep, &mid, None, law);
    let margin = margin.max(1) as isize;
    let h = rep.spacing();
    let domain = rep.grid().domain;
    let mut worst = 0.0f64;
    for (dof, (b, pos)) in rep.frames().into_iter().enumerate() {
        let q = rep.unfolded_coordinate(dof);
        if domain.is_branched()
            && ((q - domain.q_minus).abs() < margin as f64 * h * (1.0 - 1e-9)
                || (q - domain.q_plus).abs() < margin as f64 * h * (1.0 - 1e-9))
        {
            continue;
        }
        if rep.walk(b, pos, -margin).is_none() || rep.walk(b, pos, margin).is_none() {
            continue;
        }
        let (l, r) = (rep.walk(b, pos, -1).unwrap(), rep.walk(b, pos, 1).unwrap());
        let rho_t = (after.values[dof].norm_sqr() - before.values[dof].norm_sqr()) / dt;
        worst = worst.max((rho_t + (j[r] - j[l]) * (0.5 / h)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DispersionLaw;
    use crate::grid::{CoordinateKind, Grid};
    use crate::operators::FoldedLayout;

    fn line() -> Representation {
        Representation::Unfolded(
            Grid::interval(CoordinateKind::FoldedX, -10.0, 10.0, 2001).unwrap(),
        )
    }

    fn folded() -> Representation {
        let g = Grid::with_count(
            CoordinateKind::FoldedP,
            DispersionLaw::cubic(3.0).domain(),
            1201,
            10.0,
        )
        .unwrap();
        Representation::Folded(FoldedLayout::new(&g).unwrap())
    }

    fn interior_max(j: &[f64], rep: &Representation, f: impl Fn(f64) -> f64) -> f64 {
        (0..j.len())
            .filter(|&d| rep.coordinate(d).0.abs() < 5.0)
            .map(|d| (j[d] - f(rep.coordinate(d).0)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn real_states_carry_no_current() {
        let w = MultiWave::from_fn(line(), |x, _| C64::new((-x * x).exp(), 0.0));
        assert!(current_quadratic(&w, 1.3).iter().all(|j| j.abs() < 1e-14));
        assert!(current_quartic(&w, 0.0, 0.7, 0.0)
            .iter()
            .all(|j| j.abs() < 1e-14));
    }

    #[test]
    fn plane_wave_currents() {
        let k = 0.8;
        let w = MultiWave::from_fn(line(), |x, _| C64::from_polar(1.0, k * x));
        let h = w.representation.spacing();
        // central differences see sin(kh)/h in place of k
        let keff = (k * h).sin() / h;
        let j = current_quadratic(&w, 2.0);
        assert!(interior_max(&j, &w.representation, |_| 2.0 * keff) < 1e-12);
        // the beta bracket alone, with the p^4 part removed
        let full = current_quartic(&w, 0.0, 1.5, 0.0);
        let bare = current_quartic(&w, 0.0, 0.0, 0.0);
        let j: Vec<f64> = full.iter().zip(&bare).map(|(a, b)| a - b).collect();
        assert!(interior_max(&j, &w.representation, |_| 2.0 * 1.5 * keff) < 1e-10);
        assert!((2.0 * 1.5 * keff - 2.0 * 1.5 * k).abs() < 1e-4);
    }

    #[test]
    fn higher_orders_match_the_symbol_velocity() {
        // a plane wave of a symbol s(P) carries j = s'(k) |psi|^2
        let k = 0.6;
        let w = MultiWave::from_fn(line(), |x, _| C64::from_polar(1.0, k * x));
        let (a, b, g) = (0.4, -0.3, 0.9);
        let law = CurrentLaw::quartic(a, b, g);
        let v = 4.0 * k.powi(3) - 3.0 * a * k * k + 2.0 * b * k - g;
        let j = current(&w, &law);
        assert!(interior_max(&j, &w.representation, |_| v) < 1e-4);
    }

    #[test]
    fn reflected_state_cancels_at_both_junctions() {
        let rep = folded();
        let f = |u: f64| C64::from_polar((-0.3 * u * u).exp(), 0.7 * u);
        let lay = match &rep {
            Representation::Folded(f) => f.clone(),
            _ => unreachable!(),
        };
        let unfolded: Vec<C64> = lay.grid().nodes().into_iter().map(f).collect();
        let w = MultiWave::new(rep, lay.from_unfolded(&unfolded), 0.0).unwrap();
        for law in [
            CurrentLaw::quadratic(1.0),
            CurrentLaw::quartic(0.5, 1.0, -0.4),
        ] {
            for jn in Junction::ALL {
                assert!(junction_flux_residual(&w, jn, &law).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn equal_derivatives_do_not_cancel() {
        // each branch gets the same function of its own folded coordinate
        let f = |q: f64| C64::from_polar((-0.3 * q * q).exp(), 0.7 * q);
        let w = MultiWave::from_fn(folded(), |q, _| f(q));
        let r = junction_flux_residual(&w, Junction::Plus, &CurrentLaw::quadratic(1.0)).unwrap();
        assert!(r > 1e-2, "{r}");
    }

    #[test]
    fn unfolded_input_is_rejected() {
        let w = MultiWave::from_fn(line(), |_, _| C64::new(1.0, 0.0));
        assert!(junction_flux_residual(&w, Junction::Plus, &CurrentLaw::quadratic(1.0)).is_err());
    }

    #[test]
    fn symbol_conversion() {
        use crate::potential::PotentialSpec;
        let s = DifferentialSymbol::from_position_potential(&PotentialSpec::harmonic(2.0)).unwrap();
        assert_eq!(CurrentLaw::from_symbol(&s), CurrentLaw::quadratic(2.0));
        let s =
            DifferentialSymbol::from_position_potential(&PotentialSpec::quartic(0.3, -0.2, 0.5))
                .unwrap();
        let law = CurrentLaw::from_symbol(&s);
        let q = CurrentLaw::quartic(0.3, -0.2, 0.5);
        for n in 0..5 {
            assert!((law.symbol[n] - q.symbol[n]).abs() < 1e-15);
        }
    }
}
