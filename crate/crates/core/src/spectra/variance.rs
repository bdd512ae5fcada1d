//! Eigenstates as zero-variance states: minimize `<H^2> - <H>^2` on the unit
//! sphere by Polak-Ribiere conjugate gradients with an exact line search
//! along the great circle through `psi` and the search direction.

use num_complex::Complex64 as C64;

use super::{dot, normalize};
use crate::error::{Error, Result};
use crate::operators::sparse::SparseRows;
use crate::operators::OperatorMatrix;

const MAX_ITERATIONS: usize = 400_000;
const LINE_SAMPLES: usize = 64;

#[derive(Clone, Debug)]
pub struct VarianceOutcome {
    pub energy: f64,
    pub state: Vec<C64>,
    pub variance: f64,
    pub iterations: usize,
    /// variance after each accepted step, starting with the initial value
    pub history: Vec<f64>,
}

/// `<H^2> - <H>^2` for a normalized state.
pub fn variance(h: &OperatorMatrix, psi: &[C64]) -> f64 {
    let phi = h.apply(psi);
    let e = dot(psi, &phi).re;
    phi.iter()
        .zip(psi)
        .map(|(p, s)| (p - s * e).norm_sqr())
        .sum()
}

/// Quadratic forms of `H - E` and `(H - E)^2` on `{psi, d}`, `d` orthonormal
/// to `psi` and `E` the current energy; the shift keeps the variance free of
/// cancellation.
struct Plane {
    h: [[f64; 2]; 2],
    g: [[f64; 2]; 2],
}

impl Plane {
    fn value(&self, t: f64) -> f64 {
        let c = [t.cos(), t.sin()];
        let q = |m: &[[f64; 2]; 2]| {
            c[0] * c[0] * m[0][0] + 2.0 * c[0] * c[1] * m[0][1] + c[1] * c[1] * m[1][1]
        };
        let e = q(&self.h);
        q(&self.g) - e * e
    }

    /// Global minimizer on a half circle: coarse sampling, then golden section.
    fn minimize(&self) -> (f64, f64) {
        use std::f64::consts::PI;
        let step = PI / LINE_SAMPLES as f64;
        let mut best = (0.0, self.value(0.0));
        for i in 1..LINE_SAMPLES {
            let t = -0.5 * PI + i as f64 * step;
            let v = self.value(t);
            if v < best.1 {
                best = (t, v);
            }
        }
        let (mut a, mut b) = (best.0 - step, best.0 + step);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let (mut f1, mut f2) = (self.value(x1), self.value(x2));
        for _ in 0..200 {
            if (b - a).abs() < 1e-15 {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = self.value(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = self.value(x2);
            }
        }
        let t = 0.5 * (a + b);
        let v = self.value(t);
        if v < best.1 {
            (t, v)
        } else {
            best
        }
    }
}

struct State {
    psi: Vec<C64>,
    /// `(H - E) psi`
    r: Vec<C64>,
    energy: f64,
    variance: f64,
}

impl State {
    fn new(hs: &SparseRows, psi: Vec<C64>) -> State {
        let phi = hs.matvec(&psi);
        let energy = dot(&psi, &phi).re;
        let r: Vec<C64> = phi.iter().zip(&psi).map(|(p, s)| p - s * energy).collect();
        let variance = r.iter().map(|z| z.norm_sqr()).sum();
        State {
            psi,
            r,
            energy,
            variance,
        }
    }

    /// Tangent gradient `(H - E)^2 psi - var psi`, up to a factor 2.
    fn gradient(&self, hs: &SparseRows) -> Vec<C64> {
        let hr = hs.matvec(&self.r);
        hr.iter()
            .zip(&self.r)
            .zip(&self.psi)
            .map(|((a, b), s)| a - b * self.energy - s * self.variance)
            .collect()
    }
}

fn tangent(v: &mut [C64], psi: &[C64]) {
    let c = dot(psi, v);
    for (x, p) in v.iter_mut().zip(psi) {
        *x -= p * c;
    }
}

/// Runs until the variance drops below `tol`. Every accepted step lowers the
/// variance or leaves it unchanged.
pub fn variance_minimize(h: &OperatorMatrix, psi0: &[C64], tol: f64) -> Result<VarianceOutcome> {
    let n = h.dimension();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi0.len(),
        });
    }
    let hs = h.to_sparse();
    let mut start = psi0.to_vec();
    normalize(&mut start);
    let mut st = State::new(&hs, start);
    let mut history = vec![st.variance];
    let mut grad = st.gradient(&hs);
    let mut dir: Vec<C64> = grad.iter().map(|g| -g).collect();
    let mut stalled = 0usize;
    for iteration in 0..MAX_ITERATIONS {
        if st.variance < tol {
            return Ok(VarianceOutcome {
                energy: st.energy,
                variance: st.variance,
                state: st.psi,
                iterations: iteration,
                history,
            });
        }
        tangent(&mut dir, &st.psi);
        if dot(&grad, &dir).re >= 0.0 {
            dir = grad.iter().map(|g| -g).collect();
            tangent(&mut dir, &st.psi);
        }
        let dn = dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if dn == 0.0 {
            break;
        }
        let d: Vec<C64> = dir.iter().map(|z| z / dn).collect();
        let rd: Vec<C64> = hs
            .matvec(&d)
            .iter()
            .zip(&d)
            .map(|(a, b)| a - b * st.energy)
            .collect();
        let off = dot(&st.psi, &rd).re;
        let cross = dot(&st.r, &rd).re;
        let plane = Plane {
            h: [[0.0, off], [off, dot(&d, &rd).re]],
            g: [[st.variance, cross], [cross, dot(&rd, &rd).re]],
        };
        let (t, _) = plane.minimize();
        let mut next: Vec<C64> = st
            .psi
            .iter()
            .zip(&d)
            .map(|(p, q)| p * t.cos() + q * t.sin())
            .collect();
        normalize(&mut next);
        let candidate = State::new(&hs, next);
        if candidate.variance > st.variance {
            // rounding in the plane model; restart along the gradient
            stalled += 1;
            if stalled > 5 {
                break;
            }
            dir = grad.iter().map(|g| -g).collect();
            continue;
        }
        stalled = if candidate.variance >= st.variance {
            stalled + 1
        } else {
            0
        };
        if stalled > 50 {
            st = candidate;
            history.push(st.variance);
            break;
        }
        st = candidate;
        history.push(st.variance);
        let new_grad = st.gradient(&hs);
        let mut old = grad.clone();
        tangent(&mut old, &st.psi);
        let denom: f64 = grad.iter().map(|z| z.norm_sqr()).sum();
        let beta = (dot(&new_grad, &new_grad).re - dot(&new_grad, &old).re) / denom;
        let mut carried = dir.clone();
        tangent(&mut carried, &st.psi);
        dir = new_grad
            .iter()
            .zip(&carried)
            .map(|(g, c)| -g + c * beta.max(0.0))
            .collect();
        grad = new_grad;
    }
    if st.variance < tol {
        return Ok(VarianceOutcome {
            energy: st.energy,
            variance: st.variance,
            state: st.psi,
            iterations: history.len(),
            history,
        });
    }
    Err(Error::NoConvergence {
        iterations: history.len(),
        residual: st.variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DispersionLaw;
    use crate::grid::{CoordinateKind, Grid};
    use crate::operators::build_unfolded_hamiltonian;
    use crate::potential::PotentialSpec;
    use crate::spectra::{overlap, solve_eigensystem};

    fn oscillator(n: usize) -> OperatorMatrix {
        let g = Grid::with_count(
            CoordinateKind::UnfoldedXi,
            crate::BranchedDomain::unbranched(),
            n,
            8.0,
        )
        .unwrap();
        build_unfolded_hamiltonian(
            &DispersionLaw::free_particle(),
            &g,
            &PotentialSpec::harmonic(1.0),
        )
        .unwrap()
    }

    #[test]
    fn two_level_mixture_variance() {
        let h = oscillator(200);
        let e = solve_eigensystem(&h, 2).unwrap();
        let mix: Vec<C64> = e
            .vector(0)
            .iter()
            .zip(e.vector(1))
            .map(|(a, b)| (a + b) / 2f64.sqrt())
            .collect();
        let gap = e.values[1] - e.values[0];
        assert!((variance(&h, &mix) - gap * gap / 4.0).abs() < 1e-10);
        assert!((gap - 1.0).abs() < 1e-3);
    }

    #[test]
    fn eigenvector_stops_immediately() {
        let h = oscillator(120);
        let e = solve_eigensystem(&h, 1).unwrap();
        let out = variance_minimize(&h, &e.vector(0), 1e-12).unwrap();
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn random_start_reaches_an_eigenpair() {
        use rand::{Rng, SeedableRng};
        let h = oscillator(120);
        let e = solve_eigensystem(&h, 120).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let start: Vec<C64> = (0..120)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let out = variance_minimize(&h, &start, 1e-12).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        let (i, gap) = e
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (v - out.energy).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(gap < 1e-6);
        assert!(overlap(&out.state, &e.vector(i)) > 0.999);
    }
}
