//! Eigenstates as the states where `<psi|[H, O]|psi>` vanishes for every
//! probe `O`.
//!
//! With `phi = H psi`, `<psi|[H, O]|psi> = 2i Im <phi|O|psi>`. Site projectors
//! and the two Hermitian combinations of each nearest-neighbour hop force
//! `phi psi^dagger` to be Hermitian on the chain of indices, so `phi` is a real
//! multiple of `psi` wherever the chain is connected by nonzero amplitudes.

use faer::Mat;
use num_complex::Complex64 as C64;

use super::{dot, normalize};
use crate::error::{Error, Result};
use crate::operators::sparse::SparseRows;
use crate::operators::OperatorMatrix;

const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum Probe {
    /// `|a><a|`
    Site(usize),
    /// `|a><b| + |b><a|`
    HopSym(usize, usize),
    /// `i (|a><b| - |b><a|)`
    HopAnti(usize, usize),
    /// any Hermitian matrix
    Dense(Mat<C64>),
}

impl Probe {
    /// `O v` as a sparse list, or dense for `Dense`.
    fn apply(&self, v: &[C64]) -> Vec<(usize, C64)> {
        let i = C64::new(0.0, 1.0);
        match *self {
            Probe::Site(a) => vec![(a, v[a])],
            Probe::HopSym(a, b) => vec![(a, v[b]), (b, v[a])],
            Probe::HopAnti(a, b) => vec![(a, i * v[b]), (b, -i * v[a])],
            Probe::Dense(ref m) => {
                let n = m.nrows();
                (0..n)
                    .map(|r| (r, (0..n).map(|c| m[(r, c)] * v[c]).sum()))
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorBasis {
    pub probes: Vec<Probe>,
}

impl OperatorBasis {
    /// Site projectors plus symmetric and antisymmetric hops `a <-> a + 1`.
    pub fn grid(n: usize) -> Self {
        Self::banded(n, 1)
    }

    /// Site projectors plus both hops `a <-> a + d` for `d <= reach`. A zero
    /// amplitude cuts the nearest-neighbour chain and admits stationary
    /// states that are eigenvectors only piecewise; `reach = 2` bridges
    /// isolated zeros.
    pub fn banded(n: usize, reach: usize) -> Self {
        let mut probes: Vec<Probe> = (0..n).map(Probe::Site).collect();
        for d in 1..=reach {
            for a in 0..n.saturating_sub(d) {
                probes.push(Probe::HopSym(a, a + d));
                probes.push(Probe::HopAnti(a, a + d));
            }
        }
        OperatorBasis { probes }
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }
}

fn check_normalized(psi: &[C64]) -> Result<()> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// `<phi|O|psi>` with `O psi` given sparsely.
fn bra(phi: &[C64], o_psi: &[(usize, C64)]) -> C64 {
    o_psi.iter().map(|&(i, v)| phi[i].conj() * v).sum()
}

/// `|<psi|[H, O]|psi>|` for every probe.
pub fn stationarity_residual(
    h: &OperatorMatrix,
    psi: &[C64],
    basis: &OperatorBasis,
) -> Result<Vec<f64>> {
    if psi.len() != h.dimension() {
        return Err(Error::DimensionMismatch {
            expected: h.dimension(),
            found: psi.len(),
        });
    }
    check_normalized(psi)?;
    let phi = h.to_sparse().matvec(psi);
    Ok(basis
        .probes
        .iter()
        .map(|o| {
            let a = bra(&phi, &o.apply(psi));
            let b = bra(psi, &o.apply(&phi));
            (a - b).norm()
        })
        .collect())
}

/// Residuals of `<H^2><O O^dagger> + <H O O^dagger H> = <H><{H, O O^dagger}>`,
/// another identity that holds on eigenstates. Diagnostic only.
pub fn pair_form_residual(
    h: &OperatorMatrix,
    psi: &[C64],
    basis: &OperatorBasis,
) -> Result<Vec<f64>> {
    check_normalized(psi)?;
    let hs = h.to_sparse();
    let phi = hs.matvec(psi);
    let energy = dot(psi, &phi).re;
    let h2 = dot(&phi, &phi).re;
    Ok(basis
        .probes
        .iter()
        .map(|o| {
            // O O^dagger = O^2 for Hermitian probes
            let expect = |bra_v: &[C64], ket_v: &[C64]| {
                let oo = apply_twice(o, ket_v, psi.len());
                dot(bra_v, &oo)
            };
            let oo_psi = expect(psi, psi);
            let h_oo_h = expect(&phi, &phi);
            let anti = expect(&phi, psi) + expect(psi, &phi);
            (h2 * oo_psi + h_oo_h - energy * anti).norm()
        })
        .collect())
}

fn apply_twice(o: &Probe, v: &[C64], n: usize) -> Vec<C64> {
    let mut once = vec![C64::new(0.0, 0.0); n];
    for (i, x) in o.apply(v) {
        once[i] += x;
    }
    let mut twice = vec![C64::new(0.0, 0.0); n];
    for (i, x) in o.apply(&once) {
        twice[i] += x;
    }
    twice
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub energy: f64,
    pub state: Vec<C64>,
    pub iterations: usize,
    /// max stationarity residual at exit
    pub residual: f64,
}

const MAX_NEWTON_ITERATIONS: usize = 50;

/// `s_O(psi) = -i <psi|[H, O]|psi> = 2 Im <phi|O|psi>`, real.
fn stationarity_rows(hs: &SparseRows, basis: &OperatorBasis, psi: &[C64]) -> (Vec<f64>, Vec<C64>) {
    let phi = hs.matvec(psi);
    let s = basis
        .probes
        .iter()
        .map(|o| 2.0 * bra(&phi, &o.apply(psi)).im)
        .collect();
    (s, phi)
}

/// Gauss-Newton on the real and imaginary parts of `psi` for
/// `s_O(psi) = 0` over the basis, together with `<psi|psi> = 1` and the
/// gauge `Im <psi_0|psi> = 0`. Each step solves the overdetermined linear
/// system by column-pivoted QR.
pub fn newton_refine(
    h: &OperatorMatrix,
    psi0: &[C64],
    basis: &OperatorBasis,
    tol: f64,
) -> Result<NewtonOutcome> {
    let n = h.dimension();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi0.len(),
        });
    }
    let hs = h.to_sparse();
    let mut psi = psi0.to_vec();
    normalize(&mut psi);
    let gauge = psi.clone();
    // H is Hermitian, so its columns are the conjugated rows
    let column = |a: usize| {
        hs.row(a)
            .iter()
            .map(|&(c, v)| (c, v.conj()))
            .collect::<Vec<_>>()
    };
    let columns: Vec<Vec<(usize, C64)>> = (0..n).map(column).collect();

    let m = basis.len() + 2;
    let mut last = f64::INFINITY;
    for iteration in 0..=MAX_NEWTON_ITERATIONS {
        let (s, phi) = stationarity_rows(&hs, basis, &psi);
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let residual = s.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        last = residual;
        if residual < tol && (norm_sqr - 1.0).abs() < 1e-13 {
            let energy = dot(&psi, &phi).re;
            return Ok(NewtonOutcome {
                energy,
                state: psi,
                iterations: iteration,
                residual,
            });
        }
        if iteration == MAX_NEWTON_ITERATIONS {
            break;
        }
        // rows: gradient of psi^dagger A psi is 2 (Re A psi, Im A psi), A = -i [H, O]
        let mut jac = Mat::<f64>::zeros(m, 2 * n);
        let mut rhs = Mat::<f64>::zeros(m, 1);
        let minus_i = C64::new(0.0, -1.0);
        for (r, o) in basis.probes.iter().enumerate() {
            let o_psi = o.apply(&psi);
            let mut a_psi: Vec<(usize, C64)> = Vec::new();
            for &(k, v) in &o_psi {
                for &(i, hv) in &columns[k] {
                    a_psi.push((i, minus_i * hv * v));
                }
            }
            for (i, v) in o.apply(&phi) {
                a_psi.push((i, -minus_i * v));
            }
            for (i, v) in a_psi {
                jac[(r, i)] += 2.0 * v.re;
                jac[(r, n + i)] += 2.0 * v.im;
            }
            rhs[(r, 0)] = -s[r];
        }
        let rn = basis.len();
        for i in 0..n {
            jac[(rn, i)] = 2.0 * psi[i].re;
            jac[(rn, n + i)] = 2.0 * psi[i].im;
            // d Im(conj(g) psi) = Re g Im dpsi - Im g Re dpsi
            jac[(rn + 1, i)] = -gauge[i].im;
            jac[(rn + 1, n + i)] = gauge[i].re;
        }
        rhs[(rn, 0)] = 1.0 - norm_sqr;
        rhs[(rn + 1, 0)] = -dot(&gauge, &psi).im;

        let qr = jac.col_piv_qr();
        let r_diag = qr.R();
        let r00 = r_diag[(0, 0)].abs();
        let rank_ok = (0..2 * n).all(|i| r_diag[(i, i)].abs() > 1e-13 * r00);
        if !rank_ok {
            return Err(Error::SingularJacobian { iteration });
        }
        let step = faer::linalg::solvers::SolveLstsq::solve_lstsq(&qr, &rhs);
        for i in 0..n {
            psi[i] += C64::new(step[(i, 0)], step[(n + i, 0)]);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual: last,
    })
}
