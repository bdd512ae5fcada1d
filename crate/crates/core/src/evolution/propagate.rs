//! Crank-Nicolson stepping `(I + i H dt/2) psi_{n+1} = (I - i H dt/2) psi_n`
//! with one sparse LU factorization per run.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64 as C64;

use super::current::{junction_flux_residual, CurrentLaw};
use super::MultiWave;
use crate::error::{Error, Result};
use crate::geometry::Junction;
use crate::operators::sparse::SparseRows;
use crate::operators::OperatorMatrix;

/// Accepted `|norm - 1|` of the initial state.
const NORM_TOLERANCE: f64 = 1e-8;
const POWER_ITERATIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationOptions {
    /// Upper bound on `dt max|lambda(H)|`. Crank-Nicolson is stable for any
    /// `dt`; the bound only controls phase accuracy. `None` disables it.
    pub budget: Option<f64>,
    /// Keep a copy of the state every this many steps (0: none).
    pub snapshot_every: usize,
    /// Current used for the junction flux series; none for unfolded states.
    pub current: Option<CurrentLaw>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            budget: Some(0.5),
            snapshot_every: 0,
            current: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvolutionReport {
    /// `times[0]` is the initial time; one entry per step after that.
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    /// `[q_minus, q_plus]` junction residuals per recorded time.
    pub junction_flux: Vec<[f64; 2]>,
    pub snapshots: Vec<MultiWave>,
}

impl EvolutionReport {
    pub fn norm_drift(&self) -> f64 {
        self.norms
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies.first().copied().unwrap_or(0.0);
        self.energies
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_junction_flux(&self) -> f64 {
        self.junction_flux
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// `max|lambda|` of a Hermitian matrix by power iteration.
pub fn spectral_radius(h: &SparseRows) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 * 0.618).sin() * 0.5, 0.0))
        .collect();
    let mut radius = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        v = h.matvec(&v);
        radius = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    radius
}

pub fn propagate(
    h: &OperatorMatrix,
    psi0: &MultiWave,
    dt: f64,
    steps: usize,
) -> Result<(MultiWave, EvolutionReport)> {
    propagate_with(h, psi0, dt, steps, &PropagationOptions::default())
}

/// Runs `steps` Crank-Nicolson steps and records norm, energy and junction
/// flux after each.
pub fn propagate_with(
    h: &OperatorMatrix,
    psi0: &MultiWave,
    dt: f64,
    steps: usize,
    options: &PropagationOptions,
) -> Result<(MultiWave, EvolutionReport)> {
    let n = h.dimension();
    if psi0.values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi0.values.len(),
        });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::SingularPropagator { dt });
    }
    let hs = h.to_sparse();
    if let Some(budget) = options.budget {
        let product = dt.abs() * spectral_radius(&hs);
        if product > budget {
            return Err(Error::StabilityBudget { product, budget });
        }
    }

    let half = C64::new(0.0, 0.5 * dt);
    let mut triplets = Vec::new();
    let mut explicit = SparseRows::identity(n);
    for r in 0..n {
        let mut diagonal = C64::new(1.0, 0.0);
        for &(c, v) in hs.row(r) {
            if c == r {
                diagonal += half * v;
            } else {
                triplets.push(Triplet {
                    row: r,
                    col: c,
                    val: half * v,
                });
            }
            explicit.add(r, c, -half * v);
        }
        triplets.push(Triplet {
            row: r,
            col: r,
            val: diagonal,
        });
    }
    let implicit = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|_| Error::SingularPropagator { dt })?;
    let lu = implicit
        .sp_lu()
        .map_err(|_| Error::SingularPropagator { dt })?;

    let mut state = MultiWave {
        ghosts: None,
        ..psi0.clone()
    };
    let mut report = EvolutionReport::default();
    let record = |w: &MultiWave, report: &mut EvolutionReport| -> Result<()> {
        report.times.push(w.time);
        report.norms.push(w.norm());
        report.energies.push(w.energy(h));
        if let (Some(law), true) = (options.current, w.representation.is_folded()) {
            if w.representation.grid().domain.is_branched() {
                report.junction_flux.push([
                    junction_flux_residual(w, Junction::Minus, &law)?,
                    junction_flux_residual(w, Junction::Plus, &law)?,
                ]);
            }
        }
        Ok(())
    };
    record(&state, &mut report)?;
    if options.snapshot_every > 0 {
        report.snapshots.push(state.clone());
    }
    let mut rhs = Mat::<C64>::zeros(n, 1);
    for step in 1..=steps {
        let b = explicit.matvec(&state.values);
        for (i, v) in b.iter().enumerate() {
            rhs[(i, 0)] = *v;
        }
        lu.solve_in_place(rhs.as_mut());
        for i in 0..n {
            let v = rhs[(i, 0)];
            if !v.is_finite() {
                return Err(Error::SingularPropagator { dt });
            }
            state.values[i] = v;
        }
        state.time = psi0.time + step as f64 * dt;
        record(&state, &mut report)?;
        if options.snapshot_every > 0 && step % options.snapshot_every == 0 {
            report.snapshots.push(state.clone());
        }
    }
    Ok((state, report))
}
