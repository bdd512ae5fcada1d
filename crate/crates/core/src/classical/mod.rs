//! Classical motion in `(x, xdot)` for `H = 3/4 xdot^4 - kappa/2 xdot^2 + V(x)`.
//!
//! The bracket `{f, g} = (f_x g_xdot - f_xdot g_x) / (3 xdot^2 - kappa)` gives
//! `dx/dt = xdot` and `dxdot/dt = -V'(x) / (3 xdot^2 - kappa)`, singular on the
//! lines `3 xdot^2 = kappa`. Those lines are approached through the
//! reparametrized flow `dt/dsigma = |3 xdot^2 - kappa|`, which is regular, so
//! crossings are located to machine precision in the gap itself.
//!
//! A trajectory reaches the line only with `xdot V'(x) > 0`, and there the
//! physical time is at a maximum along the flow line. No solution continues
//! it with the same velocity. The states that do leave forward in time start
//! from the mirrored velocity `-xdot`, on either side of the line.

mod rk;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{Branch, DispersionLaw};
use crate::potential::PotentialSpec;

/// `|3 xdot^2 - kappa|` at or below this is treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;
/// Relative width (in units of `kappa`) of the band where the flow is
/// reparametrized.
const BAND: f64 = 1e-2;
/// Target `|3 xdot^2 - kappa| / kappa` when locating an event.
const EVENT_GAP: f64 = 1e-13;
const MIN_STEP: f64 = 1e-13;
const MAX_EVENTS: usize = 10_000;
const MAX_STEPS: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: f64,
    pub xdot: f64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DegeneracyPolicy {
    /// End the trajectory at the first event.
    #[default]
    Halt,
    /// Integrate straight through in physical time; fails by step underflow
    /// unless the force vanishes on the line.
    ContinueThrough,
    /// Leave each event from the mirrored velocity, choosing the side of the
    /// line with a seeded generator.
    RandomBranch { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Departure {
    None,
    /// Leaves with `|xdot| < sqrt(kappa/3)`.
    Inner,
    /// Leaves with `|xdot| > sqrt(kappa/3)`.
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyEvent {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    /// `|3 xdot^2 - kappa|` at the located point
    pub gap: f64,
    pub departure: Departure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Halted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<ClassicalState>,
    /// Marks samples that sit on an event.
    pub event_flags: Vec<bool>,
    pub events: Vec<DegeneracyEvent>,
    pub energies: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    fn start(system: &ClassicalSystem, s: ClassicalState) -> Trajectory {
        Trajectory {
            samples: vec![s],
            event_flags: vec![false],
            events: Vec::new(),
            energies: vec![system.energy(&s)],
            termination: Termination::Completed,
        }
    }

    fn push(&mut self, system: &ClassicalSystem, s: ClassicalState, event: bool) {
        let last = self.samples.last().map(|p| p.t);
        if last.is_some_and(|t| t == s.t) {
            if event {
                *self.samples.last_mut().unwrap() = s;
                *self.event_flags.last_mut().unwrap() = true;
                *self.energies.last_mut().unwrap() = system.energy(&s);
            }
            return;
        }
        self.samples.push(s);
        self.event_flags.push(event);
        self.energies.push(system.energy(&s));
    }

    pub fn last(&self) -> ClassicalState {
        *self
            .samples
            .last()
            .expect("a trajectory holds its initial state")
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV rows `t,x,xdot,p,E,branch,event` with 17 significant digits.
    pub fn write_csv(&self, out: &mut dyn Write, system: &ClassicalSystem) -> std::io::Result<()> {
        writeln!(out, "t,x,xdot,p,E,branch,event")?;
        let law = DispersionLaw::cubic(system.kappa);
        for (k, s) in self.samples.iter().enumerate() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                s.t,
                s.x,
                s.xdot,
                law.momentum_of_velocity(s.xdot),
                self.energies[k],
                system.branch_of(s.xdot).index(),
                u8::from(self.event_flags[k])
            )?;
        }
        Ok(())
    }
}

/// Failure with everything integrated up to that point.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} samples, t = {})",
            self.error,
            self.partial.samples.len(),
            self.partial.last().t
        )
    }
}

impl std::error::Error for IntegrationFailure {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationOptions {
    /// Absolute and relative step tolerance.
    pub tol: f64,
    pub policy: DegeneracyPolicy,
    /// Record only multiples of this interval (plus events and the end).
    pub sample_interval: Option<f64>,
    pub degeneracy_tolerance: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            tol: 1e-12,
            policy: DegeneracyPolicy::Halt,
            sample_interval: None,
            degeneracy_tolerance: DEGENERACY_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSystem {
    pub kappa: f64,
    pub potential: PotentialSpec,
}

/// Outcome of a stretch of reparametrized flow.
enum SigmaExit {
    /// Back outside the band at the given state.
    Left([f64; 2], f64),
    /// Reached the end time.
    End,
    Event(DegeneracyEvent),
}

fn sample_due(next: Option<f64>, t: f64) -> bool {
    next.is_some_and(|n| t >= n)
}

impl ClassicalSystem {
    pub fn new(kappa: f64, potential: PotentialSpec) -> Self {
        ClassicalSystem { kappa, potential }
    }

    /// `3 xdot^2 - kappa`
    pub fn gap(&self, xdot: f64) -> f64 {
        3.0 * xdot * xdot - self.kappa
    }

    pub fn energy(&self, s: &ClassicalState) -> f64 {
        let v2 = s.xdot * s.xdot;
        0.75 * v2 * v2 - 0.5 * self.kappa * v2 + self.potential.eval(s.x)
    }

    pub fn branch_of(&self, xdot: f64) -> Branch {
        let edge = (self.kappa.max(0.0) / 3.0).sqrt();
        if xdot < -edge {
            Branch::One
        } else if xdot > edge {
            Branch::Three
        } else {
            Branch::Two
        }
    }

    /// `(dH/dx, dH/dxdot)`
    pub fn hamiltonian_gradient(&self, s: &ClassicalState) -> (f64, f64) {
        (
            self.potential.derivative(s.x),
            s.xdot * (3.0 * s.xdot * s.xdot - self.kappa),
        )
    }

    /// `{f, g}` from the gradients of `f` and `g` at a state.
    pub fn bracket(
        &self,
        df: (f64, f64),
        dg: (f64, f64),
        s: &ClassicalState,
        tol: f64,
    ) -> Result<f64> {
        let gap = self.gap(s.xdot);
        if gap.abs() <= tol {
            return Err(Error::Degeneracy {
                xdot: s.xdot,
                gap: gap.abs(),
            });
        }
        Ok((df.0 * dg.1 - df.1 * dg.0) / gap)
    }

    /// `({x, H}, {xdot, H})`
    pub fn hamilton_rhs(&self, s: &ClassicalState) -> Result<(f64, f64)> {
        self.hamilton_rhs_with(s, DEGENERACY_TOLERANCE)
    }

    fn hamilton_rhs_with(&self, s: &ClassicalState, tol: f64) -> Result<(f64, f64)> {
        let grad = self.hamiltonian_gradient(s);
        Ok((
            self.bracket((1.0, 0.0), grad, s, tol)?,
            self.bracket((0.0, 1.0), grad, s, tol)?,
        ))
    }

    /// `L = xdot^4/4 - kappa xdot^2/2 - V(x)` and its partial derivatives
    /// `(L_x, L_xdot, L_xdot_xdot)`.
    fn lagrangian_partials(&self, x: f64, v: f64) -> (f64, f64, f64) {
        (
            -self.potential.derivative(x),
            v * v * v - self.kappa * v,
            3.0 * v * v - self.kappa,
        )
    }

    /// Euler-Lagrange acceleration from `L_xdot_xdot a = L_x`.
    fn lagrange_acceleration(&self, x: f64, v: f64, tol: f64) -> Result<f64> {
        let (lx, _, m) = self.lagrangian_partials(x, v);
        if m.abs() <= tol {
            return Err(Error::Degeneracy {
                xdot: v,
                gap: m.abs(),
            });
        }
        Ok(lx / m)
    }

    fn band(&self) -> f64 {
        BAND * self.kappa.abs()
    }

    fn check_start(&self, s: &ClassicalState, options: &IntegrationOptions) -> Result<()> {
        if !(s.x.is_finite() && s.xdot.is_finite() && s.t.is_finite()) {
            return Err(Error::Parse(format!("non-finite initial state {s:?}")));
        }
        let gap = self.gap(s.xdot).abs();
        if self.kappa > 0.0 && gap <= options.degeneracy_tolerance {
            return Err(Error::Degeneracy { xdot: s.xdot, gap });
        }
        Ok(())
    }

    /// Adaptive Dormand-Prince integration of the bracket equations over
    /// `[t0, t0 + duration]` with degeneracy events handled by `options.policy`.
    pub fn integrate_hamilton(
        &self,
        s0: ClassicalState,
        duration: f64,
        options: &IntegrationOptions,
    ) -> std::result::Result<Trajectory, IntegrationFailure> {
        let mut traj = Trajectory::start(self, s0);
        let fail = |e: Error, traj: &Trajectory| IntegrationFailure {
            error: e,
            partial: traj.clone(),
        };
        self.check_start(&s0, options).map_err(|e| fail(e, &traj))?;
        if !(duration >= 0.0) {
            return Err(fail(
                Error::Parse(format!("duration must be non-negative, got {duration}")),
                &traj,
            ));
        }
        let mut rng = match options.policy {
            DegeneracyPolicy::RandomBranch { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let regularize = options.policy != DegeneracyPolicy::ContinueThrough && self.kappa > 0.0;
        let t_end = s0.t + duration;
        let mut next_sample = options.sample_interval.map(|dt| s0.t + dt);
        let rhs = |y: &[f64; 2]| {
            let (a, b) = self.hamilton_rhs_with(
                &ClassicalState {
                    x: y[0],
                    xdot: y[1],
                    t: 0.0,
                },
                options.degeneracy_tolerance,
            )?;
            Ok([a, b])
        };
        let mut y = [s0.x, s0.xdot];
        let mut t = s0.t;
        let mut h = (0.01f64).min(duration.max(MIN_STEP));
        let mut steps = 0usize;
        while t < t_end {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(fail(
                    Error::NoConvergence {
                        iterations: steps,
                        residual: t_end - t,
                    },
                    &traj,
                ));
            }
            let g = self.gap(y[1]);
            if regularize && g.abs() < self.band() && y[1] * self.potential.derivative(y[0]) > 0.0 {
                let d = g.signum();
                match self.sigma_phase(y, t, d, t_end, options, &mut next_sample, &mut traj) {
                    Err(e) => return Err(fail(e, &traj)),
                    Ok(SigmaExit::Left(y1, t1)) => {
                        y = y1;
                        t = t1;
                        continue;
                    }
                    Ok(SigmaExit::End) => break,
                    Ok(SigmaExit::Event(mut ev)) => {
                        if traj.events.len() >= MAX_EVENTS {
                            return Err(fail(
                                Error::NoConvergence {
                                    iterations: MAX_EVENTS,
                                    residual: ev.gap,
                                },
                                &traj,
                            ));
                        }
                        let Some(rng) = rng.as_mut() else {
                            traj.push(
                                self,
                                ClassicalState {
                                    x: ev.x,
                                    xdot: ev.xdot,
                                    t: ev.t,
                                },
                                true,
                            );
                            traj.events.push(ev);
                            traj.termination = Termination::Halted;
                            return Ok(traj);
                        };
                        let outer = rng.random_bool(0.5);
                        ev.departure = if outer {
                            Departure::Outer
                        } else {
                            Departure::Inner
                        };
                        traj.push(
                            self,
                            ClassicalState {
                                x: ev.x,
                                xdot: ev.xdot,
                                t: ev.t,
                            },
                            true,
                        );
                        traj.events.push(ev);
                        let force = self.potential.derivative(ev.x);
                        if force == 0.0 {
                            return Err(fail(
                                Error::Degeneracy {
                                    xdot: ev.xdot,
                                    gap: ev.gap,
                                },
                                &traj,
                            ));
                        }
                        let arriving = (ev.xdot * force).signum();
                        let d = if outer { arriving } else { -arriving };
                        match self.sigma_phase(
                            [ev.x, -ev.xdot],
                            ev.t,
                            d,
                            t_end,
                            options,
                            &mut next_sample,
                            &mut traj,
                        ) {
                            Err(e) => return Err(fail(e, &traj)),
                            Ok(SigmaExit::Left(y1, t1)) => {
                                y = y1;
                                t = t1;
                                continue;
                            }
                            Ok(SigmaExit::End) => break,
                            Ok(SigmaExit::Event(_)) => {
                                return Err(fail(
                                    Error::Degeneracy {
                                        xdot: ev.xdot,
                                        gap: ev.gap,
                                    },
                                    &traj,
                                ));
                            }
                        }
                    }
                }
            }
            let target = next_sample.map_or(t_end, |n| n.min(t_end));
            let landing = h >= target - t;
            let hh = if landing { target - t } else { h };
            if hh < MIN_STEP * t.abs().max(1.0) && !landing {
                return Err(fail(Error::StepUnderflow { t, h: hh }, &traj));
            }
            let Ok((y1, err)) = rk::step(&rhs, &y, hh) else {
                h = hh * 0.25;
                if h < MIN_STEP * t.abs().max(1.0) {
                    return Err(fail(Error::StepUnderflow { t, h }, &traj));
                }
                continue;
            };
            let e = rk::error_norm(&y, &y1, &err, options.tol);
            let crossed = regularize && self.gap(y[1]) * self.gap(y1[1]) <= 0.0;
            if !e.is_finite() || e > 1.0 || crossed {
                h = if crossed || !e.is_finite() {
                    hh * 0.25
                } else {
                    rk::rescale(hh, e)
                };
                if h < MIN_STEP * t.abs().max(1.0) {
                    return Err(fail(Error::StepUnderflow { t, h }, &traj));
                }
                continue;
            }
            t = if landing { target } else { t + hh };
            y = y1;
            let s = ClassicalState {
                x: y[0],
                xdot: y[1],
                t,
            };
            if options.sample_interval.is_none() || sample_due(next_sample, t) || t >= t_end {
                traj.push(self, s, false);
            }
            if let (Some(n), Some(dt)) = (next_sample.as_mut(), options.sample_interval) {
                while *n <= t {
                    *n += dt;
                }
            }
            h = rk::rescale(hh, e);
        }
        Ok(traj)
    }

    /// Reparametrized flow `d(x, xdot, t)/dsigma = d (H_xdot, -V', gap)` from
    /// `(y, t)` with `d gap > 0`, so `t` increases.
    #[allow(clippy::too_many_arguments)]
    fn sigma_phase(
        &self,
        y: [f64; 2],
        t: f64,
        d: f64,
        t_end: f64,
        options: &IntegrationOptions,
        next_sample: &mut Option<f64>,
        traj: &mut Trajectory,
    ) -> Result<SigmaExit> {
        let f = |z: &[f64; 3]| {
            let g = self.gap(z[1]);
            Ok([d * z[1] * g, -d * self.potential.derivative(z[0]), d * g])
        };
        let mut z = [y[0], y[1], t];
        let force = self.potential.derivative(y[0]).abs().max(1e-300);
        let mut h = 0.05 * self.band() / (6.0 * y[1].abs() * force).max(1e-300);
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > MAX_STEPS || h < 1e-300 {
                return Err(Error::StepUnderflow { t: z[2], h });
            }
            let (z1, err) = rk::step(&f, &z, h)?;
            let e = rk::error_norm(&z, &z1, &err, options.tol);
            if !e.is_finite() || e > 1.0 {
                h = rk::rescale(h, if e.is_finite() { e } else { 1e6 });
                continue;
            }
            let g1 = self.gap(z1[1]);
            let end_inside = z1[2] >= t_end;
            let sample_inside = sample_due(*next_sample, z1[2]);
            if d * g1 <= 0.0 {
                let (ze, gap) = self.bisect_event(&f, &z, h, d);
                if ze[2] > t_end || sample_due(*next_sample, ze[2]) {
                    // a time target comes first; land on it and retry
                    let target = next_sample.map_or(t_end, |n| n.min(t_end));
                    z = self.land(&f, &z, h, target);
                    if self.record_landing(z, t_end, options, next_sample, traj) {
                        return Ok(SigmaExit::End);
                    }
                    continue;
                }
                return Ok(SigmaExit::Event(DegeneracyEvent {
                    t: ze[2],
                    x: ze[0],
                    xdot: ze[1],
                    gap,
                    departure: Departure::None,
                }));
            }
            if end_inside || sample_inside {
                let target = next_sample.map_or(t_end, |n| n.min(t_end));
                z = self.land(&f, &z, h, target);
                if self.record_landing(z, t_end, options, next_sample, traj) {
                    return Ok(SigmaExit::End);
                }
                continue;
            }
            z = z1;
            if options.sample_interval.is_none() {
                traj.push(
                    self,
                    ClassicalState {
                        x: z[0],
                        xdot: z[1],
                        t: z[2],
                    },
                    false,
                );
            }
            h = rk::rescale(h, e);
            if g1.abs() > 1.5 * self.band() {
                return Ok(SigmaExit::Left([z[0], z[1]], z[2]));
            }
        }
    }

    /// Records a state placed exactly on a sample or end time; true at the end.
    fn record_landing(
        &self,
        z: [f64; 3],
        t_end: f64,
        options: &IntegrationOptions,
        next_sample: &mut Option<f64>,
        traj: &mut Trajectory,
    ) -> bool {
        traj.push(
            self,
            ClassicalState {
                x: z[0],
                xdot: z[1],
                t: z[2],
            },
            false,
        );
        if let (Some(n), Some(dt)) = (next_sample.as_mut(), options.sample_interval) {
            while *n <= z[2] {
                *n += dt;
            }
        }
        z[2] >= t_end
    }

    /// Partial step from `z` whose time coordinate equals `target`.
    fn land(
        &self,
        f: &dyn Fn(&[f64; 3]) -> Result<[f64; 3]>,
        z: &[f64; 3],
        h: f64,
        target: f64,
    ) -> [f64; 3] {
        let (mut lo, mut hi) = (0.0, h);
        let mut best = *z;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let Ok((zm, _)) = rk::step(f, z, mid) else {
                break;
            };
            best = zm;
            if zm[2] < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        best[2] = target;
        best
    }

    /// Zero of the gap inside a reparametrized step, by bisection.
    fn bisect_event(
        &self,
        f: &dyn Fn(&[f64; 3]) -> Result<[f64; 3]>,
        z: &[f64; 3],
        h: f64,
        d: f64,
    ) -> ([f64; 3], f64) {
        let (mut lo, mut hi) = (0.0, h);
        let mut best = (*z, self.gap(z[1]).abs());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let Ok((zm, _)) = rk::step(f, z, mid) else {
                break;
            };
            let g = self.gap(zm[1]);
            if g.abs() < best.1 {
                best = (zm, g.abs());
            }
            if d * g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if best.1 <= EVENT_GAP * self.kappa.abs() || hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        best
    }

    /// Same motion from `L_xdot_xdot xddot = L_x`, integrated in physical time
    /// in either direction. Approaches to the degenerate line switch to
    /// `xdot` as the independent variable and end the trajectory there.
    pub fn integrate_euler_lagrange(
        &self,
        s0: ClassicalState,
        duration: f64,
        options: &IntegrationOptions,
    ) -> std::result::Result<Trajectory, IntegrationFailure> {
        let mut traj = Trajectory::start(self, s0);
        let fail = |e: Error, traj: &Trajectory| IntegrationFailure {
            error: e,
            partial: traj.clone(),
        };
        self.check_start(&s0, options).map_err(|e| fail(e, &traj))?;
        let dir = if duration < 0.0 { -1.0 } else { 1.0 };
        let t_end = s0.t + duration;
        let tol = options.degeneracy_tolerance;
        let rhs = |y: &[f64; 2]| {
            Ok([
                dir * y[1],
                dir * self.lagrange_acceleration(y[0], y[1], tol)?,
            ])
        };
        let mut y = [s0.x, s0.xdot];
        // elapsed time in the integration direction
        let mut tau = 0.0;
        let total = duration.abs();
        let mut next_sample = options.sample_interval.map(|dt| dt.abs());
        let mut h = (0.01f64).min(total.max(MIN_STEP));
        while tau < total {
            let g = self.gap(y[1]);
            let force = self.potential.derivative(y[0]);
            if self.kappa > 0.0 && g.abs() < self.band() && dir * y[1] * force > 0.0 {
                let s = self
                    .velocity_phase(y, s0.t + dir * tau, t_end, dir, options)
                    .map_err(|e| fail(e, &traj))?;
                let (state, ev) = s;
                match ev {
                    Some(ev) => {
                        traj.push(self, state, true);
                        traj.events.push(ev);
                        traj.termination = Termination::Halted;
                    }
                    None => traj.push(self, state, false),
                }
                return Ok(traj);
            }
            let target = next_sample.map_or(total, |n| n.min(total));
            let landing = h >= target - tau;
            let hh = if landing { target - tau } else { h };
            let Ok((y1, err)) = rk::step(&rhs, &y, hh) else {
                h = hh * 0.25;
                if h < MIN_STEP {
                    return Err(fail(
                        Error::StepUnderflow {
                            t: s0.t + dir * tau,
                            h,
                        },
                        &traj,
                    ));
                }
                continue;
            };
            let e = rk::error_norm(&y, &y1, &err, options.tol);
            let crossed = self.kappa > 0.0 && self.gap(y[1]) * self.gap(y1[1]) <= 0.0;
            if !e.is_finite() || e > 1.0 || crossed {
                h = if crossed || !e.is_finite() {
                    hh * 0.25
                } else {
                    rk::rescale(hh, e)
                };
                if h < MIN_STEP {
                    return Err(fail(
                        Error::StepUnderflow {
                            t: s0.t + dir * tau,
                            h,
                        },
                        &traj,
                    ));
                }
                continue;
            }
            tau = if landing { target } else { tau + hh };
            y = y1;
            let t = if tau >= total {
                t_end
            } else {
                s0.t + dir * tau
            };
            if options.sample_interval.is_none() || sample_due(next_sample, tau) || tau >= total {
                traj.push(
                    self,
                    ClassicalState {
                        x: y[0],
                        xdot: y[1],
                        t,
                    },
                    false,
                );
            }
            if let (Some(n), Some(dt)) = (next_sample.as_mut(), options.sample_interval) {
                while *n <= tau {
                    *n += dt.abs();
                }
            }
            h = rk::rescale(hh, e);
        }
        Ok(traj)
    }

    /// Integrates `d(x, t)/dxdot = (xdot, 1) L_xdot_xdot / L_x` up to the
    /// degenerate velocity, or to `t_end` if that comes first.
    fn velocity_phase(
        &self,
        y: [f64; 2],
        t0: f64,
        t_end: f64,
        dir: f64,
        options: &IntegrationOptions,
    ) -> Result<(ClassicalState, Option<DegeneracyEvent>)> {
        let edge = (self.kappa / 3.0).sqrt() * y[1].signum();
        let f = |z: &[f64; 3]| {
            // z = (xdot, x, t) with xdot the independent variable
            let (lx, _, m) = self.lagrangian_partials(z[1], z[0]);
            if lx == 0.0 {
                return Err(Error::Degeneracy {
                    xdot: z[0],
                    gap: m.abs(),
                });
            }
            Ok([1.0, z[0] * m / lx, m / lx])
        };
        let span = edge - y[1];
        let n = 64;
        let dv = span / n as f64;
        let mut z = [y[1], y[0], t0];
        for _ in 0..n {
            let (z1, err) = rk::step(&f, &z, dv)?;
            if rk::error_norm(&z, &z1, &err, options.tol * 1e3) > 1.0 {
                return self.velocity_phase_adaptive(&f, z, edge, t_end, dir, options);
            }
            if (z1[2] - t_end) * dir > 0.0 {
                return Ok((self.velocity_land(&f, &z, dv, t_end, dir), None));
            }
            z = z1;
        }
        let s = ClassicalState {
            x: z[1],
            xdot: edge,
            t: z[2],
        };
        let gap = self.gap(edge).abs();
        Ok((
            s,
            Some(DegeneracyEvent {
                t: z[2],
                x: z[1],
                xdot: edge,
                gap,
                departure: Departure::None,
            }),
        ))
    }

    fn velocity_phase_adaptive(
        &self,
        f: &dyn Fn(&[f64; 3]) -> Result<[f64; 3]>,
        mut z: [f64; 3],
        edge: f64,
        t_end: f64,
        dir: f64,
        options: &IntegrationOptions,
    ) -> Result<(ClassicalState, Option<DegeneracyEvent>)> {
        let mut h = (edge - z[0]) / 1024.0;
        for _ in 0..MAX_STEPS {
            let landing = h.abs() >= (edge - z[0]).abs();
            let hh = if landing { edge - z[0] } else { h };
            let (z1, err) = rk::step(f, &z, hh)?;
            let e = rk::error_norm(&z, &z1, &err, options.tol);
            if e > 1.0 {
                h = rk::rescale(hh, e);
                continue;
            }
            if (z1[2] - t_end) * dir > 0.0 {
                return Ok((self.velocity_land(f, &z, hh, t_end, dir), None));
            }
            z = z1;
            if landing {
                let gap = self.gap(edge).abs();
                let s = ClassicalState {
                    x: z[1],
                    xdot: edge,
                    t: z[2],
                };
                return Ok((
                    s,
                    Some(DegeneracyEvent {
                        t: z[2],
                        x: z[1],
                        xdot: edge,
                        gap,
                        departure: Departure::None,
                    }),
                ));
            }
            h = rk::rescale(hh, e);
        }
        Err(Error::NoConvergence {
            iterations: MAX_STEPS,
            residual: edge - z[0],
        })
    }

    fn velocity_land(
        &self,
        f: &dyn Fn(&[f64; 3]) -> Result<[f64; 3]>,
        z: &[f64; 3],
        h: f64,
        t_end: f64,
        dir: f64,
    ) -> ClassicalState {
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut best = *z;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let Ok((zm, _)) = rk::step(f, z, mid * h) else {
                break;
            };
            best = zm;
            if (zm[2] - t_end) * dir < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON {
                break;
            }
        }
        ClassicalState {
            x: best[1],
            xdot: best[0],
            t: t_end,
        }
    }
}

/// Largest `|x_a - x_b|` or `|xdot_a - xdot_b|` over samples at equal times.
pub fn sup_distance(a: &Trajectory, b: &Trajectory) -> Option<f64> {
    if a.samples.len() != b.samples.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (p, q) in a.samples.iter().zip(&b.samples) {
        if (p.t - q.t).abs() > 1e-12 * p.t.abs().max(1.0) {
            return None;
        }
        worst = worst.max((p.x - q.x).abs()).max((p.xdot - q.xdot).abs());
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> ClassicalSystem {
        ClassicalSystem::new(3.0, PotentialSpec::harmonic(1.0))
    }

    fn state(x: f64, xdot: f64) -> ClassicalState {
        ClassicalState { x, xdot, t: 0.0 }
    }

    #[test]
    fn bracket_values() {
        let sys = harmonic();
        let (dx, dv) = sys.hamilton_rhs(&state(1.0, 2.0)).unwrap();
        assert!((dx - 2.0).abs() < 1e-14);
        assert!((dv + 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(sys.energy(&state(1.0, 0.0)), 0.5);
        let free = ClassicalSystem::new(3.0, PotentialSpec::zero());
        assert_eq!(free.energy(&state(0.0, 2.0)), 6.0);
        assert!(matches!(
            sys.hamilton_rhs(&state(0.0, 1.0)),
            Err(Error::Degeneracy { .. })
        ));
    }

    #[test]
    fn uniform_motion() {
        let free = ClassicalSystem::new(3.0, PotentialSpec::zero());
        let tr = free
            .integrate_hamilton(state(0.5, 2.0), 5.0, &IntegrationOptions::default())
            .unwrap();
        let end = tr.last();
        assert!((end.t - 5.0).abs() < 1e-15);
        assert!((end.x - 10.5).abs() < 1e-10);
        let el = free
            .integrate_euler_lagrange(state(0.5, 2.0), 5.0, &IntegrationOptions::default())
            .unwrap();
        assert!((el.last().x - 10.5).abs() < 1e-10);
    }

    #[test]
    fn outer_branch_in_a_well_halts_at_the_edge() {
        let sys = harmonic();
        let tr = sys
            .integrate_hamilton(state(0.0, 2.0), 50.0, &IntegrationOptions::default())
            .unwrap();
        assert_eq!(tr.termination, Termination::Halted);
        assert_eq!(tr.events.len(), 1);
        let ev = tr.events[0];
        assert!(ev.gap < DEGENERACY_TOLERANCE);
        // energy 6 meets the edge energy -3/4 where x^2/2 = 27/4
        assert!((ev.x - 13.5f64.sqrt()).abs() < 1e-10, "{}", ev.x);
        assert!((ev.xdot - 1.0).abs() < 1e-10);
        assert!(tr.energy_drift() < 1e-8);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        let el = sys
            .integrate_euler_lagrange(state(0.0, 2.0), 50.0, &IntegrationOptions::default())
            .unwrap();
        assert_eq!(el.termination, Termination::Halted);
        assert!((el.events[0].t - ev.t).abs() < 1e-8);
        assert!(el.events[0].gap < DEGENERACY_TOLERANCE);
    }

    #[test]
    fn inner_branch_oscillation_matches_the_oracle() {
        let sys = ClassicalSystem::new(3.0, PotentialSpec::harmonic(-1.0));
        let options = IntegrationOptions {
            sample_interval: Some(0.1),
            ..Default::default()
        };
        let a = sys
            .integrate_hamilton(state(0.3, 0.4), 50.0, &options)
            .unwrap();
        let b = sys
            .integrate_euler_lagrange(state(0.3, 0.4), 50.0, &options)
            .unwrap();
        assert_eq!(a.termination, Termination::Completed);
        assert_eq!(a.samples.len(), 501);
        assert!(sup_distance(&a, &b).unwrap() < 1e-8);
        assert!(a.energy_drift() < 1e-8);
    }

    #[test]
    fn euler_lagrange_is_reversible() {
        let sys = ClassicalSystem::new(3.0, PotentialSpec::harmonic(-1.0));
        let options = IntegrationOptions::default();
        let fwd = sys
            .integrate_euler_lagrange(state(0.3, 0.4), 20.0, &options)
            .unwrap();
        let back = sys
            .integrate_euler_lagrange(fwd.last(), -20.0, &options)
            .unwrap();
        let end = back.last();
        assert!(end.t.abs() < 1e-12);
        assert!((end.x - 0.3).abs() < 1e-7 && (end.xdot - 0.4).abs() < 1e-7);
    }

    #[test]
    fn random_branch_is_seeded_and_leaves_forward() {
        let sys = harmonic();
        let options = IntegrationOptions {
            policy: DegeneracyPolicy::RandomBranch { seed: 42 },
            ..Default::default()
        };
        let a = sys
            .integrate_hamilton(state(0.0, 2.0), 30.0, &options)
            .unwrap();
        let b = sys
            .integrate_hamilton(state(0.0, 2.0), 30.0, &options)
            .unwrap();
        assert_eq!(a, b);
        assert!(!a.events.is_empty());
        assert!(a
            .events
            .iter()
            .all(|e| e.gap < DEGENERACY_TOLERANCE && e.departure != Departure::None));
        assert!(a.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!((a.last().t - 30.0).abs() < 1e-12);
        assert!(a.energy_drift() < 1e-7, "{}", a.energy_drift());
    }

    #[test]
    fn continue_through_underflows_with_a_partial_trajectory() {
        let sys = harmonic();
        let options = IntegrationOptions {
            policy: DegeneracyPolicy::ContinueThrough,
            ..Default::default()
        };
        let err = sys
            .integrate_hamilton(state(0.0, 2.0), 50.0, &options)
            .unwrap_err();
        assert!(matches!(
            err.error,
            Error::StepUnderflow { .. } | Error::Degeneracy { .. }
        ));
        assert!(err.partial.samples.len() > 10);
        assert!(err.partial.last().t > 1.0);
    }

    #[test]
    fn degenerate_start_rejected() {
        let sys = harmonic();
        assert!(sys
            .integrate_hamilton(state(0.0, 1.0), 1.0, &IntegrationOptions::default())
            .is_err());
    }
}
