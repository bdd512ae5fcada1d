//! One runner per mode. Each writes its results into an [`OutputDir`].

use std::fmt;
use std::io::{self, Write};

use branchq::classical::{
    sup_distance, ClassicalState, ClassicalSystem, DegeneracyPolicy, Departure, IntegrationOptions,
    Termination, Trajectory,
};
use branchq::evolution::{
    propagate_with, CurrentLaw, MultiWave, PropagationOptions, Representation,
};
use branchq::graph::{graph_hamiltonian, parse_graph, MetricGraph, Resolution};
use branchq::operators::{
    build_convolution_hamiltonian, build_folded_hamiltonian, build_fourier_conjugate_hamiltonian,
    build_unfolded_hamiltonian, DifferentialSymbol, KernelMode, KernelSpec,
};
use branchq::spectra::{rayleigh_refine, solve_eigensystem, EigenResult};
use branchq::{Branch, CoordinateKind, Grid, OperatorMatrix};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::config::{
    ConfigError, ExperimentConfig, GraphPreset, Integrator, Mode, Picture, PolicyName,
    DEFAULT_NODES,
};
use crate::output::OutputDir;
use crate::sweep::fan_out;

/// Why a run stopped early.
#[derive(Debug)]
pub enum Failure {
    /// exit status 2
    Config(ConfigError),
    /// exit status 3; `module` names the stage that failed
    Numerical {
        module: &'static str,
        message: String,
    },
}

impl Failure {
    fn numerical(module: &'static str, e: impl fmt::Display) -> Failure {
        Failure::Numerical {
            module,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical { .. } => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Numerical { module, message } => write!(f, "{module}: {message}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::numerical("output", e)
}

fn config(field: &str, e: impl fmt::Display) -> Failure {
    Failure::Config(ConfigError(format!("field `{field}`: {e}")))
}

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir, jobs: usize) -> Result<(), Failure> {
    match cfg.mode()? {
        Mode::Spectrum => spectrum(cfg, out),
        Mode::Evolve => evolve(cfg, out),
        Mode::Graph => graph(cfg, out),
        Mode::Classical => classical(cfg, out, jobs),
        Mode::Kernel => kernel(cfg, out),
        Mode::Verify => verify(cfg, out, jobs),
        Mode::Dispersion => dispersion(cfg, out),
    }
}

fn build_grid(cfg: &ExperimentConfig) -> Result<Grid, Failure> {
    let g = &cfg.grid;
    let domain = cfg.dispersion.law().domain();
    let kind = match g.picture() {
        Picture::Folded => CoordinateKind::FoldedP,
        Picture::Unfolded => CoordinateKind::UnfoldedXi,
    };
    let grid = if g.periodic {
        Grid::periodic(
            kind,
            domain,
            g.n.unwrap_or(DEFAULT_NODES),
            g.h.unwrap_or(0.1),
        )
    } else if let Some(h) = g.h {
        Grid::with_spacing(kind, domain, h, g.half_width)
    } else {
        Grid::with_count(kind, domain, g.n.unwrap_or(DEFAULT_NODES), g.half_width)
    };
    grid.map_err(|e| config("grid", e))
}

fn hamiltonian(cfg: &ExperimentConfig, grid: &Grid) -> Result<OperatorMatrix, Failure> {
    let law = cfg.dispersion.law();
    match cfg.grid.picture() {
        Picture::Folded => build_folded_hamiltonian(&law, grid, &cfg.potential),
        Picture::Unfolded => build_unfolded_hamiltonian(&law, grid, &cfg.potential),
    }
    .map_err(|e| Failure::numerical("operators", e))
}

fn picture_name(p: Picture) -> &'static str {
    match p {
        Picture::Folded => "folded",
        Picture::Unfolded => "unfolded",
    }
}

/// Scales an orthonormal eigenvector to `h sum |psi|^2 = 1` and fixes its
/// phase so the largest component is real and positive.
fn grid_normalized(v: &[C64], h: f64) -> Vec<C64> {
    let peak = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = if peak.norm() > 0.0 {
        peak.conj() / peak.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let s = phase / h.sqrt();
    v.iter().map(|z| z * s).collect()
}

#[derive(Serialize)]
struct SpectrumSummary {
    picture: &'static str,
    dimension: usize,
    spacing: f64,
    hermiticity_defect: f64,
    max_abs: f64,
    orthonormality_defect: f64,
    max_residual: f64,
    refined: bool,
}

fn spectrum(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let grid = build_grid(cfg)?;
    let h = hamiltonian(cfg, &grid)?;
    let levels = cfg.spectrum.levels;
    if levels > h.dimension() {
        return Err(config(
            "spectrum.levels",
            format!("{levels} exceeds the dimension {}", h.dimension()),
        ));
    }
    let eig: EigenResult =
        solve_eigensystem(&h, levels).map_err(|e| Failure::numerical("spectra", e))?;
    let energies = if cfg.spectrum.refine {
        rayleigh_refine(&h, &eig).map_err(|e| Failure::numerical("spectra", e))?
    } else {
        eig.values.clone()
    };
    out.write("eigenvalues.csv", |w| {
        writeln!(w, "index,energy,residual")?;
        for (i, e) in energies.iter().enumerate() {
            writeln!(w, "{i},{e:.16e},{:.16e}", eig.residuals[i])?;
        }
        Ok(())
    })
    .map_err(io_failure)?;
    if cfg.spectrum.states {
        let rep = Representation::of(&h).map_err(|e| Failure::numerical("evolution", e))?;
        for i in 0..energies.len() {
            let psi = grid_normalized(&eig.vector(i), grid.spacing());
            out.write(&format!("states/state_{i:03}.csv"), |w| {
                writeln!(w, "dof,coordinate,unfolded,branch,re,im,rho")?;
                for (dof, z) in psi.iter().enumerate() {
                    let (q, b) = rep.coordinate(dof);
                    writeln!(
                        w,
                        "{dof},{q:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
                        rep.unfolded_coordinate(dof),
                        b.index(),
                        z.re,
                        z.im,
                        z.norm_sqr()
                    )?;
                }
                Ok(())
            })
            .map_err(io_failure)?;
        }
    }
    let summary = SpectrumSummary {
        picture: picture_name(cfg.grid.picture()),
        dimension: h.dimension(),
        spacing: grid.spacing(),
        hermiticity_defect: h.hermiticity_defect(),
        max_abs: h.max_abs(),
        orthonormality_defect: eig.orthonormality_defect(),
        max_residual: eig.residuals.iter().copied().fold(0.0, f64::max),
        refined: cfg.spectrum.refine,
    };
    out.write_json("summary.json", &summary).map_err(io_failure)
}

#[derive(Serialize)]
struct EvolveSummary {
    picture: &'static str,
    dimension: usize,
    spacing: f64,
    steps: usize,
    final_time: f64,
    norm_drift: f64,
    energy_drift: f64,
    max_junction_flux: Option<f64>,
    initial_mean_coordinate: f64,
    final_mean_coordinate: f64,
}

fn evolve(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let e = &cfg.evolve;
    let grid = build_grid(cfg)?;
    let h = hamiltonian(cfg, &grid)?;
    let rep = Representation::of(&h).map_err(|e| Failure::numerical("evolution", e))?;
    let folded = rep.is_folded();
    let psi0 =
        MultiWave::gaussian(rep, e.packet).map_err(|e| Failure::numerical("evolution", e))?;
    let law = CurrentLaw::from_symbol(
        &DifferentialSymbol::from_position_potential(&cfg.potential)
            .map_err(|e| Failure::numerical("operators", e))?,
    );
    let options = PropagationOptions {
        budget: e.budget,
        snapshot_every: e.snapshot_every,
        current: folded.then_some(law),
    };
    let (last, report) = propagate_with(&h, &psi0, e.dt, e.steps, &options)
        .map_err(|e| Failure::numerical("evolution", e))?;
    let with_flux = report.junction_flux.len() == report.times.len();
    out.write("observables.csv", |w| {
        if with_flux {
            writeln!(w, "step,time,norm,energy,flux_minus,flux_plus")?;
        } else {
            writeln!(w, "step,time,norm,energy")?;
        }
        for k in 0..report.times.len() {
            write!(
                w,
                "{k},{:.16e},{:.16e},{:.16e}",
                report.times[k], report.norms[k], report.energies[k]
            )?;
            if with_flux {
                let [a, b] = report.junction_flux[k];
                write!(w, ",{a:.16e},{b:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
    .map_err(io_failure)?;
    let snapshots: Vec<&MultiWave> = if report.snapshots.is_empty() {
        vec![&psi0, &last]
    } else {
        let mut s: Vec<&MultiWave> = report.snapshots.iter().collect();
        if s.last().is_none_or(|w| w.time != last.time) {
            s.push(&last);
        }
        s
    };
    out.write("states.csv", |w| {
        for (k, s) in snapshots.iter().enumerate() {
            s.write_csv(w, &law, k == 0)?;
        }
        Ok(())
    })
    .map_err(io_failure)?;
    let summary = EvolveSummary {
        picture: picture_name(cfg.grid.picture()),
        dimension: h.dimension(),
        spacing: grid.spacing(),
        steps: e.steps,
        final_time: last.time,
        norm_drift: report.norm_drift(),
        energy_drift: report.energy_drift(),
        max_junction_flux: with_flux.then(|| report.max_junction_flux()),
        initial_mean_coordinate: psi0.mean_coordinate(),
        final_mean_coordinate: last.mean_coordinate(),
    };
    out.write_json("summary.json", &summary).map_err(io_failure)
}

#[derive(Serialize)]
struct GraphSummary {
    vertices: usize,
    edges: usize,
    node_conditions: usize,
    infinity_conditions: usize,
    total_conditions: usize,
    disposable_constants: usize,
    dimension: usize,
}

fn load_graph(cfg: &ExperimentConfig) -> Result<MetricGraph, Failure> {
    let g = &cfg.graph;
    if let Some(path) = &g.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config("graph.file", format!("{}: {e}", path.display())))?;
        return parse_graph(&text)
            .map_err(|e| config("graph.file", format!("{}: {e}", path.display())));
    }
    Ok(match g.preset {
        GraphPreset::Compton => MetricGraph::compton(g.length),
        GraphPreset::Box => MetricGraph::box_graph(g.length),
        GraphPreset::Star => MetricGraph::star(g.edges, g.length),
    })
}

fn graph(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let g = &cfg.graph;
    let metric = load_graph(cfg)?;
    let count = metric
        .count_conditions()
        .map_err(|e| Failure::numerical("quantum-graph", e))?;
    let h = graph_hamiltonian(&metric, Resolution::Intervals(g.intervals), g.truncation)
        .map_err(|e| Failure::numerical("quantum-graph", e))?;
    let eig = solve_eigensystem(&h, g.levels).map_err(|e| Failure::numerical("spectra", e))?;
    out.write("spectrum.csv", |w| {
        writeln!(w, "index,energy,wavenumber")?;
        for (i, e) in eig.values.iter().enumerate() {
            writeln!(w, "{i},{e:.16e},{:.16e}", e.max(0.0).sqrt())?;
        }
        Ok(())
    })
    .map_err(io_failure)?;
    let summary = GraphSummary {
        vertices: metric.vertices.len(),
        edges: metric.edges.len(),
        node_conditions: count.node_conditions,
        infinity_conditions: count.infinity_conditions,
        total_conditions: count.total,
        disposable_constants: count.disposable_constants,
        dimension: h.dimension(),
    };
    out.write_json("summary.json", &summary).map_err(io_failure)
}

#[derive(Serialize)]
struct JobSummary {
    index: usize,
    x0: f64,
    xdot0: f64,
    termination: Option<&'static str>,
    samples: usize,
    events: usize,
    energy_drift: f64,
    /// Hamilton against the Euler-Lagrange oracle, when both ran
    sup_distance: Option<f64>,
    error: Option<String>,
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::Halted => "halted",
    }
}

fn departure_name(d: Departure) -> &'static str {
    match d {
        Departure::None => "none",
        Departure::Inner => "inner",
        Departure::Outer => "outer",
    }
}

fn write_trajectory(
    out: &mut OutputDir,
    name: &str,
    traj: &Trajectory,
    system: &ClassicalSystem,
) -> io::Result<()> {
    out.write(&format!("{name}.csv"), |w| traj.write_csv(w, system))
}

/// One sweep point, written into its own directory.
fn classical_job(
    cfg: &ExperimentConfig,
    index: usize,
    out: &mut OutputDir,
) -> io::Result<JobSummary> {
    let c = &cfg.classical;
    let [x, xdot] = c.initial_conditions[index];
    let system = ClassicalSystem::new(cfg.dispersion.kappa, cfg.potential.clone());
    let policy = match c.policy {
        PolicyName::Halt => DegeneracyPolicy::Halt,
        PolicyName::ContinueThrough => DegeneracyPolicy::ContinueThrough,
        PolicyName::RandomBranch => DegeneracyPolicy::RandomBranch {
            seed: cfg.seed.wrapping_add(index as u64),
        },
    };
    let options = IntegrationOptions {
        tol: c.tol,
        policy,
        sample_interval: c.sample_interval,
        degeneracy_tolerance: c.degeneracy_tolerance,
    };
    let s0 = ClassicalState { x, xdot, t: 0.0 };
    let mut summary = JobSummary {
        index,
        x0: x,
        xdot0: xdot,
        termination: None,
        samples: 0,
        events: 0,
        energy_drift: 0.0,
        sup_distance: None,
        error: None,
    };
    let primary = match c.integrator {
        Integrator::EulerLagrange => system.integrate_euler_lagrange(s0, c.duration, &options),
        Integrator::Hamilton | Integrator::Both => {
            system.integrate_hamilton(s0, c.duration, &options)
        }
    };
    let traj = match primary {
        Ok(t) => {
            summary.termination = Some(termination_name(t.termination));
            t
        }
        Err(f) => {
            summary.error = Some(f.error.to_string());
            f.partial
        }
    };
    summary.samples = traj.samples.len();
    summary.events = traj.events.len();
    summary.energy_drift = traj.energy_drift();
    write_trajectory(out, "trajectory", &traj, &system)?;
    out.write("events.csv", |w| {
        writeln!(w, "t,x,xdot,gap,departure")?;
        for e in &traj.events {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                e.t,
                e.x,
                e.xdot,
                e.gap,
                departure_name(e.departure)
            )?;
        }
        Ok(())
    })?;
    if c.integrator == Integrator::Both {
        let oracle_options = IntegrationOptions {
            policy: DegeneracyPolicy::Halt,
            ..options
        };
        match system.integrate_euler_lagrange(s0, c.duration, &oracle_options) {
            Ok(oracle) => {
                summary.sup_distance = sup_distance(&traj, &oracle);
                write_trajectory(out, "oracle", &oracle, &system)?;
            }
            Err(f) => {
                let msg = format!("oracle: {}", f.error);
                summary.error = Some(match summary.error.take() {
                    Some(e) => format!("{e}; {msg}"),
                    None => msg,
                });
                write_trajectory(out, "oracle", &f.partial, &system)?;
            }
        }
    }
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn classical(cfg: &ExperimentConfig, out: &mut OutputDir, jobs: usize) -> Result<(), Failure> {
    let count = cfg.classical.initial_conditions.len();
    let root = out.root().to_path_buf();
    let results = fan_out(jobs, count, |i| {
        let name = format!("job_{i:03}");
        let mut dir = OutputDir::create(&root.join(&name))?;
        let summary = classical_job(cfg, i, &mut dir)?;
        Ok::<_, io::Error>((name, summary, dir.into_records()))
    });
    let mut failed = Vec::new();
    let mut summaries = Vec::with_capacity(count);
    for r in results {
        let (name, summary, records) = r.map_err(io_failure)?;
        out.absorb(&name, records);
        if let Some(e) = &summary.error {
            failed.push(format!("job {}: {e}", summary.index));
        }
        summaries.push(summary);
    }
    out.write_json("summary.json", &summaries)
        .map_err(io_failure)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical("classical-dynamics", failed.join("; ")))
    }
}

#[derive(Serialize)]
struct KernelSummary {
    mode: KernelMode,
    dimension: usize,
    spacing: f64,
    periodic: bool,
    hermiticity_defect: f64,
    max_abs: f64,
    /// `max |E_kernel - E_fourier|` over the reported levels (periodic only)
    fourier_max_difference: Option<f64>,
}

fn kernel(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let k = &cfg.kernel;
    let grid = build_grid(cfg)?;
    let law = cfg.dispersion.law();
    let numerical = |e| Failure::numerical("operators", e);
    let spec = KernelSpec::sample(&cfg.potential, &grid, k.mode).map_err(numerical)?;
    let h =
        build_convolution_hamiltonian(&law, &grid, &cfg.potential, k.mode).map_err(numerical)?;
    let n = grid.len() as i64;
    out.write("kernel.csv", |w| {
        writeln!(w, "offset,q,re,im")?;
        for d in -(n - 1)..n {
            let z = spec.at(d);
            writeln!(
                w,
                "{d},{:.16e},{:.16e},{:.16e}",
                d as f64 * spec.spacing,
                z.re,
                z.im
            )?;
        }
        Ok(())
    })
    .map_err(io_failure)?;

    let mut fourier_max_difference = None;
    if h.check_hermitian().is_ok() {
        let levels = k.levels.min(h.dimension());
        let eig = solve_eigensystem(&h, levels).map_err(|e| Failure::numerical("spectra", e))?;
        let conjugate = if grid.boundary == branchq::grid::Boundary::Periodic {
            let f = build_fourier_conjugate_hamiltonian(&law, &grid, &cfg.potential)
                .map_err(numerical)?;
            Some(solve_eigensystem(&f, levels).map_err(|e| Failure::numerical("spectra", e))?)
        } else {
            None
        };
        if let Some(c) = &conjugate {
            fourier_max_difference = Some(
                eig.values
                    .iter()
                    .zip(&c.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        out.write("spectrum.csv", |w| {
            if conjugate.is_some() {
                writeln!(w, "index,energy,fourier_energy")?;
            } else {
                writeln!(w, "index,energy")?;
            }
            for (i, e) in eig.values.iter().enumerate() {
                write!(w, "{i},{e:.16e}")?;
                if let Some(c) = &conjugate {
                    write!(w, ",{:.16e}", c.values[i])?;
                }
                writeln!(w)?;
            }
            Ok(())
        })
        .map_err(io_failure)?;
    }
    let summary = KernelSummary {
        mode: k.mode,
        dimension: h.dimension(),
        spacing: grid.spacing(),
        periodic: cfg.grid.periodic,
        hermiticity_defect: h.hermiticity_defect(),
        max_abs: h.max_abs(),
        fourier_max_difference,
    };
    out.write_json("summary.json", &summary).map_err(io_failure)
}

#[derive(Serialize)]
struct CriterionRecord {
    criterion: u8,
    title: &'static str,
    passed: bool,
    error: Option<String>,
}

fn verify(cfg: &ExperimentConfig, out: &mut OutputDir, jobs: usize) -> Result<(), Failure> {
    let ids = &cfg.verify.criteria;
    let reports = fan_out(jobs, ids.len(), |i| branchq::verify::run(ids[i]));
    for r in &reports {
        println!("{}", r.summary());
    }
    // timings stay on stdout so the files are reproducible
    out.write("verify.csv", |w| {
        writeln!(w, "criterion,label,value,limit,passed")?;
        for r in &reports {
            for m in &r.measurements {
                writeln!(
                    w,
                    "{},{},{:.16e},{},{}",
                    r.id,
                    m.label.replace(',', ";"),
                    m.value,
                    m.limit.replace(',', ";"),
                    u8::from(m.passed)
                )?;
            }
        }
        Ok(())
    })
    .map_err(io_failure)?;
    let records: Vec<CriterionRecord> = reports
        .iter()
        .map(|r| CriterionRecord {
            criterion: r.id,
            title: r.title,
            passed: r.passed(),
            error: r.error.clone(),
        })
        .collect();
    out.write_json("summary.json", &records)
        .map_err(io_failure)?;
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.id.to_string())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical(
            "verify",
            format!("criteria {} failed", failed.join(", ")),
        ))
    }
}

/// Branch of a velocity with the cusps owned by the outer branches.
fn curve_branch(xdot: f64, kappa: f64) -> Branch {
    if kappa <= 0.0 {
        return Branch::One;
    }
    let s = (kappa / 3.0).sqrt();
    if xdot <= -s {
        Branch::One
    } else if xdot >= s {
        Branch::Three
    } else {
        Branch::Two
    }
}

fn dispersion(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let c = &cfg.dispersion_curve;
    let law = cfg.dispersion.law();
    let kappa = cfg.dispersion.kappa;
    let last = (c.samples - 1) as f64;
    out.write("dispersion.csv", |w| {
        writeln!(w, "xdot,p,E,branch")?;
        for i in 0..c.samples {
            // the integer numerator is exactly odd about the midpoint, so a
            // symmetric range gives exactly antisymmetric velocities
            let u = (2.0 * i as f64 - last) / last;
            let xdot = 0.5 * (c.xdot_min + c.xdot_max) + 0.5 * (c.xdot_max - c.xdot_min) * u;
            writeln!(
                w,
                "{xdot:.16e},{:.16e},{:.16e},{}",
                law.momentum_of_velocity(xdot),
                law.energy_of_velocity(xdot),
                curve_branch(xdot, kappa).index()
            )?;
        }
        Ok(())
    })
    .map_err(io_failure)
}
