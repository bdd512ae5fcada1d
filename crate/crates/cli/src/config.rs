//! Experiment configuration, schema version 1.
//!
//! Every table is optional and falls back to the defaults below. Unknown keys
//! are rejected so a misspelled field never silently keeps its default.

use std::fmt;
use std::path::{Path, PathBuf};

use branchq::evolution::GaussianPacket;
use branchq::operators::KernelMode;
use branchq::{DispersionLaw, PotentialSpec};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spectrum,
    Evolve,
    Graph,
    Classical,
    Kernel,
    Verify,
    Dispersion,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Evolve => "evolve",
            Mode::Graph => "graph",
            Mode::Classical => "classical",
            Mode::Kernel => "kernel",
            Mode::Verify => "verify",
            Mode::Dispersion => "dispersion",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub classical: ClassicalConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub dispersion_curve: CurveConfig,
    /// Where results go. Not part of the resolved copy: it does not affect
    /// any result.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

fn default_potential() -> PotentialSpec {
    PotentialSpec::harmonic(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// Momentum `xdot^3 - kappa xdot`, energy `3/4 xdot^4 - kappa/2 xdot^2`.
    #[default]
    Cubic,
    /// `p^2 / 2`
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub law: Law,
    pub kappa: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            law: Law::Cubic,
            kappa: 3.0,
        }
    }
}

impl DispersionConfig {
    pub fn law(&self) -> DispersionLaw {
        match self.law {
            Law::Cubic => DispersionLaw::cubic(self.kappa),
            Law::Free => DispersionLaw::free_particle(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Picture {
    /// Three momentum branches glued at the cusps.
    #[default]
    Folded,
    /// One line through the unfolded coordinate.
    Unfolded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Defaults to unfolded in kernel mode and folded otherwise.
    pub picture: Option<Picture>,
    /// Node count; the spacing is adjusted to put the cusps on nodes.
    pub n: Option<usize>,
    /// Spacing; must divide the cusp separation. Excludes `n` unless periodic.
    pub h: Option<f64>,
    pub half_width: f64,
    /// Ring of `n` nodes with spacing `h` (kernel mode only).
    pub periodic: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            picture: None,
            n: None,
            h: None,
            half_width: 8.0,
            periodic: false,
        }
    }
}

impl GridConfig {
    pub fn picture(&self) -> Picture {
        self.picture.unwrap_or_default()
    }
}

pub const DEFAULT_NODES: usize = 401;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub levels: usize,
    /// Write one wavefunction CSV per level.
    pub states: bool,
    /// Polish eigenvalues by shifted inverse iteration.
    pub refine: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            levels: 10,
            states: true,
            refine: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub dt: f64,
    pub steps: usize,
    pub packet: GaussianPacket,
    /// Bound on `dt max|lambda(H)|`; omit to disable.
    pub budget: Option<f64>,
    /// Write the state every this many steps (0: initial and final only).
    pub snapshot_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dt: 2e-4,
            steps: 5000,
            packet: GaussianPacket {
                center: -2.0,
                width: 0.8,
                boost: 1.0,
            },
            budget: Some(0.5),
            snapshot_every: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GraphPreset {
    /// Two half-lines on each of two vertices joined by one finite edge.
    #[default]
    Compton,
    /// Two vertices joined by four edges of equal length.
    Box,
    /// Equilateral star with Dirichlet tips.
    Star,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    /// Graph file (TOML, version 1). Overrides `preset`; relative paths are
    /// taken from the config file's directory.
    pub file: Option<PathBuf>,
    pub preset: GraphPreset,
    /// Internal edge length, box side or star edge length.
    pub length: f64,
    /// Number of star edges.
    pub edges: usize,
    /// Intervals per finite edge.
    pub intervals: usize,
    /// Cut-off length for half-lines.
    pub truncation: f64,
    pub levels: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            file: None,
            preset: GraphPreset::Compton,
            length: 1.0,
            edges: 3,
            intervals: 200,
            truncation: 5.0,
            levels: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    #[default]
    Halt,
    ContinueThrough,
    /// Seeded from the top-level seed plus the sweep index.
    RandomBranch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Hamilton,
    EulerLagrange,
    /// Hamilton trajectory plus the Euler-Lagrange oracle and their distance.
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalConfig {
    /// `[x, xdot]` pairs; each one is a sweep job.
    pub initial_conditions: Vec<[f64; 2]>,
    pub duration: f64,
    pub tol: f64,
    pub policy: PolicyName,
    pub integrator: Integrator,
    pub sample_interval: Option<f64>,
    pub degeneracy_tolerance: f64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            initial_conditions: vec![[0.0, 2.0]],
            duration: 10.0,
            tol: 1e-12,
            policy: PolicyName::Halt,
            integrator: Integrator::Hamilton,
            sample_interval: Some(0.01),
            degeneracy_tolerance: branchq::classical::DEGENERACY_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub mode: KernelMode,
    pub levels: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            mode: KernelMode::Hermitian,
            levels: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub criteria: Vec<u8>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            criteria: branchq::verify::CRITERIA.iter().map(|c| c.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveConfig {
    pub xdot_min: f64,
    pub xdot_max: f64,
    pub samples: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            xdot_min: -3.0,
            xdot_max: 3.0,
            samples: 601,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

/// A rejected configuration, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field(name: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("field `{name}`: {msg}"))
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            mode: None,
            seed: 0,
            dispersion: DispersionConfig::default(),
            potential: default_potential(),
            grid: GridConfig::default(),
            spectrum: SpectrumConfig::default(),
            evolve: EvolveConfig::default(),
            graph: GraphConfig::default(),
            classical: ClassicalConfig::default(),
            kernel: KernelConfig::default(),
            verify: VerifyConfig::default(),
            dispersion_curve: CurveConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; `origin` names the file in messages and anchors
    /// relative paths.
    pub fn parse(text: &str, origin: &Path) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("{}: {e}", origin.display())))?;
        if let Some(file) = cfg.graph.file.as_mut() {
            if file.is_relative() {
                let base = origin.parent().unwrap_or(Path::new("."));
                *file = base.join(&*file);
            }
        }
        Ok(cfg)
    }

    pub fn mode(&self) -> Result<Mode, ConfigError> {
        self.mode
            .ok_or_else(|| field("mode", "missing; set it in the config or pass --mode"))
    }

    /// Fills defaults that depend on the mode, so the resolved copy states
    /// them explicitly.
    pub fn resolve(&mut self) {
        if self.grid.picture.is_none() {
            self.grid.picture = Some(match self.mode {
                Some(Mode::Kernel) => Picture::Unfolded,
                _ => Picture::Folded,
            });
        }
    }

    /// Checks every field the selected mode reads.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(field(
                "schema",
                format!(
                    "version {} is not supported (expected {SCHEMA_VERSION})",
                    self.schema
                ),
            ));
        }
        let mode = self.mode()?;
        if !self.dispersion.kappa.is_finite() {
            return Err(field("dispersion.kappa", "must be finite"));
        }
        match mode {
            Mode::Spectrum | Mode::Evolve | Mode::Kernel => {
                self.validate_dispersion_for_grid()?;
                self.validate_grid(mode == Mode::Kernel)?;
                self.validate_potential(mode)?;
            }
            _ => {}
        }
        match mode {
            Mode::Spectrum => {
                if self.spectrum.levels == 0 {
                    return Err(field("spectrum.levels", "must be at least 1"));
                }
            }
            Mode::Evolve => {
                let e = &self.evolve;
                if !(e.dt.is_finite() && e.dt != 0.0) {
                    return Err(field("evolve.dt", "must be finite and nonzero"));
                }
                if e.steps == 0 {
                    return Err(field("evolve.steps", "must be at least 1"));
                }
                if !(e.packet.width > 0.0) {
                    return Err(field("evolve.packet.width", "must be positive"));
                }
                if e.budget.is_some_and(|b| !(b > 0.0)) {
                    return Err(field("evolve.budget", "must be positive"));
                }
            }
            Mode::Graph => {
                let g = &self.graph;
                if !(g.length > 0.0) {
                    return Err(field("graph.length", "must be positive"));
                }
                if g.intervals < 2 {
                    return Err(field("graph.intervals", "must be at least 2"));
                }
                if !(g.truncation > 0.0) {
                    return Err(field("graph.truncation", "must be positive"));
                }
                if g.levels == 0 {
                    return Err(field("graph.levels", "must be at least 1"));
                }
                if g.file.is_none() && g.preset == GraphPreset::Star && g.edges == 0 {
                    return Err(field("graph.edges", "must be at least 1"));
                }
            }
            Mode::Classical => self.validate_classical()?,
            Mode::Kernel => {
                if self.kernel.levels == 0 {
                    return Err(field("kernel.levels", "must be at least 1"));
                }
            }
            Mode::Verify => {
                if self.verify.criteria.is_empty() {
                    return Err(field("verify.criteria", "must list at least one criterion"));
                }
                for &id in &self.verify.criteria {
                    if branchq::verify::title(id).is_none() {
                        return Err(field(
                            "verify.criteria",
                            format!("no criterion {id} (expected 1-10)"),
                        ));
                    }
                }
            }
            Mode::Dispersion => {
                let c = &self.dispersion_curve;
                if self.dispersion.law != Law::Cubic {
                    return Err(field("dispersion.law", "the curve needs the cubic law"));
                }
                if !(self.dispersion.kappa >= 0.0) {
                    return Err(field("dispersion.kappa", "must be >= 0"));
                }
                if !(c.xdot_min.is_finite() && c.xdot_max.is_finite() && c.xdot_min < c.xdot_max) {
                    return Err(field(
                        "dispersion_curve.xdot_max",
                        "need finite xdot_min < xdot_max",
                    ));
                }
                if c.samples < 2 {
                    return Err(field("dispersion_curve.samples", "must be at least 2"));
                }
            }
        }
        Ok(())
    }

    fn validate_dispersion_for_grid(&self) -> Result<(), ConfigError> {
        if self.dispersion.law == Law::Cubic && !(self.dispersion.kappa > 0.0) {
            return Err(field(
                "dispersion.kappa",
                "the cubic law needs kappa > 0 on a grid; use law = \"free\" otherwise",
            ));
        }
        Ok(())
    }

    fn validate_grid(&self, kernel: bool) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.n.is_some_and(|n| n < 3) {
            return Err(field("grid.n", "must be at least 3"));
        }
        if g.h.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
            return Err(field("grid.h", "must be positive"));
        }
        if g.periodic {
            if !kernel {
                return Err(field(
                    "grid.periodic",
                    "only kernel mode supports periodic grids",
                ));
            }
            if g.picture() != Picture::Unfolded {
                return Err(field("grid.picture", "periodic grids are unfolded"));
            }
            if g.n.is_none() || g.h.is_none() {
                return Err(field("grid.periodic", "a ring needs both `n` and `h`"));
            }
        } else {
            if g.n.is_some() && g.h.is_some() {
                return Err(field("grid.h", "give either `n` or `h`, not both"));
            }
            if !(g.half_width > 0.0 && g.half_width.is_finite()) {
                return Err(field("grid.half_width", "must be positive"));
            }
        }
        if kernel && g.picture() != Picture::Unfolded {
            return Err(field(
                "grid.picture",
                "kernel mode works on the unfolded line",
            ));
        }
        Ok(())
    }

    fn validate_potential(&self, mode: Mode) -> Result<(), ConfigError> {
        let differential = mode == Mode::Evolve
            || (mode == Mode::Spectrum && self.grid.picture() == Picture::Folded);
        if differential && !self.potential.is_polynomial() {
            return Err(field(
                "potential.kind",
                "this mode acts through V(i d/dp) and needs a polynomial",
            ));
        }
        if mode == Mode::Kernel && self.potential.is_polynomial() {
            return Err(field(
                "potential.kind",
                "kernel mode needs a potential with a Fourier transform, not a polynomial",
            ));
        }
        if self.potential.degree().is_some_and(|d| d > 4) {
            return Err(field("potential.coefficients", "degree must be at most 4"));
        }
        Ok(())
    }

    fn validate_classical(&self) -> Result<(), ConfigError> {
        let c = &self.classical;
        if !(self.dispersion.kappa > 0.0) || self.dispersion.law != Law::Cubic {
            return Err(field(
                "dispersion.kappa",
                "classical mode needs the cubic law with kappa > 0",
            ));
        }
        if c.initial_conditions.is_empty() {
            return Err(field("classical.initial_conditions", "must not be empty"));
        }
        for (i, ic) in c.initial_conditions.iter().enumerate() {
            if !(ic[0].is_finite() && ic[1].is_finite()) {
                return Err(field(
                    &format!("classical.initial_conditions[{i}]"),
                    "must be finite",
                ));
            }
        }
        if !c.duration.is_finite() {
            return Err(field("classical.duration", "must be finite"));
        }
        if c.integrator != Integrator::EulerLagrange && c.duration < 0.0 {
            return Err(field(
                "classical.duration",
                "only the euler_lagrange integrator runs backwards",
            ));
        }
        if !(c.tol > 0.0 && c.tol < 1e-2) {
            return Err(field("classical.tol", "must lie in (0, 1e-2)"));
        }
        if c.sample_interval.is_some_and(|s| !(s > 0.0)) {
            return Err(field("classical.sample_interval", "must be positive"));
        }
        if !(c.degeneracy_tolerance > 0.0) {
            return Err(field("classical.degeneracy_tolerance", "must be positive"));
        }
        Ok(())
    }

    /// The copy written next to the outputs.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("configurations always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse("schema = 1\nmode = \"spectrum\"\n").unwrap();
        c.validate().unwrap();
        assert_eq!(c.dispersion.kappa, 3.0);
        assert_eq!(c.potential, PotentialSpec::harmonic(1.0));
    }

    #[test]
    fn unknown_field_names_line() {
        let e = parse("schema = 1\nmode = \"spectrum\"\n[grid]\nnodes = 3\n").unwrap_err();
        assert!(e.0.contains("line 4"), "{e}");
        assert!(e.0.contains("nodes"), "{e}");
    }

    #[test]
    fn bad_values_name_the_field() {
        let c = parse("schema = 1\nmode = \"evolve\"\n[evolve]\ndt = 0.0\n").unwrap();
        assert!(c.validate().unwrap_err().0.contains("evolve.dt"));
        let c = parse("schema = 2\nmode = \"evolve\"\n").unwrap();
        assert!(c.validate().unwrap_err().0.contains("schema"));
    }

    #[test]
    fn resolved_copy_round_trips() {
        let text = "schema = 1\nmode = \"classical\"\nseed = 5\n[potential]\nkind = \"gaussian\"\namplitude = -1.0\ncenter = 0.0\nwidth = 2.0\n";
        let c = parse(text).unwrap();
        let again = parse(&c.resolved_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn relative_graph_file_is_anchored() {
        let c = ExperimentConfig::parse(
            "schema = 1\n[graph]\nfile = \"g.toml\"\n",
            Path::new("/tmp/exp/run.toml"),
        )
        .unwrap();
        assert_eq!(c.graph.file.unwrap(), PathBuf::from("/tmp/exp/g.toml"));
    }
}
