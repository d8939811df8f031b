//! Scenario files, batch execution and parameter sweeps.
//!
//! A scenario is a strict JSON document: unknown keys are rejected so that a
//! typo cannot silently fall back to a default. Defaults:
//!
//! | key | default |
//! |-----|---------|
//! | `name` | `"scenario"` |
//! | `kernel.normalization` | `"balanced"` |
//! | `kernel.balancing.max_iterations` / `tol` | `50000` / `1e-12` |
//! | `kernel.certify.eigen` / `bochner` | `true` / `true` |
//! | `kernel.certify.tolerance` | `1e-9` |
//! | `kernel.certify.bochner_samples` | `8192` |
//! | `kernel.certify.bochner_half_width` | `max(1.25 r, 50 sigma)`, `r` the negligible radius |
//! | `initial.axis` (cosine) | `0` |
//! | `sim.snapshot_every` | `100` (0 disables) |
//! | `sim.local_mode` | `false` |
//! | `sim.positivity_floor` | `1e-14` |
//! | `sim.max_dt_halvings` | `40` |
//! | `sim.implicit_solver` | `"adi"` |
//! | `sim.solver_tol` | `1e-10` |
//! | `analysis.spectral_abscissa` | `true` |
//! | `output.directory` | `"out"`, relative to the scenario file |
//! | `output.{trace, certificate, final_field, snapshots, summary, metadata}` | `true` |

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diagnostics::{
    linear_stability, linearization_matrix, linearization_matrix_local, most_unstable_cosine_mode,
    spectral_abscissa_weighted_symmetric, Trace, TraceMetadata,
};
use crate::dynamics::{self, ImplicitSolver, SimConfig, SimState};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::io::{self, CertificateRecord};
use crate::kernel::{
    certify_kernel_bochner, certify_positivity_eigen, Kernel, KernelFamily, KernelProfile,
    PositivityCertificate, DEFAULT_CERTIFICATION_TOLERANCE,
};

/// Output directory override; takes precedence over `output.directory`.
pub const OUTPUT_DIR_ENV: &str = "NLKPP_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub grid: GridSpec,
    pub kernel: KernelSpec,
    pub initial: InitialSpec,
    pub sim: SimSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extents: Vec<[f64; 2]>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    Columns,
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma: f64,
    /// Mexican-hat inhibition strength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inhibition: Option<f64>,
    #[serde(default = "default_normalization")]
    pub normalization: NormalizationMode,
    #[serde(default)]
    pub balancing: BalancingSpec,
    #[serde(default)]
    pub certify: CertifySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalancingSpec {
    #[serde(default = "default_balancing_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_balancing_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    #[serde(default = "yes")]
    pub eigen: bool,
    #[serde(default = "yes")]
    pub bochner: bool,
    #[serde(default = "default_certification_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_bochner_samples")]
    pub bochner_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bochner_half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant {
        value: f64,
    },
    RandomUniform {
        low: f64,
        high: f64,
        seed: u64,
    },
    /// `1 + epsilon cos(k pi (x - lo) / (hi - lo))` along `axis`.
    Cosine {
        epsilon: f64,
        mode: ModeSpec,
        #[serde(default)]
        axis: usize,
    },
    /// A field in the binary format, on the scenario's grid.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeSpec {
    Index(usize),
    Named(ModeName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    /// The non-constant cosine mode with the largest linear growth rate.
    MostUnstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub local_mode: bool,
    #[serde(default = "default_positivity_floor")]
    pub positivity_floor: f64,
    #[serde(default = "default_max_dt_halvings")]
    pub max_dt_halvings: u32,
    #[serde(default)]
    pub implicit_solver: ImplicitSolver,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default = "yes")]
    pub spectral_abscissa: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_output_directory")]
    pub directory: PathBuf,
    #[serde(default = "yes")]
    pub trace: bool,
    #[serde(default = "yes")]
    pub certificate: bool,
    #[serde(default = "yes")]
    pub final_field: bool,
    #[serde(default = "yes")]
    pub snapshots: bool,
    #[serde(default = "yes")]
    pub summary: bool,
    #[serde(default = "yes")]
    pub metadata: bool,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_normalization() -> NormalizationMode {
    NormalizationMode::Balanced
}
fn default_balancing_iterations() -> usize {
    50_000
}
fn default_balancing_tol() -> f64 {
    1e-12
}
fn yes() -> bool {
    true
}
fn default_certification_tolerance() -> f64 {
    DEFAULT_CERTIFICATION_TOLERANCE
}
fn default_bochner_samples() -> usize {
    8192
}
fn default_snapshot_every() -> usize {
    SimConfig::default().snapshot_every
}
fn default_positivity_floor() -> f64 {
    SimConfig::default().positivity_floor
}
fn default_max_dt_halvings() -> u32 {
    SimConfig::default().max_dt_halvings
}
fn default_solver_tol() -> f64 {
    SimConfig::default().solver_tol
}
fn default_output_directory() -> PathBuf {
    PathBuf::from("out")
}

impl Default for BalancingSpec {
    fn default() -> Self {
        BalancingSpec {
            max_iterations: default_balancing_iterations(),
            tol: default_balancing_tol(),
        }
    }
}

impl Default for CertifySpec {
    fn default() -> Self {
        CertifySpec {
            eigen: true,
            bochner: true,
            tolerance: default_certification_tolerance(),
            bochner_samples: default_bochner_samples(),
            bochner_half_width: None,
        }
    }
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            spectral_abscissa: true,
        }
    }
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_output_directory(),
            trace: true,
            certificate: true,
            final_field: true,
            snapshots: true,
            summary: true,
            metadata: true,
        }
    }
}

fn positive_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Scenario::from_json_str(&text, &base_dir).map_err(|e| match e {
        Error::Parse { source, .. } => Error::Parse {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

impl Scenario {
    /// Parses and validates a scenario document; relative paths resolve
    /// against `base_dir`.
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut scenario: Scenario = serde_json::from_str(text).map_err(|source| Error::Parse {
            path: PathBuf::from("<scenario>"),
            source,
        })?;
        scenario.base_dir = base_dir.to_owned();
        scenario.validate()?;
        Ok(scenario)
    }

    /// Builds a scenario from a JSON value, as used by sweeps.
    pub fn from_value(value: Value, base_dir: &Path) -> Result<Self> {
        let mut scenario: Scenario =
            serde_json::from_value(value).map_err(|source| Error::Parse {
                path: PathBuf::from("<scenario>"),
                source,
            })?;
        scenario.base_dir = base_dir.to_owned();
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("scenarios always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.build_grid()?;
        let k = &self.kernel;
        positive_finite("kernel.sigma", k.sigma)?;
        match (k.family, k.inhibition) {
            (KernelFamily::Custom, _) => {
                return Err(Error::validation(
                    "kernel.family",
                    "custom profiles are only available through the library API",
                ))
            }
            (KernelFamily::MexicanHat, None) => {
                return Err(Error::validation(
                    "kernel.inhibition",
                    "required for the mexican_hat family",
                ))
            }
            (KernelFamily::MexicanHat, Some(a)) if !(a.is_finite() && a >= 0.0) => {
                return Err(Error::validation(
                    "kernel.inhibition",
                    format!("must be finite and >= 0, got {a}"),
                ))
            }
            (KernelFamily::MexicanHat, Some(_)) => {}
            (_, Some(_)) => {
                return Err(Error::validation(
                    "kernel.inhibition",
                    "only used by the mexican_hat family",
                ))
            }
            (_, None) => {}
        }
        if k.balancing.max_iterations == 0 {
            return Err(Error::validation(
                "kernel.balancing.max_iterations",
                "must be >= 1",
            ));
        }
        positive_finite("kernel.balancing.tol", k.balancing.tol)?;
        positive_finite("kernel.certify.tolerance", k.certify.tolerance)?;
        if k.certify.bochner_samples < 16 {
            return Err(Error::validation(
                "kernel.certify.bochner_samples",
                "must be >= 16",
            ));
        }
        if let Some(hw) = k.certify.bochner_half_width {
            positive_finite("kernel.certify.bochner_half_width", hw)?;
        }

        match &self.initial {
            InitialSpec::Constant { value } => {
                positive_finite("initial.value", *value)?;
            }
            InitialSpec::RandomUniform { low, high, .. } => {
                if !(low.is_finite() && *low >= 0.0) {
                    return Err(Error::validation(
                        "initial.low",
                        format!("must be finite and >= 0, got {low}"),
                    ));
                }
                if !(high.is_finite() && high > low) {
                    return Err(Error::validation(
                        "initial.high",
                        format!("must be finite and > low, got {high}"),
                    ));
                }
            }
            InitialSpec::Cosine {
                epsilon,
                mode,
                axis,
            } => {
                if !(epsilon.is_finite() && epsilon.abs() <= 1.0) {
                    return Err(Error::validation(
                        "initial.epsilon",
                        format!("must satisfy |epsilon| <= 1, got {epsilon}"),
                    ));
                }
                if *axis >= self.grid.counts.len() {
                    return Err(Error::validation(
                        "initial.axis",
                        format!("grid has no axis {axis}"),
                    ));
                }
                if let ModeSpec::Index(k) = mode {
                    if *k >= self.grid.counts[*axis] {
                        return Err(Error::validation(
                            "initial.mode",
                            format!(
                                "mode {k} is not resolved by {} nodes",
                                self.grid.counts[*axis]
                            ),
                        ));
                    }
                }
            }
            InitialSpec::File { path } => {
                if !self.resolve(path).is_file() {
                    return Err(Error::validation(
                        "initial.path",
                        format!("{} does not exist", self.resolve(path).display()),
                    ));
                }
            }
        }

        let s = &self.sim;
        let map_field = |e: Error| match e {
            Error::Validation { field, reason } => Error::Validation {
                field: format!("sim.{field}"),
                reason,
            },
            other => other,
        };
        self.sim_config().validate().map_err(map_field)?;
        if s.max_dt_halvings == 0 {
            return Err(Error::validation("sim.max_dt_halvings", "must be >= 1"));
        }
        Ok(())
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_owned()
        } else {
            self.base_dir.join(path)
        }
    }

    /// `output.directory` resolved against the scenario file location.
    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.directory)
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        if g.extents.len() != g.counts.len() {
            return Err(Error::validation(
                "grid",
                format!("{} extents but {} counts", g.extents.len(), g.counts.len()),
            ));
        }
        let extents: Vec<(f64, f64)> = g.extents.iter().map(|e| (e[0], e[1])).collect();
        Grid::uniform(&extents, &g.counts).map_err(|e| Error::validation("grid", e.to_string()))
    }

    pub fn profile(&self) -> Result<KernelProfile> {
        let k = &self.kernel;
        match k.family {
            KernelFamily::Gaussian => KernelProfile::gaussian(k.sigma),
            KernelFamily::Tophat => KernelProfile::tophat(k.sigma),
            KernelFamily::Exponential => KernelProfile::exponential(k.sigma),
            KernelFamily::MexicanHat => {
                KernelProfile::mexican_hat(k.sigma, k.inhibition.unwrap_or(0.0))
            }
            KernelFamily::Custom => Err(Error::validation(
                "kernel.family",
                "custom is not available here",
            )),
        }
    }

    /// Samples and normalizes the kernel on `grid`.
    pub fn build_kernel(&self, grid: &Grid) -> Result<Kernel> {
        let raw = Kernel::sample_convolution(grid, self.profile()?)?;
        let b = &self.kernel.balancing;
        match self.kernel.normalization {
            NormalizationMode::Columns => raw.normalize_columns(),
            NormalizationMode::Balanced => raw.symmetrize_and_normalize(b.max_iterations, b.tol),
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.sim;
        SimConfig {
            mu: s.mu,
            dt: s.dt,
            t_end: s.t_end,
            snapshot_every: s.snapshot_every,
            local_mode: s.local_mode,
            positivity_floor: s.positivity_floor,
            max_dt_halvings: s.max_dt_halvings,
            implicit_solver: s.implicit_solver,
            solver_tol: s.solver_tol,
        }
    }

    /// The cosine mode index the initial datum uses, if it is a cosine datum.
    pub fn resolve_mode(&self, grid: &Grid, kernel: &Kernel) -> Option<usize> {
        match &self.initial {
            InitialSpec::Cosine { mode, axis, .. } => Some(match mode {
                ModeSpec::Index(k) => *k,
                ModeSpec::Named(ModeName::MostUnstable) => {
                    let j = self.jacobian(grid, kernel);
                    most_unstable_cosine_mode(grid, &j, *axis).0
                }
            }),
            _ => None,
        }
    }

    fn jacobian(&self, grid: &Grid, kernel: &Kernel) -> nalgebra::DMatrix<f64> {
        if self.sim.local_mode {
            linearization_matrix_local(grid, self.sim.mu)
        } else {
            linearization_matrix(kernel, self.sim.mu)
        }
    }

    pub fn initial_field(&self, grid: &Grid, kernel: &Kernel) -> Result<Field> {
        match &self.initial {
            InitialSpec::Constant { value } => Ok(Field::constant(grid, *value)),
            InitialSpec::RandomUniform { low, high, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = (0..grid.len())
                    .map(|_| rng.gen_range(*low..*high))
                    .collect();
                Field::new(grid, values)
            }
            InitialSpec::Cosine { epsilon, axis, .. } => {
                let k = self.resolve_mode(grid, kernel).unwrap_or(1);
                let c = crate::diagnostics::cosine_mode(grid, k, *axis);
                Ok(c.map(|v| 1.0 + epsilon * v))
            }
            InitialSpec::File { path } => {
                let path = self.resolve(path);
                let f = io::read_field(&path)?;
                if f.grid() != grid {
                    return Err(Error::validation(
                        "initial.path",
                        format!("{} is stored on a different grid", path.display()),
                    ));
                }
                Ok(Field::new(grid, f.into_values())?)
            }
        }
    }

    /// Runs the enabled positivity certificates on `kernel`.
    pub fn certify(&self, kernel: &Kernel) -> Result<Vec<PositivityCertificate>> {
        let c = &self.kernel.certify;
        let mut out = Vec::new();
        if c.eigen {
            out.push(certify_positivity_eigen(kernel, c.tolerance));
        }
        if c.bochner {
            out.push(certify_kernel_bochner(
                kernel,
                c.bochner_samples,
                c.bochner_half_width,
                c.tolerance,
            )?);
        }
        Ok(out)
    }

    /// Spectral abscissa of the linearization about `u ≡ 1`.
    pub fn spectral_abscissa(&self, grid: &Grid, kernel: &Kernel) -> Result<f64> {
        if self.sim.local_mode {
            spectral_abscissa_weighted_symmetric(grid, &self.jacobian(grid, kernel))
        } else {
            linear_stability(kernel, self.sim.mu)
        }
    }
}

/// Result of running a scenario in memory.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub initial: Field,
    pub state: SimState,
    pub trace: Trace,
    pub certificates: Vec<PositivityCertificate>,
    pub spectral_abscissa: Option<f64>,
    /// Cosine mode of the initial datum, when it has one.
    pub mode: Option<usize>,
    pub summary: SummaryRow,
}

/// One row of `summary.csv`. The sweep columns are empty for single runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub point: usize,
    pub param_a: String,
    pub value_a: String,
    pub param_b: String,
    pub value_b: String,
    pub status: String,
    pub error: String,
    pub t_final: Option<f64>,
    pub sup_dist_one_initial: Option<f64>,
    pub sup_dist_one_final: Option<f64>,
    pub sup_dist_one_max: Option<f64>,
    pub v_initial: Option<f64>,
    pub v_final: Option<f64>,
    pub mass_final: Option<f64>,
    pub min_u_final: Option<f64>,
    pub eigen_verdict: String,
    pub eigen_witness: Option<f64>,
    pub bochner_verdict: String,
    pub bochner_witness: Option<f64>,
    pub spectral_abscissa: Option<f64>,
    pub accepted_steps: Option<usize>,
    pub rejected_steps: Option<usize>,
    pub wall_time_s: f64,
}

impl SummaryRow {
    fn empty(name: &str) -> Self {
        SummaryRow {
            name: name.into(),
            point: 0,
            param_a: String::new(),
            value_a: String::new(),
            param_b: String::new(),
            value_b: String::new(),
            status: "ok".into(),
            error: String::new(),
            t_final: None,
            sup_dist_one_initial: None,
            sup_dist_one_final: None,
            sup_dist_one_max: None,
            v_initial: None,
            v_final: None,
            mass_final: None,
            min_u_final: None,
            eigen_verdict: String::new(),
            eigen_witness: None,
            bochner_verdict: String::new(),
            bochner_witness: None,
            spectral_abscissa: None,
            accepted_steps: None,
            rejected_steps: None,
            wall_time_s: 0.0,
        }
    }

    fn failed(name: &str, error: &Error, wall_time_s: f64) -> Self {
        SummaryRow {
            status: "failed".into(),
            error: error.to_string(),
            wall_time_s,
            ..SummaryRow::empty(name)
        }
    }
}

fn kernel_notes(kernel: &Kernel) -> Vec<String> {
    let mut notes = Vec::new();
    if let Some(p) = kernel.profile() {
        if p.is_strictly_positive() == Some(false) {
            notes.push(format!(
                "{} kernel is not strictly positive; the convergence theorem does not apply even if it is certified positive",
                p.family()
            ));
        }
    }
    notes
}

/// Builds the kernel, certifies it, runs the simulation and summarizes it.
pub fn execute_scenario(scenario: &Scenario) -> Result<ScenarioOutcome> {
    let started = Instant::now();
    let ctx = |e: Error| e.context(format!("scenario `{}`", scenario.name));
    let grid = scenario.build_grid().map_err(ctx)?;
    let kernel = scenario.build_kernel(&grid).map_err(ctx)?;
    let certificates = scenario.certify(&kernel).map_err(ctx)?;
    let spectral_abscissa = if scenario.analysis.spectral_abscissa {
        Some(scenario.spectral_abscissa(&grid, &kernel).map_err(ctx)?)
    } else {
        None
    };
    let mode = scenario.resolve_mode(&grid, &kernel);
    let initial = scenario.initial_field(&grid, &kernel).map_err(ctx)?;
    let config = scenario.sim_config();
    let (state, mut trace) =
        dynamics::run(&initial, &grid, &kernel, &config, &mut []).map_err(ctx)?;

    trace.metadata.kernel_notes = kernel_notes(&kernel);
    trace.metadata.certificates = certificates
        .iter()
        .map(|c| {
            format!(
                "{}: {} (witness {:e})",
                c.method.as_str(),
                c.verdict.as_str(),
                c.witness
            )
        })
        .collect();

    let rows = trace.rows();
    let first = rows.first().expect("a trace always holds the initial row");
    let last = rows.last().expect("a trace always holds the initial row");
    let find = |method: &str| certificates.iter().find(|c| c.method.as_str() == method);
    let summary = SummaryRow {
        t_final: Some(last.t),
        sup_dist_one_initial: Some(first.sup_dist_one),
        sup_dist_one_final: Some(last.sup_dist_one),
        sup_dist_one_max: Some(rows.iter().map(|r| r.sup_dist_one).fold(0.0, f64::max)),
        v_initial: Some(first.v),
        v_final: Some(last.v),
        mass_final: Some(last.mass),
        min_u_final: Some(last.min_u),
        eigen_verdict: find("eigen")
            .map(|c| c.verdict.as_str().to_owned())
            .unwrap_or_default(),
        eigen_witness: find("eigen").map(|c| c.witness),
        bochner_verdict: find("bochner")
            .map(|c| c.verdict.as_str().to_owned())
            .unwrap_or_default(),
        bochner_witness: find("bochner").map(|c| c.witness),
        spectral_abscissa,
        accepted_steps: Some(trace.metadata.accepted_steps),
        rejected_steps: Some(trace.metadata.rejected_steps),
        wall_time_s: started.elapsed().as_secs_f64(),
        ..SummaryRow::empty(&scenario.name)
    };
    Ok(ScenarioOutcome {
        initial,
        state,
        trace,
        certificates,
        spectral_abscissa,
        mode,
        summary,
    })
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    version: &'static str,
    scenario: &'a Scenario,
    initial_mode: Option<usize>,
    trace: &'a TraceMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotIndexRow {
    pub step: usize,
    pub t: f64,
    pub file: String,
}

/// Names of the artifacts a run writes inside its output directory.
pub mod artifacts {
    pub const TRACE: &str = "trace.csv";
    pub const CERTIFICATE: &str = "certificate.csv";
    pub const FINAL_FIELD: &str = "final_field.bin";
    pub const SNAPSHOTS: &str = "snapshots";
    pub const SNAPSHOT_INDEX: &str = "index.csv";
    pub const SUMMARY: &str = "summary.csv";
    pub const METADATA: &str = "metadata.json";
}

fn certificate_records(
    scenario: &Scenario,
    certs: &[PositivityCertificate],
) -> Result<Vec<CertificateRecord>> {
    let profile = scenario.profile()?;
    Ok(certs
        .iter()
        .map(|c| CertificateRecord::new(c, Some(&profile)))
        .collect())
}

fn write_outcome(scenario: &Scenario, outcome: &ScenarioOutcome, out_dir: &Path) -> Result<()> {
    let out = &scenario.output;
    if out.trace {
        io::write_trace_csv(&out_dir.join(artifacts::TRACE), &outcome.trace)?;
    }
    if out.certificate {
        let records = certificate_records(scenario, &outcome.certificates)?;
        io::write_csv(&out_dir.join(artifacts::CERTIFICATE), &records)?;
    }
    if out.final_field {
        io::write_field(&out_dir.join(artifacts::FINAL_FIELD), &outcome.state.u)?;
    }
    if out.snapshots && !outcome.trace.snapshots.is_empty() {
        let dir = out_dir.join(artifacts::SNAPSHOTS);
        fs::create_dir_all(&dir)?;
        let mut index = Vec::new();
        for s in &outcome.trace.snapshots {
            let file = format!("snapshot_{:08}.bin", s.step);
            io::write_field(&dir.join(&file), &s.field)?;
            index.push(SnapshotIndexRow {
                step: s.step,
                t: s.t,
                file,
            });
        }
        io::write_csv(&dir.join(artifacts::SNAPSHOT_INDEX), &index)?;
    }
    if out.metadata {
        let meta = RunMetadata {
            version: env!("CARGO_PKG_VERSION"),
            scenario,
            initial_mode: outcome.mode,
            trace: &outcome.trace.metadata,
        };
        let text = serde_json::to_string_pretty(&meta).expect("metadata always serializes");
        fs::write(out_dir.join(artifacts::METADATA), text + "\n")?;
    }
    Ok(())
}

/// Runs a scenario and writes its artifacts into `out_dir`. On failure the
/// summary row records the error before it is returned.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<ScenarioOutcome> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;
    let result = execute_scenario(scenario);
    let summary = match &result {
        Ok(outcome) => outcome.summary.clone(),
        Err(e) => SummaryRow::failed(&scenario.name, e, started.elapsed().as_secs_f64()),
    };
    if scenario.output.summary {
        io::write_csv(&out_dir.join(artifacts::SUMMARY), &[summary])?;
    }
    let outcome = result?;
    write_outcome(scenario, &outcome, out_dir)?;
    Ok(outcome)
}

/// Kernel-only path: builds and certifies the kernel and writes
/// `certificate.csv` when `out_dir` is given.
pub fn certify_scenario(
    scenario: &Scenario,
    out_dir: Option<&Path>,
) -> Result<Vec<CertificateRecord>> {
    let ctx = |e: Error| e.context(format!("scenario `{}`", scenario.name));
    let grid = scenario.build_grid().map_err(ctx)?;
    let kernel = scenario.build_kernel(&grid).map_err(ctx)?;
    let certs = scenario.certify(&kernel).map_err(ctx)?;
    let records = certificate_records(scenario, &certs)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        io::write_csv(&dir.join(artifacts::CERTIFICATE), &records)?;
    }
    Ok(records)
}

/// `--out`, then [`OUTPUT_DIR_ENV`], then the scenario's own setting.
pub fn resolve_output_dir(cli: Option<&Path>, scenario: &Scenario) -> PathBuf {
    if let Some(p) = cli {
        return p.to_owned();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => scenario.output_dir(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseScenario {
    Path(PathBuf),
    Inline(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParameter {
    /// Dotted key path into the scenario document, e.g. `sim.mu`.
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOutputSpec {
    #[serde(default = "default_sweep_directory")]
    pub directory: PathBuf,
    /// Also write each point's full artifacts into `point_NNNN/`.
    #[serde(default)]
    pub write_points: bool,
}

fn default_sweep_directory() -> PathBuf {
    PathBuf::from("sweep_out")
}

impl Default for SweepOutputSpec {
    fn default() -> Self {
        SweepOutputSpec {
            directory: default_sweep_directory(),
            write_points: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_sweep_name")]
    pub name: String,
    pub base: BaseScenario,
    pub parameters: Vec<SweepParameter>,
    #[serde(default)]
    pub output: SweepOutputSpec,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_sweep_name() -> String {
    "sweep".into()
}

/// One point of a sweep: its index, parameter assignments and document.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, Value)>,
    pub document: Value,
}

fn lookup_mut<'a>(doc: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    path.split('.')
        .try_fold(doc, |v, key| v.as_object_mut()?.get_mut(key))
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn parse_sweep(path: &Path) -> Result<SweepSpec> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    SweepSpec::from_json_str(&text, &base_dir).map_err(|e| match e {
        Error::Parse { source, .. } => Error::Parse {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

impl SweepSpec {
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut sweep: SweepSpec = serde_json::from_str(text).map_err(|source| Error::Parse {
            path: PathBuf::from("<sweep>"),
            source,
        })?;
        sweep.base_dir = base_dir.to_owned();
        sweep.validate()?;
        Ok(sweep)
    }

    /// The base scenario with defaults filled, and the directory its relative
    /// paths resolve against.
    pub fn base_scenario(&self) -> Result<Scenario> {
        match &self.base {
            BaseScenario::Path(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    self.base_dir.join(p)
                };
                parse_scenario(&path).map_err(|e| e.context("sweep base"))
            }
            BaseScenario::Inline(v) => {
                Scenario::from_value(v.clone(), &self.base_dir).map_err(|e| e.context("sweep base"))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() || self.parameters.len() > 2 {
            return Err(Error::validation(
                "parameters",
                format!(
                    "one or two parameters required, got {}",
                    self.parameters.len()
                ),
            ));
        }
        let mut base = self.base_scenario()?.to_value();
        for (i, p) in self.parameters.iter().enumerate() {
            let field = format!("parameters[{i}]");
            if p.values.is_empty() {
                return Err(Error::validation(
                    format!("{field}.values"),
                    "must not be empty",
                ));
            }
            if let Some(bad) = p
                .values
                .iter()
                .find(|v| v.as_f64().is_some_and(|x| !x.is_finite()))
            {
                return Err(Error::validation(
                    format!("{field}.values"),
                    format!("non-finite value {bad}"),
                ));
            }
            if lookup_mut(&mut base, &p.path).is_none() {
                return Err(Error::validation(
                    format!("{field}.path"),
                    format!("`{}` is not a key of the scenario", p.path),
                ));
            }
        }
        if self.parameters.len() == 2 && self.parameters[0].path == self.parameters[1].path {
            return Err(Error::validation(
                "parameters",
                "the two parameters must differ",
            ));
        }
        Ok(())
    }

    /// Cartesian product of the parameter lists, first parameter outermost.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let base = self.base_scenario()?.to_value();
        let mut combos: Vec<Vec<(String, Value)>> = vec![Vec::new()];
        for p in &self.parameters {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    p.values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((p.path.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        Ok(combos
            .into_iter()
            .enumerate()
            .map(|(index, assignments)| {
                let mut document = base.clone();
                for (path, v) in &assignments {
                    *lookup_mut(&mut document, path).expect("paths are validated") = v.clone();
                }
                SweepPoint {
                    index,
                    assignments,
                    document,
                }
            })
            .collect())
    }

    fn point_base_dir(&self) -> PathBuf {
        match &self.base {
            BaseScenario::Path(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    self.base_dir.join(p)
                };
                path.parent().map(Path::to_path_buf).unwrap_or_default()
            }
            BaseScenario::Inline(_) => self.base_dir.clone(),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        if self.output.directory.is_absolute() {
            self.output.directory.clone()
        } else {
            self.base_dir.join(&self.output.directory)
        }
    }
}

fn run_point(sweep: &SweepSpec, point: &SweepPoint, out_dir: &Path) -> SummaryRow {
    let started = Instant::now();
    let result =
        Scenario::from_value(point.document.clone(), &sweep.point_base_dir()).and_then(|mut s| {
            s.name = format!("{}[{}]", sweep.name, point.index);
            if sweep.output.write_points {
                run_scenario(&s, &out_dir.join(format!("point_{:04}", point.index)))
            } else {
                execute_scenario(&s)
            }
        });
    let mut row = match result {
        Ok(outcome) => outcome.summary,
        Err(e) => SummaryRow::failed(
            &format!("{}[{}]", sweep.name, point.index),
            &e,
            started.elapsed().as_secs_f64(),
        ),
    };
    row.point = point.index;
    if let Some((p, v)) = point.assignments.first() {
        row.param_a = p.clone();
        row.value_a = value_label(v);
    }
    if let Some((p, v)) = point.assignments.get(1) {
        row.param_b = p.clone();
        row.value_b = value_label(v);
    }
    row
}

/// Runs every sweep point on `jobs` worker threads (0 means one per core)
/// and writes `summary.csv` in sweep order. A failing point is recorded in
/// its row and does not stop the sweep.
pub fn run_sweep(sweep: &SweepSpec, out_dir: &Path, jobs: usize) -> Result<Vec<SummaryRow>> {
    let points = sweep.points()?;
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::NumericalFailure(format!("could not start worker pool: {e}")))?;
    let rows: Vec<SummaryRow> = pool.install(|| {
        points
            .par_iter()
            .map(|p| run_point(sweep, p, out_dir))
            .collect()
    });
    io::write_csv(&out_dir.join(artifacts::SUMMARY), &rows)?;
    Ok(rows)
}
