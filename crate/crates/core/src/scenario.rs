//! Scenario configuration, the command implementations behind the CLI, and
//! the CSV/JSON artifacts they write.
//!
//! Artifact schemas (column order is fixed; floats use 17 significant
//! digits):
//!
//! ```text
//! trajectory.csv  t,q_u,q_a,p_u,p_a,E,e,e_dot,I
//! crossings.csv   t,section,q_u,p_u,norm,E
//! switches.csv    t,trigger,value,decision
//! runs.csv        run,q_u0,p_u0,E0,onset_time,onset_momentum
//! verify.csv      chart,r,integral,integral_error,I,numeric_delta,predicted_delta,residual,status
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{CrossingRecord, EnergyVerdict};
use crate::error::Error;
use crate::integrator::IntegratorConfig;
use crate::models::{AcrobotModel, AcrobotState, DistributedParams, ModelParams, ReducedState, SimplifiedParams};
use crate::simulation::{self, Dynamics, RunOptions, Sample, VerdictLevels};
use crate::supervisor::{self, RegulationConfig, SwitchRecord};
use crate::transforms::{self, quadrature::QuadratureConfig, Chart};
use crate::vnhc::{qa_grid, regularity_check, VnhcSpec};

/// Kinetic coefficient of the nominal energy as printed for the reference
/// hardware. It disagrees with the value implied by the measured
/// parameters; see [`EnergyReport`].
pub const PRINTED_KINETIC_COEFFICIENT: f64 = 396.5501;

/// Bottom momentum at which the reference hardware was observed to start
/// rotating.
pub const OBSERVED_BOUNDARY_MOMENTUM: f64 = 0.17;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(Error::InvalidParameter { .. }) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub q_u: f64,
    pub p_u: f64,
    /// Off-manifold leg angle; full dynamics only.
    #[serde(default)]
    pub q_a: Option<f64>,
    #[serde(default)]
    pub p_a: Option<f64>,
}

impl Default for InitialState {
    fn default() -> Self {
        Self { q_u: PI / 32.0, p_u: 0.0, q_a: None, p_a: None }
    }
}

impl InitialState {
    pub fn reduced(&self) -> ReducedState {
        ReducedState::new(self.q_u, self.p_u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self { rel_tol: d.rel_tol, abs_tol: d.abs_tol, max_step: d.max_step }
    }
}

impl IntegratorSettings {
    pub fn config(&self, horizon: f64) -> CliResult<IntegratorConfig> {
        IntegratorConfig::new(self.rel_tol, self.abs_tol, self.max_step, horizon).map_err(config_err)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub samples: usize,
    /// Per-run horizon (s).
    pub cap: f64,
    /// Initial conditions are drawn from `{E ≤ E(reference)}`.
    pub reference: ReducedState,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { samples: 100, cap: 120.0, reference: ReducedState::new(PI / 32.0, 0.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Oscillation radii.
    pub r_grid: Vec<f64>,
    /// Rotation radii.
    pub rotation_r: Vec<f64>,
    /// Gains at which the numeric return map is compared with the
    /// first-order prediction.
    pub gains: Vec<f64>,
    pub quadrature_abs_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            r_grid: (1..=31).map(|i| i as f64 / 10.0).collect(),
            rotation_r: (0..=8).map(|i| 25.0 + 2.5 * i as f64).collect(),
            gains: vec![0.0, 2e-3, 1e-3],
            quadrature_abs_tol: 1e-10,
        }
    }
}

/// Contents of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Defaults to the simplified model for `verify-theorems` and to the
    /// distributed model otherwise.
    pub model: Option<ModelParams>,
    pub spec: VnhcSpec,
    pub initial: InitialState,
    /// Horizon (s); 30 unless set.
    pub duration: Option<f64>,
    pub dynamics: Dynamics,
    pub integrator: IntegratorSettings,
    pub levels: Option<VerdictLevels>,
    pub stop_at_onset: bool,
    pub regulation: Option<RegulationConfig>,
    pub montecarlo: MonteCarloConfig,
    pub verify: VerifyConfig,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration.unwrap_or(30.0)
    }

    fn model_or(&self, fallback: ModelParams) -> CliResult<AcrobotModel> {
        AcrobotModel::from_params(self.model.unwrap_or(fallback)).map_err(config_err)
    }

    pub fn model(&self) -> CliResult<AcrobotModel> {
        self.model_or(ModelParams::Distributed(DistributedParams::reference_hardware()))
    }

    fn validated_spec(&self) -> CliResult<VnhcSpec> {
        self.spec.validate().map_err(config_err)?;
        Ok(self.spec)
    }
}

/// Serializable form of a verdict that may have failed.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictSummary {
    pub verdict: Option<EnergyVerdict>,
    pub verdict_error: Option<String>,
}

impl From<&crate::Result<EnergyVerdict>> for VerdictSummary {
    fn from(v: &crate::Result<EnergyVerdict>) -> Self {
        match v {
            Ok(v) => Self { verdict: Some(*v), verdict_error: None },
            Err(e) => Self { verdict: None, verdict_error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub model: &'static str,
    pub dynamics: Dynamics,
    #[serde(flatten)]
    pub verdict: VerdictSummary,
    pub rotation_onset_time: Option<f64>,
    pub onset_momentum: Option<f64>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_time: f64,
    pub critical_level: f64,
    pub boundary_momentum: f64,
    pub switch_count: usize,
    pub captured: Option<bool>,
    pub terminal_peak: Option<f64>,
    pub wall_time: f64,
}

/// Everything `simulate` or `regulate` produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub samples: Vec<Sample>,
    pub crossings: Vec<CrossingRecord>,
    pub switches: Vec<SwitchRecord>,
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn trajectory_csv(samples: &[Sample]) -> String {
    let mut out = String::from("t,q_u,q_a,p_u,p_a,E,e,e_dot,I\n");
    for s in samples {
        let AcrobotState { q_u, q_a, p_u, p_a } = s.x;
        let row = [s.t, q_u, q_a, p_u, p_a, s.energy, s.e, s.e_dot, s.gain].map(fmt_f64).join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn crossings_csv(crossings: &[CrossingRecord]) -> String {
    let mut out = String::from("t,section,q_u,p_u,norm,E\n");
    for c in crossings {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(c.t),
            c.section.as_str(),
            fmt_f64(c.state.q_u),
            fmt_f64(c.state.p_u),
            fmt_f64(c.norm),
            fmt_f64(c.energy)
        );
    }
    out
}

pub fn switches_csv(switches: &[SwitchRecord]) -> String {
    let mut out = String::from("t,trigger,value,decision\n");
    for s in switches {
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(s.t), s.trigger.as_str(), fmt_f64(s.value), s.decision.as_str());
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, name, &text)
}

impl RunArtifacts {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_file(dir, "trajectory.csv", &trajectory_csv(&self.samples))?;
        write_file(dir, "crossings.csv", &crossings_csv(&self.crossings))?;
        write_file(dir, "switches.csv", &switches_csv(&self.switches))?;
        write_json(dir, "summary.json", &self.summary)
    }
}

pub fn cmd_simulate(cfg: &ScenarioConfig) -> CliResult<RunArtifacts> {
    let clock = Instant::now();
    let model = cfg.model()?;
    let spec = cfg.validated_spec()?;
    let mut opts = RunOptions::new(cfg.dynamics, cfg.integrator.config(cfg.duration())?);
    opts.levels = cfg.levels;
    opts.stop_at_onset = cfg.stop_at_onset;
    let off_manifold = cfg.initial.q_a.is_some() || cfg.initial.p_a.is_some();
    let sim = if off_manifold {
        if cfg.dynamics != Dynamics::Full {
            return Err(CliError::Config("initial q_a/p_a require dynamics = \"full\"".into()));
        }
        let on = crate::vnhc::lift(&model, &spec, cfg.initial.reduced());
        let x0 = AcrobotState::new(on.q_u, cfg.initial.q_a.unwrap_or(on.q_a), on.p_u, cfg.initial.p_a.unwrap_or(on.p_a));
        simulation::simulate_full_state(&model, &spec, x0, &opts)?
    } else {
        simulation::simulate(&model, &spec, cfg.initial.reduced(), &opts)?
    };
    let summary = RunSummary {
        command: "simulate",
        model: model.name(),
        dynamics: sim.dynamics,
        verdict: (&sim.verdict).into(),
        rotation_onset_time: sim.rotation_onset,
        onset_momentum: sim.onset_momentum,
        initial_energy: sim.initial_energy(),
        final_energy: sim.final_energy(),
        final_time: sim.final_time,
        critical_level: model.critical_level(),
        boundary_momentum: model.boundary_momentum(),
        switch_count: 0,
        captured: None,
        terminal_peak: None,
        wall_time: clock.elapsed().as_secs_f64(),
    };
    Ok(RunArtifacts { summary, samples: sim.samples, crossings: sim.crossings, switches: Vec::new() })
}

/// Captured runs need at least this many trailing extend decisions.
pub const CAPTURE_EXTENDS: usize = 5;

pub fn cmd_regulate(cfg: &ScenarioConfig) -> CliResult<RunArtifacts> {
    let clock = Instant::now();
    let model = cfg.model()?;
    let spec = cfg.validated_spec()?;
    let reg = cfg.regulation.ok_or_else(|| CliError::Config("missing [regulation] table".into()))?;
    reg.validate(&model).map_err(config_err)?;
    let integrator = cfg.integrator.config(cfg.duration())?;
    let x0 = cfg.initial.reduced();
    let run = supervisor::run_regulated(&model, &spec, &reg, x0, cfg.duration(), cfg.dynamics, &integrator)?;
    let last = run.samples.last().expect("regulated runs contain the initial sample");
    let summary = RunSummary {
        command: "regulate",
        model: model.name(),
        dynamics: cfg.dynamics,
        verdict: VerdictSummary { verdict: None, verdict_error: None },
        rotation_onset_time: None,
        onset_momentum: None,
        initial_energy: model.nominal_energy(x0),
        final_energy: last.energy,
        final_time: last.t,
        critical_level: model.critical_level(),
        boundary_momentum: model.boundary_momentum(),
        switch_count: run.supervisor.switch_count(),
        captured: Some(run.captured(&reg, CAPTURE_EXTENDS)),
        terminal_peak: run.terminal_peak(reg.mode),
        wall_time: clock.elapsed().as_secs_f64(),
    };
    Ok(RunArtifacts { summary, samples: run.samples, crossings: run.crossings, switches: run.supervisor.switch_log })
}

/// Outcome of one Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McRun {
    pub run: usize,
    pub x0: ReducedState,
    pub energy: f64,
    pub onset_time: Option<f64>,
    pub onset_momentum: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub command: &'static str,
    pub model: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub gain: f64,
    pub cap: f64,
    pub energy_bound: f64,
    pub rotated: usize,
    pub rotated_fraction: f64,
    pub onset_min: Option<f64>,
    pub onset_median: Option<f64>,
    pub onset_max: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct McArtifacts {
    pub summary: McSummary,
    pub runs: Vec<McRun>,
}

pub fn runs_csv(runs: &[McRun]) -> String {
    let mut out = String::from("run,q_u0,p_u0,E0,onset_time,onset_momentum\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.run,
            fmt_f64(r.x0.q_u),
            fmt_f64(r.x0.p_u),
            fmt_f64(r.energy),
            fmt_opt(r.onset_time),
            fmt_opt(r.onset_momentum)
        );
    }
    out
}

impl McArtifacts {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_file(dir, "runs.csv", &runs_csv(&self.runs))?;
        write_json(dir, "summary.json", &self.summary)
    }
}

/// Uniform draw from `{E ≤ bound}` by rejection from the enclosing box
/// `[-π, π] × [-p_max, p_max]`.
pub fn sample_sublevel<R: Rng>(model: &AcrobotModel, bound: f64, rng: &mut R) -> ReducedState {
    let p_max = (bound / model.kinetic_coefficient()).sqrt();
    loop {
        let s = ReducedState::new(rng.random_range(-PI..=PI), rng.random_range(-p_max..=p_max));
        if model.nominal_energy(s) <= bound {
            return s;
        }
    }
}

/// Generator of run `run`: one ChaCha8 stream per run, so draws do not
/// depend on scheduling.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

pub fn cmd_montecarlo(cfg: &ScenarioConfig) -> CliResult<McArtifacts> {
    let clock = Instant::now();
    let model = cfg.model()?;
    let spec = cfg.validated_spec()?;
    let seed = cfg.seed.ok_or_else(|| CliError::Config("montecarlo requires a seed".into()))?;
    let mc = cfg.montecarlo;
    if mc.samples == 0 {
        return Err(CliError::Config("montecarlo.samples must be positive".into()));
    }
    let integrator = cfg.integrator.config(mc.cap)?;
    let bound = model.nominal_energy(mc.reference);
    if !(bound > 0.0) {
        return Err(CliError::Config("montecarlo.reference must have positive energy".into()));
    }
    let runs: Vec<McRun> = (0..mc.samples)
        .into_par_iter()
        .map(|run| {
            let x0 = sample_sublevel(&model, bound, &mut run_rng(seed, run));
            let onset = simulation::rotation_onset(&model, &spec, x0, &integrator)?;
            Ok(McRun {
                run,
                x0,
                energy: model.nominal_energy(x0),
                onset_time: onset.map(|o| o.0),
                onset_momentum: onset.and_then(|o| o.1),
            })
        })
        .collect::<crate::Result<_>>()?;
    let mut onsets: Vec<f64> = runs.iter().filter_map(|r| r.onset_time).collect();
    onsets.sort_by(f64::total_cmp);
    let summary = McSummary {
        command: "montecarlo",
        model: model.name(),
        seed,
        samples: mc.samples,
        gain: spec.gain,
        cap: mc.cap,
        energy_bound: bound,
        rotated: onsets.len(),
        rotated_fraction: onsets.len() as f64 / mc.samples as f64,
        onset_min: onsets.first().copied(),
        onset_median: (!onsets.is_empty()).then(|| onsets[onsets.len() / 2]),
        onset_max: onsets.last().copied(),
        wall_time: clock.elapsed().as_secs_f64(),
    };
    Ok(McArtifacts { summary, runs })
}

/// One row of the verification table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyRow {
    pub chart: &'static str,
    pub r: f64,
    /// `∫a dθ` (oscillation) or `S(r)` (rotation).
    pub integral: f64,
    pub integral_error: f64,
    pub gain: f64,
    /// Numeric `P(r) - r`.
    pub numeric_delta: f64,
    /// First-order `P(r) - r`.
    pub predicted_delta: f64,
    pub status: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub command: &'static str,
    pub min_osc_integral: Option<f64>,
    pub min_rotation_integral: Option<f64>,
    pub regularity_min: f64,
    pub regularity_passed: bool,
    pub failed_rows: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyArtifacts {
    pub summary: VerifySummary,
    pub rows: Vec<VerifyRow>,
}

pub fn verify_csv(rows: &[VerifyRow]) -> String {
    let mut out = String::from("chart,r,integral,integral_error,I,numeric_delta,predicted_delta,residual,status\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.chart,
            fmt_f64(row.r),
            fmt_f64(row.integral),
            fmt_f64(row.integral_error),
            fmt_f64(row.gain),
            fmt_f64(row.numeric_delta),
            fmt_f64(row.predicted_delta),
            fmt_f64(row.numeric_delta - row.predicted_delta),
            row.status
        );
    }
    out
}

impl VerifyArtifacts {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_file(dir, "verify.csv", &verify_csv(&self.rows))?;
        write_json(dir, "summary.json", &self.summary)
    }
}

/// Tight settings for return maps, whose residuals are compared at the
/// `1e-6` level.
pub fn return_map_integrator() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-13, abs_tol: 1e-14, max_step: 0.01, max_time: 50.0 }
}

fn verify_rows(params: &SimplifiedParams, spec: &VnhcSpec, chart: Chart, r: f64, gains: &[f64], qcfg: &QuadratureConfig) -> Vec<VerifyRow> {
    let name = match chart {
        Chart::Oscillation => "oscillation",
        _ => "rotation",
    };
    let quad = match chart {
        Chart::Oscillation => transforms::osc_gain_integral(r, qcfg),
        _ => transforms::rotation_gain_integral(params, spec, r, qcfg),
    };
    let failed = |gain: f64| VerifyRow {
        chart: name,
        r,
        integral: f64::NAN,
        integral_error: f64::NAN,
        gain,
        numeric_delta: f64::NAN,
        predicted_delta: f64::NAN,
        status: "quadrature_failed",
    };
    let Ok(quad) = quad else {
        return gains.iter().map(|&g| failed(g)).collect();
    };
    let slope = match chart {
        Chart::Oscillation => transforms::gain_constant(params, spec) * quad.value,
        _ => quad.value,
    };
    gains
        .iter()
        .map(|&gain| {
            let s = spec.with_gain(gain);
            let (numeric_delta, status) = match transforms::numeric_return_map(params, &s, r, chart, &return_map_integrator()) {
                Ok(p) => (p - r, "ok"),
                Err(_) => (f64::NAN, "return_map_failed"),
            };
            VerifyRow {
                chart: name,
                r,
                integral: quad.value,
                integral_error: quad.error,
                gain,
                numeric_delta,
                predicted_delta: gain * slope,
                status,
            }
        })
        .collect()
}

pub fn cmd_verify(cfg: &ScenarioConfig) -> CliResult<VerifyArtifacts> {
    let clock = Instant::now();
    let model = cfg.model_or(ModelParams::Simplified(SimplifiedParams::unit()))?;
    let params = *model
        .simplified_params()
        .ok_or_else(|| CliError::Config("verify-theorems requires the simplified model".into()))?;
    let spec = cfg.validated_spec()?.with_gain(0.0);
    let v = &cfg.verify;
    let qcfg = QuadratureConfig { abs_tol: v.quadrature_abs_tol, ..QuadratureConfig::default() };
    let jobs: Vec<(Chart, f64)> = v
        .r_grid
        .iter()
        .map(|&r| (Chart::Oscillation, r))
        .chain(v.rotation_r.iter().map(|&r| (Chart::RotationPlus, r)))
        .collect();
    let rows: Vec<VerifyRow> = jobs
        .par_iter()
        .map(|&(chart, r)| verify_rows(&params, &spec, chart, r, &v.gains, &qcfg))
        .collect::<Vec<_>>()
        .concat();
    let min_of = |chart: &str| {
        rows.iter().filter(|r| r.chart == chart && r.status != "quadrature_failed").map(|r| r.integral).reduce(f64::min)
    };
    let report = regularity_check(&model, &cfg.spec, &qa_grid(720));
    let summary = VerifySummary {
        command: "verify-theorems",
        min_osc_integral: min_of("oscillation"),
        min_rotation_integral: min_of("rotation"),
        regularity_min: report.min_value,
        regularity_passed: report.passed,
        failed_rows: rows.iter().filter(|r| r.status != "ok").count(),
        wall_time: clock.elapsed().as_secs_f64(),
    };
    Ok(VerifyArtifacts { summary, rows })
}

/// Nominal-energy constants of a model next to the printed reference
/// value.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub command: &'static str,
    pub model: &'static str,
    pub kinetic_coefficient: f64,
    pub printed_kinetic_coefficient: f64,
    pub coefficient_ratio: f64,
    pub potential_coefficient: f64,
    pub critical_level: f64,
    pub boundary_momentum: f64,
    /// Boundary momentum implied by the printed coefficient.
    pub boundary_momentum_printed: f64,
    pub observed_boundary_momentum: f64,
    pub boundary_momentum_gap: f64,
}

pub fn cmd_energy(cfg: &ScenarioConfig) -> CliResult<EnergyReport> {
    let model = cfg.model()?;
    let kc = model.kinetic_coefficient();
    let r_bar = model.critical_level();
    let p_bar = model.boundary_momentum();
    Ok(EnergyReport {
        command: "energy",
        model: model.name(),
        kinetic_coefficient: kc,
        printed_kinetic_coefficient: PRINTED_KINETIC_COEFFICIENT,
        coefficient_ratio: PRINTED_KINETIC_COEFFICIENT / kc,
        potential_coefficient: model.potential_coefficient(),
        critical_level: r_bar,
        boundary_momentum: p_bar,
        boundary_momentum_printed: (r_bar / PRINTED_KINETIC_COEFFICIENT).sqrt(),
        observed_boundary_momentum: OBSERVED_BOUNDARY_MOMENTUM,
        boundary_momentum_gap: (p_bar - OBSERVED_BOUNDARY_MOMENTUM).abs(),
    })
}

impl EnergyReport {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(dir, "energy.json", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::from_toml("[model]\nkind = \"distributed\"\n").unwrap();
        assert_eq!(cfg.model, Some(ModelParams::Distributed(DistributedParams::reference_hardware())));
        assert_eq!(cfg.spec, VnhcSpec::default());
        assert_eq!(cfg.duration(), 30.0);
    }

    #[test]
    fn overrides_and_unknown_fields() {
        let cfg = ScenarioConfig::from_toml("[model]\nkind = \"simplified\"\nm = 2.0\n[spec]\ngain = 10.0\n").unwrap();
        assert_eq!(cfg.model, Some(ModelParams::Simplified(SimplifiedParams { m: 2.0, l: 1.0, g: 9.81 })));
        assert_eq!(cfg.spec.gain, 10.0);
        let err = ScenarioConfig::from_toml("[spec]\ngian = 1.0\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("gian"), "{err}");
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn sublevel_samples_respect_bound() {
        let model = AcrobotModel::from_params(ModelParams::Distributed(DistributedParams::reference_hardware())).unwrap();
        let bound = model.nominal_energy(ReducedState::new(PI / 32.0, 0.0));
        let mut rng = run_rng(3, 0);
        for _ in 0..200 {
            assert!(model.nominal_energy(sample_sublevel(&model, bound, &mut rng)) <= bound);
        }
        let a = sample_sublevel(&model, bound, &mut run_rng(3, 5));
        let b = sample_sublevel(&model, bound, &mut run_rng(3, 5));
        assert_eq!(a, b);
        assert_ne!(a, sample_sublevel(&model, bound, &mut run_rng(3, 6)));
    }

    #[test]
    fn energy_report_flags_printed_coefficient() {
        let r = cmd_energy(&ScenarioConfig::default()).unwrap();
        assert!((r.kinetic_coefficient - 36.428).abs() < 1e-2);
        assert!(r.coefficient_ratio > 10.0);
        assert!(r.boundary_momentum_gap < 0.02);
    }
}
