//! Constrained (reduced) and closed-loop (full) runs with section crossings.

use serde::{Deserialize, Serialize};

use crate::energy::{self, classify, extract_crossings, section_events, CrossingRecord, EnergyVerdict, MotionKind, Region, Section, StateLayout};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Solution, Termination};
use crate::models::{AcrobotModel, AcrobotState, ReducedState};
use crate::vnhc::{closed_loop_field, constraint_error, lift, reduced_vector_field, Constraint, VnhcSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Two-dimensional constrained dynamics.
    #[default]
    Reduced,
    /// Four-dimensional dynamics under the enforcing controller.
    Full,
}

/// One reported point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: AcrobotState,
    /// Nominal energy.
    pub energy: f64,
    pub e: f64,
    pub e_dot: f64,
    /// Gain `I` in force over the step ending here.
    pub gain: f64,
}

impl Sample {
    pub fn from_full<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, gain: f64, t: f64, x: AcrobotState) -> Self {
        let err = constraint_error(model, c, &x);
        Self { t, x, energy: model.nominal_energy(x.reduced()), e: err.e, e_dot: err.e_dot, gain }
    }

    pub fn from_reduced(model: &AcrobotModel, spec: &VnhcSpec, t: f64, s: ReducedState) -> Self {
        let x = lift(model, spec, s);
        Self { t, x, energy: model.nominal_energy(s), e: 0.0, e_dot: 0.0, gain: spec.gain }
    }
}

/// Thresholds used to judge a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictLevels {
    pub r1: f64,
    pub r2: f64,
}

/// Default thresholds: oscillations are judged against `[0.05 E₀, R̄]`,
/// rotations against `[R̄, 2 E₀]`.
pub fn default_levels(model: &AcrobotModel, x0: ReducedState) -> VerdictLevels {
    let e0 = model.nominal_energy(x0);
    let r_bar = model.critical_level();
    match motion_kind(model, x0) {
        MotionKind::Oscillation => VerdictLevels { r1: 0.05 * e0, r2: r_bar },
        MotionKind::Rotation => VerdictLevels { r1: r_bar, r2: 2.0 * e0 },
    }
}

/// Oscillation unless strictly inside the rotation region.
pub fn motion_kind(model: &AcrobotModel, s: ReducedState) -> MotionKind {
    match classify(model, s) {
        Region::Rotation => MotionKind::Rotation,
        Region::Oscillation | Region::Boundary => MotionKind::Oscillation,
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub dynamics: Dynamics,
    pub samples: Vec<Sample>,
    pub crossings: Vec<CrossingRecord>,
    pub verdict: Result<EnergyVerdict>,
    /// First crossing of `|q_u| = π`.
    pub rotation_onset: Option<f64>,
    /// `|p_u|` at the last `p_u`-axis crossing before the onset.
    pub onset_momentum: Option<f64>,
    pub final_time: f64,
    pub stopped_at_onset: bool,
}

impl Simulation {
    pub fn final_energy(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.energy)
    }

    pub fn initial_energy(&self) -> f64 {
        self.samples.first().map_or(f64::NAN, |s| s.energy)
    }

    pub fn final_state(&self) -> AcrobotState {
        self.samples.last().expect("runs always contain the initial sample").x
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub dynamics: Dynamics,
    pub integrator: IntegratorConfig,
    pub levels: Option<VerdictLevels>,
    /// End the run at the first crossing of `|q_u| = π`.
    pub stop_at_onset: bool,
}

impl RunOptions {
    pub fn new(dynamics: Dynamics, integrator: IntegratorConfig) -> Self {
        Self { dynamics, integrator, levels: None, stop_at_onset: false }
    }
}

/// Solve the constrained dynamics from `x0` with the section events
/// registered first.
pub fn solve_reduced(
    model: &AcrobotModel,
    spec: &VnhcSpec,
    x0: ReducedState,
    cfg: &IntegratorConfig,
    stop_at_onset: bool,
) -> Result<Solution<2>> {
    let mut events = section_events::<2>(StateLayout::REDUCED);
    if stop_at_onset {
        events[2].terminal = true;
    }
    let field = |_t: f64, y: &[f64; 2]| reduced_vector_field(model, spec, ReducedState::from_array(*y));
    integrate(field, 0.0, x0.to_array(), cfg, &events)
}

/// Solve the closed loop from `x0` with the section events registered first.
pub fn solve_full<C: Constraint + ?Sized>(
    model: &AcrobotModel,
    c: &C,
    kp: f64,
    kd: f64,
    x0: AcrobotState,
    cfg: &IntegratorConfig,
    stop_at_onset: bool,
) -> Result<Solution<4>> {
    let mut events = section_events::<4>(StateLayout::FULL);
    if stop_at_onset {
        events[2].terminal = true;
    }
    let field = |_t: f64, y: &[f64; 4]| {
        closed_loop_field(model, c, kp, kd, &AcrobotState::from_array(*y)).unwrap_or([f64::NAN; 4])
    };
    integrate(field, 0.0, x0.to_array(), cfg, &events)
}

fn onset(crossings: &[CrossingRecord]) -> (Option<f64>, Option<f64>) {
    let Some(idx) = crossings.iter().position(|c| c.section == Section::PiLine) else {
        return (None, None);
    };
    let momentum = crossings[..idx].iter().rev().find(|c| c.section.on_p_axis()).map(|c| c.state.p_u.abs());
    (Some(crossings[idx].t), momentum)
}

/// Run the constrained or closed-loop dynamics from the point `x0` of the
/// constraint manifold.
pub fn simulate(model: &AcrobotModel, spec: &VnhcSpec, x0: ReducedState, opts: &RunOptions) -> Result<Simulation> {
    spec.validate()?;
    if !(x0.q_u.is_finite() && x0.p_u.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    match opts.dynamics {
        Dynamics::Reduced => {
            let levels = opts.levels.unwrap_or_else(|| default_levels(model, x0));
            let sol = solve_reduced(model, spec, x0, &opts.integrator, opts.stop_at_onset)?;
            let crossings = extract_crossings(model, &sol.events, StateLayout::REDUCED, 0);
            let verdict = energy::verdict(
                model,
                &crossings,
                motion_kind(model, x0),
                levels.r1,
                levels.r2,
                &sol.trajectory,
                StateLayout::REDUCED,
            );
            let samples = sol
                .trajectory
                .times()
                .iter()
                .zip(sol.trajectory.states())
                .map(|(t, y)| Sample::from_reduced(model, spec, *t, ReducedState::from_array(*y)))
                .collect();
            Ok(finish(opts, samples, crossings, verdict, sol.final_time()))
        }
        Dynamics::Full => simulate_full_state(model, spec, lift(model, spec, x0), opts),
    }
}

/// Run the closed loop from an arbitrary four-dimensional state, which need
/// not satisfy the constraint.
pub fn simulate_full_state(model: &AcrobotModel, spec: &VnhcSpec, x0: AcrobotState, opts: &RunOptions) -> Result<Simulation> {
    spec.validate()?;
    if !x0.to_array().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let s0 = x0.reduced();
    let levels = opts.levels.unwrap_or_else(|| default_levels(model, s0));
    let sol = solve_full(model, spec, spec.kp, spec.kd, x0, &opts.integrator, opts.stop_at_onset)?;
    let crossings = extract_crossings(model, &sol.events, StateLayout::FULL, 0);
    let verdict =
        energy::verdict(model, &crossings, motion_kind(model, s0), levels.r1, levels.r2, &sol.trajectory, StateLayout::FULL);
    let samples = sol
        .trajectory
        .times()
        .iter()
        .zip(sol.trajectory.states())
        .map(|(t, y)| Sample::from_full(model, spec, spec.gain, *t, AcrobotState::from_array(*y)))
        .collect();
    let mut sim = finish(opts, samples, crossings, verdict, sol.final_time());
    sim.dynamics = Dynamics::Full;
    Ok(sim)
}

fn finish(
    opts: &RunOptions,
    samples: Vec<Sample>,
    crossings: Vec<CrossingRecord>,
    verdict: Result<EnergyVerdict>,
    final_time: f64,
) -> Simulation {
    let (rotation_onset, onset_momentum) = onset(&crossings);
    Simulation {
        dynamics: opts.dynamics,
        samples,
        crossings,
        verdict,
        rotation_onset,
        onset_momentum,
        final_time,
        stopped_at_onset: opts.stop_at_onset && rotation_onset.is_some(),
    }
}

/// First `|q_u| = π` crossing of the constrained dynamics, or `None` within
/// the horizon.
pub fn rotation_onset(model: &AcrobotModel, spec: &VnhcSpec, x0: ReducedState, cfg: &IntegratorConfig) -> Result<Option<(f64, Option<f64>)>> {
    let sol = solve_reduced(model, spec, x0, cfg, true)?;
    if !matches!(sol.termination, Termination::Event(2)) {
        return Ok(None);
    }
    let crossings = extract_crossings(model, &sol.events, StateLayout::REDUCED, 0);
    let (t, p) = onset(&crossings);
    Ok(t.map(|t| (t, p)))
}
