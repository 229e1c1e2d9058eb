//! Hysteresis supervisor that switches between injecting (`I > 0`),
//! dissipating (`I < 0`) and leg-extended (`I = 0`) constraints at section
//! crossings.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::{extract_crossings, section_events, CrossingRecord, StateLayout};
use crate::error::{ensure_positive, Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Termination};
use crate::mechanics::wrap_angle;
use crate::models::{AcrobotModel, AcrobotState, ReducedState};
use crate::simulation::{Dynamics, Sample};
use crate::vnhc::{closed_loop_field, lift, reduced_vector_field, VnhcSpec};

/// States closer than this to a trigger line count as lying on it.
const ON_LINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegulationMode {
    /// Regulate the swing amplitude `|q_u|` to `q_des`.
    Oscillation,
    /// Regulate the bottom momentum `|p_u|` to `p_des`.
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulationConfig {
    pub mode: RegulationMode,
    /// `q_des` (rad) or `p_des` (kg·m²/s).
    pub target: f64,
    pub delta: f64,
    /// `|I|` of the injecting and dissipating constraints.
    pub gain_magnitude: f64,
}

impl RegulationConfig {
    pub fn oscillation(q_des: f64, delta: f64, gain_magnitude: f64) -> Self {
        Self { mode: RegulationMode::Oscillation, target: q_des, delta, gain_magnitude }
    }

    pub fn rotation(p_des: f64, delta: f64, gain_magnitude: f64) -> Self {
        Self { mode: RegulationMode::Rotation, target: p_des, delta, gain_magnitude }
    }

    pub fn validate(&self, model: &AcrobotModel) -> Result<()> {
        ensure_positive("gain_magnitude", self.gain_magnitude)?;
        ensure_positive("target", self.target)?;
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidParameter { name: "delta", reason: "must be non-negative".into() });
        }
        match self.mode {
            RegulationMode::Oscillation => {
                if self.target >= PI {
                    return Err(Error::InvalidParameter { name: "target", reason: "q_des must lie in (0, pi)".into() });
                }
                let max = PI / self.target - 1.0;
                if self.delta > max {
                    return Err(Error::InvalidParameter {
                        name: "delta",
                        reason: format!("must not exceed pi/q_des - 1 = {max}"),
                    });
                }
            }
            RegulationMode::Rotation => {
                if self.delta > 1.0 {
                    return Err(Error::InvalidParameter { name: "delta", reason: "must lie in [0, 1]".into() });
                }
                let floor = model.boundary_momentum();
                if (1.0 - self.delta) * self.target <= floor {
                    return Err(Error::InvalidParameter {
                        name: "target",
                        reason: format!("(1 - delta) * p_des must exceed the boundary momentum {floor}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn lower(&self) -> f64 {
        (1.0 - self.delta) * self.target
    }

    fn upper(&self) -> f64 {
        (1.0 + self.delta) * self.target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Inject,
    Dissipate,
    Extend,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Inject => "inject",
            Decision::Dissipate => "dissipate",
            Decision::Extend => "extend",
        }
    }

    /// Gain `I` applied for this decision.
    pub fn gain(self, magnitude: f64) -> f64 {
        match self {
            Decision::Inject => magnitude,
            Decision::Dissipate => -magnitude,
            Decision::Extend => 0.0,
        }
    }
}

fn banded(cfg: &RegulationConfig, value: f64) -> Decision {
    if value < cfg.lower() {
        Decision::Inject
    } else if value > cfg.upper() {
        Decision::Dissipate
    } else {
        Decision::Extend
    }
}

/// Decision at a `p_u`-axis crossing; band edges resolve to extend.
pub fn rotation_decide(cfg: &RegulationConfig, p_u: f64) -> Decision {
    banded(cfg, p_u.abs())
}

/// Decision at a `q_u`-axis crossing; band edges resolve to extend.
pub fn oscillation_decide(cfg: &RegulationConfig, q_u: f64) -> Decision {
    banded(cfg, wrap_angle(q_u).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Initial,
    QAxis,
    PAxis,
    PiLine,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::Initial => "initial",
            Trigger::QAxis => "q_axis",
            Trigger::PAxis => "p_axis",
            Trigger::PiLine => "pi_line",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub t: f64,
    pub trigger: Trigger,
    /// `|q_u|` or `|p_u|` at the trigger.
    pub value: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisorState {
    pub active: Decision,
    pub switch_log: Vec<SwitchRecord>,
}

impl SupervisorState {
    /// Number of times the active decision changed.
    pub fn switch_count(&self) -> usize {
        self.switch_log.windows(2).filter(|w| w[0].decision != w[1].decision).count()
    }

    /// Length of the trailing run of extend decisions.
    pub fn trailing_extends(&self) -> usize {
        self.switch_log.iter().rev().take_while(|r| r.decision == Decision::Extend).count()
    }
}

/// Decision for the trigger `trigger` at reduced state `s`.
pub fn decide(cfg: &RegulationConfig, trigger: Trigger, s: ReducedState) -> (f64, Decision) {
    match (cfg.mode, trigger) {
        // a π-line crossing means the orbit has become a rotation
        (RegulationMode::Oscillation, Trigger::PiLine) => (PI, Decision::Dissipate),
        (RegulationMode::Oscillation, _) => (wrap_angle(s.q_u).abs(), oscillation_decide(cfg, s.q_u)),
        (RegulationMode::Rotation, _) => (s.p_u.abs(), rotation_decide(cfg, s.p_u)),
    }
}

fn initial_trigger(cfg: &RegulationConfig, s: ReducedState) -> Option<Trigger> {
    let q = wrap_angle(s.q_u);
    match cfg.mode {
        RegulationMode::Oscillation if s.p_u.abs() <= ON_LINE_TOL => Some(Trigger::QAxis),
        RegulationMode::Oscillation if (q.abs() - PI).abs() <= ON_LINE_TOL => Some(Trigger::PiLine),
        RegulationMode::Rotation if q.abs() <= ON_LINE_TOL => Some(Trigger::PAxis),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct RegulatedRun {
    pub samples: Vec<Sample>,
    pub crossings: Vec<CrossingRecord>,
    pub supervisor: SupervisorState,
}

impl RegulatedRun {
    /// Last `|q_u|` peak (oscillation) or bottom `|p_u|` (rotation).
    pub fn terminal_peak(&self, mode: RegulationMode) -> Option<f64> {
        let pick = |c: &&CrossingRecord| match mode {
            RegulationMode::Oscillation => c.section.on_q_axis(),
            RegulationMode::Rotation => c.section.on_p_axis(),
        };
        self.crossings.iter().rev().find(pick).map(|c| match mode {
            RegulationMode::Oscillation => c.state.q_u.abs(),
            RegulationMode::Rotation => c.state.p_u.abs(),
        })
    }

    /// At least `min_extends` trailing extend decisions and a terminal peak
    /// inside the band.
    pub fn captured(&self, cfg: &RegulationConfig, min_extends: usize) -> bool {
        let in_band = self.terminal_peak(cfg.mode).is_some_and(|v| v >= cfg.lower() && v <= cfg.upper());
        in_band && self.supervisor.trailing_extends() >= min_extends
    }
}

fn trigger_of(cfg: &RegulationConfig, event: usize) -> Option<Trigger> {
    match (cfg.mode, event) {
        (RegulationMode::Oscillation, 0) => Some(Trigger::QAxis),
        (RegulationMode::Oscillation, 2) => Some(Trigger::PiLine),
        (RegulationMode::Rotation, 1) => Some(Trigger::PAxis),
        _ => None,
    }
}

/// Integrate under supervision for `duration` seconds from `x0` on the
/// constraint manifold of the initial decision. `base` supplies `q̄_a` and
/// the controller gains; its `I` is replaced by the supervisor.
pub fn run_regulated(
    model: &AcrobotModel,
    base: &VnhcSpec,
    cfg: &RegulationConfig,
    x0: ReducedState,
    duration: f64,
    dynamics: Dynamics,
    integrator: &IntegratorConfig,
) -> Result<RegulatedRun> {
    cfg.validate(model)?;
    base.validate()?;
    ensure_positive("duration", duration)?;

    let (value, active) = match initial_trigger(cfg, x0) {
        Some(trigger) => decide(cfg, trigger, x0),
        None => (f64::NAN, Decision::Extend),
    };
    let mut supervisor = SupervisorState {
        active,
        switch_log: vec![SwitchRecord { t: 0.0, trigger: Trigger::Initial, value, decision: active }],
    };

    let mut spec = base.with_gain(active.gain(cfg.gain_magnitude));
    let mut t0 = 0.0;
    let mut samples = Vec::new();
    let mut crossings: Vec<CrossingRecord> = Vec::new();
    let mut full_state = lift(model, &spec, x0);
    let mut reduced_state = x0;

    while duration - t0 > 1e-12 {
        let seg_cfg = integrator.with_max_time(duration - t0);
        let layout = match dynamics {
            Dynamics::Reduced => StateLayout::REDUCED,
            Dynamics::Full => StateLayout::FULL,
        };
        let (seg_samples, hits_crossings, termination, end) = match dynamics {
            Dynamics::Reduced => {
                let mut events = section_events::<2>(layout);
                for (i, e) in events.iter_mut().enumerate() {
                    e.terminal = trigger_of(cfg, i).is_some();
                }
                let field = |_t: f64, y: &[f64; 2]| reduced_vector_field(model, &spec, ReducedState::from_array(*y));
                let sol = integrate(field, t0, reduced_state.to_array(), &seg_cfg, &events)?;
                let samples: Vec<Sample> = sol
                    .trajectory
                    .times()
                    .iter()
                    .zip(sol.trajectory.states())
                    .map(|(t, y)| Sample::from_reduced(model, &spec, *t, ReducedState::from_array(*y)))
                    .collect();
                let crossings = extract_crossings(model, &sol.events, layout, 0);
                let end = ReducedState::from_array(sol.final_state());
                reduced_state = end;
                (samples, crossings, sol.termination, end)
            }
            Dynamics::Full => {
                let mut events = section_events::<4>(layout);
                for (i, e) in events.iter_mut().enumerate() {
                    e.terminal = trigger_of(cfg, i).is_some();
                }
                let field = |_t: f64, y: &[f64; 4]| {
                    closed_loop_field(model, &spec, spec.kp, spec.kd, &AcrobotState::from_array(*y)).unwrap_or([f64::NAN; 4])
                };
                let sol = integrate(field, t0, full_state.to_array(), &seg_cfg, &events)?;
                let samples: Vec<Sample> = sol
                    .trajectory
                    .times()
                    .iter()
                    .zip(sol.trajectory.states())
                    .map(|(t, y)| Sample::from_full(model, &spec, spec.gain, *t, AcrobotState::from_array(*y)))
                    .collect();
                let crossings = extract_crossings(model, &sol.events, layout, 0);
                full_state = AcrobotState::from_array(sol.final_state());
                (samples, crossings, sol.termination, full_state.reduced())
            }
        };
        let skip = usize::from(!samples.is_empty());
        samples.extend(seg_samples.into_iter().skip(skip));
        let last_t = crossings.last().map_or(f64::NEG_INFINITY, |c| c.t);
        crossings.extend(hits_crossings.into_iter().filter(|c| c.t > last_t));
        let t_end = samples.last().map_or(t0, |s| s.t);

        match termination {
            Termination::Horizon => break,
            Termination::Event(i) => {
                let trigger = trigger_of(cfg, i).expect("only trigger events are terminal");
                let (value, decision) = decide(cfg, trigger, end);
                supervisor.switch_log.push(SwitchRecord { t: t_end, trigger, value, decision });
                supervisor.active = decision;
                spec = base.with_gain(decision.gain(cfg.gain_magnitude));
                if t_end <= t0 {
                    return Err(Error::StepUnderflow { t: t_end });
                }
                t0 = t_end;
            }
        }
    }

    Ok(RegulatedRun { samples, crossings, supervisor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{distributed_system, DistributedParams};

    fn model() -> AcrobotModel {
        distributed_system(DistributedParams::reference_hardware()).unwrap()
    }

    #[test]
    fn rotation_rule() {
        let cfg = RegulationConfig::rotation(0.19, 0.02, 10.0);
        assert_eq!(rotation_decide(&cfg, 0.10), Decision::Inject);
        assert_eq!(rotation_decide(&cfg, -0.23), Decision::Dissipate);
        assert_eq!(rotation_decide(&cfg, 0.19), Decision::Extend);
        assert_eq!(rotation_decide(&cfg, 0.98 * 0.19), Decision::Extend);
    }

    #[test]
    fn oscillation_rule() {
        let cfg = RegulationConfig::oscillation(PI / 2.0, 0.05, 10.0);
        assert_eq!(oscillation_decide(&cfg, PI / 32.0), Decision::Inject);
        assert_eq!(oscillation_decide(&cfg, -PI / 2.0), Decision::Extend);
        assert_eq!(decide(&cfg, Trigger::PiLine, ReducedState::new(PI, 0.1)).1, Decision::Dissipate);
    }

    #[test]
    fn config_validation() {
        let m = model();
        assert!(RegulationConfig::oscillation(PI / 2.0, 0.05, 10.0).validate(&m).is_ok());
        assert!(RegulationConfig::oscillation(PI / 2.0, 1.5, 10.0).validate(&m).is_err());
        assert!(RegulationConfig::oscillation(PI, 0.0, 10.0).validate(&m).is_err());
        assert!(RegulationConfig::rotation(0.19, 0.02, 10.0).validate(&m).is_ok());
        assert!(RegulationConfig::rotation(0.17, 0.02, 10.0).validate(&m).is_err());
        assert!(RegulationConfig::rotation(0.19, 0.02, 0.0).validate(&m).is_err());
    }

    #[test]
    fn in_band_extend_orbit_stays() {
        let m = model();
        let cfg = RegulationConfig::oscillation(PI / 2.0, 0.05, 10.0);
        let run = run_regulated(
            &m,
            &VnhcSpec::default(),
            &cfg,
            ReducedState::new(PI / 2.0, 0.0),
            10.0,
            Dynamics::Reduced,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(run.supervisor.switch_log.iter().all(|r| r.decision == Decision::Extend));
        assert!(run.captured(&cfg, 5));
        assert_eq!(run.supervisor.switch_count(), 0);
        assert!((run.samples.last().unwrap().t - 10.0).abs() < 1e-12);
    }
}
