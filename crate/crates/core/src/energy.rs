//! Level-set classification, Poincaré sections and energy-gain verdicts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Direction, EventHit, EventSpec, Trajectory};
use crate::models::{AcrobotModel, ReducedState};

/// Tolerance of [`classify`] around the critical level.
pub const LEVEL_TOL: f64 = 1e-9;
/// Slack of the monotonicity test on crossing norms.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Fewest crossings [`verdict`] will judge.
pub const MIN_CROSSINGS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Oscillation,
    Rotation,
    Boundary,
}

/// Compare the nominal energy at `s` with the critical level.
pub fn classify(model: &AcrobotModel, s: ReducedState) -> Region {
    let e = model.nominal_energy(s);
    let r = model.critical_level();
    if (e - r).abs() <= LEVEL_TOL * r.max(1.0) {
        Region::Boundary
    } else if e < r {
        Region::Oscillation
    } else {
        Region::Rotation
    }
}

/// Which line of the `(q_u, p_u)` plane a crossing lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Section {
    /// `p_u = 0`, `q_u > 0`, inside the oscillation region.
    #[serde(rename = "P_o")]
    Po,
    /// `q_u ≡ 0`, inside the rotation region.
    #[serde(rename = "P_r")]
    Pr,
    /// Any other `p_u = 0` crossing.
    #[serde(rename = "q_axis")]
    QAxis,
    /// Any other `q_u ≡ 0` crossing.
    #[serde(rename = "p_axis")]
    PAxis,
    /// `|q_u| = π`.
    #[serde(rename = "pi_line")]
    PiLine,
}

impl Section {
    pub fn as_str(self) -> &'static str {
        match self {
            Section::Po => "P_o",
            Section::Pr => "P_r",
            Section::QAxis => "q_axis",
            Section::PAxis => "p_axis",
            Section::PiLine => "pi_line",
        }
    }

    /// Crossing of the `p_u` axis (`q_u ≡ 0`).
    pub fn on_p_axis(self) -> bool {
        matches!(self, Section::Pr | Section::PAxis)
    }

    /// Crossing of the `q_u` axis (`p_u = 0`).
    pub fn on_q_axis(self) -> bool {
        matches!(self, Section::Po | Section::QAxis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub t: f64,
    /// State with `q_u` wrapped to `(-π, π]`.
    pub state: ReducedState,
    pub section: Section,
    pub norm: f64,
    /// Nominal energy at the crossing.
    pub energy: f64,
}

/// Guards of the three section lines on an unwrapped angle. The half-angle
/// forms vanish exactly on `q_u ≡ 0` and `q_u ≡ π (mod 2π)` and keep the
/// guards smooth across the `±π` seam.
pub fn q_axis_guard(p_u: f64) -> f64 {
    p_u
}

pub fn p_axis_guard(q_u: f64) -> f64 {
    (0.5 * q_u).sin()
}

pub fn pi_line_guard(q_u: f64) -> f64 {
    (0.5 * q_u).cos()
}

/// Where `q_u` and `p_u` sit in an integrator state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub q_u: usize,
    pub p_u: usize,
}

impl StateLayout {
    /// `(q_u, p_u)`.
    pub const REDUCED: Self = Self { q_u: 0, p_u: 1 };
    /// `(q_u, q_a, p_u, p_a)`.
    pub const FULL: Self = Self { q_u: 0, p_u: 2 };

    pub fn reduced<const N: usize>(&self, y: &[f64; N]) -> ReducedState {
        ReducedState::new(y[self.q_u], y[self.p_u])
    }
}

/// The q-axis, p-axis and π-line events, in that order, non-terminal.
pub fn section_events<'a, const N: usize>(layout: StateLayout) -> Vec<EventSpec<'a, N>> {
    let StateLayout { q_u, p_u } = layout;
    vec![
        EventSpec::new(move |_, y: &[f64; N]| q_axis_guard(y[p_u]), Direction::Any),
        EventSpec::new(move |_, y: &[f64; N]| p_axis_guard(y[q_u]), Direction::Any),
        EventSpec::new(move |_, y: &[f64; N]| pi_line_guard(y[q_u]), Direction::Any),
    ]
}

/// Convert hits of the events built by [`section_events`] (registered from
/// index `first_event` on) into crossing records. Other hits are ignored.
pub fn extract_crossings<const N: usize>(
    model: &AcrobotModel,
    hits: &[EventHit<N>],
    layout: StateLayout,
    first_event: usize,
) -> Vec<CrossingRecord> {
    let r_bar = model.critical_level();
    let mut out: Vec<CrossingRecord> = Vec::new();
    for hit in hits {
        let Some(kind) = hit.event.checked_sub(first_event).filter(|k| *k < 3) else {
            continue;
        };
        let raw = layout.reduced(&hit.state);
        let state = raw.wrapped();
        let energy = model.nominal_energy(state);
        let section = match kind {
            0 if state.q_u > 0.0 && energy < r_bar => Section::Po,
            0 => Section::QAxis,
            1 if energy > r_bar => Section::Pr,
            1 => Section::PAxis,
            _ => Section::PiLine,
        };
        let state = match section {
            // exact values on the section lines
            Section::Po | Section::QAxis => ReducedState::new(state.q_u, 0.0),
            Section::Pr | Section::PAxis => ReducedState::new(0.0, state.p_u),
            Section::PiLine => ReducedState::new(std::f64::consts::PI, state.p_u),
        };
        if let Some(prev) = out.last() {
            if hit.t <= prev.t {
                continue;
            }
        }
        out.push(CrossingRecord { t: hit.t, state, section, norm: state.norm(), energy });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Oscillation,
    Rotation,
}

impl MotionKind {
    pub fn section(self) -> Section {
        match self {
            MotionKind::Oscillation => Section::Po,
            MotionKind::Rotation => Section::Pr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Gaining,
    Losing,
    NonMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyVerdict {
    pub kind: MotionKind,
    pub trend: Trend,
    pub exit_time: Option<f64>,
    pub exit_level: Option<f64>,
    pub crossings: usize,
}

/// Trend of a norm sequence. A constant sequence is neither gaining nor
/// losing.
pub fn trend_of(norms: &[f64]) -> Trend {
    let diffs: Vec<f64> = norms.windows(2).map(|w| w[1] - w[0]).collect();
    let total = norms.last().copied().unwrap_or(0.0) - norms.first().copied().unwrap_or(0.0);
    if diffs.iter().all(|d| *d > -MONOTONE_SLACK) && diffs.iter().any(|d| *d > MONOTONE_SLACK) && total > MONOTONE_SLACK {
        Trend::Gaining
    } else if diffs.iter().all(|d| *d < MONOTONE_SLACK) && diffs.iter().any(|d| *d < -MONOTONE_SLACK) && total < -MONOTONE_SLACK {
        Trend::Losing
    } else {
        Trend::NonMonotone
    }
}

/// Trend of the norms of a ready-made sequence, without exit information.
pub fn verdict_from_norms(kind: MotionKind, norms: &[f64]) -> Result<EnergyVerdict> {
    if norms.len() < MIN_CROSSINGS {
        return Err(Error::InsufficientCrossings { needed: MIN_CROSSINGS, found: norms.len() });
    }
    Ok(EnergyVerdict { kind, trend: trend_of(norms), exit_time: None, exit_level: None, crossings: norms.len() })
}

/// Judge the crossings of `kind`'s section and find when the nominal energy
/// first reaches `r2` (gaining) or `r1` (losing) along `traj`.
pub fn verdict<const N: usize>(
    model: &AcrobotModel,
    crossings: &[CrossingRecord],
    kind: MotionKind,
    r1: f64,
    r2: f64,
    traj: &Trajectory<N>,
    layout: StateLayout,
) -> Result<EnergyVerdict> {
    let norms: Vec<f64> = crossings.iter().filter(|c| c.section == kind.section()).map(|c| c.norm).collect();
    let mut v = verdict_from_norms(kind, &norms)?;
    let level = match v.trend {
        Trend::Gaining => Some((r2, true)),
        Trend::Losing => Some((r1, false)),
        Trend::NonMonotone => None,
    };
    if let Some((level, rising)) = level {
        v.exit_time = first_level_time(model, traj, layout, level, rising);
        v.exit_level = v.exit_time.map(|_| level);
    }
    Ok(v)
}

/// First time the nominal energy reaches `level` from below (`rising`) or
/// above, located by bisection on the dense output.
pub fn first_level_time<const N: usize>(
    model: &AcrobotModel,
    traj: &Trajectory<N>,
    layout: StateLayout,
    level: f64,
    rising: bool,
) -> Option<f64> {
    let reached = |e: f64| if rising { e >= level } else { e <= level };
    let energy_at = |t: f64| model.nominal_energy(layout.reduced(&traj.interpolate(t)));
    let times = traj.times();
    let states = traj.states();
    if reached(model.nominal_energy(layout.reduced(&states[0]))) {
        return Some(times[0]);
    }
    for i in 1..times.len() {
        if reached(model.nominal_energy(layout.reduced(&states[i]))) {
            let (mut lo, mut hi) = (times[i - 1], times[i]);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if reached(energy_at(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-13 * hi.abs().max(1.0) {
                    break;
                }
            }
            return Some(hi);
        }
    }
    None
}
