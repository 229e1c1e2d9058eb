//! Adaptive Dormand–Prince 5(4) integration with cubic Hermite dense output
//! and event location.
//!
//! Events are detected by a sign change of their guard between accepted
//! steps. The crossing is then located with the Illinois method on the map
//! `s ↦ guard(t_n + s, Φ(y_n, s))`, where `Φ` is a single Dormand–Prince step
//! of length `s` from the start of the accepted step, so the located state
//! carries the full accuracy of the integrator rather than that of the
//! interpolant.

use crate::error::{Error, Result};

/// Tolerances and horizon of an integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step (s).
    pub max_step: f64,
    /// Length of the integration horizon (s).
    pub max_time: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.1, max_time: 30.0 }
    }
}

impl IntegratorConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_step: f64, max_time: f64) -> Result<Self> {
        let cfg = Self { rel_tol, abs_tol, max_step, max_time };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_time(mut self, max_time: f64) -> Self {
        self.max_time = max_time;
        self
    }

    pub fn with_tolerance(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let tol_ok = |x: f64| (1e-14..=1e-3).contains(&x);
        if !tol_ok(self.rel_tol) {
            return Err(Error::InvalidParameter { name: "rel_tol", reason: "must lie in [1e-14, 1e-3]".into() });
        }
        if !tol_ok(self.abs_tol) {
            return Err(Error::InvalidParameter { name: "abs_tol", reason: "must lie in [1e-14, 1e-3]".into() });
        }
        if !(self.max_step > 0.0) || !self.max_step.is_finite() {
            return Err(Error::InvalidParameter { name: "max_step", reason: "must be positive".into() });
        }
        if !(self.max_time >= 0.0) || !self.max_time.is_finite() {
            return Err(Error::InvalidParameter { name: "max_time", reason: "must be non-negative".into() });
        }
        Ok(())
    }
}

/// Which sign changes of a guard count as events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

type Guard<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>;

/// A scalar guard whose zero crossings are reported as events.
pub struct EventSpec<'a, const N: usize> {
    guard: Guard<'a, N>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, const N: usize> EventSpec<'a, N> {
    pub fn new(guard: impl Fn(f64, &[f64; N]) -> f64 + 'a, direction: Direction) -> Self {
        Self { guard: Box::new(guard), direction, terminal: false }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    pub fn eval(&self, t: f64, y: &[f64; N]) -> f64 {
        (self.guard)(t, y)
    }

    fn accepts(&self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self.direction {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Any => rising || falling,
        }
    }
}

/// A located event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    /// Index into the event list passed to [`integrate`].
    pub event: usize,
    pub t: f64,
    pub state: [f64; N],
}

/// Accepted steps with derivatives for cubic Hermite interpolation.
#[derive(Debug, Clone, Default)]
pub struct Trajectory<const N: usize> {
    times: Vec<f64>,
    states: Vec<[f64; N]>,
    derivatives: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    fn push(&mut self, t: f64, y: [f64; N], dy: [f64; N]) {
        self.times.push(t);
        self.states.push(y);
        self.derivatives.push(dy);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[[f64; N]] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn last_state(&self) -> [f64; N] {
        *self.states.last().expect("trajectory is never empty")
    }

    /// Cubic Hermite interpolation; `t` is clamped to the covered interval.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.states[0];
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1];
        }
        let i = self.times.partition_point(|&ti| ti <= t).max(1) - 1;
        hermite(
            self.times[i],
            &self.states[i],
            &self.derivatives[i],
            self.times[i + 1],
            &self.states[i + 1],
            &self.derivatives[i + 1],
            t,
        )
    }
}

fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    if h == 0.0 {
        return *y1;
    }
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    std::array::from_fn(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The horizon `t0 + max_time` was reached.
    Horizon,
    /// The terminal event with this index fired.
    Event(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub trajectory: Trajectory<N>,
    pub events: Vec<EventHit<N>>,
    pub termination: Termination,
    /// Set when terminal events were requested but none fired before the
    /// horizon.
    pub truncated: bool,
    pub stats: Stats,
}

impl<const N: usize> Solution<N> {
    pub fn final_time(&self) -> f64 {
        self.trajectory.end_time()
    }

    pub fn final_state(&self) -> [f64; N] {
        self.trajectory.last_state()
    }

    /// Hits of a single event, in time order.
    pub fn hits(&self, event: usize) -> impl Iterator<Item = &EventHit<N>> {
        self.events.iter().filter(move |h| h.event == event)
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
/// A guard this close to zero at the start of a step cannot bracket a new
/// crossing; it is the crossing that was just located.
const EVENT_ZERO: f64 = 1e-10;
const EVENT_TOL: f64 = 1e-13;
const EVENT_MAX_ITER: usize = 200;

struct Step<const N: usize> {
    y: [f64; N],
    k7: [f64; N],
    err: [f64; N],
}

fn combine<const N: usize>(y: &[f64; N], h: f64, ks: &[&[f64; N]], coeffs: &[f64]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (k, c) in ks.iter().zip(coeffs) {
            acc += c * k[i];
        }
        y[i] + h * acc
    })
}

fn dp_step<F, const N: usize>(field: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Step<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = field(t + C[1] * h, &combine(y, h, &[k1], &A2));
    let k3 = field(t + C[2] * h, &combine(y, h, &[k1, &k2], &A3));
    let k4 = field(t + C[3] * h, &combine(y, h, &[k1, &k2, &k3], &A4));
    let k5 = field(t + C[4] * h, &combine(y, h, &[k1, &k2, &k3, &k4], &A5));
    let k6 = field(t + C[5] * h, &combine(y, h, &[k1, &k2, &k3, &k4, &k5], &A6));
    let y_new = combine(y, h, &[k1, &k2, &k3, &k4, &k5, &k6], &B);
    let k7 = field(t + h, &y_new);
    let err = std::array::from_fn(|i| {
        h * (E[0] * k1[i] + E[2] * k3[i] + E[3] * k4[i] + E[4] * k5[i] + E[5] * k6[i] + E[6] * k7[i])
    });
    Step { y: y_new, k7, err }
}

fn error_norm<const N: usize>(cfg: &IntegratorConfig, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        let r = err[i] / scale;
        sum += r * r;
    }
    (sum / N as f64).sqrt()
}

fn finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn initial_step<F, const N: usize>(field: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], cfg: &IntegratorConfig) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let scale: [f64; N] = std::array::from_fn(|i| cfg.abs_tol + cfg.rel_tol * y0[i].abs());
    let rms = |v: &[f64; N]| (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let y1: [f64; N] = std::array::from_fn(|i| y0[i] + h0 * f0[i]);
    let f1 = field(t0 + h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Integrate `ẏ = field(t, y)` from `(t0, y0)` over `cfg.max_time`.
pub fn integrate<F, const N: usize>(
    mut field: F,
    t0: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    events: &[EventSpec<'_, N>],
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    cfg.validate()?;
    if !finite(&y0) || !t0.is_finite() {
        return Err(Error::NonFinite { t: t0 });
    }
    let t_end = t0 + cfg.max_time;
    let mut stats = Stats::default();
    let mut f0 = field(t0, &y0);
    stats.evaluations += 1;
    if !finite(&f0) {
        return Err(Error::NonFinite { t: t0 });
    }

    let mut trajectory = Trajectory::default();
    trajectory.push(t0, y0, f0);
    let mut hits = Vec::new();
    let has_terminal = events.iter().any(|e| e.terminal);

    if cfg.max_time == 0.0 {
        return Ok(Solution { trajectory, events: hits, termination: Termination::Horizon, truncated: has_terminal, stats });
    }

    let mut guards: Vec<f64> = events.iter().map(|e| e.eval(t0, &y0)).collect();
    let mut t = t0;
    let mut y = y0;
    let mut h = initial_step(&mut field, t0, &y0, &f0, cfg);
    stats.evaluations += 1;
    let mut last_rejected = false;

    loop {
        let remaining = t_end - t;
        if remaining <= 1e-14 * t_end.abs().max(1.0) {
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        let step = dp_step(&mut field, t, &y, &f0, h);
        stats.evaluations += 6;
        let norm = error_norm(cfg, &y, &step.y, &step.err);
        if !norm.is_finite() || !finite(&step.y) || !finite(&step.k7) {
            stats.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        if norm > 1.0 {
            stats.rejected += 1;
            h *= (SAFETY * norm.powf(-0.2)).max(MIN_FACTOR);
            last_rejected = true;
            continue;
        }
        stats.accepted += 1;

        let t_new = if last { t_end } else { t + h };
        let mut step_hits: Vec<EventHit<N>> = Vec::new();
        let new_guards: Vec<f64> = events.iter().map(|e| e.eval(t_new, &step.y)).collect();
        for (i, spec) in events.iter().enumerate() {
            let before = guards[i];
            let after = new_guards[i];
            if before.abs() <= EVENT_ZERO || !spec.accepts(before, after) {
                continue;
            }
            let (s, state) = locate(&mut field, &mut stats, spec, t, &y, &f0, h, before, after, &step.y);
            step_hits.push(EventHit { event: i, t: t + s, state });
        }
        step_hits.sort_by(|a, b| a.t.total_cmp(&b.t));

        if let Some(pos) = step_hits.iter().position(|hit| events[hit.event].terminal) {
            step_hits.truncate(pos + 1);
            let hit = step_hits[pos];
            let dy = field(hit.t, &hit.state);
            stats.evaluations += 1;
            trajectory.push(hit.t, hit.state, dy);
            hits.extend(step_hits);
            return Ok(Solution { trajectory, events: hits, termination: Termination::Event(hit.event), truncated: false, stats });
        }
        hits.extend(step_hits);

        t = t_new;
        y = step.y;
        f0 = step.k7;
        guards = new_guards;
        trajectory.push(t, y, f0);
        if last {
            break;
        }

        let mut factor = if norm == 0.0 { MAX_FACTOR } else { (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
        if last_rejected {
            factor = factor.min(1.0);
        }
        last_rejected = false;
        h = (h * factor).min(cfg.max_step);
    }

    Ok(Solution { trajectory, events: hits, termination: Termination::Horizon, truncated: has_terminal, stats })
}

#[allow(clippy::too_many_arguments)]
fn locate<F, const N: usize>(
    field: &mut F,
    stats: &mut Stats,
    spec: &EventSpec<'_, N>,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    g_start: f64,
    g_end: f64,
    y_end: &[f64; N],
) -> (f64, [f64; N])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let (mut a, mut fa) = (0.0, g_start);
    let (mut b, mut fb) = (h, g_end);
    let mut best = (h, *y_end, g_end.abs());
    if g_end == 0.0 {
        return (h, *y_end);
    }
    let mut side = 0i8;
    for _ in 0..EVENT_MAX_ITER {
        let mut s = (a * fb - b * fa) / (fb - fa);
        if !(s > a.min(b) && s < a.max(b)) {
            s = 0.5 * (a + b);
        }
        let state = dp_step(field, t, y, k1, s).y;
        stats.evaluations += 6;
        let fs = spec.eval(t + s, &state);
        if fs.abs() < best.2 || (fs.abs() == best.2 && s < best.0) {
            best = (s, state, fs.abs());
        }
        if fs.abs() <= EVENT_TOL || (b - a).abs() <= 4.0 * f64::EPSILON * (t + s).abs().max(1.0) {
            return (s, state);
        }
        if (fs > 0.0) == (fb > 0.0) {
            b = s;
            fb = fs;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = b;
            fa = fb;
            b = s;
            fb = fs;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if fs.abs() <= EVENT_TOL {
            return (s, state);
        }
    }
    (best.0, best.1)
}
