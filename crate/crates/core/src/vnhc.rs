//! The arctan leg-swing constraint `q_a = q̄_a·arctan(I·p_u)`, its
//! enforcement by input-output feedback linearization on the full acrobot,
//! and the constrained two-dimensional dynamics.
//!
//! All acrobot formulas are written for the simply actuated two-link case
//! (`B = [0; 1]`) with an inertia matrix that depends on `q_a` only.

use nalgebra::{DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::mechanics::{invert_spd, inverse_inertia_gradient, MechanicalSystem};
use crate::models::{AcrobotModel, AcrobotState, ReducedState, SimplifiedParams};

/// Below this magnitude the decoupling scalar is treated as singular.
pub const REGULARITY_TOL: f64 = 1e-9;
/// Relative step of the finite-difference drift term of `ë`.
pub const DRIFT_STEP: f64 = 1e-7;

/// A constraint `q_a = f(q_u, p_u)`.
pub trait Constraint: Send + Sync {
    fn f(&self, q_u: f64, p_u: f64) -> f64;
    fn df_dqu(&self, q_u: f64, p_u: f64) -> f64;
    fn df_dpu(&self, q_u: f64, p_u: f64) -> f64;
}

impl<C: Constraint + ?Sized> Constraint for &C {
    fn f(&self, q_u: f64, p_u: f64) -> f64 {
        (**self).f(q_u, p_u)
    }
    fn df_dqu(&self, q_u: f64, p_u: f64) -> f64 {
        (**self).df_dqu(q_u, p_u)
    }
    fn df_dpu(&self, q_u: f64, p_u: f64) -> f64 {
        (**self).df_dpu(q_u, p_u)
    }
}

/// Arctan constraint parameters and the gains of the enforcing controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VnhcSpec {
    /// Leg-swing amplitude `q̄_a` (rad).
    pub qa_bar: f64,
    /// Signed gain `I` (s/(kg·m²)).
    pub gain: f64,
    pub kp: f64,
    pub kd: f64,
    /// Largest admissible leg angle `Q_a` (rad).
    pub qa_max: f64,
}

impl Default for VnhcSpec {
    fn default() -> Self {
        Self { qa_bar: 1.0, gain: 0.0, kp: 100.0, kd: 20.0, qa_max: std::f64::consts::FRAC_PI_2 }
    }
}

impl VnhcSpec {
    pub fn new(qa_bar: f64, gain: f64) -> Result<Self> {
        let spec = Self { qa_bar, gain, ..Self::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_controller_gains(mut self, kp: f64, kd: f64) -> Self {
        self.kp = kp;
        self.kd = kd;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("qa_bar", self.qa_bar)?;
        ensure_positive("kp", self.kp)?;
        ensure_positive("kd", self.kd)?;
        ensure_positive("qa_max", self.qa_max)?;
        if !self.gain.is_finite() {
            return Err(Error::InvalidParameter { name: "gain", reason: "must be finite".into() });
        }
        if self.qa_max >= std::f64::consts::PI {
            return Err(Error::InvalidParameter { name: "qa_max", reason: "must be below pi".into() });
        }
        if self.qa_bar * std::f64::consts::FRAC_PI_2 > self.qa_max * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "qa_bar",
                reason: format!("qa_bar * pi/2 must not exceed qa_max = {}", self.qa_max),
            });
        }
        Ok(())
    }
}

impl Constraint for VnhcSpec {
    fn f(&self, _q_u: f64, p_u: f64) -> f64 {
        constraint_f(self, p_u)
    }
    fn df_dqu(&self, _q_u: f64, _p_u: f64) -> f64 {
        0.0
    }
    fn df_dpu(&self, _q_u: f64, p_u: f64) -> f64 {
        let ip = self.gain * p_u;
        self.qa_bar * self.gain / (1.0 + ip * ip)
    }
}

/// `q̄_a·arctan(I·p_u)`.
pub fn constraint_f(spec: &VnhcSpec, p_u: f64) -> f64 {
    spec.qa_bar * (spec.gain * p_u).atan()
}

/// Error output `e = h(q, p)` and its time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintError {
    pub e: f64,
    pub e_dot: f64,
}

fn error_value<C: Constraint + ?Sized>(c: &C, x: &AcrobotState) -> f64 {
    x.q_a - c.f(x.q_u, x.p_u)
}

/// `ė` along the open-loop flow; independent of `τ`.
fn error_rate<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, x: &AcrobotState) -> f64 {
    let qdot = model.inverse_inertia2(x.q_a) * Vector2::new(x.p_u, x.p_a);
    let pdot_u = -model.potential_gradient2(x.q_u, x.q_a)[0];
    qdot[1] - c.df_dqu(x.q_u, x.p_u) * qdot[0] - c.df_dpu(x.q_u, x.p_u) * pdot_u
}

pub fn constraint_error<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, x: &AcrobotState) -> ConstraintError {
    ConstraintError { e: error_value(c, x), e_dot: error_rate(model, c, x) }
}

/// Coefficient `H` of `τ` in `ë`: `(dh_q M⁻¹ - dh_{p_u}·pᵀ∂M⁻¹/∂q_u)[0; 1]`.
/// The second term vanishes because `M` does not depend on `q_u`.
pub fn decoupling_scalar<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, x: &AcrobotState) -> Result<f64> {
    let h = decoupling_unchecked(model, c, x);
    if !(h.abs() >= REGULARITY_TOL) {
        return Err(Error::NotRegular { value: h });
    }
    Ok(h)
}

fn decoupling_unchecked<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, x: &AcrobotState) -> f64 {
    let minv = model.inverse_inertia2(x.q_a);
    let dh_q = Vector2::new(-c.df_dqu(x.q_u, x.p_u), 1.0);
    dh_q.dot(&minv.column(1))
}

/// Point-mass closed form `((1+c_a)∂f/∂q_u + 3 + 2c_a) / (ml²(2 - c_a²))`.
pub fn decoupling_scalar_closed_form(params: &SimplifiedParams, q_a: f64, df_dqu: f64) -> f64 {
    let c = q_a.cos();
    ((1.0 + c) * df_dqu + 3.0 + 2.0 * c) / (params.m * params.l * params.l * (2.0 - c * c))
}

/// Drift part of `ë`: the derivative of `ė` along the `τ = 0` flow, by
/// central differences.
pub fn error_drift<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, x: &AcrobotState) -> f64 {
    let f0 = model.vector_field(x, 0.0);
    let speed = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if speed == 0.0 {
        return 0.0;
    }
    let size = x.to_array().iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let h = DRIFT_STEP * size / speed;
    let y = x.to_array();
    let fwd = AcrobotState::from_array(std::array::from_fn(|i| y[i] + h * f0[i]));
    let bwd = AcrobotState::from_array(std::array::from_fn(|i| y[i] - h * f0[i]));
    (error_rate(model, c, &fwd) - error_rate(model, c, &bwd)) / (2.0 * h)
}

/// `τ = -H⁻¹(E + k_p e + k_d ė)`, giving `ë = -k_p e - k_d ė`.
pub fn enforcement_torque<C: Constraint + ?Sized>(
    model: &AcrobotModel,
    c: &C,
    kp: f64,
    kd: f64,
    x: &AcrobotState,
) -> Result<f64> {
    let h = decoupling_scalar(model, c, x)?;
    let err = constraint_error(model, c, x);
    let drift = error_drift(model, c, x);
    Ok(-(drift + kp * err.e + kd * err.e_dot) / h)
}

/// Full closed-loop vector field under [`enforcement_torque`].
pub fn closed_loop_field<C: Constraint + ?Sized>(
    model: &AcrobotModel,
    c: &C,
    kp: f64,
    kd: f64,
    x: &AcrobotState,
) -> Result<[f64; 4]> {
    let tau = enforcement_torque(model, c, kp, kd, x)?;
    Ok(model.vector_field(x, tau))
}

/// Actuated momentum on the constraint manifold:
/// `p_a = (-∂f/∂p_u·∂V/∂q_u - A₁ p_u) / A₂` with `A = dh_q M⁻¹`,
/// evaluated at `q_a = f(q_u, p_u)`.
pub fn momentum_completion_g<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, s: ReducedState) -> f64 {
    let (p_a, _, _) = completion(model, c, s);
    p_a
}

fn completion<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, s: ReducedState) -> (f64, f64, Matrix2<f64>) {
    let q_a = c.f(s.q_u, s.p_u);
    let minv = model.inverse_inertia2(q_a);
    let dv_dqu = model.potential_gradient2(s.q_u, q_a)[0];
    let df_dqu = c.df_dqu(s.q_u, s.p_u);
    let a1 = -df_dqu * minv[(0, 0)] + minv[(1, 0)];
    let a2 = -df_dqu * minv[(0, 1)] + minv[(1, 1)];
    let p_a = (-c.df_dpu(s.q_u, s.p_u) * dv_dqu - a1 * s.p_u) / a2;
    (p_a, dv_dqu, minv)
}

/// Lift a point of the constrained dynamics onto the constraint manifold.
pub fn lift<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, s: ReducedState) -> AcrobotState {
    let q_a = c.f(s.q_u, s.p_u);
    AcrobotState::new(s.q_u, q_a, s.p_u, momentum_completion_g(model, c, s))
}

/// Constrained dynamics `(q̇_u, ṗ_u)`.
pub fn reduced_vector_field<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, s: ReducedState) -> [f64; 2] {
    let (p_a, dv_dqu, minv) = completion(model, c, s);
    [minv[(0, 0)] * s.p_u + minv[(0, 1)] * p_a, -dv_dqu]
}

/// Point-mass closed form of [`momentum_completion_g`].
pub fn momentum_completion_closed_form(params: &SimplifiedParams, spec: &VnhcSpec, s: ReducedState) -> f64 {
    let SimplifiedParams { m, l, g } = *params;
    let q_a = constraint_f(spec, s.p_u);
    let c = q_a.cos();
    let ip = spec.gain * s.p_u;
    let torque = 2.0 * s.q_u.sin() + (s.q_u + q_a).sin();
    (1.0 + c) * s.p_u / (3.0 + 2.0 * c)
        - m * m * g * l.powi(3) * spec.qa_bar * spec.gain * (2.0 - c * c) * torque
            / ((3.0 + 2.0 * c) * (1.0 + ip * ip))
}

/// Point-mass closed form of [`reduced_vector_field`].
pub fn reduced_vector_field_closed_form(params: &SimplifiedParams, spec: &VnhcSpec, s: ReducedState) -> [f64; 2] {
    let SimplifiedParams { m, l, g } = *params;
    let q_a = constraint_f(spec, s.p_u);
    let c = q_a.cos();
    let ip = spec.gain * s.p_u;
    let w = 1.0 + ip * ip;
    let torque = 2.0 * s.q_u.sin() + (s.q_u + q_a).sin();
    let qdot = (w * s.p_u + m * m * g * l.powi(3) * spec.qa_bar * spec.gain * torque * (1.0 + c))
        / (m * l * l * w * (3.0 + 2.0 * c));
    [qdot, -m * g * l * torque]
}

/// Generic evaluation for any two-DOF simply actuated [`MechanicalSystem`]
/// with `B = [0; 1]` and inertia independent of `q_u`. Used as an
/// independent check of the acrobot-specialized path.
pub fn reduced_vector_field_generic<S, C>(sys: &S, c: &C, s: ReducedState) -> Result<[f64; 2]>
where
    S: MechanicalSystem + ?Sized,
    C: Constraint + ?Sized,
{
    if sys.dof() != 2 || sys.actuators() != 1 {
        return Err(Error::Dimension("generic constrained dynamics need n = 2, k = 1".into()));
    }
    let b = sys.input_matrix();
    if b[(0, 0)].abs() > 1e-12 || (b[(1, 0)] - 1.0).abs() > 1e-12 {
        return Err(Error::Dimension("system is not in simply actuated form".into()));
    }
    let q = DVector::from_column_slice(&[s.q_u, c.f(s.q_u, s.p_u)]);
    let m = sys.inertia(&q);
    let dm_dqu = sys.inertia_gradient(&q).view((0, 0), (2, 2)).into_owned();
    if dm_dqu.amax() > 1e-9 * m.amax().max(1.0) {
        return Err(Error::InvalidParameter {
            name: "inertia",
            reason: "inertia depends on the unactuated coordinate".into(),
        });
    }
    let minv = invert_spd(&m)?;
    let grad_v = sys.potential_gradient(&q);
    let dh_q = nalgebra::RowDVector::from_row_slice(&[-c.df_dqu(s.q_u, s.p_u), 1.0]);
    let a = &dh_q * &minv;
    let p_a = (-c.df_dpu(s.q_u, s.p_u) * grad_v[0] - a[0] * s.p_u) / a[1];
    let p = DVector::from_column_slice(&[s.p_u, p_a]);
    let qdot = &minv * &p;
    // -½ pᵀ ∂M⁻¹/∂q_u p, zero under the inertia check above
    let dminv = inverse_inertia_gradient(sys, &q)?;
    let coupling = 0.5 * p.dot(&(dminv.view((0, 0), (2, 2)) * &p));
    Ok([qdot[0], -grad_v[0] - coupling])
}

/// Outcome of [`regularity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    /// `∂h/∂p_a = 0`, so `ė` carries no `τ`.
    pub structural: bool,
    /// Smallest `|H|` over the grid and the state where it occurs.
    pub min_abs: f64,
    pub argmin_qa: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub passed: bool,
}

/// States `(0, q_a, 0, 0)` with `q_a` spread uniformly over `(-π, π]`.
pub fn qa_grid(points: usize) -> Vec<AcrobotState> {
    use std::f64::consts::PI;
    (1..=points)
        .map(|i| AcrobotState::new(0.0, -PI + 2.0 * PI * i as f64 / points as f64, 0.0, 0.0))
        .collect()
}

/// Scan the decoupling scalar over `grid`. A failing check is reported, not
/// returned as an error.
pub fn regularity_check<C: Constraint + ?Sized>(model: &AcrobotModel, c: &C, grid: &[AcrobotState]) -> RegularityReport {
    // the constraint does not involve p_a, so ∂e/∂p_a = 0 identically
    let structural = true;
    let mut report = RegularityReport {
        structural,
        min_abs: f64::INFINITY,
        argmin_qa: f64::NAN,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        passed: false,
    };
    let mut sign = 0.0;
    let mut consistent_sign = true;
    for x in grid {
        let h = decoupling_unchecked(model, c, x);
        if h.abs() < report.min_abs {
            report.min_abs = h.abs();
            report.argmin_qa = x.q_a;
        }
        report.min_value = report.min_value.min(h);
        report.max_value = report.max_value.max(h);
        if sign == 0.0 {
            sign = h.signum();
        } else if h.signum() != sign {
            consistent_sign = false;
        }
    }
    report.passed = structural && consistent_sign && report.min_abs >= REGULARITY_TOL && !grid.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{distributed_system, simplified_system, DistributedParams};
    use std::f64::consts::PI;

    struct Linear {
        dq: f64,
    }

    impl Constraint for Linear {
        fn f(&self, q_u: f64, _p_u: f64) -> f64 {
            self.dq * q_u
        }
        fn df_dqu(&self, _q_u: f64, _p_u: f64) -> f64 {
            self.dq
        }
        fn df_dpu(&self, _q_u: f64, _p_u: f64) -> f64 {
            0.0
        }
    }

    fn unit() -> AcrobotModel {
        simplified_system(SimplifiedParams::unit()).unwrap()
    }

    #[test]
    fn arctan_values() {
        let spec = VnhcSpec::new(1.0, 10.0).unwrap();
        assert!((constraint_f(&spec, 0.1) - PI / 4.0).abs() < 1e-15);
        assert_eq!(constraint_f(&spec, 0.0), 0.0);
        assert_eq!(constraint_f(&spec.with_gain(0.0), 3.0), 0.0);
        assert!(constraint_f(&spec, 1e9) < PI / 2.0 + 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(VnhcSpec::new(0.0, 1.0).is_err());
        assert!(VnhcSpec::new(1.2, 1.0).is_err());
        assert!(VnhcSpec::new(1.0, f64::NAN).is_err());
        assert!(VnhcSpec::default().with_controller_gains(-1.0, 1.0).validate().is_err());
    }

    #[test]
    fn decoupling_values() {
        let m = unit();
        let spec = VnhcSpec::new(1.0, 10.0).unwrap();
        let h0 = decoupling_scalar(&m, &spec, &AcrobotState::new(0.3, 0.0, 0.0, 0.0)).unwrap();
        assert!((h0 - 5.0).abs() < 1e-12);
        let h1 = decoupling_scalar(&m, &spec, &AcrobotState::new(0.3, PI / 2.0, 0.1, 0.0)).unwrap();
        assert!((h1 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn decoupling_matches_closed_form() {
        let p = SimplifiedParams::new(0.7, 1.3, 9.81).unwrap();
        let m = simplified_system(p).unwrap();
        for i in 0..50 {
            let q_a = -3.0 + 0.12 * i as f64;
            let c = Linear { dq: 0.3 };
            let generic = decoupling_unchecked(&m, &c, &AcrobotState::new(0.0, q_a, 0.0, 0.0));
            let closed = decoupling_scalar_closed_form(&p, q_a, 0.3);
            assert!((generic - closed).abs() < 1e-12 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn regularity_for_both_models() {
        for model in [unit(), distributed_system(DistributedParams::reference_hardware()).unwrap()] {
            let report = regularity_check(&model, &VnhcSpec::new(1.0, 10.0).unwrap(), &qa_grid(720));
            assert!(report.passed);
            assert!(report.min_value > 0.0);
        }
        let report = regularity_check(&unit(), &VnhcSpec::default(), &qa_grid(720));
        assert!((report.argmin_qa.abs() - PI).abs() < 1e-12);
        assert!((report.min_abs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constructed_singular_constraint_fails() {
        let c = Linear { dq: -2.5 };
        let report = regularity_check(&unit(), &c, &qa_grid(720));
        assert!(!report.passed);
        assert!(report.min_abs < 1e-12);
        let err = decoupling_scalar(&unit(), &c, &AcrobotState::new(0.0, 0.0, 0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("constraint not regular here"));
    }

    #[test]
    fn completion_at_rest_and_rigid() {
        let m = unit();
        let spec = VnhcSpec::new(1.0, 10.0).unwrap();
        assert_eq!(momentum_completion_g(&m, &spec, ReducedState::new(0.0, 0.0)), 0.0);
        let rigid = VnhcSpec::default();
        let g = momentum_completion_g(&m, &rigid, ReducedState::new(0.8, 1.5));
        assert!((g - 0.6).abs() < 1e-14);
        // rigid body: p_a = m12(0)·q̇_u
        let qdot = reduced_vector_field(&m, &rigid, ReducedState::new(0.8, 1.5))[0];
        assert!((g - 2.0 * qdot).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_agree_with_general_path() {
        let p = SimplifiedParams::new(1.4, 0.6, 9.81).unwrap();
        let m = simplified_system(p).unwrap();
        let spec = VnhcSpec::new(0.9, -3.0).unwrap();
        for i in 0..40 {
            let s = ReducedState::new(-3.0 + 0.15 * i as f64, 0.4 * (i as f64 - 20.0) / 7.0);
            let g = momentum_completion_g(&m, &spec, s);
            let gc = momentum_completion_closed_form(&p, &spec, s);
            assert!((g - gc).abs() < 1e-9, "{s:?}");
            let f = reduced_vector_field(&m, &spec, s);
            let fc = reduced_vector_field_closed_form(&p, &spec, s);
            let fg = reduced_vector_field_generic(&m, &spec, s).unwrap();
            for k in 0..2 {
                assert!((f[k] - fc[k]).abs() < 1e-9);
                assert!((f[k] - fg[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lifted_state_satisfies_constraint() {
        let m = distributed_system(DistributedParams::reference_hardware()).unwrap();
        let spec = VnhcSpec::new(1.0, 10.0).unwrap();
        let x = lift(&m, &spec, ReducedState::new(0.4, 0.07));
        let err = constraint_error(&m, &spec, &x);
        assert!(err.e.abs() < 1e-15);
        assert!(err.e_dot.abs() < 1e-12);
        // the lifted flow reproduces the constrained dynamics
        let full = m.vector_field(&x, 0.0);
        let red = reduced_vector_field(&m, &spec, x.reduced());
        assert!((full[0] - red[0]).abs() < 1e-12);
        assert!((full[2] - red[1]).abs() < 1e-12);
    }

    #[test]
    fn torque_vanishes_at_rest() {
        let m = unit();
        let tau = enforcement_torque(&m, &VnhcSpec::default(), 100.0, 20.0, &AcrobotState::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(tau.unwrap(), 0.0);
    }

    #[test]
    fn error_rate_has_no_torque_and_accel_gain_is_h() {
        let m = distributed_system(DistributedParams::reference_hardware()).unwrap();
        let spec = VnhcSpec::new(1.0, 10.0).unwrap();
        let x = AcrobotState::new(0.5, 0.3, 0.05, -0.01);
        let h = decoupling_scalar(&m, &spec, &x).unwrap();
        let edd = |tau: f64| {
            let f = m.vector_field(&x, tau);
            let dt = 1e-6;
            let y = x.to_array();
            let fwd = AcrobotState::from_array(std::array::from_fn(|i| y[i] + dt * f[i]));
            let bwd = AcrobotState::from_array(std::array::from_fn(|i| y[i] - dt * f[i]));
            (error_rate(&m, &spec, &fwd) - error_rate(&m, &spec, &bwd)) / (2.0 * dt)
        };
        let dtau = 1e-3;
        let gain = (edd(dtau) - edd(-dtau)) / (2.0 * dtau);
        assert!((gain - h).abs() < 1e-6 * h.abs().max(1.0), "{gain} vs {h}");
        assert!((edd(0.0) - error_drift(&m, &spec, &x)).abs() < 1e-5 * h.abs());
    }
}
