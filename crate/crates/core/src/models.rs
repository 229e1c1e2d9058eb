//! Concrete acrobot models: the equal-link point-mass acrobot and the
//! distributed-mass acrobot, plus the energy of their nominal (legs
//! extended) pendulum.
//!
//! Both models share the structure
//!
//! ```text
//! M(q_a) = [[a + 2b·c_a, d + b·c_a],
//!           [d + b·c_a,  d        ]]
//! V(q)   = v0 - k_u·c_u - k_a·c_ua
//! ```
//!
//! so every model-specific formula below goes through [`Coefficients`].

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::mechanics::{wrap_angle, FullState, MechanicalSystem, Period};

/// Parameters of the point-mass acrobot with equal links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimplifiedParams {
    /// Point mass at each link tip (kg).
    pub m: f64,
    /// Link length (m).
    pub l: f64,
    /// Gravity (m/s²).
    pub g: f64,
}

impl SimplifiedParams {
    pub fn new(m: f64, l: f64, g: f64) -> Result<Self> {
        let p = Self { m, l, g };
        p.validate()?;
        Ok(p)
    }

    /// `m = l = 1`, `g = 9.81`.
    pub fn unit() -> Self {
        Self { m: 1.0, l: 1.0, g: 9.81 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("m", self.m)?;
        ensure_positive("l", self.l)?;
        ensure_positive("g", self.g)
    }

    /// `30 m² g l³`, the scale shared by the polar charts.
    pub fn chart_scale(&self) -> f64 {
        30.0 * self.m * self.m * self.g * self.l.powi(3)
    }
}

impl Default for SimplifiedParams {
    fn default() -> Self {
        Self::unit()
    }
}

/// Parameters of the distributed-mass acrobot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistributedParams {
    pub m_u: f64,
    pub m_a: f64,
    pub l_u: f64,
    pub l_a: f64,
    pub l_cu: f64,
    pub l_ca: f64,
    pub j_u: f64,
    pub j_a: f64,
    pub g: f64,
}

impl DistributedParams {
    /// Measured parameters of the reference hardware acrobot.
    pub fn reference_hardware() -> Self {
        Self {
            m_u: 0.2112,
            m_a: 0.1979,
            l_u: 0.148,
            l_a: 0.145,
            l_cu: 0.073,
            l_ca: 0.083,
            j_u: 0.00129,
            j_a: 0.00075,
            g: 9.81,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("m_u", self.m_u)?;
        ensure_positive("m_a", self.m_a)?;
        ensure_positive("l_u", self.l_u)?;
        ensure_positive("l_a", self.l_a)?;
        ensure_positive("l_cu", self.l_cu)?;
        ensure_positive("l_ca", self.l_ca)?;
        ensure_positive("j_u", self.j_u)?;
        ensure_positive("j_a", self.j_a)?;
        ensure_positive("g", self.g)?;
        if self.l_cu > self.l_u {
            return Err(Error::InvalidParameter { name: "l_cu", reason: "must not exceed l_u".into() });
        }
        if self.l_ca > self.l_a {
            return Err(Error::InvalidParameter { name: "l_ca", reason: "must not exceed l_a".into() });
        }
        Ok(())
    }
}

impl Default for DistributedParams {
    fn default() -> Self {
        Self::reference_hardware()
    }
}

/// State of the constrained (two-dimensional) dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub q_u: f64,
    pub p_u: f64,
}

impl ReducedState {
    pub fn new(q_u: f64, p_u: f64) -> Self {
        Self { q_u, p_u }
    }

    pub fn wrapped(self) -> Self {
        Self { q_u: wrap_angle(self.q_u), p_u: self.p_u }
    }

    /// Euclidean norm with `q_u` wrapped to `(-π, π]`.
    pub fn norm(self) -> f64 {
        wrap_angle(self.q_u).hypot(self.p_u)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.q_u, self.p_u]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        Self { q_u: a[0], p_u: a[1] }
    }
}

/// Full acrobot state `(q_u, q_a, p_u, p_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcrobotState {
    pub q_u: f64,
    pub q_a: f64,
    pub p_u: f64,
    pub p_a: f64,
}

impl AcrobotState {
    pub fn new(q_u: f64, q_a: f64, p_u: f64, p_a: f64) -> Self {
        Self { q_u, q_a, p_u, p_a }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q_u, self.q_a, self.p_u, self.p_a]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { q_u: a[0], q_a: a[1], p_u: a[2], p_a: a[3] }
    }

    pub fn reduced(self) -> ReducedState {
        ReducedState { q_u: self.q_u, p_u: self.p_u }
    }

    pub fn to_full_state(self) -> FullState {
        FullState::from_slices(&[self.q_u, self.q_a], &[self.p_u, self.p_a])
    }

    pub fn from_full_state(x: &FullState) -> Self {
        Self { q_u: x.q[0], q_a: x.q[1], p_u: x.p[0], p_a: x.p[1] }
    }
}

/// Physical parameters of either acrobot model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Simplified(SimplifiedParams),
    Distributed(DistributedParams),
}

/// Structural coefficients shared by both models (see module docs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub k_u: f64,
    pub k_a: f64,
    pub v0: f64,
}

/// A two-link acrobot, actuated at the hip, in simply actuated form
/// (`B = [0; 1]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcrobotModel {
    params: ModelParams,
    coeffs: Coefficients,
}

/// Point-mass acrobot: `M = ml²[[3+2c_a, 1+c_a],[1+c_a, 1]]`,
/// `V = -mgl(2c_u + c_ua)`.
pub fn simplified_system(params: SimplifiedParams) -> Result<AcrobotModel> {
    params.validate()?;
    let SimplifiedParams { m, l, g } = params;
    let ml2 = m * l * l;
    let mgl = m * g * l;
    Ok(AcrobotModel {
        params: ModelParams::Simplified(params),
        coeffs: Coefficients { a: 3.0 * ml2, b: ml2, d: ml2, k_u: 2.0 * mgl, k_a: mgl, v0: 0.0 },
    })
}

/// Distributed-mass acrobot with potential normalized to zero at the
/// hanging rest position.
pub fn distributed_system(params: DistributedParams) -> Result<AcrobotModel> {
    params.validate()?;
    let DistributedParams { m_u, m_a, l_u, l_cu, l_ca, j_u, j_a, g, .. } = params;
    let a = m_a * l_u * l_u + m_a * l_ca * l_ca + m_u * l_cu * l_cu + j_u + j_a;
    let b = m_a * l_u * l_ca;
    let d = m_a * l_ca * l_ca + j_a;
    let k_a = g * m_a * l_ca;
    let k_u = g * (m_a * l_u + m_u * l_cu);
    Ok(AcrobotModel {
        params: ModelParams::Distributed(params),
        coeffs: Coefficients { a, b, d, k_u, k_a, v0: k_a + k_u },
    })
}

impl AcrobotModel {
    pub fn from_params(params: ModelParams) -> Result<Self> {
        match params {
            ModelParams::Simplified(p) => simplified_system(p),
            ModelParams::Distributed(p) => distributed_system(p),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    /// The point-mass parameters, if this is the simplified model.
    pub fn simplified_params(&self) -> Option<&SimplifiedParams> {
        match &self.params {
            ModelParams::Simplified(p) => Some(p),
            ModelParams::Distributed(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.params {
            ModelParams::Simplified(_) => "simplified",
            ModelParams::Distributed(_) => "distributed",
        }
    }

    pub fn gravity(&self) -> f64 {
        match self.params {
            ModelParams::Simplified(p) => p.g,
            ModelParams::Distributed(p) => p.g,
        }
    }

    pub fn inertia2(&self, q_a: f64) -> Matrix2<f64> {
        let Coefficients { a, b, d, .. } = self.coeffs;
        let c = q_a.cos();
        let m12 = d + b * c;
        Matrix2::new(a + 2.0 * b * c, m12, m12, d)
    }

    /// `∂M/∂q_a`; `M` does not depend on `q_u`.
    pub fn inertia2_dqa(&self, q_a: f64) -> Matrix2<f64> {
        let b = self.coeffs.b;
        let s = q_a.sin();
        Matrix2::new(-2.0 * b * s, -b * s, -b * s, 0.0)
    }

    pub fn inverse_inertia2(&self, q_a: f64) -> Matrix2<f64> {
        let m = self.inertia2(q_a);
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det
    }

    pub fn potential2(&self, q_u: f64, q_a: f64) -> f64 {
        let Coefficients { k_u, k_a, v0, .. } = self.coeffs;
        v0 - k_u * q_u.cos() - k_a * (q_u + q_a).cos()
    }

    /// `(∂V/∂q_u, ∂V/∂q_a)`.
    pub fn potential_gradient2(&self, q_u: f64, q_a: f64) -> Vector2<f64> {
        let Coefficients { k_u, k_a, .. } = self.coeffs;
        let s_ua = (q_u + q_a).sin();
        Vector2::new(k_u * q_u.sin() + k_a * s_ua, k_a * s_ua)
    }

    /// Hamiltonian `½ pᵀM⁻¹p + V`.
    pub fn hamiltonian(&self, x: &AcrobotState) -> f64 {
        let p = Vector2::new(x.p_u, x.p_a);
        0.5 * p.dot(&(self.inverse_inertia2(x.q_a) * p)) + self.potential2(x.q_u, x.q_a)
    }

    /// Open-loop dynamics `(q̇_u, q̇_a, ṗ_u, ṗ_a)` under hip torque `tau`.
    pub fn vector_field(&self, x: &AcrobotState, tau: f64) -> [f64; 4] {
        let minv = self.inverse_inertia2(x.q_a);
        let p = Vector2::new(x.p_u, x.p_a);
        let qdot = minv * p;
        let dminv = -(minv * self.inertia2_dqa(x.q_a) * minv);
        let grad_v = self.potential_gradient2(x.q_u, x.q_a);
        [qdot[0], qdot[1], -grad_v[0], -0.5 * p.dot(&(dminv * p)) - grad_v[1] + tau]
    }

    /// `1/(2·m11(0))`, the kinetic coefficient of the nominal pendulum.
    pub fn kinetic_coefficient(&self) -> f64 {
        0.5 / (self.coeffs.a + 2.0 * self.coeffs.b)
    }

    /// Coefficient `κ` of the nominal potential `κ(1 - cos q_u)`.
    pub fn potential_coefficient(&self) -> f64 {
        self.coeffs.k_u + self.coeffs.k_a
    }

    /// Energy of the rigid pendulum obtained with the leg held at `q_a = 0`,
    /// zero at the hanging rest.
    pub fn nominal_energy(&self, s: ReducedState) -> f64 {
        self.kinetic_coefficient() * s.p_u * s.p_u + self.potential_coefficient() * (1.0 - s.q_u.cos())
    }

    /// `R̄ = E(π, 0)`, the level separating oscillations from rotations.
    pub fn critical_level(&self) -> f64 {
        2.0 * self.potential_coefficient()
    }

    /// Momentum at which the critical level set crosses the `p_u` axis.
    pub fn boundary_momentum(&self) -> f64 {
        (self.critical_level() / self.kinetic_coefficient()).sqrt()
    }
}

impl MechanicalSystem for AcrobotModel {
    fn dof(&self) -> usize {
        2
    }

    fn input_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(2, 1, &[0.0, 1.0])
    }

    fn inertia(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let m = self.inertia2(q[1]);
        DMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
    }

    fn potential(&self, q: &DVector<f64>) -> f64 {
        self.potential2(q[0], q[1])
    }

    fn potential_gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        let g = self.potential_gradient2(q[0], q[1]);
        DVector::from_column_slice(&[g[0], g[1]])
    }

    fn inertia_gradient(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let d = self.inertia2_dqa(q[1]);
        let mut out = DMatrix::zeros(4, 2);
        out.view_mut((2, 0), (2, 2)).copy_from_slice(&[d[(0, 0)], d[(1, 0)], d[(0, 1)], d[(1, 1)]]);
        out
    }

    fn periods(&self) -> Vec<Period> {
        vec![Period::Angle, Period::Angle]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit() -> AcrobotModel {
        simplified_system(SimplifiedParams::unit()).unwrap()
    }

    #[test]
    fn simplified_inertia_at_extremes() {
        let m = unit();
        assert_eq!(m.inertia2(0.0), Matrix2::new(5.0, 2.0, 2.0, 1.0));
        let flipped = m.inertia2(PI);
        assert!((flipped - Matrix2::identity()).abs().max() < 1e-15);
        assert!((m.potential2(0.0, 0.0) + 3.0 * 9.81).abs() < 1e-12);
    }

    #[test]
    fn simplified_nominal_energy() {
        let m = unit();
        assert_eq!(m.nominal_energy(ReducedState::new(0.0, 0.0)), 0.0);
        assert!((m.critical_level() - 58.86).abs() < 1e-12);
        assert!((m.nominal_energy(ReducedState::new(PI, 0.0)) - 58.86).abs() < 1e-12);
        // p²/(10 m l²)
        assert!((m.nominal_energy(ReducedState::new(0.0, 2.0)) - 0.4).abs() < 1e-15);
        assert!((m.boundary_momentum() - (60.0 * 9.81_f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distributed_entries_match_direct_arithmetic() {
        let p = DistributedParams::reference_hardware();
        let m = distributed_system(p).unwrap();
        let m22 = 0.1979 * 0.083 * 0.083 + 0.00075;
        assert!((m.inertia2(0.0)[(1, 1)] - m22).abs() < 1e-15);
        let m11 = 0.1979 * 0.148 * 0.148 + 2.0 * 0.1979 * 0.148 * 0.083 + 0.1979 * 0.083 * 0.083
            + 0.2112 * 0.073 * 0.073
            + 0.00129
            + 0.00075;
        assert!((m.inertia2(0.0)[(0, 0)] - m11).abs() < 1e-15);
        assert_eq!(m.potential2(0.0, 0.0), 0.0);
        let kappa = 9.81 * (0.1979 * 0.083 + 0.1979 * 0.148 + 0.2112 * 0.073);
        assert!((m.potential_coefficient() - kappa).abs() < 1e-14);
        assert!((kappa - 0.5997).abs() < 5e-5);
        assert!((m.critical_level() - 1.1994).abs() < 1e-4);
    }

    #[test]
    fn distributed_rejects_bad_offsets() {
        let mut p = DistributedParams::reference_hardware();
        p.l_cu = 0.2;
        assert!(distributed_system(p).is_err());
        assert!(SimplifiedParams::new(-1.0, 1.0, 9.81).is_err());
    }

    #[test]
    fn inertia_positive_definite_on_grid() {
        for model in [unit(), distributed_system(DistributedParams::reference_hardware()).unwrap()] {
            for i in 0..720 {
                let q_a = -PI + (i as f64 + 1.0) * PI / 360.0;
                let q = DVector::from_column_slice(&[0.0, q_a]);
                assert!(crate::mechanics::is_positive_definite(&model.inertia(&q)), "{q_a}");
            }
        }
    }

    #[test]
    fn inertia_independent_of_unactuated_angle() {
        for model in [unit(), distributed_system(DistributedParams::reference_hardware()).unwrap()] {
            for i in 0..20 {
                let q_a = -3.0 + 0.3 * i as f64;
                let h = 1e-3;
                let fwd = model.inertia(&DVector::from_column_slice(&[0.4 + h, q_a]));
                let bwd = model.inertia(&DVector::from_column_slice(&[0.4 - h, q_a]));
                assert!(((fwd - bwd) / (2.0 * h)).amax() < 1e-12);
            }
        }
    }
}
