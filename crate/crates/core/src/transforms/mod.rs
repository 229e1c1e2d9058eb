//! Polar charts of the point-mass acrobot's constrained dynamics, the
//! first-order expansion of their Poincaré maps, and numeric return maps.
//!
//! With `K = 30 m² g l³`, the oscillation chart is
//!
//! ```text
//! r = arccos(cos q_u - p_u²/K),  θ = atan2(-sgn(p_u)·sqrt(1 - q_u²/r²), q_u/r)
//! ```
//!
//! and the rotation charts are `r = sqrt(p_u² + K(1 - cos q_u))`, `θ = ±q_u`.
//! Level sets of the nominal energy map to circles `r = const` in both.
//!
//! The quotients `(cos(r c_θ) - c_r)/s_θ²` appearing in the oscillation
//! chart are evaluated through the half-angle identity
//! `cos(r c_θ) - c_r = 2 sin(r ĉ²) sin(r ŝ²)` with `ŝ = sin(θ/2)`,
//! `ĉ = cos(θ/2)`, which cancels the removable singularities at
//! `θ ∈ {0, π}` exactly.

pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, Direction, EventSpec, IntegratorConfig, Termination};
use crate::mechanics::wrap_angle;
use crate::models::{ReducedState, SimplifiedParams};
use crate::vnhc::{reduced_vector_field_closed_form, VnhcSpec};

use quadrature::{QuadratureConfig, QuadratureResult};

/// Relative distance from the separatrix below which rotation-chart
/// quantities are refused.
pub const ROTATION_MARGIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Oscillation,
    RotationPlus,
    RotationMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
    pub chart: Chart,
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `sin(r·x)/x`, continuous at `x = 0`.
fn scaled_sin(r: f64, x: f64) -> f64 {
    if x == 0.0 {
        r
    } else {
        (r * x).sin() / x
    }
}

/// `(cos(r c_θ) - c_r) / (ŝ² ĉ²)` with `ŝ = sin(θ/2)`, `ĉ = cos(θ/2)`.
fn osc_ratio(r: f64, theta: f64) -> f64 {
    let sh = (0.5 * theta).sin();
    let ch = (0.5 * theta).cos();
    2.0 * scaled_sin(r, ch * ch) * scaled_sin(r, sh * sh)
}

fn check_osc_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::OutOfChart { chart: "oscillation" })
    }
}

fn separatrix_radius(params: &SimplifiedParams) -> f64 {
    (2.0 * params.chart_scale()).sqrt()
}

/// Oscillation chart on `{E < R̄} \ {0}`.
pub fn to_polar_osc(params: &SimplifiedParams, s: ReducedState) -> Result<PolarState> {
    let q = wrap_angle(s.q_u);
    let w = q.cos() - s.p_u * s.p_u / params.chart_scale();
    if !(w > -1.0 && w < 1.0) {
        return Err(Error::OutOfChart { chart: "oscillation" });
    }
    let r = w.acos();
    let ratio = (q / r).clamp(-1.0, 1.0);
    let theta = (-sgn(s.p_u) * (1.0 - ratio * ratio).max(0.0).sqrt()).atan2(ratio);
    Ok(PolarState { r, theta, chart: Chart::Oscillation })
}

pub fn from_polar_osc(params: &SimplifiedParams, r: f64, theta: f64) -> Result<ReducedState> {
    check_osc_radius(r)?;
    let c = theta.cos();
    let gap = (r * c).cos() - r.cos();
    let p = -sgn(theta.sin()) * (params.chart_scale() * gap.max(0.0)).sqrt();
    Ok(ReducedState::new(r * c, p))
}

/// Rotation charts on the two components of `{E > R̄}`.
pub fn to_polar_rot(params: &SimplifiedParams, s: ReducedState, chart: Chart) -> Result<PolarState> {
    let sign = match chart {
        Chart::RotationPlus => 1.0,
        Chart::RotationMinus => -1.0,
        Chart::Oscillation => return Err(Error::OutOfChart { chart: "rotation" }),
    };
    if sgn(s.p_u) != sign {
        return Err(Error::OutOfChart { chart: "rotation" });
    }
    let k = params.chart_scale();
    let r = (s.p_u * s.p_u + k * (1.0 - s.q_u.cos())).sqrt();
    if r * r <= 2.0 * k {
        return Err(Error::OutOfChart { chart: "rotation" });
    }
    Ok(PolarState { r, theta: wrap_angle(sign * s.q_u), chart })
}

pub fn from_polar_rot(params: &SimplifiedParams, r: f64, theta: f64, chart: Chart) -> Result<ReducedState> {
    let sign = match chart {
        Chart::RotationPlus => 1.0,
        Chart::RotationMinus => -1.0,
        Chart::Oscillation => return Err(Error::OutOfChart { chart: "rotation" }),
    };
    let k = params.chart_scale();
    let gap = r * r - k * (1.0 - theta.cos());
    if !(r > 0.0) || gap <= 0.0 {
        return Err(Error::OutOfChart { chart: "rotation" });
    }
    Ok(ReducedState::new(sign * theta, sign * gap.sqrt()))
}

/// Angular speed `θ̇` of the oscillation chart at `I = 0`, with the limits
/// `sqrt(6g s_r/(10 l r))` at `θ ∈ {0, π}`.
pub fn f_theta_osc(params: &SimplifiedParams, r: f64, theta: f64) -> Result<f64> {
    check_osc_radius(r)?;
    let SimplifiedParams { g, l, .. } = *params;
    // (cos(r c_θ) - c_r)/(r² s_θ²) = osc_ratio / (4 r²)
    Ok((6.0 * g / (5.0 * l)).sqrt() * (osc_ratio(r, theta) / (4.0 * r * r)).sqrt())
}

/// Angular speed `θ̇` of the rotation charts at `I = 0`.
pub fn f_theta_rot(params: &SimplifiedParams, r: f64, theta: f64) -> Result<f64> {
    let SimplifiedParams { m, l, .. } = *params;
    let gap = r * r - params.chart_scale() * (1.0 - theta.cos());
    if !(gap > 0.0) {
        return Err(Error::OutOfChart { chart: "rotation" });
    }
    Ok(gap.sqrt() / (5.0 * m * l * l))
}

/// `L = q̄_a·sqrt(30 m² g l³)/15`.
pub fn gain_constant(params: &SimplifiedParams, spec: &VnhcSpec) -> f64 {
    spec.qa_bar * params.chart_scale().sqrt() / 15.0
}

/// `a(r, θ) = r|s_θ|(5 c_r C - 8C² + 3) / (s_r sqrt(C - c_r))`,
/// `C = cos(r c_θ)`, so that `∂_I (dr/dθ)|_{I=0} = L·a`.
pub fn integrand_a(r: f64, theta: f64) -> Result<f64> {
    check_osc_radius(r)?;
    let big_c = (r * theta.cos()).cos();
    let cr = r.cos();
    // |s_θ| / sqrt(C - c_r) = 2 / sqrt(osc_ratio)
    let weight = 2.0 / osc_ratio(r, theta).sqrt();
    Ok(r * weight * (5.0 * cr * big_c - 8.0 * big_c * big_c + 3.0) / r.sin())
}

/// `∫₀^{2π} a(r, θ) dθ`.
pub fn osc_gain_integral(r: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    check_osc_radius(r)?;
    quadrature::integrate(|t| integrand_a(r, t).unwrap_or(f64::NAN), 0.0, 2.0 * std::f64::consts::PI, cfg)
}

fn check_rotation_radius(params: &SimplifiedParams, r: f64) -> Result<()> {
    if r > separatrix_radius(params) * (1.0 + ROTATION_MARGIN) && r.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfChart { chart: "rotation" })
    }
}

/// `b(r, θ) = 5C((C/q̄_a)(18 s_θ² + 30 c_θ(1 - c_θ)) - c_θ r²) / (|r| sqrt(r² - K(1 - c_θ)))`
/// with `C = m² g l³ q̄_a`, so that `∂_I (dr/dθ)|_{I=0} = b`.
pub fn integrand_b(params: &SimplifiedParams, spec: &VnhcSpec, r: f64, theta: f64) -> Result<f64> {
    check_rotation_radius(params, r)?;
    let c = theta.cos();
    let s = theta.sin();
    let big_c = params.chart_scale() / 30.0 * spec.qa_bar;
    let num = 5.0 * big_c * (big_c / spec.qa_bar * (18.0 * s * s + 30.0 * c * (1.0 - c)) - c * r * r);
    Ok(num / (r.abs() * (r * r - params.chart_scale() * (1.0 - c)).sqrt()))
}

/// `S(r) = ∫₀^{2π} b(r, θ) dθ`.
pub fn rotation_gain_integral(
    params: &SimplifiedParams,
    spec: &VnhcSpec,
    r: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    check_rotation_radius(params, r)?;
    quadrature::integrate(
        |t| integrand_b(params, spec, r, t).unwrap_or(f64::NAN),
        0.0,
        2.0 * std::f64::consts::PI,
        cfg,
    )
}

/// `r₀ + I·∫₀^{2π} ∂_I(dr/dθ) dθ`, the return map to first order in `I`.
pub fn poincare_first_order(
    params: &SimplifiedParams,
    spec: &VnhcSpec,
    r0: f64,
    chart: Chart,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let slope = match chart {
        Chart::Oscillation => gain_constant(params, spec) * osc_gain_integral(r0, cfg)?.value,
        Chart::RotationPlus | Chart::RotationMinus => rotation_gain_integral(params, spec, r0, cfg)?.value,
    };
    Ok(r0 + spec.gain * slope)
}

/// Integrate the constrained dynamics from `θ = 0` on the circle `r0` until
/// `θ` returns to `0 (mod 2π)`, and return the new `r`.
pub fn numeric_return_map(
    params: &SimplifiedParams,
    spec: &VnhcSpec,
    r0: f64,
    chart: Chart,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let field = |_t: f64, y: &[f64; 2]| reduced_vector_field_closed_form(params, spec, ReducedState::from_array(*y));
    match chart {
        Chart::Oscillation => {
            let start = from_polar_osc(params, r0, 0.0)?;
            // p_u falls through zero only on the positive q_u half-axis
            let events = [EventSpec::new(|_, y: &[f64; 2]| y[1], Direction::Falling).terminal()];
            let sol = integrate(field, 0.0, start.to_array(), cfg, &events)?;
            if sol.termination != Termination::Event(0) {
                return Err(Error::ReturnMap(format!("no return within {} s", cfg.max_time)));
            }
            let end = ReducedState::from_array(sol.final_state());
            Ok(to_polar_osc(params, ReducedState::new(end.q_u, 0.0))?.r)
        }
        Chart::RotationPlus | Chart::RotationMinus => {
            let sign = if chart == Chart::RotationPlus { 1.0 } else { -1.0 };
            let start = from_polar_rot(params, r0, 0.0, chart)?;
            let events = [EventSpec::new(move |_, y: &[f64; 2]| sign * y[0] - std::f64::consts::TAU, Direction::Rising)
                .terminal()];
            let sol = integrate(field, 0.0, start.to_array(), cfg, &events)?;
            if sol.termination != Termination::Event(0) {
                return Err(Error::ReturnMap(format!("no revolution within {} s", cfg.max_time)));
            }
            let end = ReducedState::from_array(sol.final_state());
            if sgn(end.p_u) != sign {
                return Err(Error::ReturnMap("rotation reversed".into()));
            }
            let k = params.chart_scale();
            Ok((end.p_u * end.p_u + k * (1.0 - std::f64::consts::TAU.cos())).sqrt())
        }
    }
}

/// `(ṙ, θ̇)` of the constrained dynamics in polar coordinates: `ṙ` from the
/// gradient of the radius, `θ̇` by central differences of the chart along
/// the flow. Intended as a check on the closed forms above.
pub fn polar_rates(params: &SimplifiedParams, spec: &VnhcSpec, x: PolarState) -> Result<(f64, f64)> {
    let s = match x.chart {
        Chart::Oscillation => from_polar_osc(params, x.r, x.theta)?,
        chart => from_polar_rot(params, x.r, x.theta, chart)?,
    };
    let f = reduced_vector_field_closed_form(params, spec, s);
    let k = params.chart_scale();
    let r_dot = match x.chart {
        // cos r = cos q - p²/K
        Chart::Oscillation => (s.q_u.sin() * f[0] + 2.0 * s.p_u * f[1] / k) / x.r.sin(),
        // r² = p² + K(1 - cos q)
        _ => (s.p_u * f[1] + 0.5 * k * s.q_u.sin() * f[0]) / x.r,
    };
    let speed = f[0].hypot(f[1]);
    let h = 1e-7 * s.q_u.hypot(s.p_u).max(1.0) / speed.max(1e-300);
    let to = |y: ReducedState| match x.chart {
        Chart::Oscillation => to_polar_osc(params, y),
        chart => to_polar_rot(params, y, chart),
    };
    let fwd = to(ReducedState::new(s.q_u + h * f[0], s.p_u + h * f[1]))?;
    let bwd = to(ReducedState::new(s.q_u - h * f[0], s.p_u - h * f[1]))?;
    let dtheta = wrap_angle(fwd.theta - bwd.theta);
    Ok((r_dot, dtheta / (2.0 * h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit() -> SimplifiedParams {
        SimplifiedParams::unit()
    }

    #[test]
    fn osc_chart_axes() {
        let p = unit();
        let x = to_polar_osc(&p, ReducedState::new(0.7, 0.0)).unwrap();
        assert!((x.r - 0.7).abs() < 1e-15 && x.theta == 0.0);
        let s = from_polar_osc(&p, 0.9, PI).unwrap();
        assert!((s.q_u + 0.9).abs() < 1e-15 && s.p_u.abs() < 1e-6);
        assert!(to_polar_osc(&p, ReducedState::new(0.0, 0.0)).is_err());
        assert!(to_polar_osc(&p, ReducedState::new(PI, 0.1)).is_err());
    }

    #[test]
    fn rot_chart_axes_and_branches() {
        let p = unit();
        let x = to_polar_rot(&p, ReducedState::new(0.0, 30.0), Chart::RotationPlus).unwrap();
        assert!((x.r - 30.0).abs() < 1e-15 && x.theta == 0.0);
        assert!(to_polar_rot(&p, ReducedState::new(0.0, -30.0), Chart::RotationPlus).is_err());
        let back = from_polar_rot(&p, 30.0, 1.0, Chart::RotationMinus).unwrap();
        let again = to_polar_rot(&p, back, Chart::RotationMinus).unwrap();
        assert!((again.r - 30.0).abs() < 1e-12 && (again.theta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_theta_limits() {
        let p = unit();
        for r in [0.2_f64, 1.0, 2.5, 3.1] {
            let limit = (6.0 * 9.81 * r.sin() / (10.0 * r)).sqrt();
            assert!((f_theta_osc(&p, r, 0.0).unwrap() - limit).abs() < 1e-14);
            assert!((f_theta_osc(&p, r, PI).unwrap() - limit).abs() < 1e-12);
            assert!((f_theta_osc(&p, r, 1e-6).unwrap() - limit).abs() < 1e-5);
        }
        assert!((f_theta_rot(&p, 30.0, 0.0).unwrap() - 6.0).abs() < 1e-14);
        let rb = separatrix_radius(&p);
        assert!(f_theta_rot(&p, rb + 1e-6, PI).unwrap() < 1e-2);
    }

    #[test]
    fn integrand_a_is_regular_at_axis() {
        for r in [0.3, 1.0, 2.9] {
            let a6 = integrand_a(r, 1e-6).unwrap();
            let a7 = integrand_a(r, 1e-7).unwrap();
            assert!((a6 - a7).abs() < 1e-4);
            assert!(integrand_a(r, 0.0).unwrap().is_finite());
            assert!(integrand_a(r, PI).unwrap().is_finite());
        }
    }

    fn gain_derivative_fd(spec0: VnhcSpec, x: PolarState) -> f64 {
        let p = unit();
        let h = 1e-5;
        let (r1, t1) = polar_rates(&p, &spec0.with_gain(h), x).unwrap();
        let (r0, t0) = polar_rates(&p, &spec0.with_gain(-h), x).unwrap();
        (r1 / t1 - r0 / t0) / (2.0 * h)
    }

    #[test]
    fn integrand_a_matches_finite_difference() {
        let p = unit();
        let spec = VnhcSpec::new(1.0, 0.0).unwrap();
        let l = gain_constant(&p, &spec);
        for r in [0.5, 1.0, 2.0] {
            for theta in [0.3, 1.1, 2.0, 3.6, 5.2] {
                let fd = gain_derivative_fd(spec, PolarState { r, theta, chart: Chart::Oscillation });
                let closed = l * integrand_a(r, theta).unwrap();
                assert!((fd - closed).abs() < 1e-4 * closed.abs().max(1.0), "r={r} θ={theta}: {fd} vs {closed}");
            }
        }
    }

    #[test]
    fn integrand_b_matches_finite_difference() {
        let p = unit();
        let spec = VnhcSpec::new(1.0, 0.0).unwrap();
        for r in [30.0, 45.0] {
            for theta in [0.3, 1.1, 2.0, 3.6, 5.2] {
                let fd = gain_derivative_fd(spec, PolarState { r, theta, chart: Chart::RotationPlus });
                let closed = integrand_b(&p, &spec, r, theta).unwrap();
                assert!((fd - closed).abs() < 1e-4 * closed.abs().max(1.0), "r={r} θ={theta}: {fd} vs {closed}");
            }
        }
    }

    #[test]
    fn integrand_b_at_quarter_turn() {
        let p = unit();
        let spec = VnhcSpec::new(1.0, 0.01).unwrap();
        let c = 9.81;
        let k = 30.0 * 9.81;
        let r: f64 = 40.0;
        let expected = 5.0 * c * (18.0 * c) / (r * (r * r - k).sqrt());
        assert!((integrand_b(&p, &spec, r, PI / 2.0).unwrap() - expected).abs() < 1e-12);
        assert!(integrand_b(&p, &spec, separatrix_radius(&p), 0.0).is_err());
    }

    #[test]
    fn first_order_map_is_linear_in_gain() {
        let p = unit();
        let cfg = QuadratureConfig::default();
        let up = poincare_first_order(&p, &VnhcSpec::new(1.0, 1e-3).unwrap(), 1.0, Chart::Oscillation, &cfg).unwrap();
        let down = poincare_first_order(&p, &VnhcSpec::new(1.0, -1e-3).unwrap(), 1.0, Chart::Oscillation, &cfg).unwrap();
        let zero = poincare_first_order(&p, &VnhcSpec::new(1.0, 0.0).unwrap(), 1.0, Chart::Oscillation, &cfg).unwrap();
        assert_eq!(zero, 1.0);
        assert!(((up - 1.0) + (down - 1.0)).abs() < 1e-15);
    }
}
