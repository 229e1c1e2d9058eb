use std::f64::consts::PI;

use giant_swing::mechanics::{normalize_input_matrix, poisson_bracket, simply_actuated_transform, FullState};
use giant_swing::models::{distributed_system, simplified_system, AcrobotModel, AcrobotState, DistributedParams, ReducedState, SimplifiedParams};
use giant_swing::supervisor::{decide, Decision, RegulationConfig, Trigger};
use giant_swing::transforms::{from_polar_osc, from_polar_rot, to_polar_osc, to_polar_rot, Chart};
use giant_swing::vnhc::{
    constraint_error, decoupling_scalar, decoupling_scalar_closed_form, lift, reduced_vector_field,
    reduced_vector_field_closed_form, reduced_vector_field_generic, Constraint, VnhcSpec,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn models() -> [AcrobotModel; 2] {
    [simplified_system(SimplifiedParams::unit()).unwrap(), distributed_system(DistributedParams::reference_hardware()).unwrap()]
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn oscillation_chart_round_trip(r in 0.05f64..3.09, theta in -PI..PI) {
        let p = SimplifiedParams::unit();
        let s = from_polar_osc(&p, r, theta).unwrap();
        let back = to_polar_osc(&p, s).unwrap();
        prop_assert!((back.r - r).abs() < 1e-9);
        prop_assert!(angle_diff(back.theta, theta) < 1e-7);
        let again = from_polar_osc(&p, back.r, back.theta).unwrap();
        prop_assert!((again.q_u - s.q_u).abs() < 1e-9 && (again.p_u - s.p_u).abs() < 1e-9);
    }

    #[test]
    fn rotation_chart_round_trip(extra in 0.05f64..40.0, theta in -PI..PI, plus in any::<bool>()) {
        let p = SimplifiedParams::unit();
        let chart = if plus { Chart::RotationPlus } else { Chart::RotationMinus };
        let r = (2.0 * p.chart_scale()).sqrt() + extra;
        let s = from_polar_rot(&p, r, theta, chart).unwrap();
        let back = to_polar_rot(&p, s, chart).unwrap();
        prop_assert!((back.r - r).abs() < 1e-9 * r);
        prop_assert!(angle_diff(back.theta, theta) < 1e-9);
        let other = if plus { Chart::RotationMinus } else { Chart::RotationPlus };
        prop_assert!(to_polar_rot(&p, s, other).is_err());
    }

    #[test]
    fn reduced_field_is_odd(q in -PI..PI, pu in -0.5f64..0.5, gain in -20.0f64..20.0) {
        for model in models() {
            let spec = VnhcSpec::new(1.0, gain).unwrap();
            let f = reduced_vector_field(&model, &spec, ReducedState::new(q, pu));
            let g = reduced_vector_field(&model, &spec, ReducedState::new(-q, -pu));
            prop_assert!((f[0] + g[0]).abs() <= 1e-12 * f[0].abs().max(1.0));
            prop_assert!((f[1] + g[1]).abs() <= 1e-12 * f[1].abs().max(1.0));
        }
    }

    #[test]
    fn reduced_field_forms_agree(q in -PI..PI, pu in -8.0f64..8.0, gain in -0.5f64..0.5, qa_bar in 0.1f64..1.0) {
        let params = SimplifiedParams::unit();
        let model = simplified_system(params).unwrap();
        let spec = VnhcSpec::new(qa_bar, gain).unwrap();
        let s = ReducedState::new(q, pu);
        let a = reduced_vector_field(&model, &spec, s);
        let b = reduced_vector_field_closed_form(&params, &spec, s);
        let c = reduced_vector_field_generic(&model, &spec, s).unwrap();
        for i in 0..2 {
            let scale = a[i].abs().max(1.0);
            prop_assert!((a[i] - b[i]).abs() < 1e-10 * scale, "closed form {i}: {} vs {}", a[i], b[i]);
            prop_assert!((a[i] - c[i]).abs() < 1e-8 * scale, "generic {i}: {} vs {}", a[i], c[i]);
        }
    }

    #[test]
    fn decoupling_scalar_matches_closed_form(qa in -PI..PI, pu in -8.0f64..8.0, gain in -10.0f64..10.0) {
        let params = SimplifiedParams::unit();
        let model = simplified_system(params).unwrap();
        let spec = VnhcSpec::new(1.0, gain).unwrap();
        let x = AcrobotState::new(0.3, qa, pu, 0.0);
        let h = decoupling_scalar(&model, &spec, &x).unwrap();
        let closed = decoupling_scalar_closed_form(&params, qa, spec.df_dqu(x.q_u, x.p_u));
        prop_assert!((h - closed).abs() < 1e-12 * closed.abs().max(1.0));
    }

    #[test]
    fn lift_lies_on_manifold(q in -PI..PI, pu in -0.3f64..0.3, gain in -10.0f64..10.0) {
        for model in models() {
            let spec = VnhcSpec::new(1.0, gain).unwrap();
            let x = lift(&model, &spec, ReducedState::new(q, pu));
            let err = constraint_error(&model, &spec, &x);
            prop_assert!(err.e.abs() < 1e-14);
            prop_assert!(err.e_dot.abs() < 1e-10, "e_dot {}", err.e_dot);
        }
    }

    #[test]
    fn potential_and_inertia_gradients(qu in -PI..PI, qa in -PI..PI) {
        for model in models() {
            let h = 1e-6;
            let grad = model.potential_gradient2(qu, qa);
            let fd_u = (model.potential2(qu + h, qa) - model.potential2(qu - h, qa)) / (2.0 * h);
            let fd_a = (model.potential2(qu, qa + h) - model.potential2(qu, qa - h)) / (2.0 * h);
            prop_assert!((grad[0] - fd_u).abs() < 1e-8 && (grad[1] - fd_a).abs() < 1e-8);
            let dm = model.inertia2_dqa(qa);
            let fd = (model.inertia2(qa + h) - model.inertia2(qa - h)) / (2.0 * h);
            prop_assert!((dm - fd).amax() < 1e-8);
        }
    }

    #[test]
    fn power_balance(qu in -PI..PI, qa in -1.5f64..1.5, pu in -1.0f64..1.0, pa in -1.0f64..1.0, tau in -2.0f64..2.0) {
        for model in models() {
            let x = AcrobotState::new(qu, qa, pu, pa);
            let f = model.vector_field(&x, tau);
            let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let h = 1e-6 / scale;
            let shift = |s: f64| {
                let y = x.to_array();
                AcrobotState::from_array(std::array::from_fn(|i| y[i] + s * f[i]))
            };
            let dh = (model.hamiltonian(&shift(h)) - model.hamiltonian(&shift(-h))) / (2.0 * h);
            // dH/dt = q̇_a τ
            let tol = 1e-8 * scale * model.hamiltonian(&x).abs().max(1.0);
            prop_assert!((dh - f[1] * tau).abs() < tol, "{dh} vs {}", f[1] * tau);
        }
    }

    #[test]
    fn normalized_input_is_semi_orthogonal(entries in prop::collection::vec(-3.0f64..3.0, 6)) {
        let b = DMatrix::from_column_slice(3, 2, &entries);
        prop_assume!(b.clone().svd(false, false).singular_values.min() > 1e-3);
        let norm = normalize_input_matrix(&b).unwrap();
        let gram = norm.b_hat.transpose() * &norm.b_hat;
        prop_assert!((gram - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        prop_assert!((&b * &norm.t_hat - &norm.b_hat).amax() < 1e-12);
    }

    #[test]
    fn simply_actuated_transform_is_canonical(
        qu in -PI..PI, qa in -PI..PI, pu in -2.0f64..2.0, pa in -2.0f64..2.0, i in 0usize..2, j in 0usize..2,
    ) {
        let model = simplified_system(SimplifiedParams::unit()).unwrap();
        let perp = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        let t = simply_actuated_transform(model, &perp).unwrap();
        let x = FullState::from_slices(&[qu, qa], &[pu, pa]);
        let t = &t;
        let qt = |k: usize| move |y: &FullState| t.to_simply_actuated(y).q[k];
        let pt = |k: usize| move |y: &FullState| t.to_simply_actuated(y).p[k];
        let qq = poisson_bracket(qt(i), qt(j), &x);
        let pp = poisson_bracket(pt(i), pt(j), &x);
        let qp = poisson_bracket(qt(i), pt(j), &x);
        prop_assert!(qq.abs() < 1e-8 && pp.abs() < 1e-8);
        let delta = if i == j { 1.0 } else { 0.0 };
        prop_assert!((qp.abs() - delta).abs() < 1e-8, "[q_{i}, p_{j}] = {qp}");
    }

    #[test]
    fn decisions_are_pure_and_banded(q in 0.0f64..PI, p in 0.0f64..0.5) {
        let osc = RegulationConfig::oscillation(PI / 2.0, 0.05, 10.0);
        let rot = RegulationConfig::rotation(0.19, 0.02, 10.0);
        let s = ReducedState::new(q, 0.0);
        prop_assert_eq!(decide(&osc, Trigger::QAxis, s), decide(&osc, Trigger::QAxis, s));
        let (_, d) = decide(&osc, Trigger::QAxis, s);
        let expected = if q < 0.95 * PI / 2.0 { Decision::Inject } else if q > 1.05 * PI / 2.0 { Decision::Dissipate } else { Decision::Extend };
        prop_assert_eq!(d, expected);
        let (_, d) = decide(&rot, Trigger::PAxis, ReducedState::new(0.0, -p));
        let expected = if p < 0.98 * 0.19 { Decision::Inject } else if p > 1.02 * 0.19 { Decision::Dissipate } else { Decision::Extend };
        prop_assert_eq!(d, expected);
    }
}
