use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use giant_swing_ffi::*;

fn last_error() -> String {
    let p = gs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn distributed() -> *mut GsModel {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { gs_model_distributed(ptr::null(), &mut model) }, GsStatus::Ok);
    assert!(!model.is_null());
    model
}

#[test]
fn model_lifecycle_and_queries() {
    let model = distributed();
    let mut r_bar = 0.0;
    assert_eq!(unsafe { gs_critical_level(model, &mut r_bar) }, GsStatus::Ok);
    assert!((r_bar - 1.19941965).abs() < 1e-9);
    let mut e = 0.0;
    assert_eq!(unsafe { gs_nominal_energy(model, std::f64::consts::PI, 0.0, &mut e) }, GsStatus::Ok);
    assert!((e - r_bar).abs() < 1e-12);
    let mut f = [0.0; 2];
    assert_eq!(unsafe { gs_reduced_field(model, 1.0, 0.0, 0.3, 0.0, f.as_mut_ptr()) }, GsStatus::Ok);
    assert!(f[0].abs() < 1e-15 && f[1] < 0.0);
    unsafe { gs_model_free(model) };
    unsafe { gs_model_free(ptr::null_mut()) };
}

#[test]
fn simulation_handle() {
    let model = distributed();
    let mut traj = ptr::null_mut();
    let q0 = std::f64::consts::PI / 32.0;
    assert_eq!(unsafe { gs_simulate_reduced(model, 1.0, 10.0, q0, 0.0, 30.0, &mut traj) }, GsStatus::Ok);
    let n = unsafe { gs_trajectory_len(traj) };
    assert!(n > 10);
    let mut first = GsSample::default();
    assert_eq!(unsafe { gs_trajectory_sample(traj, 0, &mut first) }, GsStatus::Ok);
    assert_eq!((first.t, first.q_u, first.p_u), (0.0, q0, 0.0));
    let mut onset = 0.0;
    assert_eq!(unsafe { gs_trajectory_rotation_onset(traj, &mut onset) }, GsStatus::Ok);
    assert!(onset > 0.0 && onset < 30.0);
    assert_eq!(unsafe { gs_trajectory_sample(traj, n, &mut first) }, GsStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe { gs_trajectory_free(traj) };
    unsafe { gs_model_free(model) };
}

#[test]
fn error_codes() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { gs_model_simplified(-1.0, 1.0, 9.81, &mut model) }, GsStatus::InvalidArgument);
    assert!(model.is_null());
    assert!(last_error().contains('m'));
    assert_eq!(unsafe { gs_model_simplified(1.0, 1.0, 9.81, ptr::null_mut()) }, GsStatus::NullPointer);
    let mut x = 0.0;
    assert_eq!(unsafe { gs_critical_level(ptr::null(), &mut x) }, GsStatus::NullPointer);
    assert!(last_error().contains("model"));

    let model = distributed();
    let mut f = [0.0; 2];
    assert_eq!(unsafe { gs_reduced_field(model, 3.0, 0.0, 0.1, 0.0, f.as_mut_ptr()) }, GsStatus::InvalidArgument);
    assert_eq!(unsafe { gs_reduced_field(model, 1.0, 0.0, f64::NAN, 0.0, f.as_mut_ptr()) }, GsStatus::InvalidArgument);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { gs_simulate_reduced(model, 1.0, 0.0, 0.1, 0.0, -1.0, &mut traj) }, GsStatus::InvalidArgument);
    assert!(traj.is_null());
    assert_eq!(unsafe { gs_trajectory_len(ptr::null()) }, 0);
    unsafe { gs_model_free(model) };
}

#[test]
fn header_is_current_and_parses() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/giant_swing.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for name in [
        "gs_last_error",
        "gs_model_simplified",
        "gs_model_distributed",
        "gs_model_free",
        "gs_nominal_energy",
        "gs_critical_level",
        "gs_reduced_field",
        "gs_simulate_reduced",
        "gs_trajectory_len",
        "gs_trajectory_sample",
        "gs_trajectory_rotation_onset",
        "gs_trajectory_free",
        "GS_STATUS_NUMERIC_FAILURE",
        "typedef struct GsModel GsModel;",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).status() else {
        eprintln!("cc not available; syntax check skipped");
        return;
    };
    assert!(status.success());
}
