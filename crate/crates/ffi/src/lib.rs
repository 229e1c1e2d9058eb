//! C ABI over the `giant_swing` library.
//!
//! Models and trajectories are opaque heap handles owned by the caller and
//! released with their `*_free` function. Every fallible entry point returns
//! a [`GsStatus`]; on failure a message is stored for the calling thread and
//! can be read with [`gs_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use giant_swing::integrator::IntegratorConfig;
use giant_swing::models::{AcrobotModel, DistributedParams, ReducedState, SimplifiedParams};
use giant_swing::simulation::{simulate, Dynamics, RunOptions, Sample};
use giant_swing::vnhc::{reduced_vector_field, VnhcSpec};
use giant_swing::Error;

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    Panic = 4,
}

/// Physical parameters of the distributed-mass acrobot.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GsDistributedParams {
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

/// One point of a trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsSample {
    pub t: f64,
    pub q_u: f64,
    pub q_a: f64,
    pub p_u: f64,
    pub p_a: f64,
    /// Nominal energy.
    pub energy: f64,
}

/// Opaque acrobot model.
pub struct GsModel(AcrobotModel);

/// Opaque result of a simulation.
pub struct GsTrajectory {
    samples: Vec<GsSample>,
    onset: Option<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> GsStatus {
    match err {
        Error::InvalidParameter { .. } | Error::NonFiniteInput | Error::Dimension(_) | Error::OutOfChart { .. } => {
            GsStatus::InvalidArgument
        }
        _ => GsStatus::NumericFailure,
    }
}

fn guard<F: FnOnce() -> Result<(), GsStatus>>(f: F) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside giant_swing".into());
            GsStatus::Panic
        }
    }
}

fn fail(err: Error) -> GsStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(name: &str) -> GsStatus {
    set_error(format!("{name} is null"));
    GsStatus::NullPointer
}

unsafe fn model_ref<'a>(model: *const GsModel) -> Result<&'a AcrobotModel, GsStatus> {
    // SAFETY: the caller passes null or a handle from a gs_model_* constructor.
    unsafe { model.as_ref() }.map(|m| &m.0).ok_or_else(|| null("model"))
}

fn spec(qa_bar: f64, gain: f64) -> Result<VnhcSpec, GsStatus> {
    VnhcSpec::new(qa_bar, gain).map_err(fail)
}

fn emit_model(model: giant_swing::Result<AcrobotModel>, out: *mut *mut GsModel) -> Result<(), GsStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    let model = model.map_err(fail)?;
    // SAFETY: out is non-null and points to writable storage per the contract.
    unsafe { *out = Box::into_raw(Box::new(GsModel(model))) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Point-mass acrobot with equal links.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_model_simplified(m: f64, l: f64, g: f64, out: *mut *mut GsModel) -> GsStatus {
    guard(|| {
        let params = SimplifiedParams::new(m, l, g).map_err(fail)?;
        emit_model(giant_swing::models::simplified_system(params), out)
    })
}

/// Distributed-mass acrobot; `params` null selects the reference hardware.
///
/// # Safety
/// `params` must be null or point to a valid struct; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_model_distributed(params: *const GsDistributedParams, out: *mut *mut GsModel) -> GsStatus {
    guard(|| {
        // SAFETY: params is null or valid per the contract.
        let p = match unsafe { params.as_ref() } {
            None => DistributedParams::reference_hardware(),
            Some(p) => DistributedParams {
                m_u: p.m_u,
                m_a: p.m_a,
                l_u: p.l_u,
                l_a: p.l_a,
                l_cu: p.l_cu,
                l_ca: p.l_ca,
                j_u: p.j_u,
                j_a: p.j_a,
                g: p.g,
            },
        };
        emit_model(giant_swing::models::distributed_system(p), out)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_model_free(model: *mut GsModel) {
    if !model.is_null() {
        // SAFETY: model came from Box::into_raw in a constructor.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Nominal energy at `(q_u, p_u)`.
///
/// # Safety
/// `model` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_nominal_energy(model: *const GsModel, q_u: f64, p_u: f64, out: *mut f64) -> GsStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let model = unsafe { model_ref(model) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: out is non-null and writable.
        unsafe { *out = model.nominal_energy(ReducedState::new(q_u, p_u)) };
        Ok(())
    })
}

/// Energy level `R̄` separating oscillations from rotations.
///
/// # Safety
/// `model` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_critical_level(model: *const GsModel, out: *mut f64) -> GsStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let model = unsafe { model_ref(model) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: out is non-null and writable.
        unsafe { *out = model.critical_level() };
        Ok(())
    })
}

/// Constrained vector field `(q̇_u, ṗ_u)` written to `out[0..2]`.
///
/// # Safety
/// `model` must be a live handle or null; `out` null or valid for two
/// writes.
#[no_mangle]
pub unsafe extern "C" fn gs_reduced_field(
    model: *const GsModel,
    qa_bar: f64,
    gain: f64,
    q_u: f64,
    p_u: f64,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let model = unsafe { model_ref(model) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(q_u.is_finite() && p_u.is_finite()) {
            return Err(fail(Error::NonFiniteInput));
        }
        let f = reduced_vector_field(model, &spec(qa_bar, gain)?, ReducedState::new(q_u, p_u));
        // SAFETY: out has room for two values.
        unsafe {
            *out = f[0];
            *out.add(1) = f[1];
        }
        Ok(())
    })
}

/// Integrate the constrained dynamics for `duration` seconds.
///
/// # Safety
/// `model` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_simulate_reduced(
    model: *const GsModel,
    qa_bar: f64,
    gain: f64,
    q_u: f64,
    p_u: f64,
    duration: f64,
    out: *mut *mut GsTrajectory,
) -> GsStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let model = unsafe { model_ref(model) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = IntegratorConfig::default().with_max_time(duration);
        cfg.validate().map_err(fail)?;
        let opts = RunOptions::new(Dynamics::Reduced, cfg);
        let sim = simulate(model, &spec(qa_bar, gain)?, ReducedState::new(q_u, p_u), &opts).map_err(fail)?;
        let samples = sim
            .samples
            .iter()
            .map(|s: &Sample| GsSample { t: s.t, q_u: s.x.q_u, q_a: s.x.q_a, p_u: s.x.p_u, p_a: s.x.p_a, energy: s.energy })
            .collect();
        let traj = GsTrajectory { samples, onset: sim.rotation_onset };
        // SAFETY: out is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(traj)) };
        Ok(())
    })
}

/// Number of samples; 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_trajectory_len(traj: *const GsTrajectory) -> usize {
    // SAFETY: forwarded contract.
    unsafe { traj.as_ref() }.map_or(0, |t| t.samples.len())
}

/// Copy sample `index` into `out`.
///
/// # Safety
/// `traj` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_trajectory_sample(traj: *const GsTrajectory, index: usize, out: *mut GsSample) -> GsStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let traj = unsafe { traj.as_ref() }.ok_or_else(|| null("traj"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let Some(s) = traj.samples.get(index) else {
            set_error(format!("index {index} out of range (len {})", traj.samples.len()));
            return Err(GsStatus::InvalidArgument);
        };
        // SAFETY: out is non-null and writable.
        unsafe { *out = *s };
        Ok(())
    })
}

/// Time of the first `|q_u| = π` crossing, or a negative value if the run
/// never rotated.
///
/// # Safety
/// `traj` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_trajectory_rotation_onset(traj: *const GsTrajectory, out: *mut f64) -> GsStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let traj = unsafe { traj.as_ref() }.ok_or_else(|| null("traj"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: out is non-null and writable.
        unsafe { *out = traj.onset.unwrap_or(-1.0) };
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_trajectory_free(traj: *mut GsTrajectory) {
    if !traj.is_null() {
        // SAFETY: traj came from Box::into_raw in gs_simulate_reduced.
        drop(unsafe { Box::from_raw(traj) });
    }
}
