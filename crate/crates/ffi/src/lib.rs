//! C ABI over `mppi-locomotion`.
//!
//! Every entry point returns an [`MppiStatus`]; on failure the message is
//! available from [`mppi_last_error_message`] on the same thread. Controllers
//! are opaque heap handles released with [`mppi_controller_free`]. Strings
//! handed out by the library are released with [`mppi_string_free`].
//!
//! The generated header lives in `include/mppi_locomotion.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mppi_locomotion::env::{execute_prefix, Env, EnvState, Environment};
use mppi_locomotion::harness::{self, ExperimentConfig};
use mppi_locomotion::planner::{self, Planner};
use mppi_locomotion::spline::{SplineKind, SplineTrajectory};
use mppi_locomotion::trajectory::DenseTrajectory;
use mppi_locomotion::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MppiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    InvalidTrajectory = 4,
    Config = 5,
    OutOfBounds = 6,
    DimensionMismatch = 7,
    PlanningFailure = 8,
    Io = 9,
    Serialization = 10,
    /// The robot fell during the last simulated step.
    RobotFailed = 11,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MppiStatus {
    match e {
        Error::Domain(_) => MppiStatus::Domain,
        Error::InvalidTrajectory(_) => MppiStatus::InvalidTrajectory,
        Error::Config(_) => MppiStatus::Config,
        Error::Bounds(_) => MppiStatus::OutOfBounds,
        Error::Dimension { .. } => MppiStatus::DimensionMismatch,
        Error::PlanningFailure => MppiStatus::PlanningFailure,
        Error::Io { .. } => MppiStatus::Io,
        Error::Serialization(_) => MppiStatus::Serialization,
    }
}

struct Failure(MppiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: MppiStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MppiStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MppiStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            MppiStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return fail(MppiStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .or_else(|_| fail(MppiStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(MppiStatus::NullPointer, format!("{what} is null"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return fail(MppiStatus::NullPointer, format!("{what} is null"));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn check_len(expected: usize, got: usize, what: &str) -> Result<(), Failure> {
    if expected == got {
        Ok(())
    } else {
        fail(
            MppiStatus::DimensionMismatch,
            format!("{what}: expected length {expected}, got {got}"),
        )
    }
}

unsafe fn load_config(config_toml: *const c_char) -> Result<ExperimentConfig, Failure> {
    if config_toml.is_null() {
        return Ok(ExperimentConfig::from_toml_str("")?);
    }
    Ok(ExperimentConfig::from_toml_str(read_str(config_toml, "config")?)?)
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mppi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mppi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opaque receding-horizon controller bound to a simulated plant.
pub struct MppiController {
    config: ExperimentConfig,
    env: Env,
    planner: Planner,
    state: EnvState,
    warm: DenseTrajectory,
    step: u64,
}

impl MppiController {
    fn new(config: ExperimentConfig, seed: u64) -> Result<Self, Failure> {
        let env = Env::from_spec(config.env.clone())?;
        let mut pc = config.planner.clone();
        pc.seed = seed;
        let planner = Planner::new(pc.clone(), config.cost.clone(), &config.env)?;
        let warm = planner::initial_trajectory(&config.env, &pc)?;
        let state = env.initial_state();
        Ok(Self {
            config,
            env,
            planner,
            state,
            warm,
            step: 0,
        })
    }

    /// Plans from the current state; the warm start advances one step.
    fn plan(&mut self) -> Result<planner::PlanOutput, Failure> {
        let out = self.planner.plan_step(&self.env, &self.state, &self.warm, self.step)?;
        self.warm = out.trajectory.shift(1)?;
        self.step += 1;
        Ok(out)
    }
}

/// Builds a controller from TOML config text (NULL selects the quadruped
/// walking defaults) with the given sampling seed.
///
/// # Safety
/// `config_toml` must be NULL or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_new(
    config_toml: *const c_char,
    seed: u64,
    out: *mut *mut MppiController,
) -> MppiStatus {
    guard(|| {
        if out.is_null() {
            return fail(MppiStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let controller = MppiController::new(load_config(config_toml)?, seed)?;
        *out = Box::into_raw(Box::new(controller));
        Ok(())
    })
}

/// Destroys a controller. NULL is ignored.
///
/// # Safety
/// `controller` must come from [`mppi_controller_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_free(controller: *mut MppiController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}

unsafe fn controller<'a>(c: *mut MppiController) -> Result<&'a mut MppiController, Failure> {
    c.as_mut().map_or_else(|| fail(MppiStatus::NullPointer, "controller is null"), Ok)
}

/// Sizes of the generalized position, velocity and joint command vectors.
///
/// # Safety
/// `controller` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_dims(
    controller: *mut MppiController,
    position_dim: *mut usize,
    velocity_dim: *mut usize,
    control_dim: *mut usize,
) -> MppiStatus {
    guard(|| {
        let c = self::controller(controller)?;
        if position_dim.is_null() || velocity_dim.is_null() || control_dim.is_null() {
            return fail(MppiStatus::NullPointer, "dimension output is null");
        }
        *position_dim = c.state.position.len();
        *velocity_dim = c.state.velocity.len();
        *control_dim = c.env.control_dim();
        Ok(())
    })
}

/// Returns to the initial state and the standing warm start.
///
/// # Safety
/// `controller` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_reset(controller: *mut MppiController) -> MppiStatus {
    guard(|| {
        let c = self::controller(controller)?;
        c.state = c.env.initial_state();
        c.warm = planner::initial_trajectory(&c.config.env, c.planner.config())?;
        c.step = 0;
        Ok(())
    })
}

/// Overwrites the controller's state, e.g. with a measurement from another simulator.
///
/// # Safety
/// `controller` must be a live handle; the arrays must hold the given lengths.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_set_state(
    controller: *mut MppiController,
    time: f64,
    position: *const f64,
    position_len: usize,
    velocity: *const f64,
    velocity_len: usize,
) -> MppiStatus {
    guard(|| {
        let c = self::controller(controller)?;
        check_len(c.state.position.len(), position_len, "position")?;
        check_len(c.state.velocity.len(), velocity_len, "velocity")?;
        let q = read_slice(position, position_len, "position")?;
        let v = read_slice(velocity, velocity_len, "velocity")?;
        c.state.time = time;
        c.state.position.copy_from_slice(q);
        c.state.velocity.copy_from_slice(v);
        Ok(())
    })
}

/// Copies the controller's current state out.
///
/// # Safety
/// `controller` must be a live handle; the arrays must hold the given lengths.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_get_state(
    controller: *mut MppiController,
    time: *mut f64,
    position: *mut f64,
    position_len: usize,
    velocity: *mut f64,
    velocity_len: usize,
) -> MppiStatus {
    guard(|| {
        let c = self::controller(controller)?;
        check_len(c.state.position.len(), position_len, "position")?;
        check_len(c.state.velocity.len(), velocity_len, "velocity")?;
        if time.is_null() {
            return fail(MppiStatus::NullPointer, "time is null");
        }
        *time = c.state.time;
        write_slice(position, position_len, "position")?.copy_from_slice(&c.state.position);
        write_slice(velocity, velocity_len, "velocity")?.copy_from_slice(&c.state.velocity);
        Ok(())
    })
}

/// Plans from the current state and writes the first PD targets and the
/// best rollout cost. The state is not advanced.
///
/// # Safety
/// `controller` must be a live handle; `q_des`/`v_des` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_plan(
    controller: *mut MppiController,
    q_des: *mut f64,
    v_des: *mut f64,
    len: usize,
    cost: *mut f64,
) -> MppiStatus {
    guard(|| {
        let c = self::controller(controller)?;
        check_len(c.env.control_dim(), len, "command")?;
        let q_out = write_slice(q_des, len, "q_des")?;
        let v_out = write_slice(v_des, len, "v_des")?;
        let out = c.plan()?;
        q_out.copy_from_slice(&out.q_des);
        v_out.copy_from_slice(&out.v_des);
        if !cost.is_null() {
            *cost = out.cost;
        }
        Ok(())
    })
}

/// Plans, then simulates one control step of the first command on the
/// controller's own plant. Returns `RobotFailed` when the robot falls.
///
/// # Safety
/// `controller` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mppi_controller_step(controller: *mut MppiController) -> MppiStatus {
    guard(|| {
        let c = self::controller(controller)?;
        let out = c.plan()?;
        let outcome = execute_prefix(&c.env, &c.state, &out.trajectory, 1, &c.planner.config().gains)?
            .pop()
            .expect("one step");
        c.state = outcome.state;
        if outcome.failed {
            return fail(MppiStatus::RobotFailed, "robot failed during the step");
        }
        Ok(())
    })
}

/// Evaluates a spline through `node_count` uniformly spaced nodes at time `t`.
///
/// `positions` and `velocities` are node-major (`node_count x dof`). `kind` is
/// 0 for Hermite, 1 for natural cubic, 2 for quadratic.
///
/// # Safety
/// Input arrays must hold `node_count * dof` values and outputs `dof` values.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mppi_spline_evaluate(
    kind: u32,
    start_time: f64,
    spacing: f64,
    node_count: usize,
    dof: usize,
    positions: *const f64,
    velocities: *const f64,
    t: f64,
    out_position: *mut f64,
    out_velocity: *mut f64,
) -> MppiStatus {
    guard(|| {
        let kind = match kind {
            0 => SplineKind::HermiteCubic,
            1 => SplineKind::Cubic,
            2 => SplineKind::Quadratic,
            other => return fail(MppiStatus::Domain, format!("unknown spline kind {other}")),
        };
        let n = node_count
            .checked_mul(dof)
            .ok_or_else(|| Failure(MppiStatus::Domain, "node_count * dof overflows".into()))?;
        let q = read_slice(positions, n, "positions")?;
        let v = read_slice(velocities, n, "velocities")?;
        let rows = |x: &[f64]| x.chunks(dof.max(1)).map(<[f64]>::to_vec).collect::<Vec<_>>();
        let spline = SplineTrajectory::uniform(start_time, spacing, rows(q), rows(v), kind)?;
        let p_out = write_slice(out_position, dof, "out_position")?;
        let v_out = write_slice(out_velocity, dof, "out_velocity")?;
        spline.evaluate_into(t, p_out, v_out)?;
        Ok(())
    })
}

/// Normalized sampling weights of `len` rollout costs at `temperature`.
///
/// # Safety
/// `costs` and `out_weights` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mppi_compute_weights(
    costs: *const f64,
    len: usize,
    temperature: f64,
    out_weights: *mut f64,
) -> MppiStatus {
    guard(|| {
        let costs = read_slice(costs, len, "costs")?;
        let w = planner::compute_weights(costs, temperature)?;
        write_slice(out_weights, len, "out_weights")?.copy_from_slice(&w);
        Ok(())
    })
}

/// Runs the closed-loop experiment described by `config_toml` for every
/// configured seed and returns the run summaries as a JSON array.
///
/// # Safety
/// `config_toml` must be NULL or NUL-terminated; `out_json` must be writable.
/// The returned string must be released with [`mppi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn mppi_run_experiment(config_toml: *const c_char, out_json: *mut *mut c_char) -> MppiStatus {
    guard(|| {
        if out_json.is_null() {
            return fail(MppiStatus::NullPointer, "out_json is null");
        }
        *out_json = ptr::null_mut();
        let config = load_config(config_toml)?;
        let logs = harness::run(&config)?;
        let summaries: Vec<_> = logs.into_iter().map(|l| l.summary).collect();
        let json = harness::summary_json(&summaries)?;
        *out_json = CString::new(json)
            .or_else(|_| fail(MppiStatus::Serialization, "summary contains NUL"))?
            .into_raw();
        Ok(())
    })
}
