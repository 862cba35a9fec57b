//! C ABI for the viewrace solver toolkit.
//!
//! Handles are opaque pointers owned by the library: every `*_new`/`*_load`
//! or solver call that returns a pointer must be paired with the matching
//! `*_free`. Functions report failure through [`VrStatus`] return codes (or
//! a null pointer) and leave a human-readable description retrievable with
//! [`vr_last_error_message`]. All functions are thread-safe as long as each
//! handle is used from one thread at a time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;

use viewrace::best_response::{best_response, cost_quadrature};
use viewrace::dynamics::{simulate, StopCondition};
use viewrace::equilibrium::{
    best_response_iteration, epsilon_equilibrium, symmetric_equilibrium, vanishing_threshold,
    EquilibriumError, EquilibriumKind, EquilibriumResult, IterationMode,
};
use viewrace::model::{GameConfig, Horizon, PlayerParams, StrategyProfile};
use viewrace::scenario::load_scenario;

/// Status codes returned by the fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    SolverFailure = 4,
    NonConvergence = 5,
    Io = 6,
}

/// Equilibrium kinds mirrored for the C surface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrEquilibriumKind {
    DegenerateAllMin = 0,
    SymmetricExact = 1,
    EpsilonApprox = 2,
    IterationFixedPoint = 3,
}

/// Opaque game configuration handle.
pub struct VrConfig {
    inner: GameConfig,
}

/// Opaque equilibrium result handle.
pub struct VrEquilibrium {
    inner: EquilibriumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap_or_default();
    });
}

/// Description of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn vr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Builds a configuration from per-player parameter arrays of length
/// `n_players`. Returns null (with an error message) on invalid input.
///
/// # Safety
/// `lambda`, `gamma`, `p` and `z` must each point to `n_players` readable
/// doubles; `z` may be null, meaning all-zero initial fractions.
#[no_mangle]
pub unsafe extern "C" fn vr_config_new(
    lambda: *const f64,
    gamma: *const f64,
    p: *const f64,
    z: *const f64,
    n_players: usize,
    u_min: f64,
    u_max: f64,
) -> *mut VrConfig {
    let (Some(lambda), Some(gamma), Some(pp)) = (
        slice_arg(lambda, n_players),
        slice_arg(gamma, n_players),
        slice_arg(p, n_players),
    ) else {
        set_error("null parameter array");
        return std::ptr::null_mut();
    };
    let z = slice_arg(z, n_players);
    let players = (0..n_players)
        .map(|i| PlayerParams {
            lambda: lambda[i],
            gamma: gamma[i],
            p: pp[i],
            z: z.map_or(0.0, |z| z[i]),
        })
        .collect();
    let config = GameConfig {
        players,
        u_min,
        u_max,
        horizon: Horizon::Infinite,
    };
    let violations = config.validate();
    if !violations.is_empty() {
        set_error(format!("{violations:?}"));
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(VrConfig { inner: config }))
}

/// Loads a configuration from a scenario file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vr_config_load(path: *const c_char) -> *mut VrConfig {
    if path.is_null() {
        set_error("null path");
        return std::ptr::null_mut();
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8");
        return std::ptr::null_mut();
    };
    match load_scenario(path) {
        Ok(config) => {
            let violations = config.validate();
            if !violations.is_empty() {
                set_error(format!("{violations:?}"));
                return std::ptr::null_mut();
            }
            Box::into_raw(Box::new(VrConfig { inner: config }))
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Releases a configuration handle. Null is ignored.
///
/// # Safety
/// `config` must come from `vr_config_new`/`vr_config_load` and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn vr_config_free(config: *mut VrConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of players in the configuration; zero for a null handle.
///
/// # Safety
/// `config` must be a live configuration handle or null.
#[no_mangle]
pub unsafe extern "C" fn vr_config_n_players(config: *const VrConfig) -> usize {
    config.as_ref().map_or(0, |c| c.inner.n_players())
}

/// Vanishing-discount switching threshold for a single player facing the
/// aggregate opponent rate `a_minus_i`; pure, never fails.
#[no_mangle]
pub extern "C" fn vr_vanishing_threshold(
    lambda: f64,
    gamma: f64,
    a_minus_i: f64,
    u_min: f64,
    u_max: f64,
) -> f64 {
    let params = PlayerParams::new(lambda, gamma, 1.0);
    vanishing_threshold(&params, a_minus_i, u_min, u_max)
}

fn status_of(e: &EquilibriumError) -> VrStatus {
    match e {
        EquilibriumError::NonConvergence { .. } => VrStatus::NonConvergence,
        EquilibriumError::PreconditionViolated(_) => VrStatus::InvalidConfig,
        _ => VrStatus::SolverFailure,
    }
}

/// Solves for an equilibrium of the configuration: the exact symmetric one
/// for identical players, the ε-approximate construction for common λ with
/// strictly decreasing γ (ε measured at discount `p_eps`), and round-robin
/// best responses otherwise. On success stores a handle in `out`.
///
/// # Safety
/// `config` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vr_solve_equilibrium(
    config: *const VrConfig,
    p_eps: f64,
    out: *mut *mut VrEquilibrium,
) -> VrStatus {
    let (Some(config), false) = (config.as_ref(), out.is_null()) else {
        set_error("null handle");
        return VrStatus::NullPointer;
    };
    let c = &config.inner;
    let sorted_gamma = c.players.windows(2).all(|w| w[0].gamma > w[1].gamma)
        && c.players.iter().all(|q| q.lambda == c.players[0].lambda)
        && c.players[0].lambda > c.players[0].gamma;
    let result = if c.is_symmetric() {
        let q = c.players[0];
        symmetric_equilibrium(q.lambda, q.gamma, q.p, c.n_players(), c.u_min, c.u_max)
    } else if sorted_gamma {
        epsilon_equilibrium(c, p_eps)
    } else {
        best_response_iteration(
            c,
            &StrategyProfile::all_min(c.n_players()),
            50,
            1e-9,
            IterationMode::GaussSeidel,
        )
    };
    match result {
        Ok(eq) => {
            *out = Box::into_raw(Box::new(VrEquilibrium { inner: eq }));
            VrStatus::Ok
        }
        Err(e) => {
            let status = status_of(&e);
            set_error(e.to_string());
            status
        }
    }
}

/// Releases an equilibrium handle. Null is ignored.
///
/// # Safety
/// `eq` must come from `vr_solve_equilibrium` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vr_equilibrium_free(eq: *mut VrEquilibrium) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// Kind of a solved equilibrium.
///
/// # Safety
/// `eq` must be a live equilibrium handle.
#[no_mangle]
pub unsafe extern "C" fn vr_equilibrium_kind(eq: *const VrEquilibrium) -> VrEquilibriumKind {
    match eq.as_ref().map(|e| e.inner.kind) {
        Some(EquilibriumKind::SymmetricExact) => VrEquilibriumKind::SymmetricExact,
        Some(EquilibriumKind::EpsilonApprox) => VrEquilibriumKind::EpsilonApprox,
        Some(EquilibriumKind::IterationFixedPoint) => VrEquilibriumKind::IterationFixedPoint,
        _ => VrEquilibriumKind::DegenerateAllMin,
    }
}

/// Measured ε of the equilibrium (zero for the exact kinds).
///
/// # Safety
/// `eq` must be a live equilibrium handle.
#[no_mangle]
pub unsafe extern "C" fn vr_equilibrium_epsilon(eq: *const VrEquilibrium) -> f64 {
    eq.as_ref().map_or(f64::NAN, |e| e.inner.epsilon)
}

/// Common threshold of a symmetric equilibrium; NaN when absent.
///
/// # Safety
/// `eq` must be a live equilibrium handle.
#[no_mangle]
pub unsafe extern "C" fn vr_equilibrium_x_star(eq: *const VrEquilibrium) -> f64 {
    eq.as_ref().and_then(|e| e.inner.x_star).unwrap_or(f64::NAN)
}

/// Threshold of one player's strategy: the switching state for threshold
/// strategies, 0 for constant-Min, 1 for constant-Max, NaN for
/// multi-breakpoint strategies or an out-of-range player.
///
/// # Safety
/// `eq` must be a live equilibrium handle.
#[no_mangle]
pub unsafe extern "C" fn vr_equilibrium_threshold(eq: *const VrEquilibrium, player: usize) -> f64 {
    let Some(e) = eq.as_ref() else {
        return f64::NAN;
    };
    if player >= e.inner.profile.len() {
        return f64::NAN;
    }
    e.inner
        .profile
        .get(player)
        .reporting_threshold()
        .unwrap_or(f64::NAN)
}

/// Discounted cost of one player under a threshold profile.
///
/// # Safety
/// `config` must be a live handle; `thresholds` must point to `n_players`
/// doubles; `out_cost` and `out_tail_bound` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn vr_cost_quadrature(
    config: *const VrConfig,
    thresholds: *const f64,
    player: usize,
    out_cost: *mut f64,
    out_tail_bound: *mut f64,
) -> VrStatus {
    let Some(config) = config.as_ref() else {
        set_error("null configuration");
        return VrStatus::NullPointer;
    };
    let n = config.inner.n_players();
    let Some(thresholds) = slice_arg(thresholds, n) else {
        set_error("null threshold array");
        return VrStatus::NullPointer;
    };
    if player >= n {
        set_error(format!("player {player} out of range"));
        return VrStatus::InvalidArgument;
    }
    let profile = StrategyProfile::from_thresholds(thresholds);
    let q = cost_quadrature(&config.inner, &profile, player);
    if !out_cost.is_null() {
        *out_cost = q.value;
    }
    if !out_tail_bound.is_null() {
        *out_tail_bound = q.tail_bound;
    }
    VrStatus::Ok
}

/// Best response of one player against opponents playing thresholds.
/// Writes up to `capacity` breakpoints of the reply into `out_breakpoints`
/// (ascending), the count into `out_len`, and the value at the start state
/// into `out_value`; each output pointer may be null.
///
/// # Safety
/// `config` must be a live handle; `opponent_thresholds` must point to
/// `n_players` doubles; `out_breakpoints` must allow `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn vr_best_response(
    config: *const VrConfig,
    player: usize,
    opponent_thresholds: *const f64,
    out_breakpoints: *mut f64,
    capacity: usize,
    out_len: *mut usize,
    out_value: *mut f64,
) -> VrStatus {
    let Some(config) = config.as_ref() else {
        set_error("null configuration");
        return VrStatus::NullPointer;
    };
    let n = config.inner.n_players();
    let Some(thresholds) = slice_arg(opponent_thresholds, n) else {
        set_error("null threshold array");
        return VrStatus::NullPointer;
    };
    if player >= n {
        set_error(format!("player {player} out of range"));
        return VrStatus::InvalidArgument;
    }
    let opponents = StrategyProfile::from_thresholds(thresholds);
    match best_response(&config.inner, player, &opponents) {
        Ok(br) => {
            let breaks = br.strategy.breakpoints();
            if !out_len.is_null() {
                *out_len = breaks.len();
            }
            if !out_breakpoints.is_null() {
                for (k, &b) in breaks.iter().take(capacity).enumerate() {
                    *out_breakpoints.add(k) = b;
                }
            }
            if !out_value.is_null() {
                *out_value = br
                    .value_function
                    .eval(config.inner.z_total())
                    .unwrap_or(f64::NAN);
            }
            VrStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            VrStatus::SolverFailure
        }
    }
}

/// Simulates a threshold profile and writes the trajectory CSV to `path`.
/// `sample_dt <= 0` disables uniform sampling rows.
///
/// # Safety
/// `config` must be a live handle; `thresholds` must point to `n_players`
/// doubles; `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vr_simulate_csv(
    config: *const VrConfig,
    thresholds: *const f64,
    path: *const c_char,
    sample_dt: f64,
) -> VrStatus {
    let Some(config) = config.as_ref() else {
        set_error("null configuration");
        return VrStatus::NullPointer;
    };
    let n = config.inner.n_players();
    let Some(thresholds) = slice_arg(thresholds, n) else {
        set_error("null threshold array");
        return VrStatus::NullPointer;
    };
    if path.is_null() {
        set_error("null path");
        return VrStatus::NullPointer;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8");
        return VrStatus::InvalidArgument;
    };
    let profile = StrategyProfile::from_thresholds(thresholds);
    let stop = match config.inner.horizon {
        Horizon::Finite { tau } => StopCondition::Time { t_end: tau },
        Horizon::Infinite => StopCondition::default(),
    };
    let traj = simulate(&config.inner, &profile, stop);
    let file = match std::fs::File::create(path) {
        Ok(f) => f,
        Err(e) => {
            set_error(format!("cannot create {path}: {e}"));
            return VrStatus::Io;
        }
    };
    let mut w = std::io::BufWriter::new(file);
    let dt = if sample_dt > 0.0 {
        Some(sample_dt)
    } else {
        None
    };
    if let Err(e) = traj.write_csv(&mut w, dt) {
        set_error(format!("cannot write {path}: {e}"));
        return VrStatus::Io;
    }
    VrStatus::Ok
}
