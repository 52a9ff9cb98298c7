//! C ABI over `levy_attention`.
//!
//! Every fallible call returns an [`LaStatus`]; on failure a description is
//! available from [`la_last_error_message`] on the same thread. Sessions and
//! surfaces are opaque handles owned by the caller and released with their
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use levy_attention::attention_flow::{build_network, AttentionFlowNetwork, Metrics};
use levy_attention::inference::{infer, ObservedExponents};
use levy_attention::interest_space::LatticePoint;
use levy_attention::levy_sampler::{step_cdf, step_quantile, StepLawParams};
use levy_attention::scaling::{fit_power_law, sweep_exponents, ExponentSet, ResponseSurface, ScalingFit};
use levy_attention::simulation::{run_session, write_session_jsonl, SessionResult, SimConfig};
use levy_attention::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Fit = 3,
    Sweep = 4,
    Inference = 5,
    Parse = 6,
    Schema = 7,
    Io = 8,
    OutOfRange = 9,
    Panic = 10,
}

impl From<&Error> for LaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parameter(_) => LaStatus::InvalidParameter,
            Error::Fit(_) => LaStatus::Fit,
            Error::Sweep(_) => LaStatus::Sweep,
            Error::Inference(_) => LaStatus::Inference,
            Error::Parse { .. } | Error::Csv(_) => LaStatus::Parse,
            Error::Schema(_) | Error::Json(_) => LaStatus::Schema,
            Error::Io(_) => LaStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn fail(status: LaStatus, msg: impl Into<String>) -> LaStatus {
    set_last_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), LaStatus>) -> LaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LaStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(LaStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, LaStatus>;
}

impl<T> OrStatus<T> for levy_attention::Result<T> {
    fn or_status(self) -> Result<T, LaStatus> {
        self.map_err(|e| fail(LaStatus::from(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), LaStatus> {
    if p.is_null() {
        Err(fail(LaStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, LaStatus> {
    non_null(path, "path")?;
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(LaStatus::InvalidParameter, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

/// Most recent error message on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn la_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn la_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaSimConfig {
    pub n_walkers: usize,
    pub p: f64,
    pub lambda: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub seed_origin: bool,
    pub origin_trial: bool,
    pub max_ticks: u64,
    pub rng_seed: u64,
}

impl LaSimConfig {
    fn to_config(self) -> levy_attention::Result<SimConfig> {
        let cfg = SimConfig {
            n_walkers: self.n_walkers,
            p: self.p,
            step_law: StepLawParams::new(self.lambda, self.l_min, self.l_max)?,
            seed_origin: self.seed_origin,
            origin_trial: self.origin_trial,
            max_ticks: self.max_ticks,
            rng_seed: self.rng_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LaMetrics {
    pub activity: u64,
    pub diversity: u64,
    pub edges: u64,
    pub n_walkers: u64,
}

impl From<Metrics> for LaMetrics {
    fn from(m: Metrics) -> Self {
        LaMetrics {
            activity: m.activity,
            diversity: m.diversity,
            edges: m.edges,
            n_walkers: m.n_walkers,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LaScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub std_err: f64,
    pub n_points: usize,
}

impl From<ScalingFit> for LaScalingFit {
    fn from(f: ScalingFit) -> Self {
        LaScalingFit {
            exponent: f.exponent,
            prefactor: f.prefactor,
            r_squared: f.r_squared,
            std_err: f.std_err,
            n_points: f.n_points,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LaExponentSet {
    pub alpha: LaScalingFit,
    pub beta: LaScalingFit,
    pub gamma: LaScalingFit,
    pub theta: LaScalingFit,
}

impl From<ExponentSet> for LaExponentSet {
    fn from(e: ExponentSet) -> Self {
        LaExponentSet {
            alpha: e.alpha.into(),
            beta: e.beta.into(),
            gamma: e.gamma.into(),
            theta: e.theta.into(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LaInferred {
    pub p_hat: f64,
    pub lambda_hat: f64,
    pub distance: f64,
    pub gamma_model: f64,
    pub p_index: usize,
    pub lambda_index: usize,
}

/// Simulated session with its attention flow network.
pub struct LaSession {
    config: SimConfig,
    result: SessionResult,
    network: AttentionFlowNetwork<LatticePoint>,
}

/// Response surface loaded from JSON.
pub struct LaSurface {
    surface: ResponseSurface,
}

/// Fills `out` with the library defaults: 100 walkers, p = 0.5, λ = 2,
/// jumps in [1, 1000], seeded origin with deposit trial, seed 0.
///
/// # Safety
/// `out` must be null or point to writable memory for one `LaSimConfig`.
#[no_mangle]
pub unsafe extern "C" fn la_sim_config_default(out: *mut LaSimConfig) -> LaStatus {
    guard(|| {
        non_null(out, "out")?;
        let d = SimConfig::new(100, 0.5, 2.0, 0).or_status()?;
        *out = LaSimConfig {
            n_walkers: d.n_walkers,
            p: d.p,
            lambda: d.step_law.lambda,
            l_min: d.step_law.l_min,
            l_max: d.step_law.l_max,
            seed_origin: d.seed_origin,
            origin_trial: d.origin_trial,
            max_ticks: d.max_ticks,
            rng_seed: d.rng_seed,
        };
        Ok(())
    })
}

/// Runs one session. On success `*out` receives a handle to release with
/// `la_session_free`.
///
/// # Safety
/// `config` must point to a valid `LaSimConfig`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn la_session_run(
    config: *const LaSimConfig,
    out: *mut *mut LaSession,
) -> LaStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let cfg = (*config).to_config().or_status()?;
        let result = run_session(&cfg).or_status()?;
        let network = build_network(&result.trajectories);
        *out = Box::into_raw(Box::new(LaSession {
            config: cfg,
            result,
            network,
        }));
        Ok(())
    })
}

/// # Safety
/// `session` must be null or a handle from `la_session_run` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn la_session_free(session: *mut LaSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

unsafe fn session_ref<'a>(s: *const LaSession) -> Result<&'a LaSession, LaStatus> {
    non_null(s, "session")?;
    Ok(&*s)
}

/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_session_metrics(
    session: *const LaSession,
    out: *mut LaMetrics,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(out, "out")?;
        *out = s.network.metrics(s.config.n_walkers).into();
        Ok(())
    })
}

/// Termination tick and whether the tick cap was hit.
///
/// # Safety
/// `session` must be a live handle; `t_end` and `truncated` writable.
#[no_mangle]
pub unsafe extern "C" fn la_session_termination(
    session: *const LaSession,
    t_end: *mut u64,
    truncated: *mut bool,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(t_end, "t_end")?;
        non_null(truncated, "truncated")?;
        *t_end = s.result.t_end;
        *truncated = s.result.truncated;
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_session_active_sites(
    session: *const LaSession,
    out: *mut usize,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(out, "out")?;
        *out = s.result.space.n_active();
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_session_trajectory_len(
    session: *const LaSession,
    walker: usize,
    out: *mut usize,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(out, "out")?;
        let traj = s.result.trajectories.get(walker).ok_or_else(|| {
            fail(LaStatus::OutOfRange, format!("walker {walker} out of range"))
        })?;
        *out = traj.len();
        Ok(())
    })
}

/// Copies up to `capacity` sites of one trajectory into `xy` as
/// interleaved `x, y` pairs (so `xy` holds `2 * capacity` values) and
/// stores the number of sites copied in `written`.
///
/// # Safety
/// `session` must be a live handle, `xy` valid for `2 * capacity` writes
/// (may be null when `capacity` is 0), `written` writable.
#[no_mangle]
pub unsafe extern "C" fn la_session_trajectory(
    session: *const LaSession,
    walker: usize,
    xy: *mut i64,
    capacity: usize,
    written: *mut usize,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(written, "written")?;
        let traj = s.result.trajectories.get(walker).ok_or_else(|| {
            fail(LaStatus::OutOfRange, format!("walker {walker} out of range"))
        })?;
        let n = traj.len().min(capacity);
        if n > 0 {
            non_null(xy, "xy")?;
            let dst = std::slice::from_raw_parts_mut(xy, 2 * n);
            for (k, site) in traj.sites()[..n].iter().enumerate() {
                dst[2 * k] = site.x;
                dst[2 * k + 1] = site.y;
            }
        }
        *written = n;
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_session_flow_balanced(
    session: *const LaSession,
    out: *mut bool,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(out, "out")?;
        *out = s.network.check_flow_balance();
        Ok(())
    })
}

/// Writes the session as JSON lines (header record, then one per walker).
///
/// # Safety
/// `session` must be a live handle; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn la_session_write_jsonl(
    session: *const LaSession,
    path: *const c_char,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        let path = path_arg(path)?;
        let file = File::create(&path).map_err(Error::from).or_status()?;
        write_session_jsonl(&s.config, &s.result, BufWriter::new(file)).or_status()
    })
}

/// Writes the network as a `from,to,weight` edge list.
///
/// # Safety
/// `session` must be a live handle; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn la_session_write_edges_csv(
    session: *const LaSession,
    path: *const c_char,
) -> LaStatus {
    guard(|| {
        let s = session_ref(session)?;
        let path = path_arg(path)?;
        let file = File::create(&path).map_err(Error::from).or_status()?;
        s.network.write_edge_csv(BufWriter::new(file)).or_status()
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn la_step_quantile(
    u: f64,
    lambda: f64,
    l_min: f64,
    l_max: f64,
    out: *mut f64,
) -> LaStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = StepLawParams::new(lambda, l_min, l_max).or_status()?;
        *out = step_quantile(u, &params).or_status()?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn la_step_cdf(
    l: f64,
    lambda: f64,
    l_min: f64,
    l_max: f64,
    out: *mut f64,
) -> LaStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = StepLawParams::new(lambda, l_min, l_max).or_status()?;
        *out = step_cdf(l, &params).or_status()?;
        Ok(())
    })
}

/// Log-log least squares through `(x[i], y[i])`.
///
/// # Safety
/// `x` and `y` must be valid for `n` reads; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_fit_power_law(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut LaScalingFit,
) -> LaStatus {
    guard(|| {
        non_null(out, "out")?;
        let pts: Vec<(f64, f64)> = if n == 0 {
            Vec::new()
        } else {
            non_null(x, "x")?;
            non_null(y, "y")?;
            let xs = std::slice::from_raw_parts(x, n);
            let ys = std::slice::from_raw_parts(y, n);
            xs.iter().copied().zip(ys.iter().copied()).collect()
        };
        *out = fit_power_law(&pts).or_status()?.into();
        Ok(())
    })
}

/// Sweeps `n_list` sizes at the template's `(p, λ)` with `replicates`
/// sessions each, seeding from the template's `rng_seed`.
///
/// # Safety
/// `config` must be valid, `n_list` valid for `n_len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_sweep_exponents(
    config: *const LaSimConfig,
    n_list: *const usize,
    n_len: usize,
    replicates: usize,
    out: *mut LaExponentSet,
) -> LaStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let sizes = if n_len == 0 {
            &[][..]
        } else {
            non_null(n_list, "n_list")?;
            std::slice::from_raw_parts(n_list, n_len)
        };
        let mut template = *config;
        template.n_walkers = template.n_walkers.max(1);
        let cfg = template.to_config().or_status()?;
        *out = sweep_exponents(&cfg, sizes, replicates).or_status()?.exponents.into();
        Ok(())
    })
}

/// Loads a response surface JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_surface_load(
    path: *const c_char,
    out: *mut *mut LaSurface,
) -> LaStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| fail(LaStatus::Io, format!("cannot read {}: {e}", path.display())))?;
        let surface = ResponseSurface::from_json(&text).or_status()?;
        *out = Box::into_raw(Box::new(LaSurface { surface }));
        Ok(())
    })
}

/// # Safety
/// `surface` must be null or a handle from `la_surface_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn la_surface_free(surface: *mut LaSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Grid dimensions.
///
/// # Safety
/// `surface` must be a live handle; `n_p` and `n_lambda` writable.
#[no_mangle]
pub unsafe extern "C" fn la_surface_dims(
    surface: *const LaSurface,
    n_p: *mut usize,
    n_lambda: *mut usize,
) -> LaStatus {
    guard(|| {
        non_null(surface, "surface")?;
        non_null(n_p, "n_p")?;
        non_null(n_lambda, "n_lambda")?;
        let s = &(*surface).surface;
        *n_p = s.p_grid.len();
        *n_lambda = s.lambda_grid.len();
        Ok(())
    })
}

/// Nearest grid cell to the observed `(α, β, θ)`.
///
/// # Safety
/// `surface` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn la_surface_infer(
    surface: *const LaSurface,
    alpha: f64,
    beta: f64,
    theta: f64,
    out: *mut LaInferred,
) -> LaStatus {
    guard(|| {
        non_null(surface, "surface")?;
        non_null(out, "out")?;
        let obs = ObservedExponents::new(alpha, beta, theta).or_status()?;
        let got = infer(&obs, &(*surface).surface).or_status()?;
        *out = LaInferred {
            p_hat: got.p_hat,
            lambda_hat: got.lambda_hat,
            distance: got.distance,
            gamma_model: got.gamma_model,
            p_index: got.cell_index.0,
            lambda_index: got.cell_index.1,
        };
        Ok(())
    })
}
