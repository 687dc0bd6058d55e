//! C ABI over the `diffagg` crate.
//!
//! Every function returns a [`DiffaggStatus`]; results travel through out
//! pointers. Objects are opaque handles created by `*_new`/`*_preset`/
//! `*_solve` and released by the matching `*_free`. After a non-OK status,
//! `diffagg_last_error_message` describes the failure on the calling thread.

// `!(x > 0.0)` is the NaN-rejecting form used in every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use diffagg::experiments::{diffusion_from_eta, initial_grid_density, padded_domain};
use diffagg::macro_solver::{solve, MacroConfig, MacroRun};
use diffagg::particle::min_particle_count;
use diffagg::rng::{replica_rng, Stream};
use diffagg::runner::{error_exit_code, run_file, RunOptions};
use diffagg::sampling::{barenblatt_cdf, barenblatt_inv_cdf, barenblatt_pdf};
use diffagg::{BarenblattComponent, Error, Grid, InitialDensity, KernelSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffaggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    Domain = 3,
    StepSize = 4,
    Parse = 5,
    Io = 6,
    /// The macro solver stopped early; the run handle is still returned.
    BlowUp = 7,
    BufferTooSmall = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

/// Mixture of Barenblatt profiles.
pub struct DiffaggDensity {
    inner: InitialDensity,
}

/// Finished (or blown-up) grid solver run.
pub struct DiffaggMacroRun {
    inner: MacroRun,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> DiffaggStatus {
    match err {
        Error::Config(_) => DiffaggStatus::InvalidConfig,
        Error::Domain(_) => DiffaggStatus::Domain,
        Error::StepSize { .. } => DiffaggStatus::StepSize,
        Error::Parse { .. } => DiffaggStatus::Parse,
        Error::Io(_) => DiffaggStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Status(DiffaggStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(
        DiffaggStatus::NullPointer,
        "required pointer argument is null".into(),
    )
}

fn guard(f: impl FnOnce() -> Result<DiffaggStatus, Failure>) -> DiffaggStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(&msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic");
            DiffaggStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::Status(DiffaggStatus::InvalidUtf8, "string is not UTF-8".into()))
}

/// Message for the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn diffagg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `V_eps(x)` of the Gaussian kernel with weight `b` in one dimension.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn diffagg_kernel_value(
    b: f64,
    eps: f64,
    x: f64,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        let k = KernelSpec::one_d(b, eps)?;
        write_out(out, k.value(x))?;
        Ok(DiffaggStatus::Ok)
    })
}

/// `V_eps'(x)`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn diffagg_kernel_grad(
    b: f64,
    eps: f64,
    x: f64,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        let k = KernelSpec::one_d(b, eps)?;
        write_out(out, k.grad(x))?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Unit-mass Barenblatt profile at time `t`, centred at `x0`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn diffagg_barenblatt_pdf(
    x: f64,
    t: f64,
    x0: f64,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        write_out(out, barenblatt_pdf(x, t, x0)?)?;
        Ok(DiffaggStatus::Ok)
    })
}

/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn diffagg_barenblatt_cdf(z: f64, t: f64, out: *mut f64) -> DiffaggStatus {
    guard(|| {
        if !(t > 0.0) {
            return Err(Failure::Status(
                DiffaggStatus::InvalidConfig,
                format!("T must be positive, got {t}"),
            ));
        }
        write_out(out, barenblatt_cdf(z, t))?;
        Ok(DiffaggStatus::Ok)
    })
}

/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn diffagg_barenblatt_inv_cdf(
    v: f64,
    t: f64,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        write_out(out, barenblatt_inv_cdf(v, t)?)?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Smallest particle count whose mean-field bound is below `threshold`.
///
/// # Safety
/// `out` must be valid for a write of one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn diffagg_min_particle_count(
    eps: f64,
    t: f64,
    b: f64,
    threshold: f64,
    out: *mut usize,
) -> DiffaggStatus {
    guard(|| {
        let k = KernelSpec::one_d(b, eps)?;
        write_out(out, min_particle_count(eps, t, &k, threshold)?)?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Built-in initial density `"initial1"` or `"initial2"`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_density_preset(
    name: *const c_char,
    out: *mut *mut DiffaggDensity,
) -> DiffaggStatus {
    guard(|| {
        let name = read_str(name)?;
        let inner = InitialDensity::preset(name).ok_or_else(|| {
            Failure::Status(
                DiffaggStatus::InvalidConfig,
                format!("unknown preset `{name}`"),
            )
        })?;
        write_out(out, Box::into_raw(Box::new(DiffaggDensity { inner })))?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Mixture of `n` components given as parallel arrays.
///
/// # Safety
/// Each array must hold `n` readable doubles; `out` valid for one pointer
/// write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_density_new(
    alpha: *const f64,
    beta: *const f64,
    t: *const f64,
    x0: *const f64,
    n: usize,
    out: *mut *mut DiffaggDensity,
) -> DiffaggStatus {
    guard(|| {
        if n > 0 && (alpha.is_null() || beta.is_null() || t.is_null() || x0.is_null()) {
            return Err(null());
        }
        let comps = (0..n)
            .map(|i| BarenblattComponent::new(*alpha.add(i), *beta.add(i), *t.add(i), *x0.add(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let inner = InitialDensity::new(comps)?;
        write_out(out, Box::into_raw(Box::new(DiffaggDensity { inner })))?;
        Ok(DiffaggStatus::Ok)
    })
}

/// # Safety
/// `density` must come from this library and not be freed already; NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn diffagg_density_free(density: *mut DiffaggDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

unsafe fn density_ref<'a>(d: *const DiffaggDensity) -> Result<&'a InitialDensity, Failure> {
    d.as_ref().map(|d| &d.inner).ok_or_else(null)
}

/// # Safety
/// `density` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_density_pdf(
    density: *const DiffaggDensity,
    x: f64,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        write_out(out, density_ref(density)?.pdf(x))?;
        Ok(DiffaggStatus::Ok)
    })
}

/// # Safety
/// `density` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_density_cdf(
    density: *const DiffaggDensity,
    x: f64,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        write_out(out, density_ref(density)?.cdf(x))?;
        Ok(DiffaggStatus::Ok)
    })
}

/// `||u0||_inf`.
///
/// # Safety
/// `density` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_density_sup_norm(
    density: *const DiffaggDensity,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        write_out(out, density_ref(density)?.sup_norm())?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Fills `out[0..count]` with draws; the same seed gives the same draws as
/// the initial positions of replica 0 in a particle run.
///
/// # Safety
/// `density` must be a live handle; `out` must hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn diffagg_density_sample(
    density: *const DiffaggDensity,
    seed: u64,
    out: *mut f64,
    count: usize,
) -> DiffaggStatus {
    guard(|| {
        let d = density_ref(density)?;
        if out.is_null() && count > 0 {
            return Err(null());
        }
        let mut rng = replica_rng(seed, 0, Stream::Initial);
        for i in 0..count {
            *out.add(i) = d.sample_one(&mut rng);
        }
        Ok(DiffaggStatus::Ok)
    })
}

/// Runs the grid solver from `density` with `a = 2 b ||u0||_inf eta` on
/// cells of width `dx` covering the padded support. Returns `BlowUp` with a
/// valid handle when the run stopped early.
///
/// # Safety
/// `density` must be a live handle; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_macro_solve(
    density: *const DiffaggDensity,
    eta: f64,
    b: f64,
    horizon: f64,
    dx: f64,
    safety: f64,
    out: *mut *mut DiffaggMacroRun,
) -> DiffaggStatus {
    guard(|| {
        let d = density_ref(density)?;
        if out.is_null() {
            return Err(null());
        }
        if !(dx > 0.0) {
            return Err(Failure::Status(
                DiffaggStatus::InvalidConfig,
                format!("dx must be positive, got {dx}"),
            ));
        }
        let a = diffusion_from_eta(d, b, eta);
        let align = dx * (1.0 / dx).ceil().max(1.0);
        let (lo, hi) = padded_domain(d, a, horizon, align);
        let grid = Grid::covering(lo, hi, dx)?;
        let mut cfg = MacroConfig::new(a, b, horizon);
        cfg.safety = safety;
        let run = solve(&initial_grid_density(d, grid), &cfg)?;
        let status = if run.blew_up() {
            DiffaggStatus::BlowUp
        } else {
            DiffaggStatus::Ok
        };
        if status == DiffaggStatus::BlowUp {
            set_last_error("blow-up detected");
        }
        write_out(out, Box::into_raw(Box::new(DiffaggMacroRun { inner: run })))?;
        Ok(status)
    })
}

/// # Safety
/// `run` must come from this library and not be freed already; NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn diffagg_macro_run_free(run: *mut DiffaggMacroRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

unsafe fn run_ref<'a>(r: *const DiffaggMacroRun) -> Result<&'a MacroRun, Failure> {
    r.as_ref().map(|r| &r.inner).ok_or_else(null)
}

/// Grid of the final state: left edge, cell width and cell count.
///
/// # Safety
/// `run` must be a live handle; out pointers valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn diffagg_macro_run_grid(
    run: *const DiffaggMacroRun,
    x_min: *mut f64,
    dx: *mut f64,
    cells: *mut usize,
) -> DiffaggStatus {
    guard(|| {
        let g = run_ref(run)?.final_state.grid;
        write_out(x_min, g.x_min())?;
        write_out(dx, g.dx())?;
        write_out(cells, g.n_cells())?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Copies the final cell averages into `buf`; `len` must be at least the
/// cell count.
///
/// # Safety
/// `run` must be a live handle; `buf` must hold `len` doubles; `time` valid
/// for one write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_macro_run_final_state(
    run: *const DiffaggMacroRun,
    buf: *mut f64,
    len: usize,
    time: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        let state = &run_ref(run)?.final_state;
        if buf.is_null() {
            return Err(null());
        }
        if len < state.values.len() {
            return Err(Failure::Status(
                DiffaggStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", state.values.len()),
            ));
        }
        std::ptr::copy_nonoverlapping(state.values.as_ptr(), buf, state.values.len());
        write_out(time, state.time)?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Largest cell value seen over the run.
///
/// # Safety
/// `run` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_macro_run_running_sup(
    run: *const DiffaggMacroRun,
    out: *mut f64,
) -> DiffaggStatus {
    guard(|| {
        write_out(out, run_ref(run)?.running_sup)?;
        Ok(DiffaggStatus::Ok)
    })
}

/// Runs a scenario file like `diffagg run`. `output` may be NULL to keep the
/// file's `output` key. `exit_code` receives the command-line exit code.
///
/// # Safety
/// `path` and a non-NULL `output` must be NUL-terminated strings;
/// `exit_code` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn diffagg_run_scenario(
    path: *const c_char,
    output: *const c_char,
    workers: usize,
    exit_code: *mut i32,
) -> DiffaggStatus {
    guard(|| {
        if exit_code.is_null() {
            return Err(null());
        }
        let path = PathBuf::from(read_str(path)?);
        let output = if output.is_null() {
            None
        } else {
            Some(PathBuf::from(read_str(output)?))
        };
        let options = RunOptions {
            output,
            seed: None,
            workers,
        };
        match run_file(&path, &options) {
            Ok(summary) => {
                *exit_code = summary.exit_code();
                if summary.blowup.is_some() {
                    set_last_error("blow-up detected");
                    return Ok(DiffaggStatus::BlowUp);
                }
                Ok(DiffaggStatus::Ok)
            }
            Err(e) => {
                *exit_code = error_exit_code(&e);
                Err(e.into())
            }
        }
    })
}
