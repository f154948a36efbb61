#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! C ABI over `fermiscale`.
//!
//! Objects cross the boundary as opaque pointers created by `fs_*_new` style
//! constructors and released with the matching `fs_*_free`. Every function
//! returns an [`FsStatus`]; on failure a message is kept per thread and can be
//! copied out with [`fs_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fermiscale::harness::{fit_rate, run_experiment, ExperimentConfig, FitModel, RunFlags};
use fermiscale::lattice::Grid;
use fermiscale::nbody::{kk_identity_residual, resolvent_difference_norm, FermionicHamiltonian, RelativeOddSector};
use fermiscale::oddsector::odd_norm;
use fermiscale::potentials::{compute_cv, PotentialSpec};
use fermiscale::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    NonConvergence = 4,
    Indefinite = 5,
    Config = 6,
    Io = 7,
    InsufficientData = 8,
    MemoryCap = 9,
    CheckFailed = 10,
    Panic = 98,
    Other = 99,
}

impl From<&Error> for FsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument { .. }
            | Error::NonPositiveShift(_)
            | Error::InvalidSchedule { .. }
            | Error::SingularPoint
            | Error::TableParse { .. } => FsStatus::InvalidArgument,
            Error::InvalidGrid(_) | Error::ReflectionIncompatible { .. } => FsStatus::InvalidGrid,
            Error::NonConvergence { .. } | Error::LanczosBreakdown { .. } | Error::Integrability { .. } => {
                FsStatus::NonConvergence
            }
            Error::Indefinite { .. } => FsStatus::Indefinite,
            Error::Config { .. } | Error::ConfigField { .. } => FsStatus::Config,
            Error::Io(_) | Error::Json(_) => FsStatus::Io,
            Error::InsufficientData { .. } => FsStatus::InsufficientData,
            Error::MemoryCap { .. } => FsStatus::MemoryCap,
            _ => FsStatus::Other,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), FsStatus>) -> FsStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FsStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            FsStatus::Panic
        }
    }
}

fn fail(e: Error) -> FsStatus {
    let s = FsStatus::from(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> FsStatus {
    set_error(format!("null pointer: {what}"));
    FsStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, FsStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), FsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, FsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FsStatus::InvalidArgument
    })
}

/// Copies the calling thread's last error message (NUL-terminated, truncated to `len`).
/// Returns the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Opaque pair potential.
pub struct FsPotential(PotentialSpec);

/// Opaque periodic grid.
pub struct FsGrid(Grid);

/// Opaque experiment configuration.
pub struct FsConfig(ExperimentConfig);

/// `amplitude · exp(−r²/width²)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_potential_gaussian(amplitude: f64, width: f64, out: *mut *mut FsPotential) -> FsStatus {
    guard(|| {
        let spec = PotentialSpec::gaussian(amplitude, width).map_err(fail)?;
        write(out, Box::into_raw(Box::new(FsPotential(spec))), "out")
    })
}

/// `2/r − 1` inside the unit ball.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_potential_coulombic_cutoff(out: *mut *mut FsPotential) -> FsStatus {
    guard(|| {
        write(
            out,
            Box::into_raw(Box::new(FsPotential(PotentialSpec::coulombic_cutoff()))),
            "out",
        )
    })
}

/// `sup_r V₊(r) r²`.
///
/// # Safety
/// `pot` must come from an `fs_potential_*` constructor; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_potential_cv(pot: *const FsPotential, out: *mut f64) -> FsStatus {
    guard(|| {
        let p = deref(pot, "pot")?;
        write(out, compute_cv(&p.0).map_err(fail)?, "out")
    })
}

/// # Safety
/// `pot` must be null or come from an `fs_potential_*` constructor, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_potential_free(pot: *mut FsPotential) {
    if !pot.is_null() {
        drop(Box::from_raw(pot));
    }
}

/// Grid of `m` blocks in `d` dimensions on `[−L, L)` with `n` nodes per axis.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_grid_new(
    d: usize,
    m: usize,
    half_length: f64,
    points_per_axis: usize,
    offset: f64,
    out: *mut *mut FsGrid,
) -> FsStatus {
    guard(|| {
        let g = Grid::new(d, m, half_length, points_per_axis, offset).map_err(fail)?;
        write(out, Box::into_raw(Box::new(FsGrid(g))), "out")
    })
}

/// Total node count.
///
/// # Safety
/// `grid` must come from [`fs_grid_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_grid_len(grid: *const FsGrid, out: *mut usize) -> FsStatus {
    guard(|| write(out, deref(grid, "grid")?.0.len(), "out"))
}

/// # Safety
/// `grid` must be null or come from [`fs_grid_new`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_grid_free(grid: *mut FsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// `‖v_ε (−Δ + z)^{-1}‖` on the odd sector of a relative grid.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_odd_norm(
    pot: *const FsPotential,
    grid: *const FsGrid,
    eps: f64,
    z: f64,
    tol: f64,
    out: *mut f64,
) -> FsStatus {
    guard(|| {
        let (p, g) = (deref(pot, "pot")?, deref(grid, "grid")?);
        let est = odd_norm(&p.0, eps, z, &g.0, tol).map_err(fail)?;
        write(out, est.value, "out")
    })
}

/// Two-particle `‖(H + z)^{-1} − (H₀ + z)^{-1}‖` on the relative odd sector.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_pair_resolvent_difference(
    pot: *const FsPotential,
    grid: *const FsGrid,
    eps: f64,
    lambda: f64,
    z: f64,
    tol: f64,
    out: *mut f64,
) -> FsStatus {
    guard(|| {
        let (p, g) = (deref(pot, "pot")?, deref(grid, "grid")?);
        let sector = RelativeOddSector::new(&g.0, &p.0, eps, lambda).map_err(fail)?;
        let r = resolvent_difference_norm(&sector, z, tol).map_err(fail)?;
        write(out, r.norm, "out")
    })
}

/// Relative residual of the factorized resolvent identity on the antisymmetric
/// subspace of an `N`-block grid (dense; keep grids small).
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_kk_residual(
    pot: *const FsPotential,
    grid: *const FsGrid,
    eps: f64,
    lambda: f64,
    z: f64,
    out: *mut f64,
) -> FsStatus {
    guard(|| {
        let (p, g) = (deref(pot, "pot")?, deref(grid, "grid")?);
        let h = FermionicHamiltonian::new(&g.0, &p.0, eps, lambda).map_err(fail)?;
        write(out, kk_identity_residual(&h, z).map_err(fail)?.residual, "out")
    })
}

/// Log–log fit; `power_log != 0` selects `C ε^p |log ε|`.
///
/// # Safety
/// `eps` and `values` must point to `len` readable doubles; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_fit_rate(
    eps: *const f64,
    values: *const f64,
    len: usize,
    power_log: i32,
    seed: u64,
    exponent: *mut f64,
    prefactor: *mut f64,
    half_width: *mut f64,
) -> FsStatus {
    guard(|| {
        if eps.is_null() || values.is_null() {
            return Err(null("eps/values"));
        }
        let (e, v) = (
            std::slice::from_raw_parts(eps, len),
            std::slice::from_raw_parts(values, len),
        );
        let model = if power_log != 0 {
            FitModel::PowerLog
        } else {
            FitModel::Power
        };
        let f = fit_rate(e, v, model, seed).map_err(fail)?;
        write(exponent, f.exponent, "exponent")?;
        write(prefactor, f.prefactor, "prefactor")?;
        write(half_width, f.half_width, "half_width")
    })
}

/// Parses an experiment file's text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_config_parse(text: *const c_char, out: *mut *mut FsConfig) -> FsStatus {
    guard(|| {
        let cfg = ExperimentConfig::parse(self::text(text, "text")?).map_err(fail)?;
        write(out, Box::into_raw(Box::new(FsConfig(cfg))), "out")
    })
}

/// # Safety
/// `cfg` must be null or come from [`fs_config_parse`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_config_free(cfg: *mut FsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the experiment and writes artifacts under `out_dir/<label>`.
/// Returns `CheckFailed` when all artifacts were written but the experiment's check failed.
///
/// # Safety
/// `cfg` must be live and `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn fs_run_experiment(
    cfg: *const FsConfig,
    out_dir: *const c_char,
    workers: usize,
    seed: u64,
) -> FsStatus {
    guard(|| {
        let c = deref(cfg, "cfg")?;
        let flags = RunFlags {
            workers,
            seed,
            out: PathBuf::from(text(out_dir, "out_dir")?),
            config_path: None,
        };
        let s = run_experiment(&c.0, &flags).map_err(fail)?;
        if s.pass == Some(false) {
            set_error(format!("{} check failed", s.kind));
            return Err(FsStatus::CheckFailed);
        }
        Ok(())
    })
}
