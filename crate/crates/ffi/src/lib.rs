//! C ABI over the workbench: opaque grid, config and report handles,
//! integer status codes and a per-thread last-error message.
//!
//! Every entry point catches panics and reports them as `BSQ_PANIC`.
//! Handles returned through out-pointers are owned by the caller and must
//! be released with the matching `*_free` function.

use boussinesq::bench::{
    check_checkpoint, parse_config, run_duality, run_scenario, run_semigroup, run_study,
    ScenarioConfig, SolveReport,
};
use boussinesq::leray::Projector;
use boussinesq::mesh::divergence;
use boussinesq::{Error, Grid, VectorField};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

pub const BSQ_OK: i32 = 0;
pub const BSQ_NULL_POINTER: i32 = 1;
pub const BSQ_GRID_TOO_SMALL: i32 = 2;
pub const BSQ_INVALID_PARAMETER: i32 = 3;
pub const BSQ_SHAPE_MISMATCH: i32 = 4;
pub const BSQ_INCOMPATIBLE: i32 = 5;
pub const BSQ_NOT_SOLENOIDAL: i32 = 6;
pub const BSQ_SINGULAR: i32 = 7;
pub const BSQ_CFL: i32 = 8;
pub const BSQ_TOO_LARGE: i32 = 9;
pub const BSQ_NOT_ANALYTIC: i32 = 10;
pub const BSQ_METHOD: i32 = 11;
pub const BSQ_CONFIG: i32 = 12;
pub const BSQ_CHECKPOINT: i32 = 13;
pub const BSQ_IO: i32 = 14;
pub const BSQ_INCONSISTENT: i32 = 15;
pub const BSQ_INVALID_UTF8: i32 = 16;
pub const BSQ_OUT_OF_RANGE: i32 = 17;
pub const BSQ_PANIC: i32 = 99;

/// Uniform staggered grid.
pub struct BsqGrid {
    grid: Grid,
    projector: Option<Projector>,
}

/// Parsed scenario configuration.
pub struct BsqConfig(ScenarioConfig);

/// Result of a run: named checks, norms and timings.
pub struct BsqReport(SolveReport);

/// Which command [`bsq_run`] executes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsqCommand {
    Scenario = 0,
    Study = 1,
    Duality = 2,
    Semigroup = 3,
}

/// One check of a report. `name` is owned by the caller; release it with
/// [`bsq_string_free`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct BsqCheck {
    pub name: *const c_char,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(e.code(), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BSQ_NULL_POINTER, format!("{what} is null"))
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BSQ_OK
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            BSQ_PANIC
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(BSQ_INVALID_UTF8, format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn bsq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bsq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bsq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates an `nx x ny` grid on `[0, lx] x [0, ly]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bsq_grid_new(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    out: *mut *mut BsqGrid,
) -> i32 {
    guard(|| {
        let slot = self::out(out, "out")?;
        let grid = Grid::new(nx, ny, lx, ly)?;
        *slot = Box::into_raw(Box::new(BsqGrid {
            grid,
            projector: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from [`bsq_grid_new`] and not have been freed, or be null.
#[no_mangle]
pub unsafe extern "C" fn bsq_grid_free(grid: *mut BsqGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Lengths of the x-velocity (`(nx + 1) ny`) and y-velocity
/// (`nx (ny + 1)`) arrays.
///
/// # Safety
/// `grid`, `n_u` and `n_v` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bsq_grid_velocity_len(
    grid: *const BsqGrid,
    n_u: *mut usize,
    n_v: *mut usize,
) -> i32 {
    guard(|| {
        let g = &handle(grid, "grid")?.grid;
        *out(n_u, "n_u")? = g.n_u();
        *out(n_v, "n_v")? = g.n_v();
        Ok(())
    })
}

unsafe fn velocity(
    g: &Grid,
    u: *mut f64,
    n_u: usize,
    v: *mut f64,
    n_v: usize,
) -> Result<VectorField, Fail> {
    if u.is_null() || v.is_null() {
        return Err(null("velocity array"));
    }
    if n_u != g.n_u() || n_v != g.n_v() {
        return Err(Fail(
            BSQ_SHAPE_MISMATCH,
            format!(
                "expected {} and {} entries, got {n_u} and {n_v}",
                g.n_u(),
                g.n_v()
            ),
        ));
    }
    let mut w = VectorField::zeros(g);
    w.u.copy_from_slice(std::slice::from_raw_parts(u, n_u));
    w.v.copy_from_slice(std::slice::from_raw_parts(v, n_v));
    Ok(w)
}

/// Replaces the staggered velocity `(u, v)` by its divergence-free part
/// (wall-normal entries are treated as zero). Arrays are row-major with
/// the x index fastest.
///
/// # Safety
/// `grid` must be valid; `u` and `v` must point to `n_u` and `n_v`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bsq_grid_project(
    grid: *mut BsqGrid,
    u: *mut f64,
    n_u: usize,
    v: *mut f64,
    n_v: usize,
) -> i32 {
    guard(|| {
        let h = grid.as_mut().ok_or_else(|| null("grid"))?;
        let mut w = velocity(&h.grid, u, n_u, v, n_v)?;
        w.clear_normal_trace();
        if h.projector.is_none() {
            h.projector = Some(Projector::new(&h.grid)?);
        }
        let p = h.projector.as_ref().expect("set above").project(&w)?;
        std::slice::from_raw_parts_mut(u, n_u).copy_from_slice(&p.u);
        std::slice::from_raw_parts_mut(v, n_v).copy_from_slice(&p.v);
        Ok(())
    })
}

/// Largest absolute cell divergence of `(u, v)`.
///
/// # Safety
/// As for [`bsq_grid_project`]; the arrays are only read. `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsq_grid_max_divergence(
    grid: *const BsqGrid,
    u: *const f64,
    n_u: usize,
    v: *const f64,
    n_v: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let g = &handle(grid, "grid")?.grid;
        let w = velocity(g, u.cast_mut(), n_u, v.cast_mut(), n_v)?;
        *self::out(out, "out")? = divergence(g, &w).max_abs();
        Ok(())
    })
}

/// Parses a scenario file held in `text`. Parse errors return
/// `BSQ_CONFIG` with the line number in the message.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bsq_config_parse(text: *const c_char, out: *mut *mut BsqConfig) -> i32 {
    guard(|| {
        let slot = self::out(out, "out")?;
        let cfg = parse_config(self::text(text, "text")?)?;
        *slot = Box::into_raw(Box::new(BsqConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`bsq_config_parse`] and not have been freed, or be null.
#[no_mangle]
pub unsafe extern "C" fn bsq_config_free(cfg: *mut BsqConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Overrides the output directory.
///
/// # Safety
/// `cfg` must be valid and `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bsq_config_set_output(cfg: *mut BsqConfig, dir: *const c_char) -> i32 {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("config"))?;
        let d = text(dir, "dir")?;
        if d.is_empty() {
            return Err(Fail(
                BSQ_INVALID_PARAMETER,
                "output directory must not be empty".into(),
            ));
        }
        c.0.output = PathBuf::from(d);
        Ok(())
    })
}

/// Runs `command` on `cfg`, writing its files into the output directory.
/// A run whose checks fail still returns `BSQ_OK`; query
/// [`bsq_report_passed`].
///
/// # Safety
/// `cfg` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bsq_run(
    cfg: *const BsqConfig,
    command: BsqCommand,
    out: *mut *mut BsqReport,
) -> i32 {
    guard(|| {
        let slot = self::out(out, "out")?;
        let c = &handle(cfg, "config")?.0;
        let rep = match command {
            BsqCommand::Scenario => run_scenario(c)?,
            BsqCommand::Study => {
                let r = run_study(c, None)?;
                r.write("study.json")?;
                r
            }
            BsqCommand::Duality => {
                let r = run_duality(c)?;
                r.write("duality.json")?;
                r
            }
            BsqCommand::Semigroup => {
                let r = run_semigroup(c)?;
                r.write("semigroup.json")?;
                r
            }
        };
        *slot = Box::into_raw(Box::new(BsqReport(rep)));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`bsq_run`] and not have been freed, or be null.
#[no_mangle]
pub unsafe extern "C" fn bsq_report_free(report: *mut BsqReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bsq_report_passed(report: *const BsqReport, out: *mut bool) -> i32 {
    guard(|| {
        *self::out(out, "out")? = handle(report, "report")?.0.passed();
        Ok(())
    })
}

/// # Safety
/// `report` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bsq_report_check_count(report: *const BsqReport, out: *mut usize) -> i32 {
    guard(|| {
        *self::out(out, "out")? = handle(report, "report")?.0.checks.len();
        Ok(())
    })
}

/// Check `index` of the report. The name is written as a fresh string
/// that the caller releases with [`bsq_string_free`].
///
/// # Safety
/// `report` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bsq_report_check(
    report: *const BsqReport,
    index: usize,
    out: *mut BsqCheck,
) -> i32 {
    guard(|| {
        let checks = &handle(report, "report")?.0.checks;
        let c = checks.get(index).ok_or_else(|| {
            Fail(
                BSQ_OUT_OF_RANGE,
                format!("check {index} of {}", checks.len()),
            )
        })?;
        let name = CString::new(c.name.as_str()).unwrap_or_default().into_raw();
        *self::out(out, "out")? = BsqCheck {
            name,
            passed: c.passed,
            value: c.value,
            tolerance: c.tolerance,
        };
        Ok(())
    })
}

/// Value of norm `key`; `BSQ_OUT_OF_RANGE` when the report has none.
///
/// # Safety
/// `report` and `out` must be valid and `key` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bsq_report_norm(
    report: *const BsqReport,
    key: *const c_char,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let norms = &handle(report, "report")?.0.norms;
        let k = text(key, "key")?;
        let v = norms
            .get(k)
            .ok_or_else(|| Fail(BSQ_OUT_OF_RANGE, format!("no norm named '{k}'")))?;
        *self::out(out, "out")? = *v;
        Ok(())
    })
}

/// The report as JSON; release with [`bsq_string_free`].
///
/// # Safety
/// `report` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bsq_report_json(report: *const BsqReport, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let json = handle(report, "report")?.0.to_json();
        *self::out(out, "out")? = CString::new(json).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// Validates a trajectory checkpoint: finite values and relative
/// divergence at most `divergence_tol` on every level.
///
/// # Safety
/// `path` must be NUL-terminated and `passed` valid.
#[no_mangle]
pub unsafe extern "C" fn bsq_check_checkpoint(
    path: *const c_char,
    divergence_tol: f64,
    passed: *mut bool,
) -> i32 {
    guard(|| {
        let slot = out(passed, "passed")?;
        let checks = check_checkpoint(std::path::Path::new(text(path, "path")?), divergence_tol)?;
        *slot = checks.iter().all(|c| c.passed);
        Ok(())
    })
}
