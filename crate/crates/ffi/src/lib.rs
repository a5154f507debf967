//! C ABI over the `nordheim` library.
//!
//! Every function returns an [`NhStatus`]; results go through out-pointers.
//! On failure the thread-local message from [`nh_last_error`] describes the
//! cause. Panics never cross the boundary: they are caught and reported as
//! [`NhStatus::Panic`]. Handles are opaque and owned by the caller, who
//! releases them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use nordheim::diagnostics::bec_constants;
use nordheim::equilibrium::{equilibrium_entropy, equilibrium_measure, solve_equilibrium};
use nordheim::kernel::{w, PhiModel, Quadrature};
use nordheim::measure::{make_two_bump_condensing, Grid, IsotropicMeasure};
use nordheim::solver::{rhs, run, CollisionTable, JRule, RunDiagnostics, SolverConfig, TableSpec};
use nordheim::Error;

/// Result codes. `Ok` is zero; everything else sets the last error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument outside the mathematical domain.
    Domain = 2,
    Config = 3,
    Numeric = 4,
    Consistency = 5,
    Parse = 6,
    Stiff = 7,
    Io = 8,
    /// Output buffer shorter than required; the needed length is reported.
    BufferTooSmall = 9,
    Panic = 10,
}

/// Integration rule of the collision table's quadratic term.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhJRule {
    Lumped = 0,
    Exact = 1,
}

/// Energy grid `0 = x_0 < ... < x_n`.
pub struct NhGrid(Arc<Grid>);

/// Node masses on a grid; node 0 is the condensate.
pub struct NhMeasure(IsotropicMeasure);

/// Collision kernel with its quadrature.
pub struct NhModel {
    model: PhiModel,
    quad: Arc<Quadrature>,
}

/// Precomputed collision weights for one model and grid.
pub struct NhTable(CollisionTable);

/// Continuum equilibrium with given mass and energy.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NhEquilibrium {
    pub temp_ratio: f64,
    pub a_coef: f64,
    pub kappa: f64,
    pub n0: f64,
    pub entropy: f64,
}

/// Condensation constants for the eta model.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NhBecConstants {
    pub alpha: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub c_star: f64,
    pub eps_admissible_max: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    // interior NULs cannot appear in a C string
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(NhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) => NhStatus::Domain,
            Error::Numeric(_) => NhStatus::Numeric,
            Error::Config(_) => NhStatus::Config,
            Error::Consistency(_) => NhStatus::Consistency,
            Error::Parse { .. } => NhStatus::Parse,
            Error::Stiff { .. } => NhStatus::Stiff,
            Error::Io { .. } => NhStatus::Io,
        };
        Fail(code, e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(NhStatus::NullPointer, format!("{name} is NULL"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NhStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NhStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut T, v: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(v)));
    Ok(())
}

/// Copies `src` into `(buf, len)`; `needed` receives `src.len()` either way.
unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize, needed: *mut usize) -> Result<(), Fail> {
    if !needed.is_null() {
        needed.write(src.len());
    }
    if len < src.len() {
        return Err(Fail(NhStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Clears this thread's last error.
#[no_mangle]
pub extern "C" fn nh_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nh_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Uniform grid with `n` cells on `[0, x_max]`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_grid_linear(n: usize, x_max: f64, out: *mut *mut NhGrid) -> NhStatus {
    guard(|| put_box(out, NhGrid(Arc::new(Grid::linear(n, x_max)?))))
}

/// Grid whose cell widths grow by `ratio`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_grid_geometric(n: usize, x_max: f64, ratio: f64, out: *mut *mut NhGrid) -> NhStatus {
    guard(|| put_box(out, NhGrid(Arc::new(Grid::geometric(n, x_max, ratio)?))))
}

/// Number of nodes, `n + 1`.
///
/// # Safety
/// `grid` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_grid_len(grid: *const NhGrid, out: *mut usize) -> NhStatus {
    guard(|| put(out, get(grid, "grid")?.0.len(), "out"))
}

/// Copies the node energies into `buf`.
///
/// # Safety
/// `grid` must be a live handle; `buf` valid for `len` writes; `needed` NULL
/// or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_grid_nodes(grid: *const NhGrid, buf: *mut f64, len: usize, needed: *mut usize) -> NhStatus {
    guard(|| copy_out(get(grid, "grid")?.0.nodes(), buf, len, needed))
}

/// # Safety
/// `grid` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nh_grid_free(grid: *mut NhGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Measure with the given node masses, one per grid node.
///
/// # Safety
/// `grid` must be a live handle, `masses` valid for `len` reads, `out` valid
/// for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_measure_new(
    grid: *const NhGrid,
    masses: *const f64,
    len: usize,
    out: *mut *mut NhMeasure,
) -> NhStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        if masses.is_null() {
            return Err(null("masses"));
        }
        let m = std::slice::from_raw_parts(masses, len).to_vec();
        put_box(out, NhMeasure(IsotropicMeasure::new(g.0.clone(), m)?))
    })
}

/// Equilibrium with mass `n` and energy `e` projected onto the grid.
///
/// # Safety
/// `grid` must be a live handle, `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_measure_equilibrium(grid: *const NhGrid, n: f64, e: f64, out: *mut *mut NhMeasure) -> NhStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        let st = solve_equilibrium(n, e)?;
        put_box(out, NhMeasure(equilibrium_measure(&st, &g.0)?))
    })
}

/// Two-plateau low temperature data; `eps <= 0` uses the admissible scale.
///
/// # Safety
/// `grid` must be a live handle, `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_measure_two_bump(
    grid: *const NhGrid,
    n: f64,
    e: f64,
    b0: f64,
    eta: f64,
    eps: f64,
    out: *mut *mut NhMeasure,
) -> NhStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        let tb = make_two_bump_condensing(n, e, b0, eta, &g.0, (eps > 0.0).then_some(eps))?;
        put_box(out, NhMeasure(tb.measure))
    })
}

/// Mass, energy, entropy of the regular part and condensate mass.
///
/// # Safety
/// `m` must be a live handle; each out-pointer NULL or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_measure_moments(
    m: *const NhMeasure,
    mass: *mut f64,
    energy: *mut f64,
    entropy: *mut f64,
    condensate: *mut f64,
) -> NhStatus {
    guard(|| {
        let f = &get(m, "measure")?.0;
        for (p, v) in [(mass, f.mass()), (energy, f.energy()), (entropy, f.entropy()), (condensate, f.condensate())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Copies the node masses into `buf`.
///
/// # Safety
/// `m` must be a live handle; `buf` valid for `len` writes; `needed` NULL or
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_measure_masses(m: *const NhMeasure, buf: *mut f64, len: usize, needed: *mut usize) -> NhStatus {
    guard(|| copy_out(get(m, "measure")?.0.masses(), buf, len, needed))
}

/// # Safety
/// `m` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nh_measure_free(m: *mut NhMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

unsafe fn model_box(model: PhiModel, out: *mut *mut NhModel) -> Result<(), Fail> {
    model.validate()?;
    put_box(out, NhModel { model, quad: Arc::new(Quadrature::default()) })
}

/// Hard-sphere kernel, `Phi = 1`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_model_hard_sphere(out: *mut *mut NhModel) -> NhStatus {
    guard(|| model_box(PhiModel::HardSphere, out))
}

/// Eta model with `0 < b0 <= 1/2` and `0 <= eta < 1`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_model_eta(b0: f64, eta: f64, out: *mut *mut NhModel) -> NhStatus {
    guard(|| model_box(PhiModel::EtaModel { b0, eta }, out))
}

/// Collision weight `W(x, y, z)`.
///
/// # Safety
/// `model` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_kernel_w(model: *const NhModel, x: f64, y: f64, z: f64, out: *mut f64) -> NhStatus {
    guard(|| {
        let m = get(model, "model")?;
        put(out, w(&m.model, x, y, z, &m.quad)?, "out")
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nh_model_free(model: *mut NhModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Builds the stored collision table of `model` on `grid`.
///
/// # Safety
/// `model` and `grid` must be live handles, `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_table_build(
    model: *const NhModel,
    grid: *const NhGrid,
    j_rule: NhJRule,
    out: *mut *mut NhTable,
) -> NhStatus {
    guard(|| {
        let m = get(model, "model")?;
        let g = get(grid, "grid")?;
        let j_rule = match j_rule {
            NhJRule::Lumped => JRule::Lumped,
            NhJRule::Exact => JRule::Exact,
        };
        let spec = TableSpec { j_rule, ..TableSpec::default() };
        put_box(out, NhTable(CollisionTable::build(&m.model, &g.0, &m.quad, &spec)?))
    })
}

/// # Safety
/// `table` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nh_table_free(table: *mut NhTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Mass rates `dm_i/dt` of `m`.
///
/// # Safety
/// `table` and `m` must be live handles on the same grid; `buf` valid for
/// `len` writes; `needed` NULL or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_rhs(
    table: *const NhTable,
    m: *const NhMeasure,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> NhStatus {
    guard(|| {
        let r = rhs(&get(m, "measure")?.0, &get(table, "table")?.0)?;
        copy_out(&r, buf, len, needed)
    })
}

/// Integrates `m` with classical RK4 up to `t_end` and returns the final state.
///
/// # Safety
/// `table` and `m` must be live handles on the same grid, `out` valid for a
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn nh_run(
    table: *const NhTable,
    m: *const NhMeasure,
    dt: f64,
    t_end: f64,
    out: *mut *mut NhMeasure,
) -> NhStatus {
    guard(|| {
        let t = &get(table, "table")?.0;
        let f0 = &get(m, "measure")?.0;
        let cfg = SolverConfig { dt, t_end, output_stride: usize::MAX, ..SolverConfig::default() };
        let diag = RunDiagnostics { dissipation: false, ..RunDiagnostics::default() };
        let mut traj = run(f0, t, &cfg, &diag)?;
        let last = traj.snapshots.pop().expect("run keeps the initial sample");
        put_box(out, NhMeasure(last.measure))
    })
}

/// Continuum equilibrium with mass `n` and energy `e`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_equilibrium(n: f64, e: f64, out: *mut NhEquilibrium) -> NhStatus {
    guard(|| {
        let st = solve_equilibrium(n, e)?;
        let s = equilibrium_entropy(&st)?;
        put(
            out,
            NhEquilibrium { temp_ratio: st.temp_ratio, a_coef: st.a_coef, kappa: st.kappa, n0: st.n0, entropy: s },
            "out",
        )
    })
}

/// Condensation constants; requires `0 <= eta < 1/4`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nh_bec_constants(n: f64, e: f64, b0: f64, eta: f64, out: *mut NhBecConstants) -> NhStatus {
    guard(|| {
        let c = bec_constants(n, e, b0, eta)?;
        put(
            out,
            NhBecConstants {
                alpha: c.alpha,
                a_star: c.a_star,
                b_star: c.b_star,
                c_star: c.c_star,
                eps_admissible_max: c.eps_admissible_max,
            },
            "out",
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, NhStatus::Panic);
        let msg = unsafe { CStr::from_ptr(nh_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"), "{msg}");
    }

    #[test]
    fn errors_map_to_codes() {
        let s = guard(|| Err(Error::config("x").into()));
        assert_eq!(s, NhStatus::Config);
        nh_clear_last_error();
        assert!(nh_last_error().is_null());
    }
}
