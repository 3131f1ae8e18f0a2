//! C interface to the surfflow solver.
//!
//! Every function returns an [`SfStatus`]; results are written through out-pointers.
//! On failure a message is kept per thread and can be read with [`sf_last_error`].
//! Meshes and simulations are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use surfflow::config::parse_config_str;
use surfflow::diagnostics::sphere_radius;
use surfflow::driver::{Simulation, SERIES_COLUMNS};
use surfflow::flow::FlowKind;
use surfflow::mesh::{builtin_sphere, import_off, SurfaceMesh};
use surfflow::Error;

/// Number of values written by [`sf_simulation_diagnostics`].
pub const SF_NUM_DIAGNOSTICS: usize = 7;
const _: () = assert!(SF_NUM_DIAGNOSTICS == SERIES_COLUMNS.len());

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Geometry = 4,
    Solver = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfFlowKind {
    Mcf = 0,
    Imcf = 1,
    PowerMcf = 2,
    PowerImcf = 3,
    LogMcf = 4,
}

/// Opaque surface mesh.
pub struct SfMesh(SurfaceMesh);

/// Opaque running simulation.
pub struct SfSimulation(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> SfStatus {
    match e {
        Error::InvalidMesh(_)
        | Error::NonManifoldEdge { .. }
        | Error::Projection { .. }
        | Error::DegenerateElement { .. }
        | Error::SingularGradient(..) => SfStatus::Geometry,
        Error::Parse { .. }
        | Error::Config(_)
        | Error::InvalidFlow(_)
        | Error::BeyondMaximalTime { .. }
        | Error::Unsupported(_) => SfStatus::Config,
        Error::InvalidState { .. }
        | Error::NoConvergence { .. }
        | Error::NotPositiveDefinite(_)
        | Error::Undefined(_) => SfStatus::Solver,
        Error::DimensionMismatch { .. } => SfStatus::InvalidArgument,
        Error::Io(_) => SfStatus::Io,
    }
}

/// Internal failure carrying the status to report.
struct Fail(SfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Out<T> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> Out<()>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SfStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Out<&'a T> {
    p.as_ref().ok_or_else(|| Fail(SfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Out<&'a mut T> {
    p.as_mut().ok_or_else(|| Fail(SfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Out<&'a str> {
    if p.is_null() {
        return Err(Fail(SfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SfStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Out<()> {
    if out.is_null() {
        return Err(Fail(SfStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> Out<()> {
    if buf.is_null() {
        return Err(Fail(SfStatus::NullPointer, "buffer is null".into()));
    }
    if len < values.len() {
        return Err(Fail(
            SfStatus::InvalidArgument,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Radius at time `t` of a sphere of initial radius `r0` in R^3. `param` is `alpha` for
/// the power flows and `h_tilde` for the logarithmic one, ignored otherwise.
///
/// # Safety
/// `out` must be valid for a write of one double.
#[no_mangle]
pub unsafe extern "C" fn sf_sphere_radius(
    kind: SfFlowKind,
    param: f64,
    r0: f64,
    t: f64,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        let kind = match kind {
            SfFlowKind::Mcf => FlowKind::Mcf,
            SfFlowKind::Imcf => FlowKind::Imcf,
            SfFlowKind::PowerMcf => FlowKind::PowerMcf { alpha: param },
            SfFlowKind::PowerImcf => FlowKind::PowerImcf { alpha: param },
            SfFlowKind::LogMcf => FlowKind::LogMcf { h_tilde: param },
        };
        if !(r0 > 0.0) || !(t >= 0.0) {
            return Err(Fail(SfStatus::InvalidArgument, format!("need r0 > 0 and t >= 0, got {r0}, {t}")));
        }
        write(out, sphere_radius(kind, r0, 2.0, t)?, "out")
    })
}

/// Icosahedral sphere mesh of degree `degree` after `refinement` subdivisions.
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_mesh_sphere(
    radius: f64,
    refinement: usize,
    degree: usize,
    out: *mut *mut SfMesh,
) -> SfStatus {
    guard(|| {
        let mesh = builtin_sphere(radius, refinement, degree)?;
        write(out, Box::into_raw(Box::new(SfMesh(mesh))), "out")
    })
}

/// Linear mesh read from an ASCII OFF file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_mesh_read_off(path: *const c_char, out: *mut *mut SfMesh) -> SfStatus {
    guard(|| {
        let mesh = import_off(string(path, "path")?)?;
        write(out, Box::into_raw(Box::new(SfMesh(mesh))), "out")
    })
}

/// # Safety
/// `mesh` must be valid and `num_nodes`, `num_elements`, `degree` valid for writes
/// (any of them may be NULL to skip).
#[no_mangle]
pub unsafe extern "C" fn sf_mesh_info(
    mesh: *const SfMesh,
    num_nodes: *mut usize,
    num_elements: *mut usize,
    degree: *mut usize,
) -> SfStatus {
    guard(|| {
        let m = &get(mesh, "mesh")?.0;
        for (p, v) in [(num_nodes, m.num_nodes()), (num_elements, m.num_elements()), (degree, m.degree())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Copies node coordinates as `x0 y0 z0 x1 ...` into `buf` of length `len >= 3 * nodes`.
///
/// # Safety
/// `mesh` must be valid and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_mesh_nodes(mesh: *const SfMesh, buf: *mut f64, len: usize) -> SfStatus {
    guard(|| {
        let m = &get(mesh, "mesh")?.0;
        let flat: Vec<f64> = m.nodes().iter().flat_map(|p| [p.x, p.y, p.z]).collect();
        copy_out(&flat, buf, len)
    })
}

/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_mesh_free(mesh: *mut SfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Creates a simulation from configuration text and runs its startup. When `mesh` is not
/// NULL it replaces the mesh named by the configuration.
///
/// # Safety
/// `config` must be a NUL-terminated string, `mesh` NULL or valid, `out` valid for a write
/// of one pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_new(
    config: *const c_char,
    mesh: *const SfMesh,
    out: *mut *mut SfSimulation,
) -> SfStatus {
    guard(|| {
        let cfg = parse_config_str(string(config, "config")?)?;
        let sim = match mesh.as_ref() {
            Some(m) => Simulation::with_mesh(cfg, m.0.clone())?,
            None => Simulation::new(cfg)?,
        };
        write(out, Box::into_raw(Box::new(SfSimulation(sim))), "out")
    })
}

/// Advances one time step. Stepping a finished simulation is an invalid argument.
///
/// # Safety
/// `sim` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_step(sim: *mut SfSimulation) -> SfStatus {
    guard(|| {
        let s = &mut get_mut(sim, "simulation")?.0;
        if s.is_finished() {
            return Err(Fail(SfStatus::InvalidArgument, "simulation already reached its final time".into()));
        }
        s.step()?;
        Ok(())
    })
}

/// Current time, step index and whether the final time has been reached.
///
/// # Safety
/// `sim` must be valid; out-pointers may be NULL to skip.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_status(
    sim: *const SfSimulation,
    time: *mut f64,
    step: *mut usize,
    finished: *mut bool,
) -> SfStatus {
    guard(|| {
        let s = &get(sim, "simulation")?.0;
        if !time.is_null() {
            time.write(s.time());
        }
        if !step.is_null() {
            step.write(s.step_index());
        }
        if !finished.is_null() {
            finished.write(s.is_finished());
        }
        Ok(())
    })
}

/// Current surface as a new mesh handle.
///
/// # Safety
/// `sim` must be valid and `out` valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_mesh(sim: *const SfSimulation, out: *mut *mut SfMesh) -> SfStatus {
    guard(|| {
        let mesh = get(sim, "simulation")?.0.mesh()?;
        write(out, Box::into_raw(Box::new(SfMesh(mesh))), "out")
    })
}

/// Writes area, Hawking mass, Schulze quantity, clamp count, min H, max H and the maximal
/// normal defect of the current state ([`SF_NUM_DIAGNOSTICS`] values).
///
/// # Safety
/// `sim` must be valid and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_diagnostics(
    sim: *const SfSimulation,
    buf: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        let s = &get(sim, "simulation")?.0;
        let values = s.diagnostics(s.state(), s.last_clamped())?;
        copy_out(&values, buf, len)
    })
}

/// Legacy VTK snapshot of the current state.
///
/// # Safety
/// `sim` must be valid and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_write_vtk(sim: *const SfSimulation, path: *const c_char) -> SfStatus {
    guard(|| {
        let s = &get(sim, "simulation")?.0;
        let path = PathBuf::from(string(path, "path")?);
        s.write_snapshot(s.state(), path)?;
        Ok(())
    })
}

/// # Safety
/// `sim` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_free(sim: *mut SfSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
