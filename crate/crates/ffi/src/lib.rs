//! C ABI over the pclstm library.
//!
//! Every fallible call returns a [`PclstmStatus`]; on failure the message is available
//! from [`pclstm_last_error`] on the same thread. Objects cross the boundary as opaque
//! handles that the caller releases with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pclstm::error::Error;
use pclstm::geometry::ArrayGeometry;
use pclstm::linalg::CMatrix;
use pclstm::mom::{solve_port_impedance, z_to_s, PortImpedance};
use pclstm::pc_lstm::{predict_two_port, ModelBundle};
use pclstm::synthesis::{synthesize_array, SpacingConstraints, SynthesisModel};

/// Result codes. Values 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PclstmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    TrainingDiverged = 4,
    Panic = 5,
}

/// Array layout and dipole description.
pub struct PclstmGeometry(ArrayGeometry);

/// Trained two-port model.
pub struct PclstmBundle(ModelBundle);

/// Trained large-array refinement network.
pub struct PclstmSynthesisModel(SynthesisModel);

/// Square complex matrix result.
pub struct PclstmMatrix(CMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PclstmStatus {
    match e {
        Error::Solver { .. } | Error::Reduction(_) | Error::Conversion(_) => {
            PclstmStatus::Numerical
        }
        Error::Training { .. } => PclstmStatus::TrainingDiverged,
        _ => PclstmStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PclstmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PclstmStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            PclstmStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PclstmStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Domain(format!("{what} is not valid UTF-8"))))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn pclstm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pclstm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a geometry JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_geometry_from_json(
    json: *const c_char,
    out: *mut *mut PclstmGeometry,
) -> PclstmStatus {
    guard(|| {
        let g: ArrayGeometry = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        emit(out, PclstmGeometry(g))
    })
}

/// Number of dipoles in a geometry, or 0 for a null handle.
///
/// # Safety
/// `geometry` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pclstm_geometry_element_count(geometry: *const PclstmGeometry) -> usize {
    geometry.as_ref().map_or(0, |g| g.0.element_count())
}

/// # Safety
/// `geometry` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pclstm_geometry_free(geometry: *mut PclstmGeometry) {
    release(geometry)
}

/// Port impedance matrix from the MoM solver.
///
/// # Safety
/// `geometry` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_mom_solve(
    geometry: *const PclstmGeometry,
    out: *mut *mut PclstmMatrix,
) -> PclstmStatus {
    guard(|| {
        let g = arg(geometry, "geometry")?;
        emit(out, PclstmMatrix(solve_port_impedance(&g.0)?.entries))
    })
}

/// S-parameters of a port impedance matrix against a real reference impedance.
///
/// # Safety
/// `z` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_z_to_s(
    z: *const PclstmMatrix,
    ref_ohms: f64,
    out: *mut *mut PclstmMatrix,
) -> PclstmStatus {
    guard(|| {
        let z = arg(z, "z")?;
        let port = PortImpedance {
            entries: z.0.clone(),
            frequency_hz: f64::NAN,
        };
        emit(out, PclstmMatrix(z_to_s(&port, ref_ohms)?))
    })
}

/// Side length of a square matrix, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pclstm_matrix_dim(m: *const PclstmMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows)
}

/// Reads entry (p, q), zero-based.
///
/// # Safety
/// `m` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_matrix_get(
    m: *const PclstmMatrix,
    p: usize,
    q: usize,
    re: *mut f64,
    im: *mut f64,
) -> PclstmStatus {
    guard(|| {
        let m = arg(m, "matrix")?;
        if re.is_null() || im.is_null() {
            return Err(Failure::Null("output pointer"));
        }
        if p >= m.0.rows || q >= m.0.cols {
            return Err(Error::Domain(format!(
                "index ({p}, {q}) outside a {}x{} matrix",
                m.0.rows, m.0.cols
            ))
            .into());
        }
        let v = m.0[(p, q)];
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pclstm_matrix_free(m: *mut PclstmMatrix) {
    release(m)
}

/// Loads a two-port bundle from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_bundle_from_json(
    json: *const c_char,
    out: *mut *mut PclstmBundle,
) -> PclstmStatus {
    guard(|| {
        let b = ModelBundle::from_json(text(json, "json")?)?;
        emit(out, PclstmBundle(b))
    })
}

/// # Safety
/// `bundle` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pclstm_bundle_free(bundle: *mut PclstmBundle) {
    release(bundle)
}

/// Predicted 2x2 port impedance matrix of a two-element geometry.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_predict_two_port(
    bundle: *const PclstmBundle,
    geometry: *const PclstmGeometry,
    out: *mut *mut PclstmMatrix,
) -> PclstmStatus {
    guard(|| {
        let b = arg(bundle, "bundle")?;
        let g = arg(geometry, "geometry")?;
        emit(
            out,
            PclstmMatrix(predict_two_port(&b.0, &g.0)?.reconstructed),
        )
    })
}

/// Loads a refinement network from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_synthesis_model_from_json(
    json: *const c_char,
    out: *mut *mut PclstmSynthesisModel,
) -> PclstmStatus {
    guard(|| {
        let m = SynthesisModel::from_json(text(json, "json")?)?;
        emit(out, PclstmSynthesisModel(m))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pclstm_synthesis_model_free(model: *mut PclstmSynthesisModel) {
    release(model)
}

/// Port impedance matrix of a larger array. `model` may be null, which returns the
/// unrefined pairwise prior under the default spacing constraints.
///
/// # Safety
/// `bundle` and `geometry` must be live handles, `model` null or live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pclstm_synthesize(
    bundle: *const PclstmBundle,
    model: *const PclstmSynthesisModel,
    geometry: *const PclstmGeometry,
    out: *mut *mut PclstmMatrix,
) -> PclstmStatus {
    guard(|| {
        let b = arg(bundle, "bundle")?;
        let g = arg(geometry, "geometry")?;
        let model = model.as_ref().map(|m| &m.0);
        let defaults = SpacingConstraints::default();
        let constraints = model.map_or(&defaults, |m| &m.constraints);
        let s = synthesize_array(&b.0, model, &g.0, constraints)?;
        emit(out, PclstmMatrix(s.reconstructed))
    })
}
