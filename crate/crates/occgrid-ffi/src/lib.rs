//! C ABI for the occgrid estimation library.
//!
//! Scenarios and marginal fields are opaque handles created and destroyed by
//! this library; every fallible call returns an [`OccgridStatus`] and leaves
//! a human-readable description of the last failure in thread-local storage,
//! readable through [`occgrid_last_error_message`]. The generated header is
//! written to `include/occgrid.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use occgrid::channel::TransitionModel;
use occgrid::error::Error;
use occgrid::estimators::{
    final_field, run_sequence, MarginalField, Method, MethodParams, OccupancyMap,
};
use occgrid::grid::GridSpec;
use occgrid::image::write_pgm;
use occgrid::metrics::{similarity_rho, sjsd};
use occgrid::scenario::{generate_toy, Scenario};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccgridStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Io = 4,
    InconsistentMeasurement = 5,
    Panic = 6,
}

/// An immutable scenario: grid, truth map, and measurement sequence.
pub struct OccgridScenario {
    inner: Scenario,
}

/// Per-cell posterior probabilities together with their grid geometry.
pub struct OccgridField {
    field: MarginalField,
    grid: GridSpec,
}

/// Distance rule for the channel transition probabilities.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccgridTransition {
    /// `p00 = (1 - pd) / (1 + d)^alpha`, `p01 = (1 - pfa) / (1 + d)^alpha`.
    Attenuated = 0,
    /// `p00 = 1 - pfa / (1 + d)^alpha`, `p01 = 1 - pd / (1 + d)^alpha`.
    InfluenceDecay = 1,
    /// The attenuated formulas evaluated at a fixed distance.
    Constant = 2,
}

/// Estimation knobs; see `occgrid_method_params_default` for the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OccgridMethodParams {
    pub transition: OccgridTransition,
    pub pd: f64,
    pub pfa: f64,
    pub alpha: f64,
    pub constant_distance: f64,
    /// Cap on joint enumeration (gf / co / rgo).
    pub subset_cap: usize,
    /// Gate count for rgo; section count on the toy layout.
    pub gate_count: usize,
    pub gate_overlap: f64,
    pub co_sections: usize,
    pub im_sections: usize,
    pub assoc_radius: usize,
    pub p_hit: f64,
    pub p_miss: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> OccgridStatus {
    match err {
        Error::SubsetTooLarge { .. } => OccgridStatus::Capacity,
        Error::Io { .. } | Error::ScenarioFormat { .. } => OccgridStatus::Io,
        Error::InconsistentMeasurement => OccgridStatus::InconsistentMeasurement,
        _ => OccgridStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> OccgridStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

fn catch(body: impl FnOnce() -> OccgridStatus) -> OccgridStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            OccgridStatus::Panic
        }
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn occgrid_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn occgrid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, OccgridStatus> {
    if ptr.is_null() {
        set_error("path is null");
        return Err(OccgridStatus::NullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(OccgridStatus::InvalidArgument)
        }
    }
}

/// Load a scenario file. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn occgrid_scenario_load(
    path: *const c_char,
    out: *mut *mut OccgridScenario,
) -> OccgridStatus {
    catch(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return OccgridStatus::NullPointer;
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match Scenario::load(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(OccgridScenario { inner }));
                OccgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Generate the toy scenario: an `nx` x `ny` grid of `cell_size` cells at
/// `origin`, `truth` given row-major as 0/1 bytes (length `nx * ny`), each
/// ping corrupting the ideal measurement through a BAC with `pd` / `pfa`.
///
/// # Safety
/// `truth` must point to `nx * ny` bytes; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn occgrid_scenario_generate_toy(
    nx: usize,
    ny: usize,
    cell_size: f64,
    origin_x: f64,
    origin_y: f64,
    truth: *const u8,
    pd: f64,
    pfa: f64,
    pings: usize,
    samples_per_cell: usize,
    seed: u64,
    out: *mut *mut OccgridScenario,
) -> OccgridStatus {
    catch(|| {
        if out.is_null() || truth.is_null() {
            set_error("truth or out pointer is null");
            return OccgridStatus::NullPointer;
        }
        let grid = match GridSpec::new([origin_x, origin_y], cell_size, nx, ny) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        let bits = std::slice::from_raw_parts(truth, nx * ny);
        let map = OccupancyMap::new(bits.iter().map(|&b| b != 0).collect());
        match generate_toy(&grid, &map, pd, pfa, pings, samples_per_cell, seed) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(OccgridScenario { inner }));
                OccgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Write the scenario to its plain-text container format.
///
/// # Safety
/// `scenario` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn occgrid_scenario_save(
    scenario: *const OccgridScenario,
    path: *const c_char,
) -> OccgridStatus {
    catch(|| {
        let Some(scenario) = scenario.as_ref() else {
            set_error("scenario handle is null");
            return OccgridStatus::NullPointer;
        };
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match scenario.inner.save(path) {
            Ok(()) => OccgridStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Number of grid cells.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn occgrid_scenario_cells(
    scenario: *const OccgridScenario,
    out: *mut usize,
) -> OccgridStatus {
    catch(|| {
        let (Some(scenario), Some(out)) = (scenario.as_ref(), out.as_mut()) else {
            set_error("null pointer");
            return OccgridStatus::NullPointer;
        };
        *out = scenario.inner.grid.cells();
        OccgridStatus::Ok
    })
}

/// Number of pings in the measurement sequence.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn occgrid_scenario_pings(
    scenario: *const OccgridScenario,
    out: *mut usize,
) -> OccgridStatus {
    catch(|| {
        let (Some(scenario), Some(out)) = (scenario.as_ref(), out.as_mut()) else {
            set_error("null pointer");
            return OccgridStatus::NullPointer;
        };
        *out = scenario.inner.pings.len();
        OccgridStatus::Ok
    })
}

/// Copy the truth map into `buffer` (0/1 bytes, row-major); `len` must equal
/// the cell count.
///
/// # Safety
/// `buffer` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn occgrid_scenario_truth(
    scenario: *const OccgridScenario,
    buffer: *mut u8,
    len: usize,
) -> OccgridStatus {
    catch(|| {
        let Some(scenario) = scenario.as_ref() else {
            set_error("scenario handle is null");
            return OccgridStatus::NullPointer;
        };
        if buffer.is_null() {
            set_error("buffer is null");
            return OccgridStatus::NullPointer;
        }
        let truth = scenario.inner.truth.as_slice();
        if len != truth.len() {
            set_error(format!(
                "buffer holds {} cells, scenario has {}",
                len,
                truth.len()
            ));
            return OccgridStatus::InvalidArgument;
        }
        let out = std::slice::from_raw_parts_mut(buffer, len);
        for (dst, &b) in out.iter_mut().zip(truth.iter()) {
            *dst = b as u8;
        }
        OccgridStatus::Ok
    })
}

/// Defaults matching the library's estimator defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn occgrid_method_params_default(
    out: *mut OccgridMethodParams,
) -> OccgridStatus {
    catch(|| {
        let Some(out) = out.as_mut() else {
            set_error("out pointer is null");
            return OccgridStatus::NullPointer;
        };
        let defaults = MethodParams::default();
        let (pd, pfa, alpha) = match defaults.model {
            TransitionModel::Attenuated { pd, pfa, alpha } => (pd, pfa, alpha),
            _ => unreachable!("default model is the attenuated variant"),
        };
        *out = OccgridMethodParams {
            transition: OccgridTransition::Attenuated,
            pd,
            pfa,
            alpha,
            constant_distance: 0.96,
            subset_cap: defaults.subset_cap,
            gate_count: defaults.gate_count,
            gate_overlap: defaults.gate_overlap,
            co_sections: defaults.co_sections,
            im_sections: defaults.im_sections,
            assoc_radius: defaults.assoc_radius,
            p_hit: defaults.p_hit,
            p_miss: defaults.p_miss,
        };
        OccgridStatus::Ok
    })
}

fn params_from_c(params: &OccgridMethodParams) -> MethodParams {
    let model = match params.transition {
        OccgridTransition::Attenuated => TransitionModel::Attenuated {
            pd: params.pd,
            pfa: params.pfa,
            alpha: params.alpha,
        },
        OccgridTransition::InfluenceDecay => TransitionModel::InfluenceDecay {
            pd: params.pd,
            pfa: params.pfa,
            alpha: params.alpha,
        },
        OccgridTransition::Constant => TransitionModel::Constant {
            pd: params.pd,
            pfa: params.pfa,
            alpha: params.alpha,
            distance: params.constant_distance,
        },
    };
    MethodParams {
        model,
        subset_cap: params.subset_cap,
        gate_count: params.gate_count,
        gate_overlap: params.gate_overlap,
        co_sections: params.co_sections,
        im_sections: params.im_sections,
        assoc_radius: params.assoc_radius,
        p_hit: params.p_hit,
        p_miss: params.p_miss,
    }
}

/// Run one estimator (`"gf"`, `"co"`, `"rgo"`, `"im"` or `"cm"`) over the
/// whole scenario; `*out` receives the final marginal field.
///
/// # Safety
/// `scenario` must be a live handle, `method` a nul-terminated string,
/// `params` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn occgrid_run(
    scenario: *const OccgridScenario,
    method: *const c_char,
    params: *const OccgridMethodParams,
    out: *mut *mut OccgridField,
) -> OccgridStatus {
    catch(|| {
        let (Some(scenario), Some(params)) = (scenario.as_ref(), params.as_ref()) else {
            set_error("scenario or params handle is null");
            return OccgridStatus::NullPointer;
        };
        if method.is_null() || out.is_null() {
            set_error("method or out pointer is null");
            return OccgridStatus::NullPointer;
        }
        let method: Method = match CStr::from_ptr(method).to_str() {
            Ok(s) => match s.parse() {
                Ok(m) => m,
                Err(e) => return fail(e),
            },
            Err(_) => {
                set_error("method is not valid UTF-8");
                return OccgridStatus::InvalidArgument;
            }
        };
        match run_sequence(method, &scenario.inner, &params_from_c(params)) {
            Ok(trajectory) => {
                let field = final_field(&trajectory, scenario.inner.grid.cells());
                *out = Box::into_raw(Box::new(OccgridField {
                    field,
                    grid: scenario.inner.grid.clone(),
                }));
                OccgridStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of cells in the field.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn occgrid_field_len(
    field: *const OccgridField,
    out: *mut usize,
) -> OccgridStatus {
    catch(|| {
        let (Some(field), Some(out)) = (field.as_ref(), out.as_mut()) else {
            set_error("null pointer");
            return OccgridStatus::NullPointer;
        };
        *out = field.field.len();
        OccgridStatus::Ok
    })
}

/// Copy the per-cell probabilities (row-major) into `buffer`; `len` must
/// equal the field's cell count.
///
/// # Safety
/// `buffer` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn occgrid_field_values(
    field: *const OccgridField,
    buffer: *mut f64,
    len: usize,
) -> OccgridStatus {
    catch(|| {
        let Some(field) = field.as_ref() else {
            set_error("field handle is null");
            return OccgridStatus::NullPointer;
        };
        if buffer.is_null() {
            set_error("buffer is null");
            return OccgridStatus::NullPointer;
        }
        if len != field.field.len() {
            set_error(format!(
                "buffer holds {} cells, field has {}",
                len,
                field.field.len()
            ));
            return OccgridStatus::InvalidArgument;
        }
        let out = std::slice::from_raw_parts_mut(buffer, len);
        out.copy_from_slice(field.field.as_slice());
        OccgridStatus::Ok
    })
}

/// Render the field to an 8-bit binary PGM image (darker = more probably
/// occupied).
///
/// # Safety
/// `field` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn occgrid_field_save_pgm(
    field: *const OccgridField,
    path: *const c_char,
) -> OccgridStatus {
    catch(|| {
        let Some(field) = field.as_ref() else {
            set_error("field handle is null");
            return OccgridStatus::NullPointer;
        };
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_pgm(&field.field, &field.grid, path) {
            Ok(()) => OccgridStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Similarity and summed Jensen-Shannon distance of a field against the
/// scenario's truth map.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn occgrid_metrics(
    scenario: *const OccgridScenario,
    field: *const OccgridField,
    out_rho: *mut f64,
    out_sjsd: *mut f64,
) -> OccgridStatus {
    catch(|| {
        let (Some(scenario), Some(field)) = (scenario.as_ref(), field.as_ref()) else {
            set_error("scenario or field handle is null");
            return OccgridStatus::NullPointer;
        };
        let (Some(out_rho), Some(out_sjsd)) = (out_rho.as_mut(), out_sjsd.as_mut()) else {
            set_error("output pointer is null");
            return OccgridStatus::NullPointer;
        };
        let rho = match similarity_rho(&scenario.inner.truth, &field.field) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let distance = match sjsd(&scenario.inner.truth, &field.field) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        *out_rho = rho;
        *out_sjsd = distance;
        OccgridStatus::Ok
    })
}

/// Release a scenario handle. A null pointer is a no-op.
///
/// # Safety
/// `scenario` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn occgrid_scenario_free(scenario: *mut OccgridScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Release a field handle. A null pointer is a no-op.
///
/// # Safety
/// `field` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn occgrid_field_free(field: *mut OccgridField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}
