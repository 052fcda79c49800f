//! C ABI over `nhsl`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns an [`NhslStatus`]; on
//! failure [`nhsl_last_error`] describes the cause for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nhsl::cli::Stage;
use nhsl::lattice::{check_lattice, Lattice, LatticeParams};
use nhsl::measure::io::parse_measure_json;
use nhsl::measure::{AtomicMeasure, DominatingFunction};
use nhsl::operators::{FunctionSample, Kernel};
use nhsl::sparse::{certify, recurse, SelectConfig};
use nhsl::weights::{cell_characteristic, Weight};

/// Result codes; 1 to 4 match the exit codes of the `nhsl` binary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhslStatus {
    Ok = 0,
    Config = 1,
    Lattice = 2,
    Sparse = 3,
    Weights = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

pub struct NhslMeasure(AtomicMeasure);

pub struct NhslLattice(Lattice);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Core(nhsl::Error),
}

impl From<nhsl::Error> for Failure {
    fn from(e: nhsl::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> NhslStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => NhslStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            NhslStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            NhslStatus::InvalidUtf8
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match Stage::of(&e) {
                Stage::Config => NhslStatus::Config,
                Stage::Lattice => NhslStatus::Lattice,
                Stage::Sparse => NhslStatus::Sparse,
                Stage::Weights => NhslStatus::Weights,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            NhslStatus::Panic
        }
    }
}

unsafe fn reference<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn values<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nhsl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Atoms from parallel arrays. A `floor` that is not positive selects the
/// default resolution floor.
///
/// # Safety
/// `positions` and `masses` point to `len` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nhsl_measure_new(
    positions: *const f64,
    masses: *const f64,
    len: usize,
    floor: f64,
    out: *mut *mut NhslMeasure,
) -> NhslStatus {
    guard(|| {
        let xs = values(positions, len, "positions")?;
        let ms = values(masses, len, "masses")?;
        let floor = (floor > 0.0).then_some(floor);
        let m = AtomicMeasure::new(xs.iter().copied().zip(ms.iter().copied()).collect(), floor)?;
        write(out, Box::into_raw(Box::new(NhslMeasure(m))), "out")
    })
}

/// Measure from the JSON measure format.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nhsl_measure_from_json(json: *const c_char, out: *mut *mut NhslMeasure) -> NhslStatus {
    guard(|| {
        let m = parse_measure_json(text(json, "json")?)?;
        write(out, Box::into_raw(Box::new(NhslMeasure(m))), "out")
    })
}

/// Number of atoms; 0 for null.
///
/// # Safety
/// `measure` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhsl_measure_len(measure: *const NhslMeasure) -> usize {
    measure.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `measure` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhsl_measure_total_mass(measure: *const NhslMeasure) -> f64 {
    measure.as_ref().map_or(0.0, |m| m.0.total_mass())
}

/// # Safety
/// `measure` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nhsl_measure_free(measure: *mut NhslMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Builds the lattice; `lambda_json` may be null.
///
/// # Safety
/// `measure` is a live handle, strings are NUL-terminated, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nhsl_lattice_build(
    measure: *const NhslMeasure,
    params_json: *const c_char,
    lambda_json: *const c_char,
    out: *mut *mut NhslLattice,
) -> NhslStatus {
    guard(|| {
        let m = reference(measure, "measure")?;
        let params: LatticeParams = serde_json::from_str(text(params_json, "params_json")?)?;
        let lambda: Option<DominatingFunction> = if lambda_json.is_null() {
            None
        } else {
            Some(serde_json::from_str(text(lambda_json, "lambda_json")?)?)
        };
        let l = Lattice::build(&m.0, &params, lambda.as_ref())?;
        write(out, Box::into_raw(Box::new(NhslLattice(l))), "out")
    })
}

/// # Safety
/// `lattice` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhsl_lattice_levels(lattice: *const NhslLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.0.num_levels())
}

/// # Safety
/// `lattice` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhsl_lattice_cells(lattice: *const NhslLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.0.cells().len())
}

/// Runs the invariant suite.
///
/// # Safety
/// `lattice` is a live handle and `pass` is writable.
#[no_mangle]
pub unsafe extern "C" fn nhsl_lattice_check(lattice: *const NhslLattice, pass: *mut bool) -> NhslStatus {
    guard(|| {
        let l = reference(lattice, "lattice")?;
        write(pass, check_lattice(&l.0).pass, "pass")
    })
}

/// JSON serialization; release with [`nhsl_string_free`].
///
/// # Safety
/// `lattice` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nhsl_lattice_to_json(lattice: *const NhslLattice, out: *mut *mut c_char) -> NhslStatus {
    guard(|| {
        let l = reference(lattice, "lattice")?;
        let s = CString::new(l.0.to_json()?).map_err(|_| Failure::Utf8("lattice json"))?;
        write(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `lattice` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nhsl_lattice_free(lattice: *mut NhslLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nhsl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Selects sparse families for `f` from the lattice root and certifies the
/// pointwise bound, writing `c*` and the number of violating atoms.
///
/// # Safety
/// `lattice` is a live handle, `kernel_json` is NUL-terminated, `f` points to
/// `len` values and the outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn nhsl_certify(
    lattice: *const NhslLattice,
    kernel_json: *const c_char,
    f: *const f64,
    len: usize,
    c_star: *mut f64,
    violations: *mut usize,
) -> NhslStatus {
    guard(|| {
        let l = &reference(lattice, "lattice")?.0;
        let kernel: Kernel = serde_json::from_str(text(kernel_json, "kernel_json")?)?;
        kernel.validate()?;
        let f = FunctionSample::new(l.measure(), values(f, len, "f")?.to_vec())?;
        let families = recurse(&kernel, l, &f, l.root(), &SelectConfig::default())?;
        let cert = certify(&kernel, l, &families, &f)?;
        write(c_star, cert.c_star, "c_star")?;
        write(violations, cert.violations.len(), "violations")
    })
}

/// Cell characteristic of the weight `w` with exponent `p`.
///
/// # Safety
/// `lattice` is a live handle, `w` points to `len` values, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nhsl_cell_characteristic(
    lattice: *const NhslLattice,
    w: *const f64,
    len: usize,
    p: f64,
    out: *mut f64,
) -> NhslStatus {
    guard(|| {
        let l = &reference(lattice, "lattice")?.0;
        let weight = Weight::new(l.measure(), values(w, len, "w")?.to_vec(), p)?;
        write(out, cell_characteristic(&weight, l).value, "out")
    })
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn nhsl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
