//! C ABI for `cylwidth`.
//!
//! Every function returns a [`CwStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`cw_last_error`]. Vectors are `double` arrays of length `d`; complex data
//! is interleaved `(re, im)`; matrices are column-major. Handles are opaque
//! and freed with the matching `*_free` function (null is accepted).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cylwidth::groups::{enumerate_orbit, GroupPresentation, Orbit};
use cylwidth::lowerbound::{selberg_check, witness_vector};
use cylwidth::nalgebra::DMatrix;
use cylwidth::rip::select_columns;
use cylwidth::tnorm::t_norm;
use cylwidth::vectors::{orthonormalize, orthonormalize_real, projection_norm};
use cylwidth::width::{width_altmax, width_brute_signed_perm, width_orbit, DEFAULT_MAX_ITER};
use cylwidth::{Error, SubspaceBasis, Vector, C64};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad dimensions, non-finite input, malformed JSON, rank deficiency.
    InvalidArgument = 2,
    GuaranteeMissed = 3,
    Numerical = 4,
    Panic = 5,
}

/// Orthonormal basis of a subspace.
pub struct CwSubspace(SubspaceBasis);

/// Finite group given by generators.
pub struct CwGroup(GroupPresentation);

/// Enumerated orbit.
pub struct CwOrbit(Orbit);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CwStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            CwStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            if e.is_guarantee_missed() {
                CwStatus::GuaranteeMissed
            } else if e.is_validation() {
                CwStatus::InvalidArgument
            } else {
                CwStatus::Numerical
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CwStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn real_vector(v: *const f64, d: usize) -> Result<Vector, Failure> {
    Ok(Vector::real(slice(v, d, "v")?)?)
}

fn check_size(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got != want {
        return Err(Error::InvalidArgument(format!("{what}: expected {want}, got {got}")).into());
    }
    Ok(())
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `v` points to `d` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cw_t_norm(v: *const f64, d: usize, out_value: *mut f64) -> CwStatus {
    guard(|| {
        let x = real_vector(v, d)?;
        *out(out_value, "out_value")? = t_norm(&x).value;
        Ok(())
    })
}

/// Orthonormal basis of the span of `k` real columns of length `d`.
///
/// # Safety
/// `columns` points to `d * k` doubles, column-major.
#[no_mangle]
pub unsafe extern "C" fn cw_subspace_from_columns(
    columns: *const f64,
    d: usize,
    k: usize,
    out_subspace: *mut *mut CwSubspace,
) -> CwStatus {
    guard(|| {
        let data = slice(columns, d * k, "columns")?;
        let slot = out(out_subspace, "out_subspace")?;
        let b = orthonormalize_real(&DMatrix::from_column_slice(d, k, data))?;
        *slot = Box::into_raw(Box::new(CwSubspace(b)));
        Ok(())
    })
}

/// As [`cw_subspace_from_columns`] with interleaved complex entries.
///
/// # Safety
/// `columns` points to `2 * d * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_subspace_from_complex_columns(
    columns: *const f64,
    d: usize,
    k: usize,
    out_subspace: *mut *mut CwSubspace,
) -> CwStatus {
    guard(|| {
        let data = slice(columns, 2 * d * k, "columns")?;
        let slot = out(out_subspace, "out_subspace")?;
        let m = DMatrix::from_fn(d, k, |i, j| {
            let at = 2 * (j * d + i);
            C64::new(data[at], data[at + 1])
        });
        *slot = Box::into_raw(Box::new(CwSubspace(orthonormalize(&m)?)));
        Ok(())
    })
}

/// # Safety
/// `subspace` is a live handle; the out-pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn cw_subspace_shape(
    subspace: *const CwSubspace,
    out_d: *mut usize,
    out_k: *mut usize,
) -> CwStatus {
    guard(|| {
        let w = &handle(subspace, "subspace")?.0;
        *out(out_d, "out_d")? = w.ambient();
        *out(out_k, "out_k")? = w.dim();
        Ok(())
    })
}

/// # Safety
/// `subspace` is null or came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cw_subspace_free(subspace: *mut CwSubspace) {
    if !subspace.is_null() {
        drop(Box::from_raw(subspace));
    }
}

/// `‖proj_W v‖₂`.
///
/// # Safety
/// `v` points to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_projection_norm(
    subspace: *const CwSubspace,
    v: *const f64,
    d: usize,
    out_value: *mut f64,
) -> CwStatus {
    guard(|| {
        let w = &handle(subspace, "subspace")?.0;
        let x = real_vector(v, d)?;
        *out(out_value, "out_value")? = projection_norm(w, &x)?;
        Ok(())
    })
}

/// Alternating-maximization lower estimate of the width of the
/// signed-permutation orbit of `v`.
///
/// # Safety
/// `v` points to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_width_altmax(
    subspace: *const CwSubspace,
    v: *const f64,
    d: usize,
    restarts: usize,
    seed: u64,
    out_value: *mut f64,
) -> CwStatus {
    guard(|| {
        let w = &handle(subspace, "subspace")?.0;
        let x = real_vector(v, d)?;
        *out(out_value, "out_value")? = width_altmax(w, &x, restarts, DEFAULT_MAX_ITER, seed)?.value;
        Ok(())
    })
}

/// Exact width of the signed-permutation orbit of `v` (real, `d <= 8`).
///
/// # Safety
/// `v` points to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_width_brute(
    subspace: *const CwSubspace,
    v: *const f64,
    d: usize,
    out_value: *mut f64,
) -> CwStatus {
    guard(|| {
        let w = &handle(subspace, "subspace")?.0;
        let x = real_vector(v, d)?;
        *out(out_value, "out_value")? = width_brute_signed_perm(w, &x)?.value;
        Ok(())
    })
}

/// Unit witness vector for the lower bound, written to `out_v[0..d]`.
///
/// # Safety
/// `out_v` points to `d` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_witness_vector(d: usize, k: usize, out_v: *mut f64) -> CwStatus {
    guard(|| {
        let dst = slice_mut(out_v, d, "out_v")?;
        let w = witness_vector(d, k)?;
        dst.copy_from_slice(&w.vector.re());
        Ok(())
    })
}

/// Largest Gram eigenvalue and largest absolute Gram row sum of `m` real
/// vectors of length `d`; `out_holds` is 1 when the first is at most the
/// second.
///
/// # Safety
/// `vectors` points to `d * m` doubles, one vector per column.
#[no_mangle]
pub unsafe extern "C" fn cw_selberg_check(
    vectors: *const f64,
    d: usize,
    m: usize,
    out_lhs: *mut f64,
    out_rhs: *mut f64,
    out_holds: *mut i32,
) -> CwStatus {
    guard(|| {
        let data = slice(vectors, d * m, "vectors")?;
        let vs = data
            .chunks(d.max(1))
            .take(m)
            .map(Vector::real)
            .collect::<cylwidth::Result<Vec<_>>>()?;
        let c = selberg_check(&vs)?;
        *out(out_lhs, "out_lhs")? = c.lhs;
        *out(out_rhs, "out_rhs")? = c.rhs;
        *out(out_holds, "out_holds")? = i32::from(c.holds);
        Ok(())
    })
}

/// Selects `k` columns of a real `2k × 4k` matrix with large `s_k`.
/// Writes the ascending indices to `out_columns[0..k]`.
///
/// # Safety
/// `matrix` points to `8 k²` doubles, column-major; `out_columns` to `k`
/// writable entries.
#[no_mangle]
pub unsafe extern "C" fn cw_select_columns(
    matrix: *const f64,
    k: usize,
    out_columns: *mut usize,
    out_achieved: *mut f64,
    out_target: *mut f64,
) -> CwStatus {
    guard(|| {
        let data = slice(matrix, 8 * k * k, "matrix")?;
        let cols = slice_mut(out_columns, k, "out_columns")?;
        let sel = select_columns(&DMatrix::from_column_slice(2 * k, 4 * k, data), k)?;
        check_size(sel.columns.len(), k, "selected columns")?;
        cols.copy_from_slice(&sel.columns);
        *out(out_achieved, "out_achieved")? = sel.achieved;
        *out(out_target, "out_target")? = sel.target;
        Ok(())
    })
}

/// Parses a group description (NUL-terminated JSON). The symbolic
/// signed-permutation group is expanded to explicit generators.
///
/// # Safety
/// `json` is a valid C string.
#[no_mangle]
pub unsafe extern "C" fn cw_group_from_json(json: *const c_char, out_group: *mut *mut CwGroup) -> CwStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let slot = out(out_group, "out_group")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::InvalidArgument(format!("json is not UTF-8: {e}")))?;
        let g = GroupPresentation::from_json_str(text)?.to_explicit()?;
        *slot = Box::into_raw(Box::new(CwGroup(g)));
        Ok(())
    })
}

/// # Safety
/// `group` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_group_dimension(group: *const CwGroup, out_d: *mut usize) -> CwStatus {
    guard(|| {
        *out(out_d, "out_d")? = handle(group, "group")?.0.d();
        Ok(())
    })
}

/// # Safety
/// `group` is null or came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cw_group_free(group: *mut CwGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

/// Orbit of the real vector `v` under `group`, at most `max_size` points.
///
/// # Safety
/// `v` points to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_orbit_enumerate(
    group: *const CwGroup,
    v: *const f64,
    d: usize,
    max_size: usize,
    out_orbit: *mut *mut CwOrbit,
) -> CwStatus {
    guard(|| {
        let g = &handle(group, "group")?.0;
        let x = real_vector(v, d)?;
        let slot = out(out_orbit, "out_orbit")?;
        *slot = Box::into_raw(Box::new(CwOrbit(enumerate_orbit(g, &x, max_size)?)));
        Ok(())
    })
}

/// # Safety
/// `orbit` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_orbit_len(orbit: *const CwOrbit, out_len: *mut usize) -> CwStatus {
    guard(|| {
        *out(out_len, "out_len")? = handle(orbit, "orbit")?.0.len();
        Ok(())
    })
}

/// # Safety
/// `orbit` is null or came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cw_orbit_free(orbit: *mut CwOrbit) {
    if !orbit.is_null() {
        drop(Box::from_raw(orbit));
    }
}

/// `max_{x ∈ orbit} ‖proj_W x‖₂`.
///
/// # Safety
/// Both handles are live.
#[no_mangle]
pub unsafe extern "C" fn cw_width_orbit(
    subspace: *const CwSubspace,
    orbit: *const CwOrbit,
    out_value: *mut f64,
) -> CwStatus {
    guard(|| {
        let w = &handle(subspace, "subspace")?.0;
        let o = &handle(orbit, "orbit")?.0;
        *out(out_value, "out_value")? = width_orbit(w, o)?.value;
        Ok(())
    })
}
