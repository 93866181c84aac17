use std::ffi::{CStr, CString};
use std::ptr;

use cylwidth_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cw_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn t_norm_and_projection() {
    let v = [3.0, -4.0];
    let mut t = 0.0;
    assert_eq!(unsafe { cw_t_norm(v.as_ptr(), 2, &mut t) }, CwStatus::Ok);
    let direct = cylwidth::tnorm::t_norm(&cylwidth::Vector::real(&v).unwrap()).value;
    assert_eq!(t, direct);

    let cols = [1.0, 1.0];
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { cw_subspace_from_columns(cols.as_ptr(), 2, 1, &mut w) }, CwStatus::Ok);
    let (mut d, mut k) = (0, 0);
    assert_eq!(unsafe { cw_subspace_shape(w, &mut d, &mut k) }, CwStatus::Ok);
    assert_eq!((d, k), (2, 1));
    let mut p = 0.0;
    assert_eq!(unsafe { cw_projection_norm(w, v.as_ptr(), 2, &mut p) }, CwStatus::Ok);
    assert!((p - 1.0 / 2f64.sqrt()).abs() < 1e-12);

    // Width of the orbit of (3,-4) on the diagonal line: (4+3)/√2.
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { cw_width_brute(w, v.as_ptr(), 2, &mut b) }, CwStatus::Ok);
    assert_eq!(unsafe { cw_width_altmax(w, v.as_ptr(), 2, 5, 1, &mut a) }, CwStatus::Ok);
    assert!((b - 7.0 / 2f64.sqrt()).abs() < 1e-12);
    assert!((a - b).abs() < 1e-9);
    unsafe { cw_subspace_free(w) };
}

#[test]
fn complex_columns() {
    // Single column (1, i)/√2 spans a complex line; e_1 projects to 1/√2.
    let cols = [1.0, 0.0, 0.0, 1.0];
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { cw_subspace_from_complex_columns(cols.as_ptr(), 2, 1, &mut w) }, CwStatus::Ok);
    let mut p = 0.0;
    let e1 = [1.0, 0.0];
    assert_eq!(unsafe { cw_projection_norm(w, e1.as_ptr(), 2, &mut p) }, CwStatus::Ok);
    assert!((p - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    unsafe { cw_subspace_free(w) };
}

#[test]
fn errors_and_null_handles() {
    let mut t = 0.0;
    assert_eq!(unsafe { cw_t_norm(ptr::null(), 3, &mut t) }, CwStatus::NullPointer);
    assert!(last_error().contains("null"));
    let bad = [1.0, f64::NAN];
    assert_eq!(unsafe { cw_t_norm(bad.as_ptr(), 2, &mut t) }, CwStatus::InvalidArgument);
    assert!(last_error().contains("non-finite"));
    let v = [1.0, 0.0];
    assert_eq!(unsafe { cw_t_norm(v.as_ptr(), 2, ptr::null_mut()) }, CwStatus::NullPointer);
    assert_eq!(
        unsafe { cw_projection_norm(ptr::null(), v.as_ptr(), 2, &mut t) },
        CwStatus::NullPointer
    );
    // Rank deficient columns.
    let cols = [1.0, 0.0, 2.0, 0.0];
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { cw_subspace_from_columns(cols.as_ptr(), 2, 2, &mut w) }, CwStatus::InvalidArgument);
    assert!(w.is_null());
    unsafe {
        cw_subspace_free(ptr::null_mut());
        cw_group_free(ptr::null_mut());
        cw_orbit_free(ptr::null_mut());
    }
}

#[test]
fn group_orbit_width() {
    let json = CString::new(r#"{"kind": "signed_permutations", "d": 3}"#).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { cw_group_from_json(json.as_ptr(), &mut g) }, CwStatus::Ok);
    let mut d = 0;
    assert_eq!(unsafe { cw_group_dimension(g, &mut d) }, CwStatus::Ok);
    assert_eq!(d, 3);
    let s = 14f64.sqrt();
    let v = [1.0 / s, 2.0 / s, 3.0 / s];
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { cw_orbit_enumerate(g, v.as_ptr(), 3, 1000, &mut o) }, CwStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { cw_orbit_len(o, &mut n) }, CwStatus::Ok);
    assert_eq!(n, 48);
    let mut small = ptr::null_mut();
    assert_eq!(unsafe { cw_orbit_enumerate(g, v.as_ptr(), 3, 10, &mut small) }, CwStatus::InvalidArgument);

    let cols = [1.0, 1.0, 1.0];
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { cw_subspace_from_columns(cols.as_ptr(), 3, 1, &mut w) }, CwStatus::Ok);
    let (mut wo, mut wb) = (0.0, 0.0);
    assert_eq!(unsafe { cw_width_orbit(w, o, &mut wo) }, CwStatus::Ok);
    assert_eq!(unsafe { cw_width_brute(w, v.as_ptr(), 3, &mut wb) }, CwStatus::Ok);
    assert!((wo - 6.0 / (s * 3f64.sqrt())).abs() < 1e-12);
    assert!((wo - wb).abs() < 1e-12);
    unsafe {
        cw_subspace_free(w);
        cw_orbit_free(o);
        cw_group_free(g);
    }

    let bad = CString::new("{\"kind\": \"explicit\",\n\"d\": 2,\n\"generators\": [[[1,0]\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { cw_group_from_json(bad.as_ptr(), &mut g) }, CwStatus::InvalidArgument);
    assert!(last_error().contains("line"), "{}", last_error());
}

#[test]
fn witness_selberg_and_selection() {
    let mut buf = [0.0; 8];
    assert_eq!(unsafe { cw_witness_vector(8, 2, buf.as_mut_ptr()) }, CwStatus::Ok);
    let direct = cylwidth::lowerbound::witness_vector(8, 2).unwrap().vector.re();
    assert_eq!(buf.to_vec(), direct);

    // Two orthonormal vectors: Gram = I, both sides 1.
    let vs = [1.0, 0.0, 0.0, 1.0];
    let (mut lhs, mut rhs, mut holds) = (0.0, 0.0, 0);
    assert_eq!(
        unsafe { cw_selberg_check(vs.as_ptr(), 2, 2, &mut lhs, &mut rhs, &mut holds) },
        CwStatus::Ok
    );
    assert!((lhs - 1.0).abs() < 1e-12 && (rhs - 1.0).abs() < 1e-12 && holds == 1);

    // [I_2 | I_2], k = 1.
    let m = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
    let mut cols = [usize::MAX];
    let (mut achieved, mut target) = (0.0, 0.0);
    assert_eq!(
        unsafe { cw_select_columns(m.as_ptr(), 1, cols.as_mut_ptr(), &mut achieved, &mut target) },
        CwStatus::Ok
    );
    assert_eq!(cols, [0]);
    assert!((achieved - 1.0).abs() < 1e-12);
    assert!((target - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(cw_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_current() {
    let header = include_str!("../include/cylwidth.h");
    for name in [
        "cw_t_norm",
        "cw_subspace_from_columns",
        "cw_subspace_from_complex_columns",
        "cw_projection_norm",
        "cw_width_altmax",
        "cw_width_brute",
        "cw_witness_vector",
        "cw_selberg_check",
        "cw_select_columns",
        "cw_group_from_json",
        "cw_orbit_enumerate",
        "cw_width_orbit",
        "cw_last_error",
        "CW_STATUS_GUARANTEE_MISSED",
        "typedef struct CwSubspace CwSubspace",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
