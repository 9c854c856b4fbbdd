//! Exercises the C ABI from Rust: handle lifecycle, out-pointer results,
//! error codes, and the last-error message.

use std::os::raw::c_char;
use std::ptr;

use hillband_ffi::*;

fn new_mathieu(n_gaps: usize) -> *mut hb_operator {
    let cos = [0.0, 2.0];
    let mut handle: *mut hb_operator = ptr::null_mut();
    let status = unsafe {
        hb_operator_new_fourier(
            cos.as_ptr(),
            cos.len(),
            ptr::null(),
            0,
            n_gaps,
            1,
            true,
            &mut handle,
        )
    };
    assert_eq!(status, HbStatus::HB_OK);
    assert!(!handle.is_null());
    handle
}

#[test]
fn free_operator_discriminant_is_cosine() {
    let mut handle: *mut hb_operator = ptr::null_mut();
    let status = unsafe {
        hb_operator_new_fourier(ptr::null(), 0, ptr::null(), 0, 4, 1, false, &mut handle)
    };
    assert_eq!(status, HbStatus::HB_OK);
    let (mut re, mut im) = (0.0, 0.0);
    let status = unsafe { hb_discriminant(handle, 2.0, 0.5, &mut re, &mut im) };
    assert_eq!(status, HbStatus::HB_OK);
    let expect = hillband::C64::new(2.0, 0.5).cos();
    assert!((re - expect.re).abs() < 1e-10 && (im - expect.im).abs() < 1e-10);
    let (mut kre, mut kim) = (0.0, 0.0);
    let status = unsafe { hb_quasimomentum(handle, 2.0, 0.5, &mut kre, &mut kim) };
    assert_eq!(status, HbStatus::HB_OK);
    assert!((kre - 2.0).abs() < 1e-10 && (kim - 0.5).abs() < 1e-10);
    unsafe { hb_operator_free(handle) };
}

#[test]
fn mathieu_gap_queries() {
    let handle = new_mathieu(6);
    let mut n = 0usize;
    assert_eq!(unsafe { hb_operator_n_gaps(handle, &mut n) }, HbStatus::HB_OK);
    assert_eq!(n, 6);

    let (mut em, mut ep, mut km, mut kp) = (0.0, 0.0, 0.0, 0.0);
    let status = unsafe { hb_operator_gap_edges(handle, 1, &mut em, &mut ep, &mut km, &mut kp) };
    assert_eq!(status, HbStatus::HB_OK);
    assert!(em < ep && km < kp && km > 0.0);
    assert!((km * km - em).abs() < 1e-9 && (kp * kp - ep).abs() < 1e-9);

    let (mut h, mut mass, mut degenerate) = (0.0, 0.0, true);
    let status = unsafe { hb_operator_gap_comb(handle, 1, &mut h, &mut mass, &mut degenerate) };
    assert_eq!(status, HbStatus::HB_OK);
    assert!(h > 0.0 && mass > 0.0 && !degenerate);
    // gap length never exceeds twice the slit height
    assert!(kp - km <= 2.0 * h + 1e-6);

    // out-of-range index
    let status = unsafe { hb_operator_gap_edges(handle, 7, &mut em, &mut ep, &mut km, &mut kp) };
    assert_eq!(status, HbStatus::HB_INVALID_ARGUMENT);
    unsafe { hb_operator_free(handle) };
}

#[test]
fn weyl_functions_are_conjugate_pair() {
    let handle = new_mathieu(6);
    let (mut pr, mut pi, mut mr, mut mi) = (0.0, 0.0, 0.0, 0.0);
    let status = unsafe { hb_weyl_m(handle, 4.0, 0.7, &mut pr, &mut pi, &mut mr, &mut mi) };
    assert_eq!(status, HbStatus::HB_OK);
    // M+ + M- = 2 beta / phi(1) is finite and M+ != M- off the spectrum
    assert!(((pr - mr).abs() + (pi - mi).abs()) > 1e-6);
    unsafe { hb_operator_free(handle) };
}

#[test]
fn distribution_handle_reports_riccati_constants() {
    let p_cos = [0.0, 0.3];
    let mut handle: *mut hb_operator = ptr::null_mut();
    let status = unsafe {
        hb_operator_new_distribution(p_cos.as_ptr(), p_cos.len(), ptr::null(), 0, 4, &mut handle)
    };
    assert_eq!(status, HbStatus::HB_OK);
    let (mut c, mut nq) = (0.0, 0.0);
    assert_eq!(
        unsafe { hb_riccati_constants(handle, &mut c, &mut nq) },
        HbStatus::HB_OK
    );
    assert!(nq > 0.0);
    unsafe { hb_operator_free(handle) };

    // smooth handles refuse the query
    let smooth = new_mathieu(4);
    assert_eq!(
        unsafe { hb_riccati_constants(smooth, &mut c, &mut nq) },
        HbStatus::HB_CAPABILITY
    );
    unsafe { hb_operator_free(smooth) };
}

#[test]
fn null_and_error_reporting() {
    let mut out = 0usize;
    assert_eq!(
        unsafe { hb_operator_n_gaps(ptr::null(), &mut out) },
        HbStatus::HB_NULL_POINTER
    );
    let mut buf = [0 as c_char; 128];
    let len = unsafe { hb_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(len > 0);
    let msg = unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned();
    assert!(msg.contains("null"), "unexpected message: {msg}");

    let mut handle: *mut hb_operator = ptr::null_mut();
    let status = unsafe {
        hb_operator_new_fourier(ptr::null(), 0, ptr::null(), 0, 0, 1, false, &mut handle)
    };
    assert_eq!(status, HbStatus::HB_INVALID_ARGUMENT);
}

#[test]
fn quasimomentum_on_cut_is_domain_error() {
    let handle = new_mathieu(6);
    let (mut em, mut ep, mut km, mut kp) = (0.0, 0.0, 0.0, 0.0);
    unsafe { hb_operator_gap_edges(handle, 1, &mut em, &mut ep, &mut km, &mut kp) };
    let mid = 0.5 * (km + kp);
    let (mut re, mut im) = (0.0, 0.0);
    let status = unsafe { hb_quasimomentum(handle, mid, 0.0, &mut re, &mut im) };
    assert_eq!(status, HbStatus::HB_DOMAIN);
    unsafe { hb_operator_free(handle) };
}
