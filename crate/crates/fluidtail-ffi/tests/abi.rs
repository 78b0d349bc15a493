use fluidtail_ffi::*;
use std::ffi::CStr;
use std::ptr;

fn params(c: u32, l: f64, m: f64, r: f64) -> *mut FtParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ft_params_new(c, l, m, r, &mut p) }, FtStatus::Ok);
    p
}

#[test]
fn analyze_round_trip() {
    let p = params(1, 1.0, 3.0, 1.0);
    let mut rep = ptr::null_mut();
    unsafe {
        assert_eq!(ft_analyze(p, 200, &mut rep), FtStatus::Ok);
        let (mut case, mut a, mut pref, mut pw) = (0, 0.0, 0.0, 1.0);
        assert_eq!(ft_report_case(rep, &mut case), FtStatus::Ok);
        assert_eq!(ft_report_alpha_star(rep, &mut a), FtStatus::Ok);
        assert_eq!(ft_report_prefactor(rep, &mut pref), FtStatus::Ok);
        assert_eq!(ft_report_power(rep, &mut pw), FtStatus::Ok);
        assert_eq!(case, 1);
        assert!((a - 0.5).abs() < 1e-10);
        assert!((pref - 1.0 / 12.0).abs() < 1e-8);
        assert_eq!(pw, 0.0);

        let mut len = 0;
        assert_eq!(ft_report_boundary(rep, ptr::null_mut(), 0, &mut len), FtStatus::BufferTooSmall);
        assert_eq!(len, 1);
        let mut buf = [0.0; 1];
        assert_eq!(ft_report_boundary(rep, buf.as_mut_ptr(), 1, &mut len), FtStatus::Ok);
        assert!((buf[0] - 1.0 / 3.0).abs() < 1e-10);

        let mut s = 0;
        assert_eq!(ft_is_stable(p, &mut s), FtStatus::Ok);
        assert_eq!(s, 1);
        let mut x = 0.0;
        assert_eq!(ft_phase_probability(p, 0, &mut x), FtStatus::Ok);
        assert!((x - 2.0 / 3.0).abs() < 1e-12);
        ft_report_free(rep);
        ft_params_free(p);
    }
}

#[test]
fn error_codes() {
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(ft_params_new(0, 1.0, 1.0, 1.0, &mut p), FtStatus::InvalidParam);
        assert!(p.is_null());
        assert!(!ft_last_error().is_null());
        assert_eq!(ft_params_new(1, 3.0, 1.0, 1.0, &mut p), FtStatus::UnstableChain);
        let msg = CStr::from_ptr(ft_last_error()).to_str().unwrap();
        assert!(msg.contains("ergodic"));
        assert_eq!(ft_params_new(1, 1.0, 3.0, 1.0, ptr::null_mut()), FtStatus::NullPointer);

        let q = params(1, 1.0, 1.5, 1.0);
        let mut rep = ptr::null_mut();
        assert_eq!(ft_analyze(q, 100, &mut rep), FtStatus::UnstableFluid);
        assert!(rep.is_null());
        let mut s = 7;
        assert_eq!(ft_is_stable(q, &mut s), FtStatus::Ok);
        assert_eq!(s, 0);
        ft_params_free(q);

        let mut case = 0;
        assert_eq!(ft_report_case(ptr::null(), &mut case), FtStatus::NullPointer);
        ft_params_free(ptr::null_mut());
        ft_report_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ft_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fluidtail.h")).unwrap();
    for name in ["ft_params_new", "ft_analyze", "ft_report_free", "ft_last_error", "ft_report_alpha_star", "ft_report_phase_ratio", "FT_STATUS_OK", "typedef struct FtReport"] {
        assert!(h.contains(name), "{name} missing from header");
    }
}
