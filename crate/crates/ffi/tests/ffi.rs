use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use ddlink::*;

fn last_error() -> String {
    let p = ddl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn config(json: &str) -> Result<*mut DdlConfig, DdlStatus> {
    let text = CString::new(json).unwrap();
    let mut cfg = ptr::null_mut();
    match unsafe { ddl_config_from_json(text.as_ptr(), &mut cfg) } {
        DdlStatus::Ok => Ok(cfg),
        s => Err(s),
    }
}

#[test]
fn sweep_round_trip_matches_the_core_engine() {
    let cfg = config(r#"{"trials": 30, "rho_t_db": [0, 10]}"#).unwrap();
    let p0 = [0.5, 0.8];
    let (mut one, mut four) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(ddl_run_sweep(cfg, p0.as_ptr(), p0.len(), 1, &mut one), DdlStatus::Ok);
        assert_eq!(ddl_run_sweep(cfg, p0.as_ptr(), p0.len(), 4, &mut four), DdlStatus::Ok);

        let mut len = 0;
        assert_eq!(ddl_sweep_len(one, &mut len), DdlStatus::Ok);
        assert_eq!(len, 4);

        let mut pt = DdlSweepPoint::default();
        assert_eq!(ddl_sweep_point(one, 3, &mut pt), DdlStatus::Ok);
        assert_eq!((pt.p0, pt.rho_t_db, pt.trials), (0.8, 10.0, 30));
        assert!((pt.se_hm_ideal_mean - pt.se_hm_real_mean - pt.gap_mean).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&pt.outage_real));

        assert_eq!(ddl_sweep_point(one, 4, &mut pt), DdlStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ddl_sweep_hm_csv(one, &mut a), DdlStatus::Ok);
        assert_eq!(ddl_sweep_hm_csv(four, &mut b), DdlStatus::Ok);
        let (sa, sb) = (CStr::from_ptr(a).to_owned(), CStr::from_ptr(b).to_owned());
        assert_eq!(sa, sb);
        assert!(sa.to_str().unwrap().starts_with("rho_t_db,p0,se_hm_real_mean,"));
        ddl_string_free(a);
        ddl_string_free(b);

        ddl_sweep_free(one);
        ddl_sweep_free(four);
        ddl_config_free(cfg);
    }
}

#[test]
fn config_errors_are_reported() {
    assert_eq!(config(r#"{"U": 20, "M": 16}"#).unwrap_err(), DdlStatus::Config);
    assert!(last_error().contains('U'));
    assert_eq!(config("{oops").unwrap_err(), DdlStatus::Config);
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ddl_config_from_json(ptr::null(), &mut cfg) }, DdlStatus::NullPointer);
    assert_eq!(unsafe { ddl_config_default(ptr::null_mut()) }, DdlStatus::NullPointer);
}

#[test]
fn config_setters_and_json() {
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(ddl_config_default(&mut cfg), DdlStatus::Ok);
        assert_eq!(ddl_config_set_trials(cfg, 0), DdlStatus::Config);
        assert_eq!(ddl_config_set_trials(cfg, 12), DdlStatus::Ok);
        assert_eq!(ddl_config_set_seed(cfg, 99), DdlStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(ddl_config_to_json(cfg, &mut json), DdlStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        ddl_string_free(json);
        assert!(text.contains("\"trials\": 12"));
        assert!(text.contains("\"master_seed\": 99"));
        let again = config(&text).unwrap();
        ddl_config_free(again);
        ddl_config_free(cfg);
        ddl_config_free(ptr::null_mut());
    }
}

#[test]
fn scalar_helpers() {
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(ddl_subpath_ratio(0, 0.0, 16, &mut re, &mut im), DdlStatus::Ok);
        assert_eq!((re, im), (1.0, 0.0));
        assert_eq!(ddl_subpath_ratio(0, 0.5, 0, &mut re, &mut im), DdlStatus::InvalidArgument);

        let mut g = 0.0;
        assert_eq!(ddl_hm_snr(0.64, 0.0, 0.16, 0.5, 10.0, &mut g), DdlStatus::Ok);
        assert!((g - 3.2 / 3.36).abs() < 1e-12);
        assert_eq!(ddl_hm_snr(0.0, 0.0, 0.0, 0.5, 10.0, &mut g), DdlStatus::Numeric);
    }
    assert_eq!(ddl_spectral_efficiency(1.0), 1.0);
    let v = unsafe { CStr::from_ptr(ddl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/ddlink.h");
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success());
}
