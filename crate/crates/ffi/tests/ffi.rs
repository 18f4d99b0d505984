use std::ffi::{c_char, CString};
use std::ptr;

use thz_noma_ffi::*;

const SCENARIO: &str = r#"{
  "name": "ffi",
  "radius_m": 60.0,
  "absorption_per_m": 0.05,
  "a1": 0.33,
  "tau1": 3.0,
  "tau2": 0.5,
  "schemes": [{ "kind": "random" }, { "kind": "proposed" }],
  "methods": ["simplified", "montecarlo"],
  "trials": 4000,
  "seed": 5,
  "sweep": { "variable": "k", "grid": [0.03, 0.05] }
}"#;

fn last_error() -> String {
    let n = thz_last_error_length();
    let mut buf = vec![0u8; n];
    let need = unsafe { thz_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
    assert_eq!(need, n);
    if n == 0 {
        return String::new();
    }
    buf.pop();
    String::from_utf8(buf).unwrap()
}

fn scenario(json: &str) -> *mut ThzScenario {
    let text = CString::new(json).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { thz_scenario_from_json(text.as_ptr(), &mut s) }, ThzStatus::Ok, "{}", last_error());
    s
}

fn csv(sweep: *const ThzSweep) -> String {
    let mut need = 0usize;
    assert_eq!(unsafe { thz_sweep_csv(sweep, ptr::null_mut(), 0, &mut need) }, ThzStatus::Range);
    let mut buf = vec![0u8; need];
    assert_eq!(unsafe { thz_sweep_csv(sweep, buf.as_mut_ptr().cast(), buf.len(), &mut need) }, ThzStatus::Ok);
    buf.pop();
    String::from_utf8(buf).unwrap()
}

#[test]
fn thresholds_match_closed_form() {
    let mut v = 0.0;
    assert_eq!(unsafe { thz_threshold_near(0.33, 0.05, &mut v) }, ThzStatus::Ok);
    assert!((v - (0.67f64 / 0.34).ln() / 0.05).abs() < 1e-12);
    assert_eq!(unsafe { thz_threshold_far(0.33, 0.05, &mut v) }, ThzStatus::Ok);
    assert!((v - (0.33f64 * 0.33 / 0.34).ln_1p() / 0.05).abs() < 1e-12);
    assert_eq!(thz_last_error_length(), 0);
}

#[test]
fn domain_and_null_errors_set_message() {
    let mut v = 0.0;
    assert_eq!(unsafe { thz_threshold_near(0.5, 0.05, &mut v) }, ThzStatus::Domain);
    assert!(last_error().contains("power fraction"));
    assert_eq!(unsafe { thz_threshold_far(0.3, -1.0, &mut v) }, ThzStatus::Domain);
    assert_eq!(unsafe { thz_threshold_far(0.3, 0.05, ptr::null_mut()) }, ThzStatus::Null);
    assert_eq!(unsafe { thz_scenario_from_json(ptr::null(), &mut ptr::null_mut()) }, ThzStatus::Null);

    let small = [0 as c_char; 4];
    let need = unsafe { thz_last_error_message(small.as_ptr() as *mut c_char, small.len()) };
    assert!(need > small.len());
    assert_eq!(small, [0; 4]);
}

#[test]
fn bad_configs_report_config_status() {
    let mut s = ptr::null_mut();
    let bad = CString::new("{ \"radius_m\": 1 ").unwrap();
    assert_eq!(unsafe { thz_scenario_from_json(bad.as_ptr(), &mut s) }, ThzStatus::Config);
    assert!(s.is_null());
    assert!(!last_error().is_empty());
    let name = CString::new("fig9").unwrap();
    assert_eq!(unsafe { thz_scenario_preset(name.as_ptr(), &mut s) }, ThzStatus::Config);
    let invalid = SCENARIO.replace("\"a1\": 0.33", "\"a1\": 0.6");
    let text = CString::new(invalid).unwrap();
    assert_eq!(unsafe { thz_scenario_from_json(text.as_ptr(), &mut s) }, ThzStatus::Config);
}

#[test]
fn presets_load() {
    for p in ["fig2", "fig3", "fig4"] {
        let name = CString::new(p).unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { thz_scenario_preset(name.as_ptr(), &mut s) }, ThzStatus::Ok);
        assert_eq!(unsafe { thz_scenario_set_trials(s, 0) }, ThzStatus::Domain);
        unsafe { thz_scenario_free(s) };
    }
}

#[test]
fn sweep_rows_and_csv_are_reproducible() {
    let s = scenario(SCENARIO);
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(thz_sweep_run(s, &mut a), ThzStatus::Ok);
        assert_eq!(thz_sweep_run(s, &mut b), ThzStatus::Ok);
        // 2 points x 2 schemes x 2 users x 2 modes x 2 methods
        assert_eq!(thz_sweep_len(a), 32);
        assert_eq!(thz_sweep_len(ptr::null()), 0);
    }
    let text = csv(a);
    assert_eq!(text, csv(b));
    assert!(text.starts_with("sweep_var,sweep_value,scheme,user,mode,method,estimate,stderr,status\n"));
    assert_eq!(text.lines().count(), 33);

    let mut row = ThzRow { sweep_value: 0.0, estimate: 0.0, std_error: 0.0, user: 0, mode: 0, ok: 0 };
    unsafe {
        assert_eq!(thz_sweep_row(a, 0, &mut row), ThzStatus::Ok);
        assert_eq!(row.sweep_value, 0.03);
        assert!((0.0..=1.0).contains(&row.estimate));
        assert!(row.std_error.is_nan());
        assert_eq!((row.user, row.mode, row.ok), (1, 1, 1));
        assert_eq!(thz_sweep_row(a, 32, &mut row), ThzStatus::Range);
        assert!(last_error().contains("out of range"));

        let mut buf = [0 as c_char; 64];
        let mut need = 0;
        assert_eq!(thz_sweep_row_labels(a, 1, buf.as_mut_ptr(), buf.len(), &mut need), ThzStatus::Ok);
        let label = std::ffi::CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert_eq!(label, "random,montecarlo,ok");
        assert_eq!(need, label.len() + 1);
    }

    unsafe {
        assert_eq!(thz_scenario_set_seed(s, 6), ThzStatus::Ok);
        let mut c = ptr::null_mut();
        assert_eq!(thz_sweep_run(s, &mut c), ThzStatus::Ok);
        assert_ne!(csv(c), text);
        thz_sweep_free(a);
        thz_sweep_free(b);
        thz_sweep_free(c);
        thz_scenario_free(s);
        thz_sweep_free(ptr::null_mut());
        thz_scenario_free(ptr::null_mut());
    }
}
