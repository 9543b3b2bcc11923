use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;
use std::process::Command;
use std::ptr;

use adversim_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(adversim_last_error()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { adversim_string_free(s) };
    out
}

const CONFIG: &str = r#"
[[experiment]]
id = "single"
horizon = 20
replicates = 3
seed = 5
class = { kind = "finite_table", rows = [[0.25, 0.75]] }
learner = { kind = "ew" }
adversary = { kind = "iid", dist = { kind = "uniform_index", n = 2 } }

[[experiment]]
id = "variance"
horizon = 200
replicates = 4
class = { kind = "linear_ball", dimension = 3 }
learner = { kind = "optimistic_omd" }
adversary = { kind = "constrained", constraint = { kind = "variance", sigma = 0.1 } }
bound = { kind = "variance" }
"#;

#[test]
fn bounds_match_closed_forms() {
    let mut v = 0.0;
    let sigma = [0.1f64; 1000];
    assert_eq!(
        unsafe { adversim_variance_bound(1.0, 1.0, sigma.as_ptr(), sigma.len(), &mut v) },
        AdversimStatus::Ok
    );
    assert!((v - 2.0 * 2f64.sqrt() * 10f64.sqrt()).abs() < 1e-9);
    assert_eq!(
        unsafe { adversim_smoothed_threshold_bound(1000, 0.01, &mut v) },
        AdversimStatus::Ok
    );
    let expect = 2.0 + (2000.0 * (4.0 * 1000f64.ln() + 100f64.ln())).sqrt();
    assert!((v - expect).abs() < 1e-9);
    assert_eq!(
        unsafe { adversim_slow_change_bound(1.0, 1.0, 0.05, 2000, &mut v) },
        AdversimStatus::Ok
    );
    assert!((v - 2.0 * 0.05 * 4000f64.sqrt()).abs() < 1e-9);
    assert_eq!(
        unsafe { adversim_variance_bound_simplex(16, sigma.as_ptr(), sigma.len(), &mut v) },
        AdversimStatus::Ok
    );
    assert!((v - 2.0 * 2f64.sqrt() * (10.0 * 16f64.ln()).sqrt()).abs() < 1e-9);
    assert_eq!(
        unsafe { adversim_slow_change_bound_simplex(8, 0.1, 100, &mut v) },
        AdversimStatus::Ok
    );
    assert!((v - 2.0 * 0.1 * (200.0 * 8f64.ln()).sqrt()).abs() < 1e-9);
}

#[test]
fn invalid_arguments_set_the_message() {
    let mut v = 0.0;
    assert_eq!(
        unsafe { adversim_smoothed_threshold_bound(1, 0.5, &mut v) },
        AdversimStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { adversim_variance_bound(1.0, 1.0, ptr::null(), 3, &mut v) },
        AdversimStatus::NullPointer
    );
    assert!(last_error().contains("sigma"));
}

#[test]
fn ew_step_in_place() {
    let mut w = [0.5, 0.5];
    let l = [1.0, 0.0];
    let st = unsafe { adversim_ew_step(w.as_ptr(), l.as_ptr(), 2, 2f64.ln(), w.as_mut_ptr()) };
    assert_eq!(st, AdversimStatus::Ok);
    assert!((w[0] - 1.0 / 3.0).abs() < 1e-12 && (w[1] - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(
        unsafe { adversim_ew_step(w.as_ptr(), l.as_ptr(), 0, 1.0, w.as_mut_ptr()) },
        AdversimStatus::InvalidArgument
    );
}

#[test]
fn experiment_lifecycle() {
    let toml = CString::new(CONFIG).unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { adversim_experiment_from_toml(toml.as_ptr(), ptr::null(), &mut exp) },
        AdversimStatus::Ok
    );
    let mut len = 0usize;
    assert_eq!(
        unsafe { adversim_experiment_final_regrets(exp, ptr::null_mut(), 0, &mut len) },
        AdversimStatus::NotRun
    );
    assert_eq!(unsafe { adversim_experiment_run(exp) }, AdversimStatus::Ok);
    let mut regrets = [f64::NAN; 3];
    assert_eq!(
        unsafe { adversim_experiment_final_regrets(exp, regrets.as_mut_ptr(), 3, &mut len) },
        AdversimStatus::Ok
    );
    assert_eq!(len, 3);
    assert!(regrets.iter().all(|&r| r == 0.0));
    let mut csv = ptr::null_mut();
    assert_eq!(
        unsafe { adversim_experiment_csv(exp, &mut csv) },
        AdversimStatus::Ok
    );
    let csv = take(csv);
    assert!(csv.starts_with("replicate,t,learner_loss,cum_regret,bound_value\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 20);
    let mut pass = -1;
    assert_eq!(
        unsafe { adversim_experiment_verdict(exp, &mut pass) },
        AdversimStatus::Runtime
    );
    unsafe { adversim_experiment_free(exp) };

    let id = CString::new("variance").unwrap();
    assert_eq!(
        unsafe { adversim_experiment_from_toml(toml.as_ptr(), id.as_ptr(), &mut exp) },
        AdversimStatus::Ok
    );
    assert_eq!(
        unsafe { adversim_experiment_set_seed(exp, 11) },
        AdversimStatus::Ok
    );
    assert_eq!(unsafe { adversim_experiment_run(exp) }, AdversimStatus::Ok);
    assert_eq!(
        unsafe { adversim_experiment_verdict(exp, &mut pass) },
        AdversimStatus::Ok
    );
    assert_eq!(pass, 1);
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { adversim_experiment_summary_json(exp, &mut json) },
        AdversimStatus::Ok
    );
    let json: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(json["master_seed"], 11);
    assert_eq!(json["verdict"], "pass");
    unsafe { adversim_experiment_free(exp) };
    unsafe { adversim_experiment_free(ptr::null_mut()) };
}

#[test]
fn config_errors_are_reported() {
    let bad = CString::new("[[experiment]]\nid = 1\n").unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { adversim_experiment_from_toml(bad.as_ptr(), ptr::null(), &mut exp) },
        AdversimStatus::Config
    );
    assert!(last_error().contains("line 2"), "{}", last_error());
    assert!(exp.is_null());
    let toml = CString::new(CONFIG).unwrap();
    let id = CString::new("missing").unwrap();
    assert_eq!(
        unsafe { adversim_experiment_from_toml(toml.as_ptr(), id.as_ptr(), &mut exp) },
        AdversimStatus::Config
    );
}

#[test]
fn verify_suite_round_trip() {
    let name = CString::new("prop4").unwrap();
    let (mut out, mut pass) = (ptr::null_mut(), -1);
    assert_eq!(
        unsafe { adversim_verify_suite(name.as_ptr(), 1, &mut out, &mut pass) },
        AdversimStatus::Ok
    );
    assert_eq!(pass, 1);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["suite"], "prop4");
    let unknown = CString::new("prop9").unwrap();
    assert_eq!(
        unsafe { adversim_verify_suite(unknown.as_ptr(), 1, &mut out, &mut pass) },
        AdversimStatus::InvalidArgument
    );
}

#[test]
fn header_declares_the_interface_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/adversim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "adversim_last_error",
        "adversim_string_free",
        "adversim_variance_bound",
        "adversim_smoothed_threshold_bound",
        "adversim_ew_step",
        "adversim_experiment_from_toml",
        "adversim_experiment_run",
        "adversim_experiment_free",
        "adversim_verify_suite",
        "typedef struct AdversimExperiment AdversimExperiment;",
    ] {
        assert!(text.contains(f), "{f} missing from the header");
    }
    // syntax check with the system C compiler when one is present
    let src = std::env::temp_dir().join(format!("adversim_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"adversim.h\"\nint main(void) { return (int)ADVERSIM_STATUS_OK; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status();
    let _ = std::fs::remove_file(&src);
    if let Ok(status) = status {
        assert!(status.success(), "header does not compile");
    }
}
