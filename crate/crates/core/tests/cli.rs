mod common;

use std::fs;

use common::nblab;
use serde_json::Value;

const STABLE: &str = r#"{"dimension":1,"s":0.5,"family":"stable"}"#;

#[test]
fn barrier_scenario_reports_slope_near_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("barrier.json");
    let text = format!(
        r#"{{"name":"barrier-stable","experiment":"barrier","kernel":{STABLE},
            "params":{{"h":0.015625,"r_list":[4,8,16]}}}}"#
    );
    fs::write(&sc, text).unwrap();
    assert_eq!(nblab(&["run", sc.to_str().unwrap()], dir.path()), 0);
    let out = dir.path().join("barrier-stable");
    let rep: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["schema_version"], 1);
    let slope = rep["criteria"].as_array().unwrap().iter().find(|c| c["name"] == "slope_fit").unwrap();
    assert_eq!(slope["pass"], true);
    assert!((slope["value"].as_f64().unwrap() - 0.5).abs() < 0.03);
    assert!(out.join("results.csv").exists() && out.join("plot.svg").exists());
}

#[test]
fn kernel_may_be_a_file_next_to_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k.json"), STABLE).unwrap();
    let sc = dir.path().join("s.json");
    fs::write(&sc, r#"{"name":"sym","experiment":"symbol","kernel":"k.json","params":{"power_law_tol":1e-3}}"#).unwrap();
    assert_eq!(nblab(&["run", sc.to_str().unwrap()], dir.path()), 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"name\": \"x\", ").unwrap();
    assert_eq!(nblab(&["run", bad.to_str().unwrap()], dir.path()), 2, "malformed JSON");

    let few = ["mc", "--kernel", STABLE, "--paths", "10"];
    assert_eq!(nblab(&few, dir.path()), 2, "too few paths");

    assert_eq!(nblab(&["reproduce-all", "--bogus"], dir.path()), 2, "unknown flag");

    // A divergent modulus is a failed criterion, not an error.
    let dini = r#"{"modulus":{"family":"log_power","p":2.0},"s":0.5,"expect_finite":true}"#;
    assert_eq!(nblab(&["dini", "--params", dini], dir.path()), 1);

    // Asymmetric atoms are rejected by the kernel module.
    let asym = r#"{"dimension":1,"s":0.5,"family":"stable","atoms":[{"loc":[1.0],"mass":1.0}]}"#;
    assert_eq!(nblab(&["symbol", "--kernel", asym], dir.path()), 3);

    let ok = r#"{"modulus":{"family":"power","alpha":0.5},"s":0.5,"expected_value":4.0}"#;
    assert_eq!(nblab(&["dini", "--params", ok], dir.path()), 0);
}

#[test]
fn solve_then_boundary_check_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let k2 = r#"{"dimension":2,"s":0.5,"family":"stable","params":{"c":1.0}}"#;
    let domain = r#"{"type":"epigraph_ball","coeff":1.0,"exponent":1.5,"radius":0.9,"lift":0.8}"#;
    let params = format!(r#"{{"domain":{domain},"grid":{{"lo":[-1,-0.1],"hi":[1,1.9],"cells":64}}}}"#);
    assert_eq!(nblab(&["solve", "--kernel", k2, "--params", &params, "--name", "u"], dir.path()), 0);
    let geo = dir.path().join("domain.json");
    fs::write(&geo, domain).unwrap();
    let csv = dir.path().join("u").join("results.csv");
    let code = nblab(
        &[
            "boundary-check",
            "--kernel",
            k2,
            "--solution",
            csv.to_str().unwrap(),
            "--geometry",
            geo.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("boundary-check/report.json")).unwrap()).unwrap();
    let decay = rep["criteria"].as_array().unwrap().iter().find(|c| c["name"] == "decay_s_hat").unwrap();
    assert!((decay["value"].as_f64().unwrap() - 0.45).abs() < 0.02);
}

#[test]
fn scenarios_run_in_parallel_with_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["one", "two"] {
        let f = dir.path().join(format!("{name}.json"));
        let text = format!(
            r#"{{"name":"{name}","experiment":"mc","kernel":{STABLE},
                "params":{{"x":[0.5],"paths":300,"seed":4,"delta":0.015625,"dt":0.001}}}}"#
        );
        fs::write(&f, text).unwrap();
        files.push(f);
    }
    let args: Vec<&str> = ["--jobs", "2", "run"].into_iter().chain(files.iter().map(|f| f.to_str().unwrap())).collect();
    assert_eq!(nblab(&args, dir.path()), 0);
    let a = fs::read(dir.path().join("one/results.csv")).unwrap();
    let b = fs::read(dir.path().join("two/results.csv")).unwrap();
    assert_eq!(a, b);
}
