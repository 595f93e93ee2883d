use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn leafwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafwise")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("leafwise-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn usage_errors_exit_3_and_help_exits_0() {
    assert_eq!(leafwise(&["--help"]).status.code(), Some(0));
    assert_eq!(leafwise(&["--version"]).status.code(), Some(0));
    assert_eq!(leafwise(&["frobnicate"]).status.code(), Some(3));
    // Stochastic subcommands refuse to run without a seed.
    assert_eq!(leafwise(&["simulate", "--instance", "product-torus"]).status.code(), Some(3));
    assert_eq!(leafwise(&["diffuse", "--instance", "product-torus"]).status.code(), Some(3));
    assert_eq!(leafwise(&["check-contact", "--instance", "no-such-instance"]).status.code(), Some(3));
    assert_eq!(leafwise(&["check-contact"]).status.code(), Some(3));
}

#[test]
fn quotient_reeb_flow_is_not_transverse() {
    let out = leafwise(&["check-contact", "--instance", "example1-quotient"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["verdict"], "FAIL");
    assert!(r["result"]["message"].as_str().unwrap().contains("the Reeb flow is not transverse"));
    assert!(r["result"]["eps"].is_null());
}

#[test]
fn product_torus_has_a_stokes_obstruction() {
    let out = leafwise(&["check-obstruction", "--instance", "product-torus"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["result"]["outcome"]["kind"], "obstruction");
    assert_eq!(r["result"]["verified"], true);
    let w = r["result"]["outcome"]["weights"].as_array().unwrap();
    assert!(w.iter().all(|x| x == &w[0]) && w[0] != "0");
}

#[test]
fn complex_file_round_trips_through_check_obstruction() {
    let dir = scratch("complex");
    let d = dir.to_str().unwrap();
    let first = leafwise(&["check-obstruction", "--instance", "example2-halfplane", "--out", d]);
    assert_eq!(first.status.code(), Some(0));
    let cfile = dir.join("complex.json");
    let again = leafwise(&["check-obstruction", "--complex", cfile.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    let (a, b) = (report(&first), report(&again));
    assert_eq!(a["result"]["outcome"], b["result"]["outcome"]);
    assert_eq!(a["result"]["outcome"]["kind"], "feasible_beta");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn exported_instance_matches_the_builtin() {
    let dir = scratch("export");
    let d = dir.to_str().unwrap();
    assert_eq!(leafwise(&["instances", "export", "example2-halfplane", "--out", d]).status.code(), Some(0));
    let file = dir.join("example2-halfplane.json");
    let a = report(&leafwise(&["check-obstruction", "--instance", "example2-halfplane"]));
    let b = report(&leafwise(&["check-obstruction", "--instance-file", file.to_str().unwrap()]));
    assert_eq!(a["result"], b["result"]);

    let list = report(&leafwise(&["instances", "list"]));
    let names: Vec<&str> = list["result"].as_array().unwrap().iter().map(|i| i["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["product-torus", "example1-quotient", "example2-halfplane", "example3-pants"]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn simulate_reports_are_byte_identical_across_runs_and_threads() {
    let args = ["simulate", "--instance", "example3-pants", "--t", "1", "--paths", "300", "--seed", "5"];
    let a = leafwise(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = leafwise(&args);
    let mut threaded = vec!["--threads", "3"];
    threaded.extend_from_slice(&args);
    let c = leafwise(&threaded);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let r = report(&a);
    assert_eq!(r["seed"], 5);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    let other = report(&leafwise(&["simulate", "--instance", "example3-pants", "--t", "1", "--paths", "300", "--seed", "6"]));
    assert_ne!(r["config_hash"], other["config_hash"]);
    assert_ne!(r["result"], other["result"]);
}

#[test]
fn out_dir_holds_report_sidecar_and_artifacts() {
    let dir = scratch("out");
    let d = dir.to_str().unwrap();
    let args = ["check-contact", "--instance", "example2-halfplane", "--out", d, "--format", "json,csv,svg"];
    let out = leafwise(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let on_disk = std::fs::read(dir.join("report.json")).unwrap();
    assert_eq!(on_disk, out.stdout);
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.join("report.meta.json")).unwrap()).unwrap();
    assert!(meta["finished_unix"].as_u64().unwrap() > 0);
    assert_eq!(meta["config_hash"], report(&out)["config_hash"]);
    let csv = std::fs::read_to_string(dir.join("contact_volume.csv")).unwrap();
    assert!(csv.starts_with("node,x,y,z,alpha_dalpha"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap() > 0.0));
    assert!(std::fs::read_to_string(dir.join("characteristic.svg")).unwrap().contains("<line"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn diffused_measure_feeds_check_contact() {
    let dir = scratch("diffuse");
    let d = dir.to_str().unwrap();
    let out = leafwise(&["diffuse", "--instance", "product-torus", "--t", "0.5", "--paths", "200", "--seed", "1", "--out", d]);
    let r = report(&out);
    assert_eq!(r["seed"], 1);
    assert_eq!(out.status.code().unwrap(), match r["verdict"].as_str().unwrap() {
        "PASS" => 0,
        "FAIL" => 1,
        _ => 2,
    });
    let m = dir.join("measure.json");
    let c = leafwise(&["check-contact", "--instance", "product-torus", "--measure", m.to_str().unwrap(), "--eps", "0.5"]);
    assert!(matches!(c.status.code(), Some(0..=2)), "{}", String::from_utf8_lossy(&c.stderr));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn pants_pipeline_passes_end_to_end() {
    let out = leafwise(&["pipeline", "--instance", "example3-pants", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let chain = &r["result"]["chain"];
    assert_eq!(chain["superharmonic"], "PASS");
    assert_eq!(chain["contact"], "PASS");
    assert_eq!(chain["transverse"], "PASS");
    assert_eq!(chain["lp"], "feasible_beta");
    assert_eq!(r["seed"], 7);
}
