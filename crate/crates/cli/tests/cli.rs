use std::path::PathBuf;
use std::process::Command;

use phistatic::report::report_diff;
use phistatic::sceneio::{scene_digest, SceneFile};
use phistatic_cli::{run, Outcome, EXIT_FAIL, EXIT_INPUT, EXIT_PASS};
use serde_json::Value;

fn cli(args: &[&str]) -> Outcome {
    run(std::iter::once("phistatic").chain(args.iter().copied()))
}

fn json(o: &Outcome) -> Value {
    serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", o.stdout))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("phistatic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn examples_run_costa_passes() {
    let o = cli(&["examples", "run", "costa"]);
    assert_eq!(o.code, EXIT_PASS, "{}", o.stdout);
    let v = json(&o);
    assert_eq!(v["schema"], phistatic::report::SCHEMA_VERSION);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() > 10);
    assert!(checks.iter().all(|c| c["pass"] == true));
    assert!(checks.iter().any(|c| c["id"] == "fluid.i"));
}

#[test]
fn examples_run_accepts_parameters_and_globals() {
    let o = cli(&["examples", "run", "hemisphere", "--m", "4", "--points", "4"]);
    assert_eq!(o.code, EXIT_PASS, "{}{}", o.stdout, o.stderr);
    let v = json(&o);
    assert_eq!(v["config"]["params"]["m"], 4.0);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["points"].as_u64().unwrap() <= 4));
    let bad = cli(&["examples", "run", "hemisphere", "--nonsense", "1"]);
    assert_eq!(bad.code, EXIT_INPUT);
}

#[test]
fn oscillate_power_family() {
    let o = cli(&["oscillate", "--family", "power", "--theta", "2", "--D", "1.0"]);
    assert_eq!(o.code, EXIT_PASS, "{}{}", o.stdout, o.stderr);
    let v = json(&o);
    let z = v["data"]["first_zero"].as_f64().unwrap();
    assert!(z > 1.0 && z < 100.0, "{z}");
    let b = v["data"]["criteria"].as_array().unwrap().iter().find(|c| c["id"] == "b").unwrap().clone();
    assert_eq!(b["satisfied"], true);
    let missing = cli(&["oscillate", "--family", "power", "--theta", "2"]);
    assert_eq!(missing.code, EXIT_INPUT);
}

#[test]
fn malformed_scene_is_an_input_error() {
    let p = scratch("bad.json");
    std::fs::write(&p, "{\n  \"name\": \"bad\",\n  \"coords\": [\"x\", \"y\"],\n  \"lo\": [0, 0],\n  \"hi\": [1, 1],\n  \"metric_diag\": [\"1 +\", \"1\"]\n}\n").unwrap();
    let o = cli(&["curvature", p.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("line 6, column 23"), "{}", o.stderr);
    std::fs::write(&p, "{ not json").unwrap();
    assert_eq!(cli(&["curvature", p.to_str().unwrap()]).code, EXIT_INPUT);
    assert_eq!(cli(&["curvature", "/nonexistent/scene.json"]).code, EXIT_INPUT);
    assert_eq!(cli(&["curvature", "--example", "no-such-example"]).code, EXIT_INPUT);
    assert_eq!(cli(&["no-such-command"]).code, EXIT_INPUT);
}

#[test]
fn failing_checks_exit_two() {
    let o = cli(&["check-system", "--system", "fluid", "--example", "random"]);
    assert_eq!(o.code, EXIT_FAIL);
    let v = json(&o);
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["curvature", "--example", "costa", "--seed", "5"][..],
        &["energy", "--example", "costa", "--samples", "50"][..],
        &["oscillate", "--family", "power", "--theta", "2", "--D", "1.0"][..],
    ] {
        let (a, b) = (json(&cli(args)), json(&cli(args)));
        assert!(report_diff(&a, &b).unwrap().is_empty(), "{args:?}");
    }
    let (a, b) = (json(&cli(&["curvature", "--example", "random", "--seed", "1"])), json(&cli(&["curvature", "--example", "random", "--seed", "2"])));
    assert!(!report_diff(&a, &b).unwrap().is_empty());
}

#[test]
fn diff_command() {
    let (a, b, c) = (scratch("a.json"), scratch("b.json"), scratch("c.json"));
    let pa = a.to_str().unwrap();
    let pb = b.to_str().unwrap();
    let pc = c.to_str().unwrap();
    assert_eq!(cli(&["--out", pa, "curvature", "--example", "costa"]).code, EXIT_PASS);
    assert_eq!(cli(&["--out", pb, "curvature", "--example", "costa"]).code, EXIT_PASS);
    assert_eq!(cli(&["--out", pc, "curvature", "--example", "costa", "--seed", "9"]).code, EXIT_PASS);
    let same = cli(&["diff", pa, pb]);
    assert_eq!(same.code, EXIT_PASS);
    assert_eq!(json(&same)["entries"].as_array().unwrap().len(), 0);
    let other = cli(&["diff", pa, pc]);
    assert_eq!(other.code, EXIT_FAIL);
    assert!(!json(&other)["affected_checks"].as_array().unwrap().is_empty());

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    v["schema"] = Value::from("phistatic-report/0");
    std::fs::write(&c, v.to_string()).unwrap();
    assert_eq!(cli(&["diff", pa, pc]).code, EXIT_INPUT);
}

#[test]
fn examples_list() {
    let o = cli(&["examples", "list"]);
    assert_eq!(o.code, EXIT_PASS);
    let v = json(&o);
    let list = v["examples"].as_array().unwrap();
    assert!(list.len() >= 7);
    for name in ["costa", "hemisphere", "round-sphere", "random"] {
        assert!(list.iter().any(|e| e["name"] == name), "{name}");
    }
}

#[test]
fn export_round_trip() {
    let o = cli(&["examples", "export", "costa", "--rho", "1.5"]);
    assert_eq!(o.code, EXIT_PASS);
    let (_, scene) = SceneFile::parse(&o.stdout).unwrap();
    let built = phistatic::catalog::costa(2, 2, 1.5).unwrap();
    assert_eq!(scene_digest(&scene), scene_digest(&built));

    let p = scratch("costa.json");
    std::fs::write(&p, &o.stdout).unwrap();
    let from_file = json(&cli(&["check-system", p.to_str().unwrap()]));
    let from_catalog = json(&cli(&["check-system", "--example", "costa", "--param", "rho=1.5"]));
    assert_eq!(from_file["scene_digest"], from_catalog["scene_digest"]);
    assert!(report_diff(&from_file, &from_catalog).unwrap().is_empty());
}

#[test]
fn compact_output() {
    let o = cli(&["--json-indent", "0", "curvature", "--example", "flat"]);
    assert_eq!(o.code, EXIT_PASS);
    assert_eq!(o.stdout.trim_end().lines().count(), 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_phistatic");
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["examples", "list"]), EXIT_PASS);
    assert_eq!(code(&["--help"]), EXIT_PASS);
    assert_eq!(code(&["check-system", "--system", "fluid", "--example", "random"]), EXIT_FAIL);
    assert_eq!(code(&["curvature", "/nonexistent/scene.json"]), EXIT_INPUT);
    let out = Command::new(bin).args(["examples", "run", "costa"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "examples run");
}
