//! End-to-end CLI tests: exit codes, file outputs, and byte-for-byte
//! replay determinism (the manifest contract).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ait() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ait"))
}

fn run(args: &[&str]) -> Output {
    ait().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn repo_spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|name| {
            let name = name.as_str().unwrap().to_string();
            let bytes = std::fs::read(dir.join(&name)).unwrap();
            (name, bytes)
        })
        .collect()
}

fn assert_same_outputs(a: &Path, b: &Path) {
    let left = read_outputs(a);
    let right = read_outputs(b);
    assert_eq!(left.len(), right.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in left.iter().zip(&right) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "output {name_a} differs between runs");
    }
}

#[test]
fn generate_solve_analyze_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let gen_dir = dir.path().join("gen");
    let out = run(&[
        "generate",
        "--m",
        "24",
        "--n",
        "36",
        "--k-star",
        "3",
        "--seed",
        "9",
        "--output-dir",
        gen_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    for file in [
        "a.csv",
        "b.csv",
        "x_star.csv",
        "problem_spec.json",
        "manifest.json",
    ] {
        assert!(gen_dir.join(file).exists(), "{file} missing");
    }

    let solve_dir = dir.path().join("solve");
    let out = run(&[
        "solve",
        "--matrix",
        gen_dir.join("a.csv").to_str().unwrap(),
        "--rhs",
        gen_dir.join("b.csv").to_str().unwrap(),
        "--truth",
        gen_dir.join("x_star.csv").to_str().unwrap(),
        "--operator",
        "scad",
        "--k",
        "3",
        "--output-dir",
        solve_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let trace = std::fs::read_to_string(solve_dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,tau,step,residual_l2,err_l1,err_l2,err_linf"
    );
    let first = lines.next().unwrap();
    assert!(
        !first.ends_with(",,"),
        "truth errors should be populated: {first}"
    );

    // adaptive step variant
    let adaptive_dir = dir.path().join("adaptive");
    let out = run(&[
        "solve",
        "--matrix",
        gen_dir.join("a.csv").to_str().unwrap(),
        "--rhs",
        gen_dir.join("b.csv").to_str().unwrap(),
        "--k",
        "3",
        "--step",
        "adaptive",
        "--normalize",
        "--output-dir",
        adaptive_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let analyze_dir = dir.path().join("analyze");
    let out = run(&[
        "analyze",
        "--matrix",
        gen_dir.join("a.csv").to_str().unwrap(),
        "--k-star",
        "1",
        "--normalize",
        "--output-dir",
        analyze_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    assert!(analyze_dir.join("report.json").exists());
}

#[test]
fn analyze_identity_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("eye.csv");
    let mut text = String::from("6,6\n");
    for i in 0..6 {
        let row: Vec<&str> = (0..6).map(|j| if i == j { "1" } else { "0" }).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&matrix, text).unwrap();

    let out_dir = dir.path().join("report");
    let out = run(&[
        "analyze",
        "--matrix",
        matrix.to_str().unwrap(),
        "--k-star",
        "1",
        "--operator",
        "hard",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mu"].as_f64().unwrap(), 0.0);
    for (_, delta) in report["delta"].as_object().unwrap() {
        assert!(delta.as_f64().unwrap().abs() < 1e-12);
    }
    for flag in [
        "linear_rate",
        "coherence_rate_strict",
        "rip_rate",
        "golden_rate",
    ] {
        assert_eq!(report["conditions"][flag], true, "{flag}");
    }
    // the (2, 2) generalized-constant entries agree with the delta grid
    for entry in report["beta"].as_array().unwrap() {
        if entry["p"].as_f64() == Some(2.0) {
            let k = entry["k"].as_u64().unwrap().to_string();
            let delta = report["delta"][&k].as_f64().unwrap();
            assert!((entry["value"].as_f64().unwrap() - delta).abs() < 1e-12);
        }
    }
}

#[test]
fn usage_and_config_errors_exit_2() {
    // zero sparsity level rejected by argument validation
    let out = run(&["solve", "--matrix", "a.csv", "--rhs", "b.csv", "--k", "0"]);
    assert_exit(&out, 2);

    // experiment without a seed
    let spec = repo_spec("bound_check.json");
    let out = run(&["experiment", "--spec", spec.to_str().unwrap()]);
    assert_exit(&out, 2);

    // schema violation in the spec file
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "kind": "sparsity_sweep", "bogus": 1 }"#).unwrap();
    let out = run(&[
        "experiment",
        "--spec",
        bad.to_str().unwrap(),
        "--seed",
        "1",
        "--output-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_exit(&out, 2);

    // missing input file is a runtime failure
    let out = run(&[
        "solve",
        "--matrix",
        dir.path().join("missing.csv").to_str().unwrap(),
        "--rhs",
        dir.path().join("missing2.csv").to_str().unwrap(),
        "--k",
        "2",
    ]);
    assert_exit(&out, 1);

    // enumeration budget exceeded is a config error
    let gen_dir = dir.path().join("gen");
    let out = run(&[
        "generate",
        "--m",
        "8",
        "--n",
        "12",
        "--k-star",
        "2",
        "--seed",
        "3",
        "--output-dir",
        gen_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let out = run(&[
        "analyze",
        "--matrix",
        gen_dir.join("a.csv").to_str().unwrap(),
        "--k-star",
        "2",
        "--normalize",
        "--budget",
        "10",
        "--output-dir",
        dir.path().join("an").to_str().unwrap(),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn experiment_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();

    // a small sweep exercising solver, trials, and the csv/json writers
    let spec = dir.path().join("sweep.json");
    std::fs::write(
        &spec,
        r#"{
  "kind": "sparsity_sweep",
  "m": 30, "n": 48, "k_star": 3,
  "k_range": { "start": 1, "end": 6 },
  "algorithms": [
    { "operator": "hard", "step": { "constant": { "s": 0.7 } } },
    { "operator": { "scad": { "a": 3.7 } }, "step": "adaptive" }
  ],
  "trials": 2,
  "max_iter": 400,
  "stop_tol": 1e-13
}"#,
    )
    .unwrap();

    let d1 = dir.path().join("run1");
    let d2 = dir.path().join("run2");
    let d3 = dir.path().join("run3");
    for target in [&d1, &d2] {
        let out = run(&[
            "experiment",
            "--spec",
            spec.to_str().unwrap(),
            "--seed",
            "5",
            "--output-dir",
            target.to_str().unwrap(),
        ]);
        assert_exit(&out, 0);
    }
    assert_same_outputs(&d1, &d2);

    // replay from the manifest alone
    let out = run(&[
        "replay",
        "--manifest",
        d1.join("manifest.json").to_str().unwrap(),
        "--output-dir",
        d3.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    assert_same_outputs(&d1, &d3);

    // bound-check experiment replays byte-for-byte too
    let b1 = dir.path().join("bound1");
    let b2 = dir.path().join("bound2");
    let out = run(&[
        "experiment",
        "--spec",
        repo_spec("bound_check.json").to_str().unwrap(),
        "--seed",
        "5",
        "--output-dir",
        b1.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let out = run(&[
        "replay",
        "--manifest",
        b1.join("manifest.json").to_str().unwrap(),
        "--output-dir",
        b2.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    assert_same_outputs(&b1, &b2);

    // generate manifests replay to identical instance files
    let g1 = dir.path().join("gen1");
    let g2 = dir.path().join("gen2");
    let out = run(&[
        "generate",
        "--m",
        "15",
        "--n",
        "20",
        "--k-star",
        "2",
        "--seed",
        "11",
        "--format",
        "bin",
        "--output-dir",
        g1.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let out = run(&[
        "replay",
        "--manifest",
        g1.join("manifest.json").to_str().unwrap(),
        "--output-dir",
        g2.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    assert_same_outputs(&g1, &g2);

    println!("[PASS] determinism: experiment, replay, and generate outputs byte-identical");
}
