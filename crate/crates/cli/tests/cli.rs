use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causal-subsets"))
}

fn fixture(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn merge_reproduces_the_hand_computed_table() {
    let got = ok_json(&[
        "merge",
        "--first",
        &fixture("p_xy.json"),
        "--second",
        &fixture("p_yz.json"),
    ]);
    let want: Value = serde_json::from_str(&std::fs::read_to_string(fixture("merged_xyz.json")).unwrap()).unwrap();
    assert_eq!(got["dist"]["vars"], want["vars"]);
    assert_eq!(got["dist"]["cards"], want["cards"]);
    for (g, w) in floats(&got["dist"]["probs"]).iter().zip(floats(&want["probs"])) {
        assert!((g - w).abs() <= 1e-15, "{g} vs {w}");
    }
    assert!(got["tv_distance"].as_f64().unwrap() <= 1e-15);
}

#[test]
fn inconsistent_marginals_exit_with_two() {
    let args = [
        "merge",
        "--first",
        &fixture("p_xy.json"),
        "--second",
        &fixture("p_yz_shifted.json"),
    ];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inconsistent"));
    // a loose enough tolerance accepts the pair
    let mut loose = args.to_vec();
    loose.extend(["--tol", "0.2"]);
    assert!(run(&loose).status.success());
}

#[test]
fn bounds_match_the_high_precision_value() {
    let v = ok_json(&["bounds", "--k", "1000", "--h", "50", "--eta", "0.1"]);
    let eps = v["epsilon"].as_f64().unwrap();
    assert!((eps - 0.977_637_524_599_024_54).abs() <= 2.0 * f64::EPSILON, "{eps}");
    let half = ok_json(&["bounds", "--k", "1000", "--h", "50", "--eta", "0.1", "--variant", "sqrt_only"]);
    assert_eq!(half["epsilon"].as_f64().unwrap() * 2.0, eps);
}

#[test]
fn bounds_from_a_class_and_a_target() {
    let v = ok_json(&["bounds", "--class", "direction", "--n", "8", "--epsilon", "0.5"]);
    assert_eq!(v["h"].as_f64(), Some(7.0));
    let k = v["required_k"].as_u64().unwrap();
    let at = |k: u64| ok_json(&["bounds", "--h", "7", "--k", &k.to_string()])["epsilon"].as_f64().unwrap();
    assert!(at(k) <= 0.5 && at(k - 1) > 0.5);
    assert_eq!(run(&["bounds", "--h", "7"]).status.code(), Some(1));
}

#[test]
fn figure1_emits_one_row_per_n() {
    let out = run(&["figure1", "--n", "10..120"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "possible_tests").unwrap();
    let tests: Vec<u64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(tests.len(), 111);
    assert!(tests.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(tests[0], 10 * 9 * 8 / 2);
}

#[test]
fn enumerate_finds_the_single_collider() {
    let v = ok_json(&["enumerate", "--n", "3", "--constraints", &fixture("collider.json")]);
    assert_eq!(v["count"], 1);
    assert_eq!(v["dags"][0]["edges"], json!([[0, 1], [2, 1]]));
    assert_eq!(ok_json(&["enumerate", "--n", "3"])["count"], 25);
    assert_eq!(run(&["enumerate", "--n", "9"]).status.code(), Some(2));
}

#[test]
fn usage_and_input_errors_exit_with_one() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--k", "ten", "--h", "1"]).status.code(), Some(1));
    assert_eq!(run(&["merge", "--first", "/nonexistent", "--second", "/nonexistent"]).status.code(), Some(1));
    assert_eq!(run(&["generate", "--class", "tree", "--n", "3"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn predictions_fit_back_with_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = d.join("g");
    assert!(run(&["generate", "--class", "polytree", "--n", "4", "--seed", "5", "--out", gen.to_str().unwrap()]).status.success());
    let model = gen.join("model.json");
    let mut qs = Vec::new();
    for x in 0..4 {
        for y in x + 1..4 {
            let rest: Vec<usize> = (0..4).filter(|&v| v != x && v != y).collect();
            for cond in [vec![], vec![rest[0]], vec![rest[1]], rest.clone()] {
                qs.push(json!({"kind": "cond_indep", "vars": [x, y], "cond": cond}));
            }
        }
    }
    let queries = write(d, "q.json", &Value::Array(qs));
    let pred = d.join("pred.json");
    let out = run(&["predict", "--model", model.to_str().unwrap(), "--queries", &queries, "--out", pred.to_str().unwrap()]);
    assert!(out.status.success());
    let fit = ok_json(&["fit", "--class", "polytree", "--n", "4", "--labels", pred.to_str().unwrap(), "--method", "exhaustive"]);
    assert_eq!(fit["train_error"].as_f64(), Some(0.0));
    assert_eq!(fit["class"], "polytree");
}

#[test]
fn data_pipeline_from_generation_to_labels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = d.join("g");
    let args = ["generate", "--class", "dag", "--n", "5", "--seed", "11", "--l", "3000", "--out", gen.to_str().unwrap()];
    assert!(run(&args).status.success());
    let first = std::fs::read(gen.join("data.csv")).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(std::fs::read(gen.join("data.csv")).unwrap(), first, "generation is deterministic");
    let sem: Value = serde_json::from_str(&std::fs::read_to_string(gen.join("sem.json")).unwrap()).unwrap();
    assert_eq!(sem["noise"].as_array().unwrap().len(), 5);

    let sl = d.join("s");
    let out = run(&["slice", "--data", gen.join("data.csv").to_str().unwrap(), "--tuples", "0,1,2;2,3,4", "--out", sl.to_str().unwrap()]);
    assert!(out.status.success());
    let queries = write(
        d,
        "q.json",
        &json!([
            {"kind": "cond_indep", "vars": [0, 1], "cond": [2]},
            {"kind": "sign", "vars": [3, 4]},
            {"kind": "cond_indep", "vars": [0, 4], "cond": [2]}
        ]),
    );
    let labels = ok_json(&["test", "--data", sl.join("manifest.json").to_str().unwrap(), "--queries", &queries]);
    let labeled = labels["labeled"].as_array().unwrap().len();
    let dropped = labels["dropped"].as_array().unwrap();
    assert_eq!(labeled + dropped.len(), 3);
    assert!(dropped.iter().any(|s| s["query"]["vars"] == json!([0, 4])), "no slice holds both 0 and 4");

    let labels_path = write(d, "labels.json", &labels);
    let fit = ok_json(&["fit", "--class", "dag", "--n", "5", "--labels", &labels_path, "--budget", "50", "--seed", "3"]);
    assert!(fit["train_error"].as_f64().unwrap() <= 1.0);
}

#[test]
fn experiments_are_exact_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("oracle_experiment.json");
    let paths: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("r{k}.json"))).collect();
    for p in &paths {
        let out = run(&["experiment", "--config", &cfg, "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    // 200 i.i.d. draws from 18 queries cover every query, so the fit is exact everywhere
    let report: Value = serde_json::from_slice(&a).unwrap();
    for r in report["results"].as_array().unwrap() {
        assert_eq!(r["train_error"].as_f64(), Some(0.0));
        assert_eq!(r["test_error"].as_f64(), Some(0.0));
        assert_eq!(r["bound_satisfied"], true);
    }
    let seeds = ok_json(&["experiment", "--config", &cfg, "--seeds", "7"]);
    assert_eq!(seeds["results"][0]["seed"], 7);
}

#[test]
fn invalid_configs_fail_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"schema_version": 1, "class": "polytree", "n": 4, "l": 100, "k_train": 30, "k_test": 30, "eta": 0.1, "seeds": [0]});
    let p = write(dir.path(), "c.json", &cfg);
    let out = run(&["experiment", "--config", &p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid configuration"));
}
