use std::path::Path;
use std::process::Command;

use serde_json::Value;

const REFERENCE_QUAD: &str = "72.24,17.76,45,0";

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("chbell").chain(args.iter().copied());
    let code = chbell::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.push("--json");
    let (code, out, err) = run(&full);
    assert_eq!(code, 0, "{args:?} failed: {err}");
    serde_json::from_str(&out).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn keys(doc: &Value) -> Vec<String> {
    doc.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn predict_reference_quad() {
    let doc = run_json(&["predict", "--f", "0.4", "--quad", REFERENCE_QUAD]);
    assert!((doc["ch"].as_f64().unwrap() - 0.1072968).abs() < 1e-6);
    assert_eq!(doc["terms"].as_array().unwrap().len(), 6);
    assert_eq!(keys(&doc), ["ch", "ch_efficiency", "command", "config", "eta1", "eta2", "terms"]);
}

#[test]
fn predict_product_state_does_not_violate() {
    let doc = run_json(&["predict", "--f", "0", "--quad", REFERENCE_QUAD]);
    assert!(doc["ch"].as_f64().unwrap() <= 0.0);
}

#[test]
fn predict_table_uses_six_significant_digits() {
    let (code, out, _) = run(&["predict", "--f", "0.4", "--quad", REFERENCE_QUAD]);
    assert_eq!(code, 0);
    assert!(out.lines().last().unwrap().ends_with("0.107297"), "{out}");
}

#[test]
fn optimize_examples() {
    let doc = run_json(&["optimize", "--f", "0.4"]);
    let q: Vec<f64> = doc["quad"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (got, want) in q.iter().zip([72.24, 17.76, 45.0, 0.0]) {
        assert!((got - want).abs() < 1.0, "{q:?}");
    }
    assert_eq!(doc["canonical_quad"].as_array().unwrap().len(), 4);

    let doc = run_json(&["optimize", "--f", "1"]);
    assert!((doc["value"].as_f64().unwrap() - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-6);

    let doc = run_json(&["optimize", "--f", "0"]);
    assert!(doc["value"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn threshold_curve_csv() {
    let (code, out, _) = run(&["threshold", "--f-list", "1,0.01"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("f,eta_crit,theta1,theta1_prime,theta2,theta2_prime"));
    let eta: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((eta[0] - 0.8284).abs() < 1e-3);
    assert!(eta[1] < 0.68);
}

#[test]
fn threshold_empty_list_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let (code, out, _) = run(&["threshold", "--f-list", "", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out, "f,eta_crit,theta1,theta1_prime,theta2,theta2_prime\n");
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), out);
}

#[test]
fn threshold_rejects_ratio_outside_unit_interval() {
    assert_eq!(run(&["threshold", "--f-list", "0.5,2"]).0, 2);
}

#[test]
fn simulate_zero_rate_gives_zero_counts() {
    let doc = run_json(&[
        "simulate", "--f", "0.4", "--quad", REFERENCE_QUAD, "--pair-rate", "0", "--duration", "10", "--seed", "1",
    ]);
    assert!(doc["counts"].as_object().unwrap().values().all(|n| n.as_u64() == Some(0)));
    assert_eq!(doc["z"].as_f64(), Some(0.0));
}

#[test]
fn simulate_records_generated_seed() {
    let args = ["simulate", "--f", "0.4", "--quad", REFERENCE_QUAD, "--pair-rate", "100", "--duration", "1"];
    let doc = run_json(&args);
    let seed = doc["config"]["seed"].as_u64().expect("seed recorded");
    let seed = seed.to_string();
    let mut again = args.to_vec();
    again.extend(["--seed", seed.as_str()]);
    assert_eq!(run_json(&again)["counts"], doc["counts"]);
}

#[test]
fn simulate_local_source_from_mixture_file() {
    let dir = tempfile::tempdir().unwrap();
    let mixture = write(dir.path(), "mix.txt", "# uniform-ish\n0.5 PPPP\n0.5 PFFP\n");
    let doc = run_json(&[
        "simulate", "--quad", REFERENCE_QUAD, "--pair-rate", "2000", "--duration", "1", "--seed", "4",
        "--lhv-mixture", &mixture,
    ]);
    assert_eq!(doc["source"], "lhv");
    assert!(doc["z"].as_f64().unwrap() < 3.0);
}

#[test]
fn visibility_examples() {
    let doc = run_json(&["visibility", "--f", "0.4", "--v", "0.973"]);
    assert!((doc["v"].as_f64().unwrap() - 0.973).abs() < 1e-6);
    let doc = run_json(&["visibility", "--f", "1"]);
    assert!((doc["v"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(run(&["visibility", "--f", "1", "--theta2-grid", "0,45,90,135"]).0, 2);
}

#[test]
fn exit_code_contract() {
    assert_eq!(run(&["predict", "--f", "0.4"]).0, 1, "missing quad");
    assert_eq!(run(&[]).0, 1, "no subcommand");
    assert_eq!(run(&["launch"]).0, 1, "unknown subcommand");
    assert_eq!(run(&["predict", "--bogus"]).0, 1, "unknown flag");
    assert_eq!(run(&["predict", "--config", "/nonexistent/chbell.cfg"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["predict", "--f", "-1", "--quad", REFERENCE_QUAD]).0, 2);
    assert_eq!(run(&["predict", "--f", "abc", "--quad", REFERENCE_QUAD]).0, 2);
    assert_eq!(run(&["predict", "--f", "0.4", "--quad", "1,2,3"]).0, 2);
    assert_eq!(run(&["predict", "--f", "0.4", "--v", "1.5", "--quad", REFERENCE_QUAD]).0, 2);
    let sim = ["simulate", "--f", "0.4", "--quad", REFERENCE_QUAD, "--pair-rate", "10", "--duration", "1", "--seed", "1"];
    assert_eq!(run(&[&sim[..], &["--eta1", "1.2"]].concat()).0, 2);
    assert_eq!(run(&[&sim[..], &["--duration", "-3"]].concat()).0, 1, "flag repeated");
    let negative_rate = ["simulate", "--f", "0.4", "--quad", REFERENCE_QUAD, "--pair-rate", "-3", "--duration", "1"];
    assert_eq!(run(&negative_rate).0, 2);
    let (code, _, err) = run(&["simulate", "--f", "0.4", "--quad", REFERENCE_QUAD]);
    assert_eq!(code, 1);
    assert!(err.contains("pair rate"), "{err}");
}

#[test]
fn binary_exit_codes_match_library() {
    let bin = env!("CARGO_BIN_EXE_chbell");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let ok = status(&["predict", "--f", "0.4", "--quad", REFERENCE_QUAD]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("0.107297"));
    assert_eq!(status(&["predict", "--f", "0.4"]).status.code(), Some(1));
    assert_eq!(status(&["predict", "--f", "7e", "--quad", REFERENCE_QUAD]).status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# reference run\nf = 1\nquad = 72.24, 17.76, 45, 0\n");
    let from_file = run_json(&["predict", "--config", &cfg]);
    assert_eq!(from_file["config"]["f"].as_f64(), Some(1.0));
    let overridden = run_json(&["predict", "--config", &cfg, "--f", "0.4"]);
    assert_eq!(overridden["config"]["f"].as_f64(), Some(0.4));
    assert!((overridden["ch"].as_f64().unwrap() - 0.1072968).abs() < 1e-6);
}

/// Feed each command's JSON back in as its config; every number must come
/// out identical.
#[test]
fn json_output_round_trips_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let mixture = write(dir.path(), "mix.txt", "1 PFPU\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["predict", "--f", "0.37", "--phi", "12.5", "--v", "0.9", "--quad", "1.1,2.2,3.3,4.4", "--eta1", "0.8"],
        vec!["optimize", "--f", "0.7", "--eta1", "0.95", "--eta2", "0.9"],
        vec!["threshold", "--f-list", "0.3,0.9"],
        vec!["simulate", "--f", "0.4", "--v", "0.97", "--quad", REFERENCE_QUAD, "--pair-rate", "3000", "--duration", "0.7",
             "--dark-rate1", "200", "--dark-rate2", "300", "--window", "2e-8", "--eta1", "0.9"],
        vec!["simulate", "--quad", REFERENCE_QUAD, "--pair-rate", "500", "--duration", "1", "--lhv-mixture", &mixture,
             "--eta1", "0.8", "--eta2", "0.7"],
        vec!["visibility", "--f", "0.5", "--v", "0.95", "--mode", "simulated", "--pair-rate", "1000",
             "--duration", "1", "--theta2-grid", "0:180:10", "--replicates", "20", "--theta1", "30"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let first = run_json(args);
        let doc = write(dir.path(), &format!("out{i}.json"), &first.to_string());
        let second = run_json(&[args[0], "--config", &doc]);
        assert_eq!(first, second, "{args:?}");
    }
}

#[test]
fn randomized_commands_are_thread_independent() {
    let sim = [
        "simulate", "--f", "0.4", "--quad", REFERENCE_QUAD, "--pair-rate", "200000", "--duration", "1", "--seed", "11",
        "--dark-rate1", "1000", "--dark-rate2", "1000",
    ];
    let vis = [
        "visibility", "--f", "0.4", "--mode", "simulated", "--pair-rate", "5000", "--duration", "1", "--seed", "3",
        "--replicates", "30",
    ];
    for args in [&sim[..], &vis[..]] {
        let reference = run(&[args, &["--json", "--threads", "1"]].concat());
        assert_eq!(reference.0, 0);
        for threads in ["1", "2", "7"] {
            assert_eq!(run(&[args, &["--json", "--threads", threads]].concat()), reference);
        }
    }
}

#[test]
fn csv_rows_append_under_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let csv = csv.to_str().unwrap();
    for seed in ["1", "2"] {
        let args = [
            "simulate", "--f", "0.4", "--quad", REFERENCE_QUAD, "--pair-rate", "100", "--duration", "1", "--seed", seed,
            "--csv", csv,
        ];
        assert_eq!(run(&args).0, 0);
    }
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("seed,source,n_ab,"));
    assert!(lines[1].starts_with("1,quantum,"));
    assert!(text.ends_with('\n'));
}
