use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}

fn run(args: &[&str], out: &tempfile::TempDir) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contest"))
        .args(args)
        .arg("--out")
        .arg(out.path())
        .output()
        .expect("binary runs")
}

fn run_scenario(cmd: &str, name: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let out = tempfile::tempdir().unwrap();
    let path = scenario(name);
    let mut args = vec![cmd, "--scenario", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    (run(&args, &out), out)
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("summary JSON on stdout")
}

fn read_csv(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn equilibrium_reports_scheme_a_output() {
    let (o, dir) = run_scenario("equilibrium", "scheme_a_general_prize", &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!((v["expected_target_output"].as_f64().unwrap() - 19.0 / 420.0).abs() < 1e-7);
    let (header, rows) = read_csv(dir.path().join("scheme_a_general_prize_strategy.csv"));
    assert_eq!(header, ["ability", "alpha", "beta"]);
    assert_eq!(rows.len(), 2049);
    // 17 significant digits in scientific notation
    let mantissa = rows[100][1]
        .split('e')
        .next()
        .unwrap()
        .replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn mixed_equilibrium_reports_link_endpoint() {
    let (o, _dir) = run_scenario(
        "equilibrium",
        "mixed_prizes",
        &["--format", "json", "--grid-size", "512"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["regime"], "mixed");
    let k = v["k_at_1"].as_f64().unwrap();
    assert!(k > 0.0 && k < 1.0);
    assert!(v["strategy_table"].as_str().unwrap().ends_with(".json"));
}

#[test]
fn zero_prizes_warn() {
    let (o, _dir) = run_scenario("equilibrium", "no_prizes", &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["expected_target_output"], 0.0);
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn design_examples() {
    for (name, k, objective) in [
        ("ex42_strong_target", 11, 0.0498),
        ("ex44_high_variance_target", 11, 0.0249),
    ] {
        let (o, dir) = run_scenario("design", name, &[]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        let v = stdout_json(&o);
        assert_eq!(v["k_star"], k);
        assert!((v["objective"].as_f64().unwrap() - objective).abs() <= 5e-4);
        let (header, rows) = read_csv(dir.path().join(format!("{name}_per_j.csv")));
        assert_eq!(header, ["j", "objective"]);
        assert_eq!(rows.len(), 49);
    }
    let (o, _dir) = run_scenario("design", "group_winner_take_all", &[]);
    let v = stdout_json(&o);
    let prizes: Vec<f64> = v["prizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(prizes[0], 1.0);
    assert!(prizes[1..].iter().all(|&p| p == 0.0));
}

#[test]
fn compare_table_invariants() {
    let (o, dir) = run_scenario("compare", "figure1_scheme_comparison", &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let star = v["crossing_mu"].as_f64().unwrap();
    assert!(star > 0.0 && star < 1.0);
    let (header, rows) = read_csv(dir.path().join("figure1_scheme_comparison_compare.csv"));
    assert_eq!(header, ["mu", "A", "B", "C"]);
    assert_eq!(rows.len(), 99);
    for row in rows {
        let x: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert!((x[1] - 19.0 / 420.0).abs() < 1e-12);
        assert!((x[3] - x[0] * x[2]).abs() < 1e-12);
        assert!(x[1] >= x[3]);
    }
}

#[test]
fn compare_at_mu_one_closes_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("edge.json");
    std::fs::write(
        &path,
        r#"{"name": "edge", "n": 20, "mu": 1, "F": {"kind": "uniform"}, "G": {"kind": "uniform"}, "mu_grid": [0.5, 1]}"#,
    )
    .unwrap();
    let o = run(&["compare", "--scenario", path.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv(dir.path().join("edge_compare.csv"));
    let last: Vec<f64> = rows[1].iter().map(|s| s.parse().unwrap()).collect();
    assert!((last[1] - last[2]).abs() < 1e-9);
}

#[test]
fn verify_passes_on_equilibria() {
    for name in ["general_winner_take_all", "group_only", "mixed_prizes"] {
        let (o, dir) = run_scenario("verify", name, &["--samples", "40000"]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let report: Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(format!("{name}_verify.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(report["pass"], true);
    }
}

#[test]
fn verify_flags_perturbed_strategies() {
    let (o, dir) = run_scenario("verify", "perturbed_control", &["--samples", "40000"]);
    assert_eq!(o.status.code(), Some(4));
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("perturbed_control_verify.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["pass"], false);
    assert!(report["foc"][0]["max_residual"].as_f64().unwrap() > 0.05);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "bad", "n": 5, "mu": 0.5, "F": {"kind": "uniform"}, "G": {"kind": "uniform"}, "extra": 1}"#)
        .unwrap();
    let o = run(&["equilibrium", "--scenario", bad.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));

    let o = run(
        &[
            "equilibrium",
            "--scenario",
            dir.path().join("missing.json").to_str().unwrap(),
        ],
        &dir,
    );
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(&bad, r#"{"name": "bad", "n": 5, "mu": 0.5, "F": {"kind": "power", "s": -1}, "G": {"kind": "uniform"}}"#)
        .unwrap();
    let o = run(&["equilibrium", "--scenario", bad.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));

    // design needs a regime
    let o = run(
        &[
            "design",
            "--scenario",
            scenario("scheme_a_general_prize").to_str().unwrap(),
        ],
        &dir,
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_bundled_scenario_parses() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(v["name"].is_string());
        count += 1;
    }
    assert!(count >= 10);
}
