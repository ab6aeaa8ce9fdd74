//! End-to-end runs of the `pairent` binary.

use std::process::{Command, Output};

use serde_json::Value;

fn pairent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = pairent(&all);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn close(value: &Value, expected: f64) -> bool {
    (value.as_f64().expect("number") - expected).abs() < 1e-12
}

#[test]
fn chi4_has_one_third_for_both_probes() {
    let report = json(&["measure", "--state", "chi4"]);
    assert_eq!(report["command"], "measure");
    assert_eq!(report["verdict"], "pass");
    for probe in ["qc", "fr"] {
        assert!(
            close(&report["results"]["probes"][probe]["m"], 1.0 / 3.0),
            "{probe}: {}",
            report["results"]["probes"][probe]
        );
    }
}

#[test]
fn zero_register_is_separable() {
    let report = json(&["measure", "--state", "zero:4", "--probe", "fr"]);
    assert!(close(&report["results"]["probes"]["fr"]["m"], 0.0));
    assert_eq!(report["results"]["probes"]["fr"]["classification"], "Separable");
}

#[test]
fn w3_qc_is_two_thirds() {
    let report = json(&["measure", "--state", "w:3", "--probe", "qc"]);
    assert!(close(&report["results"]["probes"]["qc"]["m"], 2.0 / 3.0));
    assert!(report["results"]["probes"].get("fr").is_none());
}

#[test]
fn ket_input_matches_library_state() {
    let from_ket = json(&["measure", "--state", "1/sqrt(2)|000> + 1/sqrt(2)|111>"]);
    let from_name = json(&["measure", "--state", "ghz:3"]);
    assert_eq!(from_ket["results"]["probes"], from_name["results"]["probes"]);
}

#[test]
fn reference_table_passes() {
    let out = pairent(&["table"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&["table"]);
    assert_eq!(report["results"]["failures"], 0);
}

#[test]
fn mems_sweep_endpoints() {
    let report = json(&["sweep-mems", "--grid", "0:1:3"]);
    let rows = report["results"]["points"].as_array().expect("points");
    assert_eq!(rows.len(), 3);
    assert!(close(&rows[2]["fr_mems"], 1.0));
}

#[test]
fn locc_campaign_is_deterministic_and_clean() {
    let args = ["locc", "--n", "3", "--trials", "100", "--seed", "7"];
    let first = pairent(&[&args[..], &["--format", "json"]].concat());
    let second = pairent(&[&args[..], &["--format", "json"]].concat());
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let report: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["results"]["violation_count"], 0);
}

#[test]
fn same_seed_gives_byte_identical_output() {
    let args = [
        "randcheck",
        "--suite",
        "lu",
        "--trials",
        "20",
        "--seed",
        "11",
        "--format",
        "json",
    ];
    assert_eq!(pairent(&args).stdout, pairent(&args).stdout);
}

#[test]
fn roof_reports_upper_bound_near_concurrence() {
    let report = json(&["roof", "--state", "mems:0.5", "--restarts", "4"]);
    let best = report["results"]["probes"]["qc"]["upper_bound"]
        .as_f64()
        .expect("best value");
    assert!((0.5 - 1e-9..=0.5 + 1e-3).contains(&best), "roof {best}");
}

#[test]
fn randcheck_normalization_on_four_sites() {
    let report = json(&["randcheck", "--suite", "normalization", "--n", "4", "--trials", "1000"]);
    assert_eq!(report["verdict"], "pass");
}

#[test]
fn csv_and_json_numbers_agree() {
    let report = json(&["measure", "--state", "psi4", "--probe", "fr"]);
    let out = pairent(&["measure", "--state", "psi4", "--probe", "fr", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let (comment, table) = text.split_once('\n').unwrap();
    assert!(comment.starts_with("# pairent measure config "));
    let pairs = report["results"]["probes"]["fr"]["pairs"].as_array().unwrap();
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    let mut matched = 0;
    for record in reader.deserialize::<std::collections::HashMap<String, String>>() {
        let record = record.unwrap();
        if record["quantity"] != "pair" {
            continue;
        }
        let pair = pairs
            .iter()
            .find(|p| p["label"] == record["pair"].as_str())
            .expect("pair in JSON");
        assert_eq!(record["value"].parse::<f64>().unwrap(), pair["value"].as_f64().unwrap());
        matched += 1;
    }
    assert_eq!(matched, 6);
}

#[test]
fn bad_ket_points_at_the_error() {
    let out = pairent(&["measure", "--state", "|00> + |1x>"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains('^'), "{err}");
}

#[test]
fn unknown_state_is_a_usage_error() {
    let out = pairent(&["measure", "--state", "nonsense:3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flag_is_a_usage_error() {
    assert_eq!(
        pairent(&["measure", "--state", "epr", "--probe", "xyz"]).status.code(),
        Some(2)
    );
    assert_eq!(pairent(&["--jobs", "0", "table"]).status.code(), Some(2));
}

#[test]
fn state_file_round_trip() {
    let path = std::env::temp_dir().join(format!("pairent-cli-{}.json", std::process::id()));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let file = serde_json::json!({ "n": 2, "d": 2, "amplitudes": [[h, 0.0], [0.0, 0.0], [0.0, 0.0], [h, 0.0]] });
    std::fs::write(&path, file.to_string()).unwrap();
    let report = json(&["measure", "--state-file", path.to_str().unwrap(), "--probe", "qc"]);
    std::fs::remove_file(&path).ok();
    assert!(close(&report["results"]["probes"]["qc"]["m"], 1.0));
}
