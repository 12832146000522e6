use std::process::{Command, Output};

use serde_json::Value;

fn bfbin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfbin"))
        .args(args)
        .env_remove("BFBIN_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--output", "json"]);
    let out = bfbin(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn bf_reports_reference_values() {
    let r = json(&["bf", "--test", "plus0", "--n1", "60", "--y1", "38", "--n2", "59", "--y2", "48"]);
    assert!((f(&r["result"]["bf"]) - 4.32).abs() < 0.01);
    assert_eq!(r["result"]["orientation"], "BF+0");
    assert_eq!(r["result"]["label"], "moderate");

    let r = json(&["bf", "--test", "plusminus", "--n1", "43", "--y1", "12", "--n2", "81", "--y2", "49"]);
    assert!((f(&r["result"]["bf"]) / 3702.65 - 1.0).abs() < 0.005);
    assert_eq!(r["result"]["label"], "extreme");

    let r = json(&["bf", "--test", "two-sided", "--n1", "5", "--y1", "0", "--n2", "5", "--y2", "0"]);
    assert!((f(&r["result"]["bf"]) - 3.27).abs() < 0.005);
    assert!((f(&r["result"]["ln_bf"]) - (36.0f64 / 11.0).ln()).abs() < 1e-12);
}

#[test]
fn bf_human_output_mentions_value_and_label() {
    let out = bfbin(&["bf", "--test", "plus0", "--n1", "60", "--y1", "38", "--n2", "59", "--y2", "48"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("BF+0   = 4.3222"), "{s}");
    assert!(s.contains("ln BF+0"));
    assert!(s.contains("moderate"));
}

#[test]
fn analysis_priors_are_configurable() {
    let flat = json(&["bf", "--test", "minus0", "--n1", "20", "--y1", "12", "--n2", "20", "--y2", "5"]);
    let informative = json(&[
        "bf", "--test", "minus0", "--n1", "20", "--y1", "12", "--n2", "20", "--y2", "5", "--a1a", "2", "--b1a", "1",
        "--a2a", "1", "--b2a", "2", "--a0a", "1/2", "--b0a", "1/2",
    ]);
    assert_ne!(flat["result"]["bf"], informative["result"]["bf"]);
    assert_eq!(informative["config"]["analysis"]["null_prior"]["a"], 0.5);
}

#[test]
fn oc_at_fixed_sizes() {
    let r = json(&["oc", "--test", "plus0", "--n1", "60", "--n2", "59"]);
    assert!((f(&r["result"]["bayes_power"]) - 0.7104).abs() < 0.0005);
    assert!((f(&r["result"]["bayes_t1e"]) - 0.017).abs() < 0.001);
    assert!(r["result"]["freq_t1e"].is_null());

    let r = json(&["oc", "--test", "two-sided", "--n1", "5", "--n2", "5"]);
    assert!((f(&r["result"]["bayes_power"]) - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(r["result"]["rejection_size"], 12);
}

#[test]
fn oc_frequentist_type_one_error() {
    // The peak of 0.327 over the search range sits at 8 + 7 patients; at
    // 8 + 8 the supremum is lower.
    let r = json(&["oc", "--test", "plusminus", "--n1", "8", "--n2", "7", "--freq-t1e"]);
    assert!((f(&r["result"]["freq_t1e"]) - 0.327).abs() < 0.01);
    let at = r["result"]["freq_t1e_at"].as_array().unwrap();
    assert!(f(&at[1]) <= f(&at[0]));
    let r = json(&["oc", "--test", "plusminus", "--n1", "8", "--n2", "8", "--freq-t1e"]);
    assert!((f(&r["result"]["freq_t1e"]) - 0.2607).abs() < 0.001);
}

#[test]
fn calibrate_riociguat() {
    let r = json(&["calibrate", "--test", "plus0", "--nmin", "10", "--nmax", "340"]);
    let res = &r["result"];
    assert_eq!(res["n_power"], 309);
    assert_eq!(res["first_crossing"]["n_power"], 309);
    assert_eq!(res["first_crossing"]["n_alpha"], 10);
    assert_eq!(res["first_crossing"]["n_pce"], 168);
    assert_eq!(res["curves"].as_array().unwrap().len(), 331);
    assert!(res["n_freq_power"].is_null());
}

#[test]
fn calibrate_unbalanced_allocation() {
    let r = json(&[
        "calibrate", "--test", "plusminus", "--k", "1/30", "--kf", "30", "--a1d", "1", "--b1d", "2", "--a2d", "2",
        "--b2d", "1", "--a1d-minus", "2", "--b1d-minus", "1", "--a2d-minus", "1", "--b2d-minus", "2", "--p1", "0.3",
        "--p2", "0.6", "--alloc1", "1/3", "--alloc2", "2/3", "--nmin", "10", "--nmax", "100",
    ]);
    assert_eq!(r["result"]["n_power"], 83);
    let row = r["result"]["curves"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["n_total"] == 83)
        .unwrap();
    assert_eq!((row["n1"].as_u64(), row["n2"].as_u64()), (Some(28), Some(55)));
    // The whole resolved configuration is echoed.
    let cfg = &r["config"];
    assert_eq!(cfg["alloc1"], 1.0 / 3.0);
    assert_eq!(cfg["lookahead"], 10);
    assert_eq!(cfg["model"]["design"]["null_side"]["arm1"]["a"], 2.0);
    assert_eq!(cfg["grid_step"], 0.005);
}

#[test]
fn empty_range_is_a_usage_error() {
    let out = bfbin(&["calibrate", "--test", "plus0", "--nmin", "10", "--nmax", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty search range"));
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        vec!["bf", "--test", "sideways", "--n1", "1", "--y1", "0", "--n2", "1", "--y2", "0"],
        vec!["bf", "--test", "plus0", "--n1", "1", "--y1", "3", "--n2", "1", "--y2", "0"],
        vec!["bf", "--test", "plus0", "--n1", "5", "--y1", "1", "--n2", "5", "--y2", "0", "--a1a", "-1"],
        vec!["oc", "--test", "plus0", "--n1", "5", "--n2", "5", "--k", "3"],
        vec!["oc", "--test", "plus0", "--n1", "5", "--n2", "5", "--k", "1/0"],
        vec!["oc", "--test", "plus0", "--n1", "5", "--n2", "5", "--p1", "0.3"],
        vec!["calibrate", "--test", "plus0", "--alloc1", "0.3", "--alloc2", "0.3"],
        vec!["oc", "--test", "plus0", "--n1", "5", "--n2", "5", "--output", "svg"],
        vec!["calibrate", "--test", "plus0", "--output", "svg"],
    ] {
        let out = bfbin(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn json_round_trips_byte_for_byte() {
    let out = bfbin(&[
        "calibrate", "--test", "plusminus", "--nmin", "10", "--nmax", "30", "--freq-t1e", "--p1", "0.3", "--p2", "0.6",
        "--output", "json",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&value).unwrap() + "\n";
    assert_eq!(text, again);
    let keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["config", "result", "meta"]);
    let row_keys: Vec<_> = value["result"]["curves"][0].as_object().unwrap().keys().cloned().collect();
    assert_eq!(
        row_keys,
        ["n_total", "n1", "n2", "bayes_power", "bayes_t1e", "pce_null", "freq_t1e", "freq_power"]
    );
    assert_eq!(value["meta"]["version"], env!("CARGO_PKG_VERSION"));
}

fn close(csv_field: &str, json: &Value) -> bool {
    if json.is_null() {
        return csv_field.is_empty();
    }
    let a: f64 = csv_field.parse().unwrap();
    let b = json.as_f64().unwrap();
    (a - b).abs() <= 1e-9 * b.abs().max(1e-300) || a == b
}

#[test]
fn csv_rows_match_json_curves() {
    let args = ["calibrate", "--test", "two-sided", "--nmin", "4", "--nmax", "40", "--freq-t1e"];
    let j = json(&args);
    let mut csv_args = args.to_vec();
    csv_args.extend(["--output", "csv"]);
    let out = bfbin(&csv_args);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let curves = j["result"]["curves"].as_array().unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), curves.len());
    for (row, curve) in rows.iter().zip(curves) {
        for (name, field) in header.iter().zip(row.iter()) {
            assert!(close(field, &curve[name]), "{name}: {field} vs {}", curve[name]);
        }
    }
}

#[test]
fn svg_output_writes_plot_and_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("design.svg");
    let out = bfbin(&[
        "calibrate", "--test", "plus0", "--nmin", "10", "--nmax", "40", "--freq-t1e", "--p1", "0.4", "--p2", "0.6",
        "--output", "svg", "--out-file", svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg"));
    for caption in ["Design priors", "Power and type-I error", "Probability of compelling evidence"] {
        assert!(body.contains(caption), "missing {caption}");
    }
    let csv_text = std::fs::read_to_string(dir.path().join("design.csv")).unwrap();
    assert_eq!(csv_text.lines().count(), 32);
    assert!(csv_text.starts_with("n_total,n1,n2,bayes_power,bayes_t1e,pce_null,freq_t1e,freq_power"));
}

#[test]
fn out_file_receives_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bf.json");
    let out = bfbin(&[
        "bf", "--test", "plus0", "--n1", "10", "--y1", "2", "--n2", "10", "--y2", "8", "--output", "json",
        "--out-file", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(f(&v["result"]["bf"]) > 1.0);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["calibrate", "--test", "minus0", "--nmin", "10", "--nmax", "40", "--output", "json"];
    let run = |threads: Option<&str>, flag: &str| {
        let mut all = args.to_vec();
        all.extend(["--threads", flag]);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bfbin"));
        cmd.args(&all).env_remove("BFBIN_THREADS");
        if let Some(t) = threads {
            cmd.env("BFBIN_THREADS", t);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        serde_json::from_slice::<Value>(&out.stdout).unwrap()
    };
    let one = run(None, "1");
    let three = run(None, "3");
    let env = run(Some("2"), "1");
    assert_eq!(one["result"], three["result"]);
    assert_eq!(one["result"], env["result"]);
    assert_eq!(env["config"]["threads"], 2);

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bfbin"));
    let out = cmd.args(args).env("BFBIN_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
