use std::process::{Command, Output};

use serde_json::Value;

fn mixsprt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixsprt")).args(args).env_remove("MIXSPRT_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data lines of one CSV table, header included.
fn csv_table(text: &str, name: &str) -> Vec<Vec<String>> {
    let marker = format!("# table: {name}");
    let body: String = text
        .lines()
        .skip_while(|l| *l != marker)
        .skip(1)
        .take_while(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn fingerprint(text: &str) -> String {
    text.lines().find_map(|l| l.strip_prefix("# fingerprint: ")).unwrap().to_string()
}

#[test]
fn invalid_configuration_exits_with_2() {
    let o = mixsprt(&["analyze", "--means", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mixsprt(&["analyze"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mixsprt(&["simulate-error", "--means", "1,2", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mixsprt(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn numerical_failure_exits_with_3() {
    // the overshoot series needs ~1e9 terms at this mean and hits its term cap
    let o = mixsprt(&["analyze", "--means", "0.001"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
}

#[test]
fn grid_size_must_fill_whole_panels() {
    let o = mixsprt(&["continuous", "--interval", "0.2,0.8", "--grid-size", "12"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_with_0() {
    let o = mixsprt(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulate-error"));
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let args =
        ["simulate-error", "--means", "1,2,3", "--alpha", "0.001", "--mixing", "optimal,uniform", "--reps", "3000"];
    let csv_out = stdout(&mixsprt(&args));
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let json: Value = serde_json::from_str(&stdout(&mixsprt(&json_args))).unwrap();

    let table = json["tables"].as_array().unwrap().iter().find(|t| t["name"] == "error_probability").unwrap();
    let rows = csv_table(&csv_out, "error_probability");
    let header = &rows[0];
    let columns: Vec<&str> = table["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert_eq!(header, &columns);
    let json_rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len() - 1, json_rows.len());
    for (csv_row, json_row) in rows[1..].iter().zip(json_rows) {
        for (c, j) in csv_row.iter().zip(json_row.as_array().unwrap()) {
            match j {
                Value::Number(n) => {
                    let x = n.as_f64().unwrap();
                    let y: f64 = c.parse().unwrap();
                    assert!((x - y).abs() <= 5e-6 * x.abs().max(1e-300), "{c} vs {x}");
                }
                Value::String(s) => assert_eq!(c, s),
                Value::Null => assert!(c.is_empty()),
                other => assert_eq!(c, &other.to_string()),
            }
        }
    }
    assert_eq!(fingerprint(&csv_out), json["fingerprint"].as_str().unwrap());
}

#[test]
fn runs_are_reproducible_and_seeded() {
    let args = ["simulate-ess", "--means", "1,2", "--alpha", "0.01", "--mixing", "optimal", "--reps", "2000"];
    let a = stdout(&mixsprt(&args));
    let b = stdout(&mixsprt(&args));
    assert_eq!(a, b);

    let mut workers = args.to_vec();
    workers.extend(["--workers", "3"]);
    let w = stdout(&mixsprt(&workers));
    assert_eq!(csv_table(&a, "kl_information"), csv_table(&w, "kl_information"));

    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "99"]);
    let c = stdout(&mixsprt(&seeded));
    assert_ne!(csv_table(&a, "kl_information"), csv_table(&c, "kl_information"));
    assert_ne!(fingerprint(&a), fingerprint(&c));

    let env = Command::new(env!("CARGO_BIN_EXE_mixsprt")).args(args).env("MIXSPRT_SEED", "99").output().unwrap();
    assert_eq!(csv_table(&stdout(&env), "kl_information"), csv_table(&c, "kl_information"));
}

#[test]
fn config_file_takes_precedence_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(
        &path,
        r#"{"model": {"kind": "gaussian-mean", "means": [1.0, 2.0, 3.0]}, "mixing": "optimal", "alpha": 0.0001}"#,
    )
    .unwrap();
    let from_file = stdout(&mixsprt(&["analyze", "--config", path.to_str().unwrap(), "--means", "5"]));
    let from_flags = stdout(&mixsprt(&["analyze", "--means", "1,2,3", "--mixing", "optimal", "--alpha", "0.0001"]));
    assert_eq!(from_file, from_flags);
    assert_eq!(csv_table(&from_file, "quantities").len(), 4);

    let out = dir.path().join("out.csv");
    let o = mixsprt(&["analyze", "--config", path.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap(), from_file);
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"model": {"kind": "gaussian-mean", "means": [1.0]}, "alpah": 0.01}"#).unwrap();
    let o = mixsprt(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn continuous_and_overshoot_commands_report_tables() {
    let o = mixsprt(&["continuous", "--interval", "0.2,0.8", "--alpha", "0.001", "--theta-points", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(csv_table(&text, "theta_grid").len(), 21);
    assert_eq!(csv_table(&text, "bounds").len(), 2);

    let o = mixsprt(&["overshoot", "--thetas", "0.5", "--reps", "4000"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_table(&stdout(&o), "overshoot");
    let delta = rows[0].iter().position(|c| c == "delta").unwrap();
    assert_eq!(rows[1][delta], "0.5");
}
