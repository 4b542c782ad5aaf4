use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hofbutter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hofbutter")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn spectrum_json_lists_bands_and_labelled_gaps() {
    let v: Value = serde_json::from_str(&stdout(&hofbutter(&["spectrum", "--p", "2", "--q", "5"]))).unwrap();
    assert_eq!(v["bands"].as_array().unwrap().len(), 5);
    let gaps = v["gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), 6);
    assert!(gaps[0]["lo"].is_null() && gaps[5]["hi"].is_null());
    let sigma: Vec<i64> = gaps.iter().map(|g| g["chern"].as_i64().unwrap()).collect();
    assert_eq!(sigma, [0, -2, 1, -1, 2, 0]);
}

#[test]
fn spectrum_csv_has_one_row_per_gap() {
    let text = stdout(&hofbutter(&["spectrum", "--p", "1", "--q", "3", "--format", "csv"]));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["p", "q", "j", "lo", "hi", "width", "closed", "chern", "source"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[0][3], "");
    assert_eq!((&rows[1][6], &rows[1][7]), ("false", "1"));
    assert_eq!((&rows[2][6], &rows[2][7]), ("true", ""));
}

#[test]
fn chern_reports_every_open_gap() {
    let lines = json_lines(&stdout(&hofbutter(&["chern", "--p", "3", "--q", "7", "--json"])));
    let sigma: Vec<i64> = lines.iter().map(|l| l["chern"].as_i64().unwrap()).collect();
    assert_eq!(sigma, [-2, -4, 1, -1, 4, 2]);

    let one = json_lines(&stdout(&hofbutter(&["chern", "--p", "3", "--q", "7", "--gap", "2", "--json"])));
    assert_eq!(one.len(), 1);
    assert_eq!(one[0]["chern"], -4);

    let t = json_lines(&stdout(&hofbutter(&[
        "chern", "--p", "3", "--q", "7", "--gap", "2", "--method", "transport", "--json",
    ])));
    assert_eq!(t[0]["chern"], (-4i64).rem_euclid(7));
}

#[test]
fn chern_refuses_a_closed_gap() {
    let out = hofbutter(&["chern", "--p", "1", "--q", "3", "--gap", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn dioph_resolves_with_the_chosen_window() {
    let lines = json_lines(&stdout(&hofbutter(&["dioph", "--p", "3", "--q", "7", "--strategy", "triangular"])));
    assert_eq!(lines.len(), 8);
    for l in &lines {
        let (j, r) = (l["j"].as_i64().unwrap(), l["residue"].as_i64().unwrap());
        assert_eq!(r, (5 * j).rem_euclid(7));
        if let Some(s) = l["sigma"].as_i64() {
            assert_eq!((s - r).rem_euclid(7), 0);
        }
    }
    let sq = json_lines(&stdout(&hofbutter(&["dioph", "--p", "3", "--q", "7", "--j", "2", "--strategy", "square"])));
    assert_eq!(sq[0]["sigma"], 3);
}

#[test]
fn butterfly_round_trips_through_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let (jsonl, direct, rerendered) = (p("d.jsonl"), p("a.ppm"), p("b.ppm"));
    let common = ["--qmax", "6", "--mu-bins", "120", "--height", "90"];
    stdout(&hofbutter(&[&["butterfly", "--out", &jsonl, "--render", &direct][..], &common[..]].concat()));
    stdout(&hofbutter(&[
        "butterfly", "--input", &jsonl, "--format", "ppm", "--out", &rerendered, "--mu-bins", "120", "--height", "90",
    ]));
    let a = std::fs::read(&direct).unwrap();
    let header: Vec<&[u8]> = a.split(|b| b.is_ascii_whitespace()).take(4).collect();
    assert_eq!(header, [&b"P6"[..], b"120", b"90", b"255"]);
    assert_eq!(a, std::fs::read(&rerendered).unwrap());

    let lines = json_lines(&std::fs::read_to_string(&jsonl).unwrap());
    assert_eq!(lines[0]["kind"], "header");
    assert_eq!(lines[0]["config"]["q_max"], 6);
    let gaps = lines.iter().filter(|l| l["kind"] == "gap").count();
    let expected: u64 = [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 5), (2, 5), (3, 5), (4, 5), (1, 6), (5, 6), (1, 1)]
        .iter()
        .map(|&(_, q)| q + 1)
        .sum();
    assert_eq!(gaps as u64, expected);
}

#[test]
fn streda_check_sets_the_exit_code() {
    let clean = hofbutter(&["butterfly", "--qmax", "5", "--resolver", "computed", "--check", "--out", "-"]);
    assert!(clean.status.success());
    assert!(String::from_utf8_lossy(&clean.stderr).contains("0 inconsistent"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "p = 2\nq = 5\nphi-d = \"-pi/2\"\nformat = \"csv\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&hofbutter(&["spectrum", "--config", cfg]));
    assert!(from_file.starts_with("p,q,j,"));
    let overridden: Value =
        serde_json::from_str(&stdout(&hofbutter(&["--config", cfg, "spectrum", "--q", "7", "--p", "3", "--format", "json"])))
            .unwrap();
    assert_eq!((overridden["p"].as_u64(), overridden["q"].as_u64()), (Some(3), Some(7)));
    assert!((overridden["phi_d"].as_f64().unwrap() + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn bad_input_exits_with_code_2() {
    for args in [
        &["spectrum", "--p", "2", "--q", "4"][..],
        &["spectrum", "--p", "1", "--q", "3", "--phi-d", "pie"],
        &["butterfly", "--qmax", "0"],
        &["butterfly", "--input", "/nonexistent/file.jsonl"],
        &["verify", "--suite", "nope"],
    ] {
        assert_eq!(hofbutter(args).status.code(), Some(2), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "qmax = 4\nunknown-key = 1\n").unwrap();
    assert_eq!(hofbutter(&["butterfly", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert!(!Path::new("-").exists());
}

#[test]
fn verify_algebra_suite_passes() {
    let out = hofbutter(&["verify", "--suite", "algebra", "--json"]);
    let lines = json_lines(&stdout(&out));
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l["passed"] == true && l["suite"] == "algebra"));
}
