use std::path::Path;
use std::process::{Command, Output};

use xorfold::{keyfile, BitString};

fn xorfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xorfold"))
        .args(args)
        .env_remove("PA_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn write_key(path: &Path, bits: &str) {
    keyfile::write(path, &bits.parse::<BitString>().unwrap()).unwrap();
}

#[test]
fn plan_presets_and_trivial_case() {
    let o = xorfold(&["plan", "--scheme", "kljn", "--epsilon", "0.0006"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!((field(&out, "k"), field(&out, "blockSize")), ("2", "4"));
    assert_eq!(field(&out, "P^k(p)"), "0.50000");

    let out = stdout(&xorfold(&["plan", "--scheme", "ufl", "--epsilon", "0.0006"]));
    assert_eq!((field(&out, "k"), field(&out, "blockSize")), ("3", "8"));

    let out = stdout(&xorfold(&["plan", "--p", "0.5", "--epsilon", "0.0006"]));
    assert_eq!((field(&out, "k"), field(&out, "blockSize")), ("0", "1"));
    assert_eq!(field(&out, "residualLeak"), "0");
}

#[test]
fn plan_exit_codes() {
    assert_eq!(xorfold(&["plan", "--p", "1.2"]).status.code(), Some(2));
    assert_eq!(xorfold(&["plan", "--p", "0.7", "--epsilon", "0"]).status.code(), Some(2));
    assert_eq!(xorfold(&["plan", "--scheme", "bb84"]).status.code(), Some(1));
    assert_eq!(
        xorfold(&["plan", "--p", "0.7", "--epsilon", "0.001", "--leak-target", "1e-8"]).status.code(),
        Some(1)
    );
}

#[test]
fn fold_distills_key_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.pak");
    let output = dir.path().join("final.pak");
    write_key(&input, "11010110");
    let o = xorfold(&[
        "fold", "--input", input.to_str().unwrap(), "--k", "2", "--output", output.to_str().unwrap(), "--hex",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(keyfile::read(&output).unwrap().to_string(), "10");
    assert!(stdout(&o).contains("final bits: 2"));
    assert!(stdout(&o).lines().any(|l| l == "80"));
    assert!(stderr(&o).contains("surplus raw bits: 0"));
}

#[test]
fn fold_zero_truncates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.pak");
    let output = dir.path().join("final.pak");
    write_key(&input, "1011001");
    let o = xorfold(&[
        "fold", "--input", input.to_str().unwrap(), "--k", "0", "--final-bits", "5", "--output",
        output.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(keyfile::read(&output).unwrap().to_string(), "10110");
    assert!(stderr(&o).contains("surplus raw bits: 2"));
}

#[test]
fn fold_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.pak");
    let output = dir.path().join("final.pak");
    let (i, out) = (input.to_str().unwrap(), output.to_str().unwrap());
    write_key(&input, "1101011");
    let short = xorfold(&["fold", "--input", i, "--k", "2", "--final-bits", "2", "--output", out]);
    assert_eq!(short.status.code(), Some(4));
    assert!(!output.exists());
    assert_eq!(xorfold(&["fold", "--input", i, "--k", "3", "--output", out]).status.code(), Some(4));

    let missing = dir.path().join("nope.pak");
    let o = xorfold(&["fold", "--input", missing.to_str().unwrap(), "--k", "1", "--output", out]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::write(&input, b"not a key file").unwrap();
    assert_eq!(xorfold(&["fold", "--input", i, "--k", "1", "--output", out]).status.code(), Some(3));
    assert_eq!(xorfold(&["fold", "--input", i, "--k", "63", "--output", out]).status.code(), Some(2));
}

#[test]
fn simulate_coin_flip_eve() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = xorfold(&[
        "simulate", "--scheme", "custom", "--p", "0.5", "--fidelity", "1", "--final-bits", "1000", "--seed", "7",
        "--report", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["k"], 0);
    assert_eq!(r["siftStats"]["discarded"], 0);
    let rate = r["empiricalEveRate"].as_f64().unwrap();
    assert!((rate - 0.5).abs() <= 4.0 * (0.25f64 / 1000.0).sqrt(), "{rate}");
    assert!(stdout(&o).contains("alice/bob keys identical: true"));
}

#[test]
fn simulate_report_is_reproducible_and_seed_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &Path| {
        vec!["simulate", "--scheme", "liu", "--final-bits", "5000", "--report", p.to_str().unwrap()]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let mut with_flag = args(&a);
    with_flag.extend(["--seed".into(), "42".into()]);
    assert!(Command::new(env!("CARGO_BIN_EXE_xorfold")).args(&with_flag).status().unwrap().success());
    let status = Command::new(env!("CARGO_BIN_EXE_xorfold"))
        .args(args(&b))
        .env("PA_SEED", "42")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!((r["preset"].as_str(), r["seed"].as_u64(), r["slowdown"].as_f64()), (Some("Liu"), Some(42), Some(4.0)));
}

#[test]
fn simulate_parameter_errors() {
    let base = ["simulate", "--final-bits", "10", "--seed", "1"];
    let run = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        xorfold(&args).status.code()
    };
    assert_eq!(run(&["--scheme", "custom", "--p", "1.0", "--fidelity", "1"]), Some(2));
    assert_eq!(run(&["--scheme", "custom", "--p", "0.6", "--fidelity", "0"]), Some(2));
    assert_eq!(run(&["--scheme", "kljn", "--k", "70"]), Some(2));
    assert_eq!(run(&["--scheme", "custom", "--p", "0.6"]), Some(1));
    assert_eq!(run(&["--scheme", "kljn", "--p", "0.6"]), Some(1));
    assert_eq!(xorfold(&["simulate", "--scheme", "kljn", "--final-bits", "10"]).status.code(), Some(1));
    assert_eq!(
        xorfold(&["simulate", "--scheme", "kljn", "--final-bits", "0", "--seed", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn leak_command() {
    assert_eq!(field(&stdout(&xorfold(&["leak", "--p", "0.5"])), "leak"), "0");
    assert_eq!(field(&stdout(&xorfold(&["leak", "--p", "0.525"])), "leak"), "1.80412e-3");
    let out = stdout(&xorfold(&["leak", "--target", "1e-8"]));
    assert!(field(&out, "p").starts_with("0.5000588"), "{out}");
    assert!(out.contains("not 0.5006"));
    assert_eq!(xorfold(&["leak", "--p", "0.3"]).status.code(), Some(2));
    assert_eq!(xorfold(&["leak", "--target", "1.5"]).status.code(), Some(2));
}

#[test]
fn table_command() {
    let o = xorfold(&["table"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row = |p: &str| -> Vec<String> {
        out.lines()
            .find(|l| l.split_whitespace().next() == Some(p))
            .unwrap()
            .split_whitespace()
            .map(String::from)
            .collect()
    };
    assert_eq!(row("0.525")[1..4], ["2", "4", "0.50000"]);
    assert_eq!(row("0.6")[1..4], ["3", "8", "0.50000"]);
    assert_eq!(row("0.525").len(), 5);
    assert_eq!(row("0.9")[1], "5");
    assert!(row("0.9").join(" ").contains("published k=6"));
    let other = stdout(&xorfold(&["table", "--epsilon", "0.01"]));
    assert!(!other.contains("published"));
}
