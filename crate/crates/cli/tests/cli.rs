use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
  let out = Command::new(env!("CARGO_BIN_EXE_tits")).args(args).arg("--json").output().unwrap();
  let code = out.status.code().unwrap();
  let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
  (code, json)
}

fn strip_timings(mut v: Value) -> Value {
  v.as_object_mut().unwrap().remove("timings_ms");
  v
}

#[test]
fn build_reports_counts() {
  let (code, r) = run(&["build", "3", "2"]);
  assert_eq!(code, 0);
  assert_eq!(r["results"]["summary"]["chambers"], 21);
  assert_eq!(r["results"]["thickness"], 3);
  let (code, r) = run(&["build", "--n", "2", "--q", "2"]);
  assert_eq!(code, 0);
  assert_eq!(r["results"]["summary"]["chambers"], 3);
}

#[test]
fn caps_exit_with_usage_code() {
  assert_eq!(run(&["build", "9", "9"]).0, 2);
  assert_eq!(run(&["extend", "local", "--n", "3", "--q", "2", "--plant", "frobenius"]).0, 2);
  assert_eq!(run(&["extend", "local", "--plant", "bogus"]).0, 2);
}

#[test]
fn build_writes_building_file() {
  let dir = std::env::temp_dir().join(format!("tits-cli-{}", std::process::id()));
  std::fs::create_dir_all(&dir).unwrap();
  let path = dir.join("fano.json");
  let (code, _) = run(&["build", "3", "2", "--out", path.to_str().unwrap()]);
  assert_eq!(code, 0);
  let b: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
  assert_eq!(b["chambers"].as_array().unwrap().len(), 21);
  std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn rigidity_examples() {
  let (code, r) = run(&["rigidity", "3", "2"]);
  assert_eq!(code, 0);
  assert_eq!(r["results"]["automorphisms_tested"], 168);
  assert_eq!(r["results"]["survivor_counts"]["1"], 1);
  assert_eq!(run(&["rigidity", "2", "2"]).0, 2);
  assert_eq!(run(&["rigidity", "4", "2"]).0, 0);
}

#[test]
fn extend_examples() {
  let (code, r) = run(&["extend", "e2", "--n", "4", "--q", "2", "--seed", "0"]);
  assert_eq!(code, 0);
  assert_eq!(r["results"]["exact_match"], true);
  let (code, r) = run(&["extend", "local", "--n", "3", "--q", "4", "--plant", "random,frobenius"]);
  assert_eq!(code, 0, "{r}");
  assert_eq!(r["results"]["frobenius"], 1);
  let (code, r) = run(&["extend", "borel-tits", "--n", "3", "--q", "2", "--plant", "identity"]);
  assert_eq!(code, 0);
  assert_eq!(r["results"]["classification"]["conjugator"], serde_json::json!([[1, 0, 0], [0, 1, 0], [0, 0, 1]]));
}

#[test]
fn reports_are_deterministic() {
  let args = ["extend", "local", "--n", "3", "--q", "3", "--seed", "7", "--plant", "random,duality"];
  assert_eq!(strip_timings(run(&args).1), strip_timings(run(&args).1));
}

#[test]
fn other_subcommands() {
  assert_eq!(run(&["verify-axioms", "3", "3"]).0, 0);
  let (code, r) = run(&["moufang", "3", "2"]);
  assert_eq!(code, 0);
  assert_eq!(r["results"]["roots_checked"], 28 * 6);
  let (code, r) = run(&["stats", "3", "2"]);
  assert_eq!(code, 0);
  assert_eq!(r["results"]["big_cell"]["big_cell"], 64);
  assert_eq!(run(&["probe-min-domain", "3", "2"]).0, 0);
}
