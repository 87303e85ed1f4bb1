#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ictc_cli::strip_timing;
use serde_json::Value;

/// Runs the `ictc` binary and returns its output without checking status.
pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ictc")).args(args).output().expect("spawn ictc")
}

/// Runs the `ictc` binary and panics with its stderr on failure.
pub fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "ictc {} failed:\n{}", args.join(" "), String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

pub fn read_jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn is_timing(column: &str) -> bool {
    column == "rtf" || column == "wall_ms" || column.contains("latency") || column.starts_with("rtf_")
}

/// CSV rows with timing columns removed.
fn strip_csv(path: &Path) -> Value {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let keep: Vec<usize> = (0..headers.len()).filter(|&i| !is_timing(&headers[i])).collect();
    let mut rows = vec![Value::from(keep.iter().map(|&i| headers[i].to_string()).collect::<Vec<_>>())];
    for rec in reader.records() {
        let rec = rec.unwrap();
        rows.push(Value::from(keep.iter().map(|&i| rec[i].to_string()).collect::<Vec<_>>()));
    }
    Value::from(rows)
}

/// Every file under `root`, keyed by relative path, with timing fields removed.
pub fn stripped_tree(root: &Path) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            let value = match path.extension().and_then(|e| e.to_str()) {
                Some("json") => strip_timing(read_json(&path)),
                Some("jsonl") => Value::from(read_jsonl(&path).into_iter().map(strip_timing).collect::<Vec<_>>()),
                Some("csv") if rel.starts_with("feats") || rel.contains("/feats/") => {
                    Value::from(fs::read_to_string(&path).unwrap())
                }
                Some("csv") => strip_csv(&path),
                _ => Value::from(fs::read_to_string(&path).unwrap()),
            };
            out.insert(rel, value);
        }
    }
    out
}

/// Lists files under `root` relative to it, sorted.
pub fn files(root: &Path) -> Vec<String> {
    stripped_tree(root).into_keys().collect()
}
