mod common;

use std::fs;
use std::path::Path;

use common::{files, ok, read_json, read_jsonl, run, s, stderr, stripped_tree, write_config};
use ictc_core::config::ModelDims;
use ictc_core::data::{SyntheticTask, SyntheticTaskSpec};
use ictc_core::model::{save_params, ModelConfig, ModelParams};

const SMALL: &str = "
[data]
train_utterances = 100
dev_utterances = 20

[optim]
warmup_steps = 20
";

fn gen(dir: &Path, config: &Path) -> std::path::PathBuf {
    let data = dir.join("data");
    ok(&["--config", s(config), "gen-data", "--out", s(&data)]);
    data
}

#[test]
fn gen_data_writes_manifests_and_features() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let data = gen(dir.path(), &cfg);
    assert_eq!(read_jsonl(&data.join("train.jsonl")).len(), 100);
    assert_eq!(fs::read_dir(data.join("feats/train")).unwrap().count(), 100);
    assert_eq!(read_jsonl(&data.join("dev.jsonl")).len(), 20);
    assert_eq!(fs::read_to_string(data.join("vocab.txt")).unwrap().lines().count(), 12);

    let again = dir.path().join("again");
    ok(&["--config", s(&cfg), "gen-data", "--out", s(&again)]);
    assert_eq!(stripped_tree(&data), stripped_tree(&again));
    let other = dir.path().join("other");
    ok(&["--config", s(&cfg), "--seed", "99", "gen-data", "--out", s(&other)]);
    assert_ne!(stripped_tree(&data), stripped_tree(&other));
}

#[test]
fn unwritable_output_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out");
    let out = run(&["gen-data", "--out", s(&target)]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error[io]: "), "{err}");
    assert!(err.contains(s(&target)), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn usage_errors_exit_nonzero_with_one_line() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[usage]: "));
    let out = run(&["decode", "--checkpoint", "x", "--data", "y", "--out", "z", "--mode", "beam"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error["), "{}", stderr(&out));
}

#[test]
fn train_boundaries_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let data = gen(dir.path(), &cfg);

    let zero = dir.path().join("zero");
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&zero), "--epochs", "0"]);
    assert_eq!(files(&zero), vec!["checkpoint_000.json", "train_log.jsonl"]);
    assert!(read_jsonl(&zero.join("train_log.jsonl")).is_empty());

    let straight = dir.path().join("straight");
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&straight), "--epochs", "6"]);
    let log = read_jsonl(&straight.join("train_log.jsonl"));
    assert_eq!(log.len(), 6);
    for key in ["epoch", "loss", "dev_cer", "wall_ms"] {
        assert!(log[0].get(key).is_some(), "{key}");
    }

    let half = dir.path().join("half");
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&half), "--epochs", "3"]);
    let resumed = dir.path().join("resumed");
    let from = half.join("checkpoint_003.json");
    ok(&[
        "--config",
        s(&cfg),
        "train",
        "--data",
        s(&data),
        "--out",
        s(&resumed),
        "--epochs",
        "6",
        "--resume",
        s(&from),
    ]);
    let a = stripped_tree(&straight);
    let b = stripped_tree(&resumed);
    assert_eq!(a["checkpoint_006.json"], b["checkpoint_006.json"]);
    assert_eq!(a["train_log.jsonl"], b["train_log.jsonl"]);

    ok(&[
        "--config",
        s(&cfg),
        "train",
        "--data",
        s(&data),
        "--out",
        s(&half),
        "--epochs",
        "3",
        "--average",
        "2",
        "--resume",
        s(&from),
    ]);
    assert!(half.join("averaged.json").exists());
}

#[test]
fn decode_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let data = gen(dir.path(), &cfg);
    let model = dir.path().join("model");
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&model), "--epochs", "4"]);
    let ckpt = model.join("checkpoint_004.json");

    let dec = dir.path().join("dec");
    ok(&[
        "--config",
        s(&cfg),
        "decode",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&data),
        "--out",
        s(&dec),
        "--n-best",
        "1",
        "--mode",
        "attention_rescore",
        "--mode",
        "ctc_prefix_beam",
    ]);
    let strip = |p: &str| -> Vec<_> {
        read_jsonl(&dec.join(p)).into_iter().map(|v| (v["id"].clone(), v["tokens"].clone())).collect()
    };
    let rescored = strip("hyps_attention_rescore.jsonl");
    assert_eq!(rescored.len(), 20);
    assert_eq!(rescored, strip("hyps_ctc_prefix_beam.jsonl"));

    let all = dir.path().join("all");
    ok(&["--config", s(&cfg), "decode", "--checkpoint", s(&ckpt), "--data", s(&data), "--out", s(&all)]);
    let rows = read_json(&all.join("results.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!(row["decode_latency_ms"].as_f64().unwrap() >= 0.0);
        assert!(row["rtf"].as_f64().unwrap() > 0.0);
        assert!(row["cer"].as_f64().unwrap() >= 0.0);
        let rescore = &row["rescore_latency_ms"];
        assert_eq!(row["mode"] == "attention_rescore", !rescore.is_null(), "{row}");
    }
    for line in read_jsonl(&all.join("hyps_ctc_greedy.jsonl")) {
        assert!(line["latency_ms"].as_f64().unwrap() >= 0.0);
        assert!(line["score"].as_f64().unwrap() <= 0.0);
    }
    let header = fs::read_to_string(all.join("results.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "mode,fusion,lambda,alpha,cer,decode_latency_ms,rescore_latency_ms,rtf,error"
    );
}

/// A model whose CTC branch picks the token with the closest prototype.
fn prototype_model(spec: &SyntheticTaskSpec) -> ModelParams<f64> {
    let task = SyntheticTask::new(spec.clone()).unwrap();
    let dims = ModelDims { d_model: 16, ..ModelDims::default() };
    let cfg = ModelConfig::new(spec.vocab_size, spec.feature_dim, &dims);
    let mut m = ModelParams::<f64>::zeros(cfg).unwrap();
    for b in &mut m.encoder.blocks {
        b.ln_gain.fill(1.0);
    }
    for k in task.vocab().content_ids() {
        let p = task.prototype(k);
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (f, &x) in p.iter().enumerate() {
            m.encoder.w_in[(f, k)] = 1000.0 * x / norm;
        }
        m.ctc_w[(k, k)] = 10.0;
    }
    m
}

#[test]
fn greedy_ctc_is_exact_for_a_prototype_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[task]\nnoise_std = 0.0\n"));
    let data = gen(dir.path(), &cfg);
    let ckpt = dir.path().join("proto.json");
    let spec = SyntheticTaskSpec { noise_std: 0.0, ..SyntheticTaskSpec::default() };
    save_params(&ckpt, &prototype_model(&spec)).unwrap();
    let dec = dir.path().join("dec");
    ok(&[
        "--config",
        s(&cfg),
        "decode",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&data),
        "--out",
        s(&dec),
        "--mode",
        "ctc_greedy",
    ]);
    let rows = read_json(&dec.join("results.json"));
    assert_eq!(rows[0]["cer"].as_f64(), Some(0.0), "{rows}");
    let eval = ok(&["eval", "--hyps", s(&dec.join("hyps_ctc_greedy.jsonl")), "--manifest", s(&data.join("dev.jsonl"))]);
    let report: serde_json::Value = serde_json::from_str(eval.trim()).unwrap();
    assert_eq!(report["cer"], 0.0);
    assert_eq!(report["utterances"], 20);
}

fn eval_case(dir: &Path, refs: &[(&str, &str)], hyps: &[(&str, &[&str])]) -> std::process::Output {
    let manifest = dir.join("m.jsonl");
    let lines: Vec<String> = refs
        .iter()
        .map(|(id, t)| serde_json::json!({"id": id, "features": format!("{id}.csv"), "transcript": t}).to_string())
        .collect();
    fs::write(&manifest, lines.join("\n")).unwrap();
    let hyp_path = dir.join("h.jsonl");
    let lines: Vec<String> = hyps
        .iter()
        .map(|(id, t)| serde_json::json!({"id": id, "tokens": t, "score": 0.0, "latency_ms": 0.0}).to_string())
        .collect();
    fs::write(&hyp_path, lines.join("\n")).unwrap();
    run(&["eval", "--hyps", s(&hyp_path), "--manifest", s(&manifest)])
}

fn eval_cer(out: std::process::Output) -> f64 {
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    v["cer"].as_f64().unwrap()
}

#[test]
fn eval_aggregates_over_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let refs = [("u1", "a b"), ("u2", "c d e f")];
    assert_eq!(eval_cer(eval_case(dir.path(), &refs, &[("u1", &["a", "b"]), ("u2", &["c", "d", "e", "f"])])), 0.0);
    let one_error = eval_cer(eval_case(dir.path(), &refs, &[("u2", &["c", "d", "e", "f"]), ("u1", &["a"])]));
    assert!((one_error - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(eval_cer(eval_case(dir.path(), &refs, &[("u1", &[]), ("u2", &[])])), 1.0);

    let missing = eval_case(dir.path(), &refs, &[("u1", &["a", "b"])]);
    assert!(!missing.status.success());
    assert!(stderr(&missing).starts_with("error[ingest]: id mismatch"), "{}", stderr(&missing));
    let extra = eval_case(dir.path(), &refs, &[("u1", &[]), ("u2", &[]), ("u3", &[])]);
    assert!(stderr(&extra).contains("\"u3\""));
}

#[test]
fn sweep_single_cell_and_bench_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let data = gen(dir.path(), &cfg);
    let sweep = dir.path().join("sweep");
    ok(&[
        "--config",
        s(&cfg),
        "sweep",
        "--data",
        s(&data),
        "--out",
        s(&sweep),
        "--lambdas",
        "0.05",
        "--alphas",
        "0.5",
        "--fusion",
        "dal",
        "--mode",
        "ctc_greedy",
        "--epochs",
        "1",
    ]);
    let rows = read_json(&sweep.join("sweep.json"));
    assert_eq!(rows.as_array().unwrap().len(), 1);
    let csv = fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let table = fs::read_to_string(sweep.join("sweep_table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("fusion,alpha,mode,0.05"));

    let model = dir.path().join("model");
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&model), "--epochs", "1"]);
    let bench = dir.path().join("bench");
    ok(&[
        "--config",
        s(&cfg),
        "bench",
        "--checkpoint",
        s(&model.join("checkpoint_001.json")),
        "--data",
        s(&data),
        "--out",
        s(&bench),
        "--repetitions",
        "3",
        "--note",
        "ci",
    ]);
    let report = read_json(&bench.join("bench.json"));
    assert_eq!(report["repetitions"], 3);
    assert_eq!(report["machine"]["note"], "ci");
    assert!(report["machine"]["cpus"].as_u64().unwrap() >= 1);
    for m in report["modes"].as_array().unwrap() {
        assert_eq!(m["mode"] == "attention_rescore", !m["rescore_latency_ms"].is_null());
        assert!(m["decode_latency_ms"]["median"].as_f64().unwrap() >= 0.0);
        assert!(m["decode_latency_ms"]["p95"].as_f64().unwrap() >= m["decode_latency_ms"]["median"].as_f64().unwrap());
        assert!(m["rtf"]["median"].as_f64().unwrap() > 0.0);
    }
    let too_few = run(&[
        "bench",
        "--checkpoint",
        s(&model.join("checkpoint_001.json")),
        "--data",
        s(&data),
        "--out",
        s(&bench),
        "--repetitions",
        "2",
    ]);
    assert!(!too_few.status.success());
}

/// Timing-sensitive; run on an idle machine with `--ignored`.
#[test]
#[ignore]
fn bench_medians_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let data = gen(dir.path(), &cfg);
    let model = dir.path().join("model");
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&model), "--epochs", "1"]);
    let ckpt = model.join("checkpoint_001.json");
    let medians = |out: &Path| -> Vec<f64> {
        ok(&[
            "--config",
            s(&cfg),
            "bench",
            "--checkpoint",
            s(&ckpt),
            "--data",
            s(&data),
            "--out",
            s(out),
            "--repetitions",
            "9",
        ]);
        read_json(&out.join("bench.json"))["modes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["decode_latency_ms"]["median"].as_f64().unwrap())
            .collect()
    };
    let a = medians(&dir.path().join("a"));
    let b = medians(&dir.path().join("b"));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 0.2 * x.max(*y), "{x} vs {y}");
    }
}
