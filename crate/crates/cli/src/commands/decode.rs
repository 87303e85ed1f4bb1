use std::path::Path;

use ictc_core::config::{DecodeConfig, ExperimentConfig};
use ictc_core::model::{examples, load_params, DecodeMode};
use ictc_core::Result;
use serde::Serialize;

use super::{decode_all, parse_modes, summarize};
use crate::dataset::{create_dir, DataDir};
use crate::output::{write_csv, write_json, write_jsonl, ResultRow};

#[derive(Serialize)]
struct HypLine<'a> {
    id: &'a str,
    tokens: Vec<String>,
    score: f64,
    latency_ms: f64,
}

pub fn hyps_file(mode: DecodeMode) -> String {
    format!("hyps_{mode}.jsonl")
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    config: &ExperimentConfig,
    decode: &DecodeConfig,
    workers: usize,
    checkpoint: &Path,
    data: &Path,
    split: &str,
    modes: &[String],
    out: &Path,
) -> Result<()> {
    let modes = parse_modes(modes)?;
    decode.validate()?;
    let dir = DataDir::open(data)?;
    let utts = dir.split(split)?;
    let model = load_params::<f64>(checkpoint)?;
    let exs = examples::<f64>(&utts);
    create_dir(out)?;

    let mut rows = Vec::new();
    for mode in modes {
        let decoded = decode_all(&model, &exs, mode, decode, workers)?;
        let lines: Vec<HypLine> = utts
            .iter()
            .zip(&decoded)
            .map(|(u, d)| HypLine {
                id: &u.id,
                tokens: dir.vocab.decode(&d.labels),
                score: d.score,
                latency_ms: d.decode_ms + d.rescore_ms.unwrap_or(0.0),
            })
            .collect();
        write_jsonl(&out.join(hyps_file(mode)), &lines)?;
        let s = summarize(&utts, &decoded)?;
        println!("{mode}: CER {:.4}, {:.3} ms/utt, RTF {:.5}", s.cer, s.mean_decode_ms, s.rtf);
        rows.push(ResultRow {
            mode: mode.to_string(),
            fusion: config.fusion.mode.to_string(),
            lambda: config.fusion.lambda,
            alpha: config.loss.alpha,
            cer: Some(s.cer),
            decode_latency_ms: Some(s.mean_decode_ms),
            rescore_latency_ms: s.mean_rescore_ms,
            rtf: Some(s.rtf),
            error: None,
        });
    }
    write_csv(&out.join("results.csv"), &rows)?;
    write_json(&out.join("results.json"), &rows)
}
