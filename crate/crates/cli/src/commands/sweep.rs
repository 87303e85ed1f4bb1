use std::ops::ControlFlow;
use std::path::Path;

use ictc_core::config::{ExperimentConfig, ExperimentSection};
use ictc_core::fusion::{FusionConfig, FusionMode};
use ictc_core::model::{examples, train_epochs, Example, ModelConfig, ModelParams, TrainState};
use ictc_core::{Error, Result};

use super::train::setup_from;
use super::{decode_all, summarize};
use crate::dataset::{create_dir, DataDir};
use crate::output::{write_csv, write_json, write_table, ResultRow};

fn train_cell(
    config: &ExperimentConfig,
    workers: usize,
    model_config: ModelConfig,
    epochs: usize,
    train: &[Example<f64>],
) -> Result<ModelParams<f64>> {
    let mut state = TrainState::new(model_config, config.train.seed)?;
    let setup = setup_from(config, workers);
    train_epochs(&mut state, &setup, train, &[], epochs, |_, _| Ok(ControlFlow::Continue(())))?;
    Ok(state.params)
}

fn failed_row(mode: String, fusion: FusionMode, lambda: f64, alpha: f64, msg: String) -> ResultRow {
    ResultRow {
        mode,
        fusion: fusion.to_string(),
        lambda,
        alpha,
        cer: None,
        decode_latency_ms: None,
        rescore_latency_ms: None,
        rtf: None,
        error: Some(msg),
    }
}

fn describe(e: &Error) -> String {
    format!("error[{}]: {e}", e.kind())
}

pub fn run(config: &ExperimentConfig, exp: &ExperimentSection, workers: usize, data: &Path, out: &Path) -> Result<()> {
    let dir = DataDir::open(data)?;
    let (train_utts, dev_utts) = dir.train_dev()?;
    if dev_utts.is_empty() {
        return Err(Error::Usage("sweep needs a dev split".into()));
    }
    let model_config = ModelConfig::new(dir.vocab.size(), train_utts[0].features.cols(), &config.model);
    let train = examples::<f64>(&train_utts);
    let dev = examples::<f64>(&dev_utts);
    create_dir(out)?;

    let mut rows = Vec::new();
    for &fusion_mode in &exp.fusion_modes {
        for &alpha in &exp.alphas {
            for &lambda in &exp.lambdas {
                let mut cell = config.clone();
                cell.fusion = FusionConfig { mode: fusion_mode, lambda, ..config.fusion };
                cell.loss.alpha = alpha;
                let trained =
                    cell.validate().and_then(|_| train_cell(&cell, workers, model_config, exp.sweep_epochs, &train));
                for &mode in &exp.decode_modes {
                    let summary = trained.as_ref().map_err(describe).and_then(|model| {
                        decode_all(model, &dev, mode, &cell.decode, workers)
                            .and_then(|d| summarize(&dev_utts, &d))
                            .map_err(|e| describe(&e))
                    });
                    let row = match summary {
                        Ok(s) => ResultRow {
                            mode: mode.to_string(),
                            fusion: fusion_mode.to_string(),
                            lambda,
                            alpha,
                            cer: Some(s.cer),
                            decode_latency_ms: Some(s.mean_decode_ms),
                            rescore_latency_ms: s.mean_rescore_ms,
                            rtf: Some(s.rtf),
                            error: None,
                        },
                        Err(msg) => failed_row(mode.to_string(), fusion_mode, lambda, alpha, msg),
                    };
                    match (&row.cer, &row.error) {
                        (Some(c), _) => println!("{fusion_mode} alpha {alpha} lambda {lambda} {mode}: CER {c:.4}"),
                        (None, Some(e)) => println!("{fusion_mode} alpha {alpha} lambda {lambda} {mode}: failed ({e})"),
                        _ => {}
                    }
                    rows.push(row);
                }
            }
        }
    }
    write_csv(&out.join("sweep.csv"), &rows)?;
    write_json(&out.join("sweep.json"), &rows)?;
    write_pivot(&out.join("sweep_table.csv"), exp, &rows)
}

/// Modes as rows, lambdas as columns, CER in the cells.
fn write_pivot(path: &Path, exp: &ExperimentSection, rows: &[ResultRow]) -> Result<()> {
    let mut header = vec!["fusion".to_string(), "alpha".into(), "mode".into()];
    header.extend(exp.lambdas.iter().map(|l| l.to_string()));
    let mut records = Vec::new();
    for fusion in &exp.fusion_modes {
        for alpha in &exp.alphas {
            for mode in &exp.decode_modes {
                let mut rec = vec![fusion.to_string(), alpha.to_string(), mode.to_string()];
                for lambda in &exp.lambdas {
                    let cell = rows.iter().find(|r| {
                        r.fusion == fusion.as_str()
                            && r.alpha == *alpha
                            && r.mode == mode.as_str()
                            && r.lambda == *lambda
                    });
                    rec.push(match cell.and_then(|r| r.cer) {
                        Some(c) => format!("{c:.6}"),
                        None => "failed".into(),
                    });
                }
                records.push(rec);
            }
        }
    }
    write_table(path, &header, &records)
}
