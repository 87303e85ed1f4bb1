use std::path::Path;

use ictc_core::config::ExperimentConfig;
use ictc_core::fusion::FusionConfig;
use ictc_core::model::{convergence_experiment, examples, ConvergenceSetup, ModelConfig};
use ictc_core::Result;

use super::train::setup_from;
use crate::dataset::{create_dir, DataDir};
use crate::output::{write_csv, write_json};

/// Fused run from the config against the same config with lambda = 0.
pub fn run(
    config: &ExperimentConfig,
    workers: usize,
    data: &Path,
    out: &Path,
    max_epochs: Option<usize>,
    threshold: Option<f64>,
) -> Result<()> {
    let dir = DataDir::open(data)?;
    let (train_utts, dev_utts) = dir.train_dev()?;
    let setup = ConvergenceSetup {
        model: ModelConfig::new(dir.vocab.size(), train_utts[0].features.cols(), &config.model),
        train: setup_from(config, workers),
        fused: config.fusion,
        baseline: FusionConfig { lambda: 0.0, ..config.fusion },
        threshold: threshold.unwrap_or(config.experiment.convergence_threshold),
        max_epochs: max_epochs.unwrap_or(config.experiment.max_epochs),
        seeds: config.experiment.seeds.clone(),
    };
    let report = convergence_experiment(&setup, &examples(&train_utts), &examples(&dev_utts))?;
    create_dir(out)?;
    for r in &report.rows {
        let e = r.epochs_to_threshold.map_or("censored".to_string(), |e| e.to_string());
        println!("seed {} {}: {e}", r.seed, r.config);
    }
    println!(
        "median epochs to CER <= {}: fused {} baseline {}",
        report.threshold, report.median_fused, report.median_baseline
    );
    write_csv(&out.join("convergence.csv"), &report.rows)?;
    write_json(&out.join("convergence.json"), &report)
}
