//! Epochs-to-threshold comparison of a fused configuration against a
//! baseline over several seeds.

use std::ops::ControlFlow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::train::{train_epochs, Example, TrainSetup, TrainState};
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::fusion::{FusionConfig, FusionMode};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSetup {
    pub model: ModelConfig,
    /// Shared training settings; only the fusion config differs per arm.
    pub train: TrainSetup,
    pub fused: FusionConfig,
    pub baseline: FusionConfig,
    pub threshold: f64,
    pub max_epochs: usize,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub seed: u64,
    /// `"fused"` or `"baseline"`.
    pub config: String,
    /// First epoch whose dev CER reached the threshold; `None` if censored.
    pub epochs_to_threshold: Option<usize>,
    pub final_dev_cer: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub threshold: f64,
    pub max_epochs: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Medians with censored runs counted as `max_epochs + 1`.
    pub median_fused: f64,
    pub median_baseline: f64,
}

impl ConvergenceReport {
    pub fn fused_not_slower(&self) -> bool {
        self.median_fused <= self.median_baseline
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

fn run_arm(
    setup: &ConvergenceSetup,
    fusion: FusionConfig,
    seed: u64,
    train: &[Example<f64>],
    dev: &[Example<f64>],
) -> Result<(Option<usize>, f64, f64)> {
    let start = Instant::now();
    let mut state = TrainState::<f64>::new(setup.model, seed)?;
    let arm = TrainSetup { fusion, ..setup.train };
    let mut hit = None;
    let mut last = f64::NAN;
    train_epochs(&mut state, &arm, train, dev, setup.max_epochs, |_, rec| {
        last = rec.dev_cer.unwrap_or(f64::NAN);
        if last <= setup.threshold {
            hit = Some(rec.epoch);
            return Ok(ControlFlow::Break(()));
        }
        Ok(ControlFlow::Continue(()))
    })?;
    Ok((hit, last, start.elapsed().as_secs_f64() * 1e3))
}

pub fn convergence_experiment(
    setup: &ConvergenceSetup,
    train: &[Example<f64>],
    dev: &[Example<f64>],
) -> Result<ConvergenceReport> {
    if setup.seeds.is_empty() {
        return Err(Error::Usage("convergence experiment needs at least one seed".into()));
    }
    if dev.is_empty() {
        return Err(Error::Usage("convergence experiment needs a dev set".into()));
    }
    if setup.baseline.mode != FusionMode::None && setup.baseline.lambda != 0.0 {
        return Err(Error::Config(format!(
            "baseline must not fuse (lambda 0 or mode none), got {} with lambda {}",
            setup.baseline.mode, setup.baseline.lambda
        )));
    }
    let mut rows = Vec::with_capacity(2 * setup.seeds.len());
    for &seed in &setup.seeds {
        for (name, fusion) in [("fused", setup.fused), ("baseline", setup.baseline)] {
            let (epochs, final_cer, wall_ms) = run_arm(setup, fusion, seed, train, dev)?;
            rows.push(ConvergenceRow {
                seed,
                config: name.into(),
                epochs_to_threshold: epochs,
                final_dev_cer: final_cer,
                wall_ms,
            });
        }
    }
    let censored = (setup.max_epochs + 1) as f64;
    let med = |name: &str| {
        let mut v: Vec<f64> = rows
            .iter()
            .filter(|r| r.config == name)
            .map(|r| r.epochs_to_threshold.map_or(censored, |e| e as f64))
            .collect();
        median(&mut v).expect("one row per seed")
    };
    Ok(ConvergenceReport {
        threshold: setup.threshold,
        max_epochs: setup.max_epochs,
        median_fused: med("fused"),
        median_baseline: med("baseline"),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }
}
