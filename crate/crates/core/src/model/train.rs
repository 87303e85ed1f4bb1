use std::ops::ControlFlow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::infer::ctc_greedy;
use super::loss::{total_loss, TotalLoss};
use super::optim::AdamState;
use super::{ModelConfig, ModelParams};
use crate::config::{LossConfig, OptimConfig};
use crate::data::{CerAccumulator, LabelSequence, Utterance};
use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::numerics::{Matrix, RandomStream, Scalar};
use crate::params::ParamSet;

const SHUFFLE_STREAM: u64 = 0x5_0000;

/// A training or evaluation example in model precision.
#[derive(Clone, Debug, PartialEq)]
pub struct Example<T> {
    pub id: String,
    pub features: Matrix<T>,
    pub labels: LabelSequence,
}

impl<T: Scalar> Example<T> {
    pub fn from_utterance(u: &Utterance) -> Self {
        Example { id: u.id.clone(), features: Matrix::from_f64(&u.features), labels: u.transcript.clone() }
    }
}

pub fn examples<T: Scalar>(utterances: &[Utterance]) -> Vec<Example<T>> {
    utterances.iter().map(Example::from_utterance).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-utterance training loss over the epoch.
    pub loss: f64,
    /// Greedy CTC corpus CER on the dev set, if there is one.
    pub dev_cer: Option<f64>,
    pub wall_ms: f64,
}

/// Everything about training except the data and the model shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainSetup {
    pub loss: LossConfig,
    pub fusion: FusionConfig,
    pub optim: OptimConfig,
    /// Threads computing per-utterance gradients; reduction order is fixed.
    pub workers: usize,
}

impl TrainSetup {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.fusion.validate()?;
        self.optim.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainState<T> {
    pub params: ModelParams<T>,
    pub optimizer: AdamState<T>,
    /// Completed epochs.
    pub epoch: usize,
    pub seed: u64,
    pub history: Vec<EpochRecord>,
}

impl<T: Scalar> TrainState<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = ModelParams::init(config, seed)?;
        let optimizer = AdamState::new(params.num_params());
        Ok(TrainState { params, optimizer, epoch: 0, seed, history: Vec::new() })
    }
}

/// Greedy CTC corpus CER, or `None` for an empty set.
pub fn dev_cer<T: Scalar>(model: &ModelParams<T>, dev: &[Example<T>]) -> Result<Option<f64>> {
    if dev.is_empty() {
        return Ok(None);
    }
    let mut acc = CerAccumulator::default();
    for ex in dev {
        acc.add(&ex.labels, &ctc_greedy(model, &ex.features)?);
    }
    acc.cer().map(Some)
}

fn batch_losses<T: Scalar>(
    params: &ModelParams<T>,
    setup: &TrainSetup,
    batch: &[&Example<T>],
) -> Vec<Result<TotalLoss<T>>> {
    let run = |ex: &&Example<T>| total_loss(params, &ex.features, &ex.labels, &setup.loss, &setup.fusion);
    if setup.workers <= 1 || batch.len() <= 1 {
        return batch.iter().map(run).collect();
    }
    let chunk = batch.len().div_ceil(setup.workers);
    std::thread::scope(|s| {
        let handles: Vec<_> =
            batch.chunks(chunk).map(|part| s.spawn(move || part.iter().map(run).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("gradient worker panicked")).collect()
    })
}

/// Runs epochs `state.epoch + 1 ..= last_epoch`. `on_epoch` sees the state
/// after each epoch and may stop training early.
pub fn train_epochs<T, F>(
    state: &mut TrainState<T>,
    setup: &TrainSetup,
    train: &[Example<T>],
    dev: &[Example<T>],
    last_epoch: usize,
    mut on_epoch: F,
) -> Result<()>
where
    T: Scalar + Send + Sync,
    F: FnMut(&TrainState<T>, &EpochRecord) -> Result<ControlFlow<()>>,
{
    setup.validate()?;
    if train.is_empty() {
        return Err(Error::Usage("training corpus is empty".into()));
    }
    while state.epoch < last_epoch {
        let epoch = state.epoch + 1;
        let start = Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        RandomStream::derived(state.seed, SHUFFLE_STREAM + epoch as u64).shuffle(&mut order);

        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(setup.optim.batch_size).enumerate() {
            let batch: Vec<&Example<T>> = idx.iter().map(|&i| &train[i]).collect();
            let mut grads = state.params.zeros_like();
            let mut batch_loss = T::zero();
            for r in batch_losses(&state.params, setup, &batch) {
                let r = r?;
                batch_loss += r.loss;
                grads.add_scaled(&r.grads, T::one());
            }
            let inv = T::one() / T::from_count(batch.len());
            grads.scale(inv);
            if !batch_loss.is_finite() || !grads.is_finite() {
                let ids: Vec<&str> = batch.iter().map(|e| e.id.as_str()).collect();
                return Err(Error::NonFinite {
                    loss: batch_loss.as_f64(),
                    context: format!("epoch {epoch}, batch {b} ({})", ids.join(", ")),
                });
            }
            loss_sum += batch_loss.as_f64();
            state.optimizer.update(&setup.optim, &mut state.params, &grads);
        }

        let dev_cer = dev_cer(&state.params, dev)?;
        let record = EpochRecord {
            epoch,
            loss: loss_sum / train.len() as f64,
            dev_cer,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        state.epoch = epoch;
        state.history.push(record.clone());
        if on_epoch(state, &record)?.is_break() {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelDims;
    use crate::data::{SyntheticTask, SyntheticTaskSpec};

    fn tiny() -> (ModelConfig, Vec<Example<f64>>) {
        let spec =
            SyntheticTaskSpec { vocab_size: 6, feature_dim: 4, utterance_len: (2, 3), ..SyntheticTaskSpec::default() };
        let task = SyntheticTask::new(spec).unwrap();
        let data = examples(&task.generate(6).unwrap());
        let cfg = ModelConfig::new(
            6,
            4,
            &ModelDims { d_model: 8, embed_dim: 4, attn_dim: 8, ff_dim: 8, blocks: 1, window: 2 },
        );
        (cfg, data)
    }

    fn setup() -> TrainSetup {
        TrainSetup {
            loss: LossConfig::default(),
            fusion: FusionConfig::default(),
            optim: OptimConfig { batch_size: 2, warmup_steps: 5, peak_lr: 5e-3, ..OptimConfig::default() },
            workers: 1,
        }
    }

    fn run(workers: usize) -> TrainState<f64> {
        let (cfg, data) = tiny();
        let mut st = TrainState::new(cfg, 7).unwrap();
        let s = TrainSetup { workers, ..setup() };
        train_epochs(&mut st, &s, &data, &data[..2], 3, |_, _| Ok(ControlFlow::Continue(()))).unwrap();
        st
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let a = run(1);
        let b = run(1);
        let c = run(3);
        assert_eq!(a.params, b.params);
        assert_eq!(a.params, c.params);
        let strip = |h: &[EpochRecord]| h.iter().map(|r| (r.epoch, r.loss, r.dev_cer)).collect::<Vec<_>>();
        assert_eq!(strip(&a.history), strip(&b.history));
        assert_eq!(a.history.len(), 3);
    }

    #[test]
    fn stop_early() {
        let (cfg, data) = tiny();
        let mut st = TrainState::new(cfg, 1).unwrap();
        train_epochs(&mut st, &setup(), &data, &[], 10, |s, _| {
            Ok(if s.epoch == 2 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })
        })
        .unwrap();
        assert_eq!(st.epoch, 2);
        assert_eq!(st.history[0].dev_cer, None);
    }

    #[test]
    fn nan_names_batch() {
        let (cfg, mut data) = tiny();
        data[0].features[(0, 0)] = f64::NAN;
        let mut st = TrainState::new(cfg, 1).unwrap();
        let s = TrainSetup { optim: OptimConfig { batch_size: 100, ..setup().optim }, ..setup() };
        let err = train_epochs(&mut st, &s, &data, &[], 1, |_, _| Ok(ControlFlow::Continue(()))).unwrap_err();
        match err {
            Error::NonFinite { context, .. } => assert!(context.contains("batch 0"), "{context}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
