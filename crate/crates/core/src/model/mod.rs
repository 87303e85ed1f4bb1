//! Shared encoder, joint model, training loop and the tooling around it.

mod checkpoint;
mod convergence;
mod encoder;
mod gradcheck;
mod infer;
mod loss;
mod optim;
mod params;
mod train;

pub use checkpoint::{
    average_checkpoints, average_params, load_checkpoint, load_params, save_checkpoint, save_params, CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
};
pub use convergence::{convergence_experiment, median, ConvergenceReport, ConvergenceRow, ConvergenceSetup};
pub use encoder::{
    encoder_backward, encoder_forward, EncoderBlock, EncoderCache, EncoderDims, EncoderParams, FeedForward,
};
pub use gradcheck::{fd_check, grad_check, sample_indices, GradCheckEntry, GradCheckReport, ABS_TOL, FD_STEP, REL_TOL};
pub use infer::{ctc_greedy, decode_encoded, decode_timed, encode, DecodeMode, Encoded, Hypothesis, TimedHypothesis};
pub use loss::{total_loss, TotalLoss};
pub use optim::{learning_rate, AdamState};
pub use params::{ModelConfig, ModelParams};
pub use train::{dev_cer, examples, train_epochs, EpochRecord, Example, TrainSetup, TrainState};
