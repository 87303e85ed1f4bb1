//! Autoregressive attention decoder: training loss, scoring, greedy
//! decoding and N-best rescoring.

mod decoder;
mod params;
mod rescore;

pub use decoder::{
    aed_backward, aed_greedy_decode, aed_score_sequence, aed_step, aed_teacher_forced, initial_state,
    score_with_memory, teacher_forced, AedStepOutput, AedTrainOutput, AttentionMemory, TeacherForced,
};
pub use params::{AedDims, AedParams};
pub use rescore::{combine_scores, rescore, Rescored, RescoredEntry};
