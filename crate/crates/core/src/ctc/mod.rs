//! CTC loss, decoding and the exhaustive reference implementation.

mod beam;
mod decode;
mod grid;
mod loss;
mod oracle;

pub use beam::{prefix_beam_search, rank_order, BeamHypothesis, NBestEntry, NBestList};
pub use decode::{collapse, greedy_decode, greedy_decode_scored};
pub use grid::LogPosteriorGrid;
pub use loss::{ctc_loss, ctc_occupancy, min_frames, CtcLossResult, CtcOccupancy};
pub use oracle::{brute_force_ctc, for_each_path, MAX_ENUMERATED_PATHS};
