//! Vocabulary, corpus ingestion, synthetic data and CER.

mod corpus;
mod manifest;
mod metrics;
mod vocab;

pub use corpus::{generate_corpus, SyntheticTask, SyntheticTaskSpec, Utterance, DEFAULT_FRAME_SHIFT_MS};
pub use manifest::{
    load_manifest, read_features, read_manifest_entries, write_features, write_manifest, ManifestEntry,
};
pub use metrics::{cer, corpus_cer, edit_distance, CerAccumulator};
pub use vocab::{LabelSequence, Vocab, BLANK_ID, FIRST_CONTENT_ID, SOS_EOS_ID, UNK_ID};
