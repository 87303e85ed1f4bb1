use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::aed::{aed_greedy_decode, rescore};
use crate::config::DecodeConfig;
use crate::ctc::{greedy_decode, greedy_decode_scored, prefix_beam_search, LogPosteriorGrid};
use crate::data::{LabelSequence, BLANK_ID};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    AttentionDecoder,
    AttentionRescore,
    CtcGreedy,
    CtcPrefixBeam,
}

impl DecodeMode {
    pub const ALL: [DecodeMode; 4] =
        [DecodeMode::AttentionDecoder, DecodeMode::AttentionRescore, DecodeMode::CtcGreedy, DecodeMode::CtcPrefixBeam];

    pub fn as_str(self) -> &'static str {
        match self {
            DecodeMode::AttentionDecoder => "attention_decoder",
            DecodeMode::AttentionRescore => "attention_rescore",
            DecodeMode::CtcGreedy => "ctc_greedy",
            DecodeMode::CtcPrefixBeam => "ctc_prefix_beam",
        }
    }

    pub fn rescores(self) -> bool {
        self == DecodeMode::AttentionRescore
    }
}

impl std::str::FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecodeMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown decode mode {s:?} (expected attention_decoder, attention_rescore, ctc_greedy or ctc_prefix_beam)"
                ))
            })
    }
}

impl std::fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Encoder output and CTC posteriors of one utterance, shared by all modes.
#[derive(Clone, Debug)]
pub struct Encoded<T> {
    pub encoder_out: Matrix<T>,
    pub ctc: LogPosteriorGrid<T>,
}

pub fn encode<T: Scalar>(model: &ModelParams<T>, features: &Matrix<T>) -> Result<Encoded<T>> {
    let (encoder_out, _) = model.encode(features)?;
    let ctc = model.ctc_log_posteriors(&encoder_out)?;
    Ok(Encoded { encoder_out, ctc })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub labels: LabelSequence,
    /// Mode-specific log score: CTC path or prefix probability, AED
    /// sequence probability, or the combined rescoring score.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedHypothesis {
    pub hypothesis: Hypothesis,
    /// Encoder plus first-pass search.
    pub decode_ms: f64,
    /// Second-pass rescoring; only for rescoring modes.
    pub rescore_ms: Option<f64>,
}

/// First pass of `mode`: everything except N-best rescoring.
fn first_pass<T: Scalar>(
    model: &ModelParams<T>,
    enc: &Encoded<T>,
    mode: DecodeMode,
    cfg: &DecodeConfig,
) -> Result<FirstPass<T>> {
    Ok(match mode {
        DecodeMode::CtcGreedy => {
            let (labels, score) = greedy_decode_scored(&enc.ctc, BLANK_ID);
            FirstPass::Done(Hypothesis { labels, score: score.value().as_f64() })
        }
        DecodeMode::CtcPrefixBeam => {
            let nbest = prefix_beam_search(&enc.ctc, cfg.beam_width, 1, BLANK_ID)?;
            let best = nbest.best().expect("beam keeps the empty prefix at least");
            FirstPass::Done(Hypothesis { labels: best.labels.clone(), score: best.ctc_score.value().as_f64() })
        }
        DecodeMode::AttentionDecoder => {
            let (labels, score) = aed_greedy_decode(&model.aed, &enc.encoder_out, cfg.max_len)?;
            FirstPass::Done(Hypothesis { labels, score: score.value().as_f64() })
        }
        DecodeMode::AttentionRescore => {
            FirstPass::NBest(prefix_beam_search(&enc.ctc, cfg.beam_width, cfg.n_best, BLANK_ID)?)
        }
    })
}

enum FirstPass<T> {
    Done(Hypothesis),
    NBest(crate::ctc::NBestList<T>),
}

fn second_pass<T: Scalar>(
    model: &ModelParams<T>,
    enc: &Encoded<T>,
    nbest: &crate::ctc::NBestList<T>,
    cfg: &DecodeConfig,
) -> Result<Hypothesis> {
    let r = rescore(nbest, &model.aed, &enc.encoder_out, T::lit(cfg.beta))?;
    Ok(Hypothesis { labels: r.best, score: r.table[r.best_index].combined.as_f64() })
}

/// Decodes an already-encoded utterance.
pub fn decode_encoded<T: Scalar>(
    model: &ModelParams<T>,
    enc: &Encoded<T>,
    mode: DecodeMode,
    cfg: &DecodeConfig,
) -> Result<Hypothesis> {
    match first_pass(model, enc, mode, cfg)? {
        FirstPass::Done(h) => Ok(h),
        FirstPass::NBest(nbest) => second_pass(model, enc, &nbest, cfg),
    }
}

/// Encodes and decodes one utterance, timing the first and second pass.
pub fn decode_timed<T: Scalar>(
    model: &ModelParams<T>,
    features: &Matrix<T>,
    mode: DecodeMode,
    cfg: &DecodeConfig,
) -> Result<TimedHypothesis> {
    cfg.validate()?;
    let start = Instant::now();
    let enc = encode(model, features)?;
    let first = first_pass(model, &enc, mode, cfg)?;
    let decode_ms = start.elapsed().as_secs_f64() * 1e3;
    match first {
        FirstPass::Done(hypothesis) => Ok(TimedHypothesis { hypothesis, decode_ms, rescore_ms: None }),
        FirstPass::NBest(nbest) => {
            let start = Instant::now();
            let hypothesis = second_pass(model, &enc, &nbest, cfg)?;
            Ok(TimedHypothesis { hypothesis, decode_ms, rescore_ms: Some(start.elapsed().as_secs_f64() * 1e3) })
        }
    }
}

/// Greedy CTC transcript, the cheapest decode.
pub fn ctc_greedy<T: Scalar>(model: &ModelParams<T>, features: &Matrix<T>) -> Result<LabelSequence> {
    Ok(greedy_decode(&encode(model, features)?.ctc, BLANK_ID))
}
