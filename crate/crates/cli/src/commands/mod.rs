pub mod bench;
pub mod converge;
pub mod decode;
pub mod eval;
pub mod gen_data;
pub mod sweep;
pub mod train;

use ictc_core::config::DecodeConfig;
use ictc_core::data::{CerAccumulator, LabelSequence, Utterance};
use ictc_core::model::{decode_timed, DecodeMode, Example, ModelParams};
use ictc_core::{Error, Result};

/// One decoded utterance.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub labels: LabelSequence,
    pub score: f64,
    pub decode_ms: f64,
    pub rescore_ms: Option<f64>,
}

pub fn parse_modes(modes: &[String]) -> Result<Vec<DecodeMode>> {
    if modes.is_empty() {
        return Ok(DecodeMode::ALL.to_vec());
    }
    modes.iter().map(|m| m.parse()).collect()
}

/// Decodes every utterance, in order, using up to `workers` threads.
pub fn decode_all(
    model: &ModelParams<f64>,
    data: &[Example<f64>],
    mode: DecodeMode,
    cfg: &DecodeConfig,
    workers: usize,
) -> Result<Vec<Decoded>> {
    let one = |ex: &Example<f64>| -> Result<Decoded> {
        let t = decode_timed(model, &ex.features, mode, cfg)?;
        Ok(Decoded {
            labels: t.hypothesis.labels,
            score: t.hypothesis.score,
            decode_ms: t.decode_ms,
            rescore_ms: t.rescore_ms,
        })
    };
    if workers <= 1 || data.len() <= 1 {
        return data.iter().map(one).collect();
    }
    let chunk = data.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> =
            data.chunks(chunk).map(|part| s.spawn(move || part.iter().map(one).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("decode worker panicked")).collect()
    })
}

/// Aggregate measurements of one decode pass.
pub struct PassSummary {
    pub cer: f64,
    pub mean_decode_ms: f64,
    pub mean_rescore_ms: Option<f64>,
    pub rtf: f64,
}

pub fn summarize(utts: &[Utterance], decoded: &[Decoded]) -> Result<PassSummary> {
    if utts.is_empty() {
        return Err(Error::Usage("decoding an empty split".into()));
    }
    let mut acc = CerAccumulator::default();
    let (mut dec, mut resc, mut audio) = (0.0, None::<f64>, 0.0);
    for (u, d) in utts.iter().zip(decoded) {
        acc.add(&u.transcript, &d.labels);
        dec += d.decode_ms;
        if let Some(r) = d.rescore_ms {
            *resc.get_or_insert(0.0) += r;
        }
        audio += u.duration_ms();
    }
    let n = utts.len() as f64;
    Ok(PassSummary {
        cer: acc.cer()?,
        mean_decode_ms: dec / n,
        mean_rescore_ms: resc.map(|r| r / n),
        rtf: (dec + resc.unwrap_or(0.0)) / audio,
    })
}
