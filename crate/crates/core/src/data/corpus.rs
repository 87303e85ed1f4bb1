use serde::{Deserialize, Serialize};

use super::{LabelSequence, Vocab, FIRST_CONTENT_ID};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RandomStream};

pub const DEFAULT_FRAME_SHIFT_MS: f64 = 10.0;

/// One utterance: a `T x F` feature grid and its transcript.
#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub features: Matrix<f64>,
    pub transcript: LabelSequence,
    pub frame_shift_ms: f64,
}

impl Utterance {
    pub fn frames(&self) -> usize {
        self.features.rows()
    }

    pub fn duration_ms(&self) -> f64 {
        self.frames() as f64 * self.frame_shift_ms
    }
}

/// Parameters of the synthetic transduction task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    pub vocab_size: usize,
    pub feature_dim: usize,
    pub frames_per_token: (usize, usize),
    pub noise_std: f64,
    pub utterance_len: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticTaskSpec {
    fn default() -> Self {
        SyntheticTaskSpec {
            vocab_size: 12,
            feature_dim: 8,
            frames_per_token: (2, 4),
            noise_std: 0.1,
            utterance_len: (3, 8),
            seed: 1,
        }
    }
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        // two content tokens are needed to avoid immediate repeats
        if self.vocab_size < FIRST_CONTENT_ID + 2 {
            return Err(Error::Config(format!(
                "synthetic vocab_size {} must be at least {}",
                self.vocab_size,
                FIRST_CONTENT_ID + 2
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be positive".into()));
        }
        let (lo, hi) = self.frames_per_token;
        if lo < 1 || hi < lo {
            return Err(Error::Config(format!("frames_per_token range [{lo},{hi}] invalid")));
        }
        let (lo, hi) = self.utterance_len;
        if lo < 1 || hi < lo {
            return Err(Error::Config(format!("utterance_len range [{lo},{hi}] invalid")));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!("noise_std {} invalid", self.noise_std)));
        }
        Ok(())
    }
}

/// A synthetic task with its token prototypes drawn from the task seed.
#[derive(Clone, Debug)]
pub struct SyntheticTask {
    spec: SyntheticTaskSpec,
    vocab: Vocab,
    prototypes: Matrix<f64>,
}

impl SyntheticTask {
    pub fn new(spec: SyntheticTaskSpec) -> Result<Self> {
        spec.validate()?;
        let vocab = Vocab::synthetic(spec.vocab_size)?;
        let mut rng = RandomStream::derived(spec.seed, 0);
        let mut prototypes = Matrix::zeros(spec.vocab_size, spec.feature_dim);
        for id in vocab.content_ids() {
            for x in prototypes.row_mut(id) {
                *x = rng.gaussian();
            }
        }
        Ok(SyntheticTask { spec, vocab, prototypes })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn spec(&self) -> &SyntheticTaskSpec {
        &self.spec
    }

    pub fn prototype(&self, token: usize) -> &[f64] {
        self.prototypes.row(token)
    }

    /// Generates `n` utterances. Transcripts never repeat a token back to
    /// back, since repeated frames of one prototype would be ambiguous.
    pub fn generate(&self, n: usize) -> Result<Vec<Utterance>> {
        if n == 0 {
            return Err(Error::Usage("generate_corpus needs n >= 1".into()));
        }
        let mut rng = RandomStream::derived(self.spec.seed, 1);
        let content = self.vocab.content_ids();
        let f = self.spec.feature_dim;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let len = rng.int_in(self.spec.utterance_len.0, self.spec.utterance_len.1);
            let mut tokens = Vec::with_capacity(len);
            while tokens.len() < len {
                let t = content.start + rng.below(content.len());
                if tokens.last() != Some(&t) {
                    tokens.push(t);
                }
            }
            let mut frames = Vec::new();
            for &t in &tokens {
                let k = rng.int_in(self.spec.frames_per_token.0, self.spec.frames_per_token.1);
                for _ in 0..k {
                    for &p in self.prototype(t) {
                        let noise = if self.spec.noise_std > 0.0 { rng.gaussian() * self.spec.noise_std } else { 0.0 };
                        frames.push(p + noise);
                    }
                }
            }
            let rows = frames.len() / f;
            out.push(Utterance {
                id: format!("utt{i:05}"),
                features: Matrix::from_vec(rows, f, frames)?,
                transcript: LabelSequence::new(tokens),
                frame_shift_ms: DEFAULT_FRAME_SHIFT_MS,
            });
        }
        Ok(out)
    }

    /// Generates `n_train + n_dev` utterances from one stream and splits them.
    pub fn generate_split(&self, n_train: usize, n_dev: usize) -> Result<(Vec<Utterance>, Vec<Utterance>)> {
        let mut all = self.generate(n_train + n_dev)?;
        let dev = all.split_off(n_train);
        Ok((all, dev))
    }
}

pub fn generate_corpus(spec: &SyntheticTaskSpec, n: usize) -> Result<Vec<Utterance>> {
    SyntheticTask::new(spec.clone())?.generate(n)
}
