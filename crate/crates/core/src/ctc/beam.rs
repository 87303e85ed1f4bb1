//! CTC prefix beam search.
//!
//! Each prefix carries two log masses: alignments that end in blank and
//! alignments that end in the prefix's last label. A repeated label only
//! extends the prefix when the previous frame ended in blank.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::LabelSequence;
use crate::error::{Error, Result};
use crate::numerics::{log_add, neg_inf, LogProb, Scalar};

use super::LogPosteriorGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct BeamHypothesis<T> {
    pub prefix: LabelSequence,
    pub lp_blank: LogProb<T>,
    pub lp_nonblank: LogProb<T>,
}

impl<T: Scalar> BeamHypothesis<T> {
    pub fn score(&self) -> LogProb<T> {
        self.lp_blank.plus(self.lp_nonblank)
    }
}

/// Ranking used everywhere hypotheses are ordered: higher score first, then
/// shorter prefix, then lexicographically smaller prefix.
pub fn rank_order<T: Scalar>(
    a_score: LogProb<T>,
    a: &LabelSequence,
    b_score: LogProb<T>,
    b: &LabelSequence,
) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a.len().cmp(&b.len())).then_with(|| a.cmp(b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NBestEntry<T> {
    pub labels: LabelSequence,
    pub ctc_score: LogProb<T>,
}

/// Distinct hypotheses in rank order (see [`rank_order`]).
#[derive(Clone, Debug, PartialEq)]
pub struct NBestList<T> {
    entries: Vec<NBestEntry<T>>,
}

impl<T: Scalar> NBestList<T> {
    /// Sorts entries into rank order; duplicate sequences are an error.
    pub fn new(mut entries: Vec<NBestEntry<T>>) -> Result<Self> {
        entries.sort_by(|a, b| rank_order(a.ctc_score, &a.labels, b.ctc_score, &b.labels));
        let mut seen: Vec<&LabelSequence> = entries.iter().map(|e| &e.labels).collect();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Usage("duplicate sequence in N-best list".into()));
        }
        Ok(NBestList { entries })
    }

    pub fn entries(&self) -> &[NBestEntry<T>] {
        &self.entries
    }

    pub fn best(&self) -> Option<&NBestEntry<T>> {
        self.entries.first()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps only the first `n` entries.
    pub fn truncated(&self, n: usize) -> Self {
        NBestList { entries: self.entries.iter().take(n).cloned().collect() }
    }
}

/// Prefix beam search keeping `width` prefixes per frame and returning the
/// top `n_best` after the last frame.
pub fn prefix_beam_search<T: Scalar>(
    grid: &LogPosteriorGrid<T>,
    width: usize,
    n_best: usize,
    blank: usize,
) -> Result<NBestList<T>> {
    if n_best < 1 || width < n_best {
        return Err(Error::Usage(format!(
            "prefix beam search needs width >= n_best >= 1, got width {width}, n_best {n_best}"
        )));
    }
    if blank >= grid.vocab_size() {
        return Err(Error::Usage(format!("blank id {blank} outside vocab")));
    }
    let beam = search(grid, width, blank);
    let entries =
        beam.into_iter().take(n_best).map(|h| NBestEntry { ctc_score: h.score(), labels: h.prefix }).collect();
    NBestList::new(entries)
}

fn search<T: Scalar>(grid: &LogPosteriorGrid<T>, width: usize, blank: usize) -> Vec<BeamHypothesis<T>> {
    let ninf = neg_inf::<T>();
    let mut beam = vec![BeamHypothesis {
        prefix: LabelSequence::default(),
        lp_blank: LogProb::one(),
        lp_nonblank: LogProb::zero(),
    }];

    for t in 0..grid.frames() {
        let row = grid.row(t);
        // insertion order is the beam order, so accumulation is deterministic
        let mut next: Vec<(LabelSequence, T, T)> = Vec::new();
        let mut index: HashMap<LabelSequence, usize> = HashMap::new();
        let mut add = |prefix: LabelSequence, blank_mass: T, nonblank_mass: T| match index.get(&prefix) {
            Some(&i) => {
                let slot = &mut next[i];
                slot.1 = log_add(slot.1, blank_mass);
                slot.2 = log_add(slot.2, nonblank_mass);
            }
            None => {
                index.insert(prefix.clone(), next.len());
                next.push((prefix, blank_mass, nonblank_mass));
            }
        };

        for hyp in &beam {
            let pb = hyp.lp_blank.value();
            let pnb = hyp.lp_nonblank.value();
            let total = log_add(pb, pnb);
            let last = hyp.prefix.last();
            for (k, &lp) in row.iter().enumerate() {
                if lp == ninf {
                    continue;
                }
                if k == blank {
                    add(hyp.prefix.clone(), total + lp, ninf);
                } else if Some(k) == last {
                    // repeat without blank stays on the prefix
                    add(hyp.prefix.clone(), ninf, pnb + lp);
                    add(hyp.prefix.extended(k), ninf, pb + lp);
                } else {
                    add(hyp.prefix.extended(k), ninf, total + lp);
                }
            }
        }

        let mut hyps: Vec<BeamHypothesis<T>> = next
            .into_iter()
            .map(|(prefix, b, nb)| BeamHypothesis { prefix, lp_blank: LogProb::new(b), lp_nonblank: LogProb::new(nb) })
            .filter(|h| !h.score().is_zero())
            .collect();
        hyps.sort_by(|a, b| rank_order(a.score(), &a.prefix, b.score(), &b.prefix));
        hyps.truncate(width);
        beam = hyps;
    }
    beam
}
