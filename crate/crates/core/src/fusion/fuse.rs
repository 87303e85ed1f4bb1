use serde::{Deserialize, Serialize};

use super::ExpandedAedGrid;
use crate::ctc::LogPosteriorGrid;
use crate::error::{Error, Result};
use crate::numerics::{argmax, log_add, row_log_softmax, softmax_in_place, Matrix, Scalar};

/// How AED outputs are merged into the CTC branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Direct addition of logits.
    Dal,
    /// Preserve only the maximum AED probability per frame.
    Pmp,
    /// Plain CTC; AED outputs are ignored.
    None,
}

impl FusionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::Dal => "dal",
            FusionMode::Pmp => "pmp",
            FusionMode::None => "none",
        }
    }
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dal" => Ok(FusionMode::Dal),
            "pmp" => Ok(FusionMode::Pmp),
            "none" => Ok(FusionMode::None),
            other => Err(Error::Config(format!("unknown fusion mode {other:?} (expected dal, pmp or none)"))),
        }
    }
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub mode: FusionMode,
    /// Weight of the expanded AED term.
    pub lambda: f64,
    /// Stop gradients into the AED branch.
    pub detach_aed: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { mode: FusionMode::Dal, lambda: 0.05, detach_aed: false }
    }
}

impl FusionConfig {
    pub fn disabled() -> Self {
        FusionConfig { mode: FusionMode::None, lambda: 0.0, detach_aed: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Config(format!("fusion lambda {} must be finite and >= 0", self.lambda)));
        }
        Ok(())
    }
}

fn check_shapes<T: Scalar>(op: &'static str, ctc_logits: &Matrix<T>, expanded: &ExpandedAedGrid<T>) -> Result<()> {
    expanded.grid.ensure_shape(op, ctc_logits.rows(), ctc_logits.cols())
}

/// `ctc_logits + λ · expanded`, element-wise in logit space.
pub fn dal_fuse<T: Scalar>(ctc_logits: &Matrix<T>, expanded: &ExpandedAedGrid<T>, lambda: T) -> Result<Matrix<T>> {
    check_shapes("dal_fuse", ctc_logits, expanded)?;
    let mut fused = ctc_logits.clone();
    fused.add_scaled(&expanded.grid, lambda);
    Ok(fused)
}

/// Keeps the largest entry (lowest index on ties) and zeros the rest.
pub fn pmp_transform<T: Scalar>(row: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); row.len()];
    if !row.is_empty() {
        let k = argmax(row);
        out[k] = row[k];
    }
    out
}

/// Probability-space fusion: each row becomes
/// `normalize(softmax(ctc) + λ · pmp(softmax(aed)))`, returned as logs.
pub fn pmp_fuse<T: Scalar>(
    ctc_logits: &Matrix<T>,
    expanded: &ExpandedAedGrid<T>,
    lambda: T,
) -> Result<LogPosteriorGrid<T>> {
    check_shapes("pmp_fuse", ctc_logits, expanded)?;
    Ok(pmp_fuse_parts(ctc_logits, expanded, lambda).fused)
}

/// Forward quantities of PMP fusion that its backward pass reuses.
pub(crate) struct PmpParts<T> {
    pub fused: LogPosteriorGrid<T>,
    /// Softmax of the CTC logits.
    pub ctc_probs: Matrix<T>,
    /// Softmax of each expanded AED row.
    pub aed_probs: Matrix<T>,
    /// Argmax of each expanded AED row.
    pub aed_argmax: Vec<usize>,
}

pub(crate) fn pmp_fuse_parts<T: Scalar>(
    ctc_logits: &Matrix<T>,
    expanded: &ExpandedAedGrid<T>,
    lambda: T,
) -> PmpParts<T> {
    let log_ctc = row_log_softmax(ctc_logits);
    let ctc_probs = log_ctc.map(|x| x.exp());
    let mut aed_probs = expanded.grid.clone();
    let mut aed_argmax = Vec::with_capacity(aed_probs.rows());
    let mut fused = log_ctc;
    for t in 0..fused.rows() {
        softmax_in_place(aed_probs.row_mut(t));
        let k = argmax(aed_probs.row(t));
        aed_argmax.push(k);
        let boost = lambda * aed_probs[(t, k)];
        // log(s + λa*) - log(1 + λa*), exact at λ = 0
        let log_norm = boost.ln_1p();
        let row = fused.row_mut(t);
        row[k] = log_add(row[k], boost.ln());
        row.iter_mut().for_each(|x| *x -= log_norm);
    }
    PmpParts { fused: LogPosteriorGrid::from_normalized_unchecked(fused), ctc_probs, aed_probs, aed_argmax }
}
