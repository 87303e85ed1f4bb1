use super::encoder::encoder_backward;
use super::ModelParams;
use crate::aed::{aed_backward, teacher_forced};
use crate::config::LossConfig;
use crate::ctc::ctc_loss;
use crate::data::{LabelSequence, BLANK_ID};
use crate::error::Result;
use crate::fusion::{fused_ctc_loss, FusionConfig};
use crate::numerics::{Matrix, Scalar};
use crate::params::ParamSet;

/// Joint objective of one utterance and its gradient for every parameter.
#[derive(Clone, Debug)]
pub struct TotalLoss<T> {
    pub loss: T,
    /// CTC loss on the fused grid.
    pub ctc_loss: T,
    /// Mean teacher-forced cross-entropy.
    pub ar_loss: T,
    /// Plain CTC loss, present when it carries weight.
    pub unfused_ctc_loss: Option<T>,
    pub grads: ModelParams<T>,
}

/// `alpha * ctc' + (1 - alpha) * ar (+ w * ctc)`, all on one shared encoder pass.
pub fn total_loss<T: Scalar>(
    model: &ModelParams<T>,
    features: &Matrix<T>,
    labels: &LabelSequence,
    loss_cfg: &LossConfig,
    fusion: &FusionConfig,
) -> Result<TotalLoss<T>> {
    loss_cfg.validate()?;
    let alpha = T::lit(loss_cfg.alpha);
    let ar_weight = T::one() - alpha;

    let (enc, cache) = model.encode(features)?;
    let ctc_logits = model.ctc_logits(&enc);
    let tf = teacher_forced(&model.aed, &enc, labels)?;
    let fused = fused_ctc_loss(&ctc_logits, &tf.fusion_grid()?, labels, BLANK_ID, fusion)?;

    let mut loss = alpha * fused.loss + ar_weight * tf.loss;
    let mut d_ctc_logits = fused.grad_ctc_logits;
    d_ctc_logits.scale(alpha);

    let mut unfused_ctc_loss = None;
    if loss_cfg.unfused_ctc_weight > 0.0 {
        let w = T::lit(loss_cfg.unfused_ctc_weight);
        let plain = ctc_loss(&ctc_logits, labels, BLANK_ID)?;
        loss += w * plain.loss;
        d_ctc_logits.add_scaled(&plain.grad_logits, w);
        unfused_ctc_loss = Some(plain.loss);
    }

    // AED step logits receive the CE gradient on every step and the fusion
    // gradient on the first L steps.
    let mut d_steps = tf.ce_grad();
    d_steps.scale(ar_weight);
    for (i, row) in fused.grad_aed.row_iter().enumerate() {
        for (d, &g) in d_steps.row_mut(i).iter_mut().zip(row) {
            *d += alpha * g;
        }
    }
    let (aed_grads, mut d_enc) = aed_backward(&model.aed, &enc, &tf, &d_steps);

    let mut grads = model.zeros_like();
    grads.aed = aed_grads;
    enc.tmatmul_acc(&d_ctc_logits, &mut grads.ctc_w);
    d_ctc_logits.sum_rows_acc(&mut grads.ctc_b);
    d_enc.add_scaled(&d_ctc_logits.matmul_t(&model.ctc_w), T::one());
    encoder_backward(&model.encoder, &cache, &d_enc, &mut grads.encoder);

    Ok(TotalLoss { loss, ctc_loss: fused.loss, ar_loss: tf.loss, unfused_ctc_loss, grads })
}
