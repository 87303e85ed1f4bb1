use super::fuse::pmp_fuse_parts;
use super::{adaptive_affine, dal_fuse, AedStepGrid, FusionConfig, FusionMode};
use crate::ctc::{ctc_loss, ctc_occupancy};
use crate::data::LabelSequence;
use crate::error::{Error, Result};
use crate::numerics::{softmax_backward, Matrix, Scalar};

/// CTC loss on the fused grid with gradients for both branches.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedCtcLoss<T> {
    pub loss: T,
    /// `P x V`, w.r.t. the CTC branch logits.
    pub grad_ctc_logits: Matrix<T>,
    /// `L x V`, w.r.t. the AED step logits. Zero when detached.
    pub grad_aed: Matrix<T>,
}

/// Expands `aed` to the CTC length, fuses it per `cfg`, and evaluates the
/// CTC loss of `labels` on the result.
pub fn fused_ctc_loss<T: Scalar>(
    ctc_logits: &Matrix<T>,
    aed: &AedStepGrid<T>,
    labels: &LabelSequence,
    blank: usize,
    cfg: &FusionConfig,
) -> Result<FusedCtcLoss<T>> {
    cfg.validate()?;
    if aed.steps() != labels.len() {
        return Err(Error::Shape {
            op: "fused_ctc_loss",
            expected: format!("{} AED steps (one per label)", labels.len()),
            got: format!("{} steps", aed.steps()),
        });
    }
    if aed.vocab_size() != ctc_logits.cols() {
        return Err(Error::Shape {
            op: "fused_ctc_loss",
            expected: format!("AED vocab {}", ctc_logits.cols()),
            got: format!("{}", aed.vocab_size()),
        });
    }
    let lambda = T::lit(cfg.lambda);
    let zero_aed = || Matrix::zeros(aed.steps(), aed.vocab_size());

    match cfg.mode {
        FusionMode::None => {
            let r = ctc_loss(ctc_logits, labels, blank)?;
            Ok(FusedCtcLoss { loss: r.loss, grad_ctc_logits: r.grad_logits, grad_aed: zero_aed() })
        }
        FusionMode::Dal => {
            let expanded = adaptive_affine(aed, ctc_logits.rows())?;
            let fused = dal_fuse(ctc_logits, &expanded, lambda)?;
            let r = ctc_loss(&fused, labels, blank)?;
            let grad_aed = if cfg.detach_aed {
                zero_aed()
            } else {
                let mut g = expanded.scatter_back(&r.grad_logits);
                g.scale(lambda);
                g
            };
            Ok(FusedCtcLoss { loss: r.loss, grad_ctc_logits: r.grad_logits, grad_aed })
        }
        FusionMode::Pmp => {
            let expanded = adaptive_affine(aed, ctc_logits.rows())?;
            let parts = pmp_fuse_parts(ctc_logits, &expanded, lambda);
            let fb = ctc_occupancy(parts.fused.matrix(), labels, blank)?;
            let (frames, vocab) = ctc_logits.shape();

            // q = log u - log U with u = s + λ·pmp(a), U = 1 + λa*.
            // dL/du_i = (1 - γ_i / p_i) / U where p = exp(q).
            let mut grad_ctc = Matrix::zeros(frames, vocab);
            let mut grad_expanded = Matrix::zeros(frames, vocab);
            let mut d_u = vec![T::zero(); vocab];
            for t in 0..frames {
                let k = parts.aed_argmax[t];
                let norm = T::one() + lambda * parts.aed_probs[(t, k)];
                let q = parts.fused.row(t);
                let gamma = fb.occupancy.row(t);
                for i in 0..vocab {
                    let ratio = if gamma[i] == T::zero() { T::zero() } else { gamma[i] * (-q[i]).exp() };
                    d_u[i] = (T::one() - ratio) / norm;
                }
                softmax_backward(parts.ctc_probs.row(t), &d_u, grad_ctc.row_mut(t));
                if !cfg.detach_aed {
                    let mut d_a = vec![T::zero(); vocab];
                    d_a[k] = lambda * d_u[k];
                    softmax_backward(parts.aed_probs.row(t), &d_a, grad_expanded.row_mut(t));
                }
            }
            let grad_aed = if cfg.detach_aed { zero_aed() } else { expanded.scatter_back(&grad_expanded) };
            Ok(FusedCtcLoss { loss: -fb.log_likelihood, grad_ctc_logits: grad_ctc, grad_aed })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RandomStream;

    fn random(rows: usize, cols: usize, rng: &mut RandomStream) -> Matrix<f64> {
        let data = (0..rows * cols).map(|_| rng.gaussian()).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn cfg(mode: FusionMode, lambda: f64, detach: bool) -> FusionConfig {
        FusionConfig { mode, lambda, detach_aed: detach }
    }

    #[test]
    fn dal_zero_lambda_matches_plain_ctc() {
        let mut rng = RandomStream::new(3);
        let logits = random(5, 4, &mut rng);
        let aed = AedStepGrid::new(random(2, 4, &mut rng)).unwrap();
        let labels = LabelSequence::new(vec![1, 2]);
        let fused = fused_ctc_loss(&logits, &aed, &labels, 0, &cfg(FusionMode::Dal, 0.0, false)).unwrap();
        let plain = ctc_loss(&logits, &labels, 0).unwrap();
        assert!((fused.loss - plain.loss).abs() <= 1e-12);
        assert!(fused.grad_aed.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn detach_zeroes_aed_gradient_only() {
        let mut rng = RandomStream::new(4);
        let logits = random(5, 4, &mut rng);
        let aed = AedStepGrid::new(random(3, 4, &mut rng)).unwrap();
        let labels = LabelSequence::new(vec![1, 3, 2]);
        for mode in [FusionMode::Dal, FusionMode::Pmp] {
            let full = fused_ctc_loss(&logits, &aed, &labels, 0, &cfg(mode, 0.5, false)).unwrap();
            let det = fused_ctc_loss(&logits, &aed, &labels, 0, &cfg(mode, 0.5, true)).unwrap();
            assert!(det.grad_aed.as_slice().iter().all(|&g| g == 0.0));
            assert!(full.grad_aed.as_slice().iter().any(|&g| g != 0.0));
            assert!(det.grad_ctc_logits.max_abs_diff(&full.grad_ctc_logits) <= 1e-12);
            assert_eq!(det.loss, full.loss);
        }
    }

    #[test]
    fn step_count_must_match_labels() {
        let logits = Matrix::<f64>::zeros(5, 4);
        let aed = AedStepGrid::new(Matrix::zeros(3, 4)).unwrap();
        let labels = LabelSequence::new(vec![1, 2]);
        assert!(fused_ctc_loss(&logits, &aed, &labels, 0, &FusionConfig::default()).is_err());
    }
}
