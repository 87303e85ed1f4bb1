//! Single-head attention decoder with a recurrent state.
//!
//! One step, given the previous token `y` and state `s`:
//!
//! ```text
//! h      = tanh(embed[y]·Wq + s·Ws + bq + pos(i))
//! attn   = softmax(K·h / sqrt(H)),   K = enc·Wk, Vv = enc·Wv
//! s'     = h + attnᵀ·Vv
//! logits = s'·Wo + bo
//! ```

use super::AedParams;
use crate::data::{LabelSequence, SOS_EOS_ID};
use crate::error::{Error, Result};
use crate::fusion::AedStepGrid;
use crate::numerics::{
    argmax, dot, log_sum_exp_nonempty, positional_encoding, softmax_backward, softmax_in_place, LogProb, Matrix, Scalar,
};
use crate::params::ParamSet;

/// Keys and values projected from one utterance's encoder output.
#[derive(Clone, Debug)]
pub struct AttentionMemory<T> {
    keys: Matrix<T>,
    values: Matrix<T>,
}

impl<T: Scalar> AttentionMemory<T> {
    pub fn new(params: &AedParams<T>, encoder_out: &Matrix<T>) -> Result<Self> {
        if encoder_out.cols() != params.w_key.rows() {
            return Err(Error::Shape {
                op: "AttentionMemory::new",
                expected: format!("encoder dim {}", params.w_key.rows()),
                got: format!("{}", encoder_out.cols()),
            });
        }
        if encoder_out.rows() == 0 {
            return Err(Error::Usage("attention over zero encoder frames".into()));
        }
        Ok(AttentionMemory { keys: encoder_out.matmul(&params.w_key), values: encoder_out.matmul(&params.w_value) })
    }

    pub fn frames(&self) -> usize {
        self.keys.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AedStepOutput<T> {
    pub logits: Vec<T>,
    pub state: Vec<T>,
    /// Attention weights over encoder frames.
    pub attention: Vec<T>,
    /// `tanh` query activation, kept for backprop.
    query: Vec<T>,
}

pub fn initial_state<T: Scalar>(params: &AedParams<T>) -> Vec<T> {
    vec![T::zero(); params.w_state.rows()]
}

/// Decoder step `step` (0 for the step fed `sos`).
pub fn aed_step<T: Scalar>(
    params: &AedParams<T>,
    memory: &AttentionMemory<T>,
    step: usize,
    prev_token: usize,
    state: &[T],
) -> Result<AedStepOutput<T>> {
    let dims = params.dims();
    if prev_token >= dims.vocab_size {
        return Err(Error::Usage(format!("token {prev_token} outside vocab {}", dims.vocab_size)));
    }
    if state.len() != dims.attn_dim {
        return Err(Error::Shape {
            op: "aed_step",
            expected: format!("state of length {}", dims.attn_dim),
            got: format!("{}", state.len()),
        });
    }
    let h_dim = dims.attn_dim;
    let embed = params.embed.row(prev_token);
    let mut query: Vec<T> = params.b_query.row(0).to_vec();
    for (q, p) in query.iter_mut().zip(positional_encoding::<T>(step, h_dim)) {
        *q += p;
    }
    for (e, w) in embed.iter().zip(params.w_query.row_iter()) {
        for (q, &wj) in query.iter_mut().zip(w) {
            *q += *e * wj;
        }
    }
    for (s, w) in state.iter().zip(params.w_state.row_iter()) {
        for (q, &wj) in query.iter_mut().zip(w) {
            *q += *s * wj;
        }
    }
    query.iter_mut().for_each(|q| *q = q.tanh());

    let scale = T::one() / T::from_count(h_dim).sqrt();
    let mut attention: Vec<T> = memory.keys.row_iter().map(|k| dot(k, &query) * scale).collect();
    softmax_in_place(&mut attention);

    let mut new_state = query.clone();
    for (&a, v) in attention.iter().zip(memory.values.row_iter()) {
        for (s, &vj) in new_state.iter_mut().zip(v) {
            *s += a * vj;
        }
    }

    let mut logits: Vec<T> = params.b_out.row(0).to_vec();
    for (&s, w) in new_state.iter().zip(params.w_out.row_iter()) {
        for (l, &wj) in logits.iter_mut().zip(w) {
            *l += s * wj;
        }
    }
    Ok(AedStepOutput { logits, state: new_state, attention, query })
}

struct StepRecord<T> {
    input: usize,
    prev_state: Vec<T>,
    out: AedStepOutput<T>,
}

/// Teacher-forced pass over `sos y1 .. yL` predicting `y1 .. yL eos`.
pub struct TeacherForced<T> {
    /// Mean token cross-entropy over the `L + 1` steps.
    pub loss: T,
    /// `(L + 1) x V`; row `i` predicts target `i`.
    pub step_logits: Matrix<T>,
    targets: Vec<usize>,
    memory: AttentionMemory<T>,
    steps: Vec<StepRecord<T>>,
}

impl<T: Scalar> TeacherForced<T> {
    /// The first `L` step rows, one per label, for fusion into CTC.
    pub fn fusion_grid(&self) -> Result<AedStepGrid<T>> {
        AedStepGrid::new(self.step_logits.slice_rows(0, self.targets.len() - 1))
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Gradient of the mean cross-entropy w.r.t. the step logits.
    pub fn ce_grad(&self) -> Matrix<T> {
        let n = T::from_count(self.targets.len());
        let mut g = self.step_logits.clone();
        for (i, &y) in self.targets.iter().enumerate() {
            let row = g.row_mut(i);
            softmax_in_place(row);
            row[y] -= T::one();
            row.iter_mut().for_each(|x| *x /= n);
        }
        g
    }
}

fn run_steps<T: Scalar>(
    params: &AedParams<T>,
    memory: &AttentionMemory<T>,
    inputs: &[usize],
) -> Result<Vec<StepRecord<T>>> {
    let mut state = initial_state(params);
    let mut steps = Vec::with_capacity(inputs.len());
    for (i, &input) in inputs.iter().enumerate() {
        let out = aed_step(params, memory, i, input, &state)?;
        let prev_state = std::mem::replace(&mut state, out.state.clone());
        steps.push(StepRecord { input, prev_state, out });
    }
    Ok(steps)
}

fn io_sequences(seq: &LabelSequence) -> (Vec<usize>, Vec<usize>) {
    let mut inputs = Vec::with_capacity(seq.len() + 1);
    inputs.push(SOS_EOS_ID);
    inputs.extend_from_slice(seq.tokens());
    let mut targets = seq.tokens().to_vec();
    targets.push(SOS_EOS_ID);
    (inputs, targets)
}

fn step_log_prob<T: Scalar>(logits: &[T], target: usize) -> T {
    logits[target] - log_sum_exp_nonempty(logits)
}

pub fn teacher_forced<T: Scalar>(
    params: &AedParams<T>,
    encoder_out: &Matrix<T>,
    labels: &LabelSequence,
) -> Result<TeacherForced<T>> {
    if labels.is_empty() {
        return Err(Error::Usage("teacher forcing needs a nonempty label sequence".into()));
    }
    check_tokens(params, labels)?;
    let memory = AttentionMemory::new(params, encoder_out)?;
    let (inputs, targets) = io_sequences(labels);
    let steps = run_steps(params, &memory, &inputs)?;
    let vocab = params.dims().vocab_size;
    let mut step_logits = Matrix::zeros(steps.len(), vocab);
    let mut total = T::zero();
    for (i, (rec, &y)) in steps.iter().zip(&targets).enumerate() {
        step_logits.row_mut(i).copy_from_slice(&rec.out.logits);
        total -= step_log_prob(&rec.out.logits, y);
    }
    Ok(TeacherForced { loss: total / T::from_count(targets.len()), step_logits, targets, memory, steps })
}

fn check_tokens<T: Scalar>(params: &AedParams<T>, seq: &LabelSequence) -> Result<()> {
    let v = params.dims().vocab_size;
    if let Some(&bad) = seq.iter().find(|&&t| t >= v) {
        return Err(Error::Usage(format!("token {bad} outside vocab {v}")));
    }
    Ok(())
}

/// Backpropagates `d_step_logits` through a teacher-forced pass. Returns
/// parameter gradients and the gradient w.r.t. the encoder output.
pub fn aed_backward<T: Scalar>(
    params: &AedParams<T>,
    encoder_out: &Matrix<T>,
    tf: &TeacherForced<T>,
    d_step_logits: &Matrix<T>,
) -> (AedParams<T>, Matrix<T>) {
    let dims = params.dims();
    let h_dim = dims.attn_dim;
    let frames = tf.memory.frames();
    let scale = T::one() / T::from_count(h_dim).sqrt();
    let mut grads = params.zeros_like();
    let mut d_keys = Matrix::zeros(frames, h_dim);
    let mut d_values = Matrix::zeros(frames, h_dim);
    let mut d_state_carry = vec![T::zero(); h_dim];

    for (i, rec) in tf.steps.iter().enumerate().rev() {
        let d_logits = d_step_logits.row(i);
        let out = &rec.out;
        // logits = s'·Wo + bo
        let mut d_state = d_state_carry.clone();
        for (j, ds) in d_state.iter_mut().enumerate() {
            *ds += dot(params.w_out.row(j), d_logits);
        }
        for (j, &s) in out.state.iter().enumerate() {
            for (g, &dl) in grads.w_out.row_mut(j).iter_mut().zip(d_logits) {
                *g += s * dl;
            }
        }
        for (g, &dl) in grads.b_out.row_mut(0).iter_mut().zip(d_logits) {
            *g += dl;
        }

        // s' = h + attnᵀ·Vv
        let mut d_attn = vec![T::zero(); frames];
        for (t, da) in d_attn.iter_mut().enumerate() {
            *da = dot(tf.memory.values.row(t), &d_state);
            let a = out.attention[t];
            for (g, &ds) in d_values.row_mut(t).iter_mut().zip(&d_state) {
                *g += a * ds;
            }
        }
        let mut d_scores = vec![T::zero(); frames];
        softmax_backward(&out.attention, &d_attn, &mut d_scores);
        let mut d_query = d_state;
        for (t, &dsc) in d_scores.iter().enumerate() {
            let ds = dsc * scale;
            if ds == T::zero() {
                continue;
            }
            for ((dq, &k), (dk, &q)) in
                d_query.iter_mut().zip(tf.memory.keys.row(t)).zip(d_keys.row_mut(t).iter_mut().zip(&out.query))
            {
                *dq += ds * k;
                *dk += ds * q;
            }
        }

        // h = tanh(pre)
        let d_pre: Vec<T> = d_query.iter().zip(&out.query).map(|(&g, &h)| g * (T::one() - h * h)).collect();
        let embed = params.embed.row(rec.input).to_vec();
        for (e, &x) in embed.iter().enumerate() {
            for (g, &dp) in grads.w_query.row_mut(e).iter_mut().zip(&d_pre) {
                *g += x * dp;
            }
        }
        for (e, g) in grads.embed.row_mut(rec.input).iter_mut().enumerate() {
            *g += dot(params.w_query.row(e), &d_pre);
        }
        for (g, &dp) in grads.b_query.row_mut(0).iter_mut().zip(&d_pre) {
            *g += dp;
        }
        for (j, &s) in rec.prev_state.iter().enumerate() {
            for (g, &dp) in grads.w_state.row_mut(j).iter_mut().zip(&d_pre) {
                *g += s * dp;
            }
        }
        for (j, c) in d_state_carry.iter_mut().enumerate() {
            *c = dot(params.w_state.row(j), &d_pre);
        }
    }

    encoder_out.tmatmul_acc(&d_keys, &mut grads.w_key);
    encoder_out.tmatmul_acc(&d_values, &mut grads.w_value);
    let mut d_enc = d_keys.matmul_t(&params.w_key);
    d_enc.add_scaled(&d_values.matmul_t(&params.w_value), T::one());
    (grads, d_enc)
}

/// Loss, fusion grid and gradients of the teacher-forced cross-entropy.
pub struct AedTrainOutput<T> {
    pub loss: T,
    pub step_grid: AedStepGrid<T>,
    pub grads: AedParams<T>,
    pub grad_encoder: Matrix<T>,
}

pub fn aed_teacher_forced<T: Scalar>(
    params: &AedParams<T>,
    encoder_out: &Matrix<T>,
    labels: &LabelSequence,
) -> Result<AedTrainOutput<T>> {
    let tf = teacher_forced(params, encoder_out, labels)?;
    let (grads, grad_encoder) = aed_backward(params, encoder_out, &tf, &tf.ce_grad());
    Ok(AedTrainOutput { loss: tf.loss, step_grid: tf.fusion_grid()?, grads, grad_encoder })
}

/// `log P(seq, eos | encoder_out)`.
pub fn aed_score_sequence<T: Scalar>(
    params: &AedParams<T>,
    encoder_out: &Matrix<T>,
    seq: &LabelSequence,
) -> Result<LogProb<T>> {
    let memory = AttentionMemory::new(params, encoder_out)?;
    score_with_memory(params, &memory, seq)
}

pub fn score_with_memory<T: Scalar>(
    params: &AedParams<T>,
    memory: &AttentionMemory<T>,
    seq: &LabelSequence,
) -> Result<LogProb<T>> {
    check_tokens(params, seq)?;
    let (inputs, targets) = io_sequences(seq);
    let steps = run_steps(params, memory, &inputs)?;
    let total =
        steps.iter().zip(&targets).map(|(rec, &y)| step_log_prob(&rec.out.logits, y)).fold(T::zero(), |a, b| a + b);
    Ok(LogProb::new(total.min(T::zero())))
}

/// Greedy autoregressive decoding from sos until eos or `max_len` tokens.
pub fn aed_greedy_decode<T: Scalar>(
    params: &AedParams<T>,
    encoder_out: &Matrix<T>,
    max_len: usize,
) -> Result<(LabelSequence, LogProb<T>)> {
    if max_len < 1 {
        return Err(Error::Usage("AED greedy decode needs max_len >= 1".into()));
    }
    let memory = AttentionMemory::new(params, encoder_out)?;
    let mut state = initial_state(params);
    let mut prev = SOS_EOS_ID;
    let mut tokens = Vec::new();
    let mut score = T::zero();
    while tokens.len() < max_len {
        let out = aed_step(params, &memory, tokens.len(), prev, &state)?;
        let k = argmax(&out.logits);
        score += step_log_prob(&out.logits, k);
        if k == SOS_EOS_ID {
            break;
        }
        tokens.push(k);
        prev = k;
        state = out.state;
    }
    Ok((LabelSequence::new(tokens), LogProb::new(score)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aed::AedDims;
    use crate::numerics::RandomStream;

    fn dims() -> AedDims {
        AedDims { vocab_size: 6, embed_dim: 3, attn_dim: 4, encoder_dim: 5 }
    }

    fn encoder(frames: usize, seed: u64) -> Matrix<f64> {
        let mut rng = RandomStream::new(seed);
        let data = (0..frames * 5).map(|_| rng.gaussian()).collect();
        Matrix::from_vec(frames, 5, data).unwrap()
    }

    #[test]
    fn step_is_deterministic_and_attention_normalized() {
        let params = AedParams::<f64>::init(dims(), &mut RandomStream::new(1));
        let mem = AttentionMemory::new(&params, &encoder(7, 2)).unwrap();
        let s = initial_state(&params);
        let a = aed_step(&params, &mem, 0, 3, &s).unwrap();
        let b = aed_step(&params, &mem, 0, 3, &s).unwrap();
        assert_eq!(a, b);
        assert!((a.attention.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_params_give_uniform_output() {
        let params = AedParams::<f64>::zeros(dims());
        let enc = encoder(4, 3);
        let tf = teacher_forced(&params, &enc, &LabelSequence::new(vec![3, 4])).unwrap();
        assert!((tf.loss - 6f64.ln()).abs() < 1e-12);
        assert!(tf.step_logits.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn score_matches_teacher_forced_loss() {
        let params = AedParams::<f64>::init(dims(), &mut RandomStream::new(5));
        let enc = encoder(6, 6);
        let seq = LabelSequence::new(vec![3, 5, 4]);
        let tf = teacher_forced(&params, &enc, &seq).unwrap();
        let score = aed_score_sequence(&params, &enc, &seq).unwrap();
        assert!(score.value() <= 0.0);
        assert!((score.value() + 4.0 * tf.loss).abs() < 1e-12);
        // no hidden state between calls
        assert_eq!(score, aed_score_sequence(&params, &enc, &seq).unwrap());
    }

    #[test]
    fn fusion_grid_has_one_row_per_label() {
        let params = AedParams::<f64>::init(dims(), &mut RandomStream::new(5));
        let tf = teacher_forced(&params, &encoder(6, 1), &LabelSequence::new(vec![3, 5])).unwrap();
        assert_eq!(tf.step_logits.rows(), 3);
        assert_eq!(tf.fusion_grid().unwrap().steps(), 2);
    }

    #[test]
    fn greedy_stops_at_eos_or_max_len() {
        let mut params = AedParams::<f64>::zeros(dims());
        params.b_out[(0, SOS_EOS_ID)] = 5.0;
        let (seq, _) = aed_greedy_decode(&params, &encoder(3, 1), 10).unwrap();
        assert!(seq.is_empty());

        params.b_out[(0, SOS_EOS_ID)] = 0.0;
        params.b_out[(0, 4)] = 5.0;
        let (seq, _) = aed_greedy_decode(&params, &encoder(3, 1), 4).unwrap();
        assert_eq!(seq.tokens(), &[4, 4, 4, 4]);
        assert!(aed_greedy_decode(&params, &encoder(3, 1), 0).is_err());
    }

    #[test]
    fn confident_decoder_scores_own_output_near_zero() {
        let mut params = AedParams::<f64>::zeros(dims());
        params.b_out[(0, SOS_EOS_ID)] = 60.0;
        let enc = encoder(3, 1);
        let (seq, _) = aed_greedy_decode(&params, &enc, 5).unwrap();
        assert!(aed_score_sequence(&params, &enc, &seq).unwrap().value() > -1e-20);
    }

    #[test]
    fn empty_labels_rejected() {
        let params = AedParams::<f64>::zeros(dims());
        assert!(teacher_forced(&params, &encoder(3, 1), &LabelSequence::default()).is_err());
    }
}
