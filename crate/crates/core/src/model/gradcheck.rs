//! Central finite-difference checks of analytic gradients.

use serde::{Deserialize, Serialize};

use super::loss::total_loss;
use super::ModelParams;
use crate::config::LossConfig;
use crate::data::LabelSequence;
use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::numerics::{Matrix, RandomStream};
use crate::params::ParamSet;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckEntry {
    pub index: usize,
    pub name: String,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub samples: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Largest relative error among entries that fail the absolute floor.
    pub max_rel_error_above_floor: f64,
    pub passed: bool,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    fn from_entries(entries: Vec<GradCheckEntry>) -> Self {
        let max = |f: &dyn Fn(&GradCheckEntry) -> f64| entries.iter().map(f).fold(0.0, f64::max);
        GradCheckReport {
            samples: entries.len(),
            max_abs_error: max(&|e| e.abs_error),
            max_rel_error: max(&|e| e.rel_error),
            max_rel_error_above_floor: max(&|e| if e.abs_error > ABS_TOL { e.rel_error } else { 0.0 }),
            passed: entries.iter().all(|e| e.passed),
            entries,
        }
    }
}

/// Picks `samples` distinct coordinates of an `n`-vector (all when
/// `samples >= n`), deterministically from `seed`.
pub fn sample_indices(n: usize, samples: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if samples < n {
        RandomStream::derived(seed, 0x6c).shuffle(&mut idx);
        idx.truncate(samples);
        idx.sort_unstable();
    }
    idx
}

/// Compares `analytic[i]` with `(f(x + h e_i) - f(x - h e_i)) / 2h` for each
/// index. An entry passes when its absolute error is within the floor or
/// its relative error within tolerance.
pub fn fd_check<F>(
    point: &[f64],
    analytic: &[f64],
    indices: &[usize],
    names: impl Fn(usize) -> String,
    mut f: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if point.len() != analytic.len() {
        return Err(Error::Shape {
            op: "fd_check",
            expected: format!("{} gradient entries", point.len()),
            got: format!("{}", analytic.len()),
        });
    }
    let mut x = point.to_vec();
    let mut entries = Vec::with_capacity(indices.len());
    for &i in indices {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let up = f(&x)?;
        x[i] = orig - FD_STEP;
        let down = f(&x)?;
        x[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let a = analytic[i];
        let abs_error = (a - numeric).abs();
        let scale = a.abs().max(numeric.abs());
        let rel_error = if scale == 0.0 { 0.0 } else { abs_error / scale };
        entries.push(GradCheckEntry {
            index: i,
            name: names(i),
            analytic: a,
            numeric,
            abs_error,
            rel_error,
            passed: abs_error <= ABS_TOL || rel_error <= REL_TOL,
        });
    }
    Ok(GradCheckReport::from_entries(entries))
}

/// Checks the gradient of the joint loss on `samples` parameters chosen
/// with `seed`.
pub fn grad_check(
    model: &ModelParams<f64>,
    features: &Matrix<f64>,
    labels: &LabelSequence,
    loss_cfg: &LossConfig,
    fusion: &FusionConfig,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    if samples == 0 {
        return Err(Error::Usage("grad_check needs at least one sample".into()));
    }
    let analytic = total_loss(model, features, labels, loss_cfg, fusion)?.grads.flatten();
    let point = model.flatten();
    let indices = sample_indices(point.len(), samples, seed);
    let mut probe = model.clone();
    fd_check(
        &point,
        &analytic,
        &indices,
        |i| model.name_of(i).to_string(),
        |x| {
            probe.assign_flat(x);
            Ok(total_loss(&probe, features, labels, loss_cfg, fusion)?.loss)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes_and_wrong_gradient_fails() {
        let x = [1.0, -2.0, 0.5];
        let f = |v: &[f64]| Ok(v.iter().map(|a| a * a * a).sum::<f64>());
        let good: Vec<f64> = x.iter().map(|a| 3.0 * a * a).collect();
        let r = fd_check(&x, &good, &[0, 1, 2], |i| i.to_string(), f).unwrap();
        assert!(r.passed, "{r:?}");
        let mut bad = good.clone();
        bad[1] += 0.1;
        let r = fd_check(&x, &bad, &[0, 1, 2], |i| i.to_string(), f).unwrap();
        assert!(!r.passed);
        assert!(!r.entries[1].passed);
    }

    #[test]
    fn sampling_deterministic() {
        assert_eq!(sample_indices(50, 10, 3), sample_indices(50, 10, 3));
        assert_ne!(sample_indices(50, 10, 3), sample_indices(50, 10, 4));
        assert_eq!(sample_indices(4, 10, 3), vec![0, 1, 2, 3]);
        let s = sample_indices(50, 10, 3);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
