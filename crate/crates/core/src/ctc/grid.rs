use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp_nonempty, row_log_softmax, Matrix, Scalar};

/// `T x V` grid whose rows are log-probability distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct LogPosteriorGrid<T> {
    grid: Matrix<T>,
}

impl<T: Scalar> LogPosteriorGrid<T> {
    /// Validates that every row is normalized.
    pub fn new(grid: Matrix<T>) -> Result<Self> {
        let tol = T::normalization_tol();
        for (t, row) in grid.row_iter().enumerate() {
            let lse = log_sum_exp_nonempty(row);
            if lse.is_nan() || lse.abs() > tol {
                return Err(Error::Usage(format!("row {t} of log-posterior grid sums to exp({lse:e}), not 1")));
            }
        }
        Ok(LogPosteriorGrid { grid })
    }

    pub fn from_logits(logits: &Matrix<T>) -> Self {
        LogPosteriorGrid { grid: row_log_softmax(logits) }
    }

    /// Grid from probabilities; rows must already sum to one.
    pub fn from_probs(probs: &Matrix<T>) -> Result<Self> {
        Self::new(probs.map(|p| p.ln()))
    }

    pub(crate) fn from_normalized_unchecked(grid: Matrix<T>) -> Self {
        LogPosteriorGrid { grid }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.grid
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.grid
    }

    pub fn frames(&self) -> usize {
        self.grid.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.grid.cols()
    }

    pub fn row(&self, t: usize) -> &[T] {
        self.grid.row(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized() {
        let m = Matrix::from_rows(&[vec![0.0f64, 0.0]]).unwrap();
        assert!(LogPosteriorGrid::new(m).is_err());
        let p = Matrix::from_rows(&[vec![0.25f64, 0.75]]).unwrap();
        assert!(LogPosteriorGrid::from_probs(&p).is_ok());
    }
}
