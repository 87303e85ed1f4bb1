//! Adaptive affine expansion of per-step AED outputs onto CTC frames.
//!
//! Each of the `L` AED rows is repeated `r = floor(P / L) + 1` times and the
//! concatenation is cut to `P` rows, so output row `t` copies input row
//! `t / r`. Trailing AED rows may go unused; that loss of alignment is
//! inherent to the block expansion.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar};

/// `L x V` AED step logits from a teacher-forced pass, `L >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AedStepGrid<T> {
    grid: Matrix<T>,
}

impl<T: Scalar> AedStepGrid<T> {
    pub fn new(grid: Matrix<T>) -> Result<Self> {
        if grid.rows() == 0 {
            return Err(Error::Usage("AED step grid needs at least one step".into()));
        }
        Ok(AedStepGrid { grid })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.grid.cols()
    }
}

/// `P x V` expansion plus the source row of every output row.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedAedGrid<T> {
    pub grid: Matrix<T>,
    pub source_map: Vec<usize>,
    source_rows: usize,
}

impl<T: Scalar> ExpandedAedGrid<T> {
    pub fn rows(&self) -> usize {
        self.grid.rows()
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    /// Sums gradients of the expanded rows back onto their source rows.
    pub fn scatter_back(&self, grad_expanded: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(self.source_rows, self.grid.cols());
        for (t, &src) in self.source_map.iter().enumerate() {
            for (o, &g) in out.row_mut(src).iter_mut().zip(grad_expanded.row(t)) {
                *o += g;
            }
        }
        out
    }
}

/// Repeat factor for expanding `steps` rows to `frames` rows.
pub fn repeat_factor(steps: usize, frames: usize) -> usize {
    frames / steps + 1
}

pub fn source_map(steps: usize, frames: usize) -> Result<Vec<usize>> {
    if steps == 0 || steps > frames {
        return Err(Error::Usage(format!("adaptive affine needs 1 <= L <= P, got L = {steps}, P = {frames}")));
    }
    let r = repeat_factor(steps, frames);
    Ok((0..frames).map(|t| t / r).collect())
}

pub fn adaptive_affine<T: Scalar>(aed: &AedStepGrid<T>, target_len: usize) -> Result<ExpandedAedGrid<T>> {
    let map = source_map(aed.steps(), target_len)?;
    let mut grid = Matrix::zeros(target_len, aed.vocab_size());
    for (t, &src) in map.iter().enumerate() {
        grid.row_mut(t).copy_from_slice(aed.matrix().row(src));
    }
    Ok(ExpandedAedGrid { grid, source_map: map, source_rows: aed.steps() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_maps() {
        assert_eq!(repeat_factor(2, 4), 3);
        assert_eq!(source_map(2, 4).unwrap(), vec![0, 0, 0, 1]);
        assert_eq!(source_map(3, 3).unwrap(), vec![0, 0, 1]);
        assert_eq!(source_map(3, 7).unwrap(), vec![0, 0, 0, 1, 1, 1, 2]);
    }

    #[test]
    fn longer_source_rejected() {
        assert!(source_map(4, 3).is_err());
        assert!(source_map(0, 3).is_err());
    }

    #[test]
    fn map_invariants_exhaustive() {
        for p in 1..=50 {
            for l in 1..=p {
                let m = source_map(l, p).unwrap();
                assert_eq!(m.len(), p);
                assert_eq!(m[0], 0);
                assert!(m.windows(2).all(|w| w[0] <= w[1]));
                assert!(m.iter().all(|&s| s < l));
            }
        }
    }

    #[test]
    fn rows_copied_and_scattered() {
        let aed = AedStepGrid::new(Matrix::from_rows(&[vec![1.0f64, 2.0], vec![3.0, 4.0]]).unwrap()).unwrap();
        let e = adaptive_affine(&aed, 4).unwrap();
        assert_eq!(e.grid.row(2), &[1.0, 2.0]);
        assert_eq!(e.grid.row(3), &[3.0, 4.0]);
        let back = e.scatter_back(&Matrix::filled(4, 2, 1.0));
        assert_eq!(back.as_slice(), &[3.0, 3.0, 1.0, 1.0]);
    }
}
