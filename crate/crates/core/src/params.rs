//! Named collections of parameter tensors, viewable as one flat vector.

use crate::numerics::{Matrix, RandomStream, Scalar};

pub trait ParamSet<T: Scalar>: Clone {
    /// Tensors in a fixed order, with stable names.
    fn tensors(&self) -> Vec<(&'static str, &Matrix<T>)>;

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.tensors_mut().into_iter().for_each(|m| m.fill(T::zero()));
        out
    }

    fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, m) in self.tensors() {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    /// Overwrites every parameter from a flat vector of matching length.
    fn assign_flat(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut offset = 0;
        for m in self.tensors_mut() {
            let n = m.as_slice().len();
            m.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    fn get_flat(&self, index: usize) -> T {
        let mut offset = index;
        for (_, m) in self.tensors() {
            let n = m.as_slice().len();
            if offset < n {
                return m.as_slice()[offset];
            }
            offset -= n;
        }
        panic!("parameter index {index} out of range");
    }

    fn set_flat(&mut self, index: usize, value: T) {
        let mut offset = index;
        for m in self.tensors_mut() {
            let n = m.as_slice().len();
            if offset < n {
                m.as_mut_slice()[offset] = value;
                return;
            }
            offset -= n;
        }
        panic!("parameter index {index} out of range");
    }

    /// Name of the tensor holding flat `index`.
    fn name_of(&self, index: usize) -> &'static str {
        let mut offset = index;
        for (name, m) in self.tensors() {
            let n = m.as_slice().len();
            if offset < n {
                return name;
            }
            offset -= n;
        }
        panic!("parameter index {index} out of range");
    }

    /// `self += scale * other`.
    fn add_scaled(&mut self, other: &Self, scale: T) {
        let src = other.tensors();
        for (dst, (_, s)) in self.tensors_mut().into_iter().zip(src) {
            dst.add_scaled(s, scale);
        }
    }

    fn scale(&mut self, factor: T) {
        self.tensors_mut().into_iter().for_each(|m| m.scale(factor));
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }

    fn squared_norm(&self) -> T {
        self.tensors().iter().flat_map(|(_, m)| m.as_slice().iter()).fold(T::zero(), |acc, &x| acc + x * x)
    }
}

/// Gaussian matrix with standard deviation `1 / sqrt(fan_in)`.
pub(crate) fn scaled_gaussian<T: Scalar>(rows: usize, cols: usize, fan_in: usize, rng: &mut RandomStream) -> Matrix<T> {
    let std = 1.0 / (fan_in.max(1) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gaussian_scalar(std)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized buffer")
}
