use super::{Matrix, Scalar};

/// Sinusoidal encoding of position `pos`: `sin` on even, `cos` on odd
/// coordinates, wavelengths growing geometrically up to `10000 * 2π`.
pub fn positional_encoding<T: Scalar>(pos: usize, dim: usize) -> Vec<T> {
    (0..dim)
        .map(|i| {
            let rate = 10000f64.powf(-((i / 2 * 2) as f64) / dim as f64);
            let angle = pos as f64 * rate;
            T::lit(if i % 2 == 0 { angle.sin() } else { angle.cos() })
        })
        .collect()
}

/// Adds the encoding of each row index to that row.
pub fn add_positions<T: Scalar>(m: &mut Matrix<T>) {
    let cols = m.cols();
    for t in 0..m.rows() {
        for (x, p) in m.row_mut(t).iter_mut().zip(positional_encoding::<T>(t, cols)) {
            *x += p;
        }
    }
}
