//! Dense multi-dimensional signals on circular sample grids.

use crate::util::pairwise_sum;
use crate::{Error, Result, Scalar};

/// A real-valued signal sampled on a `d`-dimensional circular grid.
///
/// Data is stored row-major (last axis fastest). All per-axis indexing is
/// circular: translations and filter supports wrap around the grid, matching
/// the periodic convolution semantics used throughout the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Signal<T> {
    /// All-zero signal of the given shape.
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Signal { shape: shape.to_vec(), data: vec![T::zero(); len] }
    }

    /// Wraps raw row-major data; the length must match the shape's volume.
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let want: usize = shape.iter().product();
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::Validation("signal extents must be positive".into()));
        }
        if data.len() != want {
            return Err(Error::Validation(format!(
                "signal data length {} does not match shape volume {}",
                data.len(),
                want
            )));
        }
        Ok(Signal { shape, data })
    }

    /// Per-axis extents.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True when the grid has no samples (never constructed by this crate).
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major sample slice.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Mutable row-major sample slice.
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Consumes the signal, returning its raw samples.
    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Euclidean norm of the sample vector.
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Squared Euclidean norm, summed pairwise for reproducibility.
    pub fn norm_squared(&self) -> T {
        let sq: Vec<T> = self.data.iter().map(|&x| x * x).collect();
        pairwise_sum(&sq)
    }

    /// Pointwise difference; the shapes must agree.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Validation(format!(
                "shape mismatch in difference: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Signal { shape: self.shape.clone(), data })
    }

    /// Pointwise sum; the shapes must agree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Validation(format!(
                "shape mismatch in sum: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(Signal { shape: self.shape.clone(), data })
    }

    /// Scaled copy.
    pub fn scaled(&self, c: T) -> Self {
        Signal { shape: self.shape.clone(), data: self.data.iter().map(|&x| x * c).collect() }
    }

    /// Sample at a multi-index (unwrapped; caller guarantees bounds).
    pub fn at(&self, idx: &[usize]) -> T {
        self.data[linear_index(idx, &strides_of(&self.shape))]
    }

    /// White standard-normal signal.
    pub fn gaussian<R: rand::Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Self {
        let len = shape.iter().product();
        let data = (0..len).map(|_| T::standard_normal(rng)).collect();
        Signal { shape: shape.to_vec(), data }
    }
}

/// Row-major strides for a shape (last axis has stride 1).
pub fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

/// Flattens a multi-index with precomputed strides.
pub fn linear_index(idx: &[usize], strides: &[usize]) -> usize {
    idx.iter().zip(strides).map(|(&i, &s)| i * s).sum()
}

/// Advances a multi-index in row-major order; returns `false` after the last one.
pub fn next_index(idx: &mut [usize], shape: &[usize]) -> bool {
    for a in (0..shape.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return true;
        }
        idx[a] = 0;
    }
    false
}

/// Wraps a possibly negative coordinate onto a circular axis of extent `n`.
pub fn wrap(i: i64, n: usize) -> usize {
    let n = n as i64;
    (((i % n) + n) % n) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_are_row_major() {
        assert_eq!(strides_of(&[2, 3, 4]), vec![12, 4, 1]);
        assert_eq!(strides_of(&[5]), vec![1]);
    }

    #[test]
    fn odometer_visits_every_index_once() {
        let shape = [2, 3];
        let mut idx = vec![0usize; 2];
        let mut seen = Vec::new();
        loop {
            seen.push(idx.clone());
            if !next_index(&mut idx, &shape) {
                break;
            }
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 0]);
        assert_eq!(seen[5], vec![1, 2]);
    }

    #[test]
    fn wrap_handles_negatives() {
        assert_eq!(wrap(-1, 8), 7);
        assert_eq!(wrap(8, 8), 0);
        assert_eq!(wrap(-9, 8), 7);
        assert_eq!(wrap(3, 8), 3);
    }

    #[test]
    fn norm_squared_matches_hand_value() {
        let s = Signal::from_vec(vec![2, 2], vec![1.0, -2.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.norm_squared(), 9.0);
        assert_eq!(s.norm(), 3.0);
    }

    #[test]
    fn from_vec_rejects_bad_lengths() {
        assert!(Signal::<f64>::from_vec(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(Signal::<f64>::from_vec(vec![0], vec![]).is_err());
    }
}
