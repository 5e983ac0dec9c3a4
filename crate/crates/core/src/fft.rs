//! Multi-dimensional DFT helpers built on `rustfft`.
//!
//! Conventions: the forward transform is unnormalized,
//! `X(k) = Σ_t x(t) e^{-2πi k·t/N}`, and the inverse carries the full `1/N`
//! factor (with `N` the total sample count), so `idft(dft(x)) = x`.

use crate::signal::{linear_index, next_index, strides_of, wrap, Signal};
use crate::{Error, Result, Scalar};
use num_complex::Complex;
use rustfft::FftPlanner;

/// In-place multi-dimensional DFT over row-major complex data.
pub fn dft_in_place<T: Scalar>(shape: &[usize], data: &mut [Complex<T>], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "data length must match shape volume");
    if total == 0 {
        return;
    }
    let strides = strides_of(shape);
    let mut planner = FftPlanner::<T>::new();
    for axis in 0..shape.len() {
        let n = shape[axis];
        if n == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut line = vec![Complex::new(T::zero(), T::zero()); n];
        // Walk every line parallel to `axis`: all multi-indices with idx[axis] = 0.
        let mut base_shape = shape.to_vec();
        base_shape[axis] = 1;
        let mut idx = vec![0usize; shape.len()];
        loop {
            let start = linear_index(&idx, &strides);
            let step = strides[axis];
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[start + j * step];
            }
            fft.process(&mut line);
            for (j, &v) in line.iter().enumerate() {
                data[start + j * step] = v;
            }
            if !next_index(&mut idx, &base_shape) {
                break;
            }
        }
    }
    if inverse {
        let scale = T::one() / T::from_usize(total).unwrap();
        for v in data.iter_mut() {
            *v = *v * scale;
        }
    }
}

/// Forward DFT of a real signal.
pub fn dft<T: Scalar>(sig: &Signal<T>) -> Vec<Complex<T>> {
    let mut data: Vec<Complex<T>> =
        sig.data().iter().map(|&x| Complex::new(x, T::zero())).collect();
    dft_in_place(sig.shape(), &mut data, false);
    data
}

/// Inverse DFT, keeping the real part.
///
/// Intended for spectra that are (numerically) Hermitian, where the imaginary
/// part of the inverse is rounding noise.
pub fn idft_real<T: Scalar>(shape: &[usize], mut spectrum: Vec<Complex<T>>) -> Signal<T> {
    dft_in_place(shape, &mut spectrum, true);
    let data = spectrum.into_iter().map(|v| v.re).collect();
    Signal::from_vec(shape.to_vec(), data).expect("shape fixed by caller")
}

/// Frequency response of a finite tap stencil on a circular grid.
///
/// The stencil places `taps[j]` at grid position `(offset + j) mod extent`
/// per axis and returns the forward DFT of the resulting grid signal. Taps
/// larger than the grid wrap and accumulate, consistent with circular
/// convolution semantics.
pub fn tap_spectrum<T: Scalar>(
    taps: &Signal<T>,
    offset: &[i64],
    grid: &[usize],
) -> Result<Vec<Complex<T>>> {
    if taps.shape().len() != grid.len() {
        return Err(Error::Validation(format!(
            "tap stencil is {}-d but the grid is {}-d",
            taps.shape().len(),
            grid.len()
        )));
    }
    if offset.len() != grid.len() {
        return Err(Error::Validation("offset dimensionality must match the grid".into()));
    }
    let mut embedded = Signal::<T>::zeros(grid);
    let grid_strides = strides_of(grid);
    let mut idx = vec![0usize; grid.len()];
    loop {
        let mut pos = vec![0usize; grid.len()];
        for a in 0..grid.len() {
            pos[a] = wrap(offset[a] + idx[a] as i64, grid[a]);
        }
        let lin = linear_index(&pos, &grid_strides);
        embedded.data_mut()[lin] += taps.at(&idx);
        if !next_index(&mut idx, taps.shape()) {
            break;
        }
    }
    Ok(dft(&embedded))
}
