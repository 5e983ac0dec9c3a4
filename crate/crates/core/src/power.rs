//! Matrix-free largest-singular-value estimation.
//!
//! Power iteration on `AᵀA` with a seeded random start, Rayleigh-quotient
//! convergence, and one automatic restart from a fresh vector when the first
//! run fails to settle. Since `AᵀA` is positive semidefinite the Rayleigh
//! quotients of the iterates are nondecreasing, so increments are a safe
//! convergence measure; estimates approach the true value from below.

use crate::util::{pairwise_sum, rng_stream};
use crate::{Error, Result, Scalar};

/// Outcome of a power iteration run.
#[derive(Clone, Debug)]
pub struct PowerIterResult<T> {
    /// Estimate of the squared operator norm, `λ_max(AᵀA)`.
    pub value: T,
    /// Total iterations used (across a restart, if any).
    pub iterations: usize,
    /// Whether the fallback restart was taken.
    pub restarted: bool,
    /// Whether the returned estimate met the tolerance.
    pub converged: bool,
    /// Final unit-norm iterate: once converged, the input direction along
    /// which the operator attains (approximately) its norm.
    pub vector: Vec<T>,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    pairwise_sum(&v.iter().map(|&x| x * x).collect::<Vec<_>>()).sqrt()
}

fn run_once<T, FA, FT>(
    dim_in: usize,
    apply: &FA,
    adjoint: &FT,
    tol: T,
    max_iter: usize,
    seed: u64,
    stream: u64,
) -> (T, usize, bool, Vec<T>)
where
    T: Scalar,
    FA: Fn(&[T]) -> Vec<T>,
    FT: Fn(&[T]) -> Vec<T>,
{
    let mut rng = rng_stream(seed, stream);
    let mut v: Vec<T> = (0..dim_in).map(|_| T::standard_normal(&mut rng)).collect();
    let nv = norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut prev = T::zero();
    for it in 1..=max_iter {
        let w = apply(&v);
        let s2 = pairwise_sum(&w.iter().map(|&x| x * x).collect::<Vec<_>>());
        if s2 == T::zero() {
            // v is in the kernel; a second random start decides whether the
            // operator itself vanishes.
            return (T::zero(), it, false, v);
        }
        if it > 1 && (s2 - prev).abs() <= tol * s2 {
            return (s2, it, true, v);
        }
        prev = s2;
        let z = adjoint(&w);
        let nz = norm(&z);
        if nz == T::zero() {
            return (T::zero(), it, false, v);
        }
        for (x, &zi) in v.iter_mut().zip(&z) {
            *x = zi / nz;
        }
    }
    (prev, max_iter, false, v)
}

/// Estimates `‖A‖² = λ_max(AᵀA)` for a linear operator given as closures.
///
/// `apply` maps an input vector to `A x`; `adjoint` maps an output vector to
/// `Aᵀ y`. Iteration stops when the Rayleigh quotient changes by less than
/// `tol` relative; if the budget runs out, one restart from an independent
/// start vector is attempted and the larger estimate wins.
pub fn operator_norm_squared<T, FA, FT>(
    dim_in: usize,
    apply: FA,
    adjoint: FT,
    tol: T,
    max_iter: usize,
    seed: u64,
) -> Result<PowerIterResult<T>>
where
    T: Scalar,
    FA: Fn(&[T]) -> Vec<T>,
    FT: Fn(&[T]) -> Vec<T>,
{
    if dim_in == 0 {
        return Err(Error::Validation("operator input dimension must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::Validation("iteration budget must be positive".into()));
    }
    let (v1, it1, ok1, vec1) = run_once(dim_in, &apply, &adjoint, tol, max_iter, seed, 0);
    if ok1 && v1 > T::zero() {
        return Ok(PowerIterResult {
            value: v1,
            iterations: it1,
            restarted: false,
            converged: true,
            vector: vec1,
        });
    }
    let (v2, it2, ok2, vec2) = run_once(dim_in, &apply, &adjoint, tol, max_iter, seed, 1);
    let (value, converged, vector) = if v2 > v1 {
        (v2, ok2, vec2)
    } else {
        (v1, ok1 || (ok2 && v2 == v1), vec1)
    };
    Ok(PowerIterResult { value, iterations: it1 + it2, restarted: true, converged, vector })
}
