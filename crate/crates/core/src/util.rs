//! Small numerical helpers shared across the crate.

use crate::Scalar;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sums a slice by pairwise recursion.
///
/// Pairwise summation keeps the rounding error at `O(log n)` ulps and, unlike
/// sequential accumulation, gives the same result regardless of how callers
/// later choose to chunk parallel work, as long as they sum whole slices.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean of a slice via pairwise summation. Empty slices yield zero.
pub fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    pairwise_sum(xs) / T::from_usize(xs.len()).unwrap()
}

/// Unbiased sample variance (denominator `n - 1`); zero for fewer than two points.
pub fn sample_variance<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let sq: Vec<T> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / T::from_usize(xs.len() - 1).unwrap()
}

/// Deterministic generator for a top-level seed.
///
/// ChaCha is counter-based, so generators for distinct streams can be created
/// in any order (or in parallel) without affecting each other's output.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for stream `stream` under a common seed.
///
/// Every parallel loop in the crate draws its per-item randomness from
/// `rng_stream(seed, item_index)`, which makes results independent of the
/// rayon schedule.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Index of the largest element, first occurrence winning ties.
///
/// Returns `None` for empty input or if any comparison is undefined (NaN).
pub fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            None => best = Some((i, x)),
            Some((_, b)) => {
                if x.partial_cmp(&b)? == std::cmp::Ordering::Greater {
                    best = Some((i, x));
                }
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Ranks with ties replaced by their average rank (1-based), as used by
/// rank-correlation statistics.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("rank input must be orderable"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..=j share the same value; give all of them the average rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation between two equal-length samples.
///
/// Computed as the Pearson correlation of average ranks, which handles ties.
/// Returns `None` when either sample has zero rank variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "spearman inputs must pair up");
    if xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mx = mean(&rx);
    let my = mean(&ry);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..rx.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_sequential_on_small_input() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
    }

    #[test]
    fn pairwise_sum_is_chunking_independent() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.7).sin()).collect();
        let total = pairwise_sum(&xs);
        let halves = pairwise_sum(&xs[..500]) + pairwise_sum(&xs[500..]);
        assert_eq!(total, halves);
    }

    #[test]
    fn ranks_average_ties() {
        let ranks = average_ranks(&[10.0, 20.0, 20.0, 5.0]);
        assert_eq!(ranks, vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn spearman_detects_monotone_relations() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let inc = [2.0, 4.0, 9.0, 16.0, 25.0];
        let dec = [9.0, 7.0, 4.0, 2.0, 1.0];
        assert_eq!(spearman(&xs, &inc), Some(1.0));
        assert_eq!(spearman(&xs, &dec), Some(-1.0));
        assert_eq!(spearman(&xs, &[3.0; 5]), None);
    }

    #[test]
    fn stream_rngs_are_independent_of_creation_order() {
        use rand::Rng;
        let mut a1 = rng_stream(7, 1);
        let mut a2 = rng_stream(7, 2);
        let x1: f64 = a1.gen();
        let x2: f64 = a2.gen();
        let mut b2 = rng_stream(7, 2);
        let mut b1 = rng_stream(7, 1);
        let y2: f64 = b2.gen();
        let y1: f64 = b1.gen();
        assert_eq!(x1, y1);
        assert_eq!(x2, y2);
        assert_ne!(x1, x2);
    }
}
