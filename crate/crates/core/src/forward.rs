//! Reference evaluation of discrete networks on sampled signals.
//!
//! Everything here is direct-form and allocation-happy on purpose: this is
//! the semantic ground truth that the spectral bounds are checked against,
//! so clarity beats speed. Convolutions are circular, subsampling keeps
//! phase 0, and features come out in the fixed layer-major node order of
//! [`NetworkSpec::feature_nodes`].

use crate::netspec::{Domain, Filter, MergeKind, NetworkSpec, PExponent, SourceRef};
use crate::signal::{linear_index, next_index, strides_of, wrap, Signal};
use crate::util::pairwise_sum;
use crate::{Error, Result, Scalar};

/// Circular convolution `y(t) = Σ_j taps[j] · x(t - offset - j)`.
///
/// The stencil may be larger than the grid; its placement wraps circularly.
pub fn conv_circular<T: Scalar>(x: &Signal<T>, taps: &Signal<T>, offset: &[i64]) -> Signal<T> {
    let shape = x.shape();
    let d = shape.len();
    let x_strides = strides_of(shape);
    let mut y = Signal::<T>::zeros(shape);
    let mut t = vec![0usize; d];
    let mut out_pos = 0usize;
    loop {
        let mut acc = T::zero();
        let mut j = vec![0usize; d];
        loop {
            let mut src = vec![0usize; d];
            for a in 0..d {
                src[a] = wrap(t[a] as i64 - offset[a] - j[a] as i64, shape[a]);
            }
            acc += taps.at(&j) * x.data()[linear_index(&src, &x_strides)];
            if !next_index(&mut j, taps.shape()) {
                break;
            }
        }
        y.data_mut()[out_pos] = acc;
        out_pos += 1;
        if !next_index(&mut t, shape) {
            break;
        }
    }
    y
}

/// Adjoint of [`conv_circular`]: `x(u) = Σ_j taps[j] · y(u + offset + j)`.
pub fn conv_adjoint<T: Scalar>(y: &Signal<T>, taps: &Signal<T>, offset: &[i64]) -> Signal<T> {
    let shape = y.shape();
    let d = shape.len();
    let y_strides = strides_of(shape);
    let mut x = Signal::<T>::zeros(shape);
    let mut u = vec![0usize; d];
    let mut out_pos = 0usize;
    loop {
        let mut acc = T::zero();
        let mut j = vec![0usize; d];
        loop {
            let mut dst = vec![0usize; d];
            for a in 0..d {
                dst[a] = wrap(u[a] as i64 + offset[a] + j[a] as i64, shape[a]);
            }
            acc += taps.at(&j) * y.data()[linear_index(&dst, &y_strides)];
            if !next_index(&mut j, taps.shape()) {
                break;
            }
        }
        x.data_mut()[out_pos] = acc;
        out_pos += 1;
        if !next_index(&mut u, shape) {
            break;
        }
    }
    x
}

/// Keeps every `factor`-th sample per axis, starting at phase 0.
pub fn downsample<T: Scalar>(x: &Signal<T>, factors: &[usize]) -> Result<Signal<T>> {
    let shape = x.shape();
    let mut out_shape = Vec::with_capacity(shape.len());
    for (a, (&e, &f)) in shape.iter().zip(factors).enumerate() {
        if f == 0 || e % f != 0 {
            return Err(Error::Validation(format!(
                "axis {a}: cannot subsample extent {e} by {f}"
            )));
        }
        out_shape.push(e / f);
    }
    let mut y = Signal::<T>::zeros(&out_shape);
    let x_strides = strides_of(shape);
    let mut t = vec![0usize; shape.len()];
    let mut out_pos = 0usize;
    loop {
        let src: Vec<usize> = t.iter().zip(factors).map(|(&i, &f)| i * f).collect();
        y.data_mut()[out_pos] = x.data()[linear_index(&src, &x_strides)];
        out_pos += 1;
        if !next_index(&mut t, &out_shape) {
            break;
        }
    }
    Ok(y)
}

/// Adjoint of [`downsample`]: places samples at phase 0 and zero-fills.
pub fn upsample_zero<T: Scalar>(y: &Signal<T>, factors: &[usize]) -> Signal<T> {
    let out_shape: Vec<usize> = y.shape().iter().zip(factors).map(|(&e, &f)| e * f).collect();
    let mut x = Signal::<T>::zeros(&out_shape);
    let x_strides = strides_of(&out_shape);
    let mut t = vec![0usize; y.shape().len()];
    let mut in_pos = 0usize;
    loop {
        let dst: Vec<usize> = t.iter().zip(factors).map(|(&i, &f)| i * f).collect();
        x.data_mut()[linear_index(&dst, &x_strides)] = y.data()[in_pos];
        in_pos += 1;
        if !next_index(&mut t, y.shape()) {
            break;
        }
    }
    x
}

/// Pointwise combination of already-nonlinearized member values.
fn combine<T: Scalar>(kind: &MergeKind, values: &[T]) -> T {
    match kind {
        MergeKind::Sum => pairwise_sum(values),
        MergeKind::Product => values.iter().fold(T::one(), |acc, &v| acc * v),
        MergeKind::PNorm(PExponent::Infinite) => {
            values.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
        }
        MergeKind::PNorm(PExponent::Finite(p)) => {
            let p = T::c(*p);
            let total = pairwise_sum(
                &values.iter().map(|&v| v.abs().powf(p)).collect::<Vec<_>>(),
            );
            total.powf(T::one() / p)
        }
    }
}

/// Applies a merge group to its members' signals (after their nonlinearities).
pub fn apply_merge<T: Scalar>(kind: &MergeKind, members: &[Signal<T>]) -> Result<Signal<T>> {
    let first = &members[0];
    for m in &members[1..] {
        if m.shape() != first.shape() {
            return Err(Error::Validation("merge members must share a shape".into()));
        }
    }
    let mut out = Signal::<T>::zeros(first.shape());
    let mut scratch = vec![T::zero(); members.len()];
    for i in 0..first.len() {
        for (s, m) in scratch.iter_mut().zip(members) {
            *s = m.data()[i];
        }
        out.data_mut()[i] = combine(kind, &scratch);
    }
    Ok(out)
}

/// The network's output: one pooled signal per feature node.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBundle<T> {
    pub entries: Vec<FeatureEntry<T>>,
}

/// A single pooled feature signal, tagged with its origin.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureEntry<T> {
    pub layer: usize,
    pub node: usize,
    pub signal: Signal<T>,
}

impl<T: Scalar> FeatureBundle<T> {
    /// Squared norm over all feature signals.
    pub fn norm_squared(&self) -> T {
        let parts: Vec<T> = self.entries.iter().map(|e| e.signal.norm_squared()).collect();
        pairwise_sum(&parts)
    }

    /// Norm over all feature signals.
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Total sample count across entries.
    pub fn dim(&self) -> usize {
        self.entries.iter().map(|e| e.signal.len()).sum()
    }

    /// Concatenates all entries into one flat vector (fixed feature order).
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dim());
        for e in &self.entries {
            out.extend_from_slice(e.signal.data());
        }
        out
    }

    /// Entry-wise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::Validation("feature bundles differ in entry count".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| {
                Ok(FeatureEntry {
                    layer: a.layer,
                    node: a.node,
                    signal: a.signal.sub(&b.signal)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(FeatureBundle { entries })
    }
}

/// Evaluates a discrete network, returning its pooled features.
///
/// Skip connections are evaluated directly from the tier cache; no
/// normalization is required (or performed).
pub fn forward<T: Scalar>(net: &NetworkSpec<T>, input: &Signal<T>) -> Result<FeatureBundle<T>> {
    if net.domain != Domain::Discrete {
        return Err(Error::Unsupported("forward evaluation needs a discrete network".into()));
    }
    net.validate()?;
    if input.shape() != net.input_shape.as_slice() {
        return Err(Error::Validation(format!(
            "input shape {:?} does not match the network's {:?}",
            input.shape(),
            net.input_shape
        )));
    }

    let mut tiers: Vec<Vec<Signal<T>>> = vec![vec![input.clone()]];
    let mut features = Vec::new();
    for (m, layer) in net.layers.iter().enumerate() {
        // Pooled features for this tier.
        for (n, pool) in layer.pooling.iter().enumerate() {
            if let Some(Filter::Taps { taps, offset }) = pool {
                features.push(FeatureEntry {
                    layer: m,
                    node: n,
                    signal: conv_circular(&tiers[m][n], taps, offset),
                });
            }
        }
        // Filter outputs, then merges.
        let mut outputs = Vec::with_capacity(layer.filters.len());
        for att in &layer.filters {
            let src = match att.source {
                SourceRef::Node(n) => &tiers[m][n],
                SourceRef::Tier { tier, node } => &tiers[tier][node],
            };
            let Filter::Taps { taps, offset } = &att.filter else {
                return Err(Error::Unsupported("profiles cannot be sampled".into()));
            };
            let full = conv_circular(src, taps, offset);
            let mut y = downsample(&full, att.dilation.axes()?)?;
            for v in y.data_mut() {
                *v = att.sigma.apply(*v);
            }
            outputs.push(y);
        }
        let mut next = Vec::with_capacity(layer.merges.len());
        for merge in &layer.merges {
            let members: Vec<Signal<T>> =
                merge.members.iter().map(|&k| outputs[k].clone()).collect();
            next.push(apply_merge(&merge.kind, &members)?);
        }
        tiers.push(next);
    }
    Ok(FeatureBundle { entries: features })
}

/// Empirical Lipschitz ratio `‖Φf − Φg‖ / ‖f − g‖`.
///
/// Errors if the inputs coincide (the ratio would be 0/0).
pub fn empirical_ratio<T: Scalar>(
    net: &NetworkSpec<T>,
    f: &Signal<T>,
    g: &Signal<T>,
) -> Result<T> {
    let diff = f.sub(g)?;
    let denom = diff.norm();
    if denom == T::zero() {
        return Err(Error::Validation(
            "empirical ratio is undefined for identical inputs".into(),
        ));
    }
    let pf = forward(net, f)?;
    let pg = forward(net, g)?;
    Ok(pf.sub(&pg)?.norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netspec::{
        max_pool_layer, normalize_skips, Dilation, FilterAttachment, LayerSpec, MergeSpec,
        Nonlinearity,
    };
    use crate::util::rng_from_seed;
    use crate::Real;
    use approx::assert_abs_diff_eq;

    fn sig(vals: &[f64]) -> Signal<Real> {
        Signal::from_vec(vec![vals.len()], vals.to_vec()).unwrap()
    }

    fn taps(vals: &[f64]) -> Filter<Real> {
        Filter::Taps {
            taps: Signal::from_vec(vec![vals.len()], vals.to_vec()).unwrap(),
            offset: vec![0],
        }
    }

    #[test]
    fn averaging_filter_matches_hand_convolution() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let g = Signal::from_vec(vec![2], vec![0.5, 0.5]).unwrap();
        let y = conv_circular(&x, &g, &[0]);
        assert_eq!(y.data(), &[2.5, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn negative_offset_looks_ahead() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let g = Signal::from_vec(vec![1], vec![1.0]).unwrap();
        let y = conv_circular(&x, &g, &[-1]);
        assert_eq!(y.data(), &[2.0, 3.0, 4.0, 1.0]);
    }

    #[test]
    fn two_dimensional_shift() {
        let x = Signal::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = Signal::from_vec(vec![1, 1], vec![1.0]).unwrap();
        let y = conv_circular(&x, &g, &[-1, 0]);
        assert_eq!(y.data(), &[3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn adjoint_is_the_transpose() {
        // <Ax, y> == <x, A*y> for random signals and an arbitrary stencil.
        let mut rng = rng_from_seed(11);
        let x = Signal::<Real>::gaussian(&[3, 4], &mut rng);
        let y = Signal::<Real>::gaussian(&[3, 4], &mut rng);
        let g = Signal::from_vec(vec![2, 3], vec![0.4, -1.2, 0.3, 2.0, 0.0, -0.7]).unwrap();
        let off = [-1, 2];
        let ax = conv_circular(&x, &g, &off);
        let aty = conv_adjoint(&y, &g, &off);
        let lhs: Real = ax.data().iter().zip(y.data()).map(|(&a, &b)| a * b).sum();
        let rhs: Real = x.data().iter().zip(aty.data()).map(|(&a, &b)| a * b).sum();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn downsample_keeps_phase_zero() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let y = downsample(&x, &[2]).unwrap();
        assert_eq!(y.data(), &[1.0, 3.0]);
        assert!(downsample(&sig(&[1.0, 2.0, 3.0]), &[2]).is_err());
    }

    #[test]
    fn upsample_is_the_downsample_adjoint() {
        let mut rng = rng_from_seed(5);
        let x = Signal::<Real>::gaussian(&[8], &mut rng);
        let y = Signal::<Real>::gaussian(&[4], &mut rng);
        let dx = downsample(&x, &[2]).unwrap();
        let uy = upsample_zero(&y, &[2]);
        let lhs: Real = dx.data().iter().zip(y.data()).map(|(&a, &b)| a * b).sum();
        let rhs: Real = x.data().iter().zip(uy.data()).map(|(&a, &b)| a * b).sum();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn pnorm_merge_is_a_pointwise_norm() {
        // Filters scale by 3 and 4; the 2-norm merge gives 5|x|.
        let net = NetworkSpec {
            input_shape: vec![1],
            domain: Domain::Discrete,
            layers: vec![
                LayerSpec {
                    pooling: vec![None],
                    feature_taps: vec![false],
                    filters: vec![
                        FilterAttachment {
                            filter: taps(&[3.0]),
                            source: SourceRef::Node(0),
                            dilation: Dilation::identity(1),
                            sigma: Nonlinearity::Identity,
                        },
                        FilterAttachment {
                            filter: taps(&[4.0]),
                            source: SourceRef::Node(0),
                            dilation: Dilation::identity(1),
                            sigma: Nonlinearity::Identity,
                        },
                    ],
                    merges: vec![MergeSpec {
                        members: vec![0, 1],
                        kind: MergeKind::PNorm(PExponent::Finite(2.0)),
                    }],
                },
                LayerSpec {
                    pooling: vec![Some(taps(&[1.0]))],
                    feature_taps: vec![true],
                    filters: vec![],
                    merges: vec![],
                },
            ],
        };
        let out = forward(&net, &sig(&[1.0])).unwrap();
        assert_abs_diff_eq!(out.entries[0].signal.data()[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn product_merge_multiplies_clipped_values() {
        let net = NetworkSpec {
            input_shape: vec![1],
            domain: Domain::Discrete,
            layers: vec![
                LayerSpec {
                    pooling: vec![None],
                    feature_taps: vec![false],
                    filters: vec![
                        FilterAttachment {
                            filter: taps(&[2.0]),
                            source: SourceRef::Node(0),
                            dilation: Dilation::identity(1),
                            sigma: Nonlinearity::ClippedSigmoid,
                        },
                        FilterAttachment {
                            filter: taps(&[3.0]),
                            source: SourceRef::Node(0),
                            dilation: Dilation::identity(1),
                            sigma: Nonlinearity::ClippedSigmoid,
                        },
                    ],
                    merges: vec![MergeSpec { members: vec![0, 1], kind: MergeKind::Product }],
                },
                LayerSpec {
                    pooling: vec![Some(taps(&[1.0]))],
                    feature_taps: vec![true],
                    filters: vec![],
                    merges: vec![],
                },
            ],
        };
        // Saturated: both branches clip to 1.
        let out = forward(&net, &sig(&[1.0])).unwrap();
        assert_abs_diff_eq!(out.entries[0].signal.data()[0], 1.0, epsilon = 1e-12);
        // Linear region: 0.4 * 0.6.
        let out = forward(&net, &sig(&[0.2])).unwrap();
        assert_abs_diff_eq!(out.entries[0].signal.data()[0], 0.24, epsilon = 1e-12);
    }

    #[test]
    fn max_pool_merge_reproduces_windowed_maxima() {
        let net = NetworkSpec {
            input_shape: vec![8],
            domain: Domain::Discrete,
            layers: vec![
                max_pool_layer(&[2], &[2]).unwrap(),
                LayerSpec {
                    pooling: vec![Some(taps(&[1.0]))],
                    feature_taps: vec![true],
                    filters: vec![],
                    merges: vec![],
                },
            ],
        };
        let x = sig(&[1.0, 3.0, 4.0, 2.0, 1.0, 5.0, 6.0, 7.0]);
        let out = forward(&net, &x).unwrap();
        assert_eq!(out.entries[0].signal.data(), &[3.0, 4.0, 5.0, 7.0]);
    }

    #[test]
    fn normalized_skips_evaluate_bitwise_identically() {
        let net = NetworkSpec {
            input_shape: vec![8],
            domain: Domain::Discrete,
            layers: vec![
                LayerSpec {
                    pooling: vec![Some(taps(&[0.5, 0.5]))],
                    feature_taps: vec![true],
                    filters: vec![FilterAttachment {
                        filter: taps(&[1.0, -1.0]),
                        source: SourceRef::Node(0),
                        dilation: Dilation::Axes(vec![2]),
                        sigma: Nonlinearity::Relu,
                    }],
                    merges: vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
                },
                LayerSpec {
                    pooling: vec![None],
                    feature_taps: vec![false],
                    filters: vec![
                        FilterAttachment {
                            filter: taps(&[0.7, 0.1]),
                            source: SourceRef::Node(0),
                            dilation: Dilation::Axes(vec![2]),
                            sigma: Nonlinearity::Abs,
                        },
                        FilterAttachment {
                            filter: taps(&[0.3]),
                            source: SourceRef::Tier { tier: 0, node: 0 },
                            dilation: Dilation::Axes(vec![4]),
                            sigma: Nonlinearity::Identity,
                        },
                    ],
                    merges: vec![MergeSpec { members: vec![0, 1], kind: MergeKind::Sum }],
                },
                LayerSpec {
                    pooling: vec![Some(taps(&[1.0]))],
                    feature_taps: vec![true],
                    filters: vec![],
                    merges: vec![],
                },
            ],
        };
        let normalized = normalize_skips(&net).unwrap();
        assert_ne!(net, normalized);
        let mut rng = rng_from_seed(42);
        for _ in 0..5 {
            let x = Signal::<Real>::gaussian(&[8], &mut rng);
            let a = forward(&net, &x).unwrap();
            let b = forward(&normalized, &x).unwrap();
            assert_eq!(a, b, "skip rewrite must preserve outputs exactly");
        }
    }

    #[test]
    fn empirical_ratio_rejects_identical_inputs() {
        let net = NetworkSpec {
            input_shape: vec![4],
            domain: Domain::Discrete,
            layers: vec![LayerSpec {
                pooling: vec![Some(taps(&[1.0]))],
                feature_taps: vec![true],
                filters: vec![],
                merges: vec![],
            }],
        };
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        assert!(empirical_ratio(&net, &x, &x).is_err());
        let y = sig(&[1.0, 2.0, 3.0, 5.0]);
        // Identity-pooled single layer: the ratio is exactly 1.
        assert_abs_diff_eq!(empirical_ratio(&net, &x, &y).unwrap(), 1.0, epsilon = 1e-12);
    }
}
