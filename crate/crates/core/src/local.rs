//! Exact local linearization of piecewise-linear networks.
//!
//! Every stock nonlinearity is piecewise linear, so a discrete network
//! whose merges are sums or max-norms is piecewise linear end to end: the
//! input space splits into convex polytopes on which the input-to-features
//! map is exactly affine. Freezing each nonlinearity to the slope of its
//! active segment and each max-norm merge to its winning member therefore
//! yields the *exact* Jacobian at the base point, not an approximation.
//! [`LinearizedOperator`] applies that Jacobian and its transpose
//! matrix-free, which feeds the power iteration in [`sigma_max`].
//!
//! Because the affine pieces live on convex sets, two inputs with equal
//! [`ActivationPattern`] are connected by a segment on which the network
//! is one affine map. Along a ray this makes the pattern flip monotone,
//! so [`region_radius`] can bisect for the boundary, and difference
//! quotients below that radius reproduce linearized norms to machine
//! precision. [`adversarial_search`] instead bisects for the nearest
//! *decision* flip of a linear read-out, whose crossings need a coarse
//! scan first since decisions may flip back and forth.
//!
//! Smooth merges (products, finite-p norms) have no linear pieces;
//! everything here rejects them with an unsupported-feature error.

use crate::forward::{
    apply_merge, conv_adjoint, conv_circular, downsample, forward, upsample_zero, FeatureBundle,
    FeatureEntry,
};
use crate::netspec::{
    normalize_skips, Domain, Filter, MergeKind, NetworkSpec, PExponent, SourceRef,
};
use crate::power::operator_norm_squared;
use crate::signal::Signal;
use crate::util::rng_stream;
use crate::{Error, Result, Scalar};
use serde::{Deserialize, Serialize};

/// Tolerances and budget for the matrix-free spectral estimate.
#[derive(Clone, Debug)]
pub struct LocalOptions {
    /// Relative Rayleigh-quotient tolerance of the power iteration.
    pub tol: f64,
    /// Power-iteration budget per run.
    pub max_iter: usize,
    /// Seed for start vectors and sampled base points.
    pub seed: u64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions { tol: 1e-12, max_iter: 10_000, seed: 0x10ca1 }
    }
}

/// Rejects networks whose merges are not piecewise linear.
fn ensure_piecewise_linear<T: Scalar>(net: &NetworkSpec<T>) -> Result<()> {
    if net.domain != Domain::Discrete {
        return Err(Error::Unsupported(
            "local linearization needs a discrete network".into(),
        ));
    }
    for (m, layer) in net.layers.iter().enumerate() {
        for merge in &layer.merges {
            match merge.kind {
                MergeKind::Sum | MergeKind::PNorm(PExponent::Infinite) => {}
                MergeKind::PNorm(PExponent::Finite(_)) => {
                    return Err(Error::Unsupported(format!(
                        "layer {m}: finite-p norm merges are smooth, not piecewise linear"
                    )));
                }
                MergeKind::Product => {
                    return Err(Error::Unsupported(format!(
                        "layer {m}: product merges are smooth, not piecewise linear"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn own_tier_node(src: &SourceRef) -> usize {
    match src {
        SourceRef::Node(n) => *n,
        // normalize_skips has rewritten every tier reference.
        SourceRef::Tier { .. } => unreachable!("operator is built on a skip-normalized network"),
    }
}

/// Frozen max-norm merge: per sample, which member won and with what sign.
#[derive(Clone, Debug)]
struct Selector<T> {
    choice: Vec<usize>,
    sign: Vec<T>,
}

/// The exact Jacobian of a piecewise-linear network at a base input,
/// applied matrix-free in both directions.
#[derive(Clone, Debug)]
pub struct LinearizedOperator<T> {
    net: NetworkSpec<T>,
    tier_shapes: Vec<Vec<Vec<usize>>>,
    /// Per layer, per filter: slope of the active segment on the filter's
    /// output grid.
    slopes: Vec<Vec<Signal<T>>>,
    /// Per layer, per merge: `Some` for max-norm merges.
    selectors: Vec<Vec<Option<Selector<T>>>>,
    base_features: FeatureBundle<T>,
    input_dim: usize,
    output_dim: usize,
}

/// Builds the Jacobian of `net` at `base`.
///
/// Skip connections are normalized away internally; the operator maps
/// input perturbations to perturbations of the stacked feature vector in
/// the network's fixed feature order.
pub fn linearize<T: Scalar>(
    net: &NetworkSpec<T>,
    base: &Signal<T>,
) -> Result<LinearizedOperator<T>> {
    ensure_piecewise_linear(net)?;
    let net = normalize_skips(net)?;
    if base.shape() != net.input_shape.as_slice() {
        return Err(Error::Validation(format!(
            "base input shape {:?} does not match the network's {:?}",
            base.shape(),
            net.input_shape
        )));
    }

    let mut tiers: Vec<Vec<Signal<T>>> = vec![vec![base.clone()]];
    let mut slopes = Vec::with_capacity(net.layers.len());
    let mut selectors = Vec::with_capacity(net.layers.len());
    let mut features = Vec::new();
    for (m, layer) in net.layers.iter().enumerate() {
        for (n, pool) in layer.pooling.iter().enumerate() {
            if let Some(Filter::Taps { taps, offset }) = pool {
                features.push(FeatureEntry {
                    layer: m,
                    node: n,
                    signal: conv_circular(&tiers[m][n], taps, offset),
                });
            }
        }
        let mut layer_slopes = Vec::with_capacity(layer.filters.len());
        let mut outputs = Vec::with_capacity(layer.filters.len());
        for att in &layer.filters {
            let src = own_tier_node(&att.source);
            let Filter::Taps { taps, offset } = &att.filter else {
                return Err(Error::Unsupported("profiles cannot be sampled".into()));
            };
            let pre = downsample(&conv_circular(&tiers[m][src], taps, offset), att.dilation.axes()?)?;
            let mut slope = Signal::<T>::zeros(pre.shape());
            let mut post = Signal::<T>::zeros(pre.shape());
            for i in 0..pre.len() {
                let v = pre.data()[i];
                slope.data_mut()[i] = att.sigma.slope_at(v);
                post.data_mut()[i] = att.sigma.apply(v);
            }
            layer_slopes.push(slope);
            outputs.push(post);
        }
        let mut layer_selectors = Vec::with_capacity(layer.merges.len());
        let mut next = Vec::with_capacity(layer.merges.len());
        for merge in &layer.merges {
            match merge.kind {
                MergeKind::Sum => {
                    let members: Vec<Signal<T>> =
                        merge.members.iter().map(|&k| outputs[k].clone()).collect();
                    next.push(apply_merge(&merge.kind, &members)?);
                    layer_selectors.push(None);
                }
                MergeKind::PNorm(PExponent::Infinite) => {
                    let first = &outputs[merge.members[0]];
                    let len = first.len();
                    let mut choice = vec![0usize; len];
                    let mut sign = vec![T::one(); len];
                    let mut out = Signal::<T>::zeros(first.shape());
                    for i in 0..len {
                        let mut best_p = 0usize;
                        let mut best_v = outputs[merge.members[0]].data()[i];
                        for (p, &k) in merge.members.iter().enumerate().skip(1) {
                            let v = outputs[k].data()[i];
                            if v.abs() > best_v.abs() {
                                best_p = p;
                                best_v = v;
                            }
                        }
                        choice[i] = best_p;
                        sign[i] = if best_v < T::zero() { -T::one() } else { T::one() };
                        out.data_mut()[i] = best_v.abs();
                    }
                    next.push(out);
                    layer_selectors.push(Some(Selector { choice, sign }));
                }
                _ => unreachable!("smooth merges were rejected above"),
            }
        }
        slopes.push(layer_slopes);
        selectors.push(layer_selectors);
        tiers.push(next);
    }

    let tier_shapes = tiers
        .iter()
        .map(|tier| tier.iter().map(|s| s.shape().to_vec()).collect())
        .collect();
    let base_features = FeatureBundle { entries: features };
    let input_dim = base.len();
    let output_dim = base_features.dim();
    Ok(LinearizedOperator {
        net,
        tier_shapes,
        slopes,
        selectors,
        base_features,
        input_dim,
        output_dim,
    })
}

impl<T: Scalar> LinearizedOperator<T> {
    /// Input sample count.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Stacked feature sample count.
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Shape expected of input perturbations.
    pub fn input_shape(&self) -> &[usize] {
        &self.net.input_shape
    }

    /// Features of the base point the operator was linearized at.
    pub fn base_features(&self) -> &FeatureBundle<T> {
        &self.base_features
    }

    /// Applies the Jacobian to an input perturbation.
    pub fn apply(&self, u: &Signal<T>) -> Result<FeatureBundle<T>> {
        if u.shape() != self.net.input_shape.as_slice() {
            return Err(Error::Validation("perturbation shape mismatch".into()));
        }
        let mut tiers: Vec<Vec<Signal<T>>> = vec![vec![u.clone()]];
        let mut features = Vec::new();
        for (m, layer) in self.net.layers.iter().enumerate() {
            for (n, pool) in layer.pooling.iter().enumerate() {
                if let Some(Filter::Taps { taps, offset }) = pool {
                    features.push(FeatureEntry {
                        layer: m,
                        node: n,
                        signal: conv_circular(&tiers[m][n], taps, offset),
                    });
                }
            }
            let mut outputs = Vec::with_capacity(layer.filters.len());
            for (k, att) in layer.filters.iter().enumerate() {
                let src = own_tier_node(&att.source);
                let Filter::Taps { taps, offset } = &att.filter else {
                    unreachable!("construction rejected profile filters");
                };
                let mut y =
                    downsample(&conv_circular(&tiers[m][src], taps, offset), att.dilation.axes()?)?;
                for (v, &s) in y.data_mut().iter_mut().zip(self.slopes[m][k].data()) {
                    *v *= s;
                }
                outputs.push(y);
            }
            let mut next = Vec::with_capacity(layer.merges.len());
            for (j, merge) in layer.merges.iter().enumerate() {
                match &self.selectors[m][j] {
                    None => {
                        let members: Vec<Signal<T>> =
                            merge.members.iter().map(|&k| outputs[k].clone()).collect();
                        next.push(apply_merge(&MergeKind::Sum, &members)?);
                    }
                    Some(sel) => {
                        let mut out =
                            Signal::<T>::zeros(outputs[merge.members[0]].shape());
                        for i in 0..out.len() {
                            let k = merge.members[sel.choice[i]];
                            out.data_mut()[i] = sel.sign[i] * outputs[k].data()[i];
                        }
                        next.push(out);
                    }
                }
            }
            tiers.push(next);
        }
        Ok(FeatureBundle { entries: features })
    }

    /// Applies the transposed Jacobian to a stacked feature perturbation.
    pub fn apply_adjoint(&self, y: &[T]) -> Result<Signal<T>> {
        if y.len() != self.output_dim {
            return Err(Error::Validation("feature gradient length mismatch".into()));
        }
        let mut grads: Vec<Vec<Signal<T>>> = self
            .tier_shapes
            .iter()
            .map(|tier| tier.iter().map(|s| Signal::<T>::zeros(s)).collect())
            .collect();

        // Feature gradients route back through the pooling convolutions.
        let mut cursor = 0usize;
        for entry in &self.base_features.entries {
            let len = entry.signal.len();
            let g = Signal::from_vec(
                entry.signal.shape().to_vec(),
                y[cursor..cursor + len].to_vec(),
            )?;
            cursor += len;
            let Some(Filter::Taps { taps, offset }) =
                &self.net.layers[entry.layer].pooling[entry.node]
            else {
                unreachable!("feature entries always come from tap pooling");
            };
            let back = conv_adjoint(&g, taps, offset);
            accumulate(&mut grads[entry.layer][entry.node], &back);
        }

        // Hidden gradients flow backward layer by layer.
        for (m, layer) in self.net.layers.iter().enumerate().rev() {
            for (j, merge) in layer.merges.iter().enumerate() {
                let gout = grads[m + 1][j].clone();
                for (p, &k) in merge.members.iter().enumerate() {
                    let att = &layer.filters[k];
                    let mut gm = match &self.selectors[m][j] {
                        None => gout.clone(),
                        Some(sel) => {
                            let mut masked = Signal::<T>::zeros(gout.shape());
                            for i in 0..gout.len() {
                                if sel.choice[i] == p {
                                    masked.data_mut()[i] = sel.sign[i] * gout.data()[i];
                                }
                            }
                            masked
                        }
                    };
                    for (v, &s) in gm.data_mut().iter_mut().zip(self.slopes[m][k].data()) {
                        *v *= s;
                    }
                    let up = upsample_zero(&gm, att.dilation.axes()?);
                    let Filter::Taps { taps, offset } = &att.filter else {
                        unreachable!("construction rejected profile filters");
                    };
                    let back = conv_adjoint(&up, taps, offset);
                    accumulate(&mut grads[m][own_tier_node(&att.source)], &back);
                }
            }
        }
        Ok(grads.swap_remove(0).swap_remove(0))
    }

    /// Jacobian applied to a flat input vector.
    pub fn apply_flat(&self, x: &[T]) -> Vec<T> {
        let u = Signal::from_vec(self.net.input_shape.clone(), x.to_vec())
            .expect("flat input has the operator's input dimension");
        self.apply(&u).expect("shapes were fixed at construction").flatten()
    }

    /// Transposed Jacobian applied to a flat feature vector.
    pub fn adjoint_flat(&self, y: &[T]) -> Vec<T> {
        self.apply_adjoint(y)
            .expect("shapes were fixed at construction")
            .into_data()
    }

    /// Materializes the Jacobian row-major as `output_dim × input_dim`,
    /// one column per input basis vector. Meant for tests and small nets.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::zero(); self.input_dim]; self.output_dim];
        let mut e = vec![T::zero(); self.input_dim];
        for j in 0..self.input_dim {
            e[j] = T::one();
            let col = self.apply_flat(&e);
            e[j] = T::zero();
            for (row, v) in dense.iter_mut().zip(col) {
                row[j] = v;
            }
        }
        dense
    }
}

fn accumulate<T: Scalar>(dst: &mut Signal<T>, src: &Signal<T>) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

/// Largest-singular-value estimate of a linearized operator.
#[derive(Clone, Debug)]
pub struct SigmaMax<T> {
    /// Estimated largest singular value (approached from below).
    pub sigma: T,
    /// Unit input direction realizing the estimate.
    pub direction: Signal<T>,
    /// Power-iteration count.
    pub iterations: usize,
    /// Whether the tolerance was met.
    pub converged: bool,
}

/// Estimates the operator norm (largest singular value) of the Jacobian
/// by power iteration on `JᵀJ`.
pub fn sigma_max<T: Scalar>(
    op: &LinearizedOperator<T>,
    opts: &LocalOptions,
) -> Result<SigmaMax<T>> {
    let r = operator_norm_squared(
        op.input_dim(),
        |x| op.apply_flat(x),
        |y| op.adjoint_flat(y),
        T::c(opts.tol),
        opts.max_iter,
        opts.seed,
    )?;
    Ok(SigmaMax {
        sigma: r.value.sqrt(),
        direction: Signal::from_vec(op.input_shape().to_vec(), r.vector)?,
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// Discrete signature of which affine piece of the network an input
/// activates: one segment label per nonlinearity sample and one signed
/// winner per max-norm merge sample. Equal patterns imply the two inputs
/// live in one convex region where the network is a single affine map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivationPattern {
    /// Per layer, per filter, per sample: active segment label.
    segments: Vec<Vec<Vec<i32>>>,
    /// Per layer, per merge, per sample: `2·winner + (sign bit)`; empty
    /// for sum merges.
    choices: Vec<Vec<Vec<usize>>>,
}

/// Computes the activation pattern of `x`. Skip connections are read
/// straight from the tier cache; no normalization is performed.
pub fn activation_pattern<T: Scalar>(
    net: &NetworkSpec<T>,
    x: &Signal<T>,
) -> Result<ActivationPattern> {
    ensure_piecewise_linear(net)?;
    net.validate()?;
    if x.shape() != net.input_shape.as_slice() {
        return Err(Error::Validation("input shape mismatch".into()));
    }
    let mut tiers: Vec<Vec<Signal<T>>> = vec![vec![x.clone()]];
    let mut segments = Vec::with_capacity(net.layers.len());
    let mut choices = Vec::with_capacity(net.layers.len());
    for (m, layer) in net.layers.iter().enumerate() {
        let mut layer_segments = Vec::with_capacity(layer.filters.len());
        let mut outputs = Vec::with_capacity(layer.filters.len());
        for att in &layer.filters {
            let src = match att.source {
                SourceRef::Node(n) => &tiers[m][n],
                SourceRef::Tier { tier, node } => &tiers[tier][node],
            };
            let Filter::Taps { taps, offset } = &att.filter else {
                return Err(Error::Unsupported("profiles cannot be sampled".into()));
            };
            let pre = downsample(&conv_circular(src, taps, offset), att.dilation.axes()?)?;
            layer_segments.push(pre.data().iter().map(|&v| att.sigma.segment_of(v)).collect());
            let mut post = pre;
            for v in post.data_mut() {
                *v = att.sigma.apply(*v);
            }
            outputs.push(post);
        }
        let mut layer_choices = Vec::with_capacity(layer.merges.len());
        let mut next = Vec::with_capacity(layer.merges.len());
        for merge in &layer.merges {
            match merge.kind {
                MergeKind::Sum => {
                    let members: Vec<Signal<T>> =
                        merge.members.iter().map(|&k| outputs[k].clone()).collect();
                    next.push(apply_merge(&merge.kind, &members)?);
                    layer_choices.push(Vec::new());
                }
                MergeKind::PNorm(PExponent::Infinite) => {
                    let first = &outputs[merge.members[0]];
                    let mut tags = Vec::with_capacity(first.len());
                    let mut out = Signal::<T>::zeros(first.shape());
                    for i in 0..first.len() {
                        let mut best_p = 0usize;
                        let mut best_v = outputs[merge.members[0]].data()[i];
                        for (p, &k) in merge.members.iter().enumerate().skip(1) {
                            let v = outputs[k].data()[i];
                            if v.abs() > best_v.abs() {
                                best_p = p;
                                best_v = v;
                            }
                        }
                        tags.push(2 * best_p + usize::from(best_v < T::zero()));
                        out.data_mut()[i] = best_v.abs();
                    }
                    next.push(out);
                    layer_choices.push(tags);
                }
                _ => unreachable!("smooth merges were rejected above"),
            }
        }
        segments.push(layer_segments);
        choices.push(layer_choices);
        tiers.push(next);
    }
    Ok(ActivationPattern { segments, choices })
}

fn unit_direction<T: Scalar>(dir: &Signal<T>) -> Result<Signal<T>> {
    let n = dir.norm();
    if n == T::zero() {
        return Err(Error::Validation("direction must be nonzero".into()));
    }
    Ok(dir.scaled(T::one() / n))
}

/// Bracket around the boundary of the base point's affine region along a
/// ray: the pattern still matches at `inside` and differs at `outside`.
#[derive(Clone, Copy, Debug)]
pub struct RegionRadius<T> {
    pub inside: T,
    pub outside: T,
}

/// Distance (along the normalized direction) at which the activation
/// pattern first changes, bisected to `rel_tol · h_max`; `None` when the
/// whole segment `[0, h_max]` stays in the base region.
///
/// Pattern regions are convex, so the flip along a ray is monotone and a
/// single endpoint test decides whether any flip exists.
pub fn region_radius<T: Scalar>(
    net: &NetworkSpec<T>,
    base: &Signal<T>,
    dir: &Signal<T>,
    h_max: T,
    rel_tol: f64,
) -> Result<Option<RegionRadius<T>>> {
    if !(h_max > T::zero()) {
        return Err(Error::Validation("search radius must be positive".into()));
    }
    let u = unit_direction(dir)?;
    let base_pattern = activation_pattern(net, base)?;
    let pattern_at = |h: T| -> Result<ActivationPattern> {
        activation_pattern(net, &base.add(&u.scaled(h))?)
    };
    if pattern_at(h_max)? == base_pattern {
        return Ok(None);
    }
    let tol = T::c(rel_tol) * h_max;
    let (mut lo, mut hi) = (T::zero(), h_max);
    while hi - lo > tol {
        let mid = (lo + hi) / T::c(2.0);
        if pattern_at(mid)? == base_pattern {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(RegionRadius { inside: lo, outside: hi }))
}

/// Difference quotients `‖F(x + h·u) − F(x)‖ / h` along the normalized
/// direction `u`, one pair `(h, quotient)` per requested positive `h`.
///
/// Below the region radius of `x` along `u` the quotient equals the
/// linearized operator's norm along `u` exactly.
pub fn quotient_curve<T: Scalar>(
    net: &NetworkSpec<T>,
    base: &Signal<T>,
    dir: &Signal<T>,
    hs: &[T],
) -> Result<Vec<(T, T)>> {
    let u = unit_direction(dir)?;
    let f0 = forward(net, base)?;
    let mut out = Vec::with_capacity(hs.len());
    for &h in hs {
        if !(h > T::zero()) {
            return Err(Error::Validation("quotient steps must be positive".into()));
        }
        let fh = forward(net, &base.add(&u.scaled(h))?)?;
        out.push((h, fh.sub(&f0)?.norm() / h));
    }
    Ok(out)
}

/// Linear read-out over the stacked feature vector: `scores = W·f + b`,
/// class = index of the largest score (lowest index on ties).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearClassifier<T> {
    /// One weight row per class, each of the stacked feature dimension.
    pub weights: Vec<Vec<T>>,
    /// One bias per class.
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearClassifier<T> {
    /// Checks shape consistency against a feature dimension.
    pub fn validate(&self, feature_dim: usize) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Validation("classifier needs at least one class".into()));
        }
        if self.bias.len() != self.weights.len() {
            return Err(Error::Validation(format!(
                "classifier has {} weight rows but {} biases",
                self.weights.len(),
                self.bias.len()
            )));
        }
        for (c, row) in self.weights.iter().enumerate() {
            if row.len() != feature_dim {
                return Err(Error::Validation(format!(
                    "class {c}: weight row has {} entries, feature dimension is {feature_dim}",
                    row.len()
                )));
            }
        }
        let finite = self
            .weights
            .iter()
            .flatten()
            .chain(&self.bias)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("classifier coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Number of classes.
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    /// Raw class scores `W·f + b`.
    pub fn scores(&self, features: &[T]) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, &b)| {
                row.iter().zip(features).fold(b, |acc, (&w, &f)| acc + w * f)
            })
            .collect()
    }

    /// Predicted class: argmax of the scores, lowest index on ties.
    pub fn predict(&self, features: &[T]) -> usize {
        let scores = self.scores(features);
        let mut best = 0usize;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }

    /// Gaussian random read-out, useful as a generic probe.
    pub fn random<R: rand::Rng + ?Sized>(classes: usize, dim: usize, rng: &mut R) -> Self {
        let weights = (0..classes)
            .map(|_| (0..dim).map(|_| T::standard_normal(rng)).collect())
            .collect();
        LinearClassifier { weights, bias: vec![T::zero(); classes] }
    }
}

/// Parses a classifier from its JSON form
/// `{"weights": [[...], ...], "bias": [...]}`.
pub fn classifier_from_json<T>(json: &str) -> Result<LinearClassifier<T>>
where
    T: Scalar + serde::de::DeserializeOwned,
{
    let clf: LinearClassifier<T> = serde_json::from_str(json)?;
    if clf.weights.is_empty() {
        return Err(Error::Validation("classifier needs at least one class".into()));
    }
    let dim = clf.weights[0].len();
    clf.validate(dim)?;
    Ok(clf)
}

/// Outcome of a decision-flip search along one direction.
#[derive(Clone, Copy, Debug)]
pub struct FoolingResult<T> {
    /// Smallest found distance (along the unit direction) at which the
    /// predicted class changes.
    pub radius: T,
    /// Class predicted at the base point.
    pub base_class: usize,
    /// Class predicted just past the flip.
    pub new_class: usize,
}

/// Rungs of the coarse geometric scan preceding the bisection.
const FOOLING_LADDER: u32 = 20;
/// Bisection stops when the bracket shrinks below this fraction of `h_max`.
const FOOLING_REL_TOL: f64 = 1e-3;

/// Searches the ray `base + h·dir` (direction normalized internally) for
/// the smallest `h ≤ h_max` where the classifier's decision on the
/// network's features changes.
///
/// Decisions along a ray may flip and flip back, so a geometric ladder
/// `h_max·2⁻²⁰ … h_max` first locates the earliest flipped rung, then
/// bisection tightens that bracket to `10⁻³·h_max`. `None` means no rung
/// flipped.
pub fn adversarial_search<T: Scalar>(
    net: &NetworkSpec<T>,
    classifier: &LinearClassifier<T>,
    base: &Signal<T>,
    dir: &Signal<T>,
    h_max: T,
) -> Result<Option<FoolingResult<T>>> {
    if !(h_max > T::zero()) {
        return Err(Error::Validation("search radius must be positive".into()));
    }
    let u = unit_direction(dir)?;
    let features0 = forward(net, base)?.flatten();
    classifier.validate(features0.len())?;
    let base_class = classifier.predict(&features0);
    let class_at = |h: T| -> Result<usize> {
        let f = forward(net, &base.add(&u.scaled(h))?)?.flatten();
        Ok(classifier.predict(&f))
    };

    let mut bracket: Option<(T, T)> = None;
    let mut lo = T::zero();
    for k in (0..=FOOLING_LADDER).rev() {
        let h = h_max / T::c(f64::from(1u32 << k.min(31)));
        if class_at(h)? != base_class {
            bracket = Some((lo, h));
            break;
        }
        lo = h;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(None);
    };

    let tol = T::c(FOOLING_REL_TOL) * h_max;
    while hi - lo > tol {
        let mid = (lo + hi) / T::c(2.0);
        if class_at(mid)? == base_class {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(FoolingResult { radius: hi, base_class, new_class: class_at(hi)? }))
}

/// Best local estimate over sampled base points: each Jacobian norm lower-
/// bounds the network's true Lipschitz constant, so the maximum over
/// samples is a certified lower companion to the upper bound from
/// [`crate::bounds::certify`].
#[derive(Clone, Debug)]
pub struct GlobalFromLocal<T> {
    /// Largest sampled Jacobian norm.
    pub sigma: T,
    /// Base point attaining it.
    pub best_input: Signal<T>,
    /// All sampled norms, in draw order.
    pub per_sample: Vec<T>,
}

/// Maximizes [`sigma_max`] over `samples` Gaussian base points with the
/// given componentwise scale.
pub fn global_from_local<T: Scalar>(
    net: &NetworkSpec<T>,
    samples: usize,
    scale: T,
    opts: &LocalOptions,
) -> Result<GlobalFromLocal<T>> {
    if samples == 0 {
        return Err(Error::Validation("need at least one sample point".into()));
    }
    let mut best: Option<(T, Signal<T>)> = None;
    let mut per_sample = Vec::with_capacity(samples);
    for i in 0..samples {
        let mut rng = rng_stream(opts.seed, i as u64);
        let x = Signal::<T>::gaussian(&net.input_shape, &mut rng).scaled(scale);
        let op = linearize(net, &x)?;
        let s = sigma_max(&op, opts)?.sigma;
        per_sample.push(s);
        if best.as_ref().map_or(true, |(b, _)| s > *b) {
            best = Some((s, x));
        }
    }
    let (sigma, best_input) = best.expect("samples > 0");
    Ok(GlobalFromLocal { sigma, best_input, per_sample })
}
