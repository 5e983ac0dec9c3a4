//! Random network generation for stress and fuzz tests.
//!
//! [`random_network`] draws a structurally valid discrete network from a
//! configurable family: layer depth, node widths, merge kinds, stencil
//! sizes, strides, and skip connections are all sampled within the caps
//! of [`FuzzOptions`]. Every draw satisfies [`NetworkSpec::validate`] by
//! construction — merge members always agree on output shapes, product
//! members always get bounded nonlinearities, and nodes nothing reads are
//! force-pooled so no tier has dead ends.
//!
//! The presets mirror the test families used across the crate: the
//! default covers the full feature set, [`FuzzOptions::piecewise_linear`]
//! restricts merges to sums and max-norms so exact linearization applies,
//! and [`FuzzOptions::stationary`] drops strides so circular stationarity
//! is preserved layer to layer.

use rand::Rng;

use crate::netspec::{
    Dilation, Domain, Filter, FilterAttachment, LayerSpec, MergeKind, MergeSpec, NetworkSpec,
    Nonlinearity, PExponent, PiecewiseTable, SourceRef,
};
use crate::signal::Signal;
use crate::util::rng_stream;
use crate::Scalar;

/// Caps and switches of the random-network family.
#[derive(Clone, Debug)]
pub struct FuzzOptions {
    /// Fixed input grid; `None` draws one per network.
    pub input_shape: Option<Vec<usize>>,
    /// Fewest layers per draw, counting the final pooling-only layer.
    pub min_layers: usize,
    /// Most layers per draw, counting the final pooling-only layer.
    pub max_layers: usize,
    /// Most merge groups (output nodes) per processing layer.
    pub max_nodes: usize,
    /// Most filters per merge group.
    pub max_members: usize,
    /// Largest stencil extent per axis.
    pub max_taps: usize,
    /// Largest drawn grid extent per axis (ignored with a fixed shape).
    pub max_extent: usize,
    /// Largest drawn dimensionality (1 or 2; ignored with a fixed shape).
    pub max_ndim: usize,
    /// Allow subsampling dilations.
    pub strides: bool,
    /// Allow skip connections into earlier tiers.
    pub skips: bool,
    /// Restrict merges to sums and max-norms (no smooth merges).
    pub piecewise_linear: bool,
    /// Root-mean-square magnitude of each drawn stencil.
    pub tap_scale: f64,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        FuzzOptions {
            input_shape: None,
            min_layers: 2,
            max_layers: 4,
            max_nodes: 3,
            max_members: 3,
            max_taps: 4,
            max_extent: 32,
            max_ndim: 2,
            strides: true,
            skips: true,
            piecewise_linear: false,
            tap_scale: 1.0,
        }
    }
}

impl FuzzOptions {
    /// Family restricted to piecewise-linear merges (sums and max-norms),
    /// so [`crate::local::linearize`] accepts every draw.
    pub fn piecewise_linear() -> Self {
        FuzzOptions { piecewise_linear: true, ..FuzzOptions::default() }
    }

    /// Family without subsampling, so every draw preserves circular
    /// stationarity and passes the resampling-free checks.
    pub fn stationary() -> Self {
        FuzzOptions { strides: false, ..FuzzOptions::default() }
    }

    /// Same family on a fixed input grid.
    pub fn with_shape(mut self, shape: Vec<usize>) -> Self {
        self.input_shape = Some(shape);
        self
    }

    /// Same family with exactly `layers` layers per draw.
    pub fn with_layers(mut self, layers: usize) -> Self {
        self.min_layers = layers;
        self.max_layers = layers;
        self
    }
}

/// Hat-shaped bounded table: 1-Lipschitz with `sup |σ| = 1/2`, so it is
/// admissible everywhere, including inside product merges.
fn soft_hat() -> Nonlinearity {
    Nonlinearity::CustomTable(PiecewiseTable {
        x: vec![-1.0, 0.0, 1.0],
        y: vec![0.5, 0.0, 0.5],
    })
}

fn random_sigma<R: Rng + ?Sized>(bounded_only: bool, rng: &mut R) -> Nonlinearity {
    if bounded_only {
        return if rng.gen_bool(0.7) { Nonlinearity::ClippedSigmoid } else { soft_hat() };
    }
    match rng.gen_range(0..20u32) {
        0..=4 => Nonlinearity::Identity,
        5..=10 => Nonlinearity::Relu,
        11..=15 => Nonlinearity::Abs,
        16..=18 => Nonlinearity::ClippedSigmoid,
        _ => soft_hat(),
    }
}

fn random_merge_kind<R: Rng + ?Sized>(piecewise_linear: bool, rng: &mut R) -> MergeKind {
    if piecewise_linear {
        return if rng.gen_bool(0.65) {
            MergeKind::Sum
        } else {
            MergeKind::PNorm(PExponent::Infinite)
        };
    }
    match rng.gen_range(0..100u32) {
        0..=39 => MergeKind::Sum,
        40..=59 => MergeKind::PNorm(PExponent::Infinite),
        60..=79 => {
            let ps = [1.0, 1.5, 2.0, 3.0];
            MergeKind::PNorm(PExponent::Finite(ps[rng.gen_range(0..ps.len())]))
        }
        _ => MergeKind::Product,
    }
}

/// Random stencil on a grid: extents capped per axis, Gaussian taps with
/// root-mean-square `scale`, offsets in `[-2, 2]`.
fn random_taps<T: Scalar, R: Rng + ?Sized>(
    grid: &[usize],
    max_taps: usize,
    scale: f64,
    rng: &mut R,
) -> Filter<T> {
    let extents: Vec<usize> =
        grid.iter().map(|&e| rng.gen_range(1..=max_taps.min(e).max(1))).collect();
    let count: usize = extents.iter().product();
    let sd = scale / (count as f64).sqrt();
    let data: Vec<T> = (0..count).map(|_| T::standard_normal(rng) * T::c(sd)).collect();
    let offset: Vec<i64> = extents.iter().map(|_| rng.gen_range(-2i64..=2)).collect();
    Filter::Taps { taps: Signal::from_vec(extents, data).expect("extents match data"), offset }
}

fn random_pool<T: Scalar, R: Rng + ?Sized>(grid: &[usize], rng: &mut R) -> Filter<T> {
    if rng.gen_bool(0.3) {
        Filter::identity(Domain::Discrete, grid.len())
    } else {
        random_taps(grid, 3, 1.0, rng)
    }
}

fn draw_shape<R: Rng + ?Sized>(opts: &FuzzOptions, rng: &mut R) -> Vec<usize> {
    if let Some(shape) = &opts.input_shape {
        return shape.clone();
    }
    let ndim = rng.gen_range(1..=opts.max_ndim.max(1));
    // Divisor-rich extents keep stride choices open; two-dimensional grids
    // stay small so direct-form evaluation stays cheap.
    let palette: &[usize] =
        if ndim == 1 { &[4, 6, 8, 12, 16, 24, 32] } else { &[4, 6, 8] };
    let allowed: Vec<usize> =
        palette.iter().copied().filter(|&e| e <= opts.max_extent).collect();
    (0..ndim)
        .map(|_| {
            if allowed.is_empty() {
                opts.max_extent.max(2)
            } else {
                allowed[rng.gen_range(0..allowed.len())]
            }
        })
        .collect()
}

/// Draws one valid discrete network from the family.
pub fn random_network<T: Scalar, R: Rng + ?Sized>(
    opts: &FuzzOptions,
    rng: &mut R,
) -> NetworkSpec<T> {
    let input_shape = draw_shape(opts, rng);
    let d = input_shape.len();
    let total_layers = rng.gen_range(opts.min_layers.max(1)..=opts.max_layers.max(1));

    // Per tier, per node: grid extents.
    let mut tiers: Vec<Vec<Vec<usize>>> = vec![vec![input_shape.clone()]];
    let mut layers = Vec::with_capacity(total_layers);

    for m in 0..total_layers - 1 {
        let in_shapes = tiers[m].clone();
        let width = in_shapes.len();
        let out_nodes = rng.gen_range(1..=opts.max_nodes.max(1));

        let mut filters: Vec<FilterAttachment<T>> = Vec::new();
        let mut merges = Vec::with_capacity(out_nodes);
        let mut next_shapes = Vec::with_capacity(out_nodes);
        for _ in 0..out_nodes {
            let kind = random_merge_kind(opts.piecewise_linear, rng);
            let members = rng.gen_range(1..=opts.max_members.max(1));
            // The group's anchor source fixes the common output shape.
            let base_idx = rng.gen_range(0..width);
            let base_shape = in_shapes[base_idx].clone();
            let stride: Vec<usize> = base_shape
                .iter()
                .map(|&e| {
                    if !opts.strides {
                        return 1;
                    }
                    let mut choices = vec![1usize];
                    for f in [2usize, 3] {
                        if e % f == 0 && e / f >= 2 {
                            choices.push(f);
                        }
                    }
                    if choices.len() > 1 && rng.gen_bool(0.4) {
                        choices[rng.gen_range(1..choices.len())]
                    } else {
                        1
                    }
                })
                .collect();
            let target: Vec<usize> =
                base_shape.iter().zip(&stride).map(|(&e, &s)| e / s).collect();

            let mut member_ids = Vec::with_capacity(members);
            for _ in 0..members {
                // Either a skip into any reachable node whose grid divides
                // down to the target, or a sibling read of an equal-shape
                // node on the layer's own tier.
                let mut choice: Option<(SourceRef, Vec<usize>)> = None;
                if opts.skips && rng.gen_bool(0.25) {
                    let mut cands = Vec::new();
                    for (t, tier) in tiers.iter().enumerate() {
                        for (n, s) in tier.iter().enumerate() {
                            let mut factors = Vec::with_capacity(d);
                            let mut ok = true;
                            for a in 0..d {
                                if s[a] % target[a] != 0 {
                                    ok = false;
                                    break;
                                }
                                let f = s[a] / target[a];
                                if f > 4 || (!opts.strides && f != 1) {
                                    ok = false;
                                    break;
                                }
                                factors.push(f);
                            }
                            if ok {
                                cands.push((t, n, factors));
                            }
                        }
                    }
                    if !cands.is_empty() {
                        let (t, n, factors) = cands[rng.gen_range(0..cands.len())].clone();
                        let source = if t == m {
                            SourceRef::Node(n)
                        } else {
                            SourceRef::Tier { tier: t, node: n }
                        };
                        choice = Some((source, factors));
                    }
                }
                let (source, factors) = choice.unwrap_or_else(|| {
                    let same: Vec<usize> = in_shapes
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| **s == base_shape)
                        .map(|(i, _)| i)
                        .collect();
                    let idx = same[rng.gen_range(0..same.len())];
                    (SourceRef::Node(idx), stride.clone())
                });
                let src_shape: Vec<usize> =
                    target.iter().zip(&factors).map(|(&t, &f)| t * f).collect();
                member_ids.push(filters.len());
                filters.push(FilterAttachment {
                    filter: random_taps(&src_shape, opts.max_taps, opts.tap_scale, rng),
                    source,
                    dilation: Dilation::Axes(factors),
                    sigma: random_sigma(matches!(kind, MergeKind::Product), rng),
                });
            }
            merges.push(MergeSpec { members: member_ids, kind });
            next_shapes.push(target);
        }

        // Pool every node the layer's own filters leave unread; pooled
        // nodes also show up with some probability on read nodes so
        // mid-network features are common.
        let mut read = vec![false; width];
        for att in &filters {
            if let SourceRef::Node(n) = att.source {
                read[n] = true;
            }
        }
        let mut pooling = Vec::with_capacity(width);
        let mut feature_taps = Vec::with_capacity(width);
        for (n, read_here) in read.iter().enumerate() {
            let pooled = !read_here || rng.gen_bool(0.35);
            pooling.push(pooled.then(|| random_pool(&in_shapes[n], rng)));
            feature_taps.push(pooled);
        }

        layers.push(LayerSpec { pooling, feature_taps, filters, merges });
        tiers.push(next_shapes);
    }

    // Final layer: pooling only, every surviving node becomes a feature.
    let last = tiers.last().expect("tier zero always exists");
    layers.push(LayerSpec {
        pooling: last.iter().map(|s| Some(random_pool(s, rng))).collect(),
        feature_taps: vec![true; last.len()],
        filters: vec![],
        merges: vec![],
    });

    let net = NetworkSpec { input_shape, domain: Domain::Discrete, layers };
    debug_assert!(net.validate().is_ok(), "generator must produce valid networks");
    net
}

/// Draws `count` networks on independent, reproducible RNG streams of
/// `seed` (draw `i` always reads stream `i`).
pub fn random_networks<T: Scalar>(
    opts: &FuzzOptions,
    count: usize,
    seed: u64,
) -> Vec<NetworkSpec<T>> {
    (0..count).map(|i| random_network(opts, &mut rng_stream(seed, i as u64))).collect()
}
