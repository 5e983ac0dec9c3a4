//! Network graph model: layers, filters, merges, and validation.
//!
//! A network is a sequence of layers acting on *tiers* of nodes. Tier 0 is the
//! single network input; layer `m` reads tier `m` and produces tier `m + 1`,
//! one node per merge group. Each layer may attach a low-pass pooling filter
//! to any of its input nodes; pooled signals are emitted as output features
//! ("feature taps"). Convolution filters each read one input node (possibly
//! from an earlier tier — a skip connection), are followed by a pointwise
//! nonlinearity, and are combined in merge groups by summation, p-norms, or
//! products. The final layer only pools: it declares no filters or merges.

mod maxpool;
mod normalize;
mod parse;

pub use maxpool::max_pool_layer;
pub use normalize::normalize_skips;
pub(crate) use parse::{filter_from_value, signal_from_value};
pub use parse::{
    network_to_json, parse_network, parse_network_file, read_signal_file, write_signal_file,
    SIGNAL_MAGIC,
};

use crate::profile::Profile;
use crate::signal::Signal;
use crate::{Error, Result, Scalar};

/// Sample domain of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Finite circular grids; filters are tap stencils.
    Discrete,
    /// The real line (one-dimensional); filters are closed-form power profiles.
    Continuous,
}

/// A linear filter: either a tap stencil or a closed-form power profile.
#[derive(Clone, Debug, PartialEq)]
pub enum Filter<T> {
    /// Finite stencil on a circular grid. `offset` shifts the stencil so that
    /// tap `j` sits at grid position `(offset + j) mod extent` per axis;
    /// negative offsets give acausal (look-ahead) filters.
    Taps { taps: Signal<T>, offset: Vec<i64> },
    /// Squared-modulus frequency response (continuous domain only).
    Profile(Profile),
}

impl<T: Scalar> Filter<T> {
    /// Unit pass-through filter for the given domain and dimension.
    pub fn identity(domain: Domain, ndim: usize) -> Self {
        match domain {
            Domain::Discrete => Filter::Taps {
                taps: Signal::from_vec(vec![1; ndim], vec![T::one()]).expect("unit stencil"),
                offset: vec![0; ndim],
            },
            Domain::Continuous => Filter::Profile(Profile::Const { value: 1.0 }),
        }
    }
}

/// Piecewise-linear nonlinearity given by knots; constant outside the knot range.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseTable {
    /// Strictly increasing knot abscissas (at least two).
    pub x: Vec<f64>,
    /// Knot ordinates.
    pub y: Vec<f64>,
}

impl PiecewiseTable {
    /// Largest absolute segment slope.
    pub fn max_slope(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 1..self.x.len() {
            let s = ((self.y[i] - self.y[i - 1]) / (self.x[i] - self.x[i - 1])).abs();
            best = best.max(s);
        }
        best
    }

    /// Largest absolute value attained (the table is clamped outside its knots).
    pub fn sup_abs(&self) -> f64 {
        self.y.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    fn check(&self) -> Result<()> {
        if self.x.len() < 2 || self.x.len() != self.y.len() {
            return Err(Error::Validation(
                "piecewise table needs at least two knots with matching ordinates".into(),
            ));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::Validation("piecewise table knots must be finite".into()));
        }
        if self.x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation(
                "piecewise table abscissas must be strictly increasing".into(),
            ));
        }
        if self.max_slope() > 1.0 + 1e-12 {
            return Err(Error::Validation(format!(
                "piecewise table has slope {} > 1; nonlinearities must be 1-Lipschitz",
                self.max_slope()
            )));
        }
        Ok(())
    }

    /// Evaluates the table at `v` (clamped continuation outside the knots).
    pub fn eval(&self, v: f64) -> f64 {
        let n = self.x.len();
        if v <= self.x[0] {
            return self.y[0];
        }
        if v >= self.x[n - 1] {
            return self.y[n - 1];
        }
        // partition_point finds the first knot strictly above v; the segment
        // to its left contains v.
        let hi = self.x.partition_point(|&k| k <= v);
        let (x0, x1) = (self.x[hi - 1], self.x[hi]);
        let (y0, y1) = (self.y[hi - 1], self.y[hi]);
        y0 + (y1 - y0) * (v - x0) / (x1 - x0)
    }

    /// Slope of the segment containing `v` (right-continuous at knots, zero
    /// outside the knot range).
    pub fn slope_at(&self, v: f64) -> f64 {
        let n = self.x.len();
        if v < self.x[0] || v >= self.x[n - 1] {
            return 0.0;
        }
        let hi = self.x.partition_point(|&k| k <= v);
        let hi = hi.max(1).min(n - 1);
        (self.y[hi] - self.y[hi - 1]) / (self.x[hi] - self.x[hi - 1])
    }
}

/// Pointwise nonlinearity applied to a filter output before merging.
///
/// All variants are 1-Lipschitz and piecewise linear, so the whole network is
/// piecewise linear and admits exact local linearization.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    Identity,
    Relu,
    Abs,
    /// Hard saturation `clamp(x, -1, 1)`; bounded by 1, so it is admissible
    /// inside product merges.
    ClippedSigmoid,
    /// User-supplied piecewise-linear table (must be 1-Lipschitz).
    CustomTable(PiecewiseTable),
}

impl Nonlinearity {
    /// Applies the nonlinearity.
    pub fn apply<T: Scalar>(&self, v: T) -> T {
        match self {
            Nonlinearity::Identity => v,
            Nonlinearity::Relu => {
                if v > T::zero() {
                    v
                } else {
                    T::zero()
                }
            }
            Nonlinearity::Abs => v.abs(),
            Nonlinearity::ClippedSigmoid => {
                let one = T::one();
                if v > one {
                    one
                } else if v < -one {
                    -one
                } else {
                    v
                }
            }
            Nonlinearity::CustomTable(t) => T::c(t.eval(v.to_f64().unwrap())),
        }
    }

    /// Slope of the active linear segment at `v` (right-continuous at breaks).
    pub fn slope_at<T: Scalar>(&self, v: T) -> T {
        match self {
            Nonlinearity::Identity => T::one(),
            Nonlinearity::Relu => {
                if v > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Nonlinearity::Abs => {
                if v < T::zero() {
                    -T::one()
                } else {
                    T::one()
                }
            }
            Nonlinearity::ClippedSigmoid => {
                if v >= T::one() || v < -T::one() {
                    T::zero()
                } else {
                    T::one()
                }
            }
            Nonlinearity::CustomTable(t) => T::c(t.slope_at(v.to_f64().unwrap())),
        }
    }

    /// Discrete label of the segment containing `v`, used to compare
    /// activation patterns between two inputs.
    pub fn segment_of<T: Scalar>(&self, v: T) -> i32 {
        match self {
            Nonlinearity::Identity => 0,
            Nonlinearity::Relu => (v > T::zero()) as i32,
            Nonlinearity::Abs => (v >= T::zero()) as i32,
            Nonlinearity::ClippedSigmoid => {
                if v < -T::one() {
                    -1
                } else if v >= T::one() {
                    1
                } else {
                    0
                }
            }
            Nonlinearity::CustomTable(t) => {
                let x = v.to_f64().unwrap();
                t.x.partition_point(|&k| k <= x) as i32
            }
        }
    }

    /// Supremum of `|σ|`, or `None` when unbounded.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Nonlinearity::Identity | Nonlinearity::Relu | Nonlinearity::Abs => None,
            Nonlinearity::ClippedSigmoid => Some(1.0),
            Nonlinearity::CustomTable(t) => Some(t.sup_abs()),
        }
    }
}

/// Exponent of a p-norm merge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PExponent {
    Finite(f64),
    Infinite,
}

/// How a merge group combines its members' nonlinear outputs.
#[derive(Clone, Debug, PartialEq)]
pub enum MergeKind {
    /// `Σ_k σ_k(y_k)`.
    Sum,
    /// `(Σ_k |σ_k(y_k)|^p)^{1/p}`, or `max_k |σ_k(y_k)|` for `p = ∞`.
    PNorm(PExponent),
    /// `Π_k σ_k(y_k)`; members must have `sup |σ| ≤ 1`.
    Product,
}

/// Energy multiplier `l` of a merge group with `K` members.
///
/// Sums and products contribute `K`; p-norms contribute
/// `K^{max(0, 2/p - 1)}` (so 1 for `p ≥ 2`, including `p = ∞`).
pub fn merge_multiplier(kind: &MergeKind, members: usize) -> f64 {
    let k = members as f64;
    match kind {
        MergeKind::Sum | MergeKind::Product => k,
        MergeKind::PNorm(PExponent::Finite(p)) => k.powf((2.0 / p - 1.0).max(0.0)),
        MergeKind::PNorm(PExponent::Infinite) => 1.0,
    }
}

/// Where a filter reads its input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceRef {
    /// Node of the layer's own input tier.
    Node(usize),
    /// Node of an earlier tier (skip connection). `tier` 0 is the network
    /// input; `tier` equal to the layer index is the same as `Node`.
    Tier { tier: usize, node: usize },
}

/// Sampling-lattice change applied after a convolution.
#[derive(Clone, Debug, PartialEq)]
pub enum Dilation {
    /// Per-axis integer subsampling factors (keeps every `s`-th sample,
    /// phase 0). Identity when all factors are 1.
    Axes(Vec<usize>),
    /// Invertible matrix lattice change (continuous domain only).
    Matrix(Vec<Vec<f64>>),
}

impl Dilation {
    /// Identity dilation in `ndim` dimensions.
    pub fn identity(ndim: usize) -> Self {
        Dilation::Axes(vec![1; ndim])
    }

    /// True when the dilation leaves the lattice unchanged.
    pub fn is_identity(&self) -> bool {
        match self {
            Dilation::Axes(s) => s.iter().all(|&v| v == 1),
            Dilation::Matrix(m) => {
                m.iter().enumerate().all(|(i, row)| {
                    row.iter().enumerate().all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 })
                })
            }
        }
    }

    /// Absolute determinant of the lattice matrix.
    pub fn det_abs(&self) -> f64 {
        match self {
            Dilation::Axes(s) => s.iter().map(|&v| v as f64).product(),
            Dilation::Matrix(m) => {
                // Gaussian elimination with partial pivoting on a copy.
                let n = m.len();
                let mut a: Vec<Vec<f64>> = m.clone();
                let mut det = 1.0f64;
                for col in 0..n {
                    let piv = (col..n)
                        .max_by(|&i, &j| {
                            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite")
                        })
                        .unwrap();
                    if a[piv][col] == 0.0 {
                        return 0.0;
                    }
                    if piv != col {
                        a.swap(piv, col);
                        det = -det;
                    }
                    det *= a[col][col];
                    for row in col + 1..n {
                        let f = a[row][col] / a[col][col];
                        for k in col..n {
                            a[row][k] -= f * a[col][k];
                        }
                    }
                }
                det.abs()
            }
        }
    }

    /// Per-axis factors, or an error for matrix dilations.
    pub fn axes(&self) -> Result<&[usize]> {
        match self {
            Dilation::Axes(s) => Ok(s),
            Dilation::Matrix(_) => {
                Err(Error::Unsupported("matrix dilation has no per-axis factors".into()))
            }
        }
    }
}

/// A convolution filter attached to a layer.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterAttachment<T> {
    pub filter: Filter<T>,
    pub source: SourceRef,
    pub dilation: Dilation,
    pub sigma: Nonlinearity,
}

/// A merge group: which filters it combines and how.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeSpec {
    /// Indices into the layer's filter list; the groups of a layer partition it.
    pub members: Vec<usize>,
    pub kind: MergeKind,
}

/// One layer: optional pooling per input node, filters, and merge groups.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec<T> {
    /// Pooling filter per input node (`None` = node emits no feature here).
    pub pooling: Vec<Option<Filter<T>>>,
    /// Which input nodes emit features; must mirror `pooling` presence.
    pub feature_taps: Vec<bool>,
    pub filters: Vec<FilterAttachment<T>>,
    pub merges: Vec<MergeSpec>,
}

/// A complete network specification.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec<T> {
    /// Extents of the input grid (discrete); for continuous networks only the
    /// dimension count (which must be 1) is meaningful.
    pub input_shape: Vec<usize>,
    pub domain: Domain,
    pub layers: Vec<LayerSpec<T>>,
}

/// Shape bookkeeping produced by validation.
#[derive(Clone, Debug)]
pub struct NetworkShapes {
    /// Node count of every tier `0..=M` (tier `M` is the empty output tier of
    /// the final, pooling-only layer).
    pub tier_widths: Vec<usize>,
    /// Per-tier, per-node grid extents. Empty for continuous networks.
    pub tier_shapes: Vec<Vec<Vec<usize>>>,
}

/// Output extents of a strided convolution on a circular grid.
fn conv_output_shape(input: &[usize], dilation: &Dilation) -> Result<Vec<usize>> {
    match dilation {
        Dilation::Axes(s) => {
            if s.len() != input.len() {
                return Err(Error::Validation(format!(
                    "dilation has {} axes but the grid has {}",
                    s.len(),
                    input.len()
                )));
            }
            let mut out = Vec::with_capacity(input.len());
            for (a, (&e, &f)) in input.iter().zip(s).enumerate() {
                if f == 0 {
                    return Err(Error::Validation("dilation factors must be positive".into()));
                }
                if e % f != 0 {
                    return Err(Error::Validation(format!(
                        "axis {a}: extent {e} is not divisible by dilation factor {f}"
                    )));
                }
                out.push(e / f);
            }
            Ok(out)
        }
        Dilation::Matrix(_) => {
            Err(Error::Unsupported("matrix dilations are continuous-domain only".into()))
        }
    }
}

impl<T: Scalar> NetworkSpec<T> {
    /// Number of layers.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Dimension of the sample domain.
    pub fn ndim(&self) -> usize {
        self.input_shape.len()
    }

    /// `(layer, node)` pairs that emit features, in layer-major order — the
    /// fixed order used by every feature vector in the crate.
    pub fn feature_nodes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (m, layer) in self.layers.iter().enumerate() {
            for (n, tapped) in layer.feature_taps.iter().enumerate() {
                if *tapped {
                    out.push((m, n));
                }
            }
        }
        out
    }

    /// Checks every structural invariant and returns tier bookkeeping.
    ///
    /// The rules, in brief: tier widths must chain (layer `m` reads as many
    /// nodes as layer `m-1` merged, with a single input node at tier 0); merge
    /// groups partition the filter list and combine equal output shapes;
    /// product members need bounded nonlinearities; filters must match the
    /// domain (taps ↔ discrete, profiles ↔ continuous); discrete dilation
    /// factors must divide the extents of the node they subsample; the final
    /// layer only pools; every node must be pooled or read by some filter; and
    /// feature taps must mirror pooling presence.
    pub fn validate(&self) -> Result<NetworkShapes> {
        let m_total = self.layers.len();
        let d = self.input_shape.len();
        if m_total == 0 {
            return Err(Error::Validation("network must have at least one layer".into()));
        }
        if d == 0 {
            return Err(Error::Validation("input shape must have at least one axis".into()));
        }
        match self.domain {
            Domain::Discrete => {
                if self.input_shape.iter().any(|&e| e == 0) {
                    return Err(Error::Validation("input extents must be positive".into()));
                }
            }
            Domain::Continuous => {
                if d != 1 {
                    return Err(Error::Unsupported(
                        "continuous-domain networks are one-dimensional".into(),
                    ));
                }
            }
        }

        let discrete = self.domain == Domain::Discrete;
        let mut tier_widths = vec![1usize];
        let mut tier_shapes: Vec<Vec<Vec<usize>>> = Vec::new();
        if discrete {
            tier_shapes.push(vec![self.input_shape.clone()]);
        }
        // Usage marks for the "no dead nodes" rule, per tier.
        let mut used: Vec<Vec<bool>> = vec![vec![false]];

        for (m, layer) in self.layers.iter().enumerate() {
            let width = tier_widths[m];
            let last = m == m_total - 1;
            if width == 0 {
                return Err(Error::Validation(format!("layer {m} has no input nodes")));
            }
            if layer.pooling.len() != width {
                return Err(Error::Validation(format!(
                    "layer {m}: pooling list has {} entries for {} nodes",
                    layer.pooling.len(),
                    width
                )));
            }
            if layer.feature_taps.len() != width {
                return Err(Error::Validation(format!(
                    "layer {m}: feature_taps has {} entries for {} nodes",
                    layer.feature_taps.len(),
                    width
                )));
            }
            for (n, (pool, &tapped)) in layer.pooling.iter().zip(&layer.feature_taps).enumerate() {
                if pool.is_some() != tapped {
                    return Err(Error::Validation(format!(
                        "layer {m} node {n}: feature_taps must mirror pooling presence"
                    )));
                }
                if let Some(f) = pool {
                    self.check_filter_kind(f, m, n, "pooling")?;
                    used[m][n] = true;
                }
            }
            if last && (!layer.filters.is_empty() || !layer.merges.is_empty()) {
                return Err(Error::Validation(
                    "the final layer only pools: it must not declare filters or merges".into(),
                ));
            }
            if !last && layer.merges.is_empty() {
                return Err(Error::Validation(format!(
                    "layer {m}: intermediate layers need at least one merge group"
                )));
            }

            // Filters: domain kind, source addressing, dilation arithmetic.
            let mut filter_shapes: Vec<Vec<usize>> = Vec::new();
            for (k, att) in layer.filters.iter().enumerate() {
                self.check_filter_kind(&att.filter, m, k, "filter")?;
                let (src_tier, src_node) = match att.source {
                    SourceRef::Node(n) => (m, n),
                    SourceRef::Tier { tier, node } => {
                        if tier > m {
                            return Err(Error::Validation(format!(
                                "layer {m} filter {k}: source tier {tier} is in the future"
                            )));
                        }
                        (tier, node)
                    }
                };
                if src_node >= tier_widths[src_tier] {
                    return Err(Error::Validation(format!(
                        "layer {m} filter {k}: source node {src_node} out of range for tier \
                         {src_tier} ({} nodes)",
                        tier_widths[src_tier]
                    )));
                }
                used[src_tier][src_node] = true;
                match (&att.dilation, self.domain) {
                    (Dilation::Matrix(mat), Domain::Continuous) => {
                        if mat.len() != d || mat.iter().any(|r| r.len() != d) {
                            return Err(Error::Validation(format!(
                                "layer {m} filter {k}: dilation matrix must be {d}x{d}"
                            )));
                        }
                        if att.dilation.det_abs() <= 0.0 {
                            return Err(Error::Validation(format!(
                                "layer {m} filter {k}: dilation matrix must be invertible"
                            )));
                        }
                    }
                    (Dilation::Matrix(_), Domain::Discrete) => {
                        return Err(Error::Unsupported(format!(
                            "layer {m} filter {k}: matrix dilations are continuous-domain only"
                        )));
                    }
                    (Dilation::Axes(s), _) => {
                        if s.len() != d {
                            return Err(Error::Validation(format!(
                                "layer {m} filter {k}: dilation has {} axes, expected {d}",
                                s.len()
                            )));
                        }
                        if s.iter().any(|&v| v == 0) {
                            return Err(Error::Validation(format!(
                                "layer {m} filter {k}: dilation factors must be positive"
                            )));
                        }
                    }
                }
                if let Nonlinearity::CustomTable(t) = &att.sigma {
                    t.check().map_err(|e| {
                        Error::Validation(format!("layer {m} filter {k}: {e}"))
                    })?;
                }
                if discrete {
                    let in_shape = tier_shapes[src_tier][src_node].clone();
                    let out = conv_output_shape(&in_shape, &att.dilation).map_err(|e| {
                        Error::Validation(format!("layer {m} filter {k}: {e}"))
                    })?;
                    filter_shapes.push(out);
                }
            }

            // Merges: partition check, shape agreement, product boundedness.
            let mut seen = vec![false; layer.filters.len()];
            for (g, merge) in layer.merges.iter().enumerate() {
                if merge.members.is_empty() {
                    return Err(Error::Validation(format!("layer {m} merge {g} is empty")));
                }
                for &k in &merge.members {
                    if k >= layer.filters.len() {
                        return Err(Error::Validation(format!(
                            "layer {m} merge {g}: member {k} out of range"
                        )));
                    }
                    if seen[k] {
                        return Err(Error::Validation(format!(
                            "layer {m}: filter {k} appears in more than one merge group"
                        )));
                    }
                    seen[k] = true;
                }
                if discrete {
                    let first = &filter_shapes[merge.members[0]];
                    for &k in &merge.members[1..] {
                        if &filter_shapes[k] != first {
                            return Err(Error::Validation(format!(
                                "layer {m} merge {g}: members have different output shapes \
                                 ({:?} vs {:?})",
                                first, filter_shapes[k]
                            )));
                        }
                    }
                }
                match &merge.kind {
                    MergeKind::PNorm(PExponent::Finite(p)) => {
                        if !p.is_finite() || *p < 1.0 {
                            return Err(Error::Validation(format!(
                                "layer {m} merge {g}: p-norm exponent must be >= 1, got {p}"
                            )));
                        }
                    }
                    MergeKind::Product => {
                        for &k in &merge.members {
                            match layer.filters[k].sigma.sup_bound() {
                                Some(s) if s <= 1.0 + 1e-9 => {}
                                _ => {
                                    return Err(Error::Validation(format!(
                                        "layer {m} merge {g}: product members need a \
                                         nonlinearity bounded by 1 (filter {k} is not)"
                                    )));
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
            if let Some(k) = seen.iter().position(|&s| !s) {
                return Err(Error::Validation(format!(
                    "layer {m}: filter {k} belongs to no merge group"
                )));
            }

            // Extend the tier tables with this layer's outputs.
            let next_width = layer.merges.len();
            tier_widths.push(next_width);
            used.push(vec![false; next_width]);
            if discrete {
                let shapes = layer
                    .merges
                    .iter()
                    .map(|merge| filter_shapes[merge.members[0]].clone())
                    .collect();
                tier_shapes.push(shapes);
            }
        }

        for (t, marks) in used.iter().enumerate().take(m_total) {
            if let Some(n) = marks.iter().position(|&u| !u) {
                return Err(Error::Validation(format!(
                    "tier {t} node {n} is neither pooled nor read by any filter"
                )));
            }
        }
        if !self.feature_nodes().iter().any(|_| true) {
            return Err(Error::Validation("network emits no features".into()));
        }

        Ok(NetworkShapes { tier_widths, tier_shapes })
    }

    fn check_filter_kind(&self, f: &Filter<T>, m: usize, n: usize, what: &str) -> Result<()> {
        match (f, self.domain) {
            (Filter::Taps { taps, offset }, Domain::Discrete) => {
                if taps.shape().len() != self.ndim() || offset.len() != self.ndim() {
                    return Err(Error::Validation(format!(
                        "layer {m} {what} {n}: stencil dimensionality must match the input"
                    )));
                }
                Ok(())
            }
            (Filter::Profile(p), Domain::Continuous) => {
                if !p.is_valid() {
                    return Err(Error::Validation(format!(
                        "layer {m} {what} {n}: invalid profile parameters"
                    )));
                }
                Ok(())
            }
            (Filter::Taps { .. }, Domain::Continuous) => Err(Error::Validation(format!(
                "layer {m} {what} {n}: continuous-domain networks use profiles, not taps"
            ))),
            (Filter::Profile(_), Domain::Discrete) => Err(Error::Validation(format!(
                "layer {m} {what} {n}: discrete-domain networks use taps, not profiles"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(ndim: usize) -> Filter<f64> {
        Filter::identity(Domain::Discrete, ndim)
    }

    fn plain(filter: Filter<f64>, source: usize) -> FilterAttachment<f64> {
        FilterAttachment {
            filter,
            source: SourceRef::Node(source),
            dilation: Dilation::identity(1),
            sigma: Nonlinearity::Identity,
        }
    }

    /// input -> [delta conv] -> pooled output layer.
    fn tiny_net() -> NetworkSpec<f64> {
        NetworkSpec {
            input_shape: vec![8],
            domain: Domain::Discrete,
            layers: vec![
                LayerSpec {
                    pooling: vec![Some(delta(1))],
                    feature_taps: vec![true],
                    filters: vec![plain(delta(1), 0)],
                    merges: vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
                },
                LayerSpec {
                    pooling: vec![Some(delta(1))],
                    feature_taps: vec![true],
                    filters: vec![],
                    merges: vec![],
                },
            ],
        }
    }

    #[test]
    fn tiny_net_validates() {
        let shapes = tiny_net().validate().unwrap();
        assert_eq!(shapes.tier_widths, vec![1, 1, 0]);
        assert_eq!(shapes.tier_shapes[1], vec![vec![8]]);
    }

    #[test]
    fn merge_partition_is_enforced() {
        let mut net = tiny_net();
        net.layers[0].merges[0].members = vec![0, 0];
        assert!(net.validate().is_err());
        let mut net = tiny_net();
        net.layers[0].merges.clear();
        assert!(net.validate().is_err());
    }

    #[test]
    fn feature_taps_must_mirror_pooling() {
        let mut net = tiny_net();
        net.layers[0].feature_taps[0] = false;
        assert!(net.validate().is_err());
        let mut net = tiny_net();
        net.layers[0].pooling[0] = None;
        assert!(net.validate().is_err());
    }

    #[test]
    fn dilation_must_divide_extents() {
        let mut net = tiny_net();
        net.layers[0].filters[0].dilation = Dilation::Axes(vec![3]);
        assert!(net.validate().is_err());
        let mut net = tiny_net();
        net.layers[0].filters[0].dilation = Dilation::Axes(vec![2]);
        // 8 / 2 = 4: fine.
        net.validate().unwrap();
    }

    #[test]
    fn product_members_need_bounded_sigma() {
        let mut net = tiny_net();
        net.layers[0].filters.push(plain(delta(1), 0));
        net.layers[0].merges = vec![MergeSpec { members: vec![0, 1], kind: MergeKind::Product }];
        assert!(net.validate().is_err(), "identity is unbounded");
        net.layers[0].filters[0].sigma = Nonlinearity::ClippedSigmoid;
        net.layers[0].filters[1].sigma = Nonlinearity::ClippedSigmoid;
        net.validate().unwrap();
    }

    #[test]
    fn final_layer_must_be_pooling_only() {
        let mut net = tiny_net();
        net.layers[1].filters.push(plain(delta(1), 0));
        net.layers[1].merges.push(MergeSpec { members: vec![0], kind: MergeKind::Sum });
        assert!(net.validate().is_err());
    }

    #[test]
    fn dead_nodes_are_rejected() {
        let mut net = tiny_net();
        // Second filter creates a second output node nobody consumes... but the
        // final layer pools both, so instead drop the pooling of node 1 there.
        net.layers[0].filters.push(plain(delta(1), 0));
        net.layers[0].merges.push(MergeSpec { members: vec![1], kind: MergeKind::Sum });
        net.layers[1].pooling = vec![Some(delta(1)), None];
        net.layers[1].feature_taps = vec![true, false];
        assert!(net.validate().is_err());
    }

    #[test]
    fn multiplier_table() {
        assert_eq!(merge_multiplier(&MergeKind::Sum, 4), 4.0);
        assert_eq!(merge_multiplier(&MergeKind::Product, 3), 3.0);
        assert_eq!(merge_multiplier(&MergeKind::PNorm(PExponent::Infinite), 5), 1.0);
        assert_eq!(merge_multiplier(&MergeKind::PNorm(PExponent::Finite(2.0)), 5), 1.0);
        // p = 1 behaves like a sum.
        assert_eq!(merge_multiplier(&MergeKind::PNorm(PExponent::Finite(1.0)), 4), 4.0);
        // p between 1 and 2 interpolates.
        let l = merge_multiplier(&MergeKind::PNorm(PExponent::Finite(1.5)), 9);
        assert!((l - 9.0f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn piecewise_table_eval_and_slopes() {
        let t = PiecewiseTable { x: vec![-1.0, 0.0, 1.0], y: vec![0.5, 0.0, 0.5] };
        t.check().unwrap();
        assert_eq!(t.eval(-2.0), 0.5);
        assert_eq!(t.eval(2.0), 0.5);
        assert_eq!(t.eval(0.5), 0.25);
        assert_eq!(t.slope_at(0.5), 0.5);
        assert_eq!(t.slope_at(-0.5), -0.5);
        assert_eq!(t.slope_at(5.0), 0.0);
        let steep = PiecewiseTable { x: vec![0.0, 1.0], y: vec![0.0, 2.0] };
        assert!(steep.check().is_err(), "slope 2 is not 1-Lipschitz");
    }
}
