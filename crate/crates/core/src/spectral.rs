//! Per-layer spectral energy bounds.
//!
//! For every layer `m` the crate computes a triple `(B¹, B², B³)` of squared
//! operator-norm bounds: `B¹` for the joint map onto hidden outputs *and*
//! pooled features, `B²` for the hidden outputs alone, and `B³` for the
//! features alone. They enter the certification linear program in
//! [`crate::bounds`].
//!
//! Three computation routes exist, chosen per layer:
//!
//! * **frequency, matrix form** — stride-1 discrete layers whose merges act
//!   linearly (singletons, or sums of identity-σ members): per DFT bin, the
//!   layer is a small complex matrix whose largest Hermitian eigenvalue is
//!   computed exactly (Jacobi). Tightest.
//! * **frequency, node form** — other stride-1 discrete layers and all
//!   continuous layers: each input node is bounded by the sup over frequency
//!   of `|φ̂|² + Σ_k l_k (det D_k)⁻¹ |ĝ_k|²`, where `l_k` is the merge-group
//!   energy multiplier. Sound for every merge kind.
//! * **operator** — discrete layers with subsampling: frequencies alias, so
//!   per-bin reasoning is unsound; instead the exact stage operator (with
//!   `√l_k`-weighted rows in node form) is handed to power iteration.
//!
//! In all cases the per-node/per-group structure is block-diagonal, so the
//! layer bound is the max over blocks, which the routes exploit.

use crate::fft::tap_spectrum;
use crate::netspec::{
    merge_multiplier, normalize_skips, Domain, Filter, LayerSpec, MergeKind, NetworkShapes,
    NetworkSpec, Nonlinearity, SourceRef,
};
use crate::power::operator_norm_squared;
use crate::profile::Profile;
use crate::signal::Signal;
use crate::{forward, Error, Result, Scalar};
use num_complex::Complex;

/// Squared-norm bound triple of one layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselTriple<T> {
    /// Joint bound: hidden outputs and pooled features together.
    pub b1: T,
    /// Hidden-path bound.
    pub b2: T,
    /// Feature-path bound.
    pub b3: T,
}

impl<T: Scalar> BesselTriple<T> {
    /// Conversion helper for reports.
    pub fn to_f64(&self) -> (f64, f64, f64) {
        (self.b1.to_f64().unwrap(), self.b2.to_f64().unwrap(), self.b3.to_f64().unwrap())
    }
}

/// Sampling grid for continuous-domain suprema.
///
/// All profiles are even in `ω`, so scanning `[0, band]` covers the line.
#[derive(Clone, Debug)]
pub struct FrequencyGrid {
    /// Right end of the scanned frequency interval.
    pub band: f64,
    /// Sample count per scan pass.
    pub samples: usize,
}

impl FrequencyGrid {
    /// Grid covering every profile support in the network, with margin.
    pub fn for_network<T: Scalar>(net: &NetworkSpec<T>) -> Self {
        let mut band: f64 = 1.0;
        let mut visit = |f: &Filter<T>| {
            if let Filter::Profile(p) = f {
                if let Some(b) = p.band_limit() {
                    band = band.max(b);
                }
            }
        };
        for layer in &net.layers {
            for p in layer.pooling.iter().flatten() {
                visit(p);
            }
            for att in &layer.filters {
                visit(&att.filter);
            }
        }
        FrequencyGrid { band: band + 0.5, samples: 1 << 14 }
    }
}

/// How a layer's triple was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundMethod {
    /// Exact per-bin / sampled-frequency evaluation.
    Frequency,
    /// Matrix-free power iteration on the stage operator.
    Operator,
}

/// Knobs for the spectral computation.
#[derive(Clone, Debug)]
pub struct SpectralOptions {
    /// Continuous-domain scan grid; `None` derives one from the network.
    pub grid: Option<FrequencyGrid>,
    /// Relative Rayleigh tolerance for power iteration.
    pub tol: f64,
    /// Power-iteration budget per run.
    pub max_iter: usize,
    /// Seed for power-iteration start vectors.
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { grid: None, tol: 1e-12, max_iter: 10_000, seed: 0x5eed }
    }
}

/// Triple of one layer, tagged with the method that produced it.
#[derive(Clone, Debug)]
pub struct LayerBound<T> {
    pub layer: usize,
    pub triple: BesselTriple<T>,
    pub method: BoundMethod,
}

/// Maximum of a scalar function over `[lo, hi]` by scan-and-zoom.
///
/// Three passes: a dense scan followed by two local rescans around the best
/// sample. Quadratic maxima of smooth functions are resolved to near machine
/// precision; plateaus are hit exactly by the first pass.
pub fn sup_scan(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    let samples = samples.max(8);
    let (mut a, mut b) = (lo, hi);
    let mut best = f64::NEG_INFINITY;
    for _pass in 0..3 {
        let mut best_x = a;
        for i in 0..=samples {
            let x = a + (b - a) * i as f64 / samples as f64;
            let v = f(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let h = (b - a) / samples as f64;
        a = (best_x - 2.0 * h).max(lo);
        b = (best_x + 2.0 * h).min(hi);
    }
    best
}

/// Largest eigenvalue of a Hermitian matrix (lower-triangle-agnostic; the
/// full matrix is given row-major) via cyclic Jacobi rotations.
///
/// Intended for the small per-bin matrices of the matrix-form route; fully
/// deterministic and accurate to machine precision.
pub fn hermitian_lambda_max(h: &[Vec<Complex<f64>>]) -> f64 {
    let n = h.len();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return h[0][0].re;
    }
    if n == 2 {
        let (a, c) = (h[0][0].re, h[1][1].re);
        let half = 0.5 * (a - c);
        return 0.5 * (a + c) + (half * half + h[0][1].norm_sqr()).sqrt();
    }
    let mut a: Vec<Vec<Complex<f64>>> = h.to_vec();
    let frob: f64 = a.iter().flatten().map(|v| v.norm_sqr()).sum();
    let stop = frob * 1e-30 + f64::MIN_POSITIVE;
    for _sweep in 0..40 {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q].norm_sqr())
            .sum();
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let beta = a[p][q];
                let b = beta.norm();
                if b == 0.0 {
                    continue;
                }
                let phase = beta / b;
                let tau = (a[q][q].re - a[p][p].re) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column update: a'_kp = c·a_kp − s·e^{−iφ}·a_kq,
                //                a'_kq = s·e^{iφ}·a_kp + c·a_kq.
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = akp * c - akq * s * phase.conj();
                    a[k][q] = akp * s * phase + akq * c;
                }
                // Row update is the conjugate transpose of the column update.
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = apk * c - aqk * s * phase;
                    a[q][k] = apk * s * phase.conj() + aqk * c;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i].re).fold(f64::NEG_INFINITY, f64::max)
}

/// Energy multiplier per filter, from its merge group.
fn filter_multipliers<T: Scalar>(layer: &LayerSpec<T>) -> Vec<f64> {
    let mut mult = vec![1.0; layer.filters.len()];
    for merge in &layer.merges {
        let l = merge_multiplier(&merge.kind, merge.members.len());
        for &k in &merge.members {
            mult[k] = l;
        }
    }
    mult
}

/// True when the layer's merges act linearly on filter outputs: every group
/// is a singleton (its 1-Lipschitz nonlinearity is harmless for a norm bound)
/// or a sum of identity-σ members. Such a layer is one linear map and needs
/// no energy multipliers.
fn merges_act_linearly<T: Scalar>(layer: &LayerSpec<T>) -> bool {
    layer.merges.iter().all(|merge| {
        merge.members.len() == 1
            || (matches!(merge.kind, MergeKind::Sum)
                && merge
                    .members
                    .iter()
                    .all(|&k| layer.filters[k].sigma == Nonlinearity::Identity))
    })
}

/// The per-bin matrix form additionally needs all input nodes on one grid.
fn matrix_form_applies<T: Scalar>(layer: &LayerSpec<T>, in_shapes: &[Vec<usize>]) -> bool {
    in_shapes.iter().all(|s| s == &in_shapes[0]) && merges_act_linearly(layer)
}

fn source_node(src: &SourceRef) -> Result<usize> {
    match src {
        SourceRef::Node(n) => Ok(*n),
        SourceRef::Tier { .. } => Err(Error::Validation(
            "spectral bounds require a skip-normalized network".into(),
        )),
    }
}

/// Continuous-domain node-form triple.
fn bound_continuous<T: Scalar>(
    net: &NetworkSpec<T>,
    m: usize,
    grid: &FrequencyGrid,
    widths: &[usize],
) -> Result<BesselTriple<T>> {
    let layer = &net.layers[m];
    let mult = filter_multipliers(layer);
    let width = widths[m];
    let (mut b1, mut b2, mut b3) = (0.0f64, 0.0f64, 0.0f64);
    for n in 0..width {
        let pool: Option<&Profile> = match &layer.pooling[n] {
            Some(Filter::Profile(p)) => Some(p),
            Some(_) => return Err(Error::Validation("continuous layers pool profiles".into())),
            None => None,
        };
        let mut convs: Vec<(f64, &Profile)> = Vec::new();
        for (k, att) in layer.filters.iter().enumerate() {
            if source_node(&att.source)? != n {
                continue;
            }
            let Filter::Profile(p) = &att.filter else {
                return Err(Error::Validation("continuous layers filter by profiles".into()));
            };
            let det = att.dilation.det_abs();
            if det <= 0.0 {
                return Err(Error::Validation("dilation must be invertible".into()));
            }
            convs.push((mult[k] / det, p));
        }
        let hidden = |w: f64| convs.iter().map(|(c, p)| c * p.eval(w)).sum::<f64>();
        let feature = |w: f64| pool.map_or(0.0, |p| p.eval(w));
        let n_b2 = if convs.is_empty() { 0.0 } else { sup_scan(hidden, 0.0, grid.band, grid.samples) };
        let n_b3 = if pool.is_none() { 0.0 } else { sup_scan(feature, 0.0, grid.band, grid.samples) };
        let n_b1 = if convs.is_empty() && pool.is_none() {
            0.0
        } else {
            sup_scan(|w| hidden(w) + feature(w), 0.0, grid.band, grid.samples)
        };
        b1 = b1.max(n_b1);
        b2 = b2.max(n_b2);
        b3 = b3.max(n_b3);
    }
    Ok(BesselTriple { b1: T::c(b1), b2: T::c(b2), b3: T::c(b3) })
}

/// Power spectrum `|ĝ(bin)|²` of a tap filter on a grid.
fn power_spectrum<T: Scalar>(
    taps: &Signal<T>,
    offset: &[i64],
    grid_shape: &[usize],
) -> Result<Vec<f64>> {
    let spec = tap_spectrum(taps, offset, grid_shape)?;
    Ok(spec
        .iter()
        .map(|v| {
            let re = v.re.to_f64().unwrap();
            let im = v.im.to_f64().unwrap();
            re * re + im * im
        })
        .collect())
}

fn complex_spectrum<T: Scalar>(
    taps: &Signal<T>,
    offset: &[i64],
    grid_shape: &[usize],
) -> Result<Vec<Complex<f64>>> {
    let spec = tap_spectrum(taps, offset, grid_shape)?;
    Ok(spec
        .iter()
        .map(|v| Complex::new(v.re.to_f64().unwrap(), v.im.to_f64().unwrap()))
        .collect())
}

fn tap_parts<T: Scalar>(f: &Filter<T>) -> Result<(&Signal<T>, &[i64])> {
    match f {
        Filter::Taps { taps, offset } => Ok((taps, offset)),
        Filter::Profile(_) => {
            Err(Error::Validation("discrete layers use tap filters".into()))
        }
    }
}

/// Stride-1 discrete layer bound on exact DFT bins.
fn bound_discrete_bins<T: Scalar>(
    net: &NetworkSpec<T>,
    shapes: &NetworkShapes,
    m: usize,
) -> Result<BesselTriple<T>> {
    let layer = &net.layers[m];
    let width = shapes.tier_widths[m];
    let in_shapes = &shapes.tier_shapes[m];
    let mult = filter_multipliers(layer);

    // Feature-path bound: pooling operators are block-diagonal over nodes,
    // each diagonal in frequency, so B³ is an exact per-bin max either way.
    let mut b3 = 0.0f64;
    let mut pool_power: Vec<Option<Vec<f64>>> = Vec::with_capacity(width);
    for n in 0..width {
        match &layer.pooling[n] {
            Some(f) => {
                let (taps, offset) = tap_parts(f)?;
                let p = power_spectrum(taps, offset, &in_shapes[n])?;
                b3 = b3.max(p.iter().cloned().fold(0.0, f64::max));
                pool_power.push(Some(p));
            }
            None => pool_power.push(None),
        }
    }

    if matrix_form_applies(layer, in_shapes) && !layer.filters.is_empty() {
        // One complex matrix per bin: rows are merge groups (entries add when
        // a sum group has several members on one source), plus one pooling
        // row per pooled node for the joint bound.
        let shape = in_shapes[0].clone();
        let bins: usize = shape.iter().product();
        let mut filt: Vec<Vec<Complex<f64>>> = Vec::with_capacity(layer.filters.len());
        for att in &layer.filters {
            let (taps, offset) = tap_parts(&att.filter)?;
            filt.push(complex_spectrum(taps, offset, &shape)?);
        }
        let pool_spec: Vec<Option<Vec<Complex<f64>>>> = layer
            .pooling
            .iter()
            .map(|p| -> Result<Option<Vec<Complex<f64>>>> {
                match p {
                    Some(f) => {
                        let (taps, offset) = tap_parts(f)?;
                        Ok(Some(complex_spectrum(taps, offset, &shape)?))
                    }
                    None => Ok(None),
                }
            })
            .collect::<Result<_>>()?;
        let (mut b1, mut b2) = (0.0f64, 0.0f64);
        for bin in 0..bins {
            let mut rows: Vec<Vec<Complex<f64>>> = Vec::new();
            for merge in &layer.merges {
                let mut row = vec![Complex::new(0.0, 0.0); width];
                for &k in &merge.members {
                    row[source_node(&layer.filters[k].source)?] += filt[k][bin];
                }
                rows.push(row);
            }
            b2 = b2.max(lambda_max_of_rows(&rows, width));
            for (n, spec) in pool_spec.iter().enumerate() {
                if let Some(sp) = spec {
                    let mut row = vec![Complex::new(0.0, 0.0); width];
                    row[n] = sp[bin];
                    rows.push(row);
                }
            }
            b1 = b1.max(lambda_max_of_rows(&rows, width));
        }
        return Ok(BesselTriple { b1: T::c(b1), b2: T::c(b2), b3: T::c(b3) });
    }

    // Node form: per node, `Σ_k l_k |ĝ_k|²` plus the pooling power.
    let (mut b1, mut b2) = (0.0f64, 0.0f64);
    for n in 0..width {
        let bins: usize = in_shapes[n].iter().product();
        let mut conv_sum = vec![0.0f64; bins];
        let mut any = false;
        for (k, att) in layer.filters.iter().enumerate() {
            if source_node(&att.source)? != n {
                continue;
            }
            any = true;
            let (taps, offset) = tap_parts(&att.filter)?;
            let p = power_spectrum(taps, offset, &in_shapes[n])?;
            for (acc, v) in conv_sum.iter_mut().zip(&p) {
                *acc += mult[k] * v;
            }
        }
        if any {
            b2 = b2.max(conv_sum.iter().cloned().fold(0.0, f64::max));
        }
        let joint = match &pool_power[n] {
            Some(p) => conv_sum.iter().zip(p).map(|(&c, &q)| c + q).fold(0.0, f64::max),
            None => conv_sum.iter().cloned().fold(0.0, f64::max),
        };
        b1 = b1.max(joint);
    }
    Ok(BesselTriple { b1: T::c(b1), b2: T::c(b2), b3: T::c(b3) })
}

/// `λ_max(M^H M)` for a small rows×cols matrix given by rows.
fn lambda_max_of_rows(rows: &[Vec<Complex<f64>>], cols: usize) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut h = vec![vec![Complex::new(0.0, 0.0); cols]; cols];
    for row in rows {
        for i in 0..cols {
            for j in 0..cols {
                h[i][j] += row[i].conj() * row[j];
            }
        }
    }
    hermitian_lambda_max(&h)
}

/// One weighted convolution-and-subsample term of a stage operator row.
struct StageTerm<'a, T> {
    src: usize,
    taps: &'a Signal<T>,
    offset: &'a [i64],
    strides: Vec<usize>,
    weight: T,
}

/// The linear stage operator of a strided layer, in flattened-vector form.
struct StageOp<'a, T: Scalar> {
    in_shapes: &'a [Vec<usize>],
    in_offsets: Vec<usize>,
    in_dim: usize,
    /// Hidden rows: each is a sum of terms sharing an output shape.
    units: Vec<(Vec<StageTerm<'a, T>>, Vec<usize>)>,
    /// Feature rows: `(node, taps, offset)`, stride 1.
    feats: Vec<(usize, &'a Signal<T>, &'a [i64])>,
    include_features: bool,
}

impl<'a, T: Scalar> StageOp<'a, T> {
    fn unpack(&self, x: &[T]) -> Vec<Signal<T>> {
        self.in_shapes
            .iter()
            .enumerate()
            .map(|(n, shape)| {
                let len: usize = shape.iter().product();
                let start = self.in_offsets[n];
                Signal::from_vec(shape.clone(), x[start..start + len].to_vec())
                    .expect("packed layout is consistent")
            })
            .collect()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        let nodes = self.unpack(x);
        let mut out = Vec::new();
        for (terms, out_shape) in &self.units {
            let mut acc = Signal::<T>::zeros(out_shape);
            for term in terms {
                let full = forward::conv_circular(&nodes[term.src], term.taps, term.offset);
                let sub = forward::downsample(&full, &term.strides).expect("validated strides");
                for (a, &v) in acc.data_mut().iter_mut().zip(sub.data()) {
                    *a += term.weight * v;
                }
            }
            out.extend_from_slice(acc.data());
        }
        if self.include_features {
            for &(n, taps, offset) in &self.feats {
                let f = forward::conv_circular(&nodes[n], taps, offset);
                out.extend_from_slice(f.data());
            }
        }
        out
    }

    fn adjoint(&self, y: &[T]) -> Vec<T> {
        let mut nodes: Vec<Signal<T>> =
            self.in_shapes.iter().map(|s| Signal::zeros(s)).collect();
        let mut pos = 0usize;
        for (terms, out_shape) in &self.units {
            let len: usize = out_shape.iter().product();
            let yk = Signal::from_vec(out_shape.clone(), y[pos..pos + len].to_vec())
                .expect("packed layout is consistent");
            pos += len;
            for term in terms {
                let up = forward::upsample_zero(&yk, &term.strides);
                let back = forward::conv_adjoint(&up, term.taps, term.offset);
                for (a, &v) in nodes[term.src].data_mut().iter_mut().zip(back.data()) {
                    *a += term.weight * v;
                }
            }
        }
        if self.include_features {
            for &(n, taps, offset) in &self.feats {
                let shape = self.in_shapes[n].clone();
                let len: usize = shape.iter().product();
                let yf = Signal::from_vec(shape, y[pos..pos + len].to_vec())
                    .expect("packed layout is consistent");
                pos += len;
                let back = forward::conv_adjoint(&yf, taps, offset);
                for (a, &v) in nodes[n].data_mut().iter_mut().zip(back.data()) {
                    *a += v;
                }
            }
        }
        let mut out = Vec::with_capacity(self.in_dim);
        for node in &nodes {
            out.extend_from_slice(node.data());
        }
        out
    }
}

/// Strided discrete layer bound via the exact stage operator.
fn bound_discrete_operator<T: Scalar>(
    net: &NetworkSpec<T>,
    shapes: &NetworkShapes,
    m: usize,
    opts: &SpectralOptions,
) -> Result<BesselTriple<T>> {
    let layer = &net.layers[m];
    let width = shapes.tier_widths[m];
    let in_shapes = &shapes.tier_shapes[m];
    let mult = filter_multipliers(layer);
    // The stage operator handles mixed input grids, so only merge linearity
    // decides between the true linear map and the √l-weighted node form.
    let matrix_mode = merges_act_linearly(layer);

    // Exact feature-path bound from bins (pooling is always stride 1).
    let mut b3 = 0.0f64;
    let mut feats: Vec<(usize, &Signal<T>, &[i64])> = Vec::new();
    for n in 0..width {
        if let Some(f) = &layer.pooling[n] {
            let (taps, offset) = tap_parts(f)?;
            let p = power_spectrum(taps, offset, &in_shapes[n])?;
            b3 = b3.max(p.iter().cloned().fold(0.0, f64::max));
            feats.push((n, taps, offset));
        }
    }

    let mut units: Vec<(Vec<StageTerm<T>>, Vec<usize>)> = Vec::new();
    let term_of = |k: usize, weight: T| -> Result<(StageTerm<T>, Vec<usize>)> {
        let att = &layer.filters[k];
        let src = source_node(&att.source)?;
        let (taps, offset) = tap_parts(&att.filter)?;
        let strides = att.dilation.axes()?.to_vec();
        let out_shape: Vec<usize> =
            in_shapes[src].iter().zip(&strides).map(|(&e, &s)| e / s).collect();
        Ok((StageTerm { src, taps, offset, strides, weight }, out_shape))
    };
    if matrix_mode {
        for merge in &layer.merges {
            let mut terms = Vec::new();
            let mut shape = Vec::new();
            for &k in &merge.members {
                let (t, s) = term_of(k, T::one())?;
                terms.push(t);
                shape = s;
            }
            units.push((terms, shape));
        }
    } else {
        for (k, &l) in mult.iter().enumerate() {
            let (t, s) = term_of(k, T::c(l.sqrt()))?;
            units.push((vec![t], s));
        }
    }

    let in_offsets: Vec<usize> = {
        let mut acc = 0usize;
        let mut offs = Vec::with_capacity(width);
        for shape in in_shapes.iter() {
            offs.push(acc);
            acc += shape.iter().product::<usize>();
        }
        offs
    };
    let in_dim: usize = in_shapes.iter().map(|s| s.iter().product::<usize>()).sum();

    // Hidden-path bound.
    let hidden_op = StageOp {
        in_shapes,
        in_offsets: in_offsets.clone(),
        in_dim,
        units,
        feats: feats.clone(),
        include_features: false,
    };
    let b2_res = operator_norm_squared(
        in_dim,
        |x| hidden_op.apply(x),
        |y| hidden_op.adjoint(y),
        T::c(opts.tol),
        opts.max_iter,
        opts.seed ^ ((m as u64) << 8),
    )?;
    let b2 = b2_res.value.to_f64().unwrap();

    // Joint bound: reuse the same units, features appended.
    let joint_op = StageOp {
        in_shapes,
        in_offsets,
        in_dim,
        units: hidden_op.units,
        feats,
        include_features: true,
    };
    let b1_res = operator_norm_squared(
        in_dim,
        |x| joint_op.apply(x),
        |y| joint_op.adjoint(y),
        T::c(opts.tol),
        opts.max_iter,
        opts.seed ^ ((m as u64) << 8) ^ 1,
    )?;
    // The joint operator contains both stages as submatrices, so its true
    // norm dominates both estimates; clamping only moves the estimate closer
    // to the truth.
    let b1 = b1_res.value.to_f64().unwrap().max(b2).max(b3);
    Ok(BesselTriple { b1: T::c(b1), b2: T::c(b2), b3: T::c(b3) })
}

/// Computes every layer's triple, dispatching on domain and strides.
///
/// Skip connections are first rewritten into pass-through chains, which leave
/// all bounds unchanged (pass-throughs are exact isometries on their chain).
pub fn layer_bounds<T: Scalar>(
    net: &NetworkSpec<T>,
    opts: &SpectralOptions,
) -> Result<Vec<LayerBound<T>>> {
    let net = normalize_skips(net)?;
    let shapes = net.validate()?;
    let mut out = Vec::with_capacity(net.num_layers());
    for m in 0..net.num_layers() {
        let (triple, method) = match net.domain {
            Domain::Continuous => {
                let grid =
                    opts.grid.clone().unwrap_or_else(|| FrequencyGrid::for_network(&net));
                (bound_continuous(&net, m, &grid, &shapes.tier_widths)?, BoundMethod::Frequency)
            }
            Domain::Discrete => {
                let strided = net.layers[m]
                    .filters
                    .iter()
                    .any(|att| !att.dilation.is_identity());
                if strided {
                    (bound_discrete_operator(&net, &shapes, m, opts)?, BoundMethod::Operator)
                } else {
                    (bound_discrete_bins(&net, &shapes, m)?, BoundMethod::Frequency)
                }
            }
        };
        out.push(LayerBound { layer: m, triple, method });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netspec::{Dilation, FilterAttachment, MergeSpec, PExponent};
    use crate::Real;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn jacobi_matches_closed_forms() {
        // Diagonal.
        let h = vec![
            vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(7.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        assert_abs_diff_eq!(hermitian_lambda_max(&h), 7.0, epsilon = 1e-13);
        // 2x2 complex: [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let h = vec![vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]];
        assert_abs_diff_eq!(hermitian_lambda_max(&h), 3.0, epsilon = 1e-13);
    }

    #[test]
    fn jacobi_recovers_a_constructed_spectrum() {
        // H = F* D F with F the unitary 4-point Fourier matrix and
        // D = diag(4, 1, 0, 2): eigenvalues are exactly {4, 1, 0, 2}.
        let n = 4;
        let d = [4.0, 1.0, 0.0, 2.0];
        let omega = |j: usize, k: usize| {
            let th = -2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64;
            c(th.cos(), th.sin()) / (n as f64).sqrt()
        };
        let mut h = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    // (F* D F)_{ij} = Σ_k conj(F_{ki}) d_k F_{kj}
                    h[i][j] += omega(k, i).conj() * d[k] * omega(k, j);
                }
            }
        }
        assert_abs_diff_eq!(hermitian_lambda_max(&h), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn sup_scan_finds_smooth_maxima_and_plateaus() {
        let v = sup_scan(|x| 2.0 - (x - 0.3) * (x - 0.3), 0.0, 1.0, 4096);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        let v = sup_scan(|x| if x > 0.5 { 1.25 } else { 0.0 }, 0.0, 1.0, 4096);
        assert_abs_diff_eq!(v, 1.25, epsilon = 1e-15);
    }

    fn taps(vals: &[f64]) -> Filter<Real> {
        Filter::Taps {
            taps: Signal::from_vec(vec![vals.len()], vals.to_vec()).unwrap(),
            offset: vec![0],
        }
    }

    fn att(filter: Filter<Real>, sigma: Nonlinearity, stride: usize) -> FilterAttachment<Real> {
        FilterAttachment {
            filter,
            source: SourceRef::Node(0),
            dilation: Dilation::Axes(vec![stride]),
            sigma,
        }
    }

    fn one_layer_net(
        n: usize,
        filters: Vec<FilterAttachment<Real>>,
        merges: Vec<MergeSpec>,
        out_nodes: usize,
    ) -> NetworkSpec<Real> {
        NetworkSpec {
            input_shape: vec![n],
            domain: Domain::Discrete,
            layers: vec![
                LayerSpec { pooling: vec![None], feature_taps: vec![false], filters, merges },
                LayerSpec {
                    pooling: vec![Some(taps(&[1.0])); out_nodes],
                    feature_taps: vec![true; out_nodes],
                    filters: vec![],
                    merges: vec![],
                },
            ],
        }
    }

    #[test]
    fn averaging_filter_bin_bound_is_exact() {
        // taps (1/2, 1/2): |ĝ(k)|² = cos²(πk/N), peak 1 at k = 0.
        let net = one_layer_net(
            8,
            vec![att(taps(&[0.5, 0.5]), Nonlinearity::Identity, 1)],
            vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
            1,
        );
        let bounds = layer_bounds(&net, &SpectralOptions::default()).unwrap();
        assert_eq!(bounds[0].method, BoundMethod::Frequency);
        assert_abs_diff_eq!(bounds[0].triple.b2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bounds[0].triple.b1, 1.0, epsilon = 1e-12);
        assert_eq!(bounds[0].triple.b3, 0.0);
        // Final layer: unit pooling only.
        assert_abs_diff_eq!(bounds[1].triple.b1, 1.0, epsilon = 1e-12);
        assert_eq!(bounds[1].triple.b2, 0.0);
        assert_abs_diff_eq!(bounds[1].triple.b3, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cancelling_identity_sum_is_seen_by_the_matrix_form() {
        // δ and -δ summed with identity σ cancel exactly: the layer is the
        // zero map, and the matrix form knows it. The node form would pay the
        // worst-case multiplier 2·(1 + 1) = 4.
        let net = one_layer_net(
            8,
            vec![
                att(taps(&[1.0]), Nonlinearity::Identity, 1),
                att(taps(&[-1.0]), Nonlinearity::Identity, 1),
            ],
            vec![MergeSpec { members: vec![0, 1], kind: MergeKind::Sum }],
            1,
        );
        let bounds = layer_bounds(&net, &SpectralOptions::default()).unwrap();
        assert_abs_diff_eq!(bounds[0].triple.b2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nonlinear_sum_pays_the_energy_multiplier() {
        // Same filters but abs σ forces the node form: B² = 2·(1+1) = 4.
        let net = one_layer_net(
            8,
            vec![
                att(taps(&[1.0]), Nonlinearity::Abs, 1),
                att(taps(&[-1.0]), Nonlinearity::Abs, 1),
            ],
            vec![MergeSpec { members: vec![0, 1], kind: MergeKind::Sum }],
            1,
        );
        let bounds = layer_bounds(&net, &SpectralOptions::default()).unwrap();
        assert_abs_diff_eq!(bounds[0].triple.b2, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn infinity_norm_merge_has_unit_multiplier() {
        let net = one_layer_net(
            8,
            vec![
                att(taps(&[1.0]), Nonlinearity::Identity, 1),
                att(taps(&[1.0]), Nonlinearity::Identity, 1),
            ],
            vec![MergeSpec { members: vec![0, 1], kind: MergeKind::PNorm(PExponent::Infinite) }],
            1,
        );
        let bounds = layer_bounds(&net, &SpectralOptions::default()).unwrap();
        // Node form with l = 1: B² = 1 + 1 = 2.
        assert_abs_diff_eq!(bounds[0].triple.b2, 2.0, epsilon = 1e-12);
    }

    /// Exact squared norm of subsample-after-filter for one stride class:
    /// `(1/s) · max_ν Σ_{r<s} |ĝ(ν + rN/s)|²` on an N-point axis.
    fn alias_norm_squared(taps: &[f64], n: usize, s: usize) -> f64 {
        let sig = Signal::from_vec(vec![taps.len()], taps.to_vec()).unwrap();
        let spec = crate::fft::tap_spectrum(&sig, &[0], &[n]).unwrap();
        let power: Vec<f64> = spec.iter().map(|v| v.norm_sqr()).collect();
        let mut best: f64 = 0.0;
        for nu in 0..n / s {
            let sum: f64 = (0..s).map(|r| power[nu + r * n / s]).sum();
            best = best.max(sum);
        }
        best / s as f64
    }

    #[test]
    fn strided_operator_bound_matches_the_aliasing_formula() {
        // Half-band average, stride 2 on 8 points: the closed form gives
        // (1/2)·(cos² + sin²) = 1/2 at every ν.
        assert_abs_diff_eq!(alias_norm_squared(&[0.5, 0.5], 8, 2), 0.5, epsilon = 1e-12);
        for (filter, stride) in [
            (vec![0.5, 0.5], 2usize),
            (vec![1.0, 0.0, -1.0], 2),
            (vec![0.3, -0.8, 0.1, 0.4], 4),
        ] {
            let net = one_layer_net(
                8,
                vec![att(taps(&filter), Nonlinearity::Identity, stride)],
                vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
                1,
            );
            let bounds = layer_bounds(&net, &SpectralOptions::default()).unwrap();
            assert_eq!(bounds[0].method, BoundMethod::Operator);
            assert_abs_diff_eq!(
                bounds[0].triple.b2,
                alias_norm_squared(&filter, 8, stride),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn subsampled_delta_keeps_full_energy() {
        // Single-bin reasoning (|ĝ(ν)|²/s, no coset sum) would claim 1/2
        // here; the aliasing formula and the true operator norm both give 1
        // (inputs supported on the kept phase pass through untouched).
        let net = one_layer_net(
            8,
            vec![att(taps(&[1.0]), Nonlinearity::Identity, 2)],
            vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
            1,
        );
        let bounds = layer_bounds(&net, &SpectralOptions::default()).unwrap();
        assert_abs_diff_eq!(bounds[0].triple.b2, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(alias_norm_squared(&[1.0], 8, 2), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn continuous_gate_layer_reproduces_closed_forms() {
        use crate::profile::Profile;
        // Pool = centered gate, filter = bump pair at 1.5: the joint sup sits
        // at the crossing ω = 3/4 with value 2e^{-1/3}.
        let net = NetworkSpec::<Real> {
            input_shape: vec![1],
            domain: Domain::Continuous,
            layers: vec![
                LayerSpec {
                    pooling: vec![Some(Filter::Profile(Profile::Gate { flat: 0.5 }))],
                    feature_taps: vec![true],
                    filters: vec![FilterAttachment {
                        filter: Filter::Profile(Profile::BumpPair { center: 1.5 }),
                        source: SourceRef::Node(0),
                        dilation: Dilation::identity(1),
                        sigma: Nonlinearity::Abs,
                    }],
                    merges: vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
                },
                LayerSpec {
                    pooling: vec![Some(Filter::Profile(Profile::Gate { flat: 0.5 }))],
                    feature_taps: vec![true],
                    filters: vec![],
                    merges: vec![],
                },
            ],
        };
        let bounds = layer_bounds(&net, &SpectralOptions::default()).unwrap();
        let expect = 2.0 * (-1.0f64 / 3.0).exp();
        assert_abs_diff_eq!(bounds[0].triple.b1, expect, epsilon = 1e-10);
        assert_abs_diff_eq!(bounds[0].triple.b2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bounds[0].triple.b3, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stride_one_operator_route_agrees_with_bins() {
        // Force the operator path on an unstrided layer by calling it
        // directly; it must agree with the exact bin computation.
        let net = one_layer_net(
            8,
            vec![
                att(taps(&[0.5, 0.25, -0.125]), Nonlinearity::Relu, 1),
                att(taps(&[1.0, -1.0]), Nonlinearity::Abs, 1),
            ],
            vec![MergeSpec { members: vec![0, 1], kind: MergeKind::PNorm(PExponent::Finite(1.5)) }],
            1,
        );
        let shapes = net.validate().unwrap();
        let opts = SpectralOptions::default();
        let via_bins = bound_discrete_bins(&net, &shapes, 0).unwrap();
        let via_op = bound_discrete_operator(&net, &shapes, 0, &opts).unwrap();
        assert_abs_diff_eq!(via_bins.b2, via_op.b2, epsilon = 1e-8);
        assert_abs_diff_eq!(via_bins.b1, via_op.b1, epsilon = 1e-8);
        assert_abs_diff_eq!(via_bins.b3, via_op.b3, epsilon = 1e-12);
    }
}
