//! Max pooling expressed as a merge group.
//!
//! A windowed maximum `z(t) = max_{j < window} x(stride·t + j)` factors into
//! this crate's primitives: one unit-tap translation filter per window
//! position (offset `-j` looks ahead by `j`), a common subsampling dilation,
//! and an `∞`-norm merge over the group. The `∞`-norm takes absolute values,
//! so the construction computes the true maximum only on nonnegative inputs —
//! which is how max pooling is used in practice, after a `relu` or `abs`
//! stage. The energy multiplier of an `∞`-norm group is 1, so the pooling
//! window size never inflates the layer's spectral bounds.

use super::{
    Dilation, Filter, FilterAttachment, LayerSpec, MergeKind, MergeSpec, PExponent, SourceRef,
};
use crate::signal::{next_index, Signal};
use crate::{Error, Result, Scalar};

/// Builds a single-input-node layer computing a windowed maximum.
///
/// `window` and `stride` are per-axis; the returned layer reads one node and
/// produces one node whose extents shrink by `stride` (which must divide the
/// extents of whatever node the layer is attached to).
pub fn max_pool_layer<T: Scalar>(window: &[usize], stride: &[usize]) -> Result<LayerSpec<T>> {
    let d = window.len();
    if d == 0 || stride.len() != d {
        return Err(Error::Validation(
            "max pool window and stride must agree on the axis count".into(),
        ));
    }
    if window.iter().chain(stride).any(|&v| v == 0) {
        return Err(Error::Validation("max pool window and stride must be positive".into()));
    }
    let mut filters = Vec::new();
    let mut j = vec![0usize; d];
    loop {
        let offset: Vec<i64> = j.iter().map(|&v| -(v as i64)).collect();
        filters.push(FilterAttachment {
            filter: Filter::Taps {
                taps: Signal::from_vec(vec![1; d], vec![T::one()]).expect("unit stencil"),
                offset,
            },
            source: SourceRef::Node(0),
            dilation: Dilation::Axes(stride.to_vec()),
            sigma: super::Nonlinearity::Identity,
        });
        if !next_index(&mut j, window) {
            break;
        }
    }
    let members = (0..filters.len()).collect();
    Ok(LayerSpec {
        pooling: vec![None],
        feature_taps: vec![false],
        filters,
        merges: vec![MergeSpec { members, kind: MergeKind::PNorm(PExponent::Infinite) }],
    })
}
