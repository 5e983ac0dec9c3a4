//! Skip-connection elimination.
//!
//! A filter may read a node from any earlier tier. Analyses that walk the
//! network layer by layer (spectral bounds, linearization) are simpler on a
//! *strictly layered* graph, so this pass rewrites skips into chains of unit
//! pass-through nodes: each intermediate layer gains an identity filter in
//! its own singleton sum group that ferries the skipped signal one tier
//! forward. Pass-through filters are exact identities, so the rewritten
//! network computes bitwise-identical features.

use super::{
    Dilation, Filter, FilterAttachment, MergeKind, MergeSpec, NetworkSpec, Nonlinearity,
    SourceRef,
};
use crate::{Result, Scalar};
use std::collections::{BTreeMap, BTreeSet};

/// Rewrites skip connections into pass-through chains.
///
/// Returns a network whose filters only read their own input tier. Networks
/// without skips are returned unchanged.
pub fn normalize_skips<T: Scalar>(net: &NetworkSpec<T>) -> Result<NetworkSpec<T>> {
    net.validate()?;
    let m_total = net.num_layers();

    // demand[b]: original (tier, node) pairs that must be available at tier b.
    // A source (t, n) used by a filter in layer m > t needs carries at tiers
    // t+1 ..= m.
    let mut demand: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); m_total + 1];
    let mut any_tier_source = false;
    for (m, layer) in net.layers.iter().enumerate() {
        for att in &layer.filters {
            if let SourceRef::Tier { tier, node } = att.source {
                any_tier_source = true;
                for b in tier + 1..=m {
                    demand[b].insert((tier, node));
                }
            }
        }
    }
    if !any_tier_source {
        return Ok(net.clone());
    }

    let ndim = net.ndim();
    // carry: original (tier, node) -> node index at the current tier.
    let mut carry: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut layers = Vec::with_capacity(m_total);
    for (m, layer) in net.layers.iter().enumerate() {
        let mut new_layer = layer.clone();
        // Carried nodes extend the input tier; they are never pooled.
        for _ in 0..carry.len() {
            new_layer.pooling.push(None);
            new_layer.feature_taps.push(false);
        }
        // Rewrite sources onto the current tier.
        for att in &mut new_layer.filters {
            if let SourceRef::Tier { tier, node } = att.source {
                att.source = if tier == m {
                    SourceRef::Node(node)
                } else {
                    SourceRef::Node(carry[&(tier, node)])
                };
            }
        }
        // Emit pass-throughs for everything the next tier still needs.
        let base_width = layer.merges.len();
        let mut next_carry = BTreeMap::new();
        for (slot, &(t, n)) in demand[m + 1].iter().enumerate() {
            let src = if t == m { n } else { carry[&(t, n)] };
            new_layer.filters.push(FilterAttachment {
                filter: Filter::identity(net.domain, ndim),
                source: SourceRef::Node(src),
                dilation: Dilation::identity(ndim),
                sigma: Nonlinearity::Identity,
            });
            new_layer.merges.push(MergeSpec {
                members: vec![new_layer.filters.len() - 1],
                kind: MergeKind::Sum,
            });
            next_carry.insert((t, n), base_width + slot);
        }
        carry = next_carry;
        layers.push(new_layer);
    }

    let out = NetworkSpec { input_shape: net.input_shape.clone(), domain: net.domain, layers };
    out.validate()?;
    Ok(out)
}
