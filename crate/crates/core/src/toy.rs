//! A compact continuous-domain reference network with closed-form bounds.
//!
//! The network is built entirely from [`Profile`] filters whose spectral
//! supports are arranged by hand: gates and bump pairs either tile the
//! frequency axis edge-to-edge or overlap in exactly one known crossing.
//! Every layer triple, the chain-program optimum, and both closed-form
//! relaxations can therefore be written down exactly, which makes the
//! network a end-to-end oracle for the whole certification pipeline.
//!
//! Shape: four layers over a scalar input line, with tier widths
//! 1 → 4 → 3 → 1 → 1 and seven pooled feature maps in total.
//!
//! * **Layer 1** pools the input through a half-width gate and feeds four
//!   absolute-value nodes through bump pairs centred at 1.5, 3.5, 5.5 and
//!   7.5. The gate and the first bump pair cross at `ω = 3/4`, where both
//!   tapers equal `e^{-1/3}`; the layer triple is `(2e^{-1/3}, 1, 1)`.
//! * **Layer 2** pools three of the four nodes and filters each node once;
//!   two filters land in a Euclidean-norm merge (multiplier 1). The same
//!   gate/bump crossing on node 0 reproduces `(2e^{-1/3}, 1, 1)`.
//! * **Layer 3** multiplies two clipped-sigmoid nodes together; a product
//!   of two members doubles the energy multiplier, so each filter counts
//!   twice and the triple is `(2, 2, 1)`.
//! * **Layer 4** only pools, through an all-pass profile: `(1, 0, 1)`.
//!
//! Chaining the triples, the optimal budget split keeps `y` maximal
//! through the first two layers and cashes everything out at layer 3,
//! giving the squared constant `4e^{-1/3} ≈ 2.866` — strictly better than
//! the product relaxation `8e^{-2/3} ≈ 4.107` and the sum-of-products
//! relaxation, which here is exactly `5`.

use crate::netspec::{
    Dilation, Domain, Filter, FilterAttachment, LayerSpec, MergeKind, MergeSpec, NetworkSpec,
    Nonlinearity, PExponent, SourceRef,
};
use crate::profile::Profile;
use crate::spectral::BesselTriple;
use crate::Scalar;

fn gate<T: Scalar>(flat: f64) -> Option<Filter<T>> {
    Some(Filter::Profile(Profile::Gate { flat }))
}

fn bump<T: Scalar>(center: f64, source: usize, sigma: Nonlinearity) -> FilterAttachment<T> {
    FilterAttachment {
        filter: Filter::Profile(Profile::BumpPair { center }),
        source: SourceRef::Node(source),
        dilation: Dilation::identity(1),
        sigma,
    }
}

fn singleton_sum(k: usize) -> MergeSpec {
    MergeSpec { members: vec![k], kind: MergeKind::Sum }
}

/// Builds the reference network. It validates as-is and its exact bounds
/// are exposed by the `expected_*` functions below.
pub fn build_toy_network<T: Scalar>() -> NetworkSpec<T> {
    let layer1 = LayerSpec {
        pooling: vec![gate(0.5)],
        feature_taps: vec![true],
        filters: vec![
            bump(1.5, 0, Nonlinearity::Abs),
            bump(3.5, 0, Nonlinearity::Abs),
            bump(5.5, 0, Nonlinearity::Abs),
            bump(7.5, 0, Nonlinearity::Abs),
        ],
        merges: (0..4).map(singleton_sum).collect(),
    };
    let layer2 = LayerSpec {
        pooling: vec![gate(0.5), gate(1.5), gate(0.5), None],
        feature_taps: vec![true, true, true, false],
        filters: vec![
            bump(1.5, 0, Nonlinearity::Abs),
            bump(4.0, 1, Nonlinearity::Abs),
            bump(6.0, 2, Nonlinearity::Relu),
            bump(5.0, 3, Nonlinearity::Relu),
        ],
        merges: vec![
            singleton_sum(0),
            singleton_sum(1),
            MergeSpec { members: vec![2, 3], kind: MergeKind::PNorm(PExponent::Finite(2.0)) },
        ],
    };
    let layer3 = LayerSpec {
        pooling: vec![None, gate(0.5), gate(2.5)],
        feature_taps: vec![false, true, true],
        filters: vec![
            bump(2.0, 0, Nonlinearity::ClippedSigmoid),
            bump(2.0, 1, Nonlinearity::ClippedSigmoid),
        ],
        merges: vec![MergeSpec { members: vec![0, 1], kind: MergeKind::Product }],
    };
    let layer4 = LayerSpec {
        pooling: vec![Some(Filter::Profile(Profile::Const { value: 1.0 }))],
        feature_taps: vec![true],
        filters: vec![],
        merges: vec![],
    };
    NetworkSpec {
        input_shape: vec![1],
        domain: Domain::Continuous,
        layers: vec![layer1, layer2, layer3, layer4],
    }
}

/// Exact layer triples of the reference network, in layer order.
pub fn expected_layer_triples() -> Vec<BesselTriple<f64>> {
    let crossing = 2.0 * (-1.0f64 / 3.0).exp();
    vec![
        BesselTriple { b1: crossing, b2: 1.0, b3: 1.0 },
        BesselTriple { b1: crossing, b2: 1.0, b3: 1.0 },
        BesselTriple { b1: 2.0, b2: 2.0, b3: 1.0 },
        BesselTriple { b1: 1.0, b2: 0.0, b3: 1.0 },
    ]
}

/// Exact chain-program optimum (squared constant): `4e^{-1/3}`.
pub fn expected_lp_value() -> f64 {
    4.0 * (-1.0f64 / 3.0).exp()
}

/// Exact certified constant: `2e^{-1/6}`.
pub fn expected_constant() -> f64 {
    expected_lp_value().sqrt()
}

/// Exact product relaxation: `8e^{-2/3}`.
pub fn expected_product_bound() -> f64 {
    8.0 * (-2.0f64 / 3.0).exp()
}

/// Exact sum-of-products relaxation: `5`.
pub fn expected_sumprod_bound() -> f64 {
    5.0
}
