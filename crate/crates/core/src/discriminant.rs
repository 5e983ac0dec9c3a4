//! Two-class separation scores and the error-versus-separation study.
//!
//! A signal class is a colored Gaussian: a mean signal plus white noise
//! pushed through a coloring filter, sampled on the network's input grid.
//! Pushing two such classes through a network lands them as clouds in
//! feature space, and two scores summarize how far apart those clouds
//! sit:
//!
//! * the raw score `S` divides the squared distance between the feature
//!   means by the summed nuclear norms of the feature covariances — a
//!   signal-to-spread ratio estimated from feature samples;
//! * the certified score `S̃` replaces the covariance spread with the sum
//!   of the certified squared Lipschitz bounds of the network *seen
//!   through each coloring filter* (the filter becomes an extra first
//!   layer), so its denominator needs no feature sampling at all.
//!
//! [`error_vs_discriminant`] runs a nearest-feature-mean classifier over
//! a family of networks on one fixed pair of classes and reports how both
//! scores track the observed test error: better-separated feature spaces
//! should rank with lower error, i.e. negative rank correlation.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use std::path::Path;

use crate::bounds::certify;
use crate::forward::forward;
use crate::netspec::{
    filter_from_value, signal_from_value, Dilation, Domain, Filter, FilterAttachment, LayerSpec,
    MergeKind, MergeSpec, NetworkSpec, Nonlinearity, SourceRef,
};
use crate::signal::Signal;
use crate::spectral::SpectralOptions;
use crate::util::{rng_stream, spearman};
use crate::{Error, Result, Scalar};

/// A colored-Gaussian signal class: draws are `mean + coloring ∗ white`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassModel<T> {
    /// Display name used in reports.
    pub label: String,
    /// Mean signal on the input grid.
    pub mean: Signal<T>,
    /// Tap stencil applied to unit white noise (stride-1, circular).
    pub coloring: Filter<T>,
}

impl<T: Scalar> ClassModel<T> {
    /// A class with uncolored (white) noise around the given mean.
    pub fn white(label: impl Into<String>, mean: Signal<T>) -> Self {
        let ndim = mean.shape().len();
        ClassModel { label: label.into(), mean, coloring: Filter::identity(Domain::Discrete, ndim) }
    }

    /// Checks the class against an input grid.
    pub fn validate(&self, input_shape: &[usize]) -> Result<()> {
        if self.mean.shape() != input_shape {
            return Err(Error::Validation(format!(
                "class '{}': mean shape {:?} does not match the input grid {:?}",
                self.label,
                self.mean.shape(),
                input_shape
            )));
        }
        let Filter::Taps { taps, offset } = &self.coloring else {
            return Err(Error::Unsupported(format!(
                "class '{}': the coloring must be a finite tap stencil",
                self.label
            )));
        };
        if taps.shape().len() != input_shape.len() || offset.len() != input_shape.len() {
            return Err(Error::Validation(format!(
                "class '{}': coloring dimensionality does not match the input grid",
                self.label
            )));
        }
        if taps.shape().iter().zip(input_shape).any(|(&t, &g)| t > g) {
            return Err(Error::Validation(format!(
                "class '{}': coloring stencil exceeds the input grid",
                self.label
            )));
        }
        if taps.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "class '{}': coloring taps must be finite",
                self.label
            )));
        }
        Ok(())
    }

    /// Draws one class sample: the mean plus colored unit white noise.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<Signal<T>> {
        let Filter::Taps { taps, offset } = &self.coloring else {
            return Err(Error::Unsupported("the coloring must be a finite tap stencil".into()));
        };
        let white = Signal::gaussian(self.mean.shape(), rng);
        crate::forward::conv_circular(&white, taps, offset).add(&self.mean)
    }
}

/// Parses a class model from JSON: `{"label": .., "mean": [..],
/// "coloring": {"taps": [..], "offset": [..]}}`. The mean uses the same
/// nested-array layout as filter taps; the coloring accepts the full
/// filter schema (inline taps or a sidecar `file` resolved against
/// `base_dir`) and defaults to the identity stencil.
pub fn class_model_from_json<T: Scalar>(
    text: &str,
    base_dir: Option<&Path>,
) -> Result<ClassModel<T>> {
    let v: Value = serde_json::from_str(text)?;
    let Some(obj) = v.as_object() else {
        return Err(Error::Spec("a class model must be a JSON object".into()));
    };
    for key in obj.keys() {
        if !matches!(key.as_str(), "label" | "mean" | "coloring") {
            return Err(Error::Spec(format!("unknown class-model field '{key}'")));
        }
    }
    let label = match obj.get("label") {
        Some(Value::String(s)) => s.clone(),
        None => "class".into(),
        Some(_) => return Err(Error::Spec("class-model label must be a string".into())),
    };
    let mean = signal_from_value::<T>(
        obj.get("mean").ok_or_else(|| Error::Spec("a class model needs a mean".into()))?,
        "mean",
    )?;
    let coloring = match obj.get("coloring") {
        Some(v) => filter_from_value::<T>(v, base_dir, "coloring")?,
        None => Filter::identity(Domain::Discrete, mean.shape().len()),
    };
    Ok(ClassModel { label, mean, coloring })
}

/// Reads a class model from a JSON file; sidecar references resolve
/// against the file's directory.
pub fn class_model_from_file<T: Scalar>(path: &Path) -> Result<ClassModel<T>> {
    let text = std::fs::read_to_string(path)?;
    class_model_from_json(&text, path.parent())
}

/// Returns the network with a coloring filter bolted on as an extra first
/// layer — identity nonlinearity, singleton sum, no feature tap — so the
/// certified bound of the composite covers class draws through their
/// coloring. Absolute tier references in skip connections shift by one to
/// keep pointing at the same tiers.
pub fn prepend_coloring<T: Scalar>(net: &NetworkSpec<T>, coloring: &Filter<T>) -> NetworkSpec<T> {
    let ndim = net.input_shape.len();
    let mut layers = Vec::with_capacity(net.layers.len() + 1);
    layers.push(LayerSpec {
        pooling: vec![None],
        feature_taps: vec![false],
        filters: vec![FilterAttachment {
            filter: coloring.clone(),
            source: SourceRef::Node(0),
            dilation: Dilation::identity(ndim),
            sigma: Nonlinearity::Identity,
        }],
        merges: vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
    });
    for layer in &net.layers {
        let mut layer = layer.clone();
        for att in &mut layer.filters {
            if let SourceRef::Tier { tier, .. } = &mut att.source {
                *tier += 1;
            }
        }
        layers.push(layer);
    }
    NetworkSpec { input_shape: net.input_shape.clone(), domain: net.domain, layers }
}

/// Separation scores of two classes through one network.
#[derive(Clone, Debug, Serialize)]
pub struct DiscriminantReport {
    /// Squared distance between the two feature means.
    pub mean_gap_squared: f64,
    /// Sample feature means of the two classes.
    pub feature_means: [Vec<f64>; 2],
    /// Nuclear norms of the two sample feature covariances.
    pub nuclear_norms: [f64; 2],
    /// Certified squared bounds of the network behind each coloring.
    pub lipschitz_bounds: [f64; 2],
    /// Whether diagonal shrinkage stabilized each covariance (engaged
    /// when a class has fewer samples than feature dimensions).
    pub shrinkage: [bool; 2],
    /// Samples drawn per class.
    pub samples: usize,
    /// `mean_gap_squared / (nuclear₁ + nuclear₂)`.
    pub s: f64,
    /// `mean_gap_squared / (L₁ + L₂)`.
    pub s_lip: f64,
}

fn column_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    let mut out = vec![0.0; d];
    for row in rows {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= rows.len() as f64;
    }
    out
}

/// Nuclear norm of the unbiased sample covariance via full SVD, with the
/// tiny diagonal shrinkage `λ = 1e−6·trace/d` engaged when the sample is
/// smaller than the dimension (the estimate is then rank-deficient).
fn covariance_nuclear_norm(rows: &[Vec<f64>], center: &[f64]) -> (f64, bool) {
    let n = rows.len();
    let d = center.len();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in rows {
        for i in 0..d {
            let ci = row[i] - center[i];
            for j in 0..d {
                cov[(i, j)] += ci * (row[j] - center[j]);
            }
        }
    }
    for v in cov.iter_mut() {
        *v /= (n - 1) as f64;
    }
    let shrink = n < d;
    if shrink {
        let lambda = 1e-6 * cov.trace() / d as f64;
        for i in 0..d {
            cov[(i, i)] += lambda;
        }
    }
    let nuclear = cov.svd(false, false).singular_values.iter().sum();
    (nuclear, shrink)
}

fn certified_squared<T: Scalar>(net: &NetworkSpec<T>, coloring: &Filter<T>) -> Result<f64> {
    let composite = prepend_coloring(net, coloring);
    Ok(certify(&composite, &SpectralOptions::default())?.squared().to_f64().unwrap())
}

fn report_from_features<T: Scalar>(
    net: &NetworkSpec<T>,
    class1: &ClassModel<T>,
    class2: &ClassModel<T>,
    feats1: &[Vec<f64>],
    feats2: &[Vec<f64>],
) -> Result<DiscriminantReport> {
    let d = feats1[0].len();
    if d == 0 {
        return Err(Error::Validation(
            "the network emits no features, so the separation scores are undefined".into(),
        ));
    }
    let m1 = column_mean(feats1);
    let m2 = column_mean(feats2);
    let mean_gap_squared: f64 = m1.iter().zip(&m2).map(|(a, b)| (a - b) * (a - b)).sum();
    let (nn1, sh1) = covariance_nuclear_norm(feats1, &m1);
    let (nn2, sh2) = covariance_nuclear_norm(feats2, &m2);
    if nn1 + nn2 <= 0.0 {
        return Err(Error::Validation(
            "degenerate classes: both feature covariances vanish".into(),
        ));
    }
    let l1 = certified_squared(net, &class1.coloring)?;
    let l2 = certified_squared(net, &class2.coloring)?;
    if l1 + l2 <= 0.0 {
        return Err(Error::Validation(
            "degenerate network: both certified bounds vanish".into(),
        ));
    }
    let s = mean_gap_squared / (nn1 + nn2);
    let s_lip = mean_gap_squared / (l1 + l2);
    Ok(DiscriminantReport {
        mean_gap_squared,
        feature_means: [m1, m2],
        nuclear_norms: [nn1, nn2],
        lipschitz_bounds: [l1, l2],
        shrinkage: [sh1, sh2],
        samples: feats1.len(),
        s,
        s_lip,
    })
}

/// Draws `n` class samples on a dedicated RNG lane; draw `i` of lane `l`
/// always reads stream `(l << 42) | i`, so batches are reproducible and
/// lanes never collide.
fn draw_inputs<T: Scalar>(
    class: &ClassModel<T>,
    n: usize,
    seed: u64,
    lane: u64,
) -> Result<Vec<Signal<T>>> {
    (0..n)
        .into_par_iter()
        .map(|i| class.sample(&mut rng_stream(seed, (lane << 42) | i as u64)))
        .collect()
}

fn forward_features<T: Scalar>(
    net: &NetworkSpec<T>,
    inputs: &[Signal<T>],
) -> Result<Vec<Vec<f64>>> {
    inputs
        .iter()
        .map(|x| Ok(forward(net, x)?.flatten().iter().map(|v| v.to_f64().unwrap()).collect()))
        .collect()
}

/// Estimates both separation scores of two classes through a network from
/// `n` feature samples per class (classes draw on RNG lanes 0 and 1 of
/// `seed`).
pub fn discriminant<T: Scalar>(
    net: &NetworkSpec<T>,
    class1: &ClassModel<T>,
    class2: &ClassModel<T>,
    n: usize,
    seed: u64,
) -> Result<DiscriminantReport> {
    net.validate()?;
    class1.validate(&net.input_shape)?;
    class2.validate(&net.input_shape)?;
    if n < 2 {
        return Err(Error::Validation("need at least two samples per class".into()));
    }
    let feats1 = forward_features(net, &draw_inputs(class1, n, seed, 0)?)?;
    let feats2 = forward_features(net, &draw_inputs(class2, n, seed, 1)?)?;
    report_from_features(net, class1, class2, &feats1, &feats2)
}

/// One network's scores and nearest-mean test error.
#[derive(Clone, Debug, Serialize)]
pub struct TrendRow {
    /// Index into the input network list.
    pub net: usize,
    /// Raw separation score.
    pub s: f64,
    /// Certified separation score.
    pub s_lip: f64,
    /// Nearest-feature-mean test error over both classes.
    pub error: f64,
}

/// Scores, errors, and their rank correlations over a network family.
#[derive(Clone, Debug, Serialize)]
pub struct TrendTable {
    /// One row per network that produced well-defined scores.
    pub rows: Vec<TrendRow>,
    /// Networks excluded from the correlation, with the reason.
    pub excluded: Vec<(usize, String)>,
    /// Spearman rank correlation between `s` and `error`.
    pub spearman_s: Option<f64>,
    /// Spearman rank correlation between `s_lip` and `error`.
    pub spearman_s_lip: Option<f64>,
}

fn nearest_mean(feature: &[f64], means: [&[f64]; 2]) -> usize {
    let dist = |m: &[f64]| -> f64 {
        feature.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    // Strictly smaller wins; ties go to the first class.
    usize::from(dist(means[1]) < dist(means[0]))
}

/// Runs the error-versus-separation experiment: every network sees the
/// same class draws (`n_train` per class to fit feature means and
/// estimate scores, `n_test` per class to measure nearest-mean error),
/// and the table reports per-network rows plus the Spearman rank
/// correlation of each score with the error. Sharing draws across
/// networks removes sampling noise from the comparison; networks whose
/// scores are undefined (no features, vanishing denominators, mismatched
/// grids) are excluded with the reason rather than failing the batch.
pub fn error_vs_discriminant<T: Scalar>(
    nets: &[NetworkSpec<T>],
    class1: &ClassModel<T>,
    class2: &ClassModel<T>,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<TrendTable> {
    if nets.len() < 2 {
        return Err(Error::Validation("need at least two networks to correlate".into()));
    }
    if n_train < 2 || n_test < 1 {
        return Err(Error::Validation(
            "need at least two training and one test sample per class".into(),
        ));
    }
    let Some(shape) = nets
        .iter()
        .map(|n| n.input_shape.clone())
        .find(|s| class1.mean.shape() == &s[..])
    else {
        return Err(Error::Validation("no network matches the class grid".into()));
    };
    class1.validate(&shape)?;
    class2.validate(&shape)?;
    // Training lanes 0/1, test lanes 2/3: shared by every network.
    let train1 = draw_inputs(class1, n_train, seed, 0)?;
    let train2 = draw_inputs(class2, n_train, seed, 1)?;
    let test1 = draw_inputs(class1, n_test, seed, 2)?;
    let test2 = draw_inputs(class2, n_test, seed, 3)?;

    let outcomes: Vec<(usize, Result<TrendRow>)> = nets
        .par_iter()
        .enumerate()
        .map(|(i, net)| {
            let run = || -> Result<TrendRow> {
                net.validate()?;
                class1.validate(&net.input_shape)?;
                class2.validate(&net.input_shape)?;
                let feats1 = forward_features(net, &train1)?;
                let feats2 = forward_features(net, &train2)?;
                let report = report_from_features(net, class1, class2, &feats1, &feats2)?;
                let means = [&report.feature_means[0][..], &report.feature_means[1][..]];
                let mut wrong = 0usize;
                for f in forward_features(net, &test1)? {
                    wrong += usize::from(nearest_mean(&f, means) != 0);
                }
                for f in forward_features(net, &test2)? {
                    wrong += usize::from(nearest_mean(&f, means) != 1);
                }
                let error = wrong as f64 / (2 * n_test) as f64;
                Ok(TrendRow { net: i, s: report.s, s_lip: report.s_lip, error })
            };
            (i, run())
        })
        .collect();

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => excluded.push((i, e.to_string())),
        }
    }
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let s_lip: Vec<f64> = rows.iter().map(|r| r.s_lip).collect();
    let err: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let spearman_s = spearman(&s, &err);
    let spearman_s_lip = spearman(&s_lip, &err);
    Ok(TrendTable { rows, excluded, spearman_s, spearman_s_lip })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rng_from_seed;
    use crate::Real;
    use approx::assert_abs_diff_eq;

    fn taps(vals: &[f64]) -> Filter<Real> {
        Filter::Taps {
            taps: Signal::from_vec(vec![vals.len()], vals.to_vec()).unwrap(),
            offset: vec![0],
        }
    }

    fn pooling_net(n: usize, gain: f64) -> NetworkSpec<Real> {
        NetworkSpec {
            input_shape: vec![n],
            domain: Domain::Discrete,
            layers: vec![LayerSpec {
                pooling: vec![Some(taps(&[gain]))],
                feature_taps: vec![true],
                filters: vec![],
                merges: vec![],
            }],
        }
    }

    fn mean_signal(vals: &[f64]) -> Signal<Real> {
        Signal::from_vec(vec![vals.len()], vals.to_vec()).unwrap()
    }

    #[test]
    fn identity_net_with_white_classes_recovers_the_closed_form() {
        // Feature space is the input itself: S → ‖Δμ‖²/(2·D) because each
        // white covariance is the identity with nuclear norm D.
        let net = pooling_net(4, 1.0);
        let c1 = ClassModel::white("a", mean_signal(&[2.0, 0.0, 0.0, 0.0]));
        let c2 = ClassModel::white("b", mean_signal(&[0.0, 2.0, 0.0, 0.0]));
        let report = discriminant(&net, &c1, &c2, 4000, 7).unwrap();
        // ‖Δμ‖² = 8, D = 4 → S = 1. The sample estimate converges at 1/√n.
        assert_abs_diff_eq!(report.s, 1.0, epsilon = 0.08);
        assert_abs_diff_eq!(report.mean_gap_squared, 8.0, epsilon = 0.4);
        assert_abs_diff_eq!(report.nuclear_norms[0], 4.0, epsilon = 0.25);
        assert_eq!(report.shrinkage, [false, false]);
        // White coloring leaves the certified bound at the bare net's 1.
        assert_abs_diff_eq!(report.lipschitz_bounds[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.s_lip, report.mean_gap_squared / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn linear_coloring_reproduces_the_frobenius_identity() {
        // Coloring white noise by g makes the covariance the squared
        // circulant: its nuclear norm is the squared Frobenius norm
        // n·Σg² of that circulant.
        let net = pooling_net(4, 1.0);
        let coloring = taps(&[0.6, 0.8]);
        let c1 = ClassModel {
            label: "colored".into(),
            mean: mean_signal(&[0.0; 4]),
            coloring: coloring.clone(),
        };
        let c2 = ClassModel::white("white", mean_signal(&[1.0, 0.0, 0.0, 0.0]));
        let n = 6000;
        let report = discriminant(&net, &c1, &c2, n, 11).unwrap();
        let expected = 4.0 * (0.36 + 0.64);
        let rel = (report.nuclear_norms[0] - expected).abs() / expected;
        assert!(rel <= 3.0 / (n as f64).sqrt(), "relative error {rel}");
    }

    #[test]
    fn identical_classes_score_near_zero() {
        let net = pooling_net(4, 1.0);
        let c = ClassModel::white("same", mean_signal(&[1.0, -1.0, 0.5, 0.0]));
        let report = discriminant(&net, &c, &c, 2000, 3).unwrap();
        // The population gap is 0; the sample gap shrinks like D/n.
        assert!(report.mean_gap_squared < 0.05, "{report:?}");
        assert!(report.s < 0.01);
    }

    #[test]
    fn swapping_the_classes_leaves_both_scores_unchanged() {
        let net = pooling_net(4, 1.0);
        let c1 = ClassModel::white("a", mean_signal(&[2.0, 0.0, 0.0, 0.0]));
        let c2 = ClassModel {
            label: "b".into(),
            mean: mean_signal(&[0.0, 1.0, 0.0, 0.0]),
            coloring: taps(&[0.5, 0.5]),
        };
        let mut rng = rng_from_seed(5);
        let feats1 = forward_features(
            &net,
            &(0..64).map(|_| c1.sample(&mut rng).unwrap()).collect::<Vec<_>>(),
        )
        .unwrap();
        let feats2 = forward_features(
            &net,
            &(0..64).map(|_| c2.sample(&mut rng).unwrap()).collect::<Vec<_>>(),
        )
        .unwrap();
        let fwd = report_from_features(&net, &c1, &c2, &feats1, &feats2).unwrap();
        let rev = report_from_features(&net, &c2, &c1, &feats2, &feats1).unwrap();
        assert_abs_diff_eq!(fwd.s, rev.s, epsilon = 1e-12);
        assert_abs_diff_eq!(fwd.s_lip, rev.s_lip, epsilon = 1e-12);
    }

    #[test]
    fn global_feature_scaling_cancels_in_scores_and_decisions() {
        // The ×2 net scales every feature, so numerator and denominators
        // scale together and nearest-mean decisions are unchanged.
        let nets = [pooling_net(4, 1.0), pooling_net(4, 2.0)];
        let c1 = ClassModel::white("a", mean_signal(&[1.5, 0.0, 0.0, 0.0]));
        let c2 = ClassModel::white("b", mean_signal(&[0.0, 1.5, 0.0, 0.0]));
        let table = error_vs_discriminant(&nets, &c1, &c2, 48, 48, 17).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(table.excluded.is_empty());
        let (a, b) = (&table.rows[0], &table.rows[1]);
        assert_abs_diff_eq!(a.s, b.s, epsilon = 1e-9);
        assert_abs_diff_eq!(a.s_lip, b.s_lip, epsilon = 1e-9);
        assert_eq!(a.error, b.error);
        // Identical scores across the two nets leave no rank variance.
        assert!(table.spearman_s.is_none());
    }

    #[test]
    fn row_scores_match_the_standalone_estimate() {
        let nets = [pooling_net(4, 1.0), pooling_net(4, 2.0)];
        let c1 = ClassModel::white("a", mean_signal(&[1.0, 0.0, 0.0, 0.0]));
        let c2 = ClassModel::white("b", mean_signal(&[0.0, 1.0, 0.0, 0.0]));
        let table = error_vs_discriminant(&nets, &c1, &c2, 32, 8, 23).unwrap();
        let standalone = discriminant(&nets[0], &c1, &c2, 32, 23).unwrap();
        assert_abs_diff_eq!(table.rows[0].s, standalone.s, epsilon = 1e-12);
        assert_abs_diff_eq!(table.rows[0].s_lip, standalone.s_lip, epsilon = 1e-12);
    }

    #[test]
    fn prepended_colorings_move_the_certified_bound_monotonically() {
        let net = pooling_net(8, 1.0);
        let bare = certify(&net, &SpectralOptions::default()).unwrap().squared();
        assert_abs_diff_eq!(bare, 1.0, epsilon = 1e-12);
        // Peak response 2 ≥ 1 raises the bound; 0.6 ≤ 1 lowers it.
        let loud = certified_squared(&net, &taps(&[1.0, 1.0])).unwrap();
        let quiet = certified_squared(&net, &taps(&[0.3, 0.3])).unwrap();
        let id = certified_squared(&net, &taps(&[1.0])).unwrap();
        assert!(loud >= bare - 1e-12, "loud {loud}");
        assert_abs_diff_eq!(loud, 4.0, epsilon = 1e-9);
        assert!(quiet <= bare + 1e-12, "quiet {quiet}");
        assert_abs_diff_eq!(quiet, 0.36, epsilon = 1e-9);
        assert_abs_diff_eq!(id, bare, epsilon = 1e-12);
    }

    #[test]
    fn prepending_the_identity_preserves_features_and_shifts_skips() {
        // A net with an absolute-tier skip: prepending must move the
        // reference from tier 0 to tier 1 and leave the feature map
        // untouched.
        let mut net = pooling_net(8, 1.0);
        net.layers.insert(
            0,
            LayerSpec {
                pooling: vec![Some(taps(&[1.0]))],
                feature_taps: vec![true],
                filters: vec![FilterAttachment {
                    filter: taps(&[0.5, -0.25]),
                    source: SourceRef::Tier { tier: 0, node: 0 },
                    dilation: Dilation::identity(1),
                    sigma: Nonlinearity::Abs,
                }],
                merges: vec![MergeSpec { members: vec![0], kind: MergeKind::Sum }],
            },
        );
        let prepended = prepend_coloring(&net, &taps(&[1.0]));
        assert_eq!(
            prepended.layers[1].filters[0].source,
            SourceRef::Tier { tier: 1, node: 0 }
        );
        let mut rng = rng_from_seed(29);
        let x = Signal::<Real>::gaussian(&[8], &mut rng);
        let base = forward(&net, &x).unwrap().flatten();
        let lifted = forward(&prepended, &x).unwrap().flatten();
        assert_eq!(base.len(), lifted.len());
        for (a, b) in base.iter().zip(&lifted) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_networks_are_excluded_with_a_warning() {
        // The zero-gain net collapses every feature to zero (vanishing
        // covariances and gap) and the third net is structurally invalid;
        // both land in `excluded` with their reasons, and the lone
        // remaining row cannot carry a correlation.
        let invalid = NetworkSpec {
            input_shape: vec![4],
            domain: Domain::Discrete,
            layers: vec![LayerSpec {
                pooling: vec![None],
                feature_taps: vec![false],
                filters: vec![],
                merges: vec![],
            }],
        };
        let nets = [pooling_net(4, 1.0), pooling_net(4, 0.0), invalid];
        let c1 = ClassModel::white("a", mean_signal(&[1.0, 0.0, 0.0, 0.0]));
        let c2 = ClassModel::white("b", mean_signal(&[0.0, 1.0, 0.0, 0.0]));
        let table = error_vs_discriminant(&nets, &c1, &c2, 16, 4, 3).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].net, 0);
        assert_eq!(table.excluded.len(), 2);
        assert_eq!(table.excluded[0].0, 1);
        assert!(
            table.excluded[0].1.contains("degenerate classes"),
            "{}",
            table.excluded[0].1
        );
        assert_eq!(table.excluded[1].0, 2);
        assert!(table.spearman_s.is_none());
    }

    #[test]
    fn class_models_parse_from_json() {
        let text = r#"{
            "label": "bright",
            "mean": [1.0, 2.0, 3.0, 4.0],
            "coloring": {"taps": [0.5, 0.5], "offset": [-1]}
        }"#;
        let model = class_model_from_json::<Real>(text, None).unwrap();
        assert_eq!(model.label, "bright");
        assert_eq!(model.mean.shape(), &[4]);
        let Filter::Taps { taps, offset } = &model.coloring else { panic!("taps expected") };
        assert_eq!(taps.data(), &[0.5, 0.5]);
        assert_eq!(offset, &[-1]);

        // The coloring defaults to the identity stencil.
        let plain = class_model_from_json::<Real>(r#"{"mean": [[1.0, 0.0], [0.0, 1.0]]}"#, None)
            .unwrap();
        assert_eq!(plain.label, "class");
        assert_eq!(plain.mean.shape(), &[2, 2]);
        assert_eq!(plain.coloring, Filter::identity(Domain::Discrete, 2));

        assert!(class_model_from_json::<Real>("[1, 2]", None).is_err());
        assert!(class_model_from_json::<Real>(r#"{"label": "x"}"#, None).is_err());
        assert!(class_model_from_json::<Real>(r#"{"mean": [1.0], "extra": 1}"#, None).is_err());
    }

    #[test]
    fn class_validation_catches_mismatches() {
        let c = ClassModel::white("a", mean_signal(&[1.0, 0.0]));
        assert!(c.validate(&[2]).is_ok());
        assert!(c.validate(&[4]).is_err());
        let wide = ClassModel {
            label: "wide".into(),
            mean: mean_signal(&[1.0, 0.0]),
            coloring: taps(&[0.1, 0.2, 0.3]),
        };
        assert!(wide.validate(&[2]).is_err());
    }
}
