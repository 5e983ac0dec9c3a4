//! Stationary Gaussian processes and Monte-Carlo verification harnesses.
//!
//! A circular Gaussian process is strictly stationary exactly when its
//! spectral coefficients are independent across bins, so [`sample_sss`]
//! synthesizes draws in the frequency domain: bin `k` gets an independent
//! complex Gaussian with power `N·S(k)`, Hermitian symmetry
//! `X̂(−k) = conj X̂(k)` makes the signal real, and the per-sample variance
//! comes out as the mean spectral power `(1/N)·Σ_k S(k)` at *every*
//! position.
//!
//! On top of the sampler sit the verification harnesses:
//!
//! * [`stochastic_bound_check`] — for two independent stationary inputs,
//!   the expected squared feature gap never exceeds the certified squared
//!   bound times the expected squared input gap. Expectations of squared
//!   grid norms are per-sample second moments times the grid size, which
//!   is the normalization that makes both sides comparable.
//! * [`feature_stationarity`] and [`stationarity_scan`] — moment
//!   shift-invariance diagnostics for feature outputs and raw draws.
//! * [`dilation_counterexample`] — why stationarity arguments need
//!   resampling-free networks: summing a random-phase tone with a
//!   time-scaled copy of itself produces variance that oscillates with
//!   position.
//! * [`concentration_profile`] — the feature norm concentrates in a thin
//!   shell around its median, with sub-Gaussian tails whose width is the
//!   certified squared bound times the expected squared input norm.
//! * [`spectrum_transfer_check`] — filtering multiplies the spectrum by
//!   the filter's squared frequency response.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fft::{dft, idft_real, tap_spectrum};
use crate::forward::{conv_circular, forward};
use crate::netspec::{Domain, Filter, NetworkSpec};
use crate::signal::{next_index, strides_of, Signal};
use crate::util::{mean, rng_stream, sample_variance};
use crate::{Error, Result, Scalar};

/// Spectral density of a circular stationary Gaussian process: `S(k)` is
/// the power of bin `k`, and the per-sample variance is the mean power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spectrum {
    /// White noise: every bin carries `variance`.
    Flat { variance: f64 },
    /// Explicit per-bin power, linear-index order over the grid.
    Bins { values: Vec<f64> },
    /// All power on the conjugate pair `±freq` (one-dimensional): the
    /// Gaussian analogue of a random-phase cosine with the given
    /// per-sample variance.
    CosinePair { freq: usize, variance: f64 },
}

impl Spectrum {
    /// Materializes per-bin power for a grid, validating shape and range.
    pub fn bins(&self, shape: &[usize]) -> Result<Vec<f64>> {
        let n: usize = shape.iter().product();
        let values = match self {
            Spectrum::Flat { variance } => {
                if !variance.is_finite() || *variance < 0.0 {
                    return Err(Error::Validation(
                        "white-noise variance must be finite and nonnegative".into(),
                    ));
                }
                vec![*variance; n]
            }
            Spectrum::Bins { values } => {
                if values.len() != n {
                    return Err(Error::Validation(format!(
                        "spectrum has {} bins but the grid holds {n} samples",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Validation(
                        "spectral powers must be finite and nonnegative".into(),
                    ));
                }
                values.clone()
            }
            Spectrum::CosinePair { freq, variance } => {
                if shape.len() != 1 {
                    return Err(Error::Validation(
                        "cosine-pair spectra are one-dimensional".into(),
                    ));
                }
                if !variance.is_finite() || *variance < 0.0 {
                    return Err(Error::Validation(
                        "cosine-pair variance must be finite and nonnegative".into(),
                    ));
                }
                if *freq >= n {
                    return Err(Error::Validation(format!(
                        "cosine frequency {freq} outside the {n}-bin grid"
                    )));
                }
                let mut values = vec![0.0; n];
                // Self-conjugate frequencies (0 or n/2) receive both halves.
                values[*freq] += n as f64 * variance / 2.0;
                values[(n - freq) % n] += n as f64 * variance / 2.0;
                values
            }
        };
        Ok(values)
    }
}

/// A stationary Gaussian input process: grid, spectrum, and RNG seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    /// Extents of the sampling grid.
    pub shape: Vec<usize>,
    /// Power per DFT bin.
    pub spectrum: Spectrum,
    /// Seed of the counter-based generator; draw `i` reads stream `i`.
    #[serde(default)]
    pub seed: u64,
}

impl ProcessConfig {
    /// Per-bin power over this config's grid.
    pub fn bins(&self) -> Result<Vec<f64>> {
        self.spectrum.bins(&self.shape)
    }

    /// Expected squared grid norm `E‖X‖² = Σ_k S(k)` — grid size times
    /// the per-sample variance.
    pub fn expected_norm_squared(&self) -> Result<f64> {
        Ok(self.bins()?.iter().sum())
    }
}

/// Linear index of the Hermitian partner `(-i) mod shape`, axis-wise.
fn conjugate_index(idx: &[usize], shape: &[usize], strides: &[usize]) -> usize {
    idx.iter()
        .zip(shape)
        .zip(strides)
        .map(|((&i, &n), &s)| ((n - i) % n) * s)
        .sum()
}

/// Draws one sample path of the stationary Gaussian process with the
/// given spectrum.
///
/// Bins are visited in ascending linear-index order; each unset bin draws
/// either one real Gaussian (self-conjugate bins) or an independent
/// complex Gaussian whose conjugate fills the partner bin. The fixed
/// order makes sampling deterministic in the RNG stream.
pub fn draw_sss<T: Scalar, R: Rng + ?Sized>(
    shape: &[usize],
    spectrum: &Spectrum,
    rng: &mut R,
) -> Result<Signal<T>> {
    let bins = spectrum.bins(shape)?;
    let n: usize = shape.iter().product();
    let n_f = T::c(n as f64);
    let strides = strides_of(shape);
    let mut coeff = vec![Complex::new(T::zero(), T::zero()); n];
    let mut set = vec![false; n];
    let mut idx = vec![0usize; shape.len()];
    let mut lin = 0usize;
    loop {
        if !set[lin] {
            let conj = conjugate_index(&idx, shape, &strides);
            let power = n_f * T::c(bins[lin]);
            if conj == lin {
                coeff[lin] = Complex::new(T::standard_normal(rng) * power.sqrt(), T::zero());
            } else {
                let half = (power / T::c(2.0)).sqrt();
                let re = T::standard_normal(rng) * half;
                let im = T::standard_normal(rng) * half;
                coeff[lin] = Complex::new(re, im);
                coeff[conj] = Complex::new(re, -im);
                set[conj] = true;
            }
            set[lin] = true;
        }
        lin += 1;
        if !next_index(&mut idx, shape) {
            break;
        }
    }
    Ok(idft_real(shape, coeff))
}

/// Draws `n` independent realizations of the configured process; draw `i`
/// always reads RNG stream `i` of the config's seed, so any prefix of a
/// larger batch reproduces the smaller one.
pub fn sample_sss<T: Scalar>(cfg: &ProcessConfig, n: usize) -> Result<Vec<Signal<T>>> {
    cfg.bins()?;
    (0..n)
        .into_par_iter()
        .map(|i| draw_sss(&cfg.shape, &cfg.spectrum, &mut rng_stream(cfg.seed, i as u64)))
        .collect()
}

fn has_resampling<T: Scalar>(net: &NetworkSpec<T>) -> bool {
    net.layers.iter().flat_map(|l| &l.filters).any(|att| !att.dilation.is_identity())
}

fn require_process_net<T: Scalar>(net: &NetworkSpec<T>, cfg: &ProcessConfig) -> Result<()> {
    if net.domain != Domain::Discrete {
        return Err(Error::Unsupported("process checks need a discrete network".into()));
    }
    if net.input_shape != cfg.shape {
        return Err(Error::Validation(format!(
            "process grid {:?} does not match the network input {:?}",
            cfg.shape, net.input_shape
        )));
    }
    net.validate()?;
    Ok(())
}

/// One Monte-Carlo estimate against its certified bound.
#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloResult {
    /// Empirical mean of the bounded quantity.
    pub estimate: f64,
    /// Standard error of the paired difference `estimate − bound_value`.
    pub standard_error: f64,
    /// Number of Monte-Carlo draws behind the estimate.
    pub sample_count: usize,
    /// Certified value the estimate is compared against.
    pub bound_value: f64,
    /// `estimate ≤ bound_value + 3·standard_error`.
    pub satisfied: bool,
}

/// Draws independent stationary inputs `X ~ cfg_x` and `Y ~ cfg_y` and
/// checks the second-moment contraction
/// `E‖ΦX − ΦY‖² ≤ lp_bound · E‖X − Y‖²` within three standard errors of
/// the paired difference. `lp_bound` is the certified chain-program
/// optimum, i.e. the squared Lipschitz constant.
///
/// Stationarity survives every stride-free layer, which is what makes the
/// two expectations comparable grid norms; subsampling re-indexes the
/// lattice, so resampling networks are rejected.
///
/// The two inputs stay independent even when the configs share a seed:
/// pair `i` reads streams `2i` (for `X`) and `2i+1` (for `Y`).
pub fn stochastic_bound_check<T: Scalar>(
    net: &NetworkSpec<T>,
    cfg_x: &ProcessConfig,
    cfg_y: &ProcessConfig,
    lp_bound: f64,
    runs: usize,
) -> Result<MonteCarloResult> {
    require_process_net(net, cfg_x)?;
    if cfg_y.shape != cfg_x.shape {
        return Err(Error::Validation("the two processes must share one grid".into()));
    }
    cfg_y.bins()?;
    if has_resampling(net) {
        return Err(Error::Unsupported(
            "subsampled branches are no longer stationary once merged; \
             the expectation check needs a resampling-free network"
                .into(),
        ));
    }
    if !(lp_bound.is_finite() && lp_bound >= 0.0) {
        return Err(Error::Validation("the certified bound must be finite and nonnegative".into()));
    }
    if runs < 2 {
        return Err(Error::Validation("need at least two paired draws".into()));
    }

    let pairs: Vec<(f64, f64)> = (0..runs)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut rng_x = rng_stream(cfg_x.seed, 2 * i as u64);
            let mut rng_y = rng_stream(cfg_y.seed, 2 * i as u64 + 1);
            let x = draw_sss::<T, _>(&cfg_x.shape, &cfg_x.spectrum, &mut rng_x)?;
            let y = draw_sss::<T, _>(&cfg_y.shape, &cfg_y.spectrum, &mut rng_y)?;
            let input = x.sub(&y)?.norm_squared().to_f64().unwrap();
            let feature =
                forward(net, &x)?.sub(&forward(net, &y)?)?.norm_squared().to_f64().unwrap();
            Ok((input, feature))
        })
        .collect::<Result<_>>()?;

    let lhs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rhs: Vec<f64> = pairs.iter().map(|p| lp_bound * p.0).collect();
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
    let estimate = mean(&lhs);
    let bound_value = mean(&rhs);
    let standard_error = (sample_variance(&diff) / runs as f64).sqrt();
    Ok(MonteCarloResult {
        estimate,
        standard_error,
        sample_count: runs,
        bound_value,
        satisfied: estimate <= bound_value + 3.0 * standard_error,
    })
}

/// Per-position first/second-moment homogeneity report for raw draws.
#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    /// Positions whose mean deviates by more than four standard errors
    /// from the cross-position average.
    pub mean_flags: Vec<usize>,
    /// Positions whose second moment deviates by more than four standard
    /// errors from the cross-position average.
    pub moment_flags: Vec<usize>,
    /// Largest mean z-score seen.
    pub max_mean_z: f64,
    /// Largest second-moment z-score seen.
    pub max_moment_z: f64,
    /// Whether any position was flagged.
    pub flagged: bool,
}

fn homogeneity_flags(per_position: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let position_means: Vec<f64> = per_position.iter().map(|v| mean(v)).collect();
    let grand = mean(&position_means);
    let mut flags = Vec::new();
    let mut max_z: f64 = 0.0;
    for (i, vals) in per_position.iter().enumerate() {
        let se = (sample_variance(vals) / vals.len() as f64).sqrt();
        let dev = (position_means[i] - grand).abs();
        let z = if se > 0.0 {
            dev / se
        } else if dev > 1e-9 * (1.0 + grand.abs()) {
            f64::INFINITY
        } else {
            0.0
        };
        if z > 4.0 {
            flags.push(i);
        }
        max_z = max_z.max(z);
    }
    (flags, max_z)
}

/// Tests raw draws of a process for positionwise homogeneity: a
/// stationary process has identical mean and second moment at every
/// position, so a position whose empirical moments sit more than four
/// standard errors from the cross-position average is flagged.
pub fn stationarity_scan<T: Scalar>(draws: &[Signal<T>]) -> Result<StationarityReport> {
    let Some(first) = draws.first() else {
        return Err(Error::Validation("need at least one draw".into()));
    };
    if draws.len() < 8 {
        return Err(Error::Validation("need at least eight draws for stable errors".into()));
    }
    if draws.iter().any(|d| d.shape() != first.shape()) {
        return Err(Error::Validation("draws must share one shape".into()));
    }
    let n = first.len();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.len()); n];
    let mut squares: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.len()); n];
    for d in draws {
        for (i, &v) in d.data().iter().enumerate() {
            let v = v.to_f64().unwrap();
            values[i].push(v);
            squares[i].push(v * v);
        }
    }
    let (mean_flags, max_mean_z) = homogeneity_flags(&values);
    let (moment_flags, max_moment_z) = homogeneity_flags(&squares);
    let flagged = !mean_flags.is_empty() || !moment_flags.is_empty();
    Ok(StationarityReport { mean_flags, moment_flags, max_mean_z, max_moment_z, flagged })
}

/// One flagged moment deviation in a feature output.
#[derive(Clone, Debug, Serialize)]
pub struct StationarityFlag {
    /// Layer the feature came from.
    pub layer: usize,
    /// Node within its tier.
    pub node: usize,
    /// The cyclic shift whose comparison failed.
    pub shift: Vec<i64>,
    /// Linear position `t` of the failing pair `(t, t + shift)`.
    pub position: usize,
    /// Whether the failing moment was the mean (else the second moment).
    pub first_moment: bool,
    /// The z-score of the paired difference.
    pub z: f64,
}

/// Shift-invariance report over a network's feature outputs.
#[derive(Clone, Debug, Serialize)]
pub struct FeatureStationarity {
    /// Draws pushed through the network.
    pub sample_count: usize,
    /// Every paired comparison beyond four standard errors.
    pub flags: Vec<StationarityFlag>,
    /// Largest z-score over all comparisons.
    pub max_z: f64,
    /// Whether any comparison was flagged.
    pub flagged: bool,
}

/// Pushes `n` stationary draws through the network and compares the
/// empirical first and second moments of every feature output between
/// positions `t` and `t + shift` (cyclically, per shift vector).
/// A paired difference beyond four standard errors is flagged.
///
/// For stride-free networks the feature outputs inherit stationarity, so
/// nothing should be flagged beyond the multiple-comparison false-alarm
/// rate; an empty `shifts` defaults to the unit shift along each axis.
pub fn feature_stationarity<T: Scalar>(
    net: &NetworkSpec<T>,
    cfg: &ProcessConfig,
    n: usize,
    shifts: &[Vec<i64>],
) -> Result<FeatureStationarity> {
    require_process_net(net, cfg)?;
    if n < 8 {
        return Err(Error::Validation("need at least eight draws for stable errors".into()));
    }
    let rank = cfg.shape.len();
    let default_shifts: Vec<Vec<i64>>;
    let shifts = if shifts.is_empty() {
        default_shifts =
            (0..rank).map(|a| (0..rank).map(|b| i64::from(a == b)).collect()).collect();
        &default_shifts
    } else {
        shifts
    };
    if shifts.iter().any(|s| s.len() != rank) {
        return Err(Error::Validation(format!("shift vectors must have {rank} axes")));
    }

    let bundles = (0..n)
        .into_par_iter()
        .map(|i| {
            let x =
                draw_sss::<T, _>(&cfg.shape, &cfg.spectrum, &mut rng_stream(cfg.seed, i as u64))?;
            forward(net, &x)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut flags = Vec::new();
    let mut max_z: f64 = 0.0;
    let entries = bundles[0].entries.len();
    for e in 0..entries {
        let layer = bundles[0].entries[e].layer;
        let node = bundles[0].entries[e].node;
        let shape = bundles[0].entries[e].signal.shape().to_vec();
        let strides = strides_of(&shape);
        let len: usize = shape.iter().product();
        // values[t][i] = draw i's sample at position t.
        let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(n); len];
        for b in &bundles {
            for (t, &v) in b.entries[e].signal.data().iter().enumerate() {
                values[t].push(v.to_f64().unwrap());
            }
        }
        for shift in shifts {
            let mut idx = vec![0usize; shape.len()];
            let mut t = 0usize;
            loop {
                let shifted: usize = idx
                    .iter()
                    .zip(&shape)
                    .zip(&strides)
                    .zip(shift)
                    .map(|(((&i, &e), &s), &d)| ((i as i64 + d).rem_euclid(e as i64) as usize) * s)
                    .sum();
                for first_moment in [true, false] {
                    let diffs: Vec<f64> = (0..n)
                        .map(|i| {
                            let (a, b) = (values[t][i], values[shifted][i]);
                            if first_moment {
                                a - b
                            } else {
                                a * a - b * b
                            }
                        })
                        .collect();
                    let dev = mean(&diffs).abs();
                    let se = (sample_variance(&diffs) / n as f64).sqrt();
                    let z = if se > 0.0 {
                        dev / se
                    } else if dev > 1e-9 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                    max_z = max_z.max(z);
                    if z > 4.0 {
                        flags.push(StationarityFlag {
                            layer,
                            node,
                            shift: shift.clone(),
                            position: t,
                            first_moment,
                            z,
                        });
                    }
                }
                t += 1;
                if !next_index(&mut idx, &shape) {
                    break;
                }
            }
        }
    }
    let flagged = !flags.is_empty();
    Ok(FeatureStationarity { sample_count: n, flags, max_z, flagged })
}

/// Sums a one-dimensional signal with a time-scaled copy of itself:
/// `y(t) = x(t) + x(factor·t mod n)`. The factor must be coprime with the
/// length so the scaled copy revisits every sample exactly once.
pub fn time_scale_sum<T: Scalar>(x: &Signal<T>, factor: usize) -> Result<Signal<T>> {
    if x.shape().len() != 1 {
        return Err(Error::Validation("time scaling is one-dimensional".into()));
    }
    let n = x.len();
    if factor == 0 || gcd(factor, n) != 1 {
        return Err(Error::Validation(format!(
            "scale factor {factor} must be coprime with the length {n}"
        )));
    }
    let mut y = Signal::<T>::zeros(x.shape());
    for t in 0..n {
        y.data_mut()[t] = x.data()[t] + x.data()[(factor * t) % n];
    }
    Ok(y)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Empirical demonstration that time scaling destroys stationarity.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    /// Empirical per-sample variance of the input tone (expected 1/2).
    pub input_variance: f64,
    /// Empirical output variance at position 0 (expected 2).
    pub peak_variance: f64,
    /// Empirical output variance a quarter period in (expected 0).
    pub null_variance: f64,
    /// Three-standard-error agreement with (1/2, 2, 0).
    pub within_tolerance: bool,
    /// Positions flagged by the stationarity scan on the output.
    pub flagged_positions: usize,
}

/// Draws random-phase tones `X(t) = cos(2πt/n + θ)`, `θ` uniform — a
/// strictly stationary process with per-sample variance 1/2 — and forms
/// `Y(t) = X(t) + X(3t)`. The cross term `2·E[X(t)X(3t)] = cos(4πt/n)`
/// depends on `t` once the lattice is rescaled, so `Var Y` oscillates:
/// 2 at position 0, exactly 0 a quarter period in (`t = n/4`), where the
/// two tones cancel pathwise. The scan must flag the output, not the
/// input.
pub fn dilation_counterexample(n: usize, draws: usize, seed: u64) -> Result<CounterexampleReport> {
    if n % 4 != 0 || n < 8 {
        return Err(Error::Validation("need a length divisible by 4 (at least 8)".into()));
    }
    if draws < 16 {
        return Err(Error::Validation("need at least sixteen draws".into()));
    }
    let mut inputs = Vec::with_capacity(draws);
    let mut outputs = Vec::with_capacity(draws);
    for i in 0..draws {
        let mut rng = rng_stream(seed, i as u64);
        let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let x = Signal::from_vec(
            vec![n],
            (0..n)
                .map(|t| (std::f64::consts::TAU * t as f64 / n as f64 + theta).cos())
                .collect(),
        )?;
        outputs.push(time_scale_sum(&x, 3)?);
        inputs.push(x);
    }

    let sq_at = |set: &[Signal<f64>], pos: usize| -> Vec<f64> {
        set.iter().map(|s| s.data()[pos] * s.data()[pos]).collect()
    };
    let check = |samples: &[f64], expected: f64| -> (f64, bool) {
        let m = mean(samples);
        let se = (sample_variance(samples) / samples.len() as f64).sqrt();
        (m, (m - expected).abs() <= 3.0 * se + 1e-9)
    };
    let (input_variance, ok_in) = check(&sq_at(&inputs, 0), 0.5);
    let (peak_variance, ok_peak) = check(&sq_at(&outputs, 0), 2.0);
    let (null_variance, ok_null) = check(&sq_at(&outputs, n / 4), 0.0);
    let scan = stationarity_scan(&outputs)?;
    Ok(CounterexampleReport {
        input_variance,
        peak_variance,
        null_variance,
        within_tolerance: ok_in && ok_peak && ok_null,
        flagged_positions: scan.mean_flags.len() + scan.moment_flags.len(),
    })
}

/// Empirical shell profile of the feature norm around its median.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationProfile {
    /// Shell half-widths `t`.
    pub ts: Vec<f64>,
    /// Empirical `P(|‖ΦX − m‖ − median| > t)` per width, where `m` is the
    /// sample mean feature vector.
    pub empirical: Vec<f64>,
    /// Sub-Gaussian bound `exp(−t²/(2·σ²·lp_bound))` per width, with
    /// `σ² = E‖X‖²` from the spectrum.
    pub bound: Vec<f64>,
    /// Binomial standard error of each empirical fraction.
    pub stderr: Vec<f64>,
    /// Empirical median of `‖ΦX − m‖`.
    pub median: f64,
    /// Bootstrap standard error of the median.
    pub median_stderr: f64,
    /// Expected squared input norm used in the bound.
    pub sigma_squared: f64,
    /// `empirical ≤ bound + 3·stderr` at every width.
    pub satisfied: bool,
}

/// Measures how sharply `‖ΦX − m‖` concentrates around its median over
/// stationary draws (`m` is the sample mean feature vector) and compares
/// every shell tail against Gaussian concentration: a function whose
/// squared Lipschitz constant is `lp_bound` deviates from its median by
/// more than `t` with probability at most `exp(−t²/(2·σ²·lp_bound))`,
/// where `σ² = E‖X‖²` scales the input. The median's own uncertainty is
/// reported as a bootstrap standard error.
pub fn concentration_profile<T: Scalar>(
    net: &NetworkSpec<T>,
    cfg: &ProcessConfig,
    lp_bound: f64,
    runs: usize,
    ts: &[f64],
) -> Result<ConcentrationProfile> {
    require_process_net(net, cfg)?;
    if runs < 100 {
        return Err(Error::Validation(
            "need at least one hundred draws for a stable median".into(),
        ));
    }
    if ts.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Validation("shell widths must be finite and nonnegative".into()));
    }
    if !(lp_bound.is_finite() && lp_bound >= 0.0) {
        return Err(Error::Validation("the certified bound must be finite and nonnegative".into()));
    }
    let sigma_squared = cfg.expected_norm_squared()?;

    let features = (0..runs)
        .into_par_iter()
        .map(|i| {
            let x =
                draw_sss::<T, _>(&cfg.shape, &cfg.spectrum, &mut rng_stream(cfg.seed, i as u64))?;
            Ok(forward(net, &x)?.flatten())
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    let dim = features[0].len();
    let mut center = vec![0.0f64; dim];
    for f in &features {
        for (c, &v) in center.iter_mut().zip(f) {
            *c += v.to_f64().unwrap();
        }
    }
    for c in &mut center {
        *c /= runs as f64;
    }
    let norms: Vec<f64> = features
        .iter()
        .map(|f| {
            f.iter()
                .zip(&center)
                .map(|(&v, &c)| {
                    let d = v.to_f64().unwrap() - c;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let median_of = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = v.len();
        if k % 2 == 1 {
            v[k / 2]
        } else {
            (v[k / 2 - 1] + v[k / 2]) / 2.0
        }
    };
    let median = median_of(&mut norms.clone());
    // Bootstrap the median on a reserved stream far above the draw range.
    let boots = 200;
    let mut boot_medians = Vec::with_capacity(boots);
    let mut boot_rng = rng_stream(cfg.seed, 1 << 40);
    for _ in 0..boots {
        let mut resample: Vec<f64> =
            (0..runs).map(|_| norms[boot_rng.gen_range(0..runs)]).collect();
        boot_medians.push(median_of(&mut resample));
    }
    let median_stderr = sample_variance(&boot_medians).sqrt();

    let width = 2.0 * sigma_squared * lp_bound;
    let mut empirical = Vec::with_capacity(ts.len());
    let mut bound = Vec::with_capacity(ts.len());
    let mut stderr = Vec::with_capacity(ts.len());
    let mut satisfied = true;
    for &t in ts {
        let hits = norms.iter().filter(|&&v| (v - median).abs() > t).count();
        let p = hits as f64 / runs as f64;
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        let b = if width > 0.0 { (-t * t / width).exp() } else { f64::from(u8::from(t == 0.0)) };
        satisfied &= p <= b + 3.0 * se;
        empirical.push(p);
        bound.push(b);
        stderr.push(se);
    }
    Ok(ConcentrationProfile {
        ts: ts.to_vec(),
        empirical,
        bound,
        stderr,
        median,
        median_stderr,
        sigma_squared,
        satisfied,
    })
}

/// Empirical check that filtering multiplies a spectrum pointwise.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumTransfer {
    /// Worst relative error over the checked bins.
    pub max_rel_err: f64,
    /// Tolerance used, `5/√draws`.
    pub tol: f64,
    /// Bins carrying enough power to be compared.
    pub bins_checked: usize,
    /// `max_rel_err ≤ tol`.
    pub satisfied: bool,
}

/// Filters stationary draws and compares the output's averaged
/// periodogram against `S_in(k) · |ĝ(k)|²`, bin by bin. Per-bin
/// periodogram averages concentrate at rate `1/√draws`; five times that
/// covers the fattest (self-conjugate, chi-square) bins. Bins whose
/// expected power is negligible are skipped rather than divided by.
pub fn spectrum_transfer_check<T: Scalar>(
    filter: &Filter<T>,
    cfg: &ProcessConfig,
    draws: usize,
) -> Result<SpectrumTransfer> {
    let Filter::Taps { taps, offset } = filter else {
        return Err(Error::Unsupported("spectrum transfer needs a tap stencil".into()));
    };
    if draws < 16 {
        return Err(Error::Validation("need at least sixteen draws".into()));
    }
    let n: usize = cfg.shape.iter().product();
    let s_in = cfg.bins()?;
    let response = tap_spectrum(taps, offset, &cfg.shape)?;
    let expected: Vec<f64> = s_in
        .iter()
        .zip(&response)
        .map(|(&s, r)| {
            let re = r.re.to_f64().unwrap();
            let im = r.im.to_f64().unwrap();
            s * (re * re + im * im)
        })
        .collect();

    let periodograms: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let z =
                draw_sss::<T, _>(&cfg.shape, &cfg.spectrum, &mut rng_stream(cfg.seed, i as u64))?;
            let w = conv_circular(&z, taps, offset);
            Ok(dft(&w)
                .into_iter()
                .map(|c| {
                    let re = c.re.to_f64().unwrap();
                    let im = c.im.to_f64().unwrap();
                    (re * re + im * im) / n as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0f64; n];
    for p in &periodograms {
        for (a, &v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }

    let floor = 1e-9 * expected.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut max_rel_err = 0.0f64;
    let mut bins_checked = 0usize;
    for (a, &e) in acc.iter().zip(&expected) {
        if e <= floor {
            continue;
        }
        bins_checked += 1;
        max_rel_err = max_rel_err.max((a / draws as f64 / e - 1.0).abs());
    }
    let tol = 5.0 / (draws as f64).sqrt();
    Ok(SpectrumTransfer { max_rel_err, tol, bins_checked, satisfied: max_rel_err <= tol })
}
