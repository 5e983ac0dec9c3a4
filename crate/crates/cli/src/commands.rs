//! One function per subcommand. Each resolves its arguments into a
//! [`RunConfig`], runs the library pipeline, and emits a JSON report
//! (plus optional CSV tables for external plotting).

use crate::report::{
    cell, csv_failure, emit, ChainTolerances, GridMeta, Numerics, RunConfig, DEFAULT_SEED,
};
use clap::{value_parser, ArgGroup, Args};
use lipcert_core::bounds::{corollary_product, corollary_sumprod, solve_lipschitz_lp};
use lipcert_core::discriminant::{class_model_from_file, discriminant, error_vs_discriminant};
use lipcert_core::forward::forward;
use lipcert_core::local::{
    adversarial_search, classifier_from_json, linearize, sigma_max, LinearClassifier,
    LocalOptions,
};
use lipcert_core::netspec::{parse_network_file, read_signal_file, write_signal_file, Domain};
use lipcert_core::spectral::{layer_bounds, BoundMethod, FrequencyGrid, SpectralOptions};
use lipcert_core::stochastic::{
    concentration_profile, dilation_counterexample, stochastic_bound_check, ConcentrationProfile,
    CounterexampleReport, MonteCarloResult, ProcessConfig, Spectrum,
};
use lipcert_core::toy::build_toy_network;
use lipcert_core::util::rng_stream;
use lipcert_core::{Error, Net, Real, Result, Sig};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Seed, tolerance, and budget flags shared by the numeric subcommands.
#[derive(Args, Clone, Copy, Debug)]
pub struct NumericOpts {
    /// RNG seed; the fixed default keeps every run reproducible
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Relative tolerance of iterative estimates
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    /// Iteration budget per iterative estimate
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

impl NumericOpts {
    fn local_options(&self) -> LocalOptions {
        LocalOptions { tol: self.tol, max_iter: self.max_iter, seed: self.seed }
    }
}

impl RunConfig {
    fn numeric(self, n: &NumericOpts) -> Self {
        self.knob("tolerance", n.tol).count("max_iter", n.max_iter as u64)
    }
}

/// Spectral options from the flags, plus grid metadata for the report
/// when the network's domain needs a frequency scan.
fn spectral_options(
    net: &Net,
    numeric: &NumericOpts,
    grid_samples: Option<usize>,
) -> (SpectralOptions, Option<GridMeta>) {
    let mut opts = SpectralOptions {
        grid: None,
        tol: numeric.tol,
        max_iter: numeric.max_iter,
        seed: numeric.seed,
    };
    let mut meta = None;
    if net.domain == Domain::Continuous {
        let mut grid = FrequencyGrid::for_network(net);
        if let Some(samples) = grid_samples {
            grid.samples = samples;
        }
        meta = Some(GridMeta { band: grid.band, samples: grid.samples });
        opts.grid = Some(grid);
    }
    (opts, meta)
}

fn method_name(method: BoundMethod) -> &'static str {
    match method {
        BoundMethod::Frequency => "frequency",
        BoundMethod::Operator => "operator",
    }
}

/// Prefixes i/o failures with the path they came from; other error
/// kinds already carry their own context.
fn annotate(error: Error, path: &Path) -> Error {
    match error {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    }
}

fn load_network(path: &Path) -> Result<Net> {
    parse_network_file(path).map_err(|e| annotate(e, path))
}

fn load_signal(path: &Path) -> Result<Sig> {
    read_signal_file(path).map_err(|e| annotate(e, path))
}

fn load_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| annotate(Error::Io(e), path))
}

/// `*.ext` files of a directory in name order, with their file names.
fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>> {
    let mut files: Vec<(String, PathBuf)> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .map(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            (name, p)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!(
            "no .{ext} files under {}",
            dir.display()
        )));
    }
    Ok(files)
}

/// A squared gain bound and the constant it certifies.
#[derive(Serialize)]
struct BoundValue {
    squared: f64,
    constant: f64,
}

impl BoundValue {
    fn of(squared: f64) -> Self {
        BoundValue { squared, constant: squared.sqrt() }
    }
}

/// One layer's spectral triple in a report.
#[derive(Serialize)]
struct LayerRow {
    layer: usize,
    /// Joint squared gain: hidden outputs and features together.
    joint: f64,
    /// Hidden-path squared gain.
    hidden: f64,
    /// Feature-path squared gain.
    features: f64,
    /// How the triple was computed (`frequency` or `operator`).
    method: &'static str,
}

fn layer_rows(layers: &[lipcert_core::spectral::LayerBound<Real>]) -> Vec<LayerRow> {
    layers
        .iter()
        .map(|l| {
            let (joint, hidden, features) = l.triple.to_f64();
            LayerRow { layer: l.layer, joint, hidden, features, method: method_name(l.method) }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// bound

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Network specification (JSON)
    pub spec: PathBuf,

    /// Skip the chain program; report only the closed-form bounds
    #[arg(long)]
    pub corollaries_only: bool,

    /// Override the frequency-scan sample count (continuous domains)
    #[arg(long, value_parser = value_parser!(u64).range(2..))]
    pub grid_samples: Option<u64>,

    #[command(flatten)]
    pub numeric: NumericOpts,

    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ChainOptimum {
    squared: f64,
    constant: f64,
    /// Hidden-energy budgets at the optimum, layers 1..M-1.
    hidden_budgets: Vec<f64>,
    /// Feature energies at the optimum, layers 1..M.
    feature_energies: Vec<f64>,
    /// Simplex pivot count.
    pivots: usize,
}

#[derive(Serialize)]
struct BoundBody {
    layers: Vec<LayerRow>,
    /// Chain-program optimum (absent with --corollaries-only).
    #[serde(skip_serializing_if = "Option::is_none")]
    chain_program: Option<ChainOptimum>,
    /// Product-form closed bound.
    product: BoundValue,
    /// Sum-of-products closed bound.
    sum_product: BoundValue,
    numerics: Numerics,
}

pub fn bound(args: &BoundArgs) -> Result<()> {
    let net: Net = load_network(&args.spec)?;
    let (opts, grid) = spectral_options(&net, &args.numeric, args.grid_samples.map(|s| s as usize));
    let layers = layer_bounds(&net, &opts)?;
    let triples: Vec<_> = layers.iter().map(|l| l.triple).collect();

    let chain_program = if args.corollaries_only {
        None
    } else {
        let sol = solve_lipschitz_lp(&triples)?;
        Some(ChainOptimum {
            squared: sol.value,
            constant: sol.constant(),
            hidden_budgets: sol.y.clone(),
            feature_energies: sol.z.clone(),
            pivots: sol.iterations,
        })
    };

    let body = BoundBody {
        layers: layer_rows(&layers),
        product: BoundValue::of(corollary_product(&triples)),
        sum_product: BoundValue::of(corollary_sumprod(&triples)),
        numerics: Numerics {
            tolerance: args.numeric.tol,
            max_iter: args.numeric.max_iter,
            frequency_grid: grid,
            chain_program: (!args.corollaries_only).then(ChainTolerances::fixed),
        },
        chain_program,
    };

    let mut config = RunConfig::new("bound", args.numeric.seed, &args.out)
        .spec(&args.spec)
        .numeric(&args.numeric);
    if args.corollaries_only {
        config = config.count("corollaries_only", 1);
    }
    if let Some(s) = args.grid_samples {
        config = config.count("grid_samples", s);
    }
    emit(config, body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// bessel

#[derive(Args, Debug)]
pub struct BesselArgs {
    /// Network specification (JSON)
    pub spec: PathBuf,

    /// Override the frequency-scan sample count (continuous domains)
    #[arg(long, value_parser = value_parser!(u64).range(2..))]
    pub grid_samples: Option<u64>,

    #[command(flatten)]
    pub numeric: NumericOpts,

    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BesselBody {
    layers: Vec<LayerRow>,
    numerics: Numerics,
}

pub fn bessel(args: &BesselArgs) -> Result<()> {
    let net: Net = load_network(&args.spec)?;
    let (opts, grid) = spectral_options(&net, &args.numeric, args.grid_samples.map(|s| s as usize));
    let layers = layer_bounds(&net, &opts)?;
    let body = BesselBody {
        layers: layer_rows(&layers),
        numerics: Numerics {
            tolerance: args.numeric.tol,
            max_iter: args.numeric.max_iter,
            frequency_grid: grid,
            chain_program: None,
        },
    };
    let mut config = RunConfig::new("bessel", args.numeric.seed, &args.out)
        .spec(&args.spec)
        .numeric(&args.numeric);
    if let Some(s) = args.grid_samples {
        config = config.count("grid_samples", s);
    }
    emit(config, body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// forward

#[derive(Args, Debug)]
pub struct ForwardArgs {
    /// Network specification (JSON)
    pub spec: PathBuf,

    /// Input signal (binary sidecar format)
    pub signal: PathBuf,

    /// Directory receiving one binary payload per feature signal
    #[arg(long, default_value = "features")]
    pub out_dir: PathBuf,

    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FeatureRow {
    layer: usize,
    node: usize,
    shape: Vec<usize>,
    norm_squared: f64,
    /// Binary payload holding the feature signal.
    payload: String,
}

#[derive(Serialize)]
struct ForwardBody {
    features: Vec<FeatureRow>,
    /// Squared feature-space norm: sum of the per-feature squared norms.
    norm_squared: f64,
    norm: f64,
}

pub fn forward_cmd(args: &ForwardArgs) -> Result<()> {
    let net: Net = load_network(&args.spec)?;
    let input: Sig = load_signal(&args.signal)?;
    let bundle = forward(&net, &input)?;

    fs::create_dir_all(&args.out_dir)?;
    let mut features = Vec::with_capacity(bundle.entries.len());
    for entry in &bundle.entries {
        let payload = args
            .out_dir
            .join(format!("feature_{:02}_{:02}.sig", entry.layer, entry.node));
        write_signal_file(&payload, &entry.signal)?;
        features.push(FeatureRow {
            layer: entry.layer,
            node: entry.node,
            shape: entry.signal.shape().to_vec(),
            norm_squared: entry.signal.norm_squared(),
            payload: payload.display().to_string(),
        });
    }
    let body = ForwardBody {
        features,
        norm_squared: bundle.norm_squared(),
        norm: bundle.norm(),
    };
    let config = RunConfig::new("forward", DEFAULT_SEED, &args.out)
        .spec(&args.spec)
        .input("signal", &args.signal)
        .output("payload_dir", &args.out_dir);
    emit(config, body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// local

#[derive(Args, Debug)]
pub struct LocalArgs {
    /// Network specification (JSON)
    pub spec: PathBuf,

    /// Directory of base points (*.sig, analyzed in name order)
    #[arg(long)]
    pub samples: PathBuf,

    /// Write the per-sample table (sample, sigma_max) as CSV
    #[arg(long)]
    pub histogram: Option<PathBuf>,

    #[command(flatten)]
    pub numeric: NumericOpts,

    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct LocalRow {
    sample: String,
    /// Largest singular value of the Jacobian at this base point.
    sigma_max: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct LocalBody {
    samples: Vec<LocalRow>,
    /// Largest per-sample value: a certified lower companion to the
    /// global bound.
    max_sigma: f64,
    numerics: Numerics,
}

pub fn local(args: &LocalArgs) -> Result<()> {
    let net: Net = load_network(&args.spec)?;
    let opts = args.numeric.local_options();
    let files = files_with_extension(&args.samples, "sig")?;

    let rows: Vec<LocalRow> = files
        .par_iter()
        .map(|(name, path)| {
            let base: Sig = load_signal(path)?;
            let estimate = sigma_max(&linearize(&net, &base)?, &opts)?;
            Ok(LocalRow {
                sample: name.clone(),
                sigma_max: estimate.sigma,
                iterations: estimate.iterations,
                converged: estimate.converged,
            })
        })
        .collect::<Result<_>>()?;

    if let Some(path) = &args.histogram {
        let mut w = csv::Writer::from_path(path).map_err(csv_failure)?;
        w.write_record(["sample", "sigma_max"]).map_err(csv_failure)?;
        for row in &rows {
            w.write_record([row.sample.as_str(), &row.sigma_max.to_string()])
                .map_err(csv_failure)?;
        }
        w.flush()?;
    }

    let max_sigma = rows.iter().map(|r| r.sigma_max).fold(0.0, f64::max);
    let body = LocalBody {
        samples: rows,
        max_sigma,
        numerics: Numerics {
            tolerance: args.numeric.tol,
            max_iter: args.numeric.max_iter,
            frequency_grid: None,
            chain_program: None,
        },
    };
    let mut config = RunConfig::new("local", args.numeric.seed, &args.out)
        .spec(&args.spec)
        .input("samples", &args.samples)
        .numeric(&args.numeric);
    if let Some(path) = &args.histogram {
        config = config.output("histogram", path);
    }
    emit(config, body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// adversarial

#[derive(Args, Debug)]
pub struct AdversarialArgs {
    /// Network specification (JSON)
    pub spec: PathBuf,

    /// Linear read-out weights (JSON {"weights": [[..], ..], "bias": [..]})
    #[arg(long)]
    pub classifier: PathBuf,

    /// Directory of base points (*.sig); omitted: Gaussian draws
    #[arg(long)]
    pub samples: Option<PathBuf>,

    /// Number of Gaussian base points when --samples is omitted
    #[arg(long, default_value_t = 8, value_parser = value_parser!(u64).range(1..))]
    pub n: u64,

    /// Random comparison directions per base point
    #[arg(long, default_value_t = 200, value_parser = value_parser!(u64).range(1..))]
    pub directions: u64,

    /// Largest step searched along any direction
    #[arg(long, default_value_t = 10.0)]
    pub h_max: f64,

    /// Write the comparison table as CSV
    #[arg(long)]
    pub table: Option<PathBuf>,

    #[command(flatten)]
    pub numeric: NumericOpts,

    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FoolingRow {
    sample: String,
    /// Class predicted at the base point.
    base_class: usize,
    /// Smallest decision-flipping step along the top singular direction
    /// (either sign); absent when no flip was found within h_max.
    #[serde(skip_serializing_if = "Option::is_none")]
    principal: Option<f64>,
    /// Median flipping step over the random directions, counting
    /// searches that found none as unbounded; absent when the median
    /// itself is unbounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    random_median: Option<f64>,
    /// Random directions whose search found a flip.
    random_found: usize,
    /// Whether the principal step undercuts the random median (absent
    /// when neither search found anything).
    #[serde(skip_serializing_if = "Option::is_none")]
    principal_wins: Option<bool>,
}

#[derive(Serialize)]
struct AdversarialBody {
    cases: Vec<FoolingRow>,
    /// Cases where the principal direction flipped at or below the
    /// random median.
    wins: usize,
    /// Cases where the comparison was decided either way.
    decided: usize,
    numerics: Numerics,
}

fn flip_radius(
    net: &Net,
    clf: &LinearClassifier<Real>,
    base: &Sig,
    dir: &Sig,
    h_max: f64,
) -> Result<Option<f64>> {
    Ok(adversarial_search(net, clf, base, dir, h_max)?.map(|r| r.radius))
}

/// Median with absent radii counted as unbounded; `None` when the median
/// itself is unbounded.
fn median_radius(radii: &[Option<f64>]) -> Option<f64> {
    let mut xs: Vec<f64> = radii.iter().map(|r| r.unwrap_or(f64::INFINITY)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mid = if n % 2 == 1 { xs[n / 2] } else { (xs[n / 2 - 1] + xs[n / 2]) / 2.0 };
    mid.is_finite().then_some(mid)
}

pub fn adversarial(args: &AdversarialArgs) -> Result<()> {
    if !(args.h_max > 0.0 && args.h_max.is_finite()) {
        return Err(Error::Validation("h_max must be positive and finite".into()));
    }
    let net: Net = load_network(&args.spec)?;
    let clf: LinearClassifier<Real> = classifier_from_json(&load_text(&args.classifier)?)?;
    let opts = args.numeric.local_options();

    let bases: Vec<(String, Sig)> = match &args.samples {
        Some(dir) => files_with_extension(dir, "sig")?
            .into_iter()
            .map(|(name, path)| Ok((name, load_signal(&path)?)))
            .collect::<Result<_>>()?,
        None => (0..args.n)
            .map(|i| {
                let mut rng = rng_stream(args.numeric.seed, i);
                (format!("draw_{i:03}"), Sig::gaussian(&net.input_shape, &mut rng))
            })
            .collect(),
    };

    let mut cases = Vec::with_capacity(bases.len());
    for (i, (name, base)) in bases.iter().enumerate() {
        let base_class = clf.predict(&forward(&net, base)?.flatten());
        let top = sigma_max(&linearize(&net, base)?, &opts)?.direction;
        let principal = [1.0, -1.0]
            .iter()
            .map(|&sign| flip_radius(&net, &clf, base, &top.scaled(sign), args.h_max))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .fold(None, |best: Option<f64>, r| Some(best.map_or(r, |b| b.min(r))));

        let random: Vec<Option<f64>> = (0..args.directions)
            .into_par_iter()
            .map(|k| {
                let mut rng = rng_stream(args.numeric.seed, ((i as u64 + 1) << 32) | k);
                let dir = Sig::gaussian(&net.input_shape, &mut rng);
                flip_radius(&net, &clf, base, &dir, args.h_max)
            })
            .collect::<Result<_>>()?;
        let random_median = median_radius(&random);
        let random_found = random.iter().flatten().count();

        let principal_wins = match (principal, random_median) {
            (Some(p), Some(m)) => Some(p <= m),
            (Some(_), None) => Some(true),
            (None, Some(_)) => Some(false),
            (None, None) => None,
        };
        cases.push(FoolingRow {
            sample: name.clone(),
            base_class,
            principal,
            random_median,
            random_found,
            principal_wins,
        });
    }

    if let Some(path) = &args.table {
        let mut w = csv::Writer::from_path(path).map_err(csv_failure)?;
        w.write_record(["sample", "base_class", "principal", "random_median", "random_found"])
            .map_err(csv_failure)?;
        for c in &cases {
            w.write_record([
                c.sample.clone(),
                c.base_class.to_string(),
                cell(c.principal),
                cell(c.random_median),
                c.random_found.to_string(),
            ])
            .map_err(csv_failure)?;
        }
        w.flush()?;
    }

    let wins = cases.iter().filter(|c| c.principal_wins == Some(true)).count();
    let decided = cases.iter().filter(|c| c.principal_wins.is_some()).count();
    let body = AdversarialBody {
        cases,
        wins,
        decided,
        numerics: Numerics {
            tolerance: args.numeric.tol,
            max_iter: args.numeric.max_iter,
            frequency_grid: None,
            chain_program: None,
        },
    };
    let mut config = RunConfig::new("adversarial", args.numeric.seed, &args.out)
        .spec(&args.spec)
        .input("classifier", &args.classifier)
        .count("directions", args.directions)
        .knob("h_max", args.h_max)
        .numeric(&args.numeric);
    config = match &args.samples {
        Some(dir) => config.input("samples", dir),
        None => config.count("n", args.n),
    };
    if let Some(path) = &args.table {
        config = config.output("table", path);
    }
    emit(config, body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// stationary

#[derive(Args, Debug)]
pub struct StationaryArgs {
    /// Network specification (JSON)
    pub spec: PathBuf,

    /// Input-process spectrum (JSON, tagged by "kind")
    #[arg(long)]
    pub spectrum: PathBuf,

    /// Monte-Carlo draw count
    #[arg(long, value_parser = value_parser!(u64).range(2..))]
    pub n: u64,

    /// Write the shell-concentration table as CSV (uses max(n, 100) draws)
    #[arg(long)]
    pub concentration: Option<PathBuf>,

    /// Also demonstrate that resampling breaks stationarity (needs n >= 16)
    #[arg(long)]
    pub counterexample: bool,

    #[command(flatten)]
    pub numeric: NumericOpts,

    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct StationaryBody {
    /// Certified squared gain the estimates are compared against.
    bound: BoundValue,
    /// Second-moment contraction estimate vs the certified bound.
    expectation_check: MonteCarloResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    concentration: Option<ConcentrationProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<CounterexampleReport>,
    numerics: Numerics,
}

pub fn stationary(args: &StationaryArgs) -> Result<()> {
    let net: Net = load_network(&args.spec)?;
    let spectrum: Spectrum = serde_json::from_str(&load_text(&args.spectrum)?)?;
    let process = ProcessConfig {
        shape: net.input_shape.clone(),
        spectrum,
        seed: args.numeric.seed,
    };
    let (opts, grid) = spectral_options(&net, &args.numeric, None);
    let certificate = lipcert_core::bounds::certify(&net, &opts)?;
    let squared = certificate.squared();
    let n = args.n as usize;

    let expectation_check = stochastic_bound_check(&net, &process, &process, squared, n)?;

    let concentration = match &args.concentration {
        None => None,
        Some(path) => {
            let scale = (process.expected_norm_squared()? * squared).sqrt();
            let ts: Vec<f64> = (0..=12).map(|i| f64::from(i) * scale / 4.0).collect();
            let profile = concentration_profile(&net, &process, squared, n.max(100), &ts)?;
            let mut w = csv::Writer::from_path(path).map_err(csv_failure)?;
            w.write_record(["t", "empirical", "bound", "stderr"]).map_err(csv_failure)?;
            for j in 0..profile.ts.len() {
                w.write_record([
                    profile.ts[j].to_string(),
                    profile.empirical[j].to_string(),
                    profile.bound[j].to_string(),
                    profile.stderr[j].to_string(),
                ])
                .map_err(csv_failure)?;
            }
            w.flush()?;
            Some(profile)
        }
    };

    let counterexample = if args.counterexample {
        let grid_len = match net.input_shape.as_slice() {
            &[len] if len % 4 == 0 && len >= 8 => len,
            _ => 16,
        };
        Some(dilation_counterexample(grid_len, n, args.numeric.seed)?)
    } else {
        None
    };

    let body = StationaryBody {
        bound: BoundValue::of(squared),
        expectation_check,
        concentration,
        counterexample,
        numerics: Numerics {
            tolerance: args.numeric.tol,
            max_iter: args.numeric.max_iter,
            frequency_grid: grid,
            chain_program: Some(ChainTolerances::fixed()),
        },
    };
    let mut config = RunConfig::new("stationary", args.numeric.seed, &args.out)
        .spec(&args.spec)
        .input("spectrum", &args.spectrum)
        .count("n", args.n)
        .numeric(&args.numeric);
    if let Some(path) = &args.concentration {
        config = config.output("concentration", path);
    }
    if args.counterexample {
        config = config.count("counterexample", 1);
    }
    emit(config, body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// discriminant

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("target").required(true).args(["spec", "nets"])))]
pub struct DiscriminantArgs {
    /// Network specification (single-network score)
    pub spec: Option<PathBuf>,

    /// Directory of specifications (*.json): batch error-vs-score table
    #[arg(long)]
    pub nets: Option<PathBuf>,

    /// First class model (JSON {"label", "mean", "coloring"})
    #[arg(long)]
    pub class1: PathBuf,

    /// Second class model (JSON)
    #[arg(long)]
    pub class2: PathBuf,

    /// Training draws per class
    #[arg(long, value_parser = value_parser!(u64).range(2..))]
    pub n: u64,

    /// Held-out draws per class for the batch error (default: --n)
    #[arg(long, value_parser = value_parser!(u64).range(1..))]
    pub test: Option<u64>,

    /// Write the batch table as CSV
    #[arg(long)]
    pub table: Option<PathBuf>,

    #[command(flatten)]
    pub numeric: NumericOpts,

    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ScoreBody {
    score: lipcert_core::discriminant::DiscriminantReport,
    numerics: Numerics,
}

#[derive(Serialize)]
struct NamedTrendRow {
    net: String,
    s: f64,
    s_lip: f64,
    error: f64,
}

#[derive(Serialize)]
struct ExcludedNet {
    net: String,
    reason: String,
}

#[derive(Serialize)]
struct TrendBody {
    rows: Vec<NamedTrendRow>,
    excluded: Vec<ExcludedNet>,
    spearman_s: Option<f64>,
    spearman_s_lip: Option<f64>,
    numerics: Numerics,
}

pub fn discriminant_cmd(args: &DiscriminantArgs) -> Result<()> {
    let class1 = class_model_from_file(&args.class1).map_err(|e| annotate(e, &args.class1))?;
    let class2 = class_model_from_file(&args.class2).map_err(|e| annotate(e, &args.class2))?;
    let numerics = Numerics {
        tolerance: args.numeric.tol,
        max_iter: args.numeric.max_iter,
        frequency_grid: None,
        chain_program: Some(ChainTolerances::fixed()),
    };
    let mut config = RunConfig::new("discriminant", args.numeric.seed, &args.out)
        .input("class1", &args.class1)
        .input("class2", &args.class2)
        .count("n", args.n)
        .numeric(&args.numeric);

    if let Some(spec) = &args.spec {
        let net: Net = load_network(spec)?;
        let score = discriminant(&net, &class1, &class2, args.n as usize, args.numeric.seed)?;
        let body = ScoreBody { score, numerics };
        return emit(config.spec(spec), body, args.out.as_deref());
    }

    let dir = args.nets.as_ref().expect("clap guarantees spec or nets");
    let files = files_with_extension(dir, "json")?;
    let nets: Vec<Net> = files
        .iter()
        .map(|(_, path)| load_network(path))
        .collect::<Result<_>>()?;
    let n_test = args.test.unwrap_or(args.n) as usize;
    let table = error_vs_discriminant(
        &nets,
        &class1,
        &class2,
        args.n as usize,
        n_test,
        args.numeric.seed,
    )?;

    let rows: Vec<NamedTrendRow> = table
        .rows
        .iter()
        .map(|r| NamedTrendRow {
            net: files[r.net].0.clone(),
            s: r.s,
            s_lip: r.s_lip,
            error: r.error,
        })
        .collect();
    let excluded: Vec<ExcludedNet> = table
        .excluded
        .iter()
        .map(|(i, reason)| ExcludedNet { net: files[*i].0.clone(), reason: reason.clone() })
        .collect();

    if let Some(path) = &args.table {
        let mut w = csv::Writer::from_path(path).map_err(csv_failure)?;
        w.write_record(["net", "s", "s_lip", "error"]).map_err(csv_failure)?;
        for r in &rows {
            w.write_record([
                r.net.clone(),
                r.s.to_string(),
                r.s_lip.to_string(),
                r.error.to_string(),
            ])
            .map_err(csv_failure)?;
        }
        w.flush()?;
    }

    let body = TrendBody {
        rows,
        excluded,
        spearman_s: table.spearman_s,
        spearman_s_lip: table.spearman_s_lip,
        numerics,
    };
    config = config.input("nets", dir).count("test", n_test as u64);
    if let Some(path) = &args.table {
        config = config.output("table", path);
    }
    emit(config, body, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// toy-example

/// Builds the reference network from its closed-form filter profiles,
/// certifies it, and prints the per-layer triples next to all three
/// global bounds.
pub fn toy_example() -> Result<()> {
    let net: Net = build_toy_network();
    let certificate = lipcert_core::bounds::certify(&net, &SpectralOptions::default())?;
    let triples = certificate.triples();

    println!("reference network: 1-d continuous domain, {} layers", net.num_layers());
    println!();
    println!("{:<7} {:>12} {:>12} {:>12}", "layer", "joint", "hidden", "features");
    for l in &certificate.layers {
        let (b1, b2, b3) = l.triple.to_f64();
        println!("{:<7} {:>12.6} {:>12.6} {:>12.6}", l.layer + 1, b1, b2, b3);
    }
    println!();
    let chain = BoundValue::of(certificate.squared());
    let product = BoundValue::of(corollary_product(&triples));
    let sumprod = BoundValue::of(corollary_sumprod(&triples));
    println!("chain-program bound {:>12.6}   (constant {:.6})", chain.squared, chain.constant);
    println!("product bound       {:>12.6}   (constant {:.6})", product.squared, product.constant);
    println!("sum-product bound   {:>12.6}   (constant {:.6})", sumprod.squared, sumprod.constant);
    Ok(())
}
