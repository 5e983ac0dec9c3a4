//! JSON network format and the binary signal sidecar.
//!
//! The JSON layout (all filter weights inline or in sidecar files):
//!
//! ```json
//! {
//!   "input_shape": [16, 16],
//!   "domain": "discrete",
//!   "layers": [
//!     {
//!       "pooling": [ {"taps": [[0.25,0.25],[0.25,0.25]]}, null ],
//!       "feature_taps": [true, false],
//!       "filters": [
//!         { "taps": [0.5, 0.5], "source": 0, "dilation": [2], "sigma": "relu" },
//!         { "file": "w.sig", "source": [0, 0], "sigma": {"custom_table": {"x": [-1,1], "y": [-1,1]}} }
//!       ],
//!       "merges": [ {"members": [0, 1], "kind": "pnorm", "p": 2} ]
//!     }
//!   ]
//! }
//! ```
//!
//! * `source`: an integer addresses a node of the previous tier; `[t, n]`
//!   addresses node `n` of tier `t` (0 = network input) for skip connections.
//! * `dilation`: a single integer (uniform), a per-axis integer array, or a
//!   matrix (continuous domain); omitted means identity.
//! * `sigma`: `"identity" | "relu" | "abs" | "clipped_sigmoid"` or a
//!   `{"custom_table": {"x": [...], "y": [...]}}` object; omitted means identity.
//! * `p`: a number or the string `"inf"` (only for `"kind": "pnorm"`).
//! * Filters carry exactly one of `taps` (nested arrays), `profile`
//!   (`{"name": "gate"|"bump_pair"|"const", ...params}`), or `file`
//!   (a sidecar path resolved against the spec file's directory).
//! * `feature_taps` may be omitted; it then defaults to pooling presence.
//!
//! The sidecar holds one signal: magic `LIPCFLT1`, little-endian `u32`
//! dimension count, per-axis `u32` extents, then row-major `f64` samples.

use super::{
    Dilation, Domain, Filter, FilterAttachment, LayerSpec, MergeKind, MergeSpec, NetworkSpec,
    Nonlinearity, PExponent, PiecewiseTable, SourceRef,
};
use crate::profile::Profile;
use crate::signal::Signal;
use crate::{Error, Result, Scalar};
use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use serde::Deserialize;
use serde_json::{json, Value};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Magic bytes opening a binary signal file.
pub const SIGNAL_MAGIC: &[u8; 8] = b"LIPCFLT1";

/// Reads a signal from the binary sidecar format.
pub fn read_signal_file<T: Scalar>(path: &Path) -> Result<Signal<T>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SIGNAL_MAGIC {
        return Err(Error::Spec(format!("{}: not a signal file (bad magic)", path.display())));
    }
    let ndim = r.read_u32::<LE>()? as usize;
    if ndim == 0 || ndim > 16 {
        return Err(Error::Spec(format!("{}: implausible dimension count {ndim}", path.display())));
    }
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(r.read_u32::<LE>()? as usize);
    }
    let len: usize = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(T::c(r.read_f64::<LE>()?));
    }
    Signal::from_vec(shape, data)
}

/// Writes a signal in the binary sidecar format.
pub fn write_signal_file<T: Scalar>(path: &Path, sig: &Signal<T>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(SIGNAL_MAGIC)?;
    w.write_u32::<LE>(sig.shape().len() as u32)?;
    for &e in sig.shape() {
        w.write_u32::<LE>(e as u32)?;
    }
    for &v in sig.data() {
        w.write_f64::<LE>(v.to_f64().unwrap())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawNet {
    input_shape: Vec<usize>,
    domain: String,
    layers: Vec<RawLayer>,
}

#[derive(Deserialize)]
struct RawLayer {
    #[serde(default)]
    pooling: Option<Vec<Option<RawFilter>>>,
    #[serde(default)]
    feature_taps: Option<Vec<bool>>,
    #[serde(default)]
    filters: Vec<RawAttachment>,
    #[serde(default)]
    merges: Vec<RawMerge>,
}

#[derive(Deserialize)]
struct RawFilter {
    #[serde(default)]
    taps: Option<Value>,
    #[serde(default)]
    profile: Option<Profile>,
    #[serde(default)]
    file: Option<String>,
    #[serde(default)]
    offset: Option<Vec<i64>>,
}

#[derive(Deserialize)]
struct RawAttachment {
    #[serde(flatten)]
    filter: RawFilter,
    source: Value,
    #[serde(default)]
    dilation: Option<Value>,
    #[serde(default)]
    sigma: Option<Value>,
}

#[derive(Deserialize)]
struct RawMerge {
    members: Vec<usize>,
    kind: String,
    #[serde(default)]
    p: Option<Value>,
}

/// Parses nested JSON arrays into a rectangular multi-dimensional signal.
fn parse_nested_taps(v: &Value) -> Result<(Vec<usize>, Vec<f64>)> {
    fn walk(v: &Value, shape: &mut Vec<usize>, depth: usize, out: &mut Vec<f64>) -> Result<()> {
        match v {
            Value::Array(items) => {
                if depth == shape.len() {
                    shape.push(items.len());
                } else if shape[depth] != items.len() {
                    return Err(Error::Spec("taps array is not rectangular".into()));
                }
                if items.is_empty() {
                    return Err(Error::Spec("taps arrays must be non-empty".into()));
                }
                for item in items {
                    walk(item, shape, depth + 1, out)?;
                }
                Ok(())
            }
            Value::Number(x) => {
                if depth != shape.len() {
                    return Err(Error::Spec("taps array has ragged nesting".into()));
                }
                out.push(x.as_f64().ok_or_else(|| Error::Spec("taps must be finite".into()))?);
                Ok(())
            }
            _ => Err(Error::Spec("taps must be numbers or nested arrays".into())),
        }
    }
    let mut shape = Vec::new();
    let mut data = Vec::new();
    walk(v, &mut shape, 0, &mut data)?;
    if shape.is_empty() {
        return Err(Error::Spec("taps must be an array".into()));
    }
    Ok((shape, data))
}

/// Parses a nested-array JSON value into a signal (shared with formats
/// that embed signals outside a network spec, e.g. class models).
pub(crate) fn signal_from_value<T: Scalar>(v: &Value, at: &str) -> Result<Signal<T>> {
    let (shape, data) =
        parse_nested_taps(v).map_err(|e| Error::Spec(format!("{at}: {e}")))?;
    Signal::from_vec(shape, data.into_iter().map(T::c).collect())
}

/// Parses a standalone filter object (`taps`/`profile`/`file` plus an
/// optional `offset`) using the same schema as network-spec filters.
pub(crate) fn filter_from_value<T: Scalar>(
    v: &Value,
    base_dir: Option<&Path>,
    at: &str,
) -> Result<Filter<T>> {
    let raw: RawFilter = serde_json::from_value(v.clone())
        .map_err(|e| Error::Spec(format!("{at}: {e}")))?;
    convert_filter(&raw, 0, base_dir, at)
}

fn convert_filter<T: Scalar>(
    raw: &RawFilter,
    ndim: usize,
    base_dir: Option<&Path>,
    at: &str,
) -> Result<Filter<T>> {
    let mut sources = 0;
    sources += raw.taps.is_some() as usize;
    sources += raw.profile.is_some() as usize;
    sources += raw.file.is_some() as usize;
    if sources != 1 {
        return Err(Error::Spec(format!(
            "{at}: a filter needs exactly one of taps, profile, or file"
        )));
    }
    if let Some(p) = &raw.profile {
        if raw.offset.is_some() {
            return Err(Error::Spec(format!("{at}: offset applies to taps, not profiles")));
        }
        return Ok(Filter::Profile(p.clone()));
    }
    let taps: Signal<T> = if let Some(v) = &raw.taps {
        let (shape, data) = parse_nested_taps(v)?;
        Signal::from_vec(shape, data.into_iter().map(T::c).collect())?
    } else {
        let rel = raw.file.as_deref().unwrap();
        let path = match base_dir {
            Some(dir) => dir.join(rel),
            None => Path::new(rel).to_path_buf(),
        };
        read_signal_file(&path)?
    };
    let offset = match &raw.offset {
        Some(off) => {
            if off.len() != taps.shape().len() {
                return Err(Error::Spec(format!(
                    "{at}: offset has {} axes for a {}-d stencil",
                    off.len(),
                    taps.shape().len()
                )));
            }
            off.clone()
        }
        None => vec![0; taps.shape().len()],
    };
    let _ = ndim; // dimensionality against the input grid is checked by validate()
    Ok(Filter::Taps { taps, offset })
}

fn convert_source(v: &Value, at: &str) -> Result<SourceRef> {
    match v {
        Value::Number(n) => {
            let idx = n
                .as_u64()
                .ok_or_else(|| Error::Spec(format!("{at}: source must be a non-negative int")))?;
            Ok(SourceRef::Node(idx as usize))
        }
        Value::Array(pair) if pair.len() == 2 => {
            let tier = pair[0]
                .as_u64()
                .ok_or_else(|| Error::Spec(format!("{at}: source tier must be an int")))?;
            let node = pair[1]
                .as_u64()
                .ok_or_else(|| Error::Spec(format!("{at}: source node must be an int")))?;
            Ok(SourceRef::Tier { tier: tier as usize, node: node as usize })
        }
        _ => Err(Error::Spec(format!("{at}: source must be an int or a [tier, node] pair"))),
    }
}

fn convert_dilation(v: Option<&Value>, ndim: usize, at: &str) -> Result<Dilation> {
    let Some(v) = v else { return Ok(Dilation::identity(ndim)) };
    match v {
        Value::Number(n) => {
            let s = n
                .as_u64()
                .ok_or_else(|| Error::Spec(format!("{at}: dilation must be a positive int")))?;
            Ok(Dilation::Axes(vec![s as usize; ndim]))
        }
        Value::Array(items) if items.iter().all(|i| i.is_u64()) => {
            Ok(Dilation::Axes(items.iter().map(|i| i.as_u64().unwrap() as usize).collect()))
        }
        Value::Array(rows) if rows.iter().all(|r| r.is_array()) => {
            let mut mat = Vec::with_capacity(rows.len());
            for r in rows {
                let row: Option<Vec<f64>> =
                    r.as_array().unwrap().iter().map(|x| x.as_f64()).collect();
                mat.push(row.ok_or_else(|| {
                    Error::Spec(format!("{at}: dilation matrix entries must be numbers"))
                })?);
            }
            Ok(Dilation::Matrix(mat))
        }
        _ => Err(Error::Spec(format!(
            "{at}: dilation must be an int, an int array, or a matrix"
        ))),
    }
}

fn convert_sigma(v: Option<&Value>, at: &str) -> Result<Nonlinearity> {
    let Some(v) = v else { return Ok(Nonlinearity::Identity) };
    match v {
        Value::String(s) => match s.as_str() {
            "identity" => Ok(Nonlinearity::Identity),
            "relu" => Ok(Nonlinearity::Relu),
            "abs" => Ok(Nonlinearity::Abs),
            "clipped_sigmoid" => Ok(Nonlinearity::ClippedSigmoid),
            other => Err(Error::Spec(format!("{at}: unknown nonlinearity {other:?}"))),
        },
        Value::Object(map) => {
            let table = map.get("custom_table").ok_or_else(|| {
                Error::Spec(format!("{at}: nonlinearity object needs a custom_table key"))
            })?;
            #[derive(Deserialize)]
            struct RawTable {
                x: Vec<f64>,
                y: Vec<f64>,
            }
            let raw: RawTable = serde_json::from_value(table.clone())?;
            Ok(Nonlinearity::CustomTable(PiecewiseTable { x: raw.x, y: raw.y }))
        }
        _ => Err(Error::Spec(format!("{at}: nonlinearity must be a string or object"))),
    }
}

fn convert_merge(raw: &RawMerge, at: &str) -> Result<MergeSpec> {
    let kind = match raw.kind.as_str() {
        "sum" => {
            if raw.p.is_some() {
                return Err(Error::Spec(format!("{at}: sum merges take no exponent")));
            }
            MergeKind::Sum
        }
        "product" => {
            if raw.p.is_some() {
                return Err(Error::Spec(format!("{at}: product merges take no exponent")));
            }
            MergeKind::Product
        }
        "pnorm" => {
            let p = raw
                .p
                .as_ref()
                .ok_or_else(|| Error::Spec(format!("{at}: pnorm merges need an exponent p")))?;
            match p {
                Value::Number(n) => MergeKind::PNorm(PExponent::Finite(n.as_f64().ok_or_else(
                    || Error::Spec(format!("{at}: exponent must be a number")),
                )?)),
                Value::String(s) if s == "inf" => MergeKind::PNorm(PExponent::Infinite),
                _ => {
                    return Err(Error::Spec(format!(
                        "{at}: exponent must be a number or \"inf\""
                    )))
                }
            }
        }
        other => return Err(Error::Spec(format!("{at}: unknown merge kind {other:?}"))),
    };
    Ok(MergeSpec { members: raw.members.clone(), kind })
}

/// Parses a network from JSON text and validates it.
///
/// `base_dir` resolves relative sidecar paths; pass the directory of the spec
/// file (or `None` to resolve against the working directory).
pub fn parse_network<T: Scalar>(text: &str, base_dir: Option<&Path>) -> Result<NetworkSpec<T>> {
    let raw: RawNet = serde_json::from_str(text)?;
    let domain = match raw.domain.as_str() {
        "discrete" => Domain::Discrete,
        "continuous" => Domain::Continuous,
        other => return Err(Error::Spec(format!("unknown domain {other:?}"))),
    };
    let ndim = raw.input_shape.len();
    let mut layers = Vec::with_capacity(raw.layers.len());
    // Node count of the tier each layer reads: 1 at the input, then one node
    // per merge group. Needed to size omitted pooling lists.
    let mut width = 1usize;
    for (m, raw_layer) in raw.layers.iter().enumerate() {
        let mut pooling = Vec::new();
        if let Some(pools) = &raw_layer.pooling {
            for (n, slot) in pools.iter().enumerate() {
                pooling.push(match slot {
                    Some(f) => Some(convert_filter(
                        f,
                        ndim,
                        base_dir,
                        &format!("layer {m} pooling {n}"),
                    )?),
                    None => None,
                });
            }
        } else {
            // A wholly omitted pooling list means "no pooling on any node".
            pooling = vec![None; width];
        }
        let feature_taps = match &raw_layer.feature_taps {
            Some(taps) => taps.clone(),
            None => pooling.iter().map(|p| p.is_some()).collect(),
        };
        let mut filters = Vec::with_capacity(raw_layer.filters.len());
        for (k, raw_att) in raw_layer.filters.iter().enumerate() {
            let at = format!("layer {m} filter {k}");
            filters.push(FilterAttachment {
                filter: convert_filter(&raw_att.filter, ndim, base_dir, &at)?,
                source: convert_source(&raw_att.source, &at)?,
                dilation: convert_dilation(raw_att.dilation.as_ref(), ndim, &at)?,
                sigma: convert_sigma(raw_att.sigma.as_ref(), &at)?,
            });
        }
        let mut merges = Vec::with_capacity(raw_layer.merges.len());
        for (g, raw_merge) in raw_layer.merges.iter().enumerate() {
            merges.push(convert_merge(raw_merge, &format!("layer {m} merge {g}"))?);
        }
        width = merges.len();
        layers.push(LayerSpec { pooling, feature_taps, filters, merges });
    }
    let net = NetworkSpec { input_shape: raw.input_shape, domain, layers };
    net.validate()?;
    Ok(net)
}

/// Parses a network from a JSON file, resolving sidecars next to it.
pub fn parse_network_file<T: Scalar>(path: &Path) -> Result<NetworkSpec<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text, path.parent())
}

fn taps_to_json<T: Scalar>(taps: &Signal<T>) -> Value {
    fn build<T: Scalar>(shape: &[usize], data: &[T]) -> Value {
        if shape.len() == 1 {
            return Value::Array(
                data.iter().map(|v| json!(v.to_f64().unwrap())).collect(),
            );
        }
        let chunk = data.len() / shape[0];
        Value::Array(
            (0..shape[0])
                .map(|i| build(&shape[1..], &data[i * chunk..(i + 1) * chunk]))
                .collect(),
        )
    }
    build(taps.shape(), taps.data())
}

fn filter_to_json<T: Scalar>(f: &Filter<T>) -> Value {
    match f {
        Filter::Taps { taps, offset } => {
            let mut obj = json!({ "taps": taps_to_json(taps) });
            if offset.iter().any(|&o| o != 0) {
                obj["offset"] = json!(offset);
            }
            obj
        }
        Filter::Profile(p) => json!({ "profile": p }),
    }
}

/// Serializes a network back to the JSON format (taps inline).
pub fn network_to_json<T: Scalar>(net: &NetworkSpec<T>) -> Value {
    let layers: Vec<Value> = net
        .layers
        .iter()
        .map(|layer| {
            let pooling: Vec<Value> = layer
                .pooling
                .iter()
                .map(|p| p.as_ref().map_or(Value::Null, filter_to_json))
                .collect();
            let filters: Vec<Value> = layer
                .filters
                .iter()
                .map(|att| {
                    let mut obj = filter_to_json(&att.filter);
                    obj["source"] = match att.source {
                        SourceRef::Node(n) => json!(n),
                        SourceRef::Tier { tier, node } => json!([tier, node]),
                    };
                    match &att.dilation {
                        Dilation::Axes(s) if s.iter().all(|&v| v == 1) => {}
                        Dilation::Axes(s) => obj["dilation"] = json!(s),
                        Dilation::Matrix(m) => obj["dilation"] = json!(m),
                    }
                    obj["sigma"] = match &att.sigma {
                        Nonlinearity::Identity => json!("identity"),
                        Nonlinearity::Relu => json!("relu"),
                        Nonlinearity::Abs => json!("abs"),
                        Nonlinearity::ClippedSigmoid => json!("clipped_sigmoid"),
                        Nonlinearity::CustomTable(t) => {
                            json!({ "custom_table": { "x": t.x, "y": t.y } })
                        }
                    };
                    obj
                })
                .collect();
            let merges: Vec<Value> = layer
                .merges
                .iter()
                .map(|m| {
                    let mut obj = json!({ "members": m.members });
                    match &m.kind {
                        MergeKind::Sum => obj["kind"] = json!("sum"),
                        MergeKind::Product => obj["kind"] = json!("product"),
                        MergeKind::PNorm(PExponent::Finite(p)) => {
                            obj["kind"] = json!("pnorm");
                            obj["p"] = json!(p);
                        }
                        MergeKind::PNorm(PExponent::Infinite) => {
                            obj["kind"] = json!("pnorm");
                            obj["p"] = json!("inf");
                        }
                    }
                    obj
                })
                .collect();
            json!({
                "pooling": pooling,
                "feature_taps": layer.feature_taps,
                "filters": filters,
                "merges": merges,
            })
        })
        .collect();
    json!({
        "input_shape": net.input_shape,
        "domain": match net.domain {
            Domain::Discrete => "discrete",
            Domain::Continuous => "continuous",
        },
        "layers": layers,
    })
}
