//! Self-describing binary container for every persisted object.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes   "TRSARTF\0"
//! version    u32
//! header_len u64
//! header     canonical JSON (ArtifactHeader)
//! payload_len u64      number of f64 values
//! payload    f64 * payload_len, row-major
//! checksum   SHA-256 of everything above
//! ```
//!
//! Loading checks magic, version and checksum before parsing anything, then
//! requires the header to be byte-identical to its canonical re-encoding,
//! and finally rebuilds the object through its validating constructor.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::classifiers::{FeatureMap, LinearSoftmaxClassifier};
use crate::data::{AttributionMap, Dataset, Matrix, Shape, TimeSeriesSample};
use crate::error::{ArtifactErrorKind, Error, Result};
use crate::masks::{Mask, MaskGenSpec, MaskKey, MaskSet};
use crate::metrics::{MetricCell, MetricSummary};

pub const MAGIC: [u8; 8] = *b"TRSARTF\0";
pub const SCHEMA_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Dataset,
    MaskSet,
    AttributionMap,
    MetricSummary,
    LinearModel,
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ArtifactKind::Dataset => "dataset",
            ArtifactKind::MaskSet => "mask_set",
            ArtifactKind::AttributionMap => "attribution_map",
            ArtifactKind::MetricSummary => "metric_summary",
            ArtifactKind::LinearModel => "linear_model",
        };
        f.write_str(s)
    }
}

/// Where an artifact came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool_version: String,
    pub seeds: BTreeMap<String, u64>,
    pub params: Value,
}

impl Provenance {
    pub fn new() -> Self {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: BTreeMap::new(),
            params: Value::Null,
        }
    }

    pub fn with_seed(mut self, name: impl Into<String>, seed: u64) -> Self {
        self.seeds.insert(name.into(), seed);
        self
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactHeader {
    pub kind: ArtifactKind,
    pub shape: Option<Shape>,
    pub count: usize,
    pub meta: Value,
    pub provenance: Provenance,
}

/// Borrowed object to save.
#[derive(Debug, Clone, Copy)]
pub enum ArtifactRef<'a> {
    Dataset(&'a Dataset),
    MaskSet(&'a MaskSet),
    AttributionMap(&'a AttributionMap),
    MetricSummary(&'a MetricSummary),
    LinearModel(&'a LinearSoftmaxClassifier),
}

/// Loaded object.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Dataset(Dataset),
    MaskSet(MaskSet),
    AttributionMap(AttributionMap),
    MetricSummary(MetricSummary),
    LinearModel(LinearSoftmaxClassifier),
}

impl Artifact {
    pub fn kind(&self) -> ArtifactKind {
        match self {
            Artifact::Dataset(_) => ArtifactKind::Dataset,
            Artifact::MaskSet(_) => ArtifactKind::MaskSet,
            Artifact::AttributionMap(_) => ArtifactKind::AttributionMap,
            Artifact::MetricSummary(_) => ArtifactKind::MetricSummary,
            Artifact::LinearModel(_) => ArtifactKind::LinearModel,
        }
    }
}

macro_rules! impl_from_ref {
    ($($variant:ident => $ty:ty),*) => {
        $(impl<'a> From<&'a $ty> for ArtifactRef<'a> {
            fn from(v: &'a $ty) -> Self {
                ArtifactRef::$variant(v)
            }
        })*
    };
}

impl_from_ref!(
    Dataset => Dataset,
    MaskSet => MaskSet,
    AttributionMap => AttributionMap,
    MetricSummary => MetricSummary,
    LinearModel => LinearSoftmaxClassifier
);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetMeta {
    name: String,
    num_classes: usize,
    labels: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskMeta {
    key: MaskKey,
    density: f64,
    granularity: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskSetMeta {
    spec: MaskGenSpec,
    masks: Vec<MaskMeta>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapMeta {
    method: String,
    target_class: usize,
    degenerate: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellMeta {
    dataset: String,
    method: String,
    metric: crate::metrics::Metric,
    seed: u64,
    sample_ids: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryMeta {
    subset_size: usize,
    curve_basis: String,
    cells: Vec<CellMeta>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelMeta {
    feature_map: FeatureMap,
    bias: Vec<f64>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidInput(format!("serialize: {e}")))
}

fn split(artifact: ArtifactRef<'_>) -> Result<(ArtifactKind, Option<Shape>, usize, Value, Vec<f64>)> {
    Ok(match artifact {
        ArtifactRef::Dataset(d) => {
            let meta = DatasetMeta {
                name: d.name().to_string(),
                num_classes: d.num_classes(),
                labels: d.samples().iter().map(TimeSeriesSample::label).collect(),
            };
            let payload = d
                .samples()
                .iter()
                .flat_map(|s| s.values().as_slice().iter().copied())
                .collect();
            (ArtifactKind::Dataset, Some(d.shape()), d.len(), to_value(&meta)?, payload)
        }
        ArtifactRef::MaskSet(m) => {
            let meta = MaskSetMeta {
                spec: m.spec().clone(),
                masks: m
                    .masks()
                    .iter()
                    .map(|k| MaskMeta {
                        key: k.key(),
                        density: k.density(),
                        granularity: k.granularity(),
                    })
                    .collect(),
            };
            let payload = m
                .masks()
                .iter()
                .flat_map(|k| k.values().as_slice().iter().copied())
                .collect();
            (ArtifactKind::MaskSet, Some(m.shape()), m.len(), to_value(&meta)?, payload)
        }
        ArtifactRef::AttributionMap(a) => {
            let meta = MapMeta {
                method: a.method().to_string(),
                target_class: a.target_class(),
                degenerate: a.is_degenerate(),
            };
            (
                ArtifactKind::AttributionMap,
                Some(a.shape()),
                1,
                to_value(&meta)?,
                a.scores().as_slice().to_vec(),
            )
        }
        ArtifactRef::MetricSummary(s) => {
            let meta = SummaryMeta {
                subset_size: s.subset_size,
                curve_basis: s.curve_basis.clone(),
                cells: s
                    .cells
                    .iter()
                    .map(|c| CellMeta {
                        dataset: c.dataset.clone(),
                        method: c.method.clone(),
                        metric: c.metric,
                        seed: c.seed,
                        sample_ids: c.sample_ids.clone(),
                    })
                    .collect(),
            };
            let payload = s.cells.iter().map(|c| c.value).collect();
            (ArtifactKind::MetricSummary, None, s.cells.len(), to_value(&meta)?, payload)
        }
        ArtifactRef::LinearModel(m) => {
            let meta = ModelMeta {
                feature_map: m.feature_map(),
                bias: m.bias().to_vec(),
            };
            let shape = m.weights()[0].shape();
            let payload = m
                .weights()
                .iter()
                .flat_map(|w| w.as_slice().iter().copied())
                .collect();
            (ArtifactKind::LinearModel, Some(shape), m.weights().len(), to_value(&meta)?, payload)
        }
    })
}

/// Serializes an object into the container format.
pub fn encode_artifact<'a>(
    artifact: impl Into<ArtifactRef<'a>>,
    provenance: &Provenance,
) -> Result<Vec<u8>> {
    let (kind, shape, count, meta, payload) = split(artifact.into())?;
    let header = ArtifactHeader {
        kind,
        shape,
        count,
        meta,
        provenance: provenance.clone(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::InvalidInput(format!("serialize header: {e}")))?;
    let mut out = Vec::with_capacity(8 + 4 + 16 + header_bytes.len() + 8 * payload.len() + 32);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    for v in &payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

/// Writes an artifact file.
pub fn save_artifact<'a>(
    path: impl AsRef<Path>,
    artifact: impl Into<ArtifactRef<'a>>,
    provenance: &Provenance,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_artifact(artifact, provenance)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Reader<'b> {
    bytes: &'b [u8],
    pos: usize,
}

impl<'b> Reader<'b> {
    fn take(&mut self, n: usize) -> Option<&'b [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Parses and validates an artifact held in memory. `path` is only used in errors.
pub fn decode_artifact(bytes: &[u8], path: &Path) -> Result<(Artifact, Provenance)> {
    let fail = |kind: ArtifactErrorKind| Error::Artifact {
        path: path.to_path_buf(),
        kind,
    };
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(fail(ArtifactErrorKind::BadMagic));
    }
    if bytes.len() < MAGIC.len() + 4 {
        return Err(fail(ArtifactErrorKind::Checksum));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != SCHEMA_VERSION {
        return Err(fail(ArtifactErrorKind::VersionMismatch {
            found: version,
            supported: SCHEMA_VERSION,
        }));
    }
    if bytes.len() < 12 + DIGEST_LEN {
        return Err(fail(ArtifactErrorKind::Checksum));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(fail(ArtifactErrorKind::Checksum));
    }

    let mut r = Reader { bytes: body, pos: 12 };
    let layout = |what: &str| fail(ArtifactErrorKind::Payload(format!("bad {what}")));
    let header_len = r.u64().ok_or_else(|| layout("header length"))? as usize;
    let header_bytes = r.take(header_len).ok_or_else(|| layout("header length"))?;
    let header: ArtifactHeader = serde_json::from_slice(header_bytes)
        .map_err(|e| fail(ArtifactErrorKind::Header(e.to_string())))?;
    let canonical = serde_json::to_vec(&header)
        .map_err(|e| fail(ArtifactErrorKind::Header(e.to_string())))?;
    if canonical != header_bytes {
        return Err(fail(ArtifactErrorKind::Header(
            "header is not in canonical form".into(),
        )));
    }
    let payload_len = r.u64().ok_or_else(|| layout("payload length"))? as usize;
    let raw = r
        .take(payload_len.checked_mul(8).ok_or_else(|| layout("payload length"))?)
        .ok_or_else(|| layout("payload length"))?;
    if r.pos != body.len() {
        return Err(layout("trailing bytes"));
    }
    let payload: Vec<f64> = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();

    let provenance = header.provenance.clone();
    let artifact = rebuild(header, payload).map_err(|e| match e {
        Error::Artifact { kind, .. } => fail(kind),
        other => fail(ArtifactErrorKind::Invariant(other.to_string())),
    })?;
    Ok((artifact, provenance))
}

fn rebuild(header: ArtifactHeader, payload: Vec<f64>) -> Result<Artifact> {
    let bad_payload = |msg: String| Error::Artifact {
        path: PathBuf::new(),
        kind: ArtifactErrorKind::Payload(msg),
    };
    let bad_header = |msg: String| Error::Artifact {
        path: PathBuf::new(),
        kind: ArtifactErrorKind::Header(msg),
    };
    let shape = header.shape;
    let per_item = shape.map(|s| s.len()).unwrap_or(1);
    if payload.len() != header.count * per_item {
        return Err(bad_payload(format!(
            "expected {} values, found {}",
            header.count * per_item,
            payload.len()
        )));
    }
    let need_shape = || shape.ok_or_else(|| bad_header("missing shape".into()));
    let chunks = |s: Shape| -> Result<Vec<Matrix>> {
        payload
            .chunks(s.len().max(1))
            .map(|c| Matrix::from_vec(s, c.to_vec()))
            .collect()
    };
    Ok(match header.kind {
        ArtifactKind::Dataset => {
            let s = need_shape()?;
            let m: DatasetMeta = serde_json::from_value(header.meta)
                .map_err(|e| bad_header(e.to_string()))?;
            if m.labels.len() != header.count {
                return Err(bad_header("label count differs from sample count".into()));
            }
            let samples = chunks(s)?
                .into_iter()
                .zip(m.labels)
                .map(|(v, l)| TimeSeriesSample::new(v, l))
                .collect::<Result<Vec<_>>>()?;
            Artifact::Dataset(Dataset::new(m.name, m.num_classes, samples)?)
        }
        ArtifactKind::MaskSet => {
            let s = need_shape()?;
            let m: MaskSetMeta = serde_json::from_value(header.meta)
                .map_err(|e| bad_header(e.to_string()))?;
            if m.masks.len() != header.count {
                return Err(bad_header("mask count differs from header count".into()));
            }
            let masks = chunks(s)?
                .into_iter()
                .zip(m.masks)
                .map(|(v, mm)| {
                    let expected_p = m.spec.densities.get(mm.key.density_index);
                    let expected_g = m.spec.granularities.get(mm.key.granularity_index);
                    if expected_p != Some(&mm.density)
                        || expected_g != Some(&mm.granularity)
                        || mm.key.index >= m.spec.per_combo_count
                    {
                        return Err(Error::InvalidInput(format!(
                            "mask {:?} disagrees with its spec",
                            mm.key
                        )));
                    }
                    Mask::new(v, mm.density, mm.granularity, mm.key)
                })
                .collect::<Result<Vec<_>>>()?;
            Artifact::MaskSet(MaskSet::from_parts(s, m.spec, masks)?)
        }
        ArtifactKind::AttributionMap => {
            let s = need_shape()?;
            if header.count != 1 {
                return Err(bad_header("attribution map count must be 1".into()));
            }
            let m: MapMeta = serde_json::from_value(header.meta)
                .map_err(|e| bad_header(e.to_string()))?;
            let scores = Matrix::from_vec(s, payload)?;
            Artifact::AttributionMap(AttributionMap::from_normalized(
                scores,
                m.degenerate,
                m.method,
                m.target_class,
            )?)
        }
        ArtifactKind::MetricSummary => {
            if shape.is_some() {
                return Err(bad_header("metric summary has no shape".into()));
            }
            let m: SummaryMeta = serde_json::from_value(header.meta)
                .map_err(|e| bad_header(e.to_string()))?;
            if m.cells.len() != header.count {
                return Err(bad_header("cell count differs from header count".into()));
            }
            let mut summary = MetricSummary::new(m.subset_size, m.curve_basis);
            for (c, value) in m.cells.into_iter().zip(payload) {
                if !value.is_finite() {
                    return Err(Error::InvalidInput("non-finite metric value".into()));
                }
                summary.push(MetricCell {
                    dataset: c.dataset,
                    method: c.method,
                    metric: c.metric,
                    value,
                    seed: c.seed,
                    sample_ids: c.sample_ids,
                })?;
            }
            Artifact::MetricSummary(summary)
        }
        ArtifactKind::LinearModel => {
            let s = need_shape()?;
            let m: ModelMeta = serde_json::from_value(header.meta)
                .map_err(|e| bad_header(e.to_string()))?;
            if m.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidInput("non-finite bias".into()));
            }
            Artifact::LinearModel(LinearSoftmaxClassifier::from_parts(
                m.feature_map,
                chunks(s)?,
                m.bias,
            )?)
        }
    })
}

/// Reads and validates an artifact file.
pub fn load_artifact(path: impl AsRef<Path>) -> Result<(Artifact, Provenance)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_artifact(&bytes, path)
}

fn wrong_kind(path: &Path, expected: ArtifactKind, found: ArtifactKind) -> Error {
    Error::Artifact {
        path: path.to_path_buf(),
        kind: ArtifactErrorKind::WrongKind {
            expected: expected.to_string(),
            found: found.to_string(),
        },
    }
}

macro_rules! typed_loader {
    ($(#[$doc:meta])* $name:ident, $variant:ident, $ty:ty) => {
        $(#[$doc])*
        pub fn $name(path: impl AsRef<Path>) -> Result<$ty> {
            let path = path.as_ref();
            match load_artifact(path)?.0 {
                Artifact::$variant(v) => Ok(v),
                other => Err(wrong_kind(path, ArtifactKind::$variant, other.kind())),
            }
        }
    };
}

typed_loader!(load_dataset, Dataset, Dataset);
typed_loader!(load_maskset, MaskSet, MaskSet);
typed_loader!(load_attribution_map, AttributionMap, AttributionMap);
typed_loader!(load_metric_summary, MetricSummary, MetricSummary);
typed_loader!(load_linear_model, LinearModel, LinearSoftmaxClassifier);

/// Hex SHA-256 of a file, for determinism checks.
pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Canonical provenance parameters for an arbitrary serializable config.
pub fn params_value<T: Serialize>(params: &T) -> Value {
    serde_json::to_value(params).unwrap_or_else(|e| json!({ "error": e.to_string() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::generate_maskset;
    use crate::metrics::Metric;

    fn prov() -> Provenance {
        Provenance::new()
            .with_seed("root", 7)
            .with_params(json!({"b": 1.5, "a": [1, 2]}))
    }

    fn small_maskset() -> MaskSet {
        let spec = MaskGenSpec {
            densities: vec![0.25, 0.5],
            granularities: vec![2, 3],
            per_combo_count: 3,
            channel_joint: false,
            seed: 11,
        };
        generate_maskset(Shape::new(2, 7), &spec).unwrap()
    }

    fn small_dataset() -> Dataset {
        let shape = Shape::new(2, 3);
        let samples = (0..4)
            .map(|i| {
                let v = Matrix::from_vec(shape, (0..6).map(|j| (i * 6 + j) as f64 / 7.0).collect())
                    .unwrap();
                TimeSeriesSample::new(v, Some(i % 2)).unwrap()
            })
            .collect();
        Dataset::new("toy", 2, samples).unwrap()
    }

    fn round_trip(bytes: &[u8]) -> Result<(Artifact, Provenance)> {
        decode_artifact(bytes, Path::new("mem"))
    }

    #[test]
    fn maskset_round_trip_is_bitwise() {
        let m = small_maskset();
        let bytes = encode_artifact(&m, &prov()).unwrap();
        let (back, p) = round_trip(&bytes).unwrap();
        assert_eq!(back, Artifact::MaskSet(m.clone()));
        assert_eq!(p, prov());
        assert_eq!(encode_artifact(&m, &prov()).unwrap(), bytes);
    }

    #[test]
    fn other_kinds_round_trip() {
        let d = small_dataset();
        let bytes = encode_artifact(&d, &prov()).unwrap();
        assert_eq!(round_trip(&bytes).unwrap().0, Artifact::Dataset(d));

        let raw = Matrix::from_rows(&[[0.3, 1.0 / 3.0, 2.0], [0.0, -1.0, 0.7]]).unwrap();
        let map = AttributionMap::from_raw(&raw, "occlusion", 1).unwrap();
        let bytes = encode_artifact(&map, &prov()).unwrap();
        assert_eq!(round_trip(&bytes).unwrap().0, Artifact::AttributionMap(map));

        let mut s = MetricSummary::new(100, "probability");
        s.push(MetricCell {
            dataset: "anomaly".into(),
            method: "timereise".into(),
            metric: Metric::DelAuc,
            value: 0.123_456_789_012_345_67,
            seed: 3,
            sample_ids: vec![4, 8],
        })
        .unwrap();
        let bytes = encode_artifact(&s, &prov()).unwrap();
        assert_eq!(round_trip(&bytes).unwrap().0, Artifact::MetricSummary(s));

        let model = LinearSoftmaxClassifier::from_parts(
            FeatureMap::Square {
                center: 0.1,
                scale: 3.0,
                offset: 0.25,
            },
            vec![raw.clone(), raw.map(|v| -v)],
            vec![0.5, -0.5],
        )
        .unwrap();
        let bytes = encode_artifact(&model, &prov()).unwrap();
        assert_eq!(round_trip(&bytes).unwrap().0, Artifact::LinearModel(model));
    }

    #[test]
    fn truncation_is_a_checksum_error() {
        let bytes = encode_artifact(&small_maskset(), &prov()).unwrap();
        for cut in [bytes.len() - 1, bytes.len() / 2, 20, 12] {
            let err = round_trip(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(
                    err,
                    Error::Artifact {
                        kind: ArtifactErrorKind::Checksum,
                        ..
                    }
                ),
                "cut {cut}: {err}"
            );
        }
    }

    #[test]
    fn flipped_payload_bit_is_a_checksum_error() {
        let mut bytes = encode_artifact(&small_dataset(), &prov()).unwrap();
        let i = bytes.len() - DIGEST_LEN - 3;
        bytes[i] ^= 0x10;
        assert!(matches!(
            round_trip(&bytes),
            Err(Error::Artifact {
                kind: ArtifactErrorKind::Checksum,
                ..
            })
        ));
    }

    fn reseal(mut body: Vec<u8>) -> Vec<u8> {
        let digest = Sha256::digest(&body);
        body.extend_from_slice(&digest);
        body
    }

    /// Rebuilds a file around a replacement header with a valid checksum.
    fn with_header(bytes: &[u8], header: &[u8]) -> Vec<u8> {
        let old_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let rest = &bytes[20 + old_len..bytes.len() - DIGEST_LEN];
        let mut body = bytes[..12].to_vec();
        body.extend_from_slice(&(header.len() as u64).to_le_bytes());
        body.extend_from_slice(header);
        body.extend_from_slice(rest);
        reseal(body)
    }

    #[test]
    fn reordered_header_fields_are_rejected() {
        let m = small_maskset();
        let bytes = encode_artifact(&m, &prov()).unwrap();
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let header: Value = serde_json::from_slice(&bytes[20..20 + len]).unwrap();
        let obj = header.as_object().unwrap();
        // Same content, fields written in reverse order.
        let mut text = String::from("{");
        let keys: Vec<&String> = obj.keys().collect();
        let mut ordered = vec!["provenance", "meta", "count", "shape", "kind"];
        ordered.retain(|k| keys.iter().any(|x| x == k));
        for (i, k) in ordered.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            text.push_str(&format!("\"{k}\":{}", obj[*k]));
        }
        text.push('}');
        let attacked = with_header(&bytes, text.as_bytes());
        let err = round_trip(&attacked).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Artifact {
                    kind: ArtifactErrorKind::Header(_),
                    ..
                }
            ),
            "{err}"
        );
        // The untouched header still loads through the same path.
        assert!(round_trip(&with_header(&bytes, &bytes[20..20 + len])).is_ok());
    }

    #[test]
    fn invariant_violation_on_load() {
        let raw = Matrix::from_rows(&[[0.0, 0.5, 1.0]]).unwrap();
        let map = AttributionMap::from_raw(&raw, "x", 0).unwrap();
        let bytes = encode_artifact(&map, &prov()).unwrap();
        // Rewrite the last score from 1.0 to 2.0 and reseal.
        let mut body = bytes[..bytes.len() - DIGEST_LEN].to_vec();
        let at = body.len() - 8;
        body[at..].copy_from_slice(&2.0f64.to_le_bytes());
        let err = round_trip(&reseal(body)).unwrap_err();
        assert!(matches!(
            err,
            Error::Artifact {
                kind: ArtifactErrorKind::Invariant(_),
                ..
            }
        ));
    }

    #[test]
    fn version_and_magic_checks() {
        let mut bytes = encode_artifact(&small_dataset(), &prov()).unwrap();
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            round_trip(&bytes),
            Err(Error::Artifact {
                kind: ArtifactErrorKind::VersionMismatch { found: 2, supported: 1 },
                ..
            })
        ));
        bytes[0] = b'X';
        assert!(matches!(
            round_trip(&bytes),
            Err(Error::Artifact {
                kind: ArtifactErrorKind::BadMagic,
                ..
            })
        ));
    }

    #[test]
    fn typed_loader_reports_wrong_kind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.trs");
        save_artifact(&path, &small_dataset(), &prov()).unwrap();
        assert!(load_dataset(&path).is_ok());
        assert!(matches!(
            load_maskset(&path),
            Err(Error::Artifact {
                kind: ArtifactErrorKind::WrongKind { .. },
                ..
            })
        ));
        assert_eq!(file_digest(&path).unwrap().len(), 64);
    }
}
