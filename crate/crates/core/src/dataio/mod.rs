//! Dataset generation, text formats and binary artifacts.

mod anomaly;
mod artifact;
mod text;

pub use anomaly::{generate_anomaly_dataset, AnomalyDataset, AnomalyGenSpec, GroundTruthMap, Split};
pub use artifact::{
    decode_artifact, encode_artifact, file_digest, load_artifact, load_attribution_map,
    load_dataset, load_linear_model, load_maskset, load_metric_summary, params_value,
    save_artifact, Artifact, ArtifactHeader, ArtifactKind, ArtifactRef, Provenance, MAGIC,
    SCHEMA_VERSION,
};
pub use text::{
    label_histogram, parse_multivariate_jsonl, parse_univariate_tsv, write_multivariate_jsonl,
    write_univariate_tsv,
};
