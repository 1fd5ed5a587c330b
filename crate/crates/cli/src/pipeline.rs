//! The generate, train, attribute and evaluate stages.

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};
use serde_json::json;
use timereise_core::attribution::{AttributionRequest, MethodConfig, Target};
use timereise_core::classifiers::{argmax, train, TrainReport};
use timereise_core::dataio::{
    generate_anomaly_dataset, label_histogram, load_attribution_map, load_dataset,
    load_linear_model, params_value, parse_multivariate_jsonl, parse_univariate_tsv,
    save_artifact, GroundTruthMap, Provenance, Split,
};
use timereise_core::metrics::{
    continuity, deletion_curve, infidelity, insertion_curve, rank_report, scaled_stds,
    sensitivity_max, subset_accuracy_curve, CausalCurve, CurveMode, Metric, MetricCell,
    MetricSummary,
};
use timereise_core::rng::{mix64, stream_rng};
use timereise_core::{
    AttributionMap, Classifier, Dataset, LinearSoftmaxClassifier, Matrix,
    OracleAnomalyClassifier, TimeSeriesSample,
};

use crate::config::{ClassifierConfig, DataConfig, Replacement, RunConfig, SubsetPool};
use crate::error::{CliError, CliResult};
use crate::layout::{
    ensure_parent, read_json, remove_if_exists, write_json, write_text, RunDir, StageLog,
};

/// Label of the anomalous class in generated data.
const ANOMALOUS: usize = 1;

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance::new().with_seed("root", cfg.seed)
}

/// Writes the effective configuration next to the artifacts.
pub fn snapshot_config(cfg: &RunConfig) -> CliResult<RunDir> {
    let dir = RunDir::new(&cfg.out_dir);
    write_text(&dir.config_snapshot(), &cfg.to_toml()?)?;
    Ok(dir)
}

fn rename(ds: Dataset, name: &str, num_classes: usize) -> CliResult<Dataset> {
    if ds.name() == name && ds.num_classes() == num_classes {
        return Ok(ds);
    }
    Ok(Dataset::new(name, num_classes, ds.samples().to_vec())?)
}

pub fn cmd_generate(cfg: &RunConfig) -> CliResult<()> {
    let dir = snapshot_config(cfg)?;
    let seeds = cfg.seeds();
    let mut log = StageLog::new();
    let mut prov = provenance(cfg).with_params(params_value(&cfg.data));

    let (train, test) = match &cfg.data {
        DataConfig::Generate { name, .. } => {
            let spec = cfg.data.generator_spec(seeds.data).expect("generated source");
            prov = prov.with_seed("data", spec.seed);
            let ds = generate_anomaly_dataset(&spec)?;
            ensure_parent(&dir.ground_truth())?;
            write_json(&dir.ground_truth(), &ds.ground_truth)?;
            log.info(format!(
                "generated {} anomalies with seed {}",
                ds.ground_truth.len(),
                spec.seed
            ));
            let k = ds.train.num_classes();
            (rename(ds.train, name, k)?, rename(ds.test, name, k)?)
        }
        DataConfig::UnivariateTsv { name, train, test }
        | DataConfig::MultivariateJsonl { name, train, test } => {
            let parse = |p: &std::path::Path| match &cfg.data {
                DataConfig::UnivariateTsv { .. } => parse_univariate_tsv(p),
                _ => parse_multivariate_jsonl(p),
            };
            let (tr, te) = (parse(train)?, parse(test)?);
            if tr.shape() != te.shape() {
                return Err(CliError::Data(format!(
                    "train shape {} differs from test shape {}",
                    tr.shape(),
                    te.shape()
                )));
            }
            remove_if_exists(&dir.ground_truth())?;
            let k = tr.num_classes().max(te.num_classes());
            (rename(tr, name, k)?, rename(te, name, k)?)
        }
    };

    ensure_parent(&dir.train_data())?;
    save_artifact(dir.train_data(), &train, &prov)?;
    save_artifact(dir.test_data(), &test, &prov)?;
    for (split, ds) in [("train", &train), ("test", &test)] {
        let hist: Vec<String> = label_histogram(ds)
            .iter()
            .map(|(l, n)| match l {
                Some(l) => format!("{l}:{n}"),
                None => format!("unlabelled:{n}"),
            })
            .collect();
        log.info(format!(
            "{split}: {} samples of shape {}, labels {}",
            ds.len(),
            ds.shape(),
            hist.join(" ")
        ));
    }
    log.save(&dir.log("generate"))
}

/// A classifier restored from a run directory.
pub enum LoadedClassifier {
    Oracle(OracleAnomalyClassifier),
    Linear(LinearSoftmaxClassifier),
}

impl LoadedClassifier {
    pub fn as_dyn(&self) -> &dyn Classifier {
        match self {
            LoadedClassifier::Oracle(c) => c,
            LoadedClassifier::Linear(c) => c,
        }
    }
}

pub fn load_classifier(cfg: &RunConfig, dir: &RunDir) -> CliResult<LoadedClassifier> {
    match cfg.classifier {
        ClassifierConfig::Oracle { .. } => {
            let path = dir.oracle_model();
            if !path.exists() {
                return Err(CliError::Data(format!(
                    "no classifier at {}; run `train` first",
                    path.display()
                )));
            }
            Ok(LoadedClassifier::Oracle(read_json(&path)?))
        }
        ClassifierConfig::LinearSoftmax { .. } => {
            Ok(LoadedClassifier::Linear(load_linear_model(dir.linear_model())?))
        }
    }
}

fn accuracy(classifier: &dyn Classifier, ds: &Dataset) -> CliResult<Option<f64>> {
    let labelled: Vec<&TimeSeriesSample> =
        ds.samples().iter().filter(|s| s.label().is_some()).collect();
    if labelled.is_empty() {
        return Ok(None);
    }
    let inputs: Vec<Matrix> = labelled.iter().map(|s| s.values().clone()).collect();
    let probs = classifier.score_batch(&inputs)?;
    let correct = labelled
        .iter()
        .zip(&probs)
        .filter(|(s, p)| s.label() == Some(argmax(p)))
        .count();
    Ok(Some(correct as f64 / labelled.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub classifier: String,
    pub test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainReport>,
}

pub fn cmd_train(cfg: &RunConfig) -> CliResult<TrainSummary> {
    let dir = snapshot_config(cfg)?;
    let seeds = cfg.seeds();
    let mut log = StageLog::new();
    let train_ds = load_dataset(dir.train_data())?;
    let test_ds = load_dataset(dir.test_data())?;
    let shape = train_ds.shape();

    let (classifier, training) = match &cfg.classifier {
        ClassifierConfig::Oracle {
            spike_threshold,
            softness,
            noise_mean,
            noise_sigma,
        } => {
            if train_ds.num_classes() != 2 {
                return Err(CliError::Config(format!(
                    "the oracle classifier needs 2 classes, data has {}",
                    train_ds.num_classes()
                )));
            }
            let oracle = OracleAnomalyClassifier {
                shape,
                noise_mean: *noise_mean,
                noise_sigma: *noise_sigma,
                spike_threshold: *spike_threshold,
                softness: *softness,
            };
            ensure_parent(&dir.oracle_model())?;
            write_json(&dir.oracle_model(), &oracle)?;
            remove_if_exists(&dir.linear_model())?;
            (LoadedClassifier::Oracle(oracle), None)
        }
        ClassifierConfig::LinearSoftmax {
            feature_map,
            validation_fraction,
            train: train_cfg,
        } => {
            let n = train_ds.len();
            let n_valid = ((n as f64) * validation_fraction).round() as usize;
            if n_valid == 0 || n_valid >= n {
                return Err(CliError::Config(format!(
                    "validation_fraction {validation_fraction} leaves an empty split of {n} samples"
                )));
            }
            let mut rng = stream_rng(seeds.train, 0);
            let mut order = sample_indices(&mut rng, n, n).into_vec();
            let train_ids = order.split_off(n_valid);
            let valid = train_ds.subset(&order)?;
            let fit = train_ds.subset(&train_ids)?;
            let mut model =
                LinearSoftmaxClassifier::zeros(shape, train_ds.num_classes(), *feature_map);
            let report = train(&mut model, &fit, &valid, train_cfg, seeds.train)?;
            log.info(format!(
                "trained {} epochs, validation accuracy {}",
                report.epochs_run, report.validation_accuracy
            ));
            let prov = provenance(cfg)
                .with_seed("train", seeds.train)
                .with_params(params_value(&cfg.classifier));
            ensure_parent(&dir.linear_model())?;
            save_artifact(dir.linear_model(), &model, &prov)?;
            remove_if_exists(&dir.oracle_model())?;
            (LoadedClassifier::Linear(model), Some(report))
        }
    };

    let clf = classifier.as_dyn();
    let summary = TrainSummary {
        classifier: clf.id(),
        test_accuracy: accuracy(clf, &test_ds)?,
        training,
    };
    if let Some(acc) = summary.test_accuracy {
        log.info(format!("{} test accuracy {acc}", summary.classifier));
    }
    write_json(&dir.train_report(), &summary)?;
    log.save(&dir.log("train"))?;
    Ok(summary)
}

/// The evaluated test samples, by index into the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subset {
    pub seed: u64,
    pub pool: SubsetPool,
    pub sample_ids: Vec<usize>,
}

/// Draws up to `subset_size` test samples from the configured pool, sorted by index.
pub fn draw_subset(cfg: &RunConfig, test: &Dataset) -> CliResult<Subset> {
    let seed = cfg.seeds().subset;
    let pool: Vec<usize> = match cfg.attribution.subset_pool {
        SubsetPool::All => (0..test.len()).collect(),
        SubsetPool::Anomalous => test
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label() == Some(ANOMALOUS))
            .map(|(i, _)| i)
            .collect(),
    };
    if pool.is_empty() {
        return Err(CliError::Data("the subset pool is empty".into()));
    }
    let k = cfg.attribution.subset_size.min(pool.len());
    let mut rng = stream_rng(seed, 0);
    let mut ids: Vec<usize> = sample_indices(&mut rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    ids.sort_unstable();
    Ok(Subset {
        seed,
        pool: cfg.attribution.subset_pool.clone(),
        sample_ids: ids,
    })
}

/// Per-sample seed for a stage, so every sample gets its own stream.
pub fn sample_seed(stage_seed: u64, sample_id: usize) -> u64 {
    mix64(stage_seed ^ mix64(sample_id as u64))
}

fn methods_or_warn(cfg: &RunConfig) -> CliResult<Vec<MethodConfig>> {
    let methods = cfg.attribution.resolved_methods()?;
    if methods.is_empty() {
        return Err(CliError::NothingToDo("no attribution methods configured".into()));
    }
    Ok(methods)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSummary {
    pub subset: Subset,
    pub methods: Vec<String>,
    pub maps_written: usize,
}

pub fn cmd_attribute(cfg: &RunConfig) -> CliResult<AttributeSummary> {
    let methods = methods_or_warn(cfg)?;
    let dir = snapshot_config(cfg)?;
    let seeds = cfg.seeds();
    let mut log = StageLog::new();
    let train_ds = load_dataset(dir.train_data())?;
    let test_ds = load_dataset(dir.test_data())?;
    let loaded = load_classifier(cfg, &dir)?;
    let clf = loaded.as_dyn();
    let shape = test_ds.shape();

    let subset = draw_subset(cfg, &test_ds)?;
    if subset.sample_ids.len() < cfg.attribution.subset_size {
        log.warn(format!(
            "pool holds only {} samples, fewer than subset_size {}",
            subset.sample_ids.len(),
            cfg.attribution.subset_size
        ));
    }
    write_json(&dir.subset(), &subset)?;

    let mut written = 0;
    for method in &methods {
        let prepared = method.prepare(shape, seeds.masks)?;
        if let Some(masks) = prepared.maskset() {
            let prov = provenance(cfg)
                .with_seed("masks", masks.spec().seed)
                .with_params(params_value(method));
            ensure_parent(&dir.maskset())?;
            save_artifact(dir.maskset(), masks, &prov)?;
            log.info(format!("{}: {} masks", method.name(), masks.len()));
        }
        remove_if_exists(&dir.map_dir(method.name()))?;
        std::fs::create_dir_all(dir.map_dir(method.name()))
            .map_err(|e| CliError::Data(format!("create map directory: {e}")))?;
        let mut degenerate = 0;
        for &id in &subset.sample_ids {
            let seed = sample_seed(seeds.attribution, id);
            let req = AttributionRequest::new(
                test_ds.samples()[id].values(),
                clf,
                train_ds.channel_means(),
            )
            .with_seed(seed);
            let map = prepared.attribute(&req)?;
            if map.is_degenerate() {
                degenerate += 1;
            }
            let prov = provenance(cfg)
                .with_seed("masks", seeds.masks)
                .with_seed("attribution", seed)
                .with_params(json!({
                    "method": params_value(method),
                    "sample_id": id,
                    "classifier": clf.id(),
                }));
            save_artifact(dir.map(method.name(), id), &map, &prov)?;
            written += 1;
        }
        log.info(format!(
            "{}: {} maps, {degenerate} degenerate",
            method.name(),
            subset.sample_ids.len()
        ));
    }
    log.save(&dir.log("attribute"))?;
    Ok(AttributeSummary {
        subset,
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        maps_written: written,
    })
}

/// Metric values of one map.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub method: String,
    pub sample_id: usize,
    pub label: Option<usize>,
    pub target: usize,
    pub del_auc: f64,
    pub ins_auc: f64,
    pub infidelity: f64,
    pub sensitivity: f64,
    pub continuity: f64,
    pub continuity_total: f64,
    /// Whether the map's argmax is the true spike, when ground truth exists.
    pub gt_hit: Option<bool>,
}

impl SampleRow {
    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::DelAuc => self.del_auc,
            Metric::InsAuc => self.ins_auc,
            Metric::Infidelity => self.infidelity,
            Metric::Sensitivity => self.sensitivity,
            Metric::Continuity => self.continuity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub summary: MetricSummary,
    pub rows: Vec<SampleRow>,
}

impl EvaluationReport {
    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a SampleRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn mean(&self, method: &str, metric: Metric) -> Option<f64> {
        let values: Vec<f64> = self.rows_for(method).map(|r| r.metric(metric)).collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    pub fn gt_hits(&self, method: &str) -> usize {
        self.rows_for(method).filter(|r| r.gt_hit == Some(true)).count()
    }
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn per_sample_tsv(rows: &[SampleRow]) -> String {
    let mut out = String::from(
        "method\tsample_id\tlabel\ttarget\tdel_auc\tins_auc\tinfidelity\tsensitivity\tcontinuity\tcontinuity_total\tgt_hit\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.method,
            r.sample_id,
            fmt_opt(r.label),
            r.target,
            r.del_auc,
            r.ins_auc,
            r.infidelity,
            r.sensitivity,
            r.continuity,
            r.continuity_total,
            fmt_opt(r.gt_hit.map(u8::from)),
        ));
    }
    out
}

fn mean_curve(curves: &[CausalCurve]) -> CliResult<CausalCurve> {
    let n = curves.len() as f64;
    let values = (0..curves[0].values().len())
        .map(|k| curves.iter().map(|c| c.values()[k]).sum::<f64>() / n)
        .collect();
    Ok(CausalCurve::new(curves[0].fractions().to_vec(), values)?)
}

fn load_ground_truth(dir: &RunDir) -> CliResult<Vec<GroundTruthMap>> {
    let path = dir.ground_truth();
    if path.exists() {
        read_json(&path)
    } else {
        Ok(Vec::new())
    }
}

pub fn cmd_evaluate(cfg: &RunConfig) -> CliResult<EvaluationReport> {
    let methods = methods_or_warn(cfg)?;
    let dir = snapshot_config(cfg)?;
    let seeds = cfg.seeds();
    let m = &cfg.metrics;
    let mut log = StageLog::new();
    let train_ds = load_dataset(dir.train_data())?;
    let test_ds = load_dataset(dir.test_data())?;
    let loaded = load_classifier(cfg, &dir)?;
    let clf = loaded.as_dyn();
    let shape = test_ds.shape();
    let subset: Subset = read_json(&dir.subset())?;
    let truth = load_ground_truth(&dir)?;
    let dataset = test_ds.name().to_string();

    let missing: Vec<String> = methods
        .iter()
        .flat_map(|method| {
            subset
                .sample_ids
                .iter()
                .filter(|&&id| !dir.map(method.name(), id).exists())
                .map(move |id| format!("{}/{id}", method.name()))
        })
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Data(format!(
            "missing attribution maps: {}",
            missing.join(", ")
        )));
    }
    if let Some(&bad) = subset.sample_ids.iter().find(|&&id| id >= test_ds.len()) {
        return Err(CliError::Data(format!("subset sample {bad} is out of range")));
    }

    let baseline = match m.replacement {
        Replacement::ChannelMean => train_ds.mean_sample(),
        Replacement::Zero => Matrix::zeros(shape),
    };
    let stds = train_ds.channel_stds();
    let noise = scaled_stds(&stds, m.noise_scale);
    let radius = scaled_stds(&stds, m.radius_scale);
    log.info(format!(
        "{} samples, {} curve steps, noise sigma {:?}, radius {:?}",
        subset.sample_ids.len(),
        m.num_steps,
        noise,
        radius
    ));

    let mut summary = MetricSummary::new(subset.sample_ids.len(), "probability");
    let mut rows = Vec::new();
    for method in &methods {
        let name = method.name();
        let prepared = method.prepare(shape, seeds.masks)?;
        let mut deletions = Vec::new();
        let mut insertions = Vec::new();
        let mut maps = Vec::new();
        let mut samples = Vec::new();
        for &id in &subset.sample_ids {
            let sample = &test_ds.samples()[id];
            let x = sample.values();
            let map: AttributionMap = load_attribution_map(dir.map(name, id))?;
            map.scores().ensure_shape(shape)?;
            let target = map.target_class();
            let del = deletion_curve(x, &map, clf, &baseline, m.num_steps)?;
            let ins = insertion_curve(x, &map, clf, &baseline, m.num_steps)?;
            let inf = infidelity(
                x,
                map.scores(),
                clf,
                target,
                m.infidelity_perturbations,
                &noise,
                sample_seed(seeds.infidelity, id),
            )?;
            let req = AttributionRequest::new(x, clf, train_ds.channel_means())
                .with_seed(sample_seed(seeds.attribution, id))
                .with_target(Target::Class(target));
            let sens = sensitivity_max(
                x,
                |p| Ok(prepared.attribute(&req.with_sample(p))?.scores().clone()),
                &radius,
                m.sensitivity_perturbations,
                sample_seed(seeds.sensitivity, id),
            )?;
            let cont = continuity(map.scores());
            let gt_hit = truth
                .iter()
                .find(|g| g.split == Split::Test && g.sample_id == id)
                .map(|g| map.scores().argmax() == (g.channel, g.timestep));
            rows.push(SampleRow {
                method: name.to_string(),
                sample_id: id,
                label: sample.label(),
                target,
                del_auc: del.auc(),
                ins_auc: ins.auc(),
                infidelity: inf,
                sensitivity: sens,
                continuity: cont.normalized,
                continuity_total: cont.total,
                gt_hit,
            });
            deletions.push(del);
            insertions.push(ins);
            maps.push(map);
            samples.push(sample.clone());
        }

        write_text(&dir.curve(&format!("{name}_deletion.tsv")), &mean_curve(&deletions)?.to_tsv())?;
        write_text(&dir.curve(&format!("{name}_insertion.tsv")), &mean_curve(&insertions)?.to_tsv())?;
        if samples.iter().all(|s| s.label().is_some()) {
            for (mode, label) in [(CurveMode::Deletion, "deletion"), (CurveMode::Insertion, "insertion")] {
                let curve =
                    subset_accuracy_curve(&samples, &maps, clf, &baseline, mode, m.num_steps)?;
                write_text(&dir.curve(&format!("{name}_{label}_accuracy.tsv")), &curve.to_tsv())?;
            }
        } else {
            log.warn(format!("{name}: unlabelled samples, accuracy curves skipped"));
        }

        let method_rows: Vec<&SampleRow> = rows.iter().filter(|r| r.method == name).collect();
        for metric in Metric::ALL {
            let value = method_rows.iter().map(|r| r.metric(metric)).sum::<f64>()
                / method_rows.len() as f64;
            let seed = match metric {
                Metric::Infidelity => seeds.infidelity,
                Metric::Sensitivity => seeds.sensitivity,
                _ => subset.seed,
            };
            summary.push(MetricCell {
                dataset: dataset.clone(),
                method: name.to_string(),
                metric,
                value,
                seed,
                sample_ids: subset.sample_ids.clone(),
            })?;
            log.info(format!("{name} {metric} {value}"));
        }
        if !truth.is_empty() {
            let hits = method_rows.iter().filter(|r| r.gt_hit == Some(true)).count();
            let scored = method_rows.iter().filter(|r| r.gt_hit.is_some()).count();
            log.info(format!("{name} spike localization {hits}/{scored}"));
        }
    }

    let prov = provenance(cfg)
        .with_seed("subset", subset.seed)
        .with_seed("infidelity", seeds.infidelity)
        .with_seed("sensitivity", seeds.sensitivity)
        .with_params(params_value(&cfg.metrics));
    ensure_parent(&dir.eval("summary.trs"))?;
    save_artifact(dir.eval("summary.trs"), &summary, &prov)?;
    write_text(&dir.eval("summary.tsv"), &summary.to_tsv())?;
    write_text(&dir.eval("causal_table.tsv"), &summary.causal_table_tsv())?;
    write_text(&dir.eval("per_sample.tsv"), &per_sample_tsv(&rows))?;
    match rank_report(&summary, m.alpha)? {
        Some(ranks) => write_text(&dir.eval("ranks.tsv"), &ranks)?,
        None => {
            remove_if_exists(&dir.eval("ranks.tsv"))?;
            log.info("ranks omitted: they need at least two datasets and two methods");
        }
    }
    log.save(&dir.log("evaluate"))?;
    Ok(EvaluationReport { summary, rows })
}

/// Runs generate, train, attribute and evaluate in order.
pub fn cmd_run(cfg: &RunConfig) -> CliResult<EvaluationReport> {
    methods_or_warn(cfg)?;
    cmd_generate(cfg)?;
    cmd_train(cfg)?;
    cmd_attribute(cfg)?;
    cmd_evaluate(cfg)
}
