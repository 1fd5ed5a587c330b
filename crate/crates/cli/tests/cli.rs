use std::path::Path;
use std::process::Command;

use timereise_cli::config::{MethodEntry, SubsetPool};
use timereise_cli::layout::RunDir;
use timereise_cli::pipeline::{cmd_attribute, cmd_evaluate, cmd_generate, cmd_train};
use timereise_cli::report::cmd_report;
use timereise_cli::{exit, CliError, Overrides, RunConfig};
use timereise_core::dataio::{file_digest, label_histogram, load_dataset};
use timereise_core::metrics::Metric;
use timereise_core::Shape;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_timereise"));
    c.env("RUST_LOG", "error");
    c
}

fn small(out: &Path, methods: &[&str]) -> RunConfig {
    let mut cfg = RunConfig {
        out_dir: out.to_path_buf(),
        ..RunConfig::default()
    };
    cfg.apply(&Overrides {
        n_train: Some(600),
        n_test: Some(300),
        subset_size: Some(12),
        infidelity_perturbations: Some(50),
        sensitivity_perturbations: Some(2),
        ..Default::default()
    })
    .unwrap();
    cfg.attribution.methods = methods.iter().map(|m| MethodEntry::Name(m.to_string())).collect();
    cfg
}

#[test]
fn default_generate_writes_three_files_with_default_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(tmp.path(), &["timereise"]);
    cmd_generate(&cfg).unwrap();
    let dir = RunDir::new(tmp.path());
    for p in [dir.train_data(), dir.test_data(), dir.ground_truth()] {
        assert!(p.exists(), "{}", p.display());
    }
    assert_eq!(load_dataset(dir.train_data()).unwrap().shape(), Shape::new(3, 50));
    assert_eq!(load_dataset(dir.test_data()).unwrap().shape(), Shape::new(3, 50));

    let before = file_digest(dir.test_data()).unwrap();
    cmd_generate(&cfg).unwrap();
    assert_eq!(file_digest(dir.test_data()).unwrap(), before);
}

#[test]
fn anomaly_rate_quarter_histogram() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), &["timereise"]);
    cfg.apply(&Overrides {
        n_train: Some(4000),
        anomaly_rate: Some(0.25),
        ..Default::default()
    })
    .unwrap();
    cmd_generate(&cfg).unwrap();
    let train = load_dataset(RunDir::new(tmp.path()).train_data()).unwrap();
    let anomalous = label_histogram(&train)
        .into_iter()
        .find(|(l, _)| *l == Some(1))
        .map_or(0, |(_, n)| n) as f64;
    let n = 4000.0;
    let sd = (n * 0.25 * 0.75f64).sqrt();
    assert!((anomalous - 0.25 * n).abs() <= 3.0 * sd, "{anomalous}");
}

#[test]
fn attribute_writes_one_map_per_sample_and_method() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), &["timereise", "occlusion"]);
    cfg.attribution.subset_size = 100;
    cfg.attribution.subset_pool = SubsetPool::All;
    cmd_generate(&cfg).unwrap();
    cmd_train(&cfg).unwrap();
    let summary = cmd_attribute(&cfg).unwrap();
    assert_eq!(summary.subset.sample_ids.len(), 100);
    assert_eq!(summary.maps_written, 200);
    let dir = RunDir::new(tmp.path());
    for m in ["timereise", "occlusion"] {
        assert_eq!(std::fs::read_dir(dir.map_dir(m)).unwrap().count(), 100);
    }
    let first = file_digest(dir.map("timereise", summary.subset.sample_ids[3])).unwrap();
    cmd_attribute(&cfg).unwrap();
    assert_eq!(
        file_digest(dir.map("timereise", summary.subset.sample_ids[3])).unwrap(),
        first
    );
}

#[test]
fn evaluate_two_methods_five_metrics_and_rerun_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(tmp.path(), &["timereise", "occlusion"]);
    cmd_generate(&cfg).unwrap();
    cmd_train(&cfg).unwrap();
    cmd_attribute(&cfg).unwrap();
    let report = cmd_evaluate(&cfg).unwrap();
    assert_eq!(report.summary.cells.len(), 2 * 5);
    for m in ["timereise", "occlusion"] {
        for metric in Metric::ALL {
            assert!(report.summary.get("Anomaly", m, metric).is_some());
        }
    }
    let dir = RunDir::new(tmp.path());
    assert!(!dir.eval("ranks.tsv").exists());
    let causal = std::fs::read_to_string(dir.eval("causal_table.tsv")).unwrap();
    assert!(causal.starts_with("dataset\ttimereise_del\ttimereise_ins\tocclusion_del\tocclusion_ins\n"));
    let digest = file_digest(dir.eval("summary.trs")).unwrap();
    cmd_evaluate(&cfg).unwrap();
    assert_eq!(file_digest(dir.eval("summary.trs")).unwrap(), digest);
}

#[test]
fn evaluate_lists_missing_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(tmp.path(), &["occlusion"]);
    cmd_generate(&cfg).unwrap();
    cmd_train(&cfg).unwrap();
    let summary = cmd_attribute(&cfg).unwrap();
    let dir = RunDir::new(tmp.path());
    let gone = summary.subset.sample_ids[0];
    std::fs::remove_file(dir.map("occlusion", gone)).unwrap();
    let with_extra = small(tmp.path(), &["occlusion", "feature_ablation"]);
    let err = cmd_evaluate(&with_extra).unwrap_err();
    let msg = err.to_string();
    assert_eq!(err.exit_code(), exit::DATA);
    assert!(msg.contains(&format!("occlusion/{gone}")), "{msg}");
    assert!(msg.contains("feature_ablation/"), "{msg}");
}

#[test]
fn one_method_one_dataset_has_no_ranks_but_two_runs_do() {
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (i, name) in ["Anomaly", "AnomalyB"].iter().enumerate() {
        let out = tmp.path().join(name);
        let mut cfg = small(&out, &["timereise", "occlusion"]);
        cfg.seed = 20 + i as u64;
        if let timereise_cli::config::DataConfig::Generate { name: n, .. } = &mut cfg.data {
            *n = name.to_string();
        }
        cmd_generate(&cfg).unwrap();
        cmd_train(&cfg).unwrap();
        cmd_attribute(&cfg).unwrap();
        cmd_evaluate(&cfg).unwrap();
        runs.push(out);
    }
    let single = cmd_report(&runs[..1], &runs[0], 0.05).unwrap();
    assert!(single.contains("need at least two datasets"));
    assert!(!RunDir::new(&runs[0]).ranks().exists());

    let merged_dir = tmp.path().join("merged");
    let md = cmd_report(&runs, &merged_dir, 0.05).unwrap();
    assert!(md.contains("Critical difference"), "{md}");
    let ranks = std::fs::read_to_string(RunDir::new(&merged_dir).ranks()).unwrap();
    assert!(ranks.contains("del_auc\ttimereise\t"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");

    let status = bin()
        .args(["attribute", "--methods", "", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(exit::NOTHING_TO_DO));

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "seed = \"seven\"\n").unwrap();
    let status = bin().arg("--config").arg(&bad).arg("generate").status().unwrap();
    assert_eq!(status.code(), Some(exit::CONFIG));

    let status = bin()
        .args(["generate", "--anomaly-rate", "1.5", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(exit::CONFIG));

    // Training before generation has no data to read.
    let status = bin().args(["train", "--out-dir"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(exit::DATA));

    let status = bin()
        .args(["generate", "--n-train", "50", "--n-test", "20", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(exit::SUCCESS));
    assert!(out.join("config.toml").exists());
    assert!(out.join("logs").join("generate.log").exists());
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("run.toml");
    std::fs::write(
        &path,
        format!(
            "seed = 3\nout_dir = {:?}\n[classifier]\nkind = \"linear_softmax\"\nvalidation_fraction = 0.25\n[classifier.feature_map]\nkind = \"identity\"\n[classifier.train]\nlearning_rate = 0.05\nmax_epochs = 3\nbatch_size = 16\nplateau_patience = 2\nmin_improvement = 0.0001\nmax_halvings = 1\n",
            tmp.path().join("ignored")
        ),
    )
    .unwrap();
    let flags = timereise_cli::Flags {
        out_dir: Some(tmp.path().join("run")),
        n_train: Some(200),
        n_test: Some(50),
        ..Default::default()
    };
    let cfg = timereise_cli::resolve_config(Some(&path), &flags).unwrap();
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.out_dir, tmp.path().join("run"));
    cmd_generate(&cfg).unwrap();
    let summary = cmd_train(&cfg).unwrap();
    assert_eq!(summary.training.unwrap().epochs_run, 3);
    assert!(RunDir::new(&cfg.out_dir).linear_model().exists());

    let snapshot = std::fs::read_to_string(RunDir::new(&cfg.out_dir).config_snapshot()).unwrap();
    assert_eq!(RunConfig::from_toml_str(&snapshot).unwrap(), cfg);
}

#[test]
fn text_sources_are_imported() {
    let tmp = tempfile::tempdir().unwrap();
    let gen_dir = tmp.path().join("gen");
    let cfg = small(&gen_dir, &["occlusion"]);
    cmd_generate(&cfg).unwrap();
    let dir = RunDir::new(&gen_dir);
    let train = load_dataset(dir.train_data()).unwrap();
    let test = load_dataset(dir.test_data()).unwrap();
    let (tr, te) = (tmp.path().join("train.jsonl"), tmp.path().join("test.jsonl"));
    timereise_core::dataio::write_multivariate_jsonl(&train, &tr).unwrap();
    timereise_core::dataio::write_multivariate_jsonl(&test, &te).unwrap();

    let mut imported = small(&tmp.path().join("imported"), &["occlusion"]);
    imported.data = timereise_cli::config::DataConfig::MultivariateJsonl {
        name: "Imported".into(),
        train: tr,
        test: te,
    };
    cmd_generate(&imported).unwrap();
    let back = load_dataset(RunDir::new(&imported.out_dir).test_data()).unwrap();
    assert_eq!(back.name(), "Imported");
    assert_eq!(back.samples(), test.samples());
    assert!(!RunDir::new(&imported.out_dir).ground_truth().exists());
}

#[test]
fn empty_method_list_is_a_warning_not_a_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(tmp.path(), &[]);
    let err = cmd_attribute(&cfg).unwrap_err();
    assert!(matches!(err, CliError::NothingToDo(_)));
    assert_eq!(err.exit_code(), 5);
}
