use timereise_core::classifiers::{predict, train, FeatureMap, TrainConfig};
use timereise_core::dataio::{generate_anomaly_dataset, AnomalyGenSpec};
use timereise_core::{LinearSoftmaxClassifier, OracleAnomalyClassifier};

#[test]
fn quartic_linear_model_separates_seed7_anomalies() {
    let data = generate_anomaly_dataset(&AnomalyGenSpec {
        n_train: 2000,
        n_test: 500,
        seed: 7,
        ..AnomalyGenSpec::default()
    })
    .unwrap();
    let map = FeatureMap::Quartic {
        center: 0.0,
        scale: 3.0,
        offset: 1.0 / 27.0,
    };
    let mut model = LinearSoftmaxClassifier::zeros(data.train.shape(), 2, map);
    let report = train(&mut model, &data.train, &data.test, &TrainConfig::default(), 7).unwrap();
    assert!(report.validation_accuracy >= 0.95, "{report:?}");

    // The oracle on the same split bounds what any model can reach.
    let oracle = OracleAnomalyClassifier::new(data.test.shape());
    let correct = data
        .test
        .samples()
        .iter()
        .filter(|s| Some(predict(&oracle, s.values()).unwrap()) == s.label())
        .count();
    let oracle_acc = correct as f64 / data.test.len() as f64;
    assert!(oracle_acc >= report.validation_accuracy - 0.01, "{oracle_acc}");
}

#[test]
fn training_is_reproducible() {
    let data = generate_anomaly_dataset(&AnomalyGenSpec {
        n_train: 300,
        n_test: 100,
        seed: 3,
        ..AnomalyGenSpec::default()
    })
    .unwrap();
    let cfg = TrainConfig {
        max_epochs: 5,
        ..TrainConfig::default()
    };
    let run = || {
        let mut m = LinearSoftmaxClassifier::zeros(data.train.shape(), 2, FeatureMap::Identity);
        let r = train(&mut m, &data.train, &data.test, &cfg, 11).unwrap();
        (m, r)
    };
    assert_eq!(run(), run());
}
