use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use woamlp::feature_io::{
    self, fit_normalizer, load_feature_table, save_feature_table, FeatureTable,
};
use woamlp::nn::{Activation, MlpTopology, ParamVector};
use woamlp::trainer::{self, load_model, save_model, TrainConfig, TrainError, TrainedModel};

fn full_ct_table() -> FeatureTable {
    // 1252 covid + 1230 non-covid rows, interleaved
    let mut labels = Vec::with_capacity(2482);
    labels.extend(std::iter::repeat_n("covid", 1252));
    labels.extend(std::iter::repeat_n("non-covid", 1230));
    let n = labels.len();
    FeatureTable::from_labeled(
        (0..n).map(|i| format!("ct{i:04}")).collect(),
        (0..n).map(|i| vec![i as f64, (i % 7) as f64]).collect(),
        &labels,
    )
    .unwrap()
}

#[test]
fn full_ct_table_loads_with_class_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ct.csv");
    save_feature_table(&full_ct_table(), &path).unwrap();
    let t = load_feature_table(&path).unwrap();
    assert_eq!(t.len(), 2482);
    assert_eq!(t.class_names, vec!["covid", "non-covid"]);
    assert_eq!(t.class_counts(), vec![1252, 1230]);
}

#[test]
fn quarter_split_gives_620_test_samples() {
    let (train, test) = feature_io::split(&full_ct_table(), 0.25, 0).unwrap();
    assert_eq!(test.class_counts(), vec![313, 307]);
    assert_eq!(test.len(), 620);
    assert_eq!(train.len(), 1862);
}

#[test]
fn save_load_keeps_ids_labels_and_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            (0..3)
                .map(|_| rng.gen_range(-1e6..1e6) * rng.gen::<f64>())
                .collect()
        })
        .collect();
    let labels: Vec<&str> = (0..20)
        .map(|i| if i % 3 == 0 { "x y" } else { "z" })
        .collect();
    let t = FeatureTable::from_labeled((0..20).map(|i| format!("s-{i}")).collect(), rows, &labels)
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    save_feature_table(&t, &path).unwrap();
    assert_eq!(load_feature_table(&path).unwrap(), t);
}

fn random_model(seed: u64, normalized: bool) -> TrainedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topology = MlpTopology::new(vec![3, 5, 2], Activation::Tanh).unwrap();
    let params = ParamVector(
        (0..topology.param_count())
            .map(|_| rng.gen_range(-10.0..10.0))
            .collect(),
    );
    let normalizer = normalized.then(|| {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let labels = ["a", "b", "a", "b", "a", "b"];
        let t = FeatureTable::from_labeled((0..6).map(|i| i.to_string()).collect(), rows, &labels)
            .unwrap();
        fit_normalizer(&t).unwrap()
    });
    TrainedModel {
        topology,
        params,
        normalizer,
        class_names: vec!["covid".into(), "non-covid".into()],
        history: vec![0.4, 0.3, 0.3],
    }
}

#[test]
fn model_round_trip_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for normalized in [false, true] {
        let model = random_model(3, normalized);
        let path = dir.path().join("m.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let (a, b) = (model.predict(&x).unwrap(), back.predict(&x).unwrap());
            assert_eq!(a.label, b.label);
            for (p, q) in a.probabilities.iter().zip(&b.probabilities) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn truncated_model_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let json = random_model(1, true).to_json();
    fs::write(&path, &json[..json.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(TrainError::Malformed(_))));
    assert!(matches!(
        load_model(dir.path().join("missing.json")),
        Err(TrainError::Io { .. })
    ));
}

#[test]
fn hand_written_model_json_loads() {
    let json = r#"{
        "topology": {"layers": [1, 2], "hidden_activation": "sigmoid"},
        "params": [1.0, -1.0, 0.0, 0.0],
        "normalizer": null,
        "class_names": ["covid", "non-covid"],
        "history": [0.25]
    }"#;
    let m = TrainedModel::from_json(json).unwrap();
    // logits (x, -x)
    assert_eq!(m.predict(&[2.0]).unwrap().label, "covid");
    assert_eq!(m.predict(&[-2.0]).unwrap().label, "non-covid");
    let p = m.predict(&[0.5]).unwrap().probabilities;
    assert!((p[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
}

#[test]
fn model_json_schema_keys() {
    let v: serde_json::Value = serde_json::from_str(&random_model(2, true).to_json()).unwrap();
    let obj = v.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(
        keys,
        ["class_names", "history", "normalizer", "params", "topology"]
    );
    assert!(v["topology"]["layers"].is_array());
    assert_eq!(v["topology"]["hidden_activation"], "tanh");
    assert!(v["normalizer"]["means"].is_array());
    assert!(v["normalizer"]["stddevs"].is_array());
}

#[test]
fn training_is_reproducible_and_elitist() {
    let t = FeatureTable::from_labeled(
        (0..6).map(|i| i.to_string()).collect(),
        vec![
            vec![0.0, 1.0],
            vec![1.0, 0.5],
            vec![0.2, 0.1],
            vec![3.0, 2.0],
            vec![2.5, 3.1],
            vec![4.0, 2.2],
        ],
        &["a", "a", "a", "b", "b", "b"],
    )
    .unwrap();
    let mut cfg = TrainConfig::new(MlpTopology::new(vec![2, 3, 2], Activation::Sigmoid).unwrap());
    cfg.woa.max_iterations = 50;
    cfg.woa.seed = 21;
    let a = trainer::train(&cfg, &t).unwrap();
    let b = trainer::train(&cfg, &t).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.history.len(), 50);
    assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
    assert!(a.params.0.iter().all(|p| p.abs() <= cfg.weight_bound));
    assert_eq!(a.class_names, vec!["a", "b"]);
}

#[test]
fn fused_width_smoke() {
    // fused 4096 + 2048 inputs, 20 hidden, 2 outputs: 122,942 parameters
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..6144).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let t = FeatureTable::from_labeled(
        (0..4).map(|i| i.to_string()).collect(),
        rows,
        &["a", "b", "a", "b"],
    )
    .unwrap();
    let mut cfg =
        TrainConfig::new(MlpTopology::new(vec![6144, 20, 2], Activation::Sigmoid).unwrap());
    cfg.woa.population_size = 4;
    cfg.woa.max_iterations = 2;
    let m = trainer::train(&cfg, &t).unwrap();
    assert_eq!(m.params.len(), 122_942);
    assert_eq!(m.history.len(), 2);
}
