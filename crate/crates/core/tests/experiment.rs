use rand::Rng;
use rulecast::correctness::CorrectnessModel;
use rulecast::data::{Dataset, FeatureKind, FeatureMatrix, FeatureSpec, Schema, SplitPlan};
use rulecast::eval::{compute_auc, run_experiment, Baseline, ExperimentConfig, Variant};
use rulecast::pipeline::{train_pipeline, PipelineConfig};
use rulecast::seed::rng_from;
use std::collections::HashSet;
use std::path::PathBuf;

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn load(name: &str) -> (FeatureMatrix, Vec<u8>) {
    let schema = Schema::from_file(repo_file(&format!("schemas/{name}.schema"))).unwrap();
    let ds = Dataset::load_csv(repo_file(&format!("data/{name}.csv")), &schema)
        .unwrap()
        .impute_mode()
        .unwrap();
    (FeatureMatrix::from_dataset(&ds).unwrap(), ds.labels)
}

fn noise(seed: u64, n: usize, d: usize) -> (FeatureMatrix, Vec<u8>) {
    let mut rng = rng_from(seed);
    let specs = (0..d)
        .map(|j| FeatureSpec {
            name: format!("f{j}"),
            kind: FeatureKind::Numeric,
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let y = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
    (FeatureMatrix::from_rows(specs, &rows).unwrap(), y)
}

#[test]
fn folds_are_isolated() {
    let (_, y) = load("heart");
    let plan = SplitPlan::new(&y, 10, 5, 3).unwrap();
    for r in 0..10 {
        let mut seen = HashSet::new();
        for f in 0..5 {
            let (train, test) = plan.split(r, f);
            let train_set: HashSet<usize> = train.iter().copied().collect();
            assert!(test.iter().all(|i| !train_set.contains(i)));
            assert_eq!(train.len() + test.len(), y.len());
            for &i in &test {
                assert!(seen.insert(i));
            }
            assert!(test.iter().any(|&i| y[i] == 0) && test.iter().any(|&i| y[i] == 1));
        }
        assert_eq!(seen.len(), y.len());
    }
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        m_values: vec![3, 5],
        pipeline: PipelineConfig {
            n_trees: 20,
            ..PipelineConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn report_is_reproducible() {
    let (x, y) = load("heart");
    let plan = SplitPlan::new(&y, 2, 3, 11).unwrap();
    let a = run_experiment("heart", &x, &y, &plan, &small_config()).unwrap();
    let b = run_experiment("heart", &x, &y, &plan, &small_config()).unwrap();
    assert_eq!(a, b);
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    a.write_folds_csv(&mut ca).unwrap();
    b.write_folds_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    // 3 baselines + 2 averaging modes × 2 values of M, per cell.
    assert_eq!(a.aucs.len(), 2 * 3 * 7);
    for row in a.summary() {
        assert_eq!(row.n, 6);
        assert!((0.0..=1.0).contains(&row.mean_auc));
    }
}

#[test]
fn variant_enumeration_without_baselines() {
    let (x, y) = load("heart");
    let plan = SplitPlan::new(&y, 1, 2, 5).unwrap();
    let config = ExperimentConfig {
        m_values: vec![5],
        baselines: vec![],
        ..small_config()
    };
    let report = run_experiment("heart", &x, &y, &plan, &config).unwrap();
    let variants: Vec<_> = report.variants();
    assert_eq!(
        variants,
        vec![(Variant::Weighted, Some(5)), (Variant::SimpleMean, Some(5))]
    );
}

#[test]
fn always_correct_stub_makes_weighting_neutral() {
    let (x, y) = load("diabetes");
    let plan = SplitPlan::new(&y, 1, 5, 2).unwrap();
    let (train, test) = plan.split(0, 0);
    let x_train = x.select(&train);
    let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
    let config = PipelineConfig {
        m: 5,
        n_trees: 30,
        ..PipelineConfig::default()
    };
    let mut model = train_pipeline(&x_train, &y_train, &config).unwrap();
    for m in model.correctness.models.iter_mut() {
        *m = CorrectnessModel::Constant { correct: 1 };
    }
    let labels: Vec<u8> = test.iter().map(|&i| y[i]).collect();
    let traces: Vec<_> = test
        .iter()
        .map(|&i| model.predict(x.row(i)).unwrap())
        .collect();
    let weighted: Vec<f64> = traces.iter().map(|t| t.probability).collect();
    let simple: Vec<f64> = traces.iter().map(|t| t.simple_mean()).collect();
    assert_eq!(weighted, simple);
    assert_eq!(
        compute_auc(&weighted, &labels).unwrap(),
        compute_auc(&simple, &labels).unwrap()
    );
}

#[test]
fn diabetes_rules_use_diabetes_columns() {
    let (x, y) = load("diabetes");
    let config = PipelineConfig {
        m: 3,
        seed: 7,
        ..PipelineConfig::default()
    };
    let model = train_pipeline(&x, &y, &config).unwrap();
    assert_eq!(model.m(), 3);
    for rule in &model.selected.rules {
        assert!(!rule.conditions.is_empty() && rule.conditions.len() <= 3);
        assert!(rule.features().all(|f| f < 8));
    }
    assert_eq!(model, train_pipeline(&x, &y, &config).unwrap());
}

#[test]
fn labels_independent_of_features_give_chance_auc() {
    // One noise dataset of this size has a between-dataset AUC spread of
    // about 0.03, so the chance level is estimated over several of them.
    let config = ExperimentConfig {
        baselines: Baseline::ALL.to_vec(),
        ..ExperimentConfig::default()
    };
    let datasets = 6;
    let mut totals: Vec<(String, f64)> = Vec::new();
    for seed in 1..=datasets {
        let (x, y) = noise(seed, 200, 5);
        let plan = SplitPlan::new(&y, 10, 5, seed).unwrap();
        let report = run_experiment("noise", &x, &y, &plan, &config).unwrap();
        let summary = report.summary();
        if totals.is_empty() {
            totals = summary
                .iter()
                .map(|r| (format!("{} M={:?}", r.variant, r.m), 0.0))
                .collect();
        }
        for (t, row) in totals.iter_mut().zip(&summary) {
            t.1 += row.mean_auc / datasets as f64;
        }
    }
    assert_eq!(totals.len(), 3 + 2 * 5);
    for (name, auc) in totals {
        assert!((auc - 0.5).abs() <= 0.05, "{name}: {auc}");
    }
}
