mod common;

use raman_tda::evaluate::{grid_search, lopo_splits, majority_baseline, run_config, ConfigOutcome};
use raman_tda::{
    demo, ClassifierConfig, ClassifierKind, Label, PipelineConfig, TransformKind,
    VectorizationConfig,
};
use rand::seq::SliceRandom;

#[test]
fn betti_curve_separates_peak_counts() {
    let ds = demo::dataset(0);
    let result = run_config(&ds, &common::raw_betti(ClassifierKind::Ridge, 25, 0)).unwrap();
    assert_eq!(result.accuracy, 1.0);
    assert_eq!(result.total, 30);
    assert!((result.majority_baseline - 22.0 / 30.0).abs() < 1e-12);
}

#[test]
fn shuffled_labels_do_not_beat_the_baseline() {
    let ds = demo::dataset(0);
    let config = common::raw_betti(ClassifierKind::Ridge, 25, 0);
    let mut total = 0.0;
    for seed in 0..10 {
        let mut labels = ds.labels();
        labels.shuffle(&mut common::rng(100 + seed));
        let shuffled = ds.with_labels(&labels);
        total += run_config(&shuffled, &config)
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"))
            .accuracy;
    }
    let baseline = majority_baseline(&ds.labels()).unwrap();
    assert!(total / 10.0 <= baseline + 0.15, "{}", total / 10.0);
}

#[test]
fn folds_partition_the_demo_cohort() {
    let ds = demo::dataset(0);
    let folds = lopo_splits(&ds).unwrap();
    assert_eq!(folds.len(), 24);
    let mut seen = vec![0; ds.len()];
    for fold in &folds {
        for &i in &fold.test {
            seen[i] += 1;
            assert_eq!(ds.samples()[i].patient_id, fold.held_out_patient);
        }
        assert!(fold.train.iter().all(|i| !fold.test.contains(i)));
        assert_eq!(fold.train.len() + fold.test.len(), ds.len());
    }
    assert!(seen.iter().all(|&c| c == 1));
    let p04 = folds.iter().find(|f| f.held_out_patient == "P04").unwrap();
    assert_eq!(p04.test.len(), 3);
}

#[test]
fn forest_training_never_sees_held_out_spectra() {
    let ds = demo::dataset(0);
    assert!(
        common::leaking_folds(&ds, &common::raw_betti(ClassifierKind::Forest, 25, 0)).is_empty()
    );
}

#[test]
fn seed_changes_only_the_forest() {
    let ds = demo::dataset(0);
    for kind in ClassifierKind::ALL {
        let a = run_config(&ds, &common::raw_betti(kind, 50, 1)).unwrap();
        let b = run_config(&ds, &common::raw_betti(kind, 50, 2)).unwrap();
        let structure = |r: &raman_tda::ExperimentResult| -> Vec<(String, Vec<String>)> {
            r.folds
                .iter()
                .map(|f| {
                    (
                        f.held_out_patient.clone(),
                        f.predictions.iter().map(|p| p.sample.clone()).collect(),
                    )
                })
                .collect()
        };
        assert_eq!(structure(&a), structure(&b));
        if kind != ClassifierKind::Forest {
            assert_eq!(a.folds, b.folds);
        }
    }
}

#[test]
fn single_config_grid_reports_that_config() {
    let ds = demo::dataset(0);
    let config = common::raw_betti(ClassifierKind::Svc, 25, 0);
    let report = grid_search(&ds, std::slice::from_ref(&config), Some(1)).unwrap();
    assert_eq!(report.outcomes.len(), 1);
    assert_eq!(report.outcomes[0].config(), &config);
    assert_eq!(report.to_jsonl().lines().count(), 1);
    assert_eq!(report.ranking_csv().lines().count(), 2);
}

#[test]
fn dominating_config_ranks_first() {
    let ds = demo::dataset(0);
    let winner = common::raw_betti(ClassifierKind::Ridge, 25, 0);
    let perfect = run_config(&ds, &winner).unwrap();
    assert_eq!(perfect.accuracy, 1.0);
    // find a weaker configuration; every fold of the winner is all-correct
    let weaker = TransformKind::ALL
        .into_iter()
        .flat_map(|transform| {
            VectorizationConfig::paper_grid()
                .into_iter()
                .map(move |vectorization| PipelineConfig {
                    transform,
                    vectorization,
                    classifier: ClassifierConfig::default_for(ClassifierKind::Svc),
                    ..common::raw_betti(ClassifierKind::Svc, 25, 0)
                })
        })
        .find(|c| {
            run_config(&ds, c)
                .map(|r| r.accuracy < 1.0)
                .unwrap_or(false)
        })
        .expect("some configuration misclassifies a sample");
    // listed first so that a tie would favour it
    let report = grid_search(&ds, &[weaker.clone(), winner.clone()], Some(2)).unwrap();
    match report.ranked()[0] {
        ConfigOutcome::Ok(r) => assert_eq!(r.config, winner),
        other => panic!("{other:?}"),
    }
    assert_eq!(report.summary()[0].accuracy, Some(1.0));
}

#[test]
fn worker_count_does_not_change_outputs() {
    let ds = demo::dataset(2);
    let grid: Vec<PipelineConfig> = ClassifierKind::ALL
        .into_iter()
        .flat_map(|k| [common::raw_betti(k, 25, 3), common::raw_betti(k, 75, 3)])
        .collect();
    let one = grid_search(&ds, &grid, Some(1)).unwrap();
    let four = grid_search(&ds, &grid, Some(4)).unwrap();
    assert_eq!(one.to_jsonl(), four.to_jsonl());
    assert_eq!(one.summary_csv(), four.summary_csv());
    assert_eq!(one.ranking_csv(), four.ranking_csv());
}

#[test]
fn paired_labels_stay_with_their_patient() {
    let ds = demo::dataset(0);
    for s in ds.samples() {
        let expected = if ["P04", "P09", "P14", "P19", "P24"].contains(&s.patient_id.as_str()) {
            Label::NoAd
        } else {
            Label::Ad
        };
        assert_eq!(s.label, expected);
    }
}
