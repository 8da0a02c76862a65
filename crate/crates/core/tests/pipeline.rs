//! Library-level pipeline: generate, deduplicate, split, train all three
//! families at small scale, score them within and across corpora, and run
//! the audit metrics over a model-labeled corpus.

use namefair_core::corpus::{
    deduplicate, generate_synthetic_corpus, marker_spec, split, NameRecord, Task,
};
use namefair_core::eval::{cross_evaluate, error_buckets, evaluate, UnknownPolicy};
use namefair_core::fairness::{representation_series, Cohort, PeriodKind, SeriesMode};
use namefair_core::features::{fit_ngram_index, CharVocabulary};
use namefair_core::models::charcnn::CharModelOptions;
use namefair_core::models::{train_charcnn, train_charlstm, train_logreg, TrainConfig};

#[test]
fn three_families_learn_the_marker_task() {
    let spec = marker_spec([0.95, 0.05], 2_500, 400, 120);
    let corpus = generate_synthetic_corpus(&spec, 2024).unwrap();
    let labeled = deduplicate(&corpus.records, Task::Gender).unwrap();
    let pair = split(&labeled, 0.7, 9).unwrap();
    let names: Vec<&str> = pair.train.iter().map(|l| l.name.as_str()).collect();

    let lr_config = TrainConfig {
        epochs: 300,
        early_stop_patience: 30,
        ..TrainConfig::logreg(5)
    };
    let index = fit_ngram_index(&names, 1, 4, 2).unwrap();
    let logreg = train_logreg(&pair.train, &index, &lr_config)
        .unwrap()
        .into_artifact(Task::Gender, &lr_config, false);

    let char_config = TrainConfig {
        epochs: 14,
        early_stop_patience: 14,
        ..TrainConfig::char_model(6)
    };
    let options = CharModelOptions {
        max_len: 20,
        embed_dim: 8,
    };
    let vocab = CharVocabulary::fit(&names);
    let cnn = train_charcnn(&pair.train, &vocab, &char_config, &options)
        .unwrap()
        .into_artifact(Task::Gender, &char_config, false);
    let lstm = train_charlstm(&pair.train, &vocab, &char_config, &options)
        .unwrap()
        .into_artifact(Task::Gender, &char_config, false);

    let mut accuracies = Vec::new();
    for artifact in [&logreg, &cnn, &lstm] {
        let preds = artifact.predictions_for(&pair.test);
        let report = evaluate(&preds, &pair.test, UnknownPolicy::CountWrong).unwrap();
        assert!(
            report.accuracy > 0.80,
            "{} reached only {:.4}",
            artifact.family.name(),
            report.accuracy
        );
        accuracies.push((artifact.family.name(), report.accuracy));
    }

    // cross-evaluation against a same-convention sibling corpus transfers
    let sibling = generate_synthetic_corpus(&spec, 4048).unwrap();
    let sibling_pair = split(&deduplicate(&sibling.records, Task::Gender).unwrap(), 0.7, 10).unwrap();
    let cross = cross_evaluate(&cnn, &sibling_pair.test, Task::Gender, "a", "b").unwrap();
    assert!(cross.accuracy > 0.80, "cross accuracy {:.4}", cross.accuracy);
    assert_eq!(cross.train_source.as_deref(), Some("a"));

    // error buckets between two of the models partition the test set
    let buckets = error_buckets(
        &logreg.predictions_for(&pair.test),
        &cnn.predictions_for(&pair.test),
        &pair.test,
    )
    .unwrap();
    assert_eq!(buckets.total(), pair.test.len());

    // batch prediction is just the fold of single predictions
    let batch = lstm.predict_batch(pair.test.iter().take(50).map(|l| l.name.as_str()));
    for (one, item) in batch.iter().zip(pair.test.iter().take(50)) {
        let single = lstm.predict(&item.name);
        assert_eq!(one, &single);
    }

    // artifacts serialize byte-stably: save -> load -> save is identical
    let dir = tempfile::tempdir().unwrap();
    for artifact in [&logreg, &cnn, &lstm] {
        let first = dir.path().join(format!("{}_1.bin", artifact.family.name()));
        let second = dir.path().join(format!("{}_2.bin", artifact.family.name()));
        namefair_core::models::save_model(artifact, &first).unwrap();
        let loaded = namefair_core::models::load_model(&first).unwrap();
        namefair_core::models::save_model(&loaded, &second).unwrap();
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap(),
            "{} artifact bytes drifted across a round trip",
            artifact.family.name()
        );
    }

    println!("accuracies: {accuracies:?}, cross {:.4}", cross.accuracy);
}

/// Median validation loss over five seeds improves from the first epoch to
/// the best epoch.
#[test]
fn validation_loss_improves_in_the_median() {
    let spec = marker_spec([0.9, 0.1], 1_200, 300, 100);
    let corpus = generate_synthetic_corpus(&spec, 99).unwrap();
    let labeled = deduplicate(&corpus.records, Task::Gender).unwrap();
    let names: Vec<&str> = labeled.iter().map(|l| l.name.as_str()).collect();
    let index = fit_ngram_index(&names, 1, 4, 2).unwrap();

    let mut first_epoch = Vec::new();
    let mut best_epoch = Vec::new();
    for seed in 0..5 {
        let config = TrainConfig {
            epochs: 60,
            early_stop_patience: 60,
            ..TrainConfig::logreg(seed)
        };
        let trained = train_logreg(&labeled, &index, &config).unwrap();
        let losses = &trained.metrics.epoch_losses;
        first_epoch.push(losses[0].val_loss);
        best_epoch.push(
            losses[trained.metrics.best_epoch - 1].val_loss,
        );
    }
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[(v.len() - 1) / 2]
    };
    let start = median(first_epoch);
    let best = median(best_epoch);
    assert!(
        best < start,
        "median val loss did not improve: epoch 1 {start:.4} vs best {best:.4}"
    );
}

#[test]
fn audits_run_on_model_predicted_labels() {
    // social-shaped corpus without gold labels; a trained model fills them
    let mut spec = marker_spec([0.9, 0.1], 1_500, 300, 100);
    spec.social = Some(namefair_core::corpus::SocialParams {
        max_followers: 10_000,
        max_posts: 500,
        created_range: (1_577_836_800, 1_640_995_200),
    });
    let corpus = generate_synthetic_corpus(&spec, 77).unwrap();
    let labeled = deduplicate(&corpus.records, Task::Gender).unwrap();
    let pair = split(&labeled, 0.7, 3).unwrap();
    let names: Vec<&str> = pair.train.iter().map(|l| l.name.as_str()).collect();
    let config = TrainConfig {
        epochs: 300,
        early_stop_patience: 30,
        ..TrainConfig::logreg(5)
    };
    let index = fit_ngram_index(&names, 1, 4, 2).unwrap();
    let model = train_logreg(&pair.train, &index, &config)
        .unwrap()
        .into_artifact(Task::Gender, &config, false);

    let mut unlabeled: Vec<NameRecord> = corpus
        .records
        .iter()
        .map(|r| NameRecord {
            gender: None,
            ..r.clone()
        })
        .collect();
    for record in &mut unlabeled {
        let prediction = model.predict(&namefair_core::corpus::normalize_name(&record.raw_name));
        record.set_label(Task::Gender, prediction.label);
    }

    let (gold_series, _) = representation_series(
        &corpus.records,
        &Cohort::female(),
        PeriodKind::Month,
        SeriesMode::PerPeriod,
    )
    .unwrap();
    let (predicted_series, _) = representation_series(
        &unlabeled,
        &Cohort::female(),
        PeriodKind::Month,
        SeriesMode::PerPeriod,
    )
    .unwrap();
    assert_eq!(gold_series.points.len(), predicted_series.points.len());
    for (gold, predicted) in gold_series.points.iter().zip(&predicted_series.points) {
        assert_eq!(gold.period, predicted.period);
        assert_eq!(gold.n, predicted.n);
        // a well-trained model's shares track the gold shares closely
        assert!(
            (gold.value - predicted.value).abs() < 0.12,
            "{}: gold {:.3} vs predicted {:.3}",
            gold.period,
            gold.value,
            predicted.value
        );
    }
}
