use tripclass::classifier::{self, featurize, tokenize, ClassifierError, ClassifierModel, Hyperparams};
use tripclass::corpus::{generate_fixture, FixtureSpec};
use tripclass::labeling::BinaryLabel;

fn examples(spec: &FixtureSpec) -> Vec<(String, BinaryLabel)> {
    generate_fixture(spec)
        .unwrap()
        .iter()
        .map(|r| (r.text.clone(), BinaryLabel::from(r.label.unwrap())))
        .collect()
}

#[test]
fn separable_fixture_is_fit_perfectly() {
    let data = examples(&FixtureSpec::new(400, 0.5, 1.0, 4));
    let model = classifier::train(&data, &Hyperparams::with_seed(4)).unwrap();
    let correct = data.iter().filter(|(t, l)| model.predict(t).label == *l).count();
    assert_eq!(correct, data.len());
    let p = model.predict("meeting conference client colleagues business presentation office deadline");
    assert_eq!(p.label, BinaryLabel::Work);
    assert!(p.score >= 0.9, "score {}", p.score);
}

#[test]
fn saved_model_predicts_identically() {
    let data = examples(&FixtureSpec::new(600, 0.2, 0.6, 9));
    let hp = Hyperparams { hash_dim: 1 << 16, ..Hyperparams::with_seed(9) };
    let model = classifier::train(&data, &hp).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.tpc");
    model.save(&path).unwrap();
    let back = ClassifierModel::load(&path).unwrap();
    let probe = examples(&FixtureSpec::new(1000, 0.5, 0.3, 10));
    for (text, _) in &probe {
        let (a, b) = (model.predict(text), back.predict(text));
        assert_eq!(a.label, b.label);
        assert_eq!(a.score.to_bits(), b.score.to_bits());
    }
    assert_eq!(back.to_bytes(), model.to_bytes());
}

#[test]
fn epoch_loss_does_not_increase() {
    let data = examples(&FixtureSpec::new(500, 0.3, 0.7, 12));
    let (_, losses) = classifier::train_traced(&data, &Hyperparams::with_seed(12)).unwrap();
    assert_eq!(losses.len(), 5);
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{losses:?}");
    }
}

#[test]
fn training_is_deterministic() {
    let data = examples(&FixtureSpec::new(300, 0.3, 0.7, 1));
    let hp = Hyperparams { hash_dim: 1 << 14, ..Hyperparams::with_seed(1) };
    let a = classifier::train(&data, &hp).unwrap();
    let b = classifier::train(&data, &hp).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn whitespace_and_case_do_not_change_predictions() {
    let data = examples(&FixtureSpec::new(300, 0.4, 0.8, 2));
    let model = classifier::train(&data, &Hyperparams { hash_dim: 1 << 14, ..Hyperparams::with_seed(2) }).unwrap();
    for (text, _) in data.iter().take(100) {
        let messy = format!("  {}\t\n", text.to_uppercase().replace(' ', "   "));
        assert_eq!(model.predict(text).score.to_bits(), model.predict(&messy).score.to_bits());
    }
}

#[test]
fn features_are_unit_length() {
    let x = featurize(&tokenize("Quiet room, quiet street; great breakfast!"), 1 << 10, 2);
    let norm: f64 = x.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
    assert!(featurize(&tokenize("  ,;  "), 1 << 10, 2).is_empty());
}

#[test]
fn single_class_training_is_rejected() {
    let data = vec![("a b c".to_string(), BinaryLabel::Work); 3];
    assert!(matches!(
        classifier::train(&data, &Hyperparams::with_seed(0)),
        Err(ClassifierError::SingleClassTrainingSet)
    ));
}

#[test]
fn bad_hyperparameters_are_rejected() {
    let data = examples(&FixtureSpec::new(20, 0.5, 0.8, 2));
    for hp in [
        Hyperparams { hash_dim: 1000, ..Hyperparams::with_seed(0) },
        Hyperparams { ngram: 0, ..Hyperparams::with_seed(0) },
        Hyperparams { epochs: 0, ..Hyperparams::with_seed(0) },
        Hyperparams { learning_rate: -1.0, ..Hyperparams::with_seed(0) },
    ] {
        assert!(matches!(classifier::train(&data, &hp), Err(ClassifierError::InvalidHyperparams(_))));
    }
}

#[test]
fn corrupt_model_bytes_are_rejected() {
    let data = examples(&FixtureSpec::new(50, 0.5, 0.8, 2));
    let model = classifier::train(&data, &Hyperparams { hash_dim: 1 << 8, ..Hyperparams::with_seed(0) }).unwrap();
    let bytes = model.to_bytes();
    for cut in [0, 4, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(
            ClassifierModel::from_bytes(&bytes[..cut]),
            Err(ClassifierError::CorruptModelFile(_))
        ));
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(ClassifierModel::from_bytes(&extra).is_err());
}
