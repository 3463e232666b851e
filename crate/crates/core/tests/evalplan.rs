use proptest::prelude::*;

use tripclass::evalplan::{balance_train, make_folds, FoldPlan, PlanError};
use tripclass::labeling::BinaryLabel;
use tripclass::rng::SeededRng;

mod common;

fn check_plan(labels: &[BinaryLabel], plan: &FoldPlan) {
    let n = labels.len();
    let k = plan.k;
    let mut seen = vec![false; n];
    for f in 0..k {
        for &i in plan.test_indices(f) {
            assert!(!seen[i], "index {i} in two folds");
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&s| s));
    let sizes: Vec<usize> = (0..k).map(|f| plan.test_indices(f).len()).collect();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{sizes:?}");
    let n_work = labels.iter().filter(|&&l| l == BinaryLabel::Work).count() as f64;
    for f in 0..k {
        let w = plan.test_indices(f).iter().filter(|&&i| labels[i] == BinaryLabel::Work).count() as f64;
        assert!((w - n_work / k as f64).abs() <= 1.0, "fold {f}: {w} work vs ideal {}", n_work / k as f64);
    }
}

#[test]
fn random_stratified_plans_hold_their_invariants() {
    let mut rng = SeededRng::new(99);
    for case in 0..500u64 {
        let n = 10 + rng.index(400);
        let p_work = 0.05 + 0.5 * rng.next_f64();
        let labels = common::random_labels(&mut rng, n, p_work);
        if !labels.contains(&BinaryLabel::Work) || !labels.contains(&BinaryLabel::Leisure) {
            continue;
        }
        let plan = make_folds(&labels, 5, case, true).unwrap();
        check_plan(&labels, &plan);
        assert_eq!(plan.to_json(), make_folds(&labels, 5, case, true).unwrap().to_json());
        for f in 0..5 {
            let train: Vec<(usize, BinaryLabel)> = plan.train_indices(f).into_iter().map(|i| (i, labels[i])).collect();
            let Ok(b) = balance_train(&train, case, f) else { continue };
            assert_eq!(b.selected_majority.len(), b.selected_minority.len());
            assert!(b.selected_minority.iter().all(|&i| labels[i] == b.minority));
            assert!(b.selected_majority.iter().all(|&i| labels[i] != b.minority));
        }
    }
}

#[test]
fn plan_json_round_trips_and_validates() {
    let labels = common::random_labels(&mut SeededRng::new(1), 50, 0.3);
    let plan = make_folds(&labels, 5, 1, true).unwrap();
    let back = FoldPlan::from_json(&plan.to_json()).unwrap();
    assert_eq!(back, plan);
    assert_eq!(back.fingerprint(), plan.fingerprint());
    assert!(back.validate(50).is_ok());
    assert!(matches!(back.validate(51), Err(PlanError::InvalidPlan(_))));
}

#[test]
fn different_seeds_give_different_plans() {
    let labels = common::random_labels(&mut SeededRng::new(2), 200, 0.3);
    let a = make_folds(&labels, 5, 1, true).unwrap();
    let b = make_folds(&labels, 5, 2, true).unwrap();
    assert_ne!(a.fingerprint(), b.fingerprint());
}

#[test]
fn unstratified_plans_partition_too() {
    let labels = common::random_labels(&mut SeededRng::new(3), 103, 0.2);
    let plan = make_folds(&labels, 4, 3, false).unwrap();
    let mut all: Vec<usize> = (0..4).flat_map(|f| plan.test_indices(f).to_vec()).collect();
    all.sort_unstable();
    assert_eq!(all, (0..103).collect::<Vec<_>>());
}

#[test]
fn invalid_requests_are_rejected() {
    use BinaryLabel::*;
    assert!(matches!(make_folds(&[Work, Leisure], 1, 0, true), Err(PlanError::InvalidFoldCount(1))));
    assert!(matches!(make_folds(&[Work, Leisure], 3, 0, true), Err(PlanError::TooFewInstances { .. })));
    assert!(matches!(make_folds(&[Leisure; 10], 5, 0, true), Err(PlanError::EmptyClass(_))));
    assert!(matches!(
        balance_train(&[(0, Work), (1, Work)], 0, 2),
        Err(PlanError::SingleClassTrainingSet { fold_index: 2 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balancing_keeps_all_minority(seed in any::<u64>(), n_work in 1usize..30, n_leis in 1usize..60) {
        let train: Vec<(usize, BinaryLabel)> = (0..n_work + n_leis)
            .map(|i| (i * 3, if i < n_work { BinaryLabel::Work } else { BinaryLabel::Leisure }))
            .collect();
        let b = balance_train(&train, seed, 0).unwrap();
        prop_assert_eq!(b.n_mino, n_work.min(n_leis));
        prop_assert_eq!(b.indices().len(), 2 * b.n_mino);
        let again = balance_train(&train, seed, 0).unwrap();
        prop_assert_eq!(b, again);
    }
}
