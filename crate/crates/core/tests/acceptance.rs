//! Acceptance criteria. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

use std::time::{Duration, Instant};

use serde_json::Value;

use tripclass::classifier::{ClassifierModel, Hyperparams};
use tripclass::corpus::{generate_fixture, write_csv, FixtureSpec, ReviewSet};
use tripclass::evalplan::{balance_train, make_folds};
use tripclass::extproto::{AdapterHandle, NativeAdapter, ProtocolError};
use tripclass::labeling::{binarize, propagate_labels, BinaryLabel, ConflictPolicy, DistributionStats};
use tripclass::pipeline::{
    build_folds, evaluate_adapter, evaluate_native, run_pipeline, write_fold_files, LangIdMode, ModelSpec,
    PipelineConfig,
};
use tripclass::rng::SeededRng;
use tripclass::stats::{
    compare_models, confusion, macro_f1, mean_and_ci, micro_f1, paired_t_test, CorrectionScope, EvalReport,
};

mod common;

const METRIC_TOL: f64 = 1e-12;
const METRIC_BUDGET: Duration = Duration::from_secs(5);
const FIXTURE_TOL: f64 = 1e-6;
const T_TOL: f64 = 1e-3;
const P_TOL: f64 = 1e-4;
const HALF_WIDTH_TOL: f64 = 1e-5;
const ALPHA_TOL: f64 = 1e-6;
const E2E_MIN_F1: f64 = 0.90;
const E2E_SHARE_TOL: f64 = 1.0;
const E2E_BUDGET: Duration = Duration::from_secs(60);
const GRAD_REL_TOL: f64 = 1e-4;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(2024);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = 1 + rng.index(200);
        // Every tenth case uses a single gold class or a single prediction.
        let (golds, preds) = match case % 10 {
            0 => (vec![BinaryLabel::Work; n], common::random_labels(&mut rng, n, 0.5)),
            1 => (common::random_labels(&mut rng, n, 0.3), vec![BinaryLabel::Leisure; n]),
            2 => (vec![BinaryLabel::Leisure; n], vec![BinaryLabel::Leisure; n]),
            _ => {
                let p = rng.next_f64();
                let g = common::random_labels(&mut rng, n, p);
                let q = rng.next_f64();
                (g, common::random_labels(&mut rng, n, q))
            }
        };
        let cm = confusion(&golds, &preds).map_err(|e| e.to_string())?;
        let (m, u) = common::oracle_f1(&golds, &preds);
        worst = worst.max((macro_f1(&cm) - m).abs()).max((micro_f1(&cm) - u).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst <= METRIC_TOL, || format!("max deviation {worst:e}"))?;
    ensure(elapsed < METRIC_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("1000 vectors, max deviation {worst:e}, {elapsed:.2?}"))
}

fn metric_fixtures() -> Outcome {
    use BinaryLabel::*;
    let cm = confusion(&[Work, Work, Leisure, Leisure], &[Work, Leisure, Leisure, Leisure]).unwrap();
    let (m1, u1) = (macro_f1(&cm), micro_f1(&cm));
    ensure((m1 - 0.733333).abs() <= FIXTURE_TOL, || format!("macro {m1}"))?;
    ensure(u1 == 0.75, || format!("micro {u1}"))?;
    let golds: Vec<BinaryLabel> = (0..100).map(|i| if i < 90 { Leisure } else { Work }).collect();
    let cm = confusion(&golds, &[Leisure; 100]).unwrap();
    let (m2, u2) = (macro_f1(&cm), micro_f1(&cm));
    ensure((m2 - 0.473684).abs() <= FIXTURE_TOL, || format!("all-majority macro {m2}"))?;
    ensure((u2 - 0.9).abs() <= 1e-15, || format!("all-majority micro {u2}"))?;
    Ok(format!("macro {m1:.6}, micro {u1}; all-majority macro {m2:.6}, micro {u2}"))
}

fn statistics() -> Outcome {
    let a = [0.72, 0.73, 0.71, 0.74, 0.72];
    let b = [0.70, 0.71, 0.70, 0.72, 0.71];
    let t = paired_t_test(&a, &b).map_err(|e| e.to_string())?;
    ensure((t.t - 6.5320).abs() <= T_TOL, || format!("t = {}", t.t))?;
    ensure(t.df == 4, || format!("df = {}", t.df))?;
    ensure((t.p_value - 0.00284).abs() <= P_TOL, || format!("p = {}", t.p_value))?;
    let ci = mean_and_ci(&[0.70, 0.71, 0.69, 0.72, 0.70], 0.95).map_err(|e| e.to_string())?;
    ensure((ci.ci_half_width - 0.014156).abs() <= HALF_WIDTH_TOL, || {
        format!("half-width {}", ci.ci_half_width)
    })?;
    let same = paired_t_test(&a, &a).map_err(|e| e.to_string())?;
    ensure(same.t == 0.0 && same.p_value == 1.0, || format!("identical: t {} p {}", same.t, same.p_value))?;
    let reports: Vec<EvalReport> = ["a", "b", "c"]
        .iter()
        .map(|n| EvalReport::new(*n, "plan", a.to_vec(), b.to_vec()).unwrap())
        .collect();
    let cmp = compare_models(&reports, 0.05, CorrectionScope::PerMetric).map_err(|e| e.to_string())?;
    ensure((cmp.adjusted_alpha - 0.016667).abs() <= ALPHA_TOL, || {
        format!("adjusted alpha {}", cmp.adjusted_alpha)
    })?;
    Ok(format!(
        "t {:.4}, p {:.5}, half-width {:.6}, adjusted alpha {:.6}",
        t.t, t.p_value, ci.ci_half_width, cmp.adjusted_alpha
    ))
}

fn fold_properties() -> Outcome {
    let mut rng = SeededRng::new(500);
    let mut checked = 0;
    for case in 0..500u64 {
        let n = 10 + rng.index(300);
        let p = 0.05 + 0.5 * rng.next_f64();
        let labels = common::random_labels(&mut rng, n, p);
        let n_work = labels.iter().filter(|&&l| l == BinaryLabel::Work).count();
        if n_work == 0 || n_work == n {
            continue;
        }
        let plan = make_folds(&labels, 5, case, true).map_err(|e| format!("case {case}: {e}"))?;
        let mut seen = vec![0u8; n];
        for f in 0..5 {
            plan.test_indices(f).iter().for_each(|&i| seen[i] += 1);
        }
        ensure(seen.iter().all(|&c| c == 1), || format!("case {case}: not a partition"))?;
        let sizes: Vec<usize> = (0..5).map(|f| plan.test_indices(f).len()).collect();
        ensure(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, || {
            format!("case {case}: fold sizes {sizes:?}")
        })?;
        let ideal = n_work as f64 / 5.0;
        let mut balance_json = Vec::new();
        for f in 0..5 {
            let w = plan.test_indices(f).iter().filter(|&&i| labels[i] == BinaryLabel::Work).count();
            ensure((w as f64 - ideal).abs() <= 1.0, || format!("case {case} fold {f}: {w} work vs {ideal}"))?;
            let train: Vec<(usize, BinaryLabel)> = plan.train_indices(f).into_iter().map(|i| (i, labels[i])).collect();
            if let Ok(b) = balance_train(&train, case, f) {
                let w = b.indices().iter().filter(|&&i| labels[i] == BinaryLabel::Work).count();
                ensure(2 * w == b.indices().len(), || format!("case {case} fold {f}: unbalanced training set"))?;
                balance_json.push(serde_json::to_string(&b).unwrap());
            }
        }
        let rerun = make_folds(&labels, 5, case, true).unwrap();
        ensure(rerun.to_json() == plan.to_json(), || format!("case {case}: plan differs on rerun"))?;
        let rerun_balance: Vec<String> = (0..5)
            .filter_map(|f| {
                let train: Vec<(usize, BinaryLabel)> = rerun.train_indices(f).into_iter().map(|i| (i, labels[i])).collect();
                balance_train(&train, case, f).ok().map(|b| serde_json::to_string(&b).unwrap())
            })
            .collect();
        ensure(rerun_balance == balance_json, || format!("case {case}: balance differs on rerun"))?;
        checked += 1;
    }
    Ok(format!("{checked} label vectors"))
}

fn augmentation() -> Outcome {
    let (set, expected, n_expected) = common::augmentation_fixture();
    let (out, n) = propagate_labels(&set, ConflictPolicy::MajorityOrDrop);
    ensure(n == n_expected, || format!("n_augmented {n}, expected {n_expected}"))?;
    for (id, label) in &expected {
        let got = out.get(id).and_then(|r| r.label);
        ensure(got == *label, || format!("{id}: {got:?}, expected {label:?}"))?;
    }
    let (again, n2) = propagate_labels(&out, ConflictPolicy::MajorityOrDrop);
    ensure(again.records() == out.records() && n2 == 0, || "second application changed labels".into())?;
    Ok(format!("{} reviews, n_augmented {n}, idempotent", set.len()))
}

fn distribution() -> Outcome {
    let set = generate_fixture(&FixtureSpec::new(10_000, 0.1233, 0.9, 1)).map_err(|e| e.to_string())?;
    let (_, stats) = binarize(&set);
    ensure(stats.n_work == 1233 && stats.n_leisure == 8767, || {
        format!("{} work / {} leisure", stats.n_work, stats.n_leisure)
    })?;
    let direct = DistributionStats::from_counts(1233, 8767, 0);
    let (w, l) = (format!("{:.2}", stats.pct_work), format!("{:.2}", stats.pct_leisure));
    ensure(w == "12.33" && l == "87.67", || format!("pct_work {w}, pct_leisure {l}"))?;
    ensure(direct == stats, || "counted and direct stats differ".into())?;
    let table = stats.to_table();
    ensure(table.contains("12.33%") && table.contains("87.67%"), || table.clone())?;
    Ok(format!("pct_work {w}, pct_leisure {l}"))
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        inputs: vec![],
        synth: Some(FixtureSpec::new(10_000, 0.1233, 0.9, 7)),
        strict: false,
        langid: LangIdMode::Bundled,
        threshold: 0.5,
        augment: true,
        conflict_policy: ConflictPolicy::MajorityOrDrop,
        k: 5,
        seed: Some(7),
        stratified: true,
        balance: true,
        models: vec![ModelSpec::Native {
            name: "native".into(),
            hyperparams: Value::Null,
        }],
        alpha: 0.05,
        correction: CorrectionScope::PerMetric,
        output_dir: Some(dir.path().to_path_buf()),
    };
    let start = Instant::now();
    let outcome = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let report = &outcome.reports[0];
    ensure(report.k == 5, || format!("{} folds", report.k))?;
    let (m, u) = (report.macro_f1.mean, report.micro_f1.mean);
    ensure(m >= E2E_MIN_F1, || format!("Macro-F1 {m}"))?;
    ensure(u >= E2E_MIN_F1, || format!("Micro-F1 {u}"))?;
    let data = tripclass::corpus::ingest_csv(dir.path().join("binarized.csv"), true).map_err(|e| e.to_string())?;
    let (rows, _) = binarize(&data);
    let mut shares = Vec::new();
    for f in 0..outcome.plan.k {
        let test = outcome.plan.test_indices(f);
        let w = test.iter().filter(|&&i| rows[i].1 == BinaryLabel::Work).count();
        let share = 100.0 * w as f64 / test.len() as f64;
        ensure((share - 12.33).abs() <= E2E_SHARE_TOL, || format!("fold {f} work share {share:.2}%"))?;
        shares.push(format!("{share:.2}"));
    }
    ensure(elapsed < E2E_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "Macro-F1 {m:.4}, Micro-F1 {u:.4}, test work shares [{}]%, {elapsed:.2?}",
        shares.join(", ")
    ))
}

fn gradient_check() -> Outcome {
    let mut rng = SeededRng::new(8);
    let hp = Hyperparams { hash_dim: 1 << 8, ..Hyperparams::with_seed(8) };
    let words = ["meeting", "beach", "hotel", "client", "pool", "quiet", "desk", "wine"];
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut model = ClassifierModel::zeros(hp, [0.5, 0.5]).map_err(|e| e.to_string())?;
        for b in 0..hp.hash_dim {
            for class in BinaryLabel::ALL {
                model.set_weight(b, class, rng.next_f64() - 0.5);
            }
        }
        for class in BinaryLabel::ALL {
            model.set_bias(class, rng.next_f64() - 0.5);
        }
        let text: Vec<&str> = (0..3 + rng.index(6)).map(|_| *rng.choose(&words)).collect();
        let x = model.features(&text.join(" "));
        let label = if rng.bernoulli(0.5) { BinaryLabel::Work } else { BinaryLabel::Leisure };
        let grad = model.example_gradient(&x, label);
        let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        for &(b, g) in &grad.weights {
            for class in BinaryLabel::ALL {
                let w = model.weight(b, class);
                model.set_weight(b, class, w + h);
                let up = model.example_loss(&x, label);
                model.set_weight(b, class, w - h);
                let down = model.example_loss(&x, label);
                model.set_weight(b, class, w);
                worst = worst.max(rel(g[class.index()], (up - down) / (2.0 * h)));
            }
        }
        for class in BinaryLabel::ALL {
            let v = model.bias(class);
            model.set_bias(class, v + h);
            let up = model.example_loss(&x, label);
            model.set_bias(class, v - h);
            let down = model.example_loss(&x, label);
            model.set_bias(class, v);
            worst = worst.max(rel(grad.bias[class.index()], (up - down) / (2.0 * h)));
        }
    }
    ensure(worst <= GRAD_REL_TOL, || format!("max relative error {worst:e}"))?;
    Ok(format!("10 instances, max relative error {worst:e}"))
}

fn protocol() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let set = generate_fixture(&FixtureSpec::new(300, 0.2, 0.6, 13)).map_err(|e| e.to_string())?;
    let (train, test) = set.records().split_at(240);
    let (train_file, test_file) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    write_csv(&ReviewSet::from_records(train.to_vec()), &train_file).map_err(|e| e.to_string())?;
    write_csv(&ReviewSet::from_records(test.to_vec()), &test_file).map_err(|e| e.to_string())?;
    let echo = |flags: &[&str]| -> Vec<String> {
        std::iter::once(env!("CARGO_BIN_EXE_echo_adapter"))
            .chain(flags.iter().copied())
            .map(String::from)
            .collect()
    };
    let predict_with = |flags: &[&str]| -> Result<usize, ProtocolError> {
        let mut h = AdapterHandle::start(&echo(flags))?;
        h.remote_train(&train_file, dir.path(), &Value::Null)?;
        let n = h.remote_predict(&test_file)?.len();
        h.shutdown()?;
        Ok(n)
    };
    let n = predict_with(&[]).map_err(|e| format!("round trip: {e}"))?;
    ensure(n == test.len(), || format!("{n} predictions for {} records", test.len()))?;
    let missing = predict_with(&["--drop-last"]);
    ensure(matches!(missing, Err(ProtocolError::MissingPrediction(_))), || format!("drop-last gave {missing:?}"))?;
    let dup = predict_with(&["--duplicate-first"]);
    ensure(matches!(dup, Err(ProtocolError::MalformedReply(_))), || format!("duplicate gave {dup:?}"))?;
    let unknown = predict_with(&["--unknown-id"]);
    ensure(matches!(unknown, Err(ProtocolError::UnknownId(_))), || format!("unknown id gave {unknown:?}"))?;

    let (rows, _) = binarize(&set);
    let labels: Vec<BinaryLabel> = rows.iter().map(|(_, l)| *l).collect();
    let plan = make_folds(&labels, 5, 13, true).map_err(|e| e.to_string())?;
    let folds = build_folds(&rows, &plan, true, 13).map_err(|e| e.to_string())?;
    let hp = Hyperparams { hash_dim: 1 << 16, ..Hyperparams::with_seed(13) };
    let (direct, _) = evaluate_native("native", &hp, &plan, &folds).map_err(|e| e.to_string())?;
    let files = write_fold_files(dir.path(), &folds).map_err(|e| e.to_string())?;
    let mut adapter = NativeAdapter::new("native", hp);
    let (via, _) = evaluate_adapter(&mut adapter, "native", &Value::Null, &plan, &folds, &files, &dir.path().join("m"))
        .map_err(|e| e.to_string())?;
    let bits = |r: &EvalReport| -> Vec<u64> {
        r.macro_f1.per_fold.iter().chain(&r.micro_f1.per_fold).map(|v| v.to_bits()).collect()
    };
    ensure(bits(&direct) == bits(&via), || "in-process adapter metrics differ from direct call".into())?;
    Ok(format!(
        "handshake/train/predict ok, missing/duplicate/unknown ids rejected, adapter Macro-F1 {:.4} == direct",
        via.macro_f1.mean
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("metric oracle equivalence", metric_oracle),
        ("hand-computed metric fixtures", metric_fixtures),
        ("statistics", statistics),
        ("fold/balance properties", fold_properties),
        ("augmentation fixture", augmentation),
        ("distribution accounting", distribution),
        ("end-to-end separability run", end_to_end),
        ("native classifier gradient check", gradient_check),
        ("protocol conformance", protocol),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL [{}] {name}: {why}", i + 1);
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
