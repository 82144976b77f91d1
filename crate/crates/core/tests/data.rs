mod common;

use lgt_core::data::{
    load_csv_from_reader, make_linear_regression, make_synthetic, DataError, Splits, SyntheticKind, SyntheticParams,
    TargetColumn,
};
use lgt_core::trainer::{compute_metrics, Dataset, MetricSet};
use lgt_core::TaskType;
use ndarray::{Array1, Array2, Axis};

#[test]
fn iris_loads_and_splits_120_30() {
    let data = common::iris_manifest().load().unwrap();
    assert_eq!((data.len(), data.n_features()), (150, 4));
    assert_eq!(data.task, TaskType::Classification { classes: 3 });
    for c in 0..3 {
        assert_eq!(data.targets.iter().filter(|&&t| t == c as f64).count(), 50);
    }
    let s = Splits::prepare(&data, 0.8, 42).unwrap();
    assert_eq!((s.train.len(), s.test.len()), (120, 30));
    assert_eq!(s.fit.len() + s.val.len(), 120);
    for c in 0..3 {
        assert_eq!(s.test.targets.iter().filter(|&&t| t == c as f64).count(), 10);
    }
}

#[test]
fn training_split_is_standardized_with_its_own_statistics() {
    let data = common::iris_manifest().load().unwrap();
    let s = Splits::prepare(&data, 0.8, 42).unwrap();
    for col in s.train.features.axis_iter(Axis(1)) {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9, "{mean}");
        assert!((std - 1.0).abs() < 1e-6, "{std}");
    }
    assert_eq!(s.test.standardization, s.train.standardization);
    let z = s.train.standardization.as_ref().unwrap();
    assert!(z.stds.iter().all(|&v| v > 0.0));
}

#[test]
fn splits_are_deterministic() {
    let data = common::iris_manifest().load().unwrap();
    let a = Splits::prepare(&data, 0.8, 5).unwrap();
    assert_eq!(a, Splits::prepare(&data, 0.8, 5).unwrap());
    assert_ne!(a.test, Splits::prepare(&data, 0.8, 6).unwrap().test);
    assert_eq!(a.train.len() + a.test.len(), data.len());
    assert_eq!(a.dataset_hash, Splits::prepare(&data, 0.8, 6).unwrap().dataset_hash);
}

#[test]
fn csv_errors_name_row_and_column() {
    let text = "a,b,target\n1,2,x\n3,oops,y\n";
    let err = load_csv_from_reader(text.as_bytes(), &TargetColumn::Name("target".into()), TaskType::Classification { classes: 2 });
    match err {
        Err(DataError::NonNumeric { row, column, value }) => assert_eq!((row, column.as_str(), value.as_str()), (2, "b", "oops")),
        other => panic!("{other:?}"),
    }
    let missing = load_csv_from_reader(text.as_bytes(), &TargetColumn::Name("label".into()), TaskType::Regression);
    assert!(matches!(missing, Err(DataError::MissingTarget(_))));
}

/// Multinomial logistic regression by full-batch gradient descent.
fn logistic_accuracy(train: &Dataset, test: &Dataset, classes: usize) -> f64 {
    let d = train.n_features();
    let mut w = Array2::<f64>::zeros((d + 1, classes));
    let with_bias = |x: &Array2<f64>| {
        let mut b = Array2::ones((x.nrows(), d + 1));
        b.slice_mut(ndarray::s![.., ..d]).assign(x);
        b
    };
    let x = with_bias(&train.features);
    let n = x.nrows() as f64;
    for _ in 0..500 {
        let mut p = x.dot(&w);
        for mut row in p.axis_iter_mut(Axis(0)) {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - m).exp());
            let s = row.sum();
            row.mapv_inplace(|v| v / s);
        }
        for (i, &t) in train.targets.iter().enumerate() {
            p[[i, t as usize]] -= 1.0;
        }
        w = w - x.t().dot(&p) * (0.5 / n);
    }
    let scores = with_bias(&test.features).dot(&w);
    match compute_metrics(test.task, &scores, &test.targets).unwrap() {
        MetricSet::Classification { accuracy, .. } => accuracy,
        other => panic!("{other:?}"),
    }
}

#[test]
fn blobs_are_separable_by_a_linear_model() {
    for seed in 0..5 {
        let s = common::blobs_splits(seed);
        let acc = logistic_accuracy(&s.train, &s.test, 3);
        assert!(acc >= 0.95, "seed {seed}: {acc}");
    }
}

/// Fitted values of least squares with intercept, solved through the
/// normal equations.
fn ols(x: &Array2<f64>, y: &[f64]) -> Array1<f64> {
    let d = x.ncols() + 1;
    let mut a = Array2::ones((x.nrows(), d));
    a.slice_mut(ndarray::s![.., 1..]).assign(x);
    let mut m = a.t().dot(&a);
    let mut b = a.t().dot(&Array1::from(y.to_vec()));
    for k in 0..d {
        let pivot = (k..d).max_by(|&i, &j| m[[i, k]].abs().total_cmp(&m[[j, k]].abs())).unwrap();
        for j in 0..d {
            m.swap([k, j], [pivot, j]);
        }
        b.swap(k, pivot);
        for i in k + 1..d {
            let f = m[[i, k]] / m[[k, k]];
            for j in k..d {
                m[[i, j]] -= f * m[[k, j]];
            }
            b[i] -= f * b[k];
        }
    }
    let mut beta = Array1::zeros(d);
    for k in (0..d).rev() {
        let s: f64 = (k + 1..d).map(|j| m[[k, j]] * beta[j]).sum();
        beta[k] = (b[k] - s) / m[[k, k]];
    }
    a.dot(&beta)
}

#[test]
fn noiseless_linear_data_is_fit_exactly() {
    let p = SyntheticParams {
        noise: Some(0.0),
        ..Default::default()
    };
    let (data, _) = make_linear_regression(&p, 11);
    let s = Splits::prepare(&data, 0.8, 11).unwrap();
    let fitted = ols(&s.train.features, &s.train.targets);
    let preds = fitted.insert_axis(Axis(1));
    match compute_metrics(TaskType::Regression, &preds, &s.train.targets).unwrap() {
        MetricSet::Regression { r2, mse, .. } => {
            assert!((r2 - 1.0).abs() < 1e-9, "{r2}");
            assert!(mse < 1e-12, "{mse}");
        }
        other => panic!("{other:?}"),
    }
    let noisy = make_synthetic(SyntheticKind::LinearRegression, &SyntheticParams::default(), 11);
    assert_ne!(noisy.targets, data.targets);
}

#[test]
fn overfit_trap_has_many_noise_features() {
    let d = make_synthetic(SyntheticKind::OverfitTrap, &SyntheticParams::default(), 1);
    assert_eq!((d.len(), d.n_features()), (240, 40));
    let ones = d.targets.iter().filter(|&&t| t == 1.0).count();
    assert!((80..=160).contains(&ones), "{ones}");
}
