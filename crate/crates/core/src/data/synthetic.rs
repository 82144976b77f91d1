use crate::rng::{derived, stream, SeededRng};
use crate::task::TaskType;
use crate::trainer::Dataset;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    BlobsClassification,
    LinearRegression,
    OverfitTrap,
}

/// Generator knobs. Unset fields take per-kind defaults (see [`Resolved`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_features: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    /// Blobs: scale of the cluster centres. Overfit trap: signal strength.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    /// Standard deviation of additive noise on targets (regression).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Overfit trap: how many leading features carry signal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informative: Option<usize>,
    /// Overfit trap: probability of flipping each label.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_noise: Option<f64>,
}

/// Concrete generator settings after filling defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub n_samples: usize,
    pub n_features: usize,
    pub classes: usize,
    pub separation: f64,
    pub noise: f64,
    pub informative: usize,
    pub label_noise: f64,
}

impl SyntheticParams {
    pub fn resolve(&self, kind: SyntheticKind) -> Resolved {
        let base = match kind {
            SyntheticKind::BlobsClassification => Resolved {
                n_samples: 150,
                n_features: 4,
                classes: 3,
                separation: 4.0,
                noise: 1.0,
                informative: 4,
                label_noise: 0.0,
            },
            SyntheticKind::LinearRegression => Resolved {
                n_samples: 200,
                n_features: 5,
                classes: 0,
                separation: 1.0,
                noise: 0.1,
                informative: 5,
                label_noise: 0.0,
            },
            SyntheticKind::OverfitTrap => Resolved {
                n_samples: 240,
                n_features: 40,
                classes: 2,
                separation: 2.0,
                noise: 1.0,
                informative: 3,
                label_noise: 0.15,
            },
        };
        let mut r = Resolved {
            n_samples: self.n_samples.unwrap_or(base.n_samples).max(2),
            n_features: self.n_features.unwrap_or(base.n_features).max(1),
            classes: self.classes.unwrap_or(base.classes),
            separation: self.separation.unwrap_or(base.separation),
            noise: self.noise.unwrap_or(base.noise).max(0.0),
            informative: self.informative.unwrap_or(base.informative),
            label_noise: self.label_noise.unwrap_or(base.label_noise).clamp(0.0, 1.0),
        };
        r.informative = r.informative.clamp(1, r.n_features);
        match kind {
            SyntheticKind::BlobsClassification => r.classes = r.classes.max(2),
            SyntheticKind::LinearRegression => r.classes = 0,
            SyntheticKind::OverfitTrap => r.classes = 2,
        }
        r
    }

    pub fn task(&self, kind: SyntheticKind) -> TaskType {
        match kind {
            SyntheticKind::LinearRegression => TaskType::Regression,
            _ => TaskType::Classification {
                classes: self.resolve(kind).classes,
            },
        }
    }
}

fn normal(rng: &mut SeededRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Balanced labels 0..k in shuffled order.
fn balanced_labels(n: usize, k: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

fn blobs(r: &Resolved, rng: &mut SeededRng) -> Dataset {
    let centres = Array2::from_shape_fn((r.classes, r.n_features), |_| normal(rng) * r.separation);
    let labels = balanced_labels(r.n_samples, r.classes, rng);
    let x = Array2::from_shape_fn((r.n_samples, r.n_features), |(i, j)| {
        centres[[labels[i], j]] + normal(rng) * r.noise
    });
    let y = labels.into_iter().map(|l| l as f64).collect();
    Dataset::new(x, y, TaskType::Classification { classes: r.classes }).expect("generated shapes agree")
}

fn linear(r: &Resolved, rng: &mut SeededRng) -> (Dataset, Vec<f64>) {
    let beta: Vec<f64> = (0..r.n_features).map(|_| normal(rng)).collect();
    let x = Array2::from_shape_fn((r.n_samples, r.n_features), |_| normal(rng));
    let signal = x.dot(&Array1::from(beta.clone()));
    let y = signal.iter().map(|s| s + normal(rng) * r.noise).collect();
    let data = Dataset::new(x, y, TaskType::Regression).expect("generated shapes agree");
    (data, beta)
}

/// Binary labels from a few informative features, the rest pure noise, with
/// a share of labels flipped.
fn overfit_trap(r: &Resolved, rng: &mut SeededRng) -> Dataset {
    let x = Array2::from_shape_fn((r.n_samples, r.n_features), |_| normal(rng));
    let scale = r.separation / (r.informative as f64).sqrt();
    let y = (0..r.n_samples)
        .map(|i| {
            let score: f64 = (0..r.informative).map(|j| x[[i, j]]).sum::<f64>() * scale + normal(rng) * r.noise;
            let mut label = score > 0.0;
            if rng.random::<f64>() < r.label_noise {
                label = !label;
            }
            if label { 1.0 } else { 0.0 }
        })
        .collect();
    Dataset::new(x, y, TaskType::Classification { classes: 2 }).expect("generated shapes agree")
}

pub fn make_synthetic(kind: SyntheticKind, params: &SyntheticParams, seed: u64) -> Dataset {
    let r = params.resolve(kind);
    let mut rng = derived(seed, &[stream::DATA]);
    match kind {
        SyntheticKind::BlobsClassification => blobs(&r, &mut rng),
        SyntheticKind::LinearRegression => linear(&r, &mut rng).0,
        SyntheticKind::OverfitTrap => overfit_trap(&r, &mut rng),
    }
}

/// Same data as `make_synthetic(LinearRegression, ..)` plus the true coefficients.
pub fn make_linear_regression(params: &SyntheticParams, seed: u64) -> (Dataset, Vec<f64>) {
    let r = params.resolve(SyntheticKind::LinearRegression);
    linear(&r, &mut derived(seed, &[stream::DATA]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrices() {
        for kind in [
            SyntheticKind::BlobsClassification,
            SyntheticKind::LinearRegression,
            SyntheticKind::OverfitTrap,
        ] {
            let p = SyntheticParams::default();
            assert_eq!(make_synthetic(kind, &p, 9), make_synthetic(kind, &p, 9));
            assert_ne!(make_synthetic(kind, &p, 9), make_synthetic(kind, &p, 10));
        }
    }

    #[test]
    fn noiseless_regression_is_exact() {
        let p = SyntheticParams {
            noise: Some(0.0),
            ..Default::default()
        };
        let (d, beta) = make_linear_regression(&p, 3);
        let pred = d.features.dot(&Array1::from(beta));
        let mean = d.targets.iter().sum::<f64>() / d.len() as f64;
        let ss_res: f64 = pred.iter().zip(&d.targets).map(|(p, t)| (p - t).powi(2)).sum();
        let ss_tot: f64 = d.targets.iter().map(|t| (t - mean).powi(2)).sum();
        assert!((1.0 - ss_res / ss_tot - 1.0).abs() < 1e-12);
        assert_eq!(make_linear_regression(&p, 3).0, make_synthetic(SyntheticKind::LinearRegression, &p, 3));
    }

    #[test]
    fn defaults_have_documented_shapes() {
        let d = make_synthetic(SyntheticKind::BlobsClassification, &SyntheticParams::default(), 1);
        assert_eq!((d.len(), d.n_features()), (150, 4));
        assert_eq!(d.task, TaskType::Classification { classes: 3 });
        let t = make_synthetic(SyntheticKind::OverfitTrap, &SyntheticParams::default(), 1);
        assert_eq!(t.task, TaskType::Classification { classes: 2 });
    }

    #[test]
    fn unknown_params_are_rejected() {
        assert!(serde_json::from_str::<SyntheticParams>(r#"{"n_samples": 10, "bogus": 1}"#).is_err());
    }
}
