use crate::task::TaskType;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrainError;

/// Layout of image-shaped feature rows, stored row-major as
/// `((y * width) + x) * channels + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }
}

/// Per-feature z-score parameters fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    /// Population mean and standard deviation per column. Constant columns
    /// get a unit scale.
    pub fn fit(features: &Array2<f64>) -> Self {
        let n = features.nrows().max(1) as f64;
        let mut means = Vec::with_capacity(features.ncols());
        let mut stds = Vec::with_capacity(features.ncols());
        for col in features.axis_iter(Axis(1)) {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            means.push(mean);
            stds.push(if std > 1e-12 { std } else { 1.0 });
        }
        Self { means, stds }
    }

    pub fn apply(&self, features: &mut Array2<f64>) {
        for mut row in features.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.means[j]) / self.stds[j];
            }
        }
    }
}

/// Feature matrix plus targets. Classification targets hold class indices
/// stored as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub targets: Vec<f64>,
    pub task: TaskType,
    pub image_shape: Option<ImageShape>,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, targets: Vec<f64>, task: TaskType) -> Result<Self, TrainError> {
        let d = Self {
            features,
            targets,
            task,
            image_shape: None,
            standardization: None,
        };
        d.check()?;
        Ok(d)
    }

    pub fn with_image_shape(mut self, shape: ImageShape) -> Result<Self, TrainError> {
        if shape.len() != self.n_features() {
            return Err(TrainError::Shape(format!(
                "image shape {}x{}x{} does not match {} features",
                shape.height,
                shape.width,
                shape.channels,
                self.n_features()
            )));
        }
        self.image_shape = Some(shape);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Checks shapes, finiteness and class ranges.
    pub fn check(&self) -> Result<(), TrainError> {
        if self.targets.len() != self.features.nrows() {
            return Err(TrainError::Shape(format!(
                "{} targets for {} rows",
                self.targets.len(),
                self.features.nrows()
            )));
        }
        if let Some(pos) = self.features.iter().position(|v| !v.is_finite()) {
            let row = pos / self.n_features().max(1);
            return Err(TrainError::Data(format!("non-finite feature in row {row}")));
        }
        match self.task {
            TaskType::Classification { classes } => {
                if let Some(t) = self
                    .targets
                    .iter()
                    .find(|&&t| t.fract() != 0.0 || t < 0.0 || t >= classes as f64)
                {
                    return Err(TrainError::Data(format!(
                        "class target {t} outside [0, {classes})"
                    )));
                }
            }
            TaskType::Regression => {
                if self.targets.iter().any(|t| !t.is_finite()) {
                    return Err(TrainError::Data("non-finite regression target".into()));
                }
            }
        }
        Ok(())
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            task: self.task,
            image_shape: self.image_shape,
            standardization: self.standardization.clone(),
        }
    }

    pub fn class_of(&self, row: usize) -> usize {
        self.targets[row] as usize
    }

    /// Content hash over features, targets and task.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.task.to_string().as_bytes());
        h.update((self.features.nrows() as u64).to_le_bytes());
        h.update((self.features.ncols() as u64).to_le_bytes());
        for v in self.features.iter() {
            h.update(v.to_le_bytes());
        }
        for t in &self.targets {
            h.update(t.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
