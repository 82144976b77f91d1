use crate::rng::SeededRng;
use crate::space::Configuration;
use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::augment::augment_all;
use super::dataset::Dataset;
use super::loss::{evaluation_loss, loss_and_grad};
use super::metrics::{compute_metrics, MetricSet};
use super::model::MlpModel;
use super::optim::{optimizer_step, OptimizerState};
use super::schedule::scheduled_lr;
use super::TrainError;

/// Metrics recorded after one epoch.
///
/// `train_loss` and `val_loss` are always the unweighted task loss
/// (cross-entropy or squared error) computed in evaluation mode, so they
/// stay comparable when the configured loss changes. `objective_loss` is
/// the mean of the configured training objective over the epoch's batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub objective_loss: f64,
    pub metric_set: MetricSet,
    pub train_metric_set: MetricSet,
    pub param_norm: f64,
    pub lr_used: f64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub metrics: MetricSet,
}

/// Inference over a whole dataset.
pub fn evaluate(model: &MlpModel, data: &Dataset) -> Result<Evaluation, TrainError> {
    let outputs = model.forward(&data.features)?;
    Ok(Evaluation {
        loss: evaluation_loss(&outputs, &data.targets, data.task.is_classification()),
        metrics: compute_metrics(data.task, &outputs, &data.targets)?,
    })
}

fn check_dims(model: &MlpModel, data: &Dataset, name: &str) -> Result<(), TrainError> {
    if model.input_dim != data.n_features() || model.output_dim != data.task.output_dim() {
        return Err(TrainError::Shape(format!(
            "model maps {} -> {} but the {name} split has {} features and {} outputs",
            model.input_dim,
            model.output_dim,
            data.n_features(),
            data.task.output_dim()
        )));
    }
    if data.is_empty() {
        return Err(TrainError::Shape(format!("{name} split is empty")));
    }
    Ok(())
}

/// One pass over `train` in shuffled mini-batches, then evaluation on the
/// unaugmented training rows and on `val`. `epoch` is zero-based; the
/// returned metrics carry the one-based epoch number.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    model: &mut MlpModel,
    train: &Dataset,
    val: &Dataset,
    config: &Configuration,
    epoch: usize,
    total_epochs: usize,
    state: &mut OptimizerState,
    rng: &mut SeededRng,
) -> Result<EpochMetrics, TrainError> {
    check_dims(model, train, "training")?;
    check_dims(model, val, "validation")?;
    let strategy = &config.strategy;
    let hyper = &config.hyper;
    state.switch_to(strategy.optimizer_kind);

    let fit = augment_all(&config.feature, train, rng)?;
    let lr = scheduled_lr(
        strategy.scheduler_kind,
        hyper.learning_rate,
        epoch,
        total_epochs,
        &strategy.scheduler_params,
    );

    let mut order: Vec<usize> = (0..fit.len()).collect();
    order.shuffle(rng);
    let batch_size = hyper.batch_size.max(1);
    let mut objective = 0.0;
    for batch in order.chunks(batch_size) {
        let x = fit.features.select(Axis(0), batch);
        let y: Vec<f64> = batch.iter().map(|&i| fit.targets[i]).collect();
        let cache = model.forward_train(&x, Some(rng))?;
        let (loss, grad_out) = loss_and_grad(strategy.loss_kind, &cache.outputs, &y, hyper)?;
        if !loss.is_finite() {
            return Err(TrainError::Diverged {
                epoch: epoch + 1,
                detail: format!("non-finite batch loss {loss}"),
            });
        }
        objective += loss * batch.len() as f64;
        let grads = model.backward(&cache, &grad_out);
        optimizer_step(
            strategy.optimizer_kind,
            model,
            &grads,
            state,
            lr,
            hyper.weight_decay,
            hyper.momentum,
        );
    }

    let on_train = evaluate(model, train)?;
    let on_val = evaluate(model, val)?;
    if !on_train.loss.is_finite() || !on_val.loss.is_finite() {
        return Err(TrainError::Diverged {
            epoch: epoch + 1,
            detail: format!("train loss {}, val loss {}", on_train.loss, on_val.loss),
        });
    }
    Ok(EpochMetrics {
        epoch: epoch + 1,
        train_loss: on_train.loss,
        val_loss: on_val.loss,
        objective_loss: objective / fit.len() as f64,
        metric_set: on_val.metrics,
        train_metric_set: on_train.metrics,
        param_norm: model.weight_norm(),
        lr_used: lr,
        wall_time_ms: 0,
    })
}
