use crate::data::Splits;
use crate::rng::{derived, stream};
use crate::space::Configuration;
use crate::trainer::{build_model, train_epoch, EpochMetrics, MlpModel, OptimizerState, TrainError};

/// A fixed configuration trained for a number of epochs.
#[derive(Debug, Clone)]
pub struct TrainedConfiguration {
    pub model: MlpModel,
    pub metrics: Vec<EpochMetrics>,
}

impl TrainedConfiguration {
    pub fn final_val_loss(&self) -> f64 {
        self.metrics.last().map_or(f64::INFINITY, |m| m.val_loss)
    }
}

/// Trains `config` on the fit split for `epochs` epochs without changing it.
/// `streams` distinguishes evaluations sharing a seed.
pub fn train_configuration(
    config: &Configuration,
    splits: &Splits,
    epochs: usize,
    seed: u64,
    streams: &[u64],
) -> Result<TrainedConfiguration, TrainError> {
    let key = |s: u64| {
        let mut v = vec![s];
        v.extend_from_slice(streams);
        v
    };
    let mut model = build_model(
        &config.arch,
        splits.fit.n_features(),
        splits.fit.task.output_dim(),
        &mut derived(seed, &key(stream::MODEL_INIT)),
    )?;
    let mut state = OptimizerState::new();
    let mut rng = derived(seed, &key(stream::EPOCH));
    let mut metrics = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        metrics.push(train_epoch(
            &mut model,
            &splits.fit,
            &splits.val,
            config,
            epoch,
            epochs,
            &mut state,
            &mut rng,
        )?);
    }
    Ok(TrainedConfiguration { model, metrics })
}
