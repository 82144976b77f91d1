use crate::space::{SchedulerKind, SchedulerParams};
use std::f64::consts::PI;

/// Learning rate for the zero-based `epoch` of a `total_epochs` run.
pub fn scheduled_lr(
    kind: SchedulerKind,
    base_lr: f64,
    epoch: usize,
    total_epochs: usize,
    params: &SchedulerParams,
) -> f64 {
    match kind {
        SchedulerKind::Constant => base_lr,
        SchedulerKind::StepDecay => {
            let decays = epoch / params.step_size.max(1);
            base_lr * params.gamma.powi(decays as i32)
        }
        SchedulerKind::Cosine => {
            if total_epochs <= 1 {
                return base_lr;
            }
            let progress = epoch.min(total_epochs - 1) as f64 / (total_epochs - 1) as f64;
            params.min_lr + 0.5 * (base_lr - params.min_lr) * (1.0 + (PI * progress).cos())
        }
    }
}
