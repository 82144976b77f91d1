//! Agent-driven configuration tuning for small neural networks.

pub mod agents;
pub mod backend;
pub mod baselines;
pub mod data;
pub mod experiment;
pub mod fuzz;
pub mod orchestrator;
pub mod report;
pub mod rng;
pub mod space;
pub mod task;
pub mod trainer;

pub use task::{TaskKind, TaskType};
