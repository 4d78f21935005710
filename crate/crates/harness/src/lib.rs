//! Experiment harness: synthetic tasks, training, evaluation, and reports.
//!
//! The harness generates Python documents whose answers require long-range
//! context, feeds them through the source pipeline into the dual-memory
//! encoder, and trains and scores models deterministically. Ablations and
//! grid sweeps reuse one `train_and_eval` path so that matching
//! configurations at matching seeds produce identical numbers.

mod ablation;
mod data;
mod error;
mod eval;
mod gen;
mod metrics;
mod optim;
mod pipeline;
mod sweep;
mod train;

pub use ablation::{
    ablation_variants, run_ablation, train_and_eval, AblationReport, AblationVariant, RunResult,
    VariantSummary,
};
pub use data::{Dataset, Examples, LabeledExample, RankedExample, TaskKind};
pub use error::HarnessError;
pub use eval::{eval_binary_dataset, eval_rank_dataset};
pub use gen::{
    gen_api_task, gen_dataset, gen_recall_task, gen_vuln_task, scan_oracle_ranked,
    scan_oracle_vuln, SyntheticTaskSpec,
};
pub use metrics::{eval_binary, eval_rank, BinaryBatch, EvalBatch, MetricsReport};
pub use optim::{Adam, AdamConfig};
pub use pipeline::Pipeline;
pub use sweep::{run_sweep, sweep_csv, SweepCell, SweepGrid, SweepReport};
pub use train::{train, LossPoint, TrainConfig, TrainState};
