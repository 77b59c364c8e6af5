//! L1/Adam optimisation loop, learning-rate schedule and checkpoints.

mod checkpoint;
mod config;
mod run;
mod step;

pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use config::{lr_schedule, TrainConfig};
pub use run::{
    checkpoint_path, train_loop, train_loop_with, validate, LogRecord, TrainData, TrainOutcome,
    FINAL_CHECKPOINT, LOG_FILE,
};
pub use step::{batch_tensors, train_step};
