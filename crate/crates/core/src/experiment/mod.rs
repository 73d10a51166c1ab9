//! Configuration, synthetic data, and the experiment driver.

pub mod config;
pub mod data;
pub mod record;
mod runner;

pub use config::{DatasetSpec, ExperimentConfig, Mode};
pub use data::{make_blobs, Blobs, Dataset, Rings};
pub use record::{to_csv, RunRecord, Source, CSV_HEADER};
pub use runner::{
    build_datasets, evaluate, evaluate_checkpoint, run_config_file, run_experiment, write_artifacts, RunOutcome,
    CHECKPOINT_FILE, CONFIG_FILE, METRICS_FILE, PROVENANCE_FILE, VERSION,
};
