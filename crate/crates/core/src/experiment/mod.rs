//! Config-driven experiment layer over the core protocol.

pub mod config;
pub mod report;
pub mod runner;
pub mod sweep;

pub use config::{Cadence, DatasetSpec, ExperimentConfig};
pub use report::{gap_closed_form, noise_schedule, write_schedule_csv, ScheduleRow};
pub use runner::{
    build_partition, load_dataset, mean_stddev, run_experiment, run_seed, ExperimentOutcome,
    MetricsRecord, SeedRun,
};
pub use sweep::{run_sweep, SweepAxis, SweepOutcome, SweepRow};
