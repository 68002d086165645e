//! Batch experiment harness behind the `dmclusts` binary: dataset generation,
//! repeated seeded runs with mean/std aggregation, parameter sweeps and
//! evaluation of stored label files.
//!
//! Run `i` of an experiment uses seed `seed + i`. Repeats run concurrently;
//! every output file is written afterwards in run order, so outputs depend
//! only on the configuration. Wall-clock times go to `timings.json` and never
//! into reports.

mod commands;
mod config;
mod run;

pub use commands::{cmd_eval, cmd_run, cmd_sweep, cmd_synth, load_experiment_data, synthesize, SweepRow};
pub use config::{
    DatasetSection, ExperimentConfig, Method, RunSection, SolverSection, SweepParam, SweepSection, SynthSpec,
};
pub use run::{run_once, run_repeats, write_run, Aggregate, ObjectiveRow, RunFailure, RunOutcome, Stat};

/// Process exit status for a successful command.
pub const EXIT_OK: i32 = 0;
/// Bad flags, config file or dataset.
pub const EXIT_CONFIG: i32 = 2;
/// Every requested run failed.
pub const EXIT_ALL_FAILED: i32 = 3;
