//! Batch experiments described by TOML specs, with JSON reports and CSV
//! tables as output.

mod baseline;
mod builtin;
mod records;
mod run;
mod spec;

pub use baseline::{Baseline, BaselineEntry};
pub use builtin::{builtin_spec, builtin_specs};
pub use records::{
    read_rows, read_rows_from, write_rows, write_rows_to, BarrierRow, CheckOutcome, LyapunovRow,
    ProfileRow, PropagationRow, StageTiming,
};
pub use run::{initial_state, run_experiment, write_outputs, ExperimentReport};
pub use spec::{
    Checks, ExperimentKind, ExperimentSpec, GridConfig, KickSide, Method, ModelSpec, PhaseSpec,
    SampleTime,
};
