//! Metrics and Monte-Carlo drivers: single realizations with optional
//! clustering traces, power and outage sweeps over paired seeds, and the
//! invariant suite behind `fran validate`.

mod metrics;
mod output;
mod realization;
mod stats;
mod sweep;
mod validate;

pub use metrics::{sinr, total_power_w};
pub use output::{
    outcome_plot_series, outcomes_to_csv, sweep_plot_series, sweep_to_csv, PlotSeries, OUTCOME_CSV_COLUMNS,
    SWEEP_CSV_COLUMNS,
};
pub use realization::{run_realization, simulate, RealizationOutcome, RealizationRun, TracePoint};
pub use stats::{mean_with_half_width, paired_difference, wilson_interval, PairedDifference, Z_95};
pub use sweep::{outage_probability, power_sweep, run_cell, CellKey, SeedResult, SweepCell, SweepResult};
pub use validate::{run_invariant_suite, Check, ValidationReport};
