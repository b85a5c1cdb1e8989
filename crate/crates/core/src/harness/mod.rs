//! Scenario runner, metrics, comparisons and plots.

mod bench;
mod metrics;
mod plot;
mod run;
mod scenario;

pub use bench::{
    benchmark_reach, compare_params, sweep, ReachBench, ReachBenchConfig, ReachBenchRow, SweepParam,
};
pub use metrics::{
    compute_metrics, radar_compare, steering_oscillation, write_metrics_csv, ComparisonTable,
    MetricsOptions, MetricsRecord, RADAR_AXES,
};
pub use plot::{plot_comparison, plot_trace};
pub use run::{run_batch, run_closed_loop, RunOutcome, Trace, TraceRow};
pub use scenario::{
    arc_sequence_limits, arc_sequence_rows, arc_sequence_scenario, lane_change_params,
    lane_change_scenario, parameter_variations, ControllerSpec, InitialState, ParamScale,
    PlantSpec, Scenario,
};
