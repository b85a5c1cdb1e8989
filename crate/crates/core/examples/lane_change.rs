//! Double lane change on the kinetic single-track model at several speeds.

use smooth_track::harness::{
    compute_metrics, lane_change_scenario, run_closed_loop, MetricsOptions,
};

fn main() -> smooth_track::Result<()> {
    println!("speed  max|e| [m]  max|beta| [rad]  max|ddelta| [rad/s]");
    for v in [8.0, 12.0, 15.0] {
        let trace = run_closed_loop(&lane_change_scenario(v))?;
        let m = compute_metrics(&trace, &MetricsOptions::default());
        let slip = trace
            .rows
            .iter()
            .map(|r| r.side_slip.abs())
            .fold(0.0, f64::max);
        println!(
            "{v:5.1}  {:10.3}  {slip:15.3}  {:19.3}",
            m.max_e, m.max_abs_ddelta
        );
    }
    Ok(())
}
