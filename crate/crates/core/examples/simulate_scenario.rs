//! Runs a scenario file through the closed loop and prints its metrics.
//!
//! ```text
//! cargo run --example simulate_scenario -- crates/core/scenarios/lane_change.toml
//! ```

use smooth_track::harness::{compute_metrics, run_closed_loop, MetricsOptions, Scenario};

fn main() -> smooth_track::Result<()> {
    let file = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/scenarios/straight_kinematic.toml"
        )
        .into()
    });
    let sc = Scenario::load(&file)?;
    let trace = run_closed_loop(&sc)?;
    let m = compute_metrics(&trace, &MetricsOptions::default());
    println!(
        "{}: {:?} after {} samples",
        sc.name,
        trace.outcome,
        trace.rows.len()
    );
    println!(
        "  reached {} at t = {:.3} s ({:.2} m)",
        m.reached, m.t_reach, m.reach_distance
    );
    println!(
        "  max |e| {:.4} m, max |e_l| after reaching {:.4} m",
        m.max_e, m.max_e_l_post
    );
    println!(
        "  steering rate std {:.4} rad/s, acceleration std {:.4} rad/s^2",
        m.std_ddelta, m.std_dddelta
    );
    Ok(())
}
