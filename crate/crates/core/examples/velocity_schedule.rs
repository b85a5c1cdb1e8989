//! Velocity-dependent chain parameters for a passenger car.
//!
//! Prints the scheduled lead curvature, lead wheelbase and predicted steering
//! rate and acceleration for 1..20 m/s.

use smooth_track::tuner::{schedule_table, write_schedule_csv, ActuatorLimits, ScheduleOptions};

fn main() -> smooth_track::Result<()> {
    let limits = ActuatorLimits {
        delta_max: 0.5,
        ddelta_dt_max: 1.0,
        dddelta_dt_max: 4.0,
    };
    let velocities: Vec<f64> = (1..=20).map(f64::from).collect();
    let rows = schedule_table(&velocities, &limits, 2.7, &ScheduleOptions::default())?;
    write_schedule_csv(&rows, std::io::stdout())?;
    Ok(())
}
