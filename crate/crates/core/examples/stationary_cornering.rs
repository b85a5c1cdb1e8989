//! Steady cornering with a two-wheel chain. With the first wheelbase set
//! to the cornering wheelbase the real front wheel settles on the path; with
//! the vehicle wheelbase it keeps a steady offset.

use smooth_track::harness::{run_closed_loop, ControllerSpec, InitialState, PlantSpec, Scenario};
use smooth_track::plant::{DisturbanceSpec, SpeedProfile};
use smooth_track::ref_path::PathSpec;
use smooth_track::smc::ControllerParams;
use smooth_track::tuner::lambda_from_cornering;

fn front_offset(lambda1: f64, lambda_l: f64) -> smooth_track::Result<f64> {
    let sc = Scenario {
        name: "circle".into(),
        path: PathSpec::from_rows(&[(0.02, 500.0)]),
        plant: PlantSpec::Kinematic {
            wheelbase: 2.7,
            delta_max: 0.5,
        },
        speed: SpeedProfile::Constant { v: 5.0 },
        initial: InitialState {
            e: 0.5,
            ..InitialState::default()
        },
        controller: ControllerSpec::Proposed(ControllerParams::c1(0.1, lambda1, lambda_l, 0.0)),
        controller_rate_hz: 200.0,
        plant_dt: 1e-3,
        disturbance: DisturbanceSpec::default(),
        duration: 80.0,
        abort_bound: 20.0,
    };
    let trace = run_closed_loop(&sc)?;
    let tail = &trace.rows[trace.rows.len() * 3 / 4..];
    Ok(tail.iter().map(|r| r.e_f.abs()).fold(0.0, f64::max))
}

fn main() -> smooth_track::Result<()> {
    let (lambda_veh, lambda_l) = (2.7, 1.2);
    let cornering = lambda_from_cornering(lambda_veh, lambda_l)?;
    println!("cornering wheelbase {cornering:.3} m");
    println!(
        "front offset with cornering wheelbase: {:.2e} m",
        front_offset(cornering, lambda_l)?
    );
    println!(
        "front offset with vehicle wheelbase:   {:.2e} m",
        front_offset(lambda_veh, lambda_l)?
    );
    Ok(())
}
