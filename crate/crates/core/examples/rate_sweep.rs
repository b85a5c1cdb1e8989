//! Effect of the controller sampling rate on steering smoothness.

use smooth_track::harness::{arc_sequence_scenario, sweep, MetricsOptions, SweepParam};

fn main() {
    let rates = [10.0, 20.0, 50.0, 100.0];
    let results = sweep(
        &arc_sequence_scenario(),
        SweepParam::Rate,
        &rates,
        &MetricsOptions::default(),
    );
    println!("rate [Hz]  oscillation [rad]  std ddelta [rad/s]  max e_l [m]");
    for (rate, r) in rates.iter().zip(results) {
        match r {
            Ok(m) => println!(
                "{rate:9.0}  {:17.4}  {:18.4}  {:11.4}",
                m.steering_oscillation, m.std_ddelta, m.max_e_l_post
            ),
            Err(e) => println!("{rate:9.0}  failed: {e}"),
        }
    }
}
