//! Length-optimal rate profile to reach a straight path, compared with the
//! HOSM law at the same steering bounds.

use smooth_track::baselines::{
    hosm_control, optimal_reach, reach_distance_closed_loop, ExtendedState, HosmParams,
    OptimalReachSpec,
};
use smooth_track::smc::WheelError;

fn main() -> smooth_track::Result<()> {
    let (lambda, delta_max): (f64, f64) = (2.5, 0.5);
    let ddelta_max = 2.0 * delta_max.tan() / lambda;
    let init = WheelError::new(1.0, 0.2);
    let spec = OptimalReachSpec {
        init,
        delta0: 0.0,
        delta_max,
        ddelta_max,
        eps: 0.05,
        switches: 4,
    };
    let opt = optimal_reach(&spec, lambda)?;
    println!("optimal distance {:.3} m", opt.distance);
    for (u, l) in opt.controls.iter().zip(&opt.lengths) {
        println!("  rate {:+.2} x bound for {l:.3} m", u);
    }

    let hosm = HosmParams::new(0.4, ddelta_max, delta_max, lambda)?;
    let r = reach_distance_closed_loop(
        ExtendedState::new(init, 0.0),
        |x: &ExtendedState| hosm_control(x.error(), x.delta, &hosm),
        lambda,
        delta_max,
        spec.eps,
        1e-3,
        30.0,
    )?;
    match r.distance {
        Some(d) => println!("HOSM distance {d:.3} m"),
        None => println!("HOSM did not reach the path"),
    }
    Ok(())
}
