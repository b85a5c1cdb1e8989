//! Vehicle models: kinematic single track in the arc-length domain and a
//! kinetic single track with magic-formula tires and a steering actuator.

mod kinematic;
mod kinetic;
mod observe;

pub use kinematic::{KinematicModel, KinematicState};
pub use kinetic::{Actuator, KineticModel, KineticParams, KineticState, MagicFormula};
pub use observe::{DisturbanceSpec, Observation, Observer};

use serde::{Deserialize, Serialize};

/// Longitudinal speed as a function of time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpeedProfile {
    Constant {
        v: f64,
    },
    /// Linear in time from `v0` to `v1` over `duration`, then held.
    Ramp {
        v0: f64,
        v1: f64,
        duration: f64,
    },
}

impl SpeedProfile {
    pub fn speed(&self, t: f64) -> f64 {
        match *self {
            SpeedProfile::Constant { v } => v,
            SpeedProfile::Ramp { v0, v1, duration } => {
                if duration <= 0.0 {
                    return v1;
                }
                let u = (t / duration).clamp(0.0, 1.0);
                v0 + (v1 - v0) * u
            }
        }
    }

    pub fn accel(&self, t: f64) -> f64 {
        match *self {
            SpeedProfile::Constant { .. } => 0.0,
            SpeedProfile::Ramp { v0, v1, duration } => {
                if duration > 0.0 && (0.0..duration).contains(&t) {
                    (v1 - v0) / duration
                } else {
                    0.0
                }
            }
        }
    }

    pub fn max_speed(&self) -> f64 {
        match *self {
            SpeedProfile::Constant { v } => v,
            SpeedProfile::Ramp { v0, v1, .. } => v0.max(v1),
        }
    }
}

/// Classic fourth-order Runge-Kutta step for `N`-dimensional states.
pub fn rk4<const N: usize>(
    y: [f64; N],
    t: f64,
    h: f64,
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let add = |a: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *a;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = f(t, &y);
    let k2 = f(t + 0.5 * h, &add(&y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(&y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(&y, &k3, h));
    let mut out = y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
