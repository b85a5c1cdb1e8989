use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ref_path::Pose2;

use super::rk4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    /// Rear axle position.
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub delta_veh: f64,
    /// Travelled arc length of the rear axle.
    pub s: f64,
}

impl KinematicState {
    pub fn from_pose(pose: Pose2, delta: f64) -> Self {
        KinematicState {
            x: pose.x,
            y: pose.y,
            psi: pose.heading,
            delta_veh: delta,
            s: 0.0,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.psi)
    }
}

/// Ideal kinematic single track: the steering angle follows the command
/// instantly and the rear axle rolls without slip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicModel {
    pub wheelbase: f64,
    pub delta_max: f64,
}

impl KinematicModel {
    pub fn new(wheelbase: f64, delta_max: f64) -> Result<Self> {
        if !(wheelbase > 0.0) {
            return Err(Error::invalid("wheelbase must be positive"));
        }
        if !(delta_max > 0.0 && delta_max < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("delta_max must lie in (0, pi/2)"));
        }
        Ok(KinematicModel {
            wheelbase,
            delta_max,
        })
    }

    /// Advances by arc length `ds` with constant steering `delta_cmd`.
    pub fn step(&self, state: &KinematicState, delta_cmd: f64, ds: f64) -> Result<KinematicState> {
        self.step_ramp(state, delta_cmd, delta_cmd, ds)
    }

    /// Advances by arc length `ds` with the steering angle moving linearly
    /// from `delta0` to `delta1`.
    pub fn step_ramp(
        &self,
        state: &KinematicState,
        delta0: f64,
        delta1: f64,
        ds: f64,
    ) -> Result<KinematicState> {
        if !(ds >= 0.0) {
            return Err(Error::domain(format!("arc length step {ds} is negative")));
        }
        for d in [delta0, delta1] {
            if !(d.abs() <= self.delta_max * (1.0 + 1e-9)) {
                return Err(Error::domain(format!(
                    "steering command {d} exceeds the limit {}",
                    self.delta_max
                )));
            }
        }
        let l = self.wheelbase;
        let slope = if ds > 0.0 {
            (delta1 - delta0) / ds
        } else {
            0.0
        };
        let [x, y, psi] = rk4([state.x, state.y, state.psi], 0.0, ds, |s, q| {
            [q[2].cos(), q[2].sin(), (delta0 + slope * s).tan() / l]
        });
        Ok(KinematicState {
            x,
            y,
            psi,
            delta_veh: delta1,
            s: state.s + ds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn closure_error(steps: usize) -> f64 {
        let m = KinematicModel::new(2.7, 0.6).unwrap();
        let d: f64 = 0.3;
        let radius = 2.7 / d.tan();
        let ds = TAU * radius / steps as f64;
        let mut s = KinematicState::default();
        for _ in 0..steps {
            s = m.step(&s, d, ds).unwrap();
        }
        s.x.hypot(s.y)
    }

    #[test]
    fn straight_translation() {
        let m = KinematicModel::new(2.7, 0.5).unwrap();
        let s = m
            .step(
                &KinematicState::from_pose(Pose2::new(1.0, 2.0, 0.0), 0.0),
                0.0,
                0.7,
            )
            .unwrap();
        assert_abs_diff_eq!(s.x, 1.7);
        assert_abs_diff_eq!(s.y, 2.0);
        assert_abs_diff_eq!(s.s, 0.7);
    }

    #[test]
    fn circle_closes() {
        assert!(closure_error(400) < 1e-6);
    }

    /// Position error after turning through 1.5 rad, against the exact arc.
    fn arc_error(steps: usize) -> f64 {
        let m = KinematicModel::new(2.7, 0.6).unwrap();
        let d: f64 = 0.3;
        let radius = 2.7 / d.tan();
        let phi = 1.5;
        let ds = phi * radius / steps as f64;
        let mut s = KinematicState::default();
        for _ in 0..steps {
            s = m.step(&s, d, ds).unwrap();
        }
        (s.x - radius * phi.sin()).hypot(s.y - radius * (1.0 - phi.cos()))
    }

    #[test]
    fn rk4_order() {
        let a = arc_error(4);
        let b = arc_error(8);
        let ratio = a / b;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn heading_rate_is_curvature() {
        let m = KinematicModel::new(2.7, 0.6).unwrap();
        let mut s = KinematicState::default();
        for i in 0..100 {
            let d = 0.4 * (i as f64 * 0.1).sin();
            let n = m.step(&s, d, 0.05).unwrap();
            assert_abs_diff_eq!((n.psi - s.psi) / 0.05 * 2.7, d.tan(), epsilon = 1e-9);
            s = n;
        }
    }

    #[test]
    fn rejects_oversteer() {
        let m = KinematicModel::new(2.7, 0.5).unwrap();
        assert!(matches!(
            m.step(&KinematicState::default(), 0.6, 0.1),
            Err(Error::DomainViolation(_))
        ));
    }
}
