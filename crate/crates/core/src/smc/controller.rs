use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::ref_path::{Pose2, RefPath};

use super::chain::{trailer_derivatives, trailer_rates, SteeringMap};
use super::lift::lift_angles;
use super::sliding::{dubins_kappa, sliding_sigma};
use super::{ControllerParams, WheelError};

/// One controller evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlOutput {
    /// Real steering angle to command for the next interval.
    pub delta_cmd: f64,
    /// Path derivatives `delta', ..., delta^(n)` of the real steering angle.
    pub delta_derivs: Vec<f64>,
    pub sigma: f64,
    pub kappa_cmd: f64,
    /// Rear wheel followed by every chain wheel.
    pub wheels: Vec<WheelError>,
    /// Fictive angles in controller coordinates before the update.
    pub fictive: Vec<f64>,
}

/// Stateful tracking controller.
///
/// The fictive angles are integrated as trailer states in the arc-length
/// domain. The innermost angle is re-anchored to the measured steering angle
/// before every evaluation.
#[derive(Clone, Debug)]
pub struct TrackingController {
    params: ControllerParams,
    map: SteeringMap,
    angles: Vec<f64>,
    /// Curvature disturbance added to the outer wheel command.
    pub kappa_disturbance: f64,
}

impl TrackingController {
    pub fn new(params: ControllerParams, lambda_veh: f64) -> Result<Self> {
        params.validate()?;
        if !(lambda_veh > 0.0) {
            return Err(Error::invalid("vehicle wheelbase must be positive"));
        }
        let map = SteeringMap::new(params.lambdas[0], lambda_veh);
        let n = params.order();
        Ok(TrackingController {
            params,
            map,
            angles: vec![0.0; n],
            kappa_disturbance: 0.0,
        })
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    /// Swaps the gains while keeping the chain angles. The chain length must
    /// stay the same.
    pub fn set_params(&mut self, params: ControllerParams) -> Result<()> {
        params.validate()?;
        if params.order() != self.params.order() {
            return Err(Error::invalid("new parameters change the chain length"));
        }
        let lambda_veh = self.map.ratio() * self.params.lambdas[0];
        let delta = self.map.to_real(self.angles[0]);
        self.map = SteeringMap::new(params.lambdas[0], lambda_veh);
        self.angles[0] = self.map.to_ctrl(delta);
        self.params = params;
        Ok(())
    }

    pub fn steering_map(&self) -> SteeringMap {
        self.map
    }

    pub fn fictive(&self) -> &[f64] {
        &self.angles
    }

    /// Places the chain at rest behind the given real steering angle.
    pub fn reset(&mut self, delta_real: f64) {
        let l = &self.params.lambdas;
        self.angles[0] = self.map.to_ctrl(delta_real);
        for i in 1..self.angles.len() {
            self.angles[i] = (l[i] * self.angles[i - 1].sin() / l[i - 1]).atan();
        }
    }

    pub fn set_fictive(&mut self, angles: &[f64]) -> Result<()> {
        if angles.len() != self.angles.len() {
            return Err(Error::invalid(
                "fictive angle count differs from chain length",
            ));
        }
        self.angles.copy_from_slice(angles);
        Ok(())
    }

    /// Evaluates the law at the current pose and advances the chain by `ds`.
    pub fn step(
        &mut self,
        rear_pose: Pose2,
        delta_real: f64,
        path: &RefPath,
        ds: f64,
    ) -> Result<ControlOutput> {
        if !(delta_real.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::domain("measured steering angle out of range"));
        }
        self.angles[0] = self.map.to_ctrl(delta_real);
        let lambdas = &self.params.lambdas;
        let wheels = lift_angles(rear_pose, &self.angles, lambdas, path)?;
        let outer = *wheels.last().unwrap();
        let sigma = sliding_sigma(outer, self.params.kappa_bar, self.params.k_rob);
        let kappa_cmd = dubins_kappa(sigma, self.params.kappa_bar, self.params.sign_zero)
            + self.kappa_disturbance;

        let ctrl_derivs = trailer_derivatives(&self.angles, lambdas, kappa_cmd);
        let mut d = Vec::with_capacity(ctrl_derivs.len() + 1);
        d.push(self.angles[0]);
        d.extend_from_slice(&ctrl_derivs);
        let real = self
            .map
            .to_real_jet(&Jet::from_derivatives(&d))
            .derivatives();
        let fictive = self.angles.clone();

        // explicit Euler, sub-stepped so each step stays well below the
        // shortest wheelbase
        let min_l = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        let subs = (ds.max(0.0) / (0.05 * min_l)).ceil().max(1.0) as usize;
        let h = ds.max(0.0) / subs as f64;
        for _ in 0..subs {
            let r = trailer_rates(&self.angles, lambdas, kappa_cmd);
            for (a, r) in self.angles.iter_mut().zip(r) {
                *a += h * r;
            }
        }

        Ok(ControlOutput {
            delta_cmd: self.map.to_real(self.angles[0]),
            delta_derivs: real[1..].to_vec(),
            sigma,
            kappa_cmd,
            wheels,
            fictive,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ref_path::build_arc_sequence;
    use crate::smc::{control_c0, invariant_chain, ChainState};
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_derivative_matches_c0() {
        let path = build_arc_sequence(&[(0.0, 200.0)]).unwrap();
        let p = ControllerParams::c0(0.2, 2.0, 0.1);
        let mut c = TrackingController::new(p.clone(), 2.0).unwrap();
        let pose = Pose2::new(5.0, 1.3, 0.2);
        let out = c.step(pose, 0.1, &path, 0.0).unwrap();
        let want =
            control_c0(&ChainState::new(WheelError::new(1.3, 0.2), 0.1, vec![]), &p).unwrap();
        assert_abs_diff_eq!(out.delta_derivs[0], want, epsilon = 1e-12);
    }

    #[test]
    fn reset_leaves_chain_at_rest() {
        let p = ControllerParams {
            kappa_bar: 0.1,
            k_rob: 0.0,
            lambdas: vec![2.0, 1.0, 0.5],
            sign_zero: 0.0,
        };
        let mut c = TrackingController::new(p.clone(), 2.0).unwrap();
        c.reset(0.3);
        let r = trailer_rates(c.fictive(), &p.lambdas, c.fictive()[2].sin() / 0.5);
        for v in r {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_loop_converges_on_straight() {
        let path = build_arc_sequence(&[(0.0, 400.0)]).unwrap();
        let p = ControllerParams::c1(0.1, 2.5, 1.0, 0.2);
        let bounds = invariant_chain(p.kappa_bar, &p.lambdas).unwrap();
        let mut c = TrackingController::new(p, 2.5).unwrap();
        let mut pose = Pose2::new(0.0, 3.0, 0.0);
        let mut delta = 0.0;
        let ds = 0.01;
        for _ in 0..30000 {
            let out = c.step(pose, delta, &path, ds).unwrap();
            delta = out.delta_cmd;
            assert!(delta.abs() <= bounds[0] + 1e-6);
            pose = Pose2::new(
                pose.x + ds * pose.heading.cos(),
                pose.y + ds * pose.heading.sin(),
                pose.heading + ds * delta.tan() / 2.5,
            );
        }
        assert!(pose.y.abs() < 1e-3, "offset {}", pose.y);
    }
}
