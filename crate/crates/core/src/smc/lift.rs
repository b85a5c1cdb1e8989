use crate::error::Result;
use crate::ref_path::{wrap_angle, Pose2, RefPath};

use super::chain::lift_straight;
use super::{ChainState, ControllerParams, WheelError};

/// Straight-path lift: `e_i = e_{i-1} + sin(psi_{i-1}) * lambda_i`,
/// `psi_i = psi_{i-1} + delta_i`. Returns rear and all chain wheels.
pub fn lift_closed_form(rear: WheelError, angles: &[f64], lambdas: &[f64]) -> Vec<WheelError> {
    lift_straight(rear, angles, lambdas)
}

/// Per-wheel path errors for a chain hanging off `rear_pose`.
///
/// On straight paths the closed-form lift is used. Otherwise every wheel is
/// placed in the plane and projected onto the path on its own.
pub fn lift_angles(
    rear_pose: Pose2,
    angles: &[f64],
    lambdas: &[f64],
    path: &RefPath,
) -> Result<Vec<WheelError>> {
    let proj = path.project(rear_pose.position())?;
    let rear = WheelError::new(proj.e, rear_pose.heading - proj.theta);
    if path.is_straight() {
        return Ok(lift_straight(rear, angles, lambdas));
    }
    let mut out = Vec::with_capacity(angles.len() + 1);
    out.push(rear);
    let mut pose = rear_pose;
    for (&a, &l) in angles.iter().zip(lambdas) {
        let pos = pose.ahead(l);
        pose = Pose2::new(pos.x, pos.y, wrap_angle(pose.heading + a));
        let p = path.project(pos)?;
        out.push(WheelError::new(p.e, pose.heading - p.theta));
    }
    Ok(out)
}

/// Errors of the rear wheel and every chain wheel for a controller state.
pub fn lift_chain(
    state: &ChainState,
    params: &ControllerParams,
    path: &RefPath,
    rear_pose: Pose2,
) -> Result<Vec<WheelError>> {
    let angles = state.fictive(params)?;
    lift_angles(rear_pose, &angles, &params.lambdas, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ref_path::{build_arc_sequence, build_arc_sequence_from};
    use crate::smc::lift_front;
    use approx::assert_abs_diff_eq;

    #[test]
    fn straight_zero_angles_keep_rear_offset() {
        let path = build_arc_sequence(&[(0.0, 100.0)]).unwrap();
        let rear = Pose2::new(10.0, 0.7, 0.0);
        let errs = lift_angles(rear, &[0.0, 0.0, 0.0], &[2.0, 1.0, 0.5], &path).unwrap();
        for w in errs {
            assert_abs_diff_eq!(w.e, 0.7, epsilon = 1e-12);
            assert_abs_diff_eq!(w.psi, 0.0);
        }
    }

    #[test]
    fn straight_single_wheel_is_lift_front() {
        let path = build_arc_sequence(&[(0.0, 100.0)]).unwrap();
        let rear = Pose2::new(10.0, -0.4, 0.3);
        let errs = lift_angles(rear, &[0.2], &[2.0], &path).unwrap();
        let f = lift_front(WheelError::new(-0.4, 0.3), 0.2, 2.0);
        assert_abs_diff_eq!(errs[1].e, f.e, epsilon = 1e-12);
        assert_abs_diff_eq!(errs[1].psi, f.psi, epsilon = 1e-12);
    }

    #[test]
    fn projected_lift_agrees_with_closed_form_on_tilted_line() {
        let start = Pose2::new(3.0, -2.0, 0.7);
        let path = build_arc_sequence_from(start, &[(0.0, 200.0)]).unwrap();
        let p = path.point_from_frenet(20.0, 0.9);
        let rear = Pose2::new(p.x, p.y, 0.7 + 0.25);
        let angles = [0.1, -0.2];
        let lambdas = [2.0, 1.0];
        let fast = lift_angles(rear, &angles, &lambdas, &path).unwrap();
        // force the projection branch via a curved tail far away
        let bent = build_arc_sequence_from(start, &[(0.0, 200.0), (0.01, 10.0)]).unwrap();
        let slow = lift_angles(rear, &angles, &lambdas, &bent).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert_abs_diff_eq!(a.e, b.e, epsilon = 1e-9);
            assert_abs_diff_eq!(a.psi, b.psi, epsilon = 1e-9);
        }
    }

    #[test]
    fn stationary_cornering_puts_lead_on_front_track() {
        let (radius, lambda_veh, lambda_l): (f64, f64, f64) = (30.0, 2.7, 1.2);
        let lambda = (lambda_veh * lambda_veh - lambda_l * lambda_l).sqrt();
        let path = build_arc_sequence(&[(1.0 / radius, 150.0)]).unwrap();
        // rear axle on a concentric circle, tangent heading
        let r0 = 28.5;
        let s = 60.0;
        let pos = path.point_from_frenet(s, radius - r0);
        let rear = Pose2::new(pos.x, pos.y, path.pose_at(s).heading);
        let d1 = (lambda / r0).atan();
        let d2 = (lambda_l / (r0 * r0 + lambda * lambda).sqrt()).atan();
        let chain = lift_angles(rear, &[d1, d2], &[lambda, lambda_l], &path).unwrap();
        let front_real = (lambda_veh / r0).atan();
        let real = lift_angles(rear, &[front_real], &[lambda_veh], &path).unwrap();
        assert_abs_diff_eq!(chain[2].e, real[1].e, epsilon = 1e-9);
    }
}
