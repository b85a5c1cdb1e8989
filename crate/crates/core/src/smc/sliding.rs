use crate::error::{Error, Result};

use super::WheelError;

/// `sign(x)` with a configurable value at exactly zero.
#[inline]
pub fn sign_or(x: f64, at_zero: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        at_zero
    }
}

/// Switching function of the Dubins-optimal reaching law, widened by `k_rob`.
pub fn sliding_sigma(err: WheelError, kappa_bar: f64, k_rob: f64) -> f64 {
    let WheelError { e, psi } = err;
    let bend = 1.0 - psi.cos();
    if bend == 0.0 {
        return -e;
    }
    -e - bend / ((1.0 - k_rob) * kappa_bar) * sign_or(psi.sin(), 0.0)
}

pub fn dubins_kappa(sigma: f64, kappa_bar: f64, sign_zero: f64) -> f64 {
    kappa_bar * sign_or(sigma, sign_zero)
}

/// Unsmoothed Dubins law applied directly to the rear wheel.
pub fn dubins_steering(err: WheelError, kappa_bar: f64, lambda: f64, k_rob: f64) -> f64 {
    let s = sliding_sigma(err, kappa_bar, k_rob);
    (dubins_kappa(s, kappa_bar, 0.0) * lambda).atan()
}

/// Error of the wheel mounted `lambda` ahead and steered by `delta`.
pub fn lift_front(rear: WheelError, delta: f64, lambda: f64) -> WheelError {
    WheelError::new(rear.e + rear.psi.sin() * lambda, rear.psi + delta)
}

/// Half-width `arcsin(kappa_bar * lambda)` of the invariant steering interval.
pub fn invariant_bounds(kappa_bar: f64, lambda: f64) -> Result<f64> {
    let x = kappa_bar * lambda;
    if !(x >= 0.0) || x > 1.0 {
        return Err(Error::invalid(format!(
            "kappa_bar * lambda = {x} is outside [0, 1]; the invariant set is empty"
        )));
    }
    Ok(x.asin())
}

/// Invariant half-widths for every wheel of a chain, innermost first.
///
/// The bound of wheel `i` follows from the largest curvature its successor
/// can impose, `tan(b_{i+1}) / lambda_{i+1}`.
pub fn invariant_chain(kappa_bar: f64, lambdas: &[f64]) -> Result<Vec<f64>> {
    let n = lambdas.len();
    let mut bounds = vec![0.0; n];
    let mut kappa = kappa_bar;
    for i in (0..n).rev() {
        bounds[i] = invariant_bounds(kappa, lambdas[i])?;
        kappa = bounds[i].tan() / lambdas[i];
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn sigma_examples() {
        assert_eq!(sliding_sigma(WheelError::new(0.0, 0.0), 0.2, 0.0), 0.0);
        assert_eq!(sliding_sigma(WheelError::new(1.0, 0.0), 0.7, 0.0), -1.0);
        // -0.5 - (1 - cos(pi/3)) / 0.2 = -0.5 - 2.5
        assert_abs_diff_eq!(
            sliding_sigma(WheelError::new(0.5, PI / 3.0), 0.2, 0.0),
            -3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn k_rob_widens_the_bend_term() {
        let err = WheelError::new(0.0, 0.4);
        let a = sliding_sigma(err, 0.2, 0.0);
        let b = sliding_sigma(err, 0.2, 0.5);
        assert_abs_diff_eq!(b, 2.0 * a, epsilon = 1e-12);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(dubins_kappa(-3.0, 0.2, 0.0), -0.2);
        assert_eq!(dubins_kappa(0.0, 0.2, 0.0), 0.0);
        assert_eq!(dubins_kappa(1e-12, 1.0, 0.0), 1.0);
        assert_eq!(dubins_kappa(0.0, 0.2, 1.0), 0.2);
    }

    #[test]
    fn lift_front_examples() {
        let f = lift_front(WheelError::new(1.0, 0.0), 0.1, 2.0);
        assert_abs_diff_eq!(f.e, 1.0);
        assert_abs_diff_eq!(f.psi, 0.1);
        let f = lift_front(WheelError::new(0.5, PI / 6.0), 0.0, 2.0);
        assert_abs_diff_eq!(f.e, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.psi, PI / 6.0);
        assert_eq!(
            lift_front(WheelError::default(), 0.0, 3.0),
            WheelError::default()
        );
    }

    #[test]
    fn invariant_bound_examples() {
        assert_abs_diff_eq!(
            invariant_bounds(0.5, 1.0).unwrap(),
            PI / 6.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(invariant_bounds(0.5, 2.0).unwrap(), PI / 2.0);
        assert_eq!(invariant_bounds(0.0, 3.0).unwrap(), 0.0);
        assert!(matches!(
            invariant_bounds(0.6, 2.0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn chain_bounds_match_two_wheel_case() {
        let b = invariant_chain(0.2, &[2.0, 1.0]).unwrap();
        let bl = (0.2f64).asin();
        assert_abs_diff_eq!(b[1], bl);
        assert_abs_diff_eq!(b[0], (2.0 * bl.tan()).asin(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn kappa_ignores_positive_scaling(sigma in -10.0f64..10.0, k in 1e-6f64..1e6) {
            prop_assert_eq!(dubins_kappa(sigma, 0.3, 0.0), dubins_kappa(sigma * k, 0.3, 0.0));
        }
    }
}
