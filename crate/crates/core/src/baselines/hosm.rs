use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smc::{sign_or, WheelError};

/// Constrained HOSM law on the flat output `sigma_1 = e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HosmParams {
    /// Heading bound that keeps the input gain away from zero.
    pub psi_bar: f64,
    /// Steering rate bound [rad/m].
    pub ddelta_bar: f64,
    /// Steering angle bound [rad].
    pub delta_bar: f64,
    pub lambda: f64,
    /// Width of the heading boundary layer [rad].
    #[serde(default = "default_layer")]
    pub layer: f64,
}

fn default_layer() -> f64 {
    0.02
}

impl HosmParams {
    pub fn new(psi_bar: f64, ddelta_bar: f64, delta_bar: f64, lambda: f64) -> Result<Self> {
        let p = HosmParams {
            psi_bar,
            ddelta_bar,
            delta_bar,
            lambda,
            layer: default_layer(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Lower bound of the input gain, `cos(psi_bar) / lambda`.
    pub fn g_bound(&self) -> f64 {
        self.psi_bar.cos() / self.lambda
    }

    /// Upper bound of the drift, `sin(psi_bar) (tan(delta_bar) / lambda)^2`.
    pub fn f_bound(&self) -> f64 {
        let k = self.delta_bar.tan() / self.lambda;
        self.psi_bar.sin() * k * k
    }

    pub fn alpha(&self) -> f64 {
        self.g_bound() * self.ddelta_bar - self.f_bound()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.psi_bar > 0.0 && self.psi_bar < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("psi_bar must lie in (0, pi/2)"));
        }
        if !(self.ddelta_bar > 0.0 && self.delta_bar > 0.0 && self.lambda > 0.0) {
            return Err(Error::invalid(
                "rate bound, angle bound and wheelbase must be positive",
            ));
        }
        if !(self.delta_bar < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("delta_bar must be below pi/2"));
        }
        if !(self.layer >= 0.0) {
            return Err(Error::invalid("boundary layer must be nonnegative"));
        }
        if !(self.alpha() > 0.0) {
            return Err(Error::invalid(format!(
                "alpha = G ddelta_bar - F = {} is not positive",
                self.alpha()
            )));
        }
        Ok(())
    }
}

/// Time-optimal switching function of the triple integrator with input
/// bound `alpha`; zero on the trajectories that reach the origin with at most
/// one further switch.
pub fn switching_surface(s1: f64, s2: f64, s3: f64, alpha: f64) -> f64 {
    let w = s2 + s3 * s3.abs() / (2.0 * alpha);
    let sg = sign_or(w, 0.0);
    let inner = (sg * s2 + s3 * s3 / (2.0 * alpha)).max(0.0);
    s1 + s3 * s3 * s3 / (3.0 * alpha * alpha)
        + sg * (s2 * s3 / alpha + inner.powf(1.5) / alpha.sqrt())
}

/// Steering rate `delta'` of the constrained HOSM law.
pub fn hosm_control(err: WheelError, delta: f64, params: &HosmParams) -> Result<f64> {
    let WheelError { e, psi } = err;
    if !(psi.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain(format!("|psi| = {} reached pi/2", psi.abs())));
    }
    if !(delta.abs() <= params.delta_bar * (1.0 + 1e-12)) {
        return Err(Error::domain(format!(
            "|delta| = {} exceeds {}",
            delta.abs(),
            params.delta_bar
        )));
    }
    let alpha = params.alpha();
    let s1 = e;
    let s2 = psi.sin();
    let s3 = psi.cos() * delta.tan() / params.lambda;

    // heading constraint: brake sigma_3 once sigma_2 would overrun its bound
    let w = s2 + s3 * s3.abs() / (2.0 * alpha);
    let heading_active = s2 * s3 > 0.0
        && (w.abs() >= params.psi_bar.sin() || psi.abs() > params.psi_bar - params.layer);
    let u = if heading_active {
        -params.ddelta_bar * sign_or(s3, 0.0)
    } else {
        -params.ddelta_bar * sign_or(switching_surface(s1, s2, s3, alpha), 0.0)
    };
    // hold at the steering stop
    if delta.abs() >= params.delta_bar && u * delta > 0.0 {
        return Ok(0.0);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn origin_holds() {
        let p = HosmParams::new(0.5, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(hosm_control(WheelError::default(), 0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn zero_heading_bound_limit() {
        let p = HosmParams {
            psi_bar: 1e-12,
            ddelta_bar: 0.8,
            delta_bar: 0.5,
            lambda: 1.0,
            layer: 0.02,
        };
        assert_abs_diff_eq!(p.g_bound(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.f_bound(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.alpha(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn rejects_uncontrollable_bounds() {
        assert!(HosmParams::new(1.4, 0.01, 1.2, 1.0).is_err());
    }

    #[test]
    fn triple_integrator_reaches_origin() {
        let a = 0.7;
        let h = 1e-4;
        for &(x1, x2, x3) in &[(1.0, 0.0, 0.0), (-0.5, 0.3, 0.2), (0.2, -0.4, 0.5)] {
            let mut x = [x1, x2, x3];
            let mut t = 0.0;
            while t < 30.0 {
                let u = -a * sign_or(switching_surface(x[0], x[1], x[2], a), 0.0);
                x = [x[0] + h * x[1], x[1] + h * x[2], x[2] + h * u];
                t += h;
            }
            assert!(x.iter().all(|v| v.abs() < 1e-3), "{x:?}");
        }
    }

    proptest! {
        #[test]
        fn surface_vanishes_on_two_arc_trajectories(
            a in 0.2f64..3.0, t1 in 0.0f64..2.0, t2 in 0.0f64..2.0, up in proptest::bool::ANY
        ) {
            // final arc with u_f into the origin, preceded by an arc with -u_f
            let uf = if up { a } else { -a };
            let x3 = -uf * t1;
            let x2 = uf * t1 * t1 / 2.0;
            let x1 = -uf * t1.powi(3) / 6.0;
            let y3 = x3 + uf * t2;
            let y2 = x2 - y3 * t2 + uf * t2 * t2 / 2.0;
            let y1 = x1 - y2 * t2 - y3 * t2 * t2 / 2.0 + uf * t2.powi(3) / 6.0;
            let s = switching_surface(y1, y2, y3, a);
            prop_assert!(s.abs() < 1e-12 * (1.0 + y1.abs()), "{s}");
        }
    }
}
