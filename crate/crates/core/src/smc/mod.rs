//! Sliding-mode path tracking on a fictive trailer chain.
//!
//! The bang-bang Dubins law is applied to the outermost wheel of a chain of
//! fictive wheels placed ahead of the rear axle. Every added wheel raises the
//! smoothness of the real steering angle by one derivative while keeping each
//! steering angle inside an invariant interval.

mod chain;
mod controller;
mod lift;
mod oracles;
mod sliding;

pub use chain::{
    chain_command, control_c0, control_c1, control_cn, fictive_angles, trailer_derivatives,
    trailer_rates, C1Terms, SteeringMap,
};
pub use controller::{ControlOutput, TrackingController};
pub use lift::{lift_angles, lift_chain, lift_closed_form};
pub use oracles::{flatness_ddelta, flatness_pipeline, hosm_zeta};
pub use sliding::{
    dubins_kappa, dubins_steering, invariant_bounds, invariant_chain, lift_front, sign_or,
    sliding_sigma,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ref_path::wrap_angle;

/// Lateral offset and heading error of one (real or fictive) wheel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WheelError {
    pub e: f64,
    pub psi: f64,
}

impl WheelError {
    /// Heading is wrapped to (-pi, pi].
    pub fn new(e: f64, psi: f64) -> Self {
        WheelError {
            e,
            psi: wrap_angle(psi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Curvature bound of the outermost wheel.
    pub kappa_bar: f64,
    #[serde(default)]
    pub k_rob: f64,
    /// Wheelbases of the chain, innermost first: `[lambda, lambda_l, ...]`.
    /// The smoothness order is the chain length.
    pub lambdas: Vec<f64>,
    /// Value of `sign(0)`.
    #[serde(default)]
    pub sign_zero: f64,
}

impl ControllerParams {
    pub fn c0(kappa_f: f64, lambda: f64, k_rob: f64) -> Self {
        ControllerParams {
            kappa_bar: kappa_f,
            k_rob,
            lambdas: vec![lambda],
            sign_zero: 0.0,
        }
    }

    pub fn c1(kappa_l: f64, lambda: f64, lambda_l: f64, k_rob: f64) -> Self {
        ControllerParams {
            kappa_bar: kappa_l,
            k_rob,
            lambdas: vec![lambda, lambda_l],
            sign_zero: 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.lambdas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::invalid("chain needs at least one wheelbase"));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::invalid("all wheelbases must be positive"));
        }
        if !(self.kappa_bar >= 0.0) {
            return Err(Error::invalid("kappa_bar must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.k_rob) {
            return Err(Error::invalid("k_rob must lie in [0, 1)"));
        }
        let outer = *self.lambdas.last().unwrap();
        if self.kappa_bar * outer > 1.0 {
            return Err(Error::invalid(
                "kappa_bar * lambda_n exceeds 1, the outer invariant set is empty",
            ));
        }
        Ok(())
    }
}

/// Controller state in the arc-length domain: rear error, real steering
/// angle and its path derivatives `delta', ..., delta^(n-1)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub rear: WheelError,
    pub delta: f64,
    pub delta_derivs: Vec<f64>,
}

impl ChainState {
    pub fn new(rear: WheelError, delta: f64, delta_derivs: Vec<f64>) -> Self {
        ChainState {
            rear,
            delta,
            delta_derivs,
        }
    }

    /// Fictive steering angles `delta_1 = delta, delta_2, ..., delta_n`.
    pub fn fictive(&self, params: &ControllerParams) -> Result<Vec<f64>> {
        fictive_angles(self.delta, &self.delta_derivs, &params.lambdas)
    }
}
