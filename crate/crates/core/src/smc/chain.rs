//! Back-propagation of the outer wheel curvature through the chain joints.
//!
//! Two independent routes are implemented. The forward route expresses the
//! fictive angles and the outer curvature as functions of the real steering
//! angle and its path derivatives (Taylor arithmetic on jets). The trailer route
//! treats the fictive angles as states of a trailer ODE and differentiates that
//! ODE. Both agree on consistent states and are cross-checked in tests.

use crate::error::{Error, Result};
use crate::jet::Jet;

use super::sliding::{dubins_kappa, lift_front, sliding_sigma};
use super::{ChainState, ControllerParams, WheelError};

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

fn check_angle(name: &str, a: f64) -> Result<()> {
    if a.is_finite() && a.abs() < HALF_PI {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "|{name}| = {} must stay below pi/2",
            a.abs()
        )))
    }
}

/// Propagates a steering jet through the chain. Returns the fictive angle
/// jets and the curvature jet of the outermost wheel.
fn propagate(delta: &Jet, lambdas: &[f64]) -> (Vec<Jet>, Jet) {
    let mut angles = Vec::with_capacity(lambdas.len());
    let mut kappa = delta.tan().scale(1.0 / lambdas[0]);
    let mut p: Option<Jet> = None;
    for (i, &lam) in lambdas.iter().enumerate() {
        let angle = if i == 0 {
            delta.clone()
        } else {
            kappa.scale(lam).atan()
        };
        let c = angle.cos();
        let pi = match &p {
            Some(prev) => prev * &c,
            None => c.clone(),
        };
        kappa = &(&c * &kappa) + &(&pi * &angle.diff());
        p = Some(pi);
        angles.push(angle);
    }
    (angles, kappa)
}

/// Fictive angles `delta_1, ..., delta_n` implied by the real steering angle
/// and its derivatives `delta', ..., delta^(n-1)`.
pub fn fictive_angles(delta: f64, derivs: &[f64], lambdas: &[f64]) -> Result<Vec<f64>> {
    if lambdas.is_empty() {
        return Err(Error::invalid("chain needs at least one wheelbase"));
    }
    if derivs.len() + 1 != lambdas.len() {
        return Err(Error::invalid(format!(
            "expected {} steering derivatives, got {}",
            lambdas.len() - 1,
            derivs.len()
        )));
    }
    check_angle("delta", delta)?;
    let mut d = Vec::with_capacity(lambdas.len() + 1);
    d.push(delta);
    d.extend_from_slice(derivs);
    d.push(0.0);
    let (angles, _) = propagate(&Jet::from_derivatives(&d), lambdas);
    Ok(angles.iter().map(Jet::value).collect())
}

/// Highest steering derivative `delta^(n)` that makes the outermost wheel
/// follow the curvature `kappa_n`.
pub fn chain_command(delta: f64, derivs: &[f64], lambdas: &[f64], kappa_n: f64) -> Result<f64> {
    check_angle("delta", delta)?;
    if derivs.len() + 1 != lambdas.len() {
        return Err(Error::invalid(format!(
            "expected {} steering derivatives, got {}",
            lambdas.len() - 1,
            derivs.len()
        )));
    }
    // kappa_n is affine in the highest derivative.
    let eval = |u: f64| {
        let mut d = Vec::with_capacity(lambdas.len() + 1);
        d.push(delta);
        d.extend_from_slice(derivs);
        d.push(u);
        propagate(&Jet::from_derivatives(&d), lambdas)
    };
    let (angles, k0) = eval(0.0);
    for (i, a) in angles.iter().enumerate() {
        check_angle(&format!("delta_{}", i + 1), a.value())?;
    }
    let (_, k1) = eval(1.0);
    let gain = k1.value() - k0.value();
    if gain == 0.0 || !gain.is_finite() {
        return Err(Error::domain("steering chain is singular"));
    }
    Ok((kappa_n - k0.value()) / gain)
}

/// Closed-form lift of the rear error through all chain wheels.
pub(crate) fn lift_straight(rear: WheelError, angles: &[f64], lambdas: &[f64]) -> Vec<WheelError> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    out.push(rear);
    let mut w = rear;
    for (&a, &l) in angles.iter().zip(lambdas) {
        w = lift_front(w, a, l);
        out.push(w);
    }
    out
}

fn outer_kappa(state: &ChainState, angles: &[f64], params: &ControllerParams) -> f64 {
    let errs = lift_straight(state.rear, angles, &params.lambdas);
    let outer = *errs.last().unwrap();
    let sigma = sliding_sigma(outer, params.kappa_bar, params.k_rob);
    dubins_kappa(sigma, params.kappa_bar, params.sign_zero)
}

/// Generic law for any chain length; returns `delta^(n)`.
///
/// Wheel errors are lifted with the straight-path closed form relative to the
/// rear error stored in `state`.
pub fn control_cn(state: &ChainState, params: &ControllerParams) -> Result<f64> {
    params.validate()?;
    let angles = fictive_angles(state.delta, &state.delta_derivs, &params.lambdas)?;
    for (i, &a) in angles.iter().enumerate() {
        check_angle(&format!("delta_{}", i + 1), a)?;
    }
    let kappa = outer_kappa(state, &angles, params);
    chain_command(state.delta, &state.delta_derivs, &params.lambdas, kappa)
}

/// Single fictive wheel: `delta' = kappa_f / cos(delta) - tan(delta) / lambda`.
pub fn control_c0(state: &ChainState, params: &ControllerParams) -> Result<f64> {
    params.validate()?;
    if params.order() != 1 {
        return Err(Error::invalid("control_c0 needs a chain of length 1"));
    }
    check_angle("delta", state.delta)?;
    let lambda = params.lambdas[0];
    let front = lift_front(state.rear, state.delta, lambda);
    let kappa_f = dubins_kappa(
        sliding_sigma(front, params.kappa_bar, params.k_rob),
        params.kappa_bar,
        params.sign_zero,
    );
    Ok(kappa_f / state.delta.cos() - state.delta.tan() / lambda)
}

/// Intermediate quantities of the two-wheel law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C1Terms {
    pub kappa_l: f64,
    pub delta_l: f64,
    pub ddelta_l: f64,
    pub dddelta: f64,
}

impl C1Terms {
    pub fn evaluate(
        delta: f64,
        ddelta: f64,
        kappa_l: f64,
        lambda: f64,
        lambda_l: f64,
    ) -> Result<Self> {
        check_angle("delta", delta)?;
        let (cd, td) = (delta.cos(), delta.tan());
        let delta_l = ((td / lambda + ddelta) * lambda_l * cd).atan();
        let cl = delta_l.cos();
        let ddelta_l = kappa_l / (cd * cl) - td / lambda - ddelta;
        let dddelta = ddelta_l / (cl * cl * cd * lambda_l) - ddelta / lambda + ddelta * ddelta * td;
        Ok(C1Terms {
            kappa_l,
            delta_l,
            ddelta_l,
            dddelta,
        })
    }
}

/// Lead wheel law; returns `delta''`.
pub fn control_c1(state: &ChainState, params: &ControllerParams) -> Result<f64> {
    params.validate()?;
    if params.order() != 2 || state.delta_derivs.len() != 1 {
        return Err(Error::invalid(
            "control_c1 needs a chain of length 2 and delta'",
        ));
    }
    check_angle("delta", state.delta)?;
    let (lambda, lambda_l) = (params.lambdas[0], params.lambdas[1]);
    let ddelta = state.delta_derivs[0];
    let cd = state.delta.cos();
    let delta_l = ((state.delta.tan() / lambda + ddelta) * lambda_l * cd).atan();
    let front = lift_front(state.rear, state.delta, lambda);
    let lead = lift_front(front, delta_l, lambda_l);
    let kappa_l = dubins_kappa(
        sliding_sigma(lead, params.kappa_bar, params.k_rob),
        params.kappa_bar,
        params.sign_zero,
    );
    Ok(C1Terms::evaluate(state.delta, ddelta, kappa_l, lambda, lambda_l)?.dddelta)
}

fn rates_jet(angles: &[Jet], lambdas: &[f64], kappa_n: f64) -> Vec<Jet> {
    let n = angles.len();
    let order = angles[0].order();
    let mut p = Jet::constant(1.0, order);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (s, c) = angles[i].sin_cos();
        p = &p * &c;
        let kappa_i = if i + 1 < n {
            angles[i + 1].tan().scale(1.0 / lambdas[i + 1])
        } else {
            Jet::constant(kappa_n, order)
        };
        let num = &kappa_i - &s.scale(1.0 / lambdas[i]);
        out.push(num.div(&p));
    }
    out
}

/// Path derivatives of the fictive angles when the outermost wheel follows
/// `kappa_n`, from the trailer kinematics
/// `delta_i' = (kappa_i - sin(delta_i) / lambda_i) / prod_{j<=i} cos(delta_j)`.
pub fn trailer_rates(angles: &[f64], lambdas: &[f64], kappa_n: f64) -> Vec<f64> {
    let jets: Vec<Jet> = angles.iter().map(|&a| Jet::constant(a, 0)).collect();
    rates_jet(&jets, lambdas, kappa_n)
        .iter()
        .map(Jet::value)
        .collect()
}

/// `[delta', ..., delta^(n)]` of the innermost angle obtained by Taylor
/// expansion of the trailer ODE.
pub fn trailer_derivatives(angles: &[f64], lambdas: &[f64], kappa_n: f64) -> Vec<f64> {
    let n = angles.len();
    let mut coeffs: Vec<Vec<f64>> = angles.iter().map(|&a| vec![a]).collect();
    for k in 0..n {
        let jets: Vec<Jet> = coeffs.iter().map(|c| Jet::from_coeffs(c.clone())).collect();
        let rates = rates_jet(&jets, lambdas, kappa_n);
        for (c, r) in coeffs.iter_mut().zip(&rates) {
            c.push(r.coeffs()[k] / (k + 1) as f64);
        }
    }
    Jet::from_coeffs(coeffs.swap_remove(0)).derivatives()[1..].to_vec()
}

/// Maps controller steering angles to the real vehicle.
///
/// The controller may use a first wheelbase `lambda` different from the
/// vehicle wheelbase. Both agree on the rear-axle curvature, so
/// `tan(delta_real) / lambda_veh = tan(delta_ctrl) / lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteeringMap {
    ratio: f64,
}

impl SteeringMap {
    pub fn new(lambda_ctrl: f64, lambda_veh: f64) -> Self {
        SteeringMap {
            ratio: lambda_veh / lambda_ctrl,
        }
    }

    /// `lambda_veh / lambda_ctrl`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn is_identity(&self) -> bool {
        self.ratio == 1.0
    }

    pub fn to_real(&self, delta_ctrl: f64) -> f64 {
        (self.ratio * delta_ctrl.tan()).atan()
    }

    pub fn to_ctrl(&self, delta_real: f64) -> f64 {
        (delta_real.tan() / self.ratio).atan()
    }

    /// Maps a derivative jet of the controller angle to the real angle.
    pub fn to_real_jet(&self, delta_ctrl: &Jet) -> Jet {
        if self.is_identity() {
            return delta_ctrl.clone();
        }
        delta_ctrl.tan().scale(self.ratio).atan()
    }

    pub fn to_ctrl_jet(&self, delta_real: &Jet) -> Jet {
        if self.is_identity() {
            return delta_real.clone();
        }
        delta_real.tan().scale(1.0 / self.ratio).atan()
    }
}
