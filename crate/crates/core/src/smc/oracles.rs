//! Reformulations of the single-wheel law used as independent cross-checks.

use crate::error::{Error, Result};

use super::sliding::sign_or;
use super::WheelError;

/// Steering rate from the flat output `e` and its derivatives.
///
/// Inverts `e''' = f(e', e'') + g(e', e'') * delta'` for the kinematic
/// single-track model with wheelbase `lambda`.
pub fn flatness_ddelta(e: f64, e1: f64, e2: f64, e3: f64, lambda: f64) -> Result<f64> {
    let _ = e;
    if !(e1.abs() < 1.0) {
        return Err(Error::domain(format!(
            "|e'| = {} must be below 1",
            e1.abs()
        )));
    }
    let c2 = 1.0 - e1 * e1;
    let le2 = lambda * e2;
    Ok(lambda * (e3 + e1 * e2 * e2 / c2) * c2.sqrt() / (le2 * le2 + c2))
}

/// Convergence law of the front-wheel offset written in the flat output.
pub fn hosm_zeta(sigma_u: f64, dsigma_u: f64, kappa_bar_f: f64, k_rob: f64) -> Result<f64> {
    if !(dsigma_u.abs() <= 1.0) {
        return Err(Error::domain(format!(
            "|dsigma_u| = {} must not exceed 1",
            dsigma_u.abs()
        )));
    }
    let bend = 1.0 - (1.0 - dsigma_u * dsigma_u).sqrt();
    if bend == 0.0 {
        return Ok(-sigma_u);
    }
    Ok(-sigma_u - bend / ((1.0 - k_rob) * kappa_bar_f) * sign_or(dsigma_u, 0.0))
}

/// Steering rate of the single fictive wheel law computed through the flat
/// output: the front offset `e + lambda e'` follows the Dubins law in its own
/// arc length, which is converted to a demand on `e'''` and inverted.
pub fn flatness_pipeline(
    rear: WheelError,
    delta: f64,
    kappa_bar_f: f64,
    lambda: f64,
    k_rob: f64,
    sign_zero: f64,
) -> Result<f64> {
    if !(rear.psi.cos() > 0.0) {
        return Err(Error::domain("flat output needs cos(psi) > 0"));
    }
    // flat coordinates
    let e = rear.e;
    let e1 = rear.psi.sin();
    let e2 = rear.psi.cos() * delta.tan() / lambda;
    let c2 = 1.0 - e1 * e1;
    let norm = (c2 + lambda * lambda * e2 * e2).sqrt();
    let cos_d = c2.sqrt() / norm;
    let sin_d = lambda * e2 / norm;

    let e_dub = e + lambda * e1;
    let slope = (e1 + lambda * e2) * cos_d;
    if !(slope.abs() < 1.0) {
        return Err(Error::domain(
            "front wheel must not run perpendicular to the path",
        ));
    }
    let zeta = hosm_zeta(e_dub, slope, kappa_bar_f, k_rob)?;
    let curv = (1.0 - slope * slope).sqrt() * kappa_bar_f * sign_or(zeta, sign_zero);

    // rear arc length: e_dub'' = A + B delta'
    let a = curv / (cos_d * cos_d);
    let b = slope * sin_d / (cos_d * cos_d);
    // e''' = (e_dub'' - e'') / lambda
    let e3_0 = (a - e2) / lambda;
    let e3_1 = b / lambda;
    let g = c2.sqrt() * (1.0 + lambda * lambda * e2 * e2 / c2) / lambda;
    Ok(flatness_ddelta(e, e1, e2, e3_0, lambda)? / (1.0 - e3_1 / g))
}
