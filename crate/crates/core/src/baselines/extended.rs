//! Arc-length simulation of the single-track error dynamics with the
//! steering rate as input: `e' = sin psi`, `psi' = tan(delta) / lambda`,
//! `delta' = u`, with `delta` held at its stop.

use crate::error::{Error, Result};
use crate::smc::WheelError;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExtendedState {
    pub e: f64,
    pub psi: f64,
    pub delta: f64,
}

impl ExtendedState {
    pub fn new(err: WheelError, delta: f64) -> Self {
        ExtendedState {
            e: err.e,
            psi: err.psi,
            delta,
        }
    }

    pub fn error(&self) -> WheelError {
        WheelError {
            e: self.e,
            psi: self.psi,
        }
    }

    pub fn in_box(&self, eps: f64) -> bool {
        self.e.abs() <= eps && self.psi.abs() <= eps && self.delta.abs() <= eps
    }

    /// Mirror image `(-e, -psi, -delta)`.
    pub fn mirrored(&self) -> Self {
        ExtendedState {
            e: -self.e,
            psi: -self.psi,
            delta: -self.delta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachSample {
    pub s: f64,
    pub state: ExtendedState,
    pub ddelta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachOutcome {
    /// First arc length at which `(e, psi, delta)` is inside the box.
    pub distance: Option<f64>,
    pub samples: Vec<ReachSample>,
}

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Heading change after `t` with the angle ramping from `delta` (tangent
/// `tan_d`) at rate `u`.
fn heading_gain(tan_d: f64, u: f64, t: f64, lambda: f64) -> f64 {
    let ut = u * t;
    if ut == 0.0 {
        return t * tan_d / lambda;
    }
    // cos(delta + ut) / cos(delta) = 1 - 2 sin^2(ut/2) - tan(delta) sin(ut)
    let half = (0.5 * ut).sin();
    let x = -2.0 * half * half - tan_d * ut.sin();
    -x.ln_1p() / (u * lambda)
}

/// Exact motion with the steering angle held.
fn hold(x: ExtendedState, len: f64, lambda: f64) -> ExtendedState {
    let k = x.delta.tan() / lambda;
    let turn = k * len;
    let chord = if turn.abs() < 1e-12 {
        len
    } else {
        2.0 * (0.5 * turn).sin() / k
    };
    ExtendedState {
        e: x.e + chord * (x.psi + 0.5 * turn).sin(),
        psi: x.psi + turn,
        delta: x.delta,
    }
}

/// Motion with the angle ramping at rate `u`; heading in closed form,
/// lateral offset by composite Gauss-Legendre quadrature.
fn ramp(x: ExtendedState, u: f64, len: f64, lambda: f64) -> ExtendedState {
    let steepest = x.delta.abs().max((x.delta + u * len).abs()).min(1.5);
    let spread = (u * len).abs() / 0.5;
    let turn = len * steepest.tan() / lambda / 0.5;
    let pieces = spread.max(turn).ceil().max(1.0) as usize;
    let h = len / pieces as f64;
    let mut e = x.e;
    let mut psi = x.psi;
    let mut delta = x.delta;
    for _ in 0..pieces {
        let tan_d = delta.tan();
        let mut acc = 0.0;
        for (&xi, &w) in GL_X.iter().zip(&GL_W) {
            for t in [0.5 * h * (1.0 - xi), 0.5 * h * (1.0 + xi)] {
                acc += w * (psi + heading_gain(tan_d, u, t, lambda)).sin();
            }
        }
        e += 0.5 * h * acc;
        psi += heading_gain(tan_d, u, h, lambda);
        delta += u * h;
    }
    ExtendedState { e, psi, delta }
}

/// Advances by `len` with constant rate `u`. The angle stops at
/// `delta_bar` and is held there for the rest of the step.
pub(crate) fn advance(
    x: ExtendedState,
    u: f64,
    len: f64,
    lambda: f64,
    delta_bar: f64,
) -> ExtendedState {
    if len <= 0.0 {
        return x;
    }
    let mut u = u;
    if x.delta.abs() >= delta_bar && u * x.delta > 0.0 {
        u = 0.0;
    }
    if u == 0.0 {
        return hold(x, len, lambda);
    }
    let stop = (u.signum() * delta_bar - x.delta) / u;
    if stop >= len {
        return ramp(x, u, len, lambda);
    }
    let mut y = ramp(x, u, stop.max(0.0), lambda);
    y.delta = u.signum() * delta_bar;
    hold(y, len - stop.max(0.0), lambda)
}

/// Runs a state-feedback steering-rate law with zero-order hold over `ds`
/// until the box `eps` is entered or `budget` is exhausted.
pub fn reach_distance_closed_loop(
    init: ExtendedState,
    mut law: impl FnMut(&ExtendedState) -> Result<f64>,
    lambda: f64,
    delta_bar: f64,
    eps: f64,
    ds: f64,
    budget: f64,
) -> Result<ReachOutcome> {
    if !(ds > 0.0 && budget > 0.0 && eps > 0.0) {
        return Err(Error::invalid("ds, budget and eps must be positive"));
    }
    let mut x = init;
    let mut s = 0.0;
    let mut samples = Vec::new();
    let steps = (budget / ds).ceil() as usize;
    for _ in 0..=steps {
        let u = law(&x)?;
        samples.push(ReachSample {
            s,
            state: x,
            ddelta: u,
        });
        if x.in_box(eps) {
            return Ok(ReachOutcome {
                distance: Some(s),
                samples,
            });
        }
        x = advance(x, u, ds, lambda, delta_bar);
        s += ds;
    }
    Ok(ReachOutcome {
        distance: None,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn saturation_holds_the_stop() {
        let x = ExtendedState::default();
        let y = advance(x, 1.0, 2.0, 1.0, 0.5);
        assert_eq!(y.delta, 0.5);
        // psi = int tan(s) ds over [0, 0.5] + tan(0.5) * 1.5
        let want = -(0.5f64.cos().ln()) + 0.5f64.tan() * 1.5;
        assert_abs_diff_eq!(y.psi, want, epsilon = 1e-12);
    }

    #[test]
    fn mirror_symmetry() {
        let x = ExtendedState {
            e: 0.3,
            psi: -0.2,
            delta: 0.1,
        };
        let a = advance(x, -0.7, 1.3, 1.2, 0.5);
        let b = advance(x.mirrored(), 0.7, 1.3, 1.2, 0.5);
        assert_abs_diff_eq!(a.e, -b.e, epsilon = 1e-15);
        assert_abs_diff_eq!(a.psi, -b.psi, epsilon = 1e-15);
        assert_abs_diff_eq!(a.delta, -b.delta, epsilon = 1e-15);
    }

    #[test]
    fn matches_fine_rk4() {
        use crate::plant::rk4;
        let x = ExtendedState {
            e: 0.3,
            psi: 0.4,
            delta: -0.2,
        };
        let (u, len, lambda) = (0.9, 0.6, 1.3);
        let y = advance(x, u, len, lambda, 0.5);
        let n = 2000;
        let h = len / n as f64;
        let mut q = [x.e, x.psi, x.delta];
        for _ in 0..n {
            q = rk4(q, 0.0, h, |_, y| [y[1].sin(), y[2].tan() / lambda, u]);
        }
        assert_abs_diff_eq!(y.e, q[0], epsilon = 1e-12);
        assert_abs_diff_eq!(y.psi, q[1], epsilon = 1e-12);
        assert_abs_diff_eq!(y.delta, q[2], epsilon = 1e-12);
    }
}
