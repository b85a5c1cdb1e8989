use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ref_path::Pose2;

use super::{rk4, KinematicState, SpeedProfile};

const GRAVITY: f64 = 9.81;
/// Below this speed the lateral dynamics are replaced by the kinematic relation.
const V_KINEMATIC: f64 = 0.5;

/// Lateral magic-formula tire, `F = D sin(C atan(B a - E (B a - atan(B a))))`
/// with `D = mu Fz`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicFormula {
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub mu: f64,
}

impl Default for MagicFormula {
    fn default() -> Self {
        MagicFormula {
            b: 10.0,
            c: 1.9,
            e: 0.97,
            mu: 1.0,
        }
    }
}

impl MagicFormula {
    pub fn force(&self, slip_angle: f64, fz: f64) -> f64 {
        let ba = self.b * slip_angle;
        self.mu * fz * (self.c * (ba - self.e * (ba - ba.atan())).atan()).sin()
    }

    /// Slope at zero slip.
    pub fn cornering_stiffness(&self, fz: f64) -> f64 {
        self.b * self.c * self.mu * fz
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KineticParams {
    pub mass: f64,
    pub yaw_inertia: f64,
    pub wheelbase: f64,
    /// Share of the weight on the front axle.
    pub front_weight: f64,
    pub tire: MagicFormula,
    /// Cut-off of each of the three actuator stages [Hz].
    pub actuator_cutoff_hz: f64,
    pub delta_max: f64,
}

impl Default for KineticParams {
    fn default() -> Self {
        KineticParams {
            mass: 1500.0,
            yaw_inertia: 2500.0,
            wheelbase: 2.7,
            front_weight: 0.5,
            tire: MagicFormula::default(),
            actuator_cutoff_hz: 5.0,
            delta_max: 0.5,
        }
    }
}

impl KineticParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.mass) && pos(self.yaw_inertia) && pos(self.wheelbase)) {
            return Err(Error::invalid(
                "mass, inertia and wheelbase must be positive",
            ));
        }
        if !(self.front_weight > 0.0 && self.front_weight < 1.0) {
            return Err(Error::invalid("front_weight must lie in (0, 1)"));
        }
        if !pos(self.actuator_cutoff_hz) {
            return Err(Error::invalid("actuator cut-off must be positive"));
        }
        if !(self.delta_max > 0.0 && self.delta_max < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("delta_max must lie in (0, pi/2)"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: KineticParams = toml::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    /// CG to front axle.
    pub fn l_f(&self) -> f64 {
        self.wheelbase * (1.0 - self.front_weight)
    }

    /// CG to rear axle.
    pub fn l_r(&self) -> f64 {
        self.wheelbase * self.front_weight
    }

    fn fz_front(&self) -> f64 {
        self.mass * GRAVITY * self.front_weight
    }

    fn fz_rear(&self) -> f64 {
        self.mass * GRAVITY * (1.0 - self.front_weight)
    }
}

/// Three identical first-order lags in series; unity DC gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Actuator {
    pub cutoff_hz: f64,
}

impl Actuator {
    pub fn omega(&self) -> f64 {
        TAU * self.cutoff_hz
    }

    pub fn derivative(&self, cmd: f64, x: [f64; 3]) -> [f64; 3] {
        let w = self.omega();
        [w * (cmd - x[0]), w * (x[0] - x[1]), w * (x[1] - x[2])]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KineticState {
    pub kin: KinematicState,
    pub v: f64,
    pub yaw_rate: f64,
    /// Side slip at the centre of gravity.
    pub side_slip: f64,
    pub actuator: [f64; 3],
}

impl KineticState {
    pub fn new(pose: Pose2, v: f64, delta: f64) -> Self {
        KineticState {
            kin: KinematicState::from_pose(pose, delta),
            v,
            yaw_rate: 0.0,
            side_slip: 0.0,
            actuator: [delta; 3],
        }
    }

    pub fn pose(&self) -> Pose2 {
        self.kin.pose()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticModel {
    pub params: KineticParams,
}

impl KineticModel {
    pub fn new(params: KineticParams) -> Result<Self> {
        params.validate()?;
        Ok(KineticModel { params })
    }

    pub fn actuator(&self) -> Actuator {
        Actuator {
            cutoff_hz: self.params.actuator_cutoff_hz,
        }
    }

    /// Kinematic side slip and yaw rate at CG speed `v`.
    fn kinematic_lateral(&self, v: f64, delta: f64) -> (f64, f64) {
        let p = &self.params;
        let beta = (p.l_r() * delta.tan() / p.wheelbase).atan();
        (beta, v * beta.cos() * delta.tan() / p.wheelbase)
    }

    /// State derivative of `[x, y, psi, beta, r, a1, a2, a3]`.
    fn rhs(&self, v: f64, cmd: f64, q: &[f64; 8]) -> [f64; 8] {
        let p = &self.params;
        let (lf, lr) = (p.l_f(), p.l_r());
        let [_, _, psi, beta, r, a1, a2, a3] = *q;
        let delta = a3;
        let act = self.actuator().derivative(cmd, [a1, a2, a3]);

        let (beta, r, dbeta, dr) = if v < V_KINEMATIC {
            let (b, r) = self.kinematic_lateral(v, delta);
            (b, r, 0.0, 0.0)
        } else {
            let (vx, vy) = (v * beta.cos(), v * beta.sin());
            let alpha_f = delta - ((vy + lf * r) / vx).atan();
            let alpha_r = -((vy - lr * r) / vx).atan();
            let fyf = p.tire.force(alpha_f, p.fz_front());
            let fyr = p.tire.force(alpha_r, p.fz_rear());
            let dbeta = (fyf * delta.cos() + fyr) / (p.mass * v) - r;
            let dr = (lf * fyf * delta.cos() - lr * fyr) / p.yaw_inertia;
            (beta, r, dbeta, dr)
        };
        // rear axle velocity: CG velocity plus yaw rate times the CG-to-rear lever
        let (s, c) = psi.sin_cos();
        let dx = v * (psi + beta).cos() + r * lr * s;
        let dy = v * (psi + beta).sin() - r * lr * c;
        [dx, dy, r, dbeta, dr, act[0], act[1], act[2]]
    }

    /// Advances by `dt` seconds starting at time `t` with a constant command.
    pub fn step(
        &self,
        state: &KineticState,
        delta_cmd: f64,
        dt: f64,
        t: f64,
        speed: &SpeedProfile,
    ) -> KineticState {
        self.step_ramp(state, delta_cmd, delta_cmd, dt, t, speed)
    }

    /// Advances by `dt` seconds with the command moving linearly from
    /// `cmd0` to `cmd1`.
    pub fn step_ramp(
        &self,
        state: &KineticState,
        cmd0: f64,
        cmd1: f64,
        dt: f64,
        t: f64,
        speed: &SpeedProfile,
    ) -> KineticState {
        let p = &self.params;
        let cmd = |tt: f64| {
            let u = if dt > 0.0 { (tt - t) / dt } else { 0.0 };
            (cmd0 + (cmd1 - cmd0) * u).clamp(-p.delta_max, p.delta_max)
        };
        // keep each substep well inside the side-slip time constant
        let v_hi = speed.speed(t).max(speed.speed(t + dt)).max(V_KINEMATIC);
        let c_alpha = 2.0 * p.tire.cornering_stiffness(p.fz_front().min(p.fz_rear()));
        let tau = p.mass * v_hi / c_alpha;
        let subs = (dt / (0.5 * tau)).ceil().max(1.0) as usize;
        let h = dt / subs as f64;

        let mut q = [
            state.kin.x,
            state.kin.y,
            state.kin.psi,
            state.side_slip,
            state.yaw_rate,
            state.actuator[0],
            state.actuator[1],
            state.actuator[2],
        ];
        let mut s = state.kin.s;
        for k in 0..subs {
            let t0 = t + k as f64 * h;
            let next = rk4(q, t0, h, |tt, y| self.rhs(speed.speed(tt), cmd(tt), y));
            s += (next[0] - q[0]).hypot(next[1] - q[1]);
            q = next;
            let v = speed.speed(t0 + h);
            if v < V_KINEMATIC {
                let (b, r) = self.kinematic_lateral(v, q[7]);
                q[3] = b;
                q[4] = r;
            }
        }
        KineticState {
            kin: KinematicState {
                x: q[0],
                y: q[1],
                psi: q[2],
                delta_veh: q[7],
                s,
            },
            v: speed.speed(t + dt),
            yaw_rate: q[4],
            side_slip: q[3],
            actuator: [q[5], q[6], q[7]],
        }
    }
}
