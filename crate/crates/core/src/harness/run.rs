//! Closed-loop simulation: sampled controller, continuous plant.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{hosm_control, optimal_reach, HosmParams, OptimalReachSpec};
use crate::error::{Error, Result};
use crate::plant::{
    KinematicModel, KinematicState, KineticModel, KineticState, Observer, SpeedProfile,
};
use crate::ref_path::{Pose2, RefPath};
use crate::smc::{lift_angles, SteeringMap, TrackingController, WheelError};
use crate::tuner::{schedule_table, Schedule};

use super::scenario::{ControllerSpec, PlantSpec, Scenario};

/// One plant-rate sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    /// Travelled arc length of the rear axle.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub delta_cmd: f64,
    pub delta: f64,
    /// Steering rate and acceleration in time [rad/s, rad/s^2].
    pub ddelta_dt: f64,
    pub dddelta_dt: f64,
    /// True rear-axle, front-axle and lead-wheel offsets.
    pub e: f64,
    pub e_f: f64,
    pub e_l: f64,
    /// Sliding variable at the last controller update, NaN when the law has none.
    pub sigma: f64,
    pub side_slip: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunOutcome {
    Completed,
    /// The lead wheel ran off the end of the reference path.
    PathEnd,
    Diverged {
        t: f64,
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub name: String,
    pub rows: Vec<TraceRow>,
    pub outcome: RunOutcome,
    pub controller_rate_hz: f64,
}

impl Trace {
    pub fn diverged(&self) -> bool {
        matches!(self.outcome, RunOutcome::Diverged { .. })
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Wheel whose offset is reported as `e_l`: a chain of angles behind the
/// steering angle in controller coordinates.
#[derive(Clone, Debug)]
struct Lead {
    angles: Vec<f64>,
    lambdas: Vec<f64>,
    map: SteeringMap,
}

impl Lead {
    fn front(lambda_veh: f64) -> Self {
        Lead {
            angles: vec![0.0],
            lambdas: vec![lambda_veh],
            map: SteeringMap::new(lambda_veh, lambda_veh),
        }
    }

    fn offset(&mut self, pose: Pose2, delta: f64, path: &RefPath) -> Result<f64> {
        self.angles[0] = self.map.to_ctrl(delta);
        Ok(lift_angles(pose, &self.angles, &self.lambdas, path)?
            .last()
            .unwrap()
            .e)
    }

    fn reach(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// Command held over one controller period.
struct Command {
    /// Steering angle at the end of the period.
    target: f64,
    /// Path derivatives of the steering angle.
    d1: f64,
    d2: Option<f64>,
    sigma: f64,
}

enum Law {
    Chain {
        ctrl: TrackingController,
        table: Option<(f64, Vec<Schedule>)>,
        row: usize,
    },
    Hosm(HosmParams),
    Optimal {
        /// `(end arc length, delta')` per arc, relative to the start.
        arcs: Vec<(f64, f64)>,
        ddelta_max: f64,
    },
}

impl Law {
    fn build(sc: &Scenario, path: &RefPath, pose: Pose2) -> Result<(Law, Lead)> {
        let lambda_veh = sc.plant.wheelbase();
        let delta_max = sc.plant.delta_max();
        Ok(match &sc.controller {
            ControllerSpec::Proposed(p) => {
                let mut ctrl = TrackingController::new(p.clone(), lambda_veh)?;
                ctrl.reset(sc.initial.delta);
                ctrl.kappa_disturbance = sc.disturbance.matched_kappa_d;
                let lead = Lead {
                    angles: ctrl.fictive().to_vec(),
                    lambdas: p.lambdas.clone(),
                    map: ctrl.steering_map(),
                };
                (
                    Law::Chain {
                        ctrl,
                        table: None,
                        row: 0,
                    },
                    lead,
                )
            }
            ControllerSpec::Scheduled {
                limits,
                step,
                scale,
                ..
            } => {
                let n = (sc.speed.max_speed() / step).ceil().max(1.0) as usize;
                let velocities: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
                let mut table = schedule_table(
                    &velocities,
                    limits,
                    lambda_veh,
                    &sc.controller.schedule_options(),
                )?;
                for row in &mut table {
                    row.params = scale.apply(&row.params);
                }
                let row = schedule_row(&table, *step, sc.speed.speed(0.0));
                let p = table[row].params.clone();
                let mut ctrl = TrackingController::new(p.clone(), lambda_veh)?;
                ctrl.reset(sc.initial.delta);
                ctrl.kappa_disturbance = sc.disturbance.matched_kappa_d;
                let lead = Lead {
                    angles: ctrl.fictive().to_vec(),
                    lambdas: p.lambdas.clone(),
                    map: ctrl.steering_map(),
                };
                (
                    Law::Chain {
                        ctrl,
                        table: Some((*step, table)),
                        row,
                    },
                    lead,
                )
            }
            ControllerSpec::Hosm(h) => (Law::Hosm(*h), Lead::front(lambda_veh)),
            ControllerSpec::Optimal {
                ddelta_max,
                eps,
                switches,
            } => {
                if !path.is_straight() {
                    return Err(Error::invalid("optimal replay needs a straight path"));
                }
                let proj = path.project(pose.position())?;
                let spec = OptimalReachSpec {
                    init: WheelError::new(proj.e, pose.heading - proj.theta),
                    delta0: sc.initial.delta,
                    delta_max,
                    ddelta_max: *ddelta_max,
                    eps: *eps,
                    switches: *switches,
                };
                let sol = optimal_reach(&spec, lambda_veh)?;
                let mut end = 0.0;
                let arcs = sol
                    .controls
                    .iter()
                    .zip(&sol.lengths)
                    .map(|(&u, &l)| {
                        end += l;
                        (end, u * ddelta_max)
                    })
                    .collect();
                (
                    Law::Optimal {
                        arcs,
                        ddelta_max: *ddelta_max,
                    },
                    Lead::front(lambda_veh),
                )
            }
        })
    }

    /// Evaluates the law on the measured pose. `ds` is the arc length
    /// expected over the coming period, `s` the distance travelled so far.
    fn update(
        &mut self,
        pose: Pose2,
        delta: f64,
        path: &RefPath,
        v: f64,
        s: f64,
        ds: f64,
        lead: &mut Lead,
        delta_max: f64,
    ) -> Result<Command> {
        match self {
            Law::Chain { ctrl, table, row } => {
                if let Some((step, table)) = table {
                    let r = schedule_row(table, *step, v);
                    if r != *row {
                        ctrl.set_params(table[r].params.clone())?;
                        *row = r;
                        lead.lambdas = table[r].params.lambdas.clone();
                        lead.map = ctrl.steering_map();
                    }
                }
                let out = ctrl.step(pose, delta, path, ds)?;
                lead.angles.copy_from_slice(ctrl.fictive());
                Ok(Command {
                    target: out.delta_cmd,
                    d1: out.delta_derivs[0],
                    d2: out.delta_derivs.get(1).copied(),
                    sigma: out.sigma,
                })
            }
            Law::Hosm(h) => {
                let proj = path.project(pose.position())?;
                let err = WheelError::new(proj.e, pose.heading - proj.theta);
                let d = delta.clamp(-h.delta_bar, h.delta_bar);
                let u = hosm_control(err, d, h)?;
                Ok(Command {
                    target: (d + u * ds).clamp(-h.delta_bar, h.delta_bar),
                    d1: u,
                    d2: None,
                    sigma: f64::NAN,
                })
            }
            Law::Optimal { arcs, ddelta_max } => {
                let u = match arcs.iter().find(|a| s < a.0) {
                    Some(a) => a.1,
                    // profile finished: return the wheel to centre
                    None => -(delta / (*ddelta_max * ds.max(1e-12))).clamp(-1.0, 1.0) * *ddelta_max,
                };
                Ok(Command {
                    target: (delta + u * ds).clamp(-delta_max, delta_max),
                    d1: u,
                    d2: None,
                    sigma: f64::NAN,
                })
            }
        }
    }
}

fn schedule_row(table: &[Schedule], step: f64, v: f64) -> usize {
    ((v / step).round() as usize).clamp(1, table.len()) - 1
}

enum PlantState {
    Kinematic(KinematicModel, KinematicState),
    Kinetic(KineticModel, KineticState),
}

impl PlantState {
    fn pose(&self) -> Pose2 {
        match self {
            PlantState::Kinematic(_, s) => s.pose(),
            PlantState::Kinetic(_, s) => s.pose(),
        }
    }

    fn delta(&self) -> f64 {
        match self {
            PlantState::Kinematic(_, s) => s.delta_veh,
            PlantState::Kinetic(_, s) => s.kin.delta_veh,
        }
    }

    fn s(&self) -> f64 {
        match self {
            PlantState::Kinematic(_, s) => s.s,
            PlantState::Kinetic(_, s) => s.kin.s,
        }
    }

    fn side_slip(&self) -> f64 {
        match self {
            PlantState::Kinematic(..) => 0.0,
            PlantState::Kinetic(_, s) => s.side_slip,
        }
    }

    /// Actuator rate and acceleration when the plant has steering dynamics.
    fn steering_rates(&self, cmd: f64) -> Option<(f64, f64)> {
        match self {
            PlantState::Kinematic(..) => None,
            PlantState::Kinetic(m, s) => {
                let a = m.actuator();
                let x = s.actuator;
                let dx = a.derivative(cmd.clamp(-m.params.delta_max, m.params.delta_max), x);
                let w = a.omega();
                Some((dx[2], w * (dx[1] - dx[2])))
            }
        }
    }

    /// Advances by `dt` with the command ramping from `cmd0` to `cmd1`.
    fn step(&mut self, cmd0: f64, cmd1: f64, dt: f64, t: f64, speed: &SpeedProfile) -> Result<()> {
        match self {
            PlantState::Kinematic(m, s) => {
                let ds = distance(speed, t, dt);
                let lim = m.delta_max;
                *s = m.step_ramp(s, cmd0.clamp(-lim, lim), cmd1.clamp(-lim, lim), ds)?;
            }
            PlantState::Kinetic(m, s) => *s = m.step_ramp(s, cmd0, cmd1, dt, t, speed),
        }
        Ok(())
    }
}

/// Distance covered over `[t, t + dt]` by the speed profile.
fn distance(speed: &SpeedProfile, t: f64, dt: f64) -> f64 {
    0.5 * (speed.speed(t) + speed.speed(t + dt)) * dt
}

/// Runs a scenario. The controller is sampled at its own rate and its
/// steering command ramps linearly to the end-of-period target, i.e. the
/// steering rate is held constant between samples. The plant advances at
/// `plant_dt`. Deterministic for a fixed scenario.
pub fn run_closed_loop(sc: &Scenario) -> Result<Trace> {
    sc.validate()?;
    let path = sc.path.build()?;
    let start = sc.initial_pose(&path);
    let lambda_veh = sc.plant.wheelbase();
    let delta_max = sc.plant.delta_max();
    let mut plant = match &sc.plant {
        PlantSpec::Kinematic {
            wheelbase,
            delta_max,
        } => {
            let m = KinematicModel::new(*wheelbase, *delta_max)?;
            PlantState::Kinematic(m, KinematicState::from_pose(start, sc.initial.delta))
        }
        PlantSpec::Kinetic(p) => {
            let m = KineticModel::new(*p)?;
            PlantState::Kinetic(
                m,
                KineticState::new(start, sc.speed.speed(0.0), sc.initial.delta),
            )
        }
    };
    let (mut law, mut lead) = Law::build(sc, &path, start)?;
    let mut front = Lead::front(lambda_veh);
    let mut observer = Observer::new(&sc.disturbance)?;

    let period = 1.0 / sc.controller_rate_hz;
    let sub = (period / sc.plant_dt).round().max(1.0) as usize;
    let dt = period / sub as f64;
    let n_periods = (sc.duration / period).ceil() as usize;
    let mut rows = Vec::with_capacity(n_periods * sub + 1);
    let mut outcome = RunOutcome::Completed;
    let mut last_rate: Option<f64> = None;
    let end_margin = lead.reach().max(lambda_veh) + 1.0;
    // the law integrates its own steering output; actuator lag only shows
    // up in the plant
    let mut delta_ctrl = sc.initial.delta;

    'outer: for k in 0..n_periods {
        let t0 = k as f64 * period;
        let v = sc.speed.speed(t0);
        let ds = distance(&sc.speed, t0, period);
        let delta0 = delta_ctrl;
        let pose = plant.pose();

        let cmd = observer.observe_pose(pose, &path).and_then(|obs| {
            law.update(
                obs.pose,
                delta0,
                &path,
                v,
                plant.s(),
                ds,
                &mut lead,
                delta_max,
            )
        });
        let cmd = match cmd {
            Ok(c) => c,
            Err(e) => {
                outcome = RunOutcome::Diverged {
                    t: t0,
                    reason: e.to_string(),
                };
                break;
            }
        };
        let rate = cmd.d1 * v;
        let accel = match cmd.d2 {
            Some(d2) => d2 * v * v + cmd.d1 * sc.speed.accel(t0),
            None => last_rate.map_or(0.0, |r| (rate - r) / period),
        };
        last_rate = Some(rate);
        delta_ctrl = cmd.target;

        for j in 0..sub {
            let t = t0 + j as f64 * dt;
            let frac = j as f64 / sub as f64;
            let delta_cmd = delta0 + (cmd.target - delta0) * frac;
            let pose = plant.pose();
            let delta = plant.delta();
            let sample = (|| -> Result<TraceRow> {
                let p = path.project(pose.position())?;
                let (rd, ra) = plant.steering_rates(delta_cmd).unwrap_or((rate, accel));
                Ok(TraceRow {
                    t,
                    s: plant.s(),
                    x: pose.x,
                    y: pose.y,
                    psi: pose.heading,
                    v: sc.speed.speed(t),
                    delta_cmd,
                    delta,
                    ddelta_dt: rd,
                    dddelta_dt: ra,
                    e: p.e,
                    e_f: front.offset(pose, delta, &path)?,
                    e_l: lead.offset(pose, delta_cmd, &path)?,
                    sigma: cmd.sigma,
                    side_slip: plant.side_slip(),
                })
            })();
            let row = match sample {
                Ok(r) => r,
                Err(e) => {
                    outcome = RunOutcome::Diverged {
                        t,
                        reason: e.to_string(),
                    };
                    break 'outer;
                }
            };
            let s_star = path
                .project(pose.position())
                .map(|p| p.s_star)
                .unwrap_or(0.0);
            rows.push(row);
            if row.e.abs() > sc.abort_bound || !row.e.is_finite() {
                outcome = RunOutcome::Diverged {
                    t,
                    reason: format!("offset {:.3} m beyond abort bound", row.e),
                };
                break 'outer;
            }
            if s_star + end_margin >= path.total_length() {
                outcome = RunOutcome::PathEnd;
                break 'outer;
            }
            let step_cmd = delta0 + (cmd.target - delta0) * (j + 1) as f64 / sub as f64;
            if let Err(e) = plant.step(delta_cmd, step_cmd, dt, t, &sc.speed) {
                outcome = RunOutcome::Diverged {
                    t,
                    reason: e.to_string(),
                };
                break 'outer;
            }
        }
    }
    Ok(Trace {
        name: sc.name.clone(),
        rows,
        outcome,
        controller_rate_hz: sc.controller_rate_hz,
    })
}

/// Runs independent scenarios in parallel, preserving order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<Trace>> {
    scenarios.par_iter().map(run_closed_loop).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::InitialState;
    use crate::plant::DisturbanceSpec;
    use crate::ref_path::PathSpec;
    use crate::smc::ControllerParams;

    fn straight(controller: ControllerSpec) -> Scenario {
        Scenario {
            name: "straight".into(),
            path: PathSpec::from_rows(&[(0.0, 300.0)]),
            plant: PlantSpec::Kinematic {
                wheelbase: 2.7,
                delta_max: 0.5,
            },
            speed: SpeedProfile::Constant { v: 5.0 },
            initial: InitialState {
                e: 2.0,
                ..InitialState::default()
            },
            controller,
            controller_rate_hz: 50.0,
            plant_dt: 1e-3,
            disturbance: DisturbanceSpec::default(),
            duration: 30.0,
            abort_bound: 20.0,
        }
    }

    #[test]
    fn c1_converges_on_straight() {
        let sc = straight(ControllerSpec::Proposed(ControllerParams::c1(
            0.1, 2.5, 1.0, 0.3,
        )));
        let tr = run_closed_loop(&sc).unwrap();
        assert_eq!(tr.outcome, RunOutcome::Completed);
        // sampling leaves a millimetre-scale chatter on the lead wheel
        let last = tr.rows.last().unwrap();
        assert!(last.e.abs() < 1e-3 && last.e_l.abs() < 1e-2);
    }

    #[test]
    fn hosm_converges_on_straight() {
        let h = HosmParams::new(0.6, 0.4, 0.5, 2.7).unwrap();
        let tr = run_closed_loop(&straight(ControllerSpec::Hosm(h))).unwrap();
        assert!(!tr.diverged(), "{:?}", tr.outcome);
        assert!(tr.rows.last().unwrap().e.abs() < 0.02);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let mut sc = straight(ControllerSpec::Proposed(ControllerParams::c0(
            0.1, 2.7, 0.3,
        )));
        sc.disturbance = DisturbanceSpec {
            noise_e_std: 0.02,
            noise_psi_std: 0.01,
            seed: 3,
            ..DisturbanceSpec::default()
        };
        sc.duration = 5.0;
        let a = run_closed_loop(&sc).unwrap();
        let b = run_closed_loop(&sc).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.e.to_bits(), y.e.to_bits());
            assert_eq!(x.delta_cmd.to_bits(), y.delta_cmd.to_bits());
        }
    }

    #[test]
    fn runaway_is_flagged() {
        // pushes away from the path at full curvature
        let mut sc = straight(ControllerSpec::Proposed(ControllerParams::c0(
            0.1, 2.7, 0.3,
        )));
        sc.disturbance.matched_kappa_d = 0.3;
        sc.abort_bound = 5.0;
        let tr = run_closed_loop(&sc).unwrap();
        assert!(tr.diverged());
    }
}
