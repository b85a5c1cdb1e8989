//! Scenario files: path, plant, speed, initial state, controller and
//! disturbances in one TOML document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::HosmParams;
use crate::error::{Error, Result};
use crate::plant::{DisturbanceSpec, KineticParams, SpeedProfile};
use crate::ref_path::{
    build_lane_change, PathSpec, Pose2, ISO_LANE_CHANGE_SECTIONS, ISO_LANE_OFFSET,
};
use crate::smc::ControllerParams;
use crate::tuner::{lambda_from_cornering, ActuatorLimits, ScheduleOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlantSpec {
    Kinematic { wheelbase: f64, delta_max: f64 },
    Kinetic(KineticParams),
}

impl PlantSpec {
    pub fn wheelbase(&self) -> f64 {
        match self {
            PlantSpec::Kinematic { wheelbase, .. } => *wheelbase,
            PlantSpec::Kinetic(p) => p.wheelbase,
        }
    }

    pub fn delta_max(&self) -> f64 {
        match self {
            PlantSpec::Kinematic { delta_max, .. } => *delta_max,
            PlantSpec::Kinetic(p) => p.delta_max,
        }
    }
}

/// Start pose relative to the path: arc length, lateral offset, heading
/// error and steering angle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialState {
    pub s: f64,
    pub e: f64,
    pub psi: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ControllerSpec {
    /// Trailer-chain law with explicit parameters; one wheelbase gives the
    /// continuous law, two the once-differentiable one.
    Proposed(ControllerParams),
    /// Two-wheel chain with parameters taken from the velocity schedule.
    Scheduled {
        limits: ActuatorLimits,
        #[serde(default)]
        k_rob: f64,
        /// Velocity resolution of the precomputed table [m/s].
        #[serde(default = "default_schedule_step")]
        step: f64,
        /// Multipliers applied on top of every scheduled row.
        #[serde(default)]
        scale: ParamScale,
    },
    Hosm(HosmParams),
    /// Open-loop replay of the length-optimal reaching profile; straight
    /// paths only.
    Optimal {
        ddelta_max: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_switches")]
        switches: usize,
    },
}

/// Relative change of the lead curvature, lead wheelbase and robustness
/// factor. The first wheelbase is left alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamScale {
    pub kappa_l: f64,
    pub lambda_l: f64,
    pub k_rob: f64,
}

impl Default for ParamScale {
    fn default() -> Self {
        ParamScale {
            kappa_l: 1.0,
            lambda_l: 1.0,
            k_rob: 1.0,
        }
    }
}

impl ParamScale {
    pub fn apply(&self, p: &ControllerParams) -> ControllerParams {
        let mut out = p.clone();
        out.kappa_bar *= self.kappa_l;
        out.k_rob *= self.k_rob;
        if out.lambdas.len() > 1 {
            *out.lambdas.last_mut().unwrap() *= self.lambda_l;
        }
        out
    }

    fn compose(&self, other: &ParamScale) -> ParamScale {
        ParamScale {
            kappa_l: self.kappa_l * other.kappa_l,
            lambda_l: self.lambda_l * other.lambda_l,
            k_rob: self.k_rob * other.k_rob,
        }
    }
}

/// Baseline and the three one-at-a-time variations: lead curvature halved,
/// lead wheelbase quadrupled, robustness factor cut by a third.
pub fn parameter_variations() -> Vec<(&'static str, ParamScale)> {
    let one = ParamScale::default();
    vec![
        ("baseline", one),
        (
            "kappa_l-50%",
            ParamScale {
                kappa_l: 0.5,
                ..one
            },
        ),
        (
            "lambda_l+300%",
            ParamScale {
                lambda_l: 4.0,
                ..one
            },
        ),
        (
            "k_rob-33%",
            ParamScale {
                k_rob: 2.0 / 3.0,
                ..one
            },
        ),
    ]
}

fn default_schedule_step() -> f64 {
    0.5
}

fn default_eps() -> f64 {
    0.01
}

fn default_switches() -> usize {
    4
}

impl ControllerSpec {
    /// Same law with scaled chain parameters. Baselines are returned as is.
    pub fn scaled(&self, by: &ParamScale) -> ControllerSpec {
        match self {
            ControllerSpec::Proposed(p) => ControllerSpec::Proposed(by.apply(p)),
            ControllerSpec::Scheduled {
                limits,
                k_rob,
                step,
                scale,
            } => ControllerSpec::Scheduled {
                limits: *limits,
                k_rob: *k_rob,
                step: *step,
                scale: scale.compose(by),
            },
            other => other.clone(),
        }
    }

    pub fn schedule_options(&self) -> ScheduleOptions {
        match self {
            ControllerSpec::Scheduled { k_rob, .. } => ScheduleOptions {
                k_rob: *k_rob,
                ..ScheduleOptions::default()
            },
            _ => ScheduleOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub path: PathSpec,
    pub plant: PlantSpec,
    pub speed: SpeedProfile,
    #[serde(default)]
    pub initial: InitialState,
    pub controller: ControllerSpec,
    #[serde(default = "default_rate")]
    pub controller_rate_hz: f64,
    #[serde(default = "default_plant_dt")]
    pub plant_dt: f64,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    /// Simulated time [s].
    pub duration: f64,
    /// Run is aborted and marked diverged beyond this offset [m].
    #[serde(default = "default_abort")]
    pub abort_bound: f64,
}

fn default_rate() -> f64 {
    50.0
}

fn default_plant_dt() -> f64 {
    1e-3
}

fn default_abort() -> f64 {
    20.0
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.controller_rate_hz > 0.0 && self.controller_rate_hz.is_finite()) {
            return Err(Error::invalid("controller rate must be positive"));
        }
        if !(self.plant_dt > 0.0) || self.plant_dt > 1.0 / self.controller_rate_hz {
            return Err(Error::invalid(
                "plant step must be positive and below the control period",
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be positive"));
        }
        if !(self.abort_bound > 0.0) {
            return Err(Error::invalid("abort bound must be positive"));
        }
        if !(self.plant.wheelbase() > 0.0 && self.plant.delta_max() > 0.0) {
            return Err(Error::invalid(
                "plant wheelbase and steering bound must be positive",
            ));
        }
        if let PlantSpec::Kinetic(p) = &self.plant {
            p.validate()?;
        }
        self.disturbance.validate()?;
        match &self.controller {
            ControllerSpec::Proposed(p) => p.validate()?,
            ControllerSpec::Scheduled {
                limits,
                step,
                scale,
                ..
            } => {
                limits.validate()?;
                if !(*step > 0.0) {
                    return Err(Error::invalid("schedule step must be positive"));
                }
                if !(scale.kappa_l > 0.0 && scale.lambda_l > 0.0 && scale.k_rob >= 0.0) {
                    return Err(Error::invalid("parameter scale factors must be positive"));
                }
            }
            ControllerSpec::Hosm(h) => h.validate()?,
            ControllerSpec::Optimal {
                ddelta_max, eps, ..
            } => {
                if !(*ddelta_max > 0.0 && *eps > 0.0) {
                    return Err(Error::invalid(
                        "optimal replay needs positive rate bound and tolerance",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))
    }

    /// Rear-axle pose at the initial state.
    pub fn initial_pose(&self, path: &crate::ref_path::RefPath) -> Pose2 {
        let base = path.pose_at(self.initial.s);
        let p = path.point_from_frenet(self.initial.s, self.initial.e);
        Pose2::new(p.x, p.y, base.heading + self.initial.psi)
    }
}

/// Circular sections joined by straights. The first arc is tight enough
/// that a robustness factor below 0.47 leaves part of its curvature
/// uncompensated during reaching; the later arcs are gentle because the
/// scheduled lead curvature shrinks with speed.
pub fn arc_sequence_rows() -> Vec<(f64, f64)> {
    vec![
        (0.065, 20.0),
        (0.0, 10.0),
        (-0.006, 30.0),
        (0.0, 15.0),
        (0.0036, 50.0),
        (0.0, 20.0),
        (-0.0024, 60.0),
        (0.0, 60.0),
    ]
}

/// Steering limits for the arc-sequence experiment.
pub fn arc_sequence_limits() -> ActuatorLimits {
    ActuatorLimits {
        delta_max: 0.5,
        ddelta_dt_max: 1.0,
        dddelta_dt_max: 8.0,
    }
}

/// Kinetic single-track vehicle accelerating from 2.8 to 12.5 m/s along
/// [`arc_sequence_rows`], starting 1 m off the path, with measurement noise
/// and velocity-scheduled chain parameters.
pub fn arc_sequence_scenario() -> Scenario {
    Scenario {
        name: "arc-sequence".into(),
        path: PathSpec::from_rows(&arc_sequence_rows()),
        plant: PlantSpec::Kinetic(KineticParams {
            actuator_cutoff_hz: 10.0,
            ..KineticParams::default()
        }),
        speed: SpeedProfile::Ramp {
            v0: 2.8,
            v1: 12.5,
            duration: 26.0,
        },
        initial: InitialState {
            e: 1.0,
            ..InitialState::default()
        },
        controller: ControllerSpec::Scheduled {
            limits: arc_sequence_limits(),
            k_rob: 0.6,
            step: 1.0,
            scale: ParamScale::default(),
        },
        controller_rate_hz: 50.0,
        plant_dt: 1e-3,
        disturbance: DisturbanceSpec {
            matched_kappa_d: 0.0,
            noise_e_std: 0.005,
            noise_psi_std: 0.001,
            seed: 7,
        },
        duration: 26.0,
        abort_bound: 20.0,
    }
}

/// Fixed C1 parameters with enough curvature margin for the lane change.
pub fn lane_change_params(lambda_veh: f64) -> ControllerParams {
    let lambda_l = 1.5;
    let lambda = lambda_from_cornering(lambda_veh, lambda_l)
        .expect("lead wheelbase below vehicle wheelbase");
    ControllerParams::c1(0.05, lambda, lambda_l, 0.6)
}

/// Double lane change at constant speed on the kinetic vehicle.
pub fn lane_change_scenario(speed: f64) -> Scenario {
    let path = build_lane_change(ISO_LANE_OFFSET, &ISO_LANE_CHANGE_SECTIONS)
        .expect("lane change constants are valid");
    let rows: Vec<(f64, f64)> = path
        .segments()
        .iter()
        .map(|s| (s.curvature(), s.length()))
        .collect();
    let length = path.total_length();
    Scenario {
        name: format!("lane-change-{speed}"),
        path: PathSpec::from_rows(&rows),
        plant: PlantSpec::Kinetic(KineticParams {
            actuator_cutoff_hz: 10.0,
            ..KineticParams::default()
        }),
        speed: SpeedProfile::Constant { v: speed },
        initial: InitialState::default(),
        controller: ControllerSpec::Proposed(lane_change_params(
            KineticParams::default().wheelbase,
        )),
        controller_rate_hz: 50.0,
        plant_dt: 1e-3,
        disturbance: DisturbanceSpec::default(),
        duration: length / speed,
        abort_bound: 20.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let s = arc_sequence_scenario();
        let text = s.to_toml().unwrap();
        let back = Scenario::from_toml(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let text = r#"
duration = 10.0
speed = { kind = "constant", v = 5.0 }
plant = { kind = "kinematic", wheelbase = 2.7, delta_max = 0.5 }
controller = { kind = "proposed", kappa_bar = 0.1, k_rob = 0.2, lambdas = [2.7] }

[[path.segment]]
kappa = 0.0
length = 100.0
"#;
        let s = Scenario::from_toml(text).unwrap();
        assert_eq!(s.controller_rate_hz, 50.0);
        assert_eq!(s.plant_dt, 1e-3);
        assert_eq!(s.abort_bound, 20.0);
        assert_eq!(s.initial, InitialState::default());
    }

    #[test]
    fn rejects_zero_rate() {
        let mut s = arc_sequence_scenario();
        s.controller_rate_hz = 0.0;
        assert!(s.validate().is_err());
    }
}
