//! Batch experiments built on the closed-loop runner and the reaching
//! baselines: distance-to-path benchmark, parameter comparison and
//! one-parameter sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    compute_metrics, radar_compare, ComparisonTable, MetricsOptions, MetricsRecord,
};
use super::run::run_batch;
use super::scenario::{parameter_variations, ParamScale, Scenario};
use crate::baselines::{
    dp_reach_distance, hosm_control, optimal_reach, reach_distance_closed_loop, DpOptions,
    ExtendedState, HosmParams, OptimalReachSpec,
};
use crate::error::{Error, Result};
use crate::plant::SpeedProfile;
use crate::smc::{control_c0, ChainState, ControllerParams, WheelError};

/// Reaching benchmark on a straight path in the arc-length domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReachBenchConfig {
    pub lambda: f64,
    pub delta_bar: f64,
    pub e0: f64,
    /// Box on `|e|`, `|psi|` and `|delta|` that counts as reached.
    pub eps: f64,
    pub psi0: Vec<f64>,
    pub k_rob: f64,
    /// Sample spacing of the feedback laws [m].
    pub ds: f64,
    pub budget: f64,
    /// Candidate heading bounds for tuning the HOSM law at `psi0 = 0`.
    pub hosm_psi_bar: Vec<f64>,
    pub switches: usize,
}

impl Default for ReachBenchConfig {
    fn default() -> Self {
        let q = 0.2 * std::f64::consts::PI;
        ReachBenchConfig {
            lambda: 1.0,
            delta_bar: 0.5,
            e0: -0.5,
            eps: 0.05,
            psi0: vec![0.0, q, -q],
            k_rob: 0.0,
            ds: 1e-3,
            budget: 15.0,
            hosm_psi_bar: (1..150).map(|i| i as f64 * 0.01).collect(),
            switches: 4,
        }
    }
}

impl ReachBenchConfig {
    /// Largest steering rate of the continuous law inside its invariant
    /// set, used as the rate bound of both baselines [rad/m].
    pub fn ddelta_bar(&self) -> f64 {
        2.0 * self.delta_bar.tan() / self.lambda
    }

    fn c0_params(&self) -> ControllerParams {
        ControllerParams::c0(self.delta_bar.sin() / self.lambda, self.lambda, self.k_rob)
    }

    fn start(&self, psi0: f64) -> ExtendedState {
        ExtendedState::new(WheelError::new(self.e0, psi0), 0.0)
    }

    fn proposed(&self, psi0: f64) -> Result<Option<f64>> {
        let p = self.c0_params();
        let law = |x: &ExtendedState| control_c0(&ChainState::new(x.error(), x.delta, vec![]), &p);
        let r = reach_distance_closed_loop(
            self.start(psi0),
            law,
            self.lambda,
            self.delta_bar,
            self.eps,
            self.ds,
            self.budget,
        )?;
        Ok(r.distance)
    }

    fn hosm(&self, psi0: f64, psi_bar: f64) -> Result<Option<f64>> {
        let p = HosmParams::new(psi_bar, self.ddelta_bar(), self.delta_bar, self.lambda)?;
        let r = reach_distance_closed_loop(
            self.start(psi0),
            |x: &ExtendedState| hosm_control(x.error(), x.delta, &p),
            self.lambda,
            self.delta_bar,
            self.eps,
            self.ds,
            self.budget,
        )?;
        Ok(r.distance)
    }

    fn optimal_spec(&self, psi0: f64) -> OptimalReachSpec {
        OptimalReachSpec {
            init: WheelError::new(self.e0, psi0),
            delta0: 0.0,
            delta_max: self.delta_bar,
            ddelta_max: self.ddelta_bar(),
            eps: self.eps,
            switches: self.switches,
        }
    }

    /// Heading bound with the shortest HOSM reaching distance at `psi0 = 0`.
    pub fn tune_hosm(&self) -> Result<(f64, f64)> {
        self.hosm_psi_bar
            .par_iter()
            .filter_map(|&pb| match self.hosm(0.0, pb) {
                Ok(Some(d)) => Some((pb, d)),
                _ => None,
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
            .ok_or_else(|| Error::NoSolution("no HOSM heading bound reaches the path".into()))
    }
}

/// Distances to reach the box from one initial heading; `None` when the
/// law does not reach it within the budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachBenchRow {
    pub psi0: f64,
    pub optimal: f64,
    pub dp: f64,
    pub proposed: Option<f64>,
    pub hosm: Option<f64>,
}

impl ReachBenchRow {
    /// Optimal no longer than proposed, proposed no longer than HOSM.
    pub fn ordered(&self) -> bool {
        match (self.proposed, self.hosm) {
            (Some(p), Some(h)) => self.optimal <= p && p <= h,
            _ => false,
        }
    }

    pub fn dp_gap(&self) -> f64 {
        (self.optimal - self.dp).abs() / self.dp
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachBench {
    pub hosm_psi_bar: f64,
    pub rows: Vec<ReachBenchRow>,
}

impl ReachBench {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["psi0", "optimal", "dp", "proposed", "hosm", "hosm_psi_bar"])?;
        let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), |v| v.to_string());
        for r in &self.rows {
            w.write_record([
                r.psi0.to_string(),
                r.optimal.to_string(),
                r.dp.to_string(),
                opt(r.proposed),
                opt(r.hosm),
                self.hosm_psi_bar.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reaching distance of the optimal profile, its grid cross-check, the
/// continuous proposed law and the HOSM law tuned at `psi0 = 0`.
pub fn benchmark_reach(cfg: &ReachBenchConfig) -> Result<ReachBench> {
    let (psi_bar, _) = cfg.tune_hosm()?;
    let rows = cfg
        .psi0
        .iter()
        .map(|&psi0| {
            let spec = cfg.optimal_spec(psi0);
            Ok(ReachBenchRow {
                psi0,
                optimal: optimal_reach(&spec, cfg.lambda)?.distance,
                dp: dp_reach_distance(&spec, cfg.lambda, &DpOptions::default())?,
                proposed: cfg.proposed(psi0)?,
                hosm: cfg.hosm(psi0, psi_bar)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachBench {
        hosm_psi_bar: psi_bar,
        rows,
    })
}

/// Runs the baseline and the three parameter variations of `base` and
/// compares their indicators to the baseline.
pub fn compare_params(
    base: &Scenario,
    opts: &MetricsOptions,
) -> Result<(Vec<MetricsRecord>, ComparisonTable)> {
    let scenarios: Vec<Scenario> = parameter_variations()
        .into_iter()
        .map(|(name, scale)| Scenario {
            name: name.to_string(),
            controller: base.controller.scaled(&scale),
            ..base.clone()
        })
        .collect();
    let records = run_batch(&scenarios)
        .into_iter()
        .map(|t| t.map(|t| compute_metrics(&t, opts)))
        .collect::<Result<Vec<_>>>()?;
    let table = radar_compare(&records, 0)?;
    Ok((records, table))
}

/// Scenario field varied by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Multiplier on the lead curvature.
    KappaL,
    /// Multiplier on the lead wheelbase.
    LambdaL,
    /// Multiplier on the robustness factor.
    KRob,
    /// Controller rate [Hz].
    Rate,
    /// Standard deviation of the lateral measurement noise [m].
    NoiseE,
    /// Constant speed [m/s].
    Speed,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::KappaL => "kappa-l",
            SweepParam::LambdaL => "lambda-l",
            SweepParam::KRob => "k-rob",
            SweepParam::Rate => "rate",
            SweepParam::NoiseE => "noise-e",
            SweepParam::Speed => "speed",
        }
    }

    /// Copy of `base` with the parameter set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Scenario {
        let mut s = base.clone();
        let one = ParamScale::default();
        match self {
            SweepParam::KappaL => {
                s.controller = base.controller.scaled(&ParamScale {
                    kappa_l: value,
                    ..one
                })
            }
            SweepParam::LambdaL => {
                s.controller = base.controller.scaled(&ParamScale {
                    lambda_l: value,
                    ..one
                })
            }
            SweepParam::KRob => {
                s.controller = base.controller.scaled(&ParamScale {
                    k_rob: value,
                    ..one
                })
            }
            SweepParam::Rate => s.controller_rate_hz = value,
            SweepParam::NoiseE => s.disturbance.noise_e_std = value,
            SweepParam::Speed => s.speed = SpeedProfile::Constant { v: value },
        }
        s.name = format!("{}={}", self.name(), value);
        s
    }
}

/// Metrics of `base` over a grid of one parameter. Failed runs are
/// returned as errors in place.
pub fn sweep(
    base: &Scenario,
    param: SweepParam,
    values: &[f64],
    opts: &MetricsOptions,
) -> Vec<Result<MetricsRecord>> {
    let scenarios: Vec<Scenario> = values.iter().map(|&v| param.apply(base, v)).collect();
    run_batch(&scenarios)
        .into_iter()
        .map(|t| t.map(|t| compute_metrics(&t, opts)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_sweep_renames_and_sets() {
        let base = crate::harness::arc_sequence_scenario();
        let s = SweepParam::Rate.apply(&base, 20.0);
        assert_eq!(s.controller_rate_hz, 20.0);
        assert_eq!(s.name, "rate=20");
        assert_eq!(s.path, base.path);
    }

    #[test]
    fn hosm_tuning_picks_a_candidate() {
        let cfg = ReachBenchConfig {
            hosm_psi_bar: vec![0.3, 0.4, 0.5],
            ds: 1e-2,
            ..ReachBenchConfig::default()
        };
        let (pb, d) = cfg.tune_hosm().unwrap();
        assert!(cfg.hosm_psi_bar.contains(&pb));
        assert!(d > 0.0 && d < cfg.budget);
    }
}
