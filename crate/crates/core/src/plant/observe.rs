use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ref_path::{Pose2, RefPath};
use crate::smc::WheelError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisturbanceSpec {
    /// Curvature added to the outermost wheel's command [1/m].
    pub matched_kappa_d: f64,
    /// Standard deviation of the lateral offset measurement [m].
    pub noise_e_std: f64,
    /// Standard deviation of the heading measurement [rad].
    pub noise_psi_std: f64,
    pub seed: u64,
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_e_std >= 0.0 && self.noise_psi_std >= 0.0) {
            return Err(Error::invalid(
                "noise standard deviations must be nonnegative",
            ));
        }
        if !self.matched_kappa_d.is_finite() {
            return Err(Error::invalid("matched disturbance must be finite"));
        }
        Ok(())
    }
}

/// Measured rear-wheel error together with the perturbed pose it implies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub error: WheelError,
    pub pose: Pose2,
    pub s_star: f64,
}

/// Seeded measurement channel.
#[derive(Clone, Debug)]
pub struct Observer {
    noise_e: Normal<f64>,
    noise_psi: Normal<f64>,
    rng: ChaCha8Rng,
}

impl Observer {
    pub fn new(spec: &DisturbanceSpec) -> Result<Self> {
        spec.validate()?;
        let normal = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::invalid(e.to_string()));
        Ok(Observer {
            noise_e: normal(spec.noise_e_std)?,
            noise_psi: normal(spec.noise_psi_std)?,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
        })
    }

    /// Projects the rear axle onto the path and perturbs offset and heading.
    ///
    /// The offset noise moves the pose along the path normal, so chain wheels
    /// lifted from the returned pose see the same perturbation.
    pub fn observe_pose(&mut self, pose: Pose2, path: &RefPath) -> Result<Observation> {
        let p = path.project(pose.position())?;
        let ne = self.noise_e.sample(&mut self.rng);
        let npsi = self.noise_psi.sample(&mut self.rng);
        let normal = crate::ref_path::Vec2::new(-p.theta.sin(), p.theta.cos());
        let pos = pose.position() + normal * ne;
        let noisy = Pose2::new(pos.x, pos.y, pose.heading + npsi);
        Ok(Observation {
            error: WheelError::new(p.e + ne, pose.heading + npsi - p.theta),
            pose: noisy,
            s_star: p.s_star,
        })
    }

    pub fn observe(&mut self, pose: Pose2, path: &RefPath) -> Result<WheelError> {
        Ok(self.observe_pose(pose, path)?.error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ref_path::build_arc_sequence;
    use approx::assert_abs_diff_eq;

    fn line() -> RefPath {
        build_arc_sequence(&[(0.0, 100.0)]).unwrap()
    }

    #[test]
    fn noiseless_on_path_is_zero() {
        let mut o = Observer::new(&DisturbanceSpec::default()).unwrap();
        let w = o.observe(Pose2::new(10.0, 0.0, 0.0), &line()).unwrap();
        assert_eq!(w, WheelError::default());
    }

    #[test]
    fn seeded_noise_repeats() {
        let spec = DisturbanceSpec {
            noise_e_std: 0.02,
            noise_psi_std: 0.01,
            seed: 7,
            ..Default::default()
        };
        let path = line();
        let run = || {
            let mut o = Observer::new(&spec).unwrap();
            (0..50)
                .map(|i| o.observe(Pose2::new(i as f64, 0.3, 0.1), &path).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn noise_std_matches() {
        let spec = DisturbanceSpec {
            noise_e_std: 0.01,
            noise_psi_std: 0.01,
            seed: 3,
            ..Default::default()
        };
        let mut o = Observer::new(&spec).unwrap();
        let path = line();
        let n = 100_000;
        let (mut se, mut se2, mut sp, mut sp2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let w = o.observe(Pose2::new(50.0, 0.0, 0.0), &path).unwrap();
            se += w.e;
            se2 += w.e * w.e;
            sp += w.psi;
            sp2 += w.psi * w.psi;
        }
        let nf = n as f64;
        let sd_e = (se2 / nf - (se / nf).powi(2)).sqrt();
        let sd_p = (sp2 / nf - (sp / nf).powi(2)).sqrt();
        assert!((sd_e / 0.01 - 1.0).abs() < 0.03, "{sd_e}");
        assert!((sd_p / 0.01 - 1.0).abs() < 0.03, "{sd_p}");
    }

    #[test]
    fn noisy_pose_matches_reported_error() {
        let spec = DisturbanceSpec {
            noise_e_std: 0.05,
            noise_psi_std: 0.02,
            seed: 1,
            ..Default::default()
        };
        let mut o = Observer::new(&spec).unwrap();
        let path = line();
        let obs = o.observe_pose(Pose2::new(20.0, 0.4, 0.05), &path).unwrap();
        let p = path.project(obs.pose.position()).unwrap();
        assert_abs_diff_eq!(p.e, obs.error.e, epsilon = 1e-12);
    }
}
