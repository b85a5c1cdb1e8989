use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smooth_track::smc::C1Terms;
use smooth_track::tuner::*;

const LIMITS: ActuatorLimits = ActuatorLimits {
    delta_max: 0.5,
    ddelta_dt_max: 1.0,
    dddelta_dt_max: 4.0,
};

/// Direct evaluation on a random admissible state: front angle in its
/// invariant set, lead angle in its invariant set, lead curvature +-kappa_l.
fn sampled_max(kl: f64, ll: f64, lam: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bl = (kl * ll).asin();
    let b = (lam * bl.tan() / ll).asin();
    let (mut r, mut a) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let d = rng.random_range(-b..=b);
        let dl = rng.random_range(-bl..=bl);
        let k = if rng.random_bool(0.5) { kl } else { -kl };
        let rate = (dl.tan() / ll - d.sin() / lam) / d.cos();
        let acc = C1Terms::evaluate(d, rate, k, lam, ll).unwrap().dddelta;
        r = r.max(rate.abs());
        a = a.max(acc.abs());
    }
    (r, a)
}

#[test]
fn map_dominates_random_samples() {
    for (i, &(kl, ll, lam)) in [(0.15, 1.2, 2.4), (0.05, 0.3, 2.7), (0.3, 2.0, 1.0)]
        .iter()
        .enumerate()
    {
        let m = rate_accel_map(kl, ll, lam, 25).unwrap();
        let (r, a) = sampled_max(kl, ll, lam, 10_000, i as u64);
        assert!(m.max_rate >= r * (1.0 - 1e-12), "{} < {r}", m.max_rate);
        assert!(m.max_accel >= a * (1.0 - 1e-12), "{} < {a}", m.max_accel);
    }
}

#[test]
fn map_is_resolution_stable() {
    for &(kl, ll, lam) in &[(0.15, 1.2, 2.4), (0.05, 0.3, 2.7)] {
        let a = rate_accel_map_vehicle(kl, ll, lam, 2.7, 21).unwrap();
        let b = rate_accel_map_vehicle(kl, ll, lam, 2.7, 42).unwrap();
        assert!((a.max_rate - b.max_rate).abs() < 0.01 * b.max_rate);
        assert!((a.max_accel - b.max_accel).abs() < 0.01 * b.max_accel);
    }
}

#[test]
fn static_map_rate_monotone_in_curvature() {
    let ks: Vec<f64> = (1..=8).map(|i| 0.02 * i as f64).collect();
    let map = StaticMap::build(2.7, &[0.3, 1.0, 1.8], &ks, 21).unwrap();
    for row in &map.cells {
        let rates: Vec<f64> = row.iter().flatten().map(|c| c.max_rate).collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{rates:?}");
    }
}

#[test]
fn rate_shrinks_with_lead_wheelbase() {
    // toward the single-wheel value 2 tan(asin(kappa lambda)) / lambda
    let (kl, lam): (f64, f64) = (0.2, 2.7);
    let limit = 2.0 * (kl * lam).asin().tan() / lam;
    let mut prev = f64::INFINITY;
    for &ll in &[1.0, 0.5, 0.2, 0.05, 0.01] {
        let r = rate_accel_map(kl, ll, lam, 21).unwrap().max_rate;
        assert!(r <= prev);
        prev = r;
    }
    assert!((prev - limit).abs() < 1e-3 * limit);
}

#[test]
fn low_speed_is_region_one() {
    let s = schedule(0.05, &LIMITS, 2.7, &ScheduleOptions::default()).unwrap();
    assert_eq!(s.region, Region::Free);
    assert_eq!(s.lambda_l, 0.05 * 2.7);
    let cap = kappa_l_max(
        ((s.lambda / 2.7) * LIMITS.delta_max.tan()).atan(),
        s.lambda,
        s.lambda_l,
        FormulaVariant::Derived,
    );
    assert!(s.kappa_l < cap && s.kappa_l > cap * (1.0 - 1e-6));
}

#[test]
fn schedule_respects_limits_across_velocities() {
    let vs: Vec<f64> = (1..=20).map(f64::from).collect();
    let rows = schedule_table(&vs, &LIMITS, 2.7, &ScheduleOptions::default()).unwrap();
    let mut last_lead = 0.0;
    let mut regions = Vec::new();
    for r in &rows {
        assert!(r.max_rate <= LIMITS.ddelta_dt_max * (1.0 + 1e-9), "{r:?}");
        assert!(r.max_accel <= LIMITS.dddelta_dt_max * (1.0 + 1e-9), "{r:?}");
        assert!(r.kappa_l * r.lambda_l <= 1.0 && r.lambda_l < 2.7);
        if matches!(r.region, Region::AccelLimited | Region::BothLimited) {
            assert!(r.lambda_l >= last_lead, "lead wheelbase shrank: {r:?}");
            last_lead = r.lambda_l;
        }
        regions.push(r.region.number());
    }
    assert!(regions.windows(2).all(|w| w[0] <= w[1]), "{regions:?}");
    for n in 1..=4 {
        assert!(regions.contains(&n), "region {n} missing from {regions:?}");
    }
}
