//! Parameter constraints, rate/acceleration maps and velocity scheduling for
//! the two-wheel (C1) chain.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smc::{C1Terms, ControllerParams, SteeringMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActuatorLimits {
    /// Largest steering angle [rad].
    pub delta_max: f64,
    /// Largest steering rate [rad/s].
    pub ddelta_dt_max: f64,
    /// Largest steering acceleration [rad/s^2].
    pub dddelta_dt_max: f64,
}

impl ActuatorLimits {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !(ok(self.delta_max) && ok(self.ddelta_dt_max) && ok(self.dddelta_dt_max)) {
            return Err(Error::invalid(
                "actuator limits must be positive and finite",
            ));
        }
        if self.delta_max >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("delta_max must be below pi/2"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let limits: ActuatorLimits = toml::from_str(&std::fs::read_to_string(path)?)?;
        limits.validate()?;
        Ok(limits)
    }
}

/// Which closed form of the lead-curvature bound to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaVariant {
    /// `sin d / (l^2 + l_l^2 sin^2 d)`, kept for comparison; not unit consistent.
    AsPrinted,
    /// `sin d / sqrt(l^2 + l_l^2 sin^2 d)`, from chaining the invariant sets.
    #[default]
    Derived,
}

/// Exclusive upper bound on the lead curvature so that the front invariant
/// set stays inside `[-delta_max, delta_max]`.
pub fn kappa_l_max(delta_max: f64, lambda: f64, lambda_l: f64, variant: FormulaVariant) -> f64 {
    let s = delta_max.sin();
    let d = lambda * lambda + lambda_l * lambda_l * s * s;
    match variant {
        FormulaVariant::AsPrinted => s / d,
        FormulaVariant::Derived => s / d.sqrt(),
    }
}

/// Smallest `k_rob` rejecting a matched curvature disturbance `kappa_d`.
pub fn k_rob_min(kappa_d: f64, kappa_l_bar: f64) -> Result<f64> {
    if !(kappa_l_bar > 0.0) {
        return Err(Error::invalid("kappa_l_bar must be positive"));
    }
    let k = kappa_d.abs() / kappa_l_bar;
    if k >= 1.0 {
        return Err(Error::invalid(format!(
            "required k_rob = {k} is not below 1; raise kappa_l_bar"
        )));
    }
    Ok(k)
}

/// Fictive front wheelbase that puts the lead wheel on the real front
/// wheel's track in stationary cornering.
pub fn lambda_from_cornering(lambda_veh: f64, lambda_l: f64) -> Result<f64> {
    if !(lambda_l >= 0.0) || lambda_l >= lambda_veh {
        return Err(Error::invalid(format!(
            "lead wheelbase {lambda_l} must lie in [0, {lambda_veh})"
        )));
    }
    Ok((lambda_veh * lambda_veh - lambda_l * lambda_l).sqrt())
}

/// Worst-case steering rate and acceleration per unit path length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateAccel {
    /// max |delta'| [rad/m]
    pub max_rate: f64,
    /// max |delta''| [rad/m^2]
    pub max_accel: f64,
}

/// Front-wheel invariant half-width and the front curvature bound implied by
/// a lead wheel with curvature bound `kappa_l_bar`.
fn front_bounds(kappa_l_bar: f64, lambda_l: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(kappa_l_bar >= 0.0) || !(lambda > 0.0) || !(lambda_l >= 0.0) {
        return Err(Error::invalid(
            "map needs kappa_l >= 0, lambda > 0, lambda_l >= 0",
        ));
    }
    let x = kappa_l_bar * lambda_l;
    if x > 1.0 {
        return Err(Error::invalid("kappa_l * lambda_l exceeds 1"));
    }
    let kappa_f = if lambda_l == 0.0 {
        kappa_l_bar
    } else {
        x.asin().tan() / lambda_l
    };
    let y = kappa_f * lambda;
    if y > 1.0 {
        return Err(Error::invalid(
            "front invariant set is empty for these parameters",
        ));
    }
    Ok((y.asin(), kappa_f))
}

/// Grid search over a box followed by a few zoom rounds around the best cell.
fn maximize_box(f: &impl Fn(f64, f64) -> f64, a: (f64, f64), b: (f64, f64), n: usize) -> f64 {
    let n = n.max(3);
    let mut best = (f64::NEG_INFINITY, a.0, b.0);
    let lin = |lo: f64, hi: f64, k: usize, m: usize| lo + (hi - lo) * k as f64 / (m - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (lin(a.0, a.1, i, n), lin(b.0, b.1, j, n));
            let v = f(x, y);
            if v > best.0 {
                best = (v, x, y);
            }
        }
    }
    let mut hx = (a.1 - a.0) / (n - 1) as f64;
    let mut hy = (b.1 - b.0) / (n - 1) as f64;
    for _ in 0..8 {
        let (cx, cy) = (best.1, best.2);
        let m = 9;
        for i in 0..m {
            for j in 0..m {
                let x = (cx - hx + 2.0 * hx * i as f64 / (m - 1) as f64).clamp(a.0, a.1);
                let y = (cy - hy + 2.0 * hy * j as f64 / (m - 1) as f64).clamp(b.0, b.1);
                let v = f(x, y);
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        hx *= 0.35;
        hy *= 0.35;
    }
    best.0.max(0.0)
}

/// Steering derivatives on the chain state `(delta, q)` where
/// `q = tan(delta_l) / lambda_l` is the front-wheel curvature.
fn chain_derivs(delta: f64, q: f64, kappa_l: f64, lambda: f64, lambda_l: f64) -> (f64, f64) {
    let rate = (q - delta.sin() / lambda) / delta.cos();
    if lambda_l == 0.0 {
        return (rate, f64::INFINITY);
    }
    match C1Terms::evaluate(delta, rate, kappa_l, lambda, lambda_l) {
        Ok(t) => (rate, t.dddelta),
        Err(_) => (rate, f64::INFINITY),
    }
}

fn map_impl(
    kappa_l_bar: f64,
    lambda_l: f64,
    lambda: f64,
    grid: usize,
    steer: Option<SteeringMap>,
) -> Result<RateAccel> {
    let (b, kappa_f) = front_bounds(kappa_l_bar, lambda_l, lambda)?;
    if kappa_l_bar == 0.0 {
        return Ok(RateAccel::default());
    }
    // real angle atan(rho tan delta): first two derivatives by the chain rule
    let rho = steer.map(|m| m.ratio()).unwrap_or(1.0);
    let eval = |delta: f64, q: f64, kl: f64| -> (f64, f64) {
        let (r, a) = chain_derivs(delta, q, kl, lambda, lambda_l);
        if rho == 1.0 {
            return (r, a);
        }
        let (s, c) = delta.sin_cos();
        let den = c * c + rho * rho * s * s;
        let g = rho / den;
        let g1 = -rho * (2.0 * s * c) * (rho * rho - 1.0) / (den * den);
        (g * r, g * a + g1 * r * r)
    };
    let rate = |d: f64, q: f64| eval(d, q, kappa_l_bar).0.abs();
    let accel = |d: f64, q: f64| {
        eval(d, q, kappa_l_bar)
            .1
            .abs()
            .max(eval(d, q, -kappa_l_bar).1.abs())
    };
    let bx = (-b, b);
    let by = (-kappa_f, kappa_f);
    Ok(RateAccel {
        max_rate: maximize_box(&rate, bx, by, grid),
        max_accel: maximize_box(&accel, bx, by, grid),
    })
}

/// Largest `|delta'|` and `|delta''|` of the fictive front angle over the
/// invariant sets of both chain wheels.
pub fn rate_accel_map(
    kappa_l_bar: f64,
    lambda_l: f64,
    lambda: f64,
    grid: usize,
) -> Result<RateAccel> {
    map_impl(kappa_l_bar, lambda_l, lambda, grid, None)
}

/// Same maxima for the real steering angle of a vehicle with wheelbase
/// `lambda_veh` driven by a chain whose first wheelbase is `lambda`.
pub fn rate_accel_map_vehicle(
    kappa_l_bar: f64,
    lambda_l: f64,
    lambda: f64,
    lambda_veh: f64,
    grid: usize,
) -> Result<RateAccel> {
    map_impl(
        kappa_l_bar,
        lambda_l,
        lambda,
        grid,
        Some(SteeringMap::new(lambda, lambda_veh)),
    )
}

/// Tabulated maxima over a `(lambda_l, kappa_l)` grid, with
/// `lambda = sqrt(lambda_veh^2 - lambda_l^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticMap {
    pub lambda_veh: f64,
    pub lambda_l: Vec<f64>,
    pub kappa_l: Vec<f64>,
    /// Indexed `[lambda_l][kappa_l]`; `None` where the sets are empty.
    pub cells: Vec<Vec<Option<RateAccel>>>,
}

impl StaticMap {
    pub fn build(lambda_veh: f64, lambda_l: &[f64], kappa_l: &[f64], grid: usize) -> Result<Self> {
        let cells = lambda_l
            .par_iter()
            .map(|&ll| {
                let lam = lambda_from_cornering(lambda_veh, ll)?;
                Ok(kappa_l
                    .iter()
                    .map(|&k| rate_accel_map_vehicle(k, ll, lam, lambda_veh, grid).ok())
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StaticMap {
            lambda_veh,
            lambda_l: lambda_l.to_vec(),
            kappa_l: kappa_l.to_vec(),
            cells,
        })
    }
}

/// Velocity region of a scheduled parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Neither limit active: largest curvature, shortest lead wheelbase.
    Free,
    /// Acceleration limit active: lead wheelbase grows.
    AccelLimited,
    /// Both limits active: curvature shrinks, lead wheelbase grows.
    BothLimited,
    /// Lead wheelbase at the acceleration minimum.
    AccelMinimum,
}

impl Region {
    pub fn number(self) -> u8 {
        match self {
            Region::Free => 1,
            Region::AccelLimited => 2,
            Region::BothLimited => 3,
            Region::AccelMinimum => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Lower bound on the lead wheelbase as a fraction of `lambda_veh`.
    pub lambda_l_min_frac: f64,
    pub grid: usize,
    pub variant: FormulaVariant,
    pub k_rob: f64,
    pub rel_tol: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            lambda_l_min_frac: 0.05,
            grid: 25,
            variant: FormulaVariant::Derived,
            k_rob: 0.0,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub velocity: f64,
    pub region: Region,
    pub kappa_l: f64,
    pub lambda_l: f64,
    pub lambda: f64,
    /// Predicted max |d delta / dt| [rad/s].
    pub max_rate: f64,
    /// Predicted max |d^2 delta / dt^2| [rad/s^2].
    pub max_accel: f64,
    /// Set when the lead wheelbase hit the upper clamp below `lambda_veh`.
    pub clamped: bool,
    pub params: ControllerParams,
}

/// Lead curvature bound for a given lead wheelbase, in controller angles,
/// such that the real steering angle stays inside `delta_max`.
fn kappa_cap(
    limits: &ActuatorLimits,
    lambda_veh: f64,
    lambda_l: f64,
    variant: FormulaVariant,
) -> f64 {
    let lam = (lambda_veh * lambda_veh - lambda_l * lambda_l).sqrt();
    let d_eff = ((lam / lambda_veh) * limits.delta_max.tan()).atan();
    kappa_l_max(d_eff, lam, lambda_l, variant) * (1.0 - 1e-9)
}

struct Problem<'a> {
    limits: &'a ActuatorLimits,
    lambda_veh: f64,
    opts: &'a ScheduleOptions,
    rate_cap: f64,
    accel_cap: f64,
    ll_min: f64,
    ll_max: f64,
}

impl Problem<'_> {
    fn cap(&self, ll: f64) -> f64 {
        kappa_cap(self.limits, self.lambda_veh, ll, self.opts.variant)
    }

    fn map(&self, kappa: f64, ll: f64) -> RateAccel {
        let lam = (self.lambda_veh * self.lambda_veh - ll * ll).sqrt();
        rate_accel_map_vehicle(kappa, ll, lam, self.lambda_veh, self.opts.grid).unwrap_or(
            RateAccel {
                max_rate: f64::INFINITY,
                max_accel: f64::INFINITY,
            },
        )
    }

    fn fits(&self, m: RateAccel) -> bool {
        m.max_rate <= self.rate_cap && m.max_accel <= self.accel_cap
    }

    /// Lead wheelbase minimizing the acceleration bound at curvature `kappa(ll)`.
    fn accel_argmin(&self, kappa: impl Fn(f64) -> f64) -> f64 {
        let f = |ll: f64| {
            let k = kappa(ll);
            if k > self.cap(ll) {
                f64::INFINITY
            } else {
                self.map(k, ll).max_accel
            }
        };
        // coarse scan, then golden section around the best sample
        let n = 24;
        let xs: Vec<f64> = (0..=n)
            .map(|i| self.ll_min + (self.ll_max - self.ll_min) * i as f64 / n as f64)
            .collect();
        let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let k = (0..=n)
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .unwrap();
        let (mut lo, mut hi) = (xs[k.saturating_sub(1)], xs[(k + 1).min(n)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > self.opts.rel_tol * self.lambda_veh {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            }
        }
        let best = [(xs[k], vals[k]), (x1, f1), (x2, f2)]
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        best.0
    }

    /// Smallest `ll` in `[lo, hi]` with `pred(ll)`, assuming the predicate
    /// switches from false to true at most once after a coarse scan.
    fn first_true(&self, lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
        if pred(lo) {
            return Some(lo);
        }
        let n = 16;
        let mut prev = lo;
        for i in 1..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            if pred(x) {
                let (mut a, mut b) = (prev, x);
                while b - a > self.opts.rel_tol * b.abs().max(1e-9) {
                    let m = 0.5 * (a + b);
                    if pred(m) {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                return Some(b);
            }
            prev = x;
        }
        None
    }
}

/// Velocity-dependent choice of `(kappa_l, lambda_l, lambda)` for the C1 chain.
///
/// Priorities: rate limit, acceleration limit, largest lead curvature,
/// shortest lead wheelbase. The fictive front wheelbase always follows the
/// stationary cornering rule.
pub fn schedule(
    v: f64,
    limits: &ActuatorLimits,
    lambda_veh: f64,
    opts: &ScheduleOptions,
) -> Result<Schedule> {
    limits.validate()?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid("velocity must be positive"));
    }
    if !(lambda_veh > 0.0) {
        return Err(Error::invalid("vehicle wheelbase must be positive"));
    }
    let pb = Problem {
        limits,
        lambda_veh,
        opts,
        rate_cap: limits.ddelta_dt_max / v,
        accel_cap: limits.dddelta_dt_max / (v * v),
        ll_min: opts.lambda_l_min_frac * lambda_veh,
        ll_max: lambda_veh * (1.0 - 1e-3),
    };

    let finish = |region: Region, kappa: f64, ll: f64| -> Result<Schedule> {
        let lam = lambda_from_cornering(lambda_veh, ll)?;
        let m = pb.map(kappa, ll);
        let params = ControllerParams::c1(kappa, lam, ll, opts.k_rob);
        params.validate()?;
        Ok(Schedule {
            velocity: v,
            region,
            kappa_l: kappa,
            lambda_l: ll,
            lambda: lam,
            max_rate: m.max_rate * v,
            max_accel: m.max_accel * v * v,
            clamped: ll >= pb.ll_max,
            params,
        })
    };

    // region 1
    let k1 = pb.cap(pb.ll_min);
    if pb.fits(pb.map(k1, pb.ll_min)) {
        return finish(Region::Free, k1, pb.ll_min);
    }

    // region 2: stay on the curvature cap, lengthen the lead wheel
    let on_cap = |ll: f64| pb.cap(ll);
    let star_cap = pb.accel_argmin(on_cap);
    let accel_ok = |ll: f64| pb.map(pb.cap(ll), ll).max_accel <= pb.accel_cap;
    if let Some(ll) = pb.first_true(pb.ll_min, star_cap, accel_ok) {
        let k = pb.cap(ll);
        if pb.fits(pb.map(k, ll)) {
            return finish(Region::AccelLimited, k, ll);
        }
    }

    // regions 3 and 4: shrink the curvature
    let lead_for = |kappa: f64| -> Option<(f64, f64)> {
        let star = pb.accel_argmin(|_| kappa);
        let ok = |ll: f64| kappa <= pb.cap(ll) && pb.map(kappa, ll).max_accel <= pb.accel_cap;
        let ll = pb.first_true(pb.ll_min, star, ok)?;
        pb.fits(pb.map(kappa, ll)).then_some((ll, star))
    };
    let mut hi = pb.cap(star_cap);
    let mut lo = 0.0;
    let mut found = None;
    let mut probe = hi;
    for _ in 0..60 {
        if let Some(r) = lead_for(probe) {
            found = Some((probe, r));
            lo = probe;
            break;
        }
        hi = probe;
        probe *= 0.5;
    }
    let Some(mut found) = found else {
        return Err(Error::Infeasible(format!(
            "no lead curvature satisfies the limits at v = {v} m/s"
        )));
    };
    while hi - lo > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        match lead_for(mid) {
            Some(r) => {
                found = (mid, r);
                lo = mid;
            }
            None => hi = mid,
        }
    }
    let (kappa, (ll, star)) = found;
    // the rate limit binds in region 3; in region 4 only the acceleration
    // minimum over the lead wheelbase limits the curvature
    let rate = pb.map(kappa, ll).max_rate;
    let region = if rate >= pb.rate_cap * (1.0 - 1e-2) || ll < star - 1e-2 * lambda_veh {
        Region::BothLimited
    } else {
        Region::AccelMinimum
    };
    finish(region, kappa, ll)
}

/// Schedules a list of velocities in parallel.
pub fn schedule_table(
    velocities: &[f64],
    limits: &ActuatorLimits,
    lambda_veh: f64,
    opts: &ScheduleOptions,
) -> Result<Vec<Schedule>> {
    velocities
        .par_iter()
        .map(|&v| schedule(v, limits, lambda_veh, opts))
        .collect()
}

/// Writes `velocity, region, kappa_l, lambda_l, lambda, max_rate, max_accel, clamped` rows.
pub fn write_schedule_csv(rows: &[Schedule], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "velocity",
        "region",
        "kappa_l",
        "lambda_l",
        "lambda",
        "max_rate",
        "max_accel",
        "clamped",
    ])?;
    for r in rows {
        w.write_record([
            r.velocity.to_string(),
            r.region.number().to_string(),
            r.kappa_l.to_string(),
            r.lambda_l.to_string(),
            r.lambda.to_string(),
            r.max_rate.to_string(),
            r.max_accel.to_string(),
            r.clamped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn kappa_l_max_examples() {
        for v in [FormulaVariant::AsPrinted, FormulaVariant::Derived] {
            assert_abs_diff_eq!(kappa_l_max(PI / 2.0, 1.0, 0.0, v), 1.0);
            assert!(kappa_l_max(1e-12, 1.0, 0.5, v) < 1e-11);
        }
        assert_abs_diff_eq!(
            kappa_l_max(PI / 2.0, 2.0, 0.0, FormulaVariant::AsPrinted),
            0.25
        );
        assert_abs_diff_eq!(
            kappa_l_max(PI / 2.0, 2.0, 0.0, FormulaVariant::Derived),
            0.5
        );
    }

    #[test]
    fn derived_bound_keeps_front_set_inside_delta_max() {
        let (dm, lam, ll) = (0.5, 2.2, 1.1);
        let k = kappa_l_max(dm, lam, ll, FormulaVariant::Derived);
        let (b, _) = front_bounds(k, ll, lam).unwrap();
        assert_abs_diff_eq!(b, dm, epsilon = 1e-12);
    }

    #[test]
    fn k_rob_examples() {
        assert_eq!(k_rob_min(0.0, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(k_rob_min(0.05, 0.25).unwrap(), 0.2, epsilon = 1e-15);
        assert!(matches!(k_rob_min(0.25, 0.25), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn cornering_examples() {
        assert_abs_diff_eq!(lambda_from_cornering(2.5, 1.5).unwrap(), 2.0);
        assert_eq!(lambda_from_cornering(2.7, 0.0).unwrap(), 2.7);
        assert!(lambda_from_cornering(2.5, 2.5).is_err());
    }

    #[test]
    fn zero_curvature_map_is_zero() {
        assert_eq!(
            rate_accel_map(0.0, 1.0, 2.0, 11).unwrap(),
            RateAccel::default()
        );
    }

    #[test]
    fn rate_bound_is_analytic() {
        let (kl, ll, lam) = (0.15, 1.2, 2.4);
        let (b, _) = front_bounds(kl, ll, lam).unwrap();
        let m = rate_accel_map(kl, ll, lam, 21).unwrap();
        assert_abs_diff_eq!(m.max_rate, 2.0 * b.tan() / lam, epsilon = 1e-12);
    }
}
