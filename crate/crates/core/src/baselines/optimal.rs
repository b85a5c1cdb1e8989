//! Length-optimal reaching of the reference path under steering angle and
//! steering rate bounds, plus a coarse dynamic-programming cross-check.

use rayon::prelude::*;

use super::extended::{advance, ExtendedState, ReachSample};
use crate::error::{Error, Result};
use crate::smc::WheelError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalReachSpec {
    pub init: WheelError,
    pub delta0: f64,
    pub delta_max: f64,
    /// Steering rate bound per unit arc length [rad/m].
    pub ddelta_max: f64,
    /// Terminal tolerance on `|e|`, `|psi|` and `|delta|`.
    pub eps: f64,
    /// Maximum number of switches of the rate profile.
    pub switches: usize,
}

impl OptimalReachSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_max > 0.0 && self.delta_max < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("delta_max must lie in (0, pi/2)"));
        }
        if !(self.ddelta_max > 0.0 && self.eps > 0.0) {
            return Err(Error::invalid("ddelta_max and eps must be positive"));
        }
        if self.delta0.abs() > self.delta_max {
            return Err(Error::invalid("initial steering angle outside its bound"));
        }
        if self.switches < 2 {
            return Err(Error::invalid("at least two switches are required"));
        }
        if !(self.init.e.is_finite() && self.init.psi.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(
                "initial heading error must satisfy |psi| < pi/2",
            ));
        }
        Ok(())
    }

    fn start(&self) -> ExtendedState {
        ExtendedState::new(self.init, self.delta0)
    }
}

/// Resolution of the initial search over arc lengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Grid levels per arc, at least 2.
    pub grid: usize,
    /// Number of best grid points polished.
    pub starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { grid: 5, starts: 2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalReach {
    pub distance: f64,
    /// Rate of each arc as a multiple of `ddelta_max`.
    pub controls: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Arc lengths at which the rate switches.
    pub switch_points: Vec<f64>,
    pub trajectory: Vec<ReachSample>,
    pub terminal: ExtendedState,
}

/// Rate sign sequences with `k + 1` arcs: alternating bang arcs, optionally
/// with one idle arc.
fn patterns(k: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for first in [1.0, -1.0] {
        out.push(
            (0..=k)
                .map(|i| if i % 2 == 0 { first } else { -first })
                .collect(),
        );
        for zero in 0..=k {
            for flip in [false, true] {
                let mut seq = Vec::with_capacity(k + 1);
                let mut sign = first;
                for i in 0..=k {
                    if i == zero {
                        seq.push(0.0);
                        if flip {
                            sign = -sign;
                        }
                    } else {
                        seq.push(sign);
                        sign = -sign;
                    }
                }
                out.push(seq);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

struct Problem<'a> {
    spec: &'a OptimalReachSpec,
    lambda: f64,
    controls: &'a [f64],
}

impl Problem<'_> {
    fn terminal(&self, lengths: &[f64]) -> ExtendedState {
        let mut x = self.spec.start();
        for (&u, &l) in self.controls.iter().zip(lengths) {
            x = advance(
                x,
                u * self.spec.ddelta_max,
                l,
                self.lambda,
                self.spec.delta_max,
            );
        }
        x
    }

    fn violation(&self, x: &ExtendedState) -> f64 {
        let tol = 0.995 * self.spec.eps;
        [x.e, x.psi, x.delta]
            .iter()
            .map(|v| (v.abs() - tol).max(0.0).powi(2))
            .sum()
    }

    fn cost(&self, z: &[f64], mu: f64) -> f64 {
        let lengths: Vec<f64> = z.iter().map(|v| v.abs()).collect();
        let x = self.terminal(&lengths);
        lengths.iter().sum::<f64>() + mu * self.violation(&x)
    }
}

fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, iters: usize) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i].abs() > step { 0.1 * x[i] } else { step };
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-11 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = lerp(&centroid, &worst.0, -0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = lerp(&centroid, &worst.0, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &item.0, 0.5);
                    let fx = f(&x);
                    *item = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0).0
}

/// Scale of a single arc for the initial grid.
fn arc_scale(spec: &OptimalReachSpec, lambda: f64) -> f64 {
    let turn = lambda / spec.delta_max.tan();
    2.0 * spec.delta_max / spec.ddelta_max
        + turn * (std::f64::consts::FRAC_PI_2 + spec.init.psi.abs())
        + spec.init.e.abs()
}

fn solve_pattern(
    spec: &OptimalReachSpec,
    lambda: f64,
    controls: &[f64],
    opts: &SolverOptions,
) -> Option<(f64, Vec<f64>)> {
    let prob = Problem {
        spec,
        lambda,
        controls,
    };
    let n = controls.len();
    let scale = arc_scale(spec, lambda);
    // denser near zero, where short arcs matter
    let levels: Vec<f64> = (0..opts.grid)
        .map(|i| (i as f64 / (opts.grid - 1) as f64).powf(1.5) * scale)
        .collect();
    let mu0 = 1e3;
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = levels.len().pow(n as u32);
    let mut z = vec![0.0; n];
    for idx in 0..total {
        let mut r = idx;
        for v in z.iter_mut() {
            *v = levels[r % levels.len()];
            r /= levels.len();
        }
        let c = prob.cost(&z, mu0);
        starts.push((c, z.clone()));
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.truncate(opts.starts.max(1));

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, z0) in starts {
        let mut z = z0;
        for mu in [1e3, 1e5, 1e7] {
            for _ in 0..2 {
                z = nelder_mead(|x| prob.cost(x, mu), &z, 0.05 * scale, 150 * n);
            }
        }
        // restart until the final stage stalls
        let last = |x: &[f64]| prob.cost(x, 1e9);
        let mut step = 0.05 * scale;
        let mut prev = last(&z);
        for _ in 0..12 {
            z = nelder_mead(last, &z, step, 150 * n);
            let now = last(&z);
            if prev - now < 1e-12 * prev {
                break;
            }
            prev = now;
            step *= 0.3;
        }
        let lengths: Vec<f64> = z.iter().map(|v| v.abs()).collect();
        let total: f64 = lengths.iter().sum();
        let x = prob.terminal(&lengths);
        if prob.violation(&x) > (1e-3 * spec.eps).powi(2) {
            continue;
        }
        if best.as_ref().is_none_or(|b| total < b.0) {
            best = Some((total, lengths));
        }
    }
    best
}

/// Fine re-simulation of a candidate, returning the first entry into the box.
fn certify(
    spec: &OptimalReachSpec,
    lambda: f64,
    controls: &[f64],
    lengths: &[f64],
) -> Option<OptimalReach> {
    const PIECES: usize = 64;
    let mut x = spec.start();
    let mut s = 0.0;
    let mut trajectory = Vec::new();
    let mut switch_points = Vec::new();
    let sample = |s: f64, x: ExtendedState, u: f64| ReachSample {
        s,
        state: x,
        ddelta: if x.delta.abs() >= spec.delta_max && u * x.delta > 0.0 {
            0.0
        } else {
            u
        },
    };
    if x.in_box(spec.eps) {
        trajectory.push(sample(0.0, x, 0.0));
        return Some(OptimalReach {
            distance: 0.0,
            controls: Vec::new(),
            lengths: Vec::new(),
            switch_points,
            trajectory,
            terminal: x,
        });
    }
    for (arc, (&c, &l)) in controls.iter().zip(lengths).enumerate() {
        if arc > 0 {
            switch_points.push(s);
        }
        let u = c * spec.ddelta_max;
        let h = l / PIECES as f64;
        for _ in 0..PIECES {
            trajectory.push(sample(s, x, u));
            let y = advance(x, u, h, lambda, spec.delta_max);
            if y.in_box(spec.eps) {
                // bisect for the entry point; the upper end stays inside
                let (mut lo, mut hi, mut inside) = (0.0, h, y);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    let z = advance(x, u, mid, lambda, spec.delta_max);
                    if z.in_box(spec.eps) {
                        hi = mid;
                        inside = z;
                    } else {
                        lo = mid;
                    }
                }
                let distance = s + hi;
                trajectory.push(sample(distance, inside, u));
                let mut used: Vec<f64> = lengths[..arc].to_vec();
                used.push(distance - switch_points.last().copied().unwrap_or(0.0));
                return Some(OptimalReach {
                    distance,
                    controls: controls[..=arc].to_vec(),
                    lengths: used,
                    switch_points,
                    trajectory,
                    terminal: inside,
                });
            }
            x = y;
            s += h;
        }
    }
    None
}

/// Shortest arc length over bang-off-bang steering-rate profiles with at
/// most `spec.switches` switches that brings `(e, psi, delta)` into the
/// terminal box. The result is a feasible trajectory, hence an upper bound.
pub fn optimal_reach(spec: &OptimalReachSpec, lambda_veh: f64) -> Result<OptimalReach> {
    optimal_reach_with(spec, lambda_veh, &SolverOptions::default())
}

pub fn optimal_reach_with(
    spec: &OptimalReachSpec,
    lambda_veh: f64,
    opts: &SolverOptions,
) -> Result<OptimalReach> {
    spec.validate()?;
    if opts.grid < 2 {
        return Err(Error::invalid("solver grid needs at least two levels"));
    }
    if !(lambda_veh > 0.0) {
        return Err(Error::invalid("wheelbase must be positive"));
    }
    if let Some(r) = certify(spec, lambda_veh, &[], &[]) {
        return Ok(r);
    }
    let candidates: Vec<OptimalReach> = patterns(spec.switches)
        .par_iter()
        .filter_map(|controls| {
            let (_, lengths) = solve_pattern(spec, lambda_veh, controls, opts)?;
            certify(spec, lambda_veh, controls, &lengths)
        })
        .collect();
    candidates
        .into_iter()
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
        .ok_or_else(|| Error::NoSolution("no rate profile reaches the terminal box".into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpOptions {
    /// Target arc-length step [m]; shrunk so that `delta_max` is a lattice
    /// point of the steering angle.
    pub step: f64,
    pub bin_psi: f64,
    pub budget: f64,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            step: 0.02,
            bin_psi: 5e-4,
            budget: 20.0,
        }
    }
}

#[derive(Clone, Copy)]
struct Cell {
    psi: f64,
    e_lo: f64,
    e_hi: f64,
}

/// Motion over a lattice move: the heading gain is independent of the
/// heading and the offset gain is `a sin(psi) + b cos(psi)`.
#[derive(Clone, Copy, Default)]
struct Move {
    len: f64,
    dpsi: f64,
    a: f64,
    b: f64,
}

impl Move {
    fn new(delta: f64, u: f64, len: f64, lambda: f64) -> Self {
        let at = |psi: f64| {
            let x = ExtendedState { e: 0.0, psi, delta };
            advance(x, u, len, lambda, f64::INFINITY)
        };
        let base = at(0.0);
        Move {
            len,
            dpsi: base.psi,
            a: at(std::f64::consts::FRAC_PI_2).e,
            b: base.e,
        }
    }

    fn offset(&self, sin: f64, cos: f64) -> f64 {
        self.a * sin + self.b * cos
    }
}

/// Grid dynamic programming over piecewise-constant rates in
/// `{-ddelta_max, 0, ddelta_max}` with a fixed step.
///
/// The steering angle lives on a lattice and the heading is binned. The
/// lateral offset does not feed back into the other states, so each cell
/// carries the hull of offsets reaching it; the box counts as reached once
/// a cell with `|delta|, |psi| <= eps` has a hull meeting `[-eps, eps]`,
/// also part-way through a step where the angle enters its tolerance.
pub fn dp_reach_distance(
    spec: &OptimalReachSpec,
    lambda_veh: f64,
    opts: &DpOptions,
) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    spec.validate()?;
    if !(opts.step > 0.0 && opts.bin_psi > 0.0 && opts.budget > 0.0) {
        return Err(Error::invalid("DP options must be positive"));
    }
    if spec.start().in_box(spec.eps) {
        return Ok(0.0);
    }
    let half = (spec.delta_max / (opts.step * spec.ddelta_max))
        .ceil()
        .max(1.0) as i64;
    let dd = spec.delta_max / half as f64;
    let h = dd / spec.ddelta_max;
    let n_delta = (2 * half + 1) as usize;
    let psi_half = (FRAC_PI_2 / opts.bin_psi).floor() as i64;
    let n_psi = (2 * psi_half + 1) as usize;
    let angle = |k: usize| (k as i64 - half) as f64 * dd;
    let slot = |k: usize, psi: f64| -> Option<usize> {
        let j = (psi / opts.bin_psi).round() as i64 + psi_half;
        (psi.abs() < FRAC_PI_2 && (0..n_psi as i64).contains(&j)).then(|| k * n_psi + j as usize)
    };

    // moves[k][du + 1] and the partial move entering the angle tolerance
    let mut moves = vec![[None::<(usize, Move, Option<Move>)>; 3]; n_delta];
    for (k, row) in moves.iter_mut().enumerate() {
        for du in [-1i64, 0, 1] {
            let kn = k as i64 + du;
            if kn < 0 || kn >= n_delta as i64 {
                continue;
            }
            let u = du as f64 * spec.ddelta_max;
            let full = Move::new(angle(k), u, h, lambda_veh);
            let enters =
                du != 0 && angle(k).abs() > spec.eps && angle(kn as usize).abs() <= spec.eps;
            let part = enters.then(|| {
                let t = (angle(k).abs() - spec.eps) / spec.ddelta_max;
                Move::new(angle(k), u, t, lambda_veh)
            });
            row[(du + 1) as usize] = Some((kn as usize, full, part));
        }
    }

    // ramp onto the lattice first
    let k0 = ((spec.delta0 / dd).round() as i64 + half) as usize;
    let lead = (angle(k0) - spec.delta0).abs() / spec.ddelta_max;
    let x0 = advance(
        spec.start(),
        (angle(k0) - spec.delta0).signum() * spec.ddelta_max,
        lead,
        lambda_veh,
        spec.delta_max,
    );
    let reached = |k: usize, c: &Cell| {
        angle(k).abs() <= spec.eps
            && c.psi.abs() <= spec.eps
            && c.e_lo <= spec.eps
            && c.e_hi >= -spec.eps
    };
    let mut front: Vec<Option<Cell>> = vec![None; n_delta * n_psi];
    let mut active: Vec<usize> = Vec::new();
    let Some(i0) = slot(k0, x0.psi) else {
        return Err(Error::NoSolution(
            "initial heading leaves the DP grid".into(),
        ));
    };
    let c0 = Cell {
        psi: x0.psi,
        e_lo: x0.e,
        e_hi: x0.e,
    };
    if reached(k0, &c0) {
        return Ok(lead);
    }
    front[i0] = Some(c0);
    active.push(i0);

    let steps = (opts.budget / h).ceil() as usize;
    let mut next: Vec<Option<Cell>> = vec![None; n_delta * n_psi];
    let mut next_active: Vec<usize> = Vec::new();
    for step in 1..=steps {
        let mut partial = f64::INFINITY;
        for &idx in &active {
            let c = front[idx].take().expect("active cell");
            let k = idx / n_psi;
            let (sin, cos) = c.psi.sin_cos();
            for (kn, mv, part) in moves[k].iter().flatten() {
                if let Some(p) = part {
                    let de = p.offset(sin, cos);
                    if (c.psi + p.dpsi).abs() <= spec.eps
                        && c.e_lo + de <= spec.eps
                        && c.e_hi + de >= -spec.eps
                    {
                        partial = partial.min(p.len);
                    }
                }
                let psi = c.psi + mv.dpsi;
                let Some(j) = slot(*kn, psi) else { continue };
                let de = mv.offset(sin, cos);
                match &mut next[j] {
                    Some(t) => {
                        t.e_lo = t.e_lo.min(c.e_lo + de);
                        t.e_hi = t.e_hi.max(c.e_hi + de);
                    }
                    empty @ None => {
                        *empty = Some(Cell {
                            psi,
                            e_lo: c.e_lo + de,
                            e_hi: c.e_hi + de,
                        });
                        next_active.push(j);
                    }
                }
            }
        }
        if partial.is_finite() {
            return Ok(lead + (step - 1) as f64 * h + partial);
        }
        std::mem::swap(&mut front, &mut next);
        std::mem::swap(&mut active, &mut next_active);
        next_active.clear();
        if active
            .iter()
            .any(|&idx| reached(idx / n_psi, front[idx].as_ref().expect("active cell")))
        {
            return Ok(lead + step as f64 * h);
        }
    }
    Err(Error::NoSolution(
        "DP grid found no reaching trajectory within the budget".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(e: f64, psi: f64, switches: usize) -> OptimalReachSpec {
        OptimalReachSpec {
            init: WheelError { e, psi },
            delta0: 0.0,
            delta_max: 0.5,
            ddelta_max: 1.0,
            eps: 0.02,
            switches,
        }
    }

    #[test]
    fn patterns_cover_alternation_and_idle() {
        let p = patterns(4);
        assert!(p.contains(&vec![1.0, -1.0, 0.0, -1.0, 1.0]));
        assert!(p.contains(&vec![-1.0, 1.0, -1.0, 1.0, -1.0]));
        assert!(p.iter().all(|s| s.len() == 5));
    }

    #[test]
    fn zero_state_is_reached_immediately() {
        let r = optimal_reach(&spec(0.0, 0.0, 4), 1.0).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(
            dp_reach_distance(&spec(0.0, 0.0, 4), 1.0, &DpOptions::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn terminal_state_is_inside_the_box() {
        let s = spec(0.5, 0.0, 4);
        let r = optimal_reach(&s, 1.0).unwrap();
        assert!(r.terminal.in_box(s.eps));
        assert!(r.distance > 0.5);
        let last = r.trajectory.last().unwrap();
        assert_eq!(last.s, r.distance);
    }

    #[test]
    fn mirror_symmetric_distance() {
        let a = optimal_reach(&spec(0.4, 0.2, 4), 1.0).unwrap();
        let b = optimal_reach(&spec(-0.4, -0.2, 4), 1.0).unwrap();
        assert!((a.distance - b.distance).abs() < 1e-3 * a.distance);
    }

    #[test]
    fn more_switches_never_hurt() {
        let d2 = optimal_reach(&spec(0.5, 0.3, 2), 1.0).map(|r| r.distance);
        let d4 = optimal_reach(&spec(0.5, 0.3, 4), 1.0).unwrap().distance;
        if let Ok(d2) = d2 {
            assert!(d4 <= d2 * (1.0 + 1e-3));
        }
    }

    #[test]
    fn finer_grid_never_hurts() {
        let s = spec(0.3, -0.4, 4);
        let coarse = optimal_reach_with(&s, 1.0, &SolverOptions { grid: 4, starts: 2 }).unwrap();
        let fine = optimal_reach_with(&s, 1.0, &SolverOptions { grid: 6, starts: 2 }).unwrap();
        assert!(
            fine.distance <= coarse.distance * (1.0 + 1e-6),
            "{} {}",
            fine.distance,
            coarse.distance
        );
    }

    #[test]
    fn dp_agrees_with_solver() {
        let s = spec(0.5, 0.0, 4);
        let opt = optimal_reach(&s, 1.0).unwrap().distance;
        let dp = dp_reach_distance(&s, 1.0, &DpOptions::default()).unwrap();
        assert!((dp - opt).abs() <= 0.03 * opt, "dp {dp} opt {opt}");
    }

    #[test]
    fn rejects_bad_spec() {
        let mut s = spec(0.5, 0.0, 1);
        assert!(optimal_reach(&s, 1.0).is_err());
        s.switches = 4;
        s.delta0 = 0.6;
        assert!(s.validate().is_err());
    }
}
