//! Directed reference paths made of line and circular-arc segments.
//!
//! Paths are parameterized by arc length `s`. Points before the start or past
//! the end project onto the tangent extensions of the two end poses, so a
//! vehicle overrunning the path still gets a well-defined lateral error.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

pub const DEFAULT_CORRIDOR: f64 = 50.0;
const G1_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

fn unit(heading: f64) -> Vec2 {
    Vec2::new(heading.cos(), heading.sin())
}

fn left_normal(heading: f64) -> Vec2 {
    Vec2::new(-heading.sin(), heading.cos())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose2 { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Point `dist` ahead along the heading.
    pub fn ahead(&self, dist: f64) -> Vec2 {
        self.position() + unit(self.heading) * dist
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line {
        start: Vec2,
        heading: f64,
        length: f64,
    },
    /// `sweep` > 0 turns left (counter-clockwise).
    Arc {
        center: Vec2,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

impl Segment {
    /// Segment leaving `start` with constant curvature `kappa`.
    pub fn from_pose(start: Pose2, kappa: f64, length: f64) -> Segment {
        if kappa == 0.0 {
            Segment::Line {
                start: start.position(),
                heading: start.heading,
                length,
            }
        } else {
            let radius = 1.0 / kappa.abs();
            let center = start.position() + left_normal(start.heading) / kappa;
            Segment::Arc {
                center,
                radius,
                start_angle: start.heading - kappa.signum() * PI / 2.0,
                sweep: kappa.signum() * length / radius,
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { length, .. } => length,
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn curvature(&self) -> f64 {
        match *self {
            Segment::Line { .. } => 0.0,
            Segment::Arc { radius, sweep, .. } => sweep.signum() / radius,
        }
    }

    /// Pose at local arc length `u` in `[0, length]`.
    pub fn pose_at(&self, u: f64) -> Pose2 {
        match *self {
            Segment::Line { start, heading, .. } => {
                let p = start + unit(heading) * u;
                Pose2::new(p.x, p.y, heading)
            }
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let dir = sweep.signum();
                let ang = start_angle + dir * u / radius;
                let p = center + unit(ang) * radius;
                Pose2::new(p.x, p.y, wrap_angle(ang + dir * PI / 2.0))
            }
        }
    }

    pub fn start_pose(&self) -> Pose2 {
        self.pose_at(0.0)
    }

    pub fn end_pose(&self) -> Pose2 {
        self.pose_at(self.length())
    }

    /// Local arc length of the closest point on this segment.
    fn closest_local(&self, p: Vec2) -> f64 {
        match *self {
            Segment::Line {
                start,
                heading,
                length,
            } => (p - start).dot(&unit(heading)).clamp(0.0, length),
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let d = p - center;
                if d.norm() == 0.0 {
                    return 0.0;
                }
                let phi = d.y.atan2(d.x);
                let rel = if sweep > 0.0 {
                    (phi - start_angle).rem_euclid(TAU)
                } else {
                    (start_angle - phi).rem_euclid(TAU)
                };
                let len = self.length();
                let u = rel * radius;
                if u <= len {
                    u
                } else {
                    // outside the sweep: nearer endpoint wins, start on ties
                    let d0 = (p - self.pose_at(0.0).position()).norm();
                    let d1 = (p - self.pose_at(len).position()).norm();
                    if d1 < d0 {
                        len
                    } else {
                        0.0
                    }
                }
            }
        }
    }
}

/// Closest-point projection of a query point onto a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathProjection {
    pub s_star: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub e: f64,
    pub theta: f64,
    pub kappa_ref: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefPath {
    segments: Vec<Segment>,
    offsets: Vec<f64>,
    total_length: f64,
    corridor: f64,
}

impl RefPath {
    pub fn new(segments: Vec<Segment>) -> Result<RefPath> {
        if segments.is_empty() {
            return Err(Error::invalid("path needs at least one segment"));
        }
        for (i, seg) in segments.iter().enumerate() {
            match *seg {
                Segment::Line { length, .. } if !(length > 0.0) => {
                    return Err(Error::invalid(format!("segment {i}: nonpositive length")))
                }
                Segment::Arc { radius, sweep, .. } if !(radius > 0.0) || sweep == 0.0 => {
                    return Err(Error::invalid(format!(
                        "segment {i}: arc needs positive radius and nonzero sweep"
                    )))
                }
                _ => {}
            }
        }
        for (i, pair) in segments.windows(2).enumerate() {
            let a = pair[0].end_pose();
            let b = pair[1].start_pose();
            let gap = (a.position() - b.position()).norm();
            let dh = wrap_angle(a.heading - b.heading).abs();
            if gap > G1_TOL || dh > G1_TOL {
                return Err(Error::invalid(format!(
                    "segments {i} and {} are not G1-continuous (gap {gap:.3e} m, {dh:.3e} rad)",
                    i + 1
                )));
            }
        }
        let mut offsets = Vec::with_capacity(segments.len());
        let mut total = 0.0;
        for seg in &segments {
            offsets.push(total);
            total += seg.length();
        }
        Ok(RefPath {
            segments,
            offsets,
            total_length: total,
            corridor: DEFAULT_CORRIDOR,
        })
    }

    pub fn with_corridor(mut self, corridor: f64) -> Self {
        self.corridor = corridor;
        self
    }

    pub fn corridor(&self) -> f64 {
        self.corridor
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn start_pose(&self) -> Pose2 {
        self.segments[0].start_pose()
    }

    pub fn end_pose(&self) -> Pose2 {
        self.segments[self.segments.len() - 1].end_pose()
    }

    pub fn is_straight(&self) -> bool {
        self.segments
            .iter()
            .all(|s| matches!(s, Segment::Line { .. }))
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.curvature().abs())
            .fold(0.0, f64::max)
    }

    /// Pose at arc length `s`; outside `[0, total_length]` the end tangents are extended.
    pub fn pose_at(&self, s: f64) -> Pose2 {
        if s < 0.0 {
            let p0 = self.start_pose();
            let p = p0.ahead(s);
            return Pose2::new(p.x, p.y, p0.heading);
        }
        if s > self.total_length {
            let p1 = self.end_pose();
            let p = p1.ahead(s - self.total_length);
            return Pose2::new(p.x, p.y, p1.heading);
        }
        let i = self.segment_index(s);
        self.segments[i].pose_at((s - self.offsets[i]).min(self.segments[i].length()))
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        if s < 0.0 || s > self.total_length {
            return 0.0;
        }
        self.segments[self.segment_index(s)].curvature()
    }

    fn segment_index(&self, s: f64) -> usize {
        match self.offsets.partition_point(|&o| o <= s) {
            0 => 0,
            k => k - 1,
        }
    }

    /// Global point at arc length `s` and signed lateral offset `e`.
    pub fn point_from_frenet(&self, s: f64, e: f64) -> Vec2 {
        let p = self.pose_at(s);
        p.position() + left_normal(p.heading) * e
    }

    pub fn project(&self, point: Vec2) -> Result<PathProjection> {
        // (distance, s, foot pose, curvature)
        let mut best: Option<(f64, f64, Pose2, f64)> = None;
        let mut consider = |dist: f64, s: f64, foot: Pose2, kappa: f64| {
            let better = match best {
                None => true,
                Some((bd, bs, _, _)) => dist < bd - TIE_TOL || (dist <= bd + TIE_TOL && s < bs),
            };
            if better {
                best = Some((dist, s, foot, kappa));
            }
        };

        // extension behind the start
        let p0 = self.start_pose();
        let back = (point - p0.position()).dot(&unit(p0.heading)).min(0.0);
        if back < -TIE_TOL {
            let foot = p0.ahead(back);
            consider(
                (point - foot).norm(),
                back,
                Pose2::new(foot.x, foot.y, p0.heading),
                0.0,
            );
        }

        for (seg, &off) in self.segments.iter().zip(&self.offsets) {
            let u = seg.closest_local(point);
            let foot = seg.pose_at(u);
            consider(
                (point - foot.position()).norm(),
                off + u,
                foot,
                seg.curvature(),
            );
        }

        // extension past the end
        let p1 = self.end_pose();
        let fwd = (point - p1.position()).dot(&unit(p1.heading)).max(0.0);
        if fwd > TIE_TOL {
            let foot = p1.ahead(fwd);
            consider(
                (point - foot).norm(),
                self.total_length + fwd,
                Pose2::new(foot.x, foot.y, p1.heading),
                0.0,
            );
        }

        let (dist, s_star, foot, kappa_ref) = best.expect("at least one candidate");
        if dist > self.corridor {
            return Err(Error::CorridorExceeded {
                distance: dist,
                corridor: self.corridor,
            });
        }
        let side = (point - foot.position()).dot(&left_normal(foot.heading));
        let e = if side < 0.0 { -dist } else { dist };
        Ok(PathProjection {
            s_star,
            e,
            theta: foot.heading,
            kappa_ref,
        })
    }

    /// Evenly spaced samples along the path, for plotting.
    pub fn sample(&self, step: f64) -> Vec<Pose2> {
        let n = (self.total_length / step).ceil().max(1.0) as usize;
        (0..=n)
            .map(|k| self.pose_at(self.total_length * k as f64 / n as f64))
            .collect()
    }
}

/// Builds a G1 path from `(curvature, length)` rows, starting at `start`.
pub fn build_arc_sequence_from(start: Pose2, spec: &[(f64, f64)]) -> Result<RefPath> {
    if spec.is_empty() {
        return Err(Error::invalid("empty segment list"));
    }
    let mut segments = Vec::with_capacity(spec.len());
    let mut pose = start;
    for (i, &(kappa, length)) in spec.iter().enumerate() {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("row {i}: length must be positive")));
        }
        if !kappa.is_finite() {
            return Err(Error::invalid(format!("row {i}: curvature is not finite")));
        }
        let seg = Segment::from_pose(pose, kappa, length);
        pose = seg.end_pose();
        segments.push(seg);
    }
    RefPath::new(segments)
}

/// Builds a G1 path from `(curvature, length)` rows starting at the origin heading +x.
pub fn build_arc_sequence(spec: &[(f64, f64)]) -> Result<RefPath> {
    build_arc_sequence_from(Pose2::default(), spec)
}

/// Longitudinal section extents of an ISO 3888-1 style double lane change:
/// entry straight, transition, offset lane, return transition, exit straight.
pub const ISO_LANE_CHANGE_SECTIONS: [f64; 5] = [15.0, 30.0, 25.0, 25.0, 15.0];
pub const ISO_LANE_OFFSET: f64 = 3.5;

/// Double lane change built from straight lines and S-shaped arc pairs.
///
/// `section_lengths` are longitudinal extents; each transition is two arcs of
/// equal radius and opposite turn that shift the path by `lane_offset`.
pub fn build_lane_change(lane_offset: f64, section_lengths: &[f64]) -> Result<RefPath> {
    if section_lengths.len() != 5 {
        return Err(Error::invalid(
            "lane change needs five sections: entry, transition, lane, return, exit",
        ));
    }
    if !(lane_offset >= 0.0) {
        return Err(Error::invalid("lane offset must be nonnegative"));
    }
    if section_lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::invalid("section lengths must be positive"));
    }
    if lane_offset == 0.0 {
        return build_arc_sequence(&[(0.0, section_lengths.iter().sum())]);
    }
    let s_curve = |long: f64, turn: f64| -> [(f64, f64); 2] {
        let sweep = 2.0 * (lane_offset / long).atan();
        let radius = long / (2.0 * sweep.sin());
        [
            (turn / radius, radius * sweep),
            (-turn / radius, radius * sweep),
        ]
    };
    let [entry, trans, lane, ret, exit] = [
        section_lengths[0],
        section_lengths[1],
        section_lengths[2],
        section_lengths[3],
        section_lengths[4],
    ];
    let mut rows = vec![(0.0, entry)];
    rows.extend(s_curve(trans, 1.0));
    rows.push((0.0, lane));
    rows.extend(s_curve(ret, -1.0));
    rows.push((0.0, exit));
    build_arc_sequence(&rows)
}

/// On-disk path description: a start pose and `(kappa, length)` rows.
///
/// ```toml
/// corridor = 50.0
/// [start]
/// x = 0.0
/// y = 0.0
/// heading = 0.0
/// [[segment]]
/// kappa = 0.0
/// length = 20.0
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    #[serde(default)]
    pub start: Pose2,
    #[serde(default)]
    pub corridor: Option<f64>,
    #[serde(rename = "segment", default)]
    pub segments: Vec<SegmentSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub kappa: f64,
    pub length: f64,
}

impl PathSpec {
    pub fn from_rows(rows: &[(f64, f64)]) -> Self {
        PathSpec {
            start: Pose2::default(),
            corridor: None,
            segments: rows
                .iter()
                .map(|&(kappa, length)| SegmentSpec { kappa, length })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<RefPath> {
        let rows: Vec<(f64, f64)> = self.segments.iter().map(|s| (s.kappa, s.length)).collect();
        let path = build_arc_sequence_from(self.start, &rows)?;
        Ok(match self.corridor {
            Some(c) => path.with_corridor(c),
            None => path,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line10() -> RefPath {
        build_arc_sequence(&[(0.0, 10.0)]).unwrap()
    }

    #[test]
    fn project_on_straight_path() {
        let p = line10().project(Vec2::new(3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.s_star, 3.0);
        assert_abs_diff_eq!(p.e, 0.0);
        assert_abs_diff_eq!(p.theta, 0.0);
        assert_abs_diff_eq!(p.kappa_ref, 0.0);

        let p = line10().project(Vec2::new(3.0, -2.0)).unwrap();
        assert_abs_diff_eq!(p.s_star, 3.0);
        assert_abs_diff_eq!(p.e, -2.0);
    }

    #[test]
    fn project_inside_ccw_arc() {
        let path = build_arc_sequence(&[(0.1, PI * 10.0 / 2.0)]).unwrap();
        let p = path.project(Vec2::new(0.0, 1.0)).unwrap();
        // |point - center| = 9, so the point lies 1 m inside, on the left
        assert_abs_diff_eq!(p.s_star, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.e, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.kappa_ref, 0.1);
    }

    #[test]
    fn corridor_is_enforced() {
        let err = line10().with_corridor(5.0).project(Vec2::new(3.0, 6.0));
        assert!(matches!(err, Err(Error::CorridorExceeded { .. })));
        assert!(line10().project(Vec2::new(3.0, 49.0)).is_ok());
    }

    #[test]
    fn arc_sequence_examples() {
        let p = build_arc_sequence(&[(0.0, 10.0)]).unwrap();
        assert_eq!(p.segments().len(), 1);
        assert_abs_diff_eq!(p.total_length(), 10.0);

        let q = build_arc_sequence(&[(0.1, PI * 10.0 / 2.0)]).unwrap();
        let end = q.end_pose();
        assert_abs_diff_eq!(end.x, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(end.y, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(end.heading, PI / 2.0, epsilon = 1e-12);

        let r = build_arc_sequence(&[(0.0, 5.0), (0.2, 7.0), (0.0, 5.0)]).unwrap();
        assert_abs_diff_eq!(r.total_length(), 17.0, epsilon = 1e-12);
        for w in r.segments().windows(2) {
            let a = w[0].end_pose();
            let b = w[1].start_pose();
            assert!((a.position() - b.position()).norm() < 1e-9);
        }
    }

    #[test]
    fn arc_sequence_rejects_bad_length() {
        assert!(matches!(
            build_arc_sequence(&[(0.0, 0.0)]),
            Err(Error::InvalidSpec(_))
        ));
        assert!(build_arc_sequence(&[(0.1, -1.0)]).is_err());
    }

    #[test]
    fn non_g1_segments_are_rejected() {
        let a = Segment::Line {
            start: Vec2::zeros(),
            heading: 0.0,
            length: 1.0,
        };
        let b = Segment::Line {
            start: Vec2::new(1.0, 0.1),
            heading: 0.0,
            length: 1.0,
        };
        assert!(RefPath::new(vec![a, b]).is_err());
    }

    #[test]
    fn lane_change_geometry() {
        let flat = build_lane_change(0.0, &ISO_LANE_CHANGE_SECTIONS).unwrap();
        assert_abs_diff_eq!(flat.total_length(), 110.0);
        assert!(flat.is_straight());

        let lc = build_lane_change(ISO_LANE_OFFSET, &ISO_LANE_CHANGE_SECTIONS).unwrap();
        let max_y = lc.sample(0.01).iter().map(|p| p.y).fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(max_y, 3.5, epsilon = 1e-9);
        assert_abs_diff_eq!(lc.start_pose().heading, 0.0);
        assert_abs_diff_eq!(lc.end_pose().heading, 0.0, epsilon = 1e-12);
        let end = lc.end_pose();
        assert_abs_diff_eq!(end.x, 110.0, epsilon = 1e-9);
        assert_abs_diff_eq!(end.y, 0.0, epsilon = 1e-9);

        assert!(build_lane_change(-1.0, &ISO_LANE_CHANGE_SECTIONS).is_err());
        assert!(build_lane_change(3.5, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ties_at_joints_pick_smallest_s() {
        // a point on the inside of a corner between two arcs is equidistant
        // from a range only at the joint; projecting the joint itself must
        // return the joint arc length
        let path = build_arc_sequence(&[(0.2, 3.0), (-0.2, 3.0)]).unwrap();
        let joint = path.segments()[1].start_pose().position();
        let p = path.project(joint).unwrap();
        assert_abs_diff_eq!(p.s_star, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn path_spec_round_trip() {
        let text = r#"
            corridor = 20.0
            [start]
            x = 1.0
            y = 2.0
            heading = 0.5
            [[segment]]
            kappa = 0.0
            length = 4.0
            [[segment]]
            kappa = -0.1
            length = 6.0
        "#;
        let spec: PathSpec = toml::from_str(text).unwrap();
        let path = spec.build().unwrap();
        assert_abs_diff_eq!(path.total_length(), 10.0);
        assert_abs_diff_eq!(path.corridor(), 20.0);
        assert_abs_diff_eq!(path.start_pose().heading, 0.5);
        let back: PathSpec = toml::from_str(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    fn curvy() -> RefPath {
        build_arc_sequence(&[(0.0, 5.0), (0.15, 6.0), (-0.1, 8.0), (0.0, 4.0)]).unwrap()
    }

    proptest! {
        #[test]
        fn projection_reconstructs_point(s in -2.0f64..25.0, e in -3.0f64..3.0) {
            let path = curvy();
            let q = path.point_from_frenet(s, e);
            let p = path.project(q).unwrap();
            let back = path.point_from_frenet(p.s_star, p.e);
            prop_assert!((back - q).norm() < 1e-9);
            let foot = path.pose_at(p.s_star).position();
            prop_assert!(((q - foot).norm() - p.e.abs()).abs() < 1e-9);
        }

        #[test]
        fn projection_is_idempotent(s in 0.0f64..23.0, e in -3.0f64..3.0) {
            let path = curvy();
            let p = path.project(path.point_from_frenet(s, e)).unwrap();
            let foot = path.pose_at(p.s_star).position();
            let again = path.project(foot).unwrap();
            prop_assert!(again.e.abs() < 1e-9);
            prop_assert!((again.s_star - p.s_star).abs() < 1e-9);
        }

        #[test]
        fn mirroring_negates_e(x in 0.5f64..9.5, y in 0.01f64..5.0) {
            let path = line10();
            let a = path.project(Vec2::new(x, y)).unwrap();
            let b = path.project(Vec2::new(x, -y)).unwrap();
            prop_assert_eq!(a.e, -b.e);
        }

        #[test]
        fn center_side_sign_follows_turn(u in 0.1f64..0.9, depth in 0.1f64..0.9, left in any::<bool>()) {
            let kappa = if left { 0.2 } else { -0.2 };
            let path = build_arc_sequence(&[(kappa, 10.0)]).unwrap();
            let pose = path.pose_at(u * 10.0);
            // move toward the center by a fraction of the radius
            let toward = left_normal(pose.heading) * kappa.signum() * depth * 5.0;
            let p = path.project(pose.position() + toward).unwrap();
            prop_assert_eq!(p.e.signum(), kappa.signum());
        }
    }
}
