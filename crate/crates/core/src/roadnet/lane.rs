use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Vec2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaneId(pub u32);

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lane#{}", self.0)
    }
}

/// A point on a lane centerline together with the tangent heading there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanePoint {
    pub position: Vec2,
    /// Tangent direction, wrapped to (−π, π].
    pub heading: f64,
    /// Distance travelled along the centerline from the lane start.
    pub arc_length: f64,
}

/// Sweep direction of an arc, in terms of its polar angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    /// Polar angle increases along the lane.
    Ccw,
    /// Polar angle decreases along the lane.
    Cw,
}

impl Turn {
    fn sign(self) -> f64 {
        match self {
            Turn::Ccw => 1.0,
            Turn::Cw => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LaneGeometry {
    Straight {
        start: Vec2,
        end: Vec2,
    },
    Arc {
        center: Vec2,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        direction: Turn,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    #[serde(flatten)]
    pub geometry: LaneGeometry,
    pub width: f64,
    pub speed_limit: f64,
}

/// Analytic projection of a point onto a lane centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: LanePoint,
    pub distance: f64,
    /// How far the unclamped foot point lies past the lane end (> 0), or
    /// before the lane start (< 0). Zero when the foot point is on the lane.
    pub overshoot: f64,
}

impl Lane {
    pub fn straight(id: u32, start: Vec2, end: Vec2, width: f64, speed_limit: f64) -> Self {
        Lane {
            id: LaneId(id),
            geometry: LaneGeometry::Straight { start, end },
            width,
            speed_limit,
        }
    }

    pub fn arc(
        id: u32,
        center: Vec2,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        direction: Turn,
        width: f64,
        speed_limit: f64,
    ) -> Self {
        Lane {
            id: LaneId(id),
            geometry: LaneGeometry::Arc {
                center,
                radius,
                start_angle,
                end_angle,
                direction,
            },
            width,
            speed_limit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(format!("{}: {why}", self.id)));
        if !(self.width > 0.0) {
            return bad("width must be positive");
        }
        if !(self.speed_limit > 0.0) {
            return bad("speed limit must be positive");
        }
        match self.geometry {
            LaneGeometry::Straight { start, end } => {
                if !(start.distance(end) > 0.0) {
                    return bad("straight segment has zero length");
                }
            }
            LaneGeometry::Arc { radius, .. } => {
                if !(radius > 0.0) {
                    return bad("arc radius must be positive");
                }
                let sweep = self.sweep();
                if !(sweep > 0.0 && sweep <= TAU) {
                    return bad("arc span must be positive in its turn direction and at most 2π");
                }
            }
        }
        Ok(())
    }

    /// Angular span of an arc measured along its turn direction; 0 for straights.
    fn sweep(&self) -> f64 {
        match self.geometry {
            LaneGeometry::Straight { .. } => 0.0,
            LaneGeometry::Arc {
                start_angle,
                end_angle,
                direction,
                ..
            } => direction.sign() * (end_angle - start_angle),
        }
    }

    pub fn length(&self) -> f64 {
        match self.geometry {
            LaneGeometry::Straight { start, end } => start.distance(end),
            LaneGeometry::Arc { radius, .. } => radius * self.sweep(),
        }
    }

    pub fn start(&self) -> Vec2 {
        self.point_at(0.0).position
    }

    pub fn end(&self) -> Vec2 {
        self.point_at(self.length()).position
    }

    /// Centerline point at arc length `s`, clamped to the lane.
    pub fn point_at(&self, s: f64) -> LanePoint {
        let len = self.length();
        let s = s.clamp(0.0, len);
        match self.geometry {
            LaneGeometry::Straight { start, end } => {
                let dir = end - start;
                let position = if s == len { end } else { start + dir * (s / len) };
                LanePoint {
                    position,
                    heading: normalize_angle(dir.angle()),
                    arc_length: s,
                }
            }
            LaneGeometry::Arc {
                center,
                radius,
                start_angle,
                direction,
                ..
            } => {
                let sign = direction.sign();
                let theta = start_angle + sign * s / radius;
                LanePoint {
                    position: center + Vec2::from_angle(theta) * radius,
                    heading: normalize_angle(theta + sign * PI / 2.0),
                    arc_length: s,
                }
            }
        }
    }

    /// Tangent heading at arc length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        self.point_at(s).heading
    }

    /// Exact closest point on the centerline.
    pub fn project(&self, p: Vec2) -> Projection {
        let len = self.length();
        let (s, overshoot) = match self.geometry {
            LaneGeometry::Straight { start, end } => {
                let dir = end - start;
                let t = (p - start).dot(dir) / len;
                if t < 0.0 {
                    (0.0, t)
                } else if t > len {
                    (len, t - len)
                } else {
                    (t, 0.0)
                }
            }
            LaneGeometry::Arc {
                center,
                radius,
                start_angle,
                direction,
                ..
            } => {
                let sweep = self.sweep();
                let phi = (p - center).angle();
                let rel = (direction.sign() * (phi - start_angle)).rem_euclid(TAU);
                if rel <= sweep {
                    (radius * rel, 0.0)
                } else {
                    let to_start = p.distance(self.point_at(0.0).position);
                    let to_end = p.distance(self.point_at(len).position);
                    if to_end < to_start {
                        (len, radius * (rel - sweep))
                    } else {
                        (0.0, -radius * (TAU - rel))
                    }
                }
            }
        };
        let point = self.point_at(s);
        Projection {
            point,
            distance: p.distance(point.position),
            overshoot,
        }
    }

    /// Discretizes the centerline so consecutive samples are at most
    /// `resolution` apart. Both endpoints are included.
    pub fn sample(&self, resolution: f64) -> Result<Vec<LanePoint>> {
        if !(resolution > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling resolution must be positive, got {resolution}"
            )));
        }
        let len = self.length();
        let n = (len / resolution).ceil().max(1.0) as usize;
        Ok((0..=n)
            .map(|i| self.point_at(len * i as f64 / n as f64))
            .collect())
    }

    /// Axis-aligned bounds of the centerline, widened by `margin`.
    pub fn bounds(&self, margin: f64) -> (Vec2, Vec2) {
        let pts: Vec<Vec2> = match self.geometry {
            LaneGeometry::Straight { start, end } => vec![start, end],
            LaneGeometry::Arc { .. } => self
                .sample(0.5)
                .expect("fixed positive resolution")
                .into_iter()
                .map(|lp| lp.position)
                .collect(),
        };
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo - Vec2::new(margin, margin), hi + Vec2::new(margin, margin))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter_arc() -> Lane {
        Lane::arc(0, Vec2::ZERO, 10.0, 0.0, PI / 2.0, Turn::Ccw, 4.0, 20.0)
    }

    #[test]
    fn sample_straight_at_unit_resolution() {
        let lane = Lane::straight(0, Vec2::ZERO, Vec2::new(10.0, 0.0), 4.0, 20.0);
        let pts = lane.sample(1.0).unwrap();
        assert_eq!(pts.len(), 11);
        for (i, p) in pts.iter().enumerate() {
            assert!((p.position.x - i as f64).abs() < 1e-12);
            assert_eq!(p.position.y, 0.0);
            assert_eq!(p.heading, 0.0);
        }
    }

    #[test]
    fn sample_arc_endpoints_are_tangent() {
        let pts = quarter_arc().sample(1e6).unwrap();
        let (first, last) = (pts[0], *pts.last().unwrap());
        assert!((first.position.x - 10.0).abs() < 1e-12 && first.position.y.abs() < 1e-12);
        assert!((first.heading - PI / 2.0).abs() < 1e-12);
        assert!(last.position.x.abs() < 1e-12 && (last.position.y - 10.0).abs() < 1e-12);
        assert!((last.heading - PI).abs() < 1e-12);
    }

    #[test]
    fn sample_arc_length_matches_closed_form() {
        let pts = quarter_arc().sample(0.1).unwrap();
        let total = pts.last().unwrap().arc_length;
        assert!((total - 5.0 * PI).abs() < 0.1);
        for w in pts.windows(2) {
            assert!(w[0].position.distance(w[1].position) <= 0.1 + 1e-12);
            assert!(w[1].arc_length > w[0].arc_length);
        }
    }

    #[test]
    fn non_positive_resolution_rejected() {
        assert!(matches!(
            quarter_arc().sample(0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(quarter_arc().sample(-1.0).is_err());
    }

    #[test]
    fn straight_projection_clamps() {
        let lane = Lane::straight(0, Vec2::ZERO, Vec2::new(100.0, 0.0), 4.0, 20.0);
        let pr = lane.project(Vec2::new(50.3, 2.0));
        assert!((pr.point.position.x - 50.3).abs() < 1e-12);
        assert!((pr.distance - 2.0).abs() < 1e-12);
        let pr = lane.project(Vec2::new(-5.0, 0.0));
        assert_eq!(pr.point.position, Vec2::ZERO);
        assert!((pr.distance - 5.0).abs() < 1e-12);
        assert!((pr.overshoot + 5.0).abs() < 1e-12);
        assert!(lane.project(Vec2::new(103.0, 1.0)).overshoot > 2.9);
    }

    #[test]
    fn arc_projection_inside_and_outside_sweep() {
        let lane = quarter_arc();
        let pr = lane.project(Vec2::new(3.0, 3.0));
        assert!((pr.distance - (10.0 - 18f64.sqrt())).abs() < 1e-12);
        assert!((pr.point.heading - 3.0 * PI / 4.0).abs() < 1e-12);
        // Below the start point: clamps to (10, 0).
        let pr = lane.project(Vec2::new(12.0, -5.0));
        assert!((pr.point.position.x - 10.0).abs() < 1e-12);
        assert!(pr.overshoot < 0.0);
        // Past the end: clamps to (0, 10).
        let pr = lane.project(Vec2::new(-5.0, 11.0));
        assert!(pr.point.position.distance(Vec2::new(0.0, 10.0)) < 1e-12);
        assert!(pr.overshoot > 0.0);
    }

    #[test]
    fn clockwise_arc_headings() {
        let lane = Lane::arc(0, Vec2::ZERO, 5.0, PI / 2.0, 0.0, Turn::Cw, 4.0, 20.0);
        assert!((lane.length() - 2.5 * PI).abs() < 1e-12);
        assert!(lane.heading_at(0.0).abs() < 1e-12);
        assert!((lane.heading_at(lane.length()) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_degenerate_geometry() {
        assert!(Lane::straight(0, Vec2::ZERO, Vec2::ZERO, 4.0, 20.0).validate().is_err());
        assert!(Lane::arc(0, Vec2::ZERO, 5.0, 0.0, 0.0, Turn::Ccw, 4.0, 20.0)
            .validate()
            .is_err());
        assert!(Lane::arc(0, Vec2::ZERO, 5.0, 0.0, 1.0, Turn::Cw, 4.0, 20.0)
            .validate()
            .is_err());
        assert!(Lane::straight(0, Vec2::ZERO, Vec2::new(1.0, 0.0), 0.0, 20.0)
            .validate()
            .is_err());
    }
}
