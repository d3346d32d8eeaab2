//! Oriented-rectangle overlap by the separating-axis theorem.

use super::VehicleState;
use crate::geom::Vec2;

fn corners(v: &VehicleState) -> [Vec2; 4] {
    let fwd = Vec2::from_angle(v.heading) * (v.length / 2.0);
    let side = Vec2::from_angle(v.heading + std::f64::consts::FRAC_PI_2) * (v.width / 2.0);
    let c = v.position;
    [c + fwd + side, c + fwd - side, c - fwd - side, c - fwd + side]
}

fn interval(points: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

/// True when the two footprints overlap. Touching edges count as overlap.
pub fn collision_check(a: &VehicleState, b: &VehicleState) -> bool {
    let reach = |v: &VehicleState| 0.5 * v.length.hypot(v.width);
    if a.position.distance(b.position) > reach(a) + reach(b) {
        return false;
    }
    let (ca, cb) = (corners(a), corners(b));
    let axes = [
        Vec2::from_angle(a.heading),
        Vec2::from_angle(a.heading + std::f64::consts::FRAC_PI_2),
        Vec2::from_angle(b.heading),
        Vec2::from_angle(b.heading + std::f64::consts::FRAC_PI_2),
    ];
    axes.iter().all(|&axis| {
        let (lo_a, hi_a) = interval(&ca, axis);
        let (lo_b, hi_b) = interval(&cb, axis);
        hi_a >= lo_b && hi_b >= lo_a
    })
}
