mod common;

use std::f64::consts::PI;

use common::{dense_closest, lhd_table, random_network};
use drlc_core::dynamics::VehicleState;
use drlc_core::geom::Vec2;
use drlc_core::roadnet::{
    current_lane, lane_heading_difference, lane_relation, orientation, signed_distance, Lane, LanePoint,
    RoadNetwork, Turn,
};
use drlc_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn single(lane: Lane) -> RoadNetwork {
    RoadNetwork::new(vec![lane], Default::default(), vec![]).unwrap()
}

#[test]
fn closest_point_matches_dense_sampling_on_random_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let net = random_network(&mut rng, 20);
        for _ in 0..40 {
            use rand::Rng;
            let p = Vec2::new(rng.random_range(-130.0..130.0), rng.random_range(-130.0..130.0));
            let got = net.closest_lane_point(p).unwrap();
            let (_, want) = dense_closest(net.lanes(), p, 0.01);
            assert!(
                (got.projection.distance - want).abs() <= 0.02,
                "{p:?}: {} vs {want}",
                got.projection.distance
            );
        }
    }
}

#[test]
fn closest_point_examples() {
    let net = single(Lane::straight(0, Vec2::ZERO, Vec2::new(100.0, 0.0), 4.0, 20.0));
    let c = net.closest_lane_point(Vec2::new(50.3, 2.0)).unwrap();
    assert!((c.projection.point.position.x - 50.3).abs() < 1e-12);
    assert_eq!(c.projection.point.position.y, 0.0);
    assert!((c.projection.distance - 2.0).abs() < 1e-12);
    let c = net.closest_lane_point(Vec2::new(-5.0, 0.0)).unwrap();
    assert_eq!(c.projection.point.position, Vec2::ZERO);
    assert_eq!(c.projection.distance, 5.0);
}

#[test]
fn closest_point_ties_break_to_lowest_id() {
    let a = Lane::straight(7, Vec2::new(0.0, -1.0), Vec2::new(10.0, -1.0), 4.0, 20.0);
    let b = Lane::straight(3, Vec2::new(0.0, 1.0), Vec2::new(10.0, 1.0), 4.0, 20.0);
    let net = RoadNetwork::new(vec![a, b], Default::default(), vec![]).unwrap();
    assert_eq!(net.closest_lane_point(Vec2::new(5.0, 0.0)).unwrap().lane.0, 3);
}

#[test]
fn empty_network_has_no_lane() {
    let net = RoadNetwork::new(vec![], Default::default(), vec![]).unwrap();
    assert!(matches!(net.closest_lane_point(Vec2::ZERO), Err(Error::NoLane)));
}

#[test]
fn lane_heading_difference_matches_three_branch_table_on_grid() {
    let angle = |i: usize| -PI + (i as f64 + 1.0) * (2.0 * PI / 360.0);
    for i in 0..360 {
        for j in 0..360 {
            let (l, c) = (angle(i).min(PI), angle(j).min(PI));
            assert_eq!(lane_heading_difference(l, c).unwrap(), lhd_table(l, c), "l={l} c={c}");
        }
    }
}

#[test]
fn lane_heading_difference_rejects_unwrapped_input() {
    assert!(matches!(lane_heading_difference(4.0, 0.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn sample_lane_examples() {
    let s = Lane::straight(0, Vec2::ZERO, Vec2::new(10.0, 0.0), 4.0, 20.0).sample(1.0).unwrap();
    assert_eq!(s.len(), 11);
    for (i, p) in s.iter().enumerate() {
        assert!((p.position.x - i as f64).abs() < 1e-12);
        assert_eq!(p.heading, 0.0);
    }
    let arc = Lane::arc(1, Vec2::ZERO, 10.0, 0.0, PI / 2.0, Turn::Ccw, 4.0, 20.0);
    let s = arc.sample(100.0).unwrap();
    let (first, last) = (s[0], *s.last().unwrap());
    assert!(first.position.distance(Vec2::new(10.0, 0.0)) < 1e-12);
    assert!((first.heading - PI / 2.0).abs() < 1e-12);
    assert!(last.position.distance(Vec2::new(0.0, 10.0)) < 1e-12);
    assert!((last.heading - PI).abs() < 1e-12);
    let s = arc.sample(0.1).unwrap();
    assert!((s.last().unwrap().arc_length - 5.0 * PI).abs() <= 0.1);
    assert!(matches!(arc.sample(0.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn orientation_in_screen_frame() {
    let lp = |h: f64| LanePoint {
        position: Vec2::ZERO,
        heading: h,
        arc_length: 0.0,
    };
    // y grows downwards: the driver's left of +x is y < 0.
    assert_eq!(orientation(Vec2::new(5.0, -3.0), &lp(0.0)), 1.0);
    assert_eq!(orientation(Vec2::new(5.0, 3.0), &lp(0.0)), -1.0);
    assert_eq!(orientation(Vec2::new(3.0, 5.0), &lp(PI / 2.0)), 1.0);
    assert_eq!(orientation(Vec2::new(5.0, 0.0), &lp(0.0)), -1.0);
}

#[test]
fn signed_distance_examples() {
    let net = single(Lane::straight(0, Vec2::ZERO, Vec2::new(100.0, 0.0), 4.0, 20.0));
    assert!((signed_distance(Vec2::new(50.0, -3.0), &net, 0.into_id()).unwrap() - 3.0).abs() < 1e-12);
    assert!((signed_distance(Vec2::new(50.0, 3.0), &net, 0.into_id()).unwrap() + 3.0).abs() < 1e-12);
    assert_eq!(signed_distance(Vec2::new(50.0, 0.0), &net, 0.into_id()).unwrap(), 0.0);
}

trait IntoId {
    fn into_id(self) -> drlc_core::roadnet::LaneId;
}

impl IntoId for u32 {
    fn into_id(self) -> drlc_core::roadnet::LaneId {
        drlc_core::roadnet::LaneId(self)
    }
}

#[test]
fn current_lane_prefers_aligned_lane_when_off_road() {
    // Two opposite lanes 4 m apart; a car between them heading +x tracks the +x lane.
    let fwd = Lane::straight(0, Vec2::new(0.0, 2.0), Vec2::new(100.0, 2.0), 4.0, 20.0);
    let back = Lane::straight(1, Vec2::new(100.0, -2.0), Vec2::new(0.0, -2.0), 4.0, 20.0);
    let net = RoadNetwork::new(vec![fwd, back], Default::default(), vec![]).unwrap();
    let car = VehicleState::new(Vec2::new(50.0, -2.5), 0.0, 10.0);
    assert_eq!(current_lane(&net, &car, None).unwrap().0, 0);
}

proptest! {
    #[test]
    fn lane_relation_invariants(
        x in -150.0..150.0f64, y in -150.0..150.0f64, h in -3.14..3.14f64, seed in 0u64..50,
    ) {
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 20);
        let car = VehicleState::new(Vec2::new(x, y), h, 10.0);
        let id = current_lane(&net, &car, None).unwrap();
        let rel = lane_relation(&net, &car, id).unwrap();
        let width = net.lane(id).unwrap().width;
        prop_assert!((rel.signed_distance.abs() - car.position.distance(rel.closest_point.position)).abs() <= 1e-9);
        prop_assert_eq!(rel.onlane, rel.signed_distance.abs() <= width / 2.0);
        prop_assert!(rel.lhd >= -PI && rel.lhd <= PI);
        prop_assert!(rel.closest_point.heading > -PI && rel.closest_point.heading <= PI);
    }

    #[test]
    fn sampled_points_are_dense_and_monotone(seed in 0u64..200, res in 0.05..5.0f64) {
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 1);
        let lane = &net.lanes()[0];
        let pts = lane.sample(res).unwrap();
        prop_assert!(pts[0].position.distance(lane.start()) < 1e-9);
        prop_assert!(pts.last().unwrap().position.distance(lane.end()) < 1e-9);
        for w in pts.windows(2) {
            prop_assert!(w[0].position.distance(w[1].position) <= res + 1e-9);
            prop_assert!(w[1].arc_length > w[0].arc_length);
        }
    }

    #[test]
    fn spatial_index_covers_every_lane_near_a_query(seed in 0u64..100, x in -120.0..120.0f64, y in -120.0..120.0f64) {
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 20);
        let p = Vec2::new(x, y);
        let near = net.lanes_near(p);
        for lane in net.lanes() {
            if lane.project(p).distance < 1e-6 {
                prop_assert!(near.contains(&lane.id));
            }
        }
    }

    #[test]
    fn network_json_round_trip(seed in 0u64..50) {
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        let back = RoadNetwork::from_json(&net.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.lanes(), net.lanes());
    }
}
