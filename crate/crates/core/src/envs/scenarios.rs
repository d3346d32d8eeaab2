//! Fixed road layouts for the driving scenarios.
//!
//! All two-way roads carry one lane per direction, 2 m either side of the
//! road axis. Junction arms are numbered counter-clockwise by polar angle:
//! arm `k` points along `k·π/2` in the junction's frame.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::roadnet::{Component, ComponentKind, Lane, LaneId, RoadNetwork, Turn};
use crate::{Error, Result};

pub const LANE_WIDTH: f64 = 4.0;
const LANE_OFFSET: f64 = 2.0;
const RING_INNER: f64 = 20.0;
const RING_OUTER: f64 = 24.0;
const FILLET: f64 = 10.0;
const BOX_HALF: f64 = 8.0;
const CORNER: f64 = 20.0;
/// Lanes at least this long are eligible for randomized spawning.
pub const SPAWN_MIN_LANE_LENGTH: f64 = 30.0;

const SPEED_JUNCTION: f64 = 10.0;
const SPEED_ROAD: f64 = 20.0;
const SPEED_HIGHWAY: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Roundabout,
    Intersection,
    Merge,
    Racetrack,
    Complexroads,
    /// Single long straight lane, used for desk-scale training checks.
    Straight,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        ScenarioName::Roundabout,
        ScenarioName::Intersection,
        ScenarioName::Merge,
        ScenarioName::Racetrack,
        ScenarioName::Complexroads,
        ScenarioName::Straight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Roundabout => "roundabout",
            ScenarioName::Intersection => "intersection",
            ScenarioName::Merge => "merge",
            ScenarioName::Racetrack => "racetrack",
            ScenarioName::Complexroads => "complexroads",
            ScenarioName::Straight => "straight",
        }
    }

    /// Whether the simulator's stock speed/collision reward is defined here.
    pub fn has_baseline_reward(self) -> bool {
        !matches!(self, ScenarioName::Merge | ScenarioName::Complexroads)
    }

    pub fn default_max_steps(self) -> usize {
        match self {
            ScenarioName::Intersection => 200,
            ScenarioName::Merge => 400,
            ScenarioName::Roundabout | ScenarioName::Racetrack => 600,
            ScenarioName::Complexroads => 1000,
            ScenarioName::Straight => 300,
        }
    }

    pub fn default_traffic(self) -> usize {
        match self {
            ScenarioName::Straight => 0,
            ScenarioName::Complexroads => 8,
            _ => 4,
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::NotFound(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnPoint {
    pub lane: LaneId,
    pub arc_length: f64,
}

/// A road layout plus the ego start used in fixed-spawn mode.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: ScenarioName,
    pub network: RoadNetwork,
    pub fixed_spawn: SpawnPoint,
}

impl Scenario {
    /// Lanes eligible for randomized spawning, in id order.
    pub fn spawnable_lanes(&self) -> Vec<LaneId> {
        self.network
            .lanes()
            .iter()
            .filter(|l| l.length() >= SPAWN_MIN_LANE_LENGTH)
            .map(|l| l.id)
            .collect()
    }

    /// Road-network JSON with the scenario name and fixed spawn added.
    pub fn to_fixture_json(&self) -> Result<String> {
        let mut doc: serde_json::Value = serde_json::from_str(&self.network.to_json()?)?;
        let obj = doc.as_object_mut().expect("network document is an object");
        obj.insert("name".into(), serde_json::to_value(self.name)?);
        obj.insert("fixed_spawn".into(), serde_json::to_value(self.fixed_spawn)?);
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn from_fixture_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            name: ScenarioName,
            fixed_spawn: SpawnPoint,
        }
        let header: Header = serde_json::from_str(text)?;
        let network = RoadNetwork::from_json(text)?;
        network.lane(header.fixed_spawn.lane)?;
        Ok(Scenario {
            name: header.name,
            network,
            fixed_spawn: header.fixed_spawn,
        })
    }

    /// Loads `<dir>/<name>.json`.
    pub fn load(dir: &Path, name: ScenarioName) -> Result<Self> {
        let path = dir.join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let scenario = Scenario::from_fixture_json(&text)?;
        if scenario.name != name {
            return Err(Error::InvalidArgument(format!(
                "{} describes scenario {}, expected {name}",
                path.display(),
                scenario.name
            )));
        }
        Ok(scenario)
    }
}

/// Builds the road network of a named scenario.
pub fn build_scenario(name: &str) -> Result<RoadNetwork> {
    Ok(scenario(name.parse()?)?.network)
}

/// Builds a scenario with its fixed spawn point.
pub fn scenario(name: ScenarioName) -> Result<Scenario> {
    let (network, fixed_spawn) = match name {
        ScenarioName::Roundabout => {
            let mut b = Builder::default();
            let arms = roundabout(&mut b, &Frame::IDENTITY, 100.0);
            (b.finish()?, arms[0].incoming)
        }
        ScenarioName::Intersection => {
            let mut b = Builder::default();
            let arms = intersection(&mut b, &Frame::IDENTITY, 100.0);
            (b.finish()?, arms[0].incoming)
        }
        ScenarioName::Merge => merge()?,
        ScenarioName::Racetrack => racetrack()?,
        ScenarioName::Complexroads => complexroads()?,
        ScenarioName::Straight => {
            let mut b = Builder::default();
            let id = b.straight(
                &Frame::IDENTITY,
                Vec2::ZERO,
                Vec2::new(2000.0, 0.0),
                SPEED_HIGHWAY,
            );
            (b.finish()?, id)
        }
    };
    Ok(Scenario {
        name,
        network,
        fixed_spawn: SpawnPoint {
            lane: fixed_spawn,
            arc_length: 0.0,
        },
    })
}

/// Rigid transform from a builder-local frame to the world frame.
#[derive(Debug, Clone, Copy)]
struct Frame {
    origin: Vec2,
    rotation: f64,
}

impl Frame {
    const IDENTITY: Frame = Frame {
        origin: Vec2::ZERO,
        rotation: 0.0,
    };

    fn new(origin: Vec2, rotation: f64) -> Self {
        Frame { origin, rotation }
    }

    fn point(&self, p: Vec2) -> Vec2 {
        self.origin + p.rotate(self.rotation)
    }

    /// Frame rotated by `angle` about its own origin.
    fn turned(&self, angle: f64) -> Frame {
        Frame::new(self.origin, self.rotation + angle)
    }

    /// Composition: `inner` expressed in this frame.
    fn then(&self, inner: &Frame) -> Frame {
        Frame::new(self.point(inner.origin), self.rotation + inner.rotation)
    }
}

#[derive(Default)]
struct Builder {
    lanes: Vec<Lane>,
    successors: BTreeMap<LaneId, BTreeSet<LaneId>>,
    components: Vec<Component>,
}

impl Builder {
    fn next_id(&self) -> u32 {
        self.lanes.len() as u32
    }

    fn straight(&mut self, f: &Frame, a: Vec2, b: Vec2, speed: f64) -> LaneId {
        let lane = Lane::straight(self.next_id(), f.point(a), f.point(b), LANE_WIDTH, speed);
        let id = lane.id;
        self.lanes.push(lane);
        id
    }

    #[allow(clippy::too_many_arguments)]
    fn arc(
        &mut self,
        f: &Frame,
        center: Vec2,
        radius: f64,
        start: f64,
        end: f64,
        turn: Turn,
        speed: f64,
    ) -> LaneId {
        let lane = Lane::arc(
            self.next_id(),
            f.point(center),
            radius,
            start + f.rotation,
            end + f.rotation,
            turn,
            LANE_WIDTH,
            speed,
        );
        let id = lane.id;
        self.lanes.push(lane);
        id
    }

    fn piece(&mut self, f: &Frame, piece: &Piece, speed: f64) -> LaneId {
        match *piece {
            Piece::Straight(a, b) => self.straight(f, a, b, speed),
            Piece::Arc {
                center,
                radius,
                start,
                end,
                turn,
            } => self.arc(f, center, radius, start, end, turn, speed),
        }
    }

    fn link(&mut self, from: LaneId, to: LaneId) {
        self.successors.entry(from).or_default().insert(to);
    }

    fn chain(&mut self, ids: &[LaneId]) {
        for w in ids.windows(2) {
            self.link(w[0], w[1]);
        }
    }

    fn component(&mut self, kind: ComponentKind, lanes: Vec<LaneId>) {
        self.components.push(Component { kind, lanes });
    }

    fn finish(self) -> Result<RoadNetwork> {
        RoadNetwork::new(self.lanes, self.successors, self.components)
    }
}

/// Lanes where a junction arm meets the outside world.
#[derive(Debug, Clone, Copy)]
struct Arm {
    /// Lane entering the junction; starts at the arm end.
    incoming: LaneId,
    /// Lane leaving the junction; ends at the arm end.
    outgoing: LaneId,
}

/// Four-way crossing of two two-way roads with both turn movements.
fn intersection(b: &mut Builder, frame: &Frame, arm_len: f64) -> [Arm; 4] {
    let first = b.next_id();
    let mut arms = Vec::with_capacity(4);
    for k in 0..4 {
        let f = frame.turned(k as f64 * FRAC_PI_2);
        let incoming = b.straight(
            &f,
            Vec2::new(arm_len, LANE_OFFSET),
            Vec2::new(BOX_HALF, LANE_OFFSET),
            SPEED_ROAD,
        );
        let outgoing = b.straight(
            &f,
            Vec2::new(BOX_HALF, -LANE_OFFSET),
            Vec2::new(arm_len, -LANE_OFFSET),
            SPEED_ROAD,
        );
        arms.push(Arm { incoming, outgoing });
    }
    for k in 0..4 {
        let f = frame.turned(k as f64 * FRAC_PI_2);
        let through = b.straight(
            &f,
            Vec2::new(BOX_HALF, LANE_OFFSET),
            Vec2::new(-BOX_HALF, LANE_OFFSET),
            SPEED_JUNCTION,
        );
        let near_turn = b.arc(
            &f,
            Vec2::new(BOX_HALF, BOX_HALF),
            BOX_HALF - LANE_OFFSET,
            -FRAC_PI_2,
            -PI,
            Turn::Cw,
            SPEED_JUNCTION,
        );
        let far_turn = b.arc(
            &f,
            Vec2::new(BOX_HALF, -BOX_HALF),
            BOX_HALF + LANE_OFFSET,
            FRAC_PI_2,
            PI,
            Turn::Ccw,
            SPEED_JUNCTION,
        );
        let inc = arms[k].incoming;
        for (movement, exit_arm) in [(through, k + 2), (near_turn, k + 1), (far_turn, k + 3)] {
            b.link(inc, movement);
            b.link(movement, arms[exit_arm % 4].outgoing);
        }
    }
    let lanes = (first..b.next_id()).map(LaneId).collect();
    b.component(ComponentKind::Intersection, lanes);
    [arms[0], arms[1], arms[2], arms[3]]
}

/// Entry and exit fillet geometry for a lane offset `LANE_OFFSET` from the
/// arm axis joining a ring of `ring` radius: (distance along the arm where the
/// fillet meets the straight, polar angle on the ring where it meets the ring).
fn fillet_geometry(ring: f64) -> (f64, f64) {
    let cx = ((ring + FILLET).powi(2) - (LANE_OFFSET + FILLET).powi(2)).sqrt();
    (cx, (LANE_OFFSET + FILLET).atan2(cx))
}

/// Two-ring roundabout with four two-way arms. The single approach lane of
/// each arm feeds both rings; both rings feed the single exit lane.
fn roundabout(b: &mut Builder, frame: &Frame, arm_len: f64) -> [Arm; 4] {
    let first = b.next_id();
    let rings = [RING_OUTER, RING_INNER];
    let geo = rings.map(fillet_geometry);

    struct Ring {
        pass: LaneId,
        between: LaneId,
        entry: LaneId,
        exit: LaneId,
    }
    let mut arms = Vec::new();
    let mut ring_lanes: Vec<[Ring; 2]> = Vec::new();
    for k in 0..4 {
        let f = frame.turned(k as f64 * FRAC_PI_2);
        let ((cx_o, _), (cx_i, _)) = (geo[0], geo[1]);
        let approach = b.straight(
            &f,
            Vec2::new(arm_len, LANE_OFFSET),
            Vec2::new(cx_o, LANE_OFFSET),
            SPEED_ROAD,
        );
        let link_in = b.straight(
            &f,
            Vec2::new(cx_o, LANE_OFFSET),
            Vec2::new(cx_i, LANE_OFFSET),
            SPEED_JUNCTION,
        );
        let link_out = b.straight(
            &f,
            Vec2::new(cx_i, -LANE_OFFSET),
            Vec2::new(cx_o, -LANE_OFFSET),
            SPEED_JUNCTION,
        );
        let exit = b.straight(
            &f,
            Vec2::new(cx_o, -LANE_OFFSET),
            Vec2::new(arm_len, -LANE_OFFSET),
            SPEED_ROAD,
        );
        let per_ring = [0, 1].map(|r| {
            let (radius, (cx, phi)) = (rings[r], geo[r]);
            let c = LANE_OFFSET + FILLET;
            let entry = b.arc(
                &f,
                Vec2::new(cx, c),
                FILLET,
                -FRAC_PI_2,
                -PI + phi,
                Turn::Cw,
                SPEED_JUNCTION,
            );
            let exit = b.arc(
                &f,
                Vec2::new(cx, -c),
                FILLET,
                PI - phi,
                FRAC_PI_2,
                Turn::Cw,
                SPEED_JUNCTION,
            );
            let pass = b.arc(&f, Vec2::ZERO, radius, -phi, phi, Turn::Ccw, SPEED_JUNCTION);
            let between = b.arc(
                &f,
                Vec2::ZERO,
                radius,
                phi,
                FRAC_PI_2 - phi,
                Turn::Ccw,
                SPEED_JUNCTION,
            );
            Ring {
                pass,
                between,
                entry,
                exit,
            }
        });
        let [outer, inner] = &per_ring;
        b.link(approach, outer.entry);
        b.link(approach, link_in);
        b.link(link_in, inner.entry);
        b.link(outer.exit, exit);
        b.chain(&[inner.exit, link_out, exit]);
        for ring in &per_ring {
            b.link(ring.entry, ring.between);
            b.link(ring.pass, ring.between);
        }
        arms.push(Arm {
            incoming: approach,
            outgoing: exit,
        });
        ring_lanes.push(per_ring);
    }
    for k in 0..4 {
        let next = (k + 1) % 4;
        for r in 0..2 {
            let (between, pass, exit) = (
                ring_lanes[k][r].between,
                ring_lanes[next][r].pass,
                ring_lanes[next][r].exit,
            );
            b.link(between, pass);
            b.link(between, exit);
        }
    }
    let lanes = (first..b.next_id()).map(LaneId).collect();
    b.component(ComponentKind::Roundabout, lanes);
    [arms[0], arms[1], arms[2], arms[3]]
}

/// Two-lane mainline with a tapered on-ramp joining the right lane.
fn merge() -> Result<(RoadNetwork, LaneId)> {
    let mut b = Builder::default();
    let f = Frame::IDENTITY;
    let s = SPEED_HIGHWAY;
    let right_pre = b.straight(&f, Vec2::new(0.0, 0.0), Vec2::new(250.0, 0.0), s);
    let right_post = b.straight(&f, Vec2::new(250.0, 0.0), Vec2::new(500.0, 0.0), s);
    let left = b.straight(&f, Vec2::new(0.0, -4.0), Vec2::new(500.0, -4.0), s);
    let ramp = b.straight(&f, Vec2::new(100.0, 4.0), Vec2::new(200.0, 4.0), s);
    let taper = b.straight(&f, Vec2::new(200.0, 4.0), Vec2::new(250.0, 0.0), s);
    b.chain(&[right_pre, right_post]);
    b.chain(&[ramp, taper, right_post]);
    b.component(
        ComponentKind::Merge,
        vec![right_pre, right_post, left, ramp, taper],
    );
    Ok((b.finish()?, ramp))
}

/// Closed two-lane loop: four straights joined by four quarter arcs.
fn racetrack() -> Result<(RoadNetwork, LaneId)> {
    let mut b = Builder::default();
    let (hx, hy) = (100.0, 50.0);
    let mut first = None;
    for radius in [40.0, 44.0] {
        let corners = [
            Vec2::new(hx, -hy),
            Vec2::new(hx, hy),
            Vec2::new(-hx, hy),
            Vec2::new(-hx, -hy),
        ];
        let mut loop_ids = Vec::new();
        for (k, c) in corners.iter().enumerate() {
            // Straight leading into corner k, then the corner arc.
            let a0 = -FRAC_PI_2 + k as f64 * FRAC_PI_2;
            let prev = corners[(k + 3) % 4];
            let start = prev + Vec2::from_angle(a0) * radius;
            let end = *c + Vec2::from_angle(a0) * radius;
            loop_ids.push(b.straight(&Frame::IDENTITY, start, end, SPEED_ROAD));
            loop_ids.push(b.arc(
                &Frame::IDENTITY,
                *c,
                radius,
                a0,
                a0 + FRAC_PI_2,
                Turn::Ccw,
                SPEED_ROAD,
            ));
        }
        b.chain(&loop_ids);
        b.link(*loop_ids.last().unwrap(), loop_ids[0]);
        first.get_or_insert(loop_ids[0]);
        b.component(ComponentKind::CurvedConnector, loop_ids);
    }
    Ok((b.finish()?, first.unwrap()))
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Straight(Vec2, Vec2),
    Arc {
        center: Vec2,
        radius: f64,
        start: f64,
        end: f64,
        turn: Turn,
    },
}

impl Piece {
    fn reversed(&self) -> Piece {
        match *self {
            Piece::Straight(a, b) => Piece::Straight(b, a),
            Piece::Arc {
                center,
                radius,
                start,
                end,
                turn,
            } => Piece::Arc {
                center,
                radius,
                start: end,
                end: start,
                turn: match turn {
                    Turn::Ccw => Turn::Cw,
                    Turn::Cw => Turn::Ccw,
                },
            },
        }
    }

    /// Same piece shifted `LANE_OFFSET` to the driver's side used by all
    /// two-way roads (the −90° normal of the direction of travel).
    fn lane(&self) -> Piece {
        match *self {
            Piece::Straight(a, b) => {
                let n = Vec2::from_angle((b - a).angle() - FRAC_PI_2) * LANE_OFFSET;
                Piece::Straight(a + n, b + n)
            }
            Piece::Arc {
                center,
                radius,
                start,
                end,
                turn,
            } => Piece::Arc {
                center,
                radius: match turn {
                    Turn::Ccw => radius + LANE_OFFSET,
                    Turn::Cw => radius - LANE_OFFSET,
                },
                start,
                end,
                turn,
            },
        }
    }
}

/// Road axis through `points`, with every corner rounded by a `CORNER` arc.
fn rounded_path(points: &[Vec2]) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut cursor = points[0];
    for i in 1..points.len() - 1 {
        let (p0, p1, p2) = (points[i - 1], points[i], points[i + 1]);
        let d1 = (p1 - p0) * (1.0 / (p1 - p0).norm());
        let d2 = (p2 - p1) * (1.0 / (p2 - p1).norm());
        let delta = d1.cross(d2).atan2(d1.dot(d2));
        let t = CORNER * (delta.abs() / 2.0).tan();
        let (t1, t2) = (p1 - d1 * t, p1 + d2 * t);
        let side = delta.signum();
        let center = t1 + d1.rotate(side * FRAC_PI_2) * CORNER;
        let start = (t1 - center).angle();
        pieces.push(Piece::Straight(cursor, t1));
        pieces.push(Piece::Arc {
            center,
            radius: CORNER,
            start,
            end: start + delta,
            turn: if delta > 0.0 { Turn::Ccw } else { Turn::Cw },
        });
        cursor = t2;
    }
    pieces.push(Piece::Straight(cursor, *points.last().unwrap()));
    pieces
}

/// Two-way road between two junction arms along `points` (world frame).
/// Returns every lane of the road.
fn connect(b: &mut Builder, from: Arm, to: Arm, points: &[Vec2], speed: f64) -> Vec<LaneId> {
    let axis = rounded_path(points);
    let forward: Vec<LaneId> = axis
        .iter()
        .map(|p| b.piece(&Frame::IDENTITY, &p.lane(), speed))
        .collect();
    let backward: Vec<LaneId> = axis
        .iter()
        .rev()
        .map(|p| b.piece(&Frame::IDENTITY, &p.reversed().lane(), speed))
        .collect();
    b.link(from.outgoing, forward[0]);
    b.chain(&forward);
    b.link(*forward.last().unwrap(), to.incoming);
    b.link(to.outgoing, backward[0]);
    b.chain(&backward);
    b.link(*backward.last().unwrap(), from.incoming);
    let kind = if axis.len() == 1 {
        ComponentKind::StraightConnector
    } else {
        ComponentKind::CurvedConnector
    };
    let lanes: Vec<LaneId> = forward.iter().chain(&backward).copied().collect();
    b.component(kind, lanes.clone());
    lanes
}

/// Highway interchange in a local frame where the highway axis is the x axis
/// and the forward lane (travelling +x, at y = −2) gets a diverge to and a
/// tapered merge from a side road leaving toward −y at x = 0.
struct Interchange {
    forward_mid: LaneId,
    backward_mid: LaneId,
    /// Side-road arm: `outgoing` ends at the side road start, `incoming`
    /// starts there.
    side: Arm,
    diverge: LaneId,
    merge_end: LaneId,
}

const INTERCHANGE_BEFORE: f64 = FILLET + LANE_WIDTH + LANE_OFFSET;
const INTERCHANGE_AFTER: f64 = 112.0;

fn interchange(b: &mut Builder, f: &Frame) -> Interchange {
    let s = SPEED_HIGHWAY;
    let o = LANE_OFFSET;
    let x0 = -INTERCHANGE_BEFORE;
    let x1 = INTERCHANGE_AFTER;
    let forward_mid = b.straight(f, Vec2::new(x0, -o), Vec2::new(x1, -o), s);
    let backward_mid = b.straight(f, Vec2::new(x1, o), Vec2::new(x0, o), s);
    // Off-ramp: quarter turn from the forward lane onto the side road,
    // landing level with the on-ramp start.
    let diverge = b.arc(
        f,
        Vec2::new(x0, -o - FILLET - LANE_WIDTH),
        FILLET + LANE_WIDTH,
        FRAC_PI_2,
        0.0,
        Turn::Cw,
        SPEED_ROAD,
    );
    // On-ramp: quarter turn onto an acceleration lane, then a taper.
    let ramp_x = o;
    let accel_y = -o - LANE_WIDTH;
    let on_arc = b.arc(
        f,
        Vec2::new(ramp_x + FILLET, accel_y - FILLET),
        FILLET,
        PI,
        FRAC_PI_2,
        Turn::Cw,
        SPEED_ROAD,
    );
    let accel = b.straight(
        f,
        Vec2::new(ramp_x + FILLET, accel_y),
        Vec2::new(x1 - 50.0, accel_y),
        s,
    );
    let taper = b.straight(f, Vec2::new(x1 - 50.0, accel_y), Vec2::new(x1, -o), s);
    b.chain(&[on_arc, accel, taper]);
    b.component(
        ComponentKind::Merge,
        vec![forward_mid, backward_mid, on_arc, accel, taper],
    );
    b.component(ComponentKind::Diverge, vec![diverge]);
    Interchange {
        forward_mid,
        backward_mid,
        side: Arm {
            incoming: on_arc,
            outgoing: diverge,
        },
        diverge,
        merge_end: taper,
    }
}

/// Two roundabouts, two four-way intersections and two highway merges joined
/// by two-way connectors into one strongly connected circuit. The layout is
/// symmetric under a half turn about the origin, with roundabouts on the
/// west half and intersections on the east half.
fn complexroads() -> Result<(RoadNetwork, LaneId)> {
    const ARM: f64 = 70.0;
    let mut b = Builder::default();
    let world = Frame::IDENTITY;
    let half_turn = Frame::new(Vec2::ZERO, PI);

    let w = roundabout(&mut b, &world.then(&Frame::new(Vec2::new(-260.0, 0.0), 0.0)), ARM);
    let s = roundabout(&mut b, &world.then(&Frame::new(Vec2::new(-150.0, -200.0), 0.0)), ARM);
    let e = intersection(&mut b, &half_turn.then(&Frame::new(Vec2::new(-260.0, 0.0), 0.0)), ARM);
    let n = intersection(&mut b, &half_turn.then(&Frame::new(Vec2::new(-150.0, -200.0), 0.0)), ARM);
    // After the half turn, arm k of the east/north junctions points along
    // (k + 2)·π/2 in the world frame.
    let (e, n) = (
        [e[2], e[3], e[0], e[1]],
        [n[2], n[3], n[0], n[1]],
    );

    let west_x = Frame::new(Vec2::new(-150.0, 0.0), 0.0);
    let east_x = half_turn.then(&west_x);
    let m1 = interchange(&mut b, &west_x);
    let m2 = interchange(&mut b, &east_x);

    // Highway pieces between the junction arms and the interchanges. Each
    // interchange spans x ∈ [−12, 112] in its own frame.
    let w_end = -260.0 + ARM;
    let m1_lo = -150.0 - INTERCHANGE_BEFORE;
    let m1_hi = -150.0 + INTERCHANGE_AFTER;
    let highway_1 = connect(
        &mut b,
        w[0],
        Arm {
            incoming: m1.forward_mid,
            outgoing: m1.backward_mid,
        },
        &[Vec2::new(w_end, 0.0), Vec2::new(m1_lo, 0.0)],
        SPEED_HIGHWAY,
    );
    b.link(highway_1[0], m1.diverge);
    let highway_2 = connect(
        &mut b,
        Arm {
            incoming: m1.backward_mid,
            outgoing: m1.forward_mid,
        },
        Arm {
            incoming: m2.backward_mid,
            outgoing: m2.forward_mid,
        },
        &[Vec2::new(m1_hi, 0.0), Vec2::new(-m1_hi, 0.0)],
        SPEED_HIGHWAY,
    );
    b.link(m1.merge_end, highway_2[0]);
    b.link(m2.merge_end, highway_2[1]);
    let highway_3 = connect(
        &mut b,
        Arm {
            incoming: m2.forward_mid,
            outgoing: m2.backward_mid,
        },
        e[2],
        &[Vec2::new(-m1_lo, 0.0), Vec2::new(-w_end, 0.0)],
        SPEED_HIGHWAY,
    );
    b.link(highway_3[1], m2.diverge);

    // Side roads from the interchanges to the south/north junctions.
    connect(
        &mut b,
        m1.side,
        s[1],
        &[Vec2::new(-150.0, -16.0), Vec2::new(-150.0, -200.0 + ARM)],
        SPEED_ROAD,
    );
    connect(
        &mut b,
        m2.side,
        n[3],
        &[Vec2::new(150.0, 16.0), Vec2::new(150.0, 200.0 - ARM)],
        SPEED_ROAD,
    );

    let p = Vec2::new;
    // West/south and east/north L-shaped links.
    connect(&mut b, w[3], s[2], &[p(-260.0, -ARM), p(-260.0, -200.0), p(-220.0, -200.0)], SPEED_ROAD);
    connect(&mut b, e[1], n[0], &[p(260.0, ARM), p(260.0, 200.0), p(220.0, 200.0)], SPEED_ROAD);
    // Outer loops.
    connect(
        &mut b,
        w[2],
        s[3],
        &[p(-330.0, 0.0), p(-390.0, 0.0), p(-390.0, -330.0), p(-150.0, -330.0), p(-150.0, -270.0)],
        SPEED_ROAD,
    );
    connect(
        &mut b,
        e[0],
        n[1],
        &[p(330.0, 0.0), p(390.0, 0.0), p(390.0, 330.0), p(150.0, 330.0), p(150.0, 270.0)],
        SPEED_ROAD,
    );
    // Cross links between the halves.
    connect(&mut b, w[1], n[2], &[p(-260.0, ARM), p(-260.0, 200.0), p(80.0, 200.0)], SPEED_ROAD);
    connect(&mut b, e[3], s[0], &[p(260.0, -ARM), p(260.0, -200.0), p(-80.0, -200.0)], SPEED_ROAD);

    let spawn = highway_2[0];
    Ok((b.finish()?, spawn))
}
