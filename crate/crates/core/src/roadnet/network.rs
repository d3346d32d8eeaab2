use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lane::{Lane, LaneId, Projection};
use crate::geom::Vec2;
use crate::{Error, Result};

/// Maximum gap between a lane end and the start of any of its successors.
pub const JUNCTION_TOLERANCE: f64 = 0.5;
pub const GRID_CELL: f64 = 10.0;
pub const FORMAT_VERSION: u32 = 1;

/// Structural role of a group of lanes, used to describe scenario layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Roundabout,
    Intersection,
    Merge,
    Diverge,
    StraightConnector,
    CurvedConnector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub kind: ComponentKind,
    pub lanes: Vec<LaneId>,
}

/// A lane with the exact projection of some query point onto it.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub lane: LaneId,
    pub projection: Projection,
}

/// Uniform grid mapping cells to every lane whose bounds touch the cell.
#[derive(Debug, Clone, Default)]
struct SpatialGrid {
    cells: HashMap<(i64, i64), Vec<LaneId>>,
    lo: (i64, i64),
    hi: (i64, i64),
}

fn cell_of(p: Vec2) -> (i64, i64) {
    ((p.x / GRID_CELL).floor() as i64, (p.y / GRID_CELL).floor() as i64)
}

impl SpatialGrid {
    fn build(lanes: &[Lane]) -> Self {
        let mut grid = SpatialGrid {
            cells: HashMap::new(),
            lo: (i64::MAX, i64::MAX),
            hi: (i64::MIN, i64::MIN),
        };
        for lane in lanes {
            let (lo, hi) = lane.bounds(1.0);
            let (cx0, cy0) = cell_of(lo);
            let (cx1, cy1) = cell_of(hi);
            grid.lo = (grid.lo.0.min(cx0), grid.lo.1.min(cy0));
            grid.hi = (grid.hi.0.max(cx1), grid.hi.1.max(cy1));
            for cx in cx0..=cx1 {
                for cy in cy0..=cy1 {
                    grid.cells.entry((cx, cy)).or_default().push(lane.id);
                }
            }
        }
        grid
    }

    fn contains_cell(&self, (cx, cy): (i64, i64)) -> bool {
        cx >= self.lo.0 && cx <= self.hi.0 && cy >= self.lo.1 && cy <= self.hi.1
    }

    fn lanes_in(&self, cell: (i64, i64)) -> &[LaneId] {
        self.cells.get(&cell).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Lanes, their drivable continuations, and a grid index for proximity queries.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    lanes: Vec<Lane>,
    slot: HashMap<LaneId, usize>,
    successors: BTreeMap<LaneId, BTreeSet<LaneId>>,
    components: Vec<Component>,
    grid: SpatialGrid,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    #[serde(default = "default_version")]
    version: u32,
    lanes: Vec<Lane>,
    successors: BTreeMap<LaneId, Vec<LaneId>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    components: Vec<Component>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl RoadNetwork {
    /// Builds and validates a network. Lanes are kept sorted by id.
    pub fn new(
        mut lanes: Vec<Lane>,
        successors: BTreeMap<LaneId, BTreeSet<LaneId>>,
        components: Vec<Component>,
    ) -> Result<Self> {
        lanes.sort_by_key(|l| l.id);
        let mut slot = HashMap::with_capacity(lanes.len());
        for (i, lane) in lanes.iter().enumerate() {
            lane.validate()?;
            if slot.insert(lane.id, i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate {}", lane.id)));
            }
        }
        for (from, tos) in &successors {
            let a = slot
                .get(from)
                .map(|&i| &lanes[i])
                .ok_or_else(|| Error::NotFound(format!("successor key {from}")))?;
            for to in tos {
                let b = slot
                    .get(to)
                    .map(|&i| &lanes[i])
                    .ok_or_else(|| Error::NotFound(format!("successor {to} of {from}")))?;
                let gap = a.end().distance(b.start());
                if gap > JUNCTION_TOLERANCE {
                    return Err(Error::InvalidArgument(format!(
                        "{from} -> {to} is discontinuous ({gap:.3} m gap)"
                    )));
                }
            }
        }
        for c in &components {
            for id in &c.lanes {
                if !slot.contains_key(id) {
                    return Err(Error::NotFound(format!("component lane {id}")));
                }
            }
        }
        let grid = SpatialGrid::build(&lanes);
        Ok(RoadNetwork {
            lanes,
            slot,
            successors,
            components,
            grid,
        })
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    pub fn lane(&self, id: LaneId) -> Result<&Lane> {
        self.slot
            .get(&id)
            .map(|&i| &self.lanes[i])
            .ok_or_else(|| Error::NotFound(format!("{id}")))
    }

    pub fn successors(&self, id: LaneId) -> impl Iterator<Item = LaneId> + '_ {
        self.successors.get(&id).into_iter().flatten().copied()
    }

    pub fn successor_map(&self) -> &BTreeMap<LaneId, BTreeSet<LaneId>> {
        &self.successors
    }

    pub fn predecessors(&self, id: LaneId) -> Vec<LaneId> {
        self.successors
            .iter()
            .filter(|(_, tos)| tos.contains(&id))
            .map(|(from, _)| *from)
            .collect()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Lane ids registered in the grid cell containing `p`.
    pub fn lanes_near(&self, p: Vec2) -> &[LaneId] {
        self.grid.lanes_in(cell_of(p))
    }

    /// Lane ids registered in the given grid cell.
    pub fn lanes_in_cell(&self, cell: (i64, i64)) -> &[LaneId] {
        self.grid.lanes_in(cell)
    }

    /// The `k` lanes whose centerlines are closest to `p`, nearest first,
    /// ties broken by lane id. Exact: the grid only prunes lanes that
    /// provably lie farther away.
    pub fn nearest_lanes(&self, p: Vec2, k: usize) -> Vec<Candidate> {
        if k == 0 || self.lanes.is_empty() {
            return Vec::new();
        }
        let home = cell_of(p);
        let mut found: Vec<Candidate> = if self.lanes.len() <= 16 || !self.grid.contains_cell(home)
        {
            self.lanes
                .iter()
                .map(|l| Candidate {
                    lane: l.id,
                    projection: l.project(p),
                })
                .collect()
        } else {
            self.ring_search(p, home, k)
        };
        found.sort_by(|a, b| {
            a.projection
                .distance
                .total_cmp(&b.projection.distance)
                .then(a.lane.cmp(&b.lane))
        });
        found.truncate(k);
        found
    }

    fn ring_search(&self, p: Vec2, home: (i64, i64), k: usize) -> Vec<Candidate> {
        let mut seen = HashSet::new();
        let mut found = Vec::new();
        let mut dists: Vec<f64> = Vec::new();
        let mut ring: i64 = 0;
        loop {
            for cell in ring_cells(home, ring) {
                for &id in self.grid.lanes_in(cell) {
                    if seen.insert(id) {
                        let projection = self.lanes[self.slot[&id]].project(p);
                        dists.push(projection.distance);
                        found.push(Candidate { lane: id, projection });
                    }
                }
            }
            // Lanes not yet seen only touch cells of ring ≥ ring+1, which lie
            // at least ring·GRID_CELL away from any point of the home cell.
            let bound = ring as f64 * GRID_CELL;
            if dists.len() >= k {
                dists.sort_by(f64::total_cmp);
                if dists[k - 1] < bound {
                    break;
                }
            }
            let covers = home.0 - ring <= self.grid.lo.0
                && home.0 + ring >= self.grid.hi.0
                && home.1 - ring <= self.grid.lo.1
                && home.1 + ring >= self.grid.hi.1;
            if covers {
                break;
            }
            ring += 1;
        }
        found
    }

    /// Closest lane to `p` with its closest centerline point and distance.
    pub fn closest_lane_point(&self, p: Vec2) -> Result<Candidate> {
        self.nearest_lanes(p, 1).into_iter().next().ok_or(Error::NoLane)
    }

    /// Lanes reachable from `start` along successor links (including `start`).
    pub fn reachable_from(&self, start: LaneId) -> BTreeSet<LaneId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            if seen.insert(id) {
                stack.extend(self.successors(id));
            }
        }
        seen
    }

    /// True when every lane can reach every other lane.
    pub fn is_strongly_connected(&self) -> bool {
        let Some(first) = self.lanes.first() else {
            return true;
        };
        if self.reachable_from(first.id).len() != self.lanes.len() {
            return false;
        }
        // Reverse reachability.
        let mut rev: HashMap<LaneId, Vec<LaneId>> = HashMap::new();
        for (from, tos) in &self.successors {
            for to in tos {
                rev.entry(*to).or_default().push(*from);
            }
        }
        let mut seen = HashSet::new();
        let mut stack = vec![first.id];
        while let Some(id) = stack.pop() {
            if seen.insert(id) {
                stack.extend(rev.get(&id).into_iter().flatten().copied());
            }
        }
        seen.len() == self.lanes.len()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = NetworkDoc {
            version: FORMAT_VERSION,
            lanes: self.lanes.clone(),
            successors: self
                .successors
                .iter()
                .map(|(k, v)| (*k, v.iter().copied().collect()))
                .collect(),
            components: self.components.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        if doc.version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported road network version {}",
                doc.version
            )));
        }
        let successors = doc
            .successors
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect();
        RoadNetwork::new(doc.lanes, successors, doc.components)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

fn ring_cells((cx, cy): (i64, i64), r: i64) -> Vec<(i64, i64)> {
    if r == 0 {
        return vec![(cx, cy)];
    }
    let mut out = Vec::with_capacity(8 * r as usize);
    for x in cx - r..=cx + r {
        out.push((x, cy - r));
        out.push((x, cy + r));
    }
    for y in cy - r + 1..cy + r {
        out.push((cx - r, y));
        out.push((cx + r, y));
    }
    out
}
