//! The object-level topological map: segments as nodes, Delaunay adjacency
//! within a frame (weight 1), association identity across frames (weight 0),
//! and single-source shortest-path goal costs.

use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::assoc::{associate, AssociationModel};
use crate::delaunay::delaunay_intra_edges;
use crate::segment::{PixelRun, Segment};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    Intra,
    Inter,
}

impl EdgeKind {
    /// Hop weights: adjacency within an image costs 1, identity across
    /// images costs 0.
    pub fn weight(self) -> u32 {
        match self {
            EdgeKind::Intra => 1,
            EdgeKind::Inter => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapGraph {
    pub nodes: Vec<Segment>,
    /// Undirected, deduplicated, no self-loops; indices into `nodes`.
    pub edges: Vec<(usize, usize, EdgeKind)>,
    /// Node index range of each frame, in frame order.
    pub frame_ranges: Vec<(usize, usize)>,
    pub goal_node: Option<usize>,
}

#[derive(Error, Debug)]
pub enum GraphError {
    #[error("malformed map file at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl MapGraph {
    pub fn frame_count(&self) -> usize {
        self.frame_ranges.len()
    }

    pub fn frame_segments(&self, frame: usize) -> &[Segment] {
        let (s, e) = self.frame_ranges[frame];
        &self.nodes[s..e]
    }

    /// Global node index of segment `local` within `frame`.
    pub fn node_index(&self, frame: usize, local: usize) -> usize {
        self.frame_ranges[frame].0 + local
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(i, j, kind) in &self.edges {
            adj[i].push((j, kind.weight()));
            adj[j].push((i, kind.weight()));
        }
        adj
    }

    /// Versioned text encoding; `parse` inverts it.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mapgraph/1");
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "node {} frame={} local={} instance={} centroid={},{} area={}",
                i, n.frame_index, n.local_id, n.instance_id, n.centroid_px.0, n.centroid_px.1, n.area_px
            );
        }
        let _ = writeln!(out, "edges {}", self.edges.len());
        for (i, j, kind) in &self.edges {
            let k = match kind {
                EdgeKind::Intra => "intra",
                EdgeKind::Inter => "inter",
            };
            let _ = writeln!(out, "edge {i} {j} {k}");
        }
        match self.goal_node {
            Some(g) => {
                let _ = writeln!(out, "goal {g}");
            }
            None => {
                let _ = writeln!(out, "goal none");
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<MapGraph, GraphError> {
        let err = |line: usize, msg: &str| GraphError::Parse { line, msg: msg.into() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (l, header) = lines.next().ok_or_else(|| err(0, "empty file"))?;
        if header.trim() != "mapgraph/1" {
            return Err(err(l, "expected mapgraph/1 header"));
        }
        let (l, s) = lines.next().ok_or_else(|| err(0, "missing node count"))?;
        let n: usize = s
            .strip_prefix("nodes ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(l, "bad node count"))?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (l, s) = lines.next().ok_or_else(|| err(0, "missing node"))?;
            let fields: Vec<&str> = s.split_whitespace().collect();
            if fields.len() != 7 || fields[0] != "node" {
                return Err(err(l, "bad node record"));
            }
            let get = |tok: &str, key: &str| -> Result<String, GraphError> {
                tok.strip_prefix(&format!("{key}="))
                    .map(str::to_string)
                    .ok_or_else(|| err(l, &format!("expected {key}=")))
            };
            let frame_index: usize = get(fields[2], "frame")?.parse().map_err(|_| err(l, "bad frame"))?;
            let local_id: u32 = get(fields[3], "local")?.parse().map_err(|_| err(l, "bad local"))?;
            let instance_id: u32 =
                get(fields[4], "instance")?.parse().map_err(|_| err(l, "bad instance"))?;
            let centroid = get(fields[5], "centroid")?;
            let (cu, cv) = centroid.split_once(',').ok_or_else(|| err(l, "bad centroid"))?;
            let area_px: u32 = get(fields[6], "area")?.parse().map_err(|_| err(l, "bad area"))?;
            nodes.push(Segment {
                frame_index,
                local_id,
                instance_id,
                centroid_px: (
                    cu.parse::<Real>().map_err(|_| err(l, "bad centroid u"))?,
                    cv.parse::<Real>().map_err(|_| err(l, "bad centroid v"))?,
                ),
                area_px,
                // masks are not persisted; a placeholder keeps area consistent
                pixel_runs: vec![PixelRun { row: 0, start: 0, len: area_px }],
            });
        }
        let (l, s) = lines.next().ok_or_else(|| err(0, "missing edge count"))?;
        let m: usize = s
            .strip_prefix("edges ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(l, "bad edge count"))?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (l, s) = lines.next().ok_or_else(|| err(0, "missing edge"))?;
            let fields: Vec<&str> = s.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "edge" {
                return Err(err(l, "bad edge record"));
            }
            let i: usize = fields[1].parse().map_err(|_| err(l, "bad edge i"))?;
            let j: usize = fields[2].parse().map_err(|_| err(l, "bad edge j"))?;
            let kind = match fields[3] {
                "intra" => EdgeKind::Intra,
                "inter" => EdgeKind::Inter,
                _ => return Err(err(l, "bad edge kind")),
            };
            edges.push((i, j, kind));
        }
        let (l, s) = lines.next().ok_or_else(|| err(0, "missing goal"))?;
        let goal_node = match s.strip_prefix("goal ").ok_or_else(|| err(l, "bad goal"))? {
            "none" => None,
            v => Some(v.parse().map_err(|_| err(l, "bad goal index"))?),
        };

        let mut frame_ranges = Vec::new();
        let mut start = 0usize;
        for i in 1..=nodes.len() {
            if i == nodes.len() || nodes[i].frame_index != nodes[start].frame_index {
                frame_ranges.push((start, i));
                start = i;
            }
        }
        let graph = MapGraph { nodes, edges, frame_ranges, goal_node };
        graph.check_edge_kinds().map_err(|msg| err(0, &msg))?;
        Ok(graph)
    }

    /// Intra edges stay within a frame, inter edges cross frames, no
    /// self-loops or duplicates.
    pub fn check_edge_kinds(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for &(i, j, kind) in &self.edges {
            if i == j {
                return Err(format!("self loop at node {i}"));
            }
            if i >= self.nodes.len() || j >= self.nodes.len() {
                return Err(format!("edge ({i},{j}) out of range"));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(format!("duplicate edge ({i},{j})"));
            }
            let same_frame = self.nodes[i].frame_index == self.nodes[j].frame_index;
            match kind {
                EdgeKind::Intra if !same_frame => {
                    return Err(format!("intra edge ({i},{j}) crosses frames"));
                }
                EdgeKind::Inter if same_frame => {
                    return Err(format!("inter edge ({i},{j}) inside one frame"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Build the map over per-frame segment lists: Delaunay intra edges within
/// each frame, association inter edges between frames `(t, t+k)` for
/// `k = 1..=window`.
pub fn build_map(
    frames: &[Vec<Segment>],
    assoc: &AssociationModel,
    window: usize,
) -> MapGraph {
    assert!(!frames.is_empty(), "build_map needs at least one frame");
    assert!(window >= 1, "association window must be >= 1");
    let mut nodes = Vec::new();
    let mut frame_ranges = Vec::with_capacity(frames.len());
    for frame in frames {
        let start = nodes.len();
        nodes.extend(frame.iter().cloned());
        frame_ranges.push((start, nodes.len()));
    }

    let mut edges: BTreeSet<(usize, usize, EdgeKind)> = BTreeSet::new();
    for (f, frame) in frames.iter().enumerate() {
        let base = frame_ranges[f].0;
        for (a, b) in delaunay_intra_edges(frame) {
            let (i, j) = (base + a, base + b);
            edges.insert((i.min(j), i.max(j), EdgeKind::Intra));
        }
    }
    for k in 1..=window {
        for t in 0..frames.len().saturating_sub(k) {
            let (fa, fb) = (t, t + k);
            for (a, b) in associate(&frames[fa], &frames[fb], assoc) {
                let i = frame_ranges[fa].0 + a;
                let j = frame_ranges[fb].0 + b;
                edges.insert((i.min(j), i.max(j), EdgeKind::Inter));
            }
        }
    }

    let graph = MapGraph {
        nodes,
        edges: edges.into_iter().collect(),
        frame_ranges,
        goal_node: None,
    };
    debug_assert!(graph.check_edge_kinds().is_ok());
    graph
}

/// Shortest-path length from the goal to every node, `None` if unreachable.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalCostField {
    pub cost: Vec<Option<u32>>,
    pub goal_node: usize,
}

impl GoalCostField {
    pub fn get(&self, node: usize) -> Option<u32> {
        self.cost.get(node).copied().flatten()
    }
}

/// Single-source shortest paths under {intra: 1, inter: 0} weights. The 0/1
/// structure admits a deque search equivalent to Dijkstra: weight-0 edges
/// push front, weight-1 edges push back.
pub fn compute_goal_costs(graph: &MapGraph, goal_node: usize) -> GoalCostField {
    assert!(goal_node < graph.nodes.len(), "goal node out of range");
    let adj = graph.adjacency();
    let mut cost: Vec<Option<u32>> = vec![None; graph.nodes.len()];
    let mut deque = VecDeque::new();
    cost[goal_node] = Some(0);
    deque.push_back(goal_node);
    while let Some(u) = deque.pop_front() {
        let du = cost[u].unwrap();
        for &(v, w) in &adj[u] {
            let nd = du + w;
            if cost[v].is_none_or(|c| nd < c) {
                cost[v] = Some(nd);
                if w == 0 {
                    deque.push_front(v);
                } else {
                    deque.push_back(v);
                }
            }
        }
    }
    GoalCostField { cost, goal_node }
}
