//! Shortest paths over the free-space grid: 8-connected Dijkstra with
//! diagonal cost sqrt(2) and no corner cutting (a diagonal move requires
//! both adjacent orthogonal cells to be free).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geom::{Pose2, Vec2};
use crate::grid::{Cell, Grid};
use crate::world::World;
use crate::Real;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("pose ({x:.3}, {y:.3}) is not in free space")]
    NotFree { x: Real, y: Real },
    #[error("no path between the given endpoints")]
    Unreachable,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: Real,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, idx); idx tiebreak keeps pops deterministic
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance (meters) from the nearest source to every cell; infinity where
/// unreachable. Sources may be solid (instance footprints); expansion only
/// ever moves into free cells.
pub fn distance_field(world: &World, sources: &[Cell]) -> Grid<Real> {
    let (w, h) = (world.width(), world.height());
    let mut dist = Grid::filled(w, h, Real::INFINITY);
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if world.occupancy.in_bounds(s) && *dist.get(s) > 0.0 {
            *dist.get_mut(s) = 0.0;
            heap.push(HeapEntry { cost: 0.0, idx: dist.idx(s) });
        }
    }
    let cs = world.cell_size;
    let diag = cs * (2.0 as Real).sqrt();
    while let Some(HeapEntry { cost, idx }) = heap.pop() {
        if cost > dist.cells()[idx] {
            continue;
        }
        let c = Cell::new((idx % w) as i32, (idx / w) as i32);
        for (dx, dy) in crate::grid::NEIGHBORS_8 {
            let n = Cell::new(c.x + dx, c.y + dy);
            if !world.is_free(n) {
                continue;
            }
            let step = if dx != 0 && dy != 0 {
                // no corner cutting
                if !world.is_free(Cell::new(c.x + dx, c.y)) || !world.is_free(Cell::new(c.x, c.y + dy)) {
                    continue;
                }
                diag
            } else {
                cs
            };
            let nd = cost + step;
            if nd < *dist.get(n) {
                *dist.get_mut(n) = nd;
                heap.push(HeapEntry { cost: nd, idx: dist.idx(n) });
            }
        }
    }
    dist
}

/// Geodesic distance in meters between two free poses.
pub fn geodesic_distance(world: &World, a: Pose2<Real>, b: Pose2<Real>) -> Result<Real, GeodesicError> {
    let ca = world.cell_of(a.position());
    let cb = world.cell_of(b.position());
    if !world.is_free(ca) {
        return Err(GeodesicError::NotFree { x: a.x, y: a.y });
    }
    if !world.is_free(cb) {
        return Err(GeodesicError::NotFree { x: b.x, y: b.y });
    }
    let dist = distance_field(world, &[ca]);
    let d = *dist.get(cb);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(GeodesicError::Unreachable)
    }
}

/// Grid path (cells) from `a` to `b`, shortest under the same metric.
fn grid_path(world: &World, a: Cell, b: Cell) -> Option<Vec<Cell>> {
    let (w, _h) = (world.width(), world.height());
    let mut dist = Grid::filled(world.width(), world.height(), Real::INFINITY);
    let mut parent: Grid<Option<Cell>> = Grid::filled(world.width(), world.height(), None);
    let mut heap = BinaryHeap::new();
    *dist.get_mut(a) = 0.0;
    heap.push(HeapEntry { cost: 0.0, idx: dist.idx(a) });
    let cs = world.cell_size;
    let diag = cs * (2.0 as Real).sqrt();
    while let Some(HeapEntry { cost, idx }) = heap.pop() {
        if cost > dist.cells()[idx] {
            continue;
        }
        let c = Cell::new((idx % w) as i32, (idx / w) as i32);
        if c == b {
            break;
        }
        for (dx, dy) in crate::grid::NEIGHBORS_8 {
            let n = Cell::new(c.x + dx, c.y + dy);
            if !world.is_free(n) {
                continue;
            }
            let step = if dx != 0 && dy != 0 {
                if !world.is_free(Cell::new(c.x + dx, c.y)) || !world.is_free(Cell::new(c.x, c.y + dy)) {
                    continue;
                }
                diag
            } else {
                cs
            };
            let nd = cost + step;
            if nd < *dist.get(n) {
                *dist.get_mut(n) = nd;
                *parent.get_mut(n) = Some(c);
                heap.push(HeapEntry { cost: nd, idx: dist.idx(n) });
            }
        }
    }
    if !dist.get(b).is_finite() {
        return None;
    }
    let mut path = vec![b];
    let mut cur = b;
    while let Some(p) = parent.get(cur) {
        path.push(*p);
        cur = *p;
    }
    path.reverse();
    Some(path)
}

/// Poses sampled every `spacing` meters along the geodesic path from `a`
/// to `b`, heading tangent to the path. The first pose sits exactly at `a`;
/// the last lands within `spacing` of `b`.
pub fn shortest_pose_path(
    world: &World,
    a: Pose2<Real>,
    b: Pose2<Real>,
    spacing: Real,
) -> Result<Vec<Pose2<Real>>, GeodesicError> {
    debug_assert!(spacing > 0.0);
    let ca = world.cell_of(a.position());
    let cb = world.cell_of(b.position());
    if !world.is_free(ca) {
        return Err(GeodesicError::NotFree { x: a.x, y: a.y });
    }
    if !world.is_free(cb) {
        return Err(GeodesicError::NotFree { x: b.x, y: b.y });
    }
    if ca == cb {
        return Ok(vec![a]);
    }
    let cells = grid_path(world, ca, cb).ok_or(GeodesicError::Unreachable)?;

    // polyline: exact start -> interior cell centers -> exact goal
    let mut pts: Vec<Vec2<Real>> = Vec::with_capacity(cells.len() + 1);
    pts.push(a.position());
    for c in &cells[1..cells.len() - 1] {
        pts.push(world.cell_center(*c));
    }
    pts.push(b.position());

    let mut cum = vec![0.0];
    for i in 1..pts.len() {
        cum.push(cum[i - 1] + pts[i].dist(pts[i - 1]));
    }
    let total = *cum.last().unwrap();
    let mut samples = Vec::new();
    let n = (total / spacing).floor() as usize;
    for k in 0..=n {
        let target = k as Real * spacing;
        let mut seg = 1;
        while seg < cum.len() - 1 && cum[seg] < target {
            seg += 1;
        }
        let seg_len = cum[seg] - cum[seg - 1];
        let t = if seg_len > 0.0 { (target - cum[seg - 1]) / seg_len } else { 0.0 };
        let p = Vec2::new(
            pts[seg - 1].x + (pts[seg].x - pts[seg - 1].x) * t,
            pts[seg - 1].y + (pts[seg].y - pts[seg - 1].y) * t,
        );
        samples.push(p);
    }
    if samples.len() < 2 {
        samples.push(b.position());
    }

    let mut poses = Vec::with_capacity(samples.len());
    for i in 0..samples.len() {
        let (from, to) = if i + 1 < samples.len() {
            (samples[i], samples[i + 1])
        } else {
            (samples[i - 1], samples[i])
        };
        let theta = (to.y - from.y).atan2(to.x - from.x);
        poses.push(Pose2::new(samples[i].x, samples[i].y, theta));
    }
    Ok(poses)
}
