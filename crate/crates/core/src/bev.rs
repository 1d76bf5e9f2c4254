//! Metric local planning in a bird's-eye-view grid around the robot.
//!
//! Traversable image segments are unprojected through the depth image onto
//! the ground plane, rasterized into a grid, and turned into a cost map:
//! an exact Euclidean distance transform to the nearest non-traversable
//! cell, inverted and saturated so open space costs zero, then smoothed
//! with a box filter. Dijkstra over the traversable cells yields waypoints
//! toward the sub-goal point; a proportional controller follows them.
//!
//! BEV frame: `forward` along the camera axis, `lateral` positive to the
//! robot's right (the +u image direction), robot at the origin.

use thiserror::Error;

use crate::agent::ControlCommand;
use crate::camera::CameraModel;
use crate::render::Observation;
use crate::scalar::{lit, Scalar};
use crate::segment::Segment;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BevPoint<T> {
    pub forward: T,
    pub lateral: T,
}

impl<T: Scalar> BevPoint<T> {
    pub fn new(forward: T, lateral: T) -> Self {
        Self { forward, lateral }
    }

    pub fn dist(self, rhs: Self) -> T {
        let df = self.forward - rhs.forward;
        let dl = self.lateral - rhs.lateral;
        (df * df + dl * dl).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BevParams<T> {
    /// Meters per BEV cell.
    pub resolution: T,
    /// Grid reach ahead of the robot, meters.
    pub forward_extent: T,
    /// Grid reach to each side, meters.
    pub lateral_extent: T,
    /// Distance-transform saturation: cost is zero beyond this clearance.
    pub d_sat: T,
    /// Box-filter kernel size, odd.
    pub box_filter: usize,
    /// Goal snapping radius for planning, meters.
    pub snap_radius: T,
    /// Radius around the robot marked traversable to bridge the camera's
    /// near-field blind cone; must exceed the first visible floor depth.
    pub seed_radius: T,
    /// Observed-blocked cells grow by this much so plans keep the robot
    /// body clear of obstacle faces.
    pub inflation_radius: T,
}

impl Default for BevParams<Real> {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            forward_extent: 6.0,
            lateral_extent: 3.0,
            d_sat: 0.5,
            box_filter: 5,
            snap_radius: 0.5,
            seed_radius: 0.6,
            inflation_radius: 0.2,
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BevError {
    #[error("no traversable pixels project into the BEV extent")]
    EmptyTraversability,
    #[error("sub-goal segment has no valid depth to project")]
    SubgoalProjectionFailed,
}

/// Binary image mask over traversable pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct TraversabilityMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl TraversabilityMask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Union of the pixels of segments the injected predicate accepts. The
/// predicate stands in for an open-set semantic scorer; here it is a class
/// lookup over instance ids.
pub fn classify_traversable(
    segments: &[Segment],
    width: u32,
    height: u32,
    is_traversable: impl Fn(u32) -> bool,
) -> TraversabilityMask {
    let mut bits = vec![false; (width * height) as usize];
    for seg in segments {
        if !is_traversable(seg.instance_id) {
            continue;
        }
        for run in &seg.pixel_runs {
            let base = (run.row * width + run.start) as usize;
            for b in &mut bits[base..base + run.len as usize] {
                *b = true;
            }
        }
    }
    TraversabilityMask { width, height, bits }
}

/// Pinhole unprojection of column `u` at planar depth `z` onto the ground
/// plane; the pixel row only encodes height, which the BEV discards.
#[inline]
pub fn unproject_pixel<T: Scalar>(camera: &CameraModel<T>, u: T, z: T) -> BevPoint<T> {
    BevPoint::new(z, (u - camera.cx) * z / camera.fx)
}

/// Inverse of [`unproject_pixel`]: the column where a BEV point appears.
#[inline]
pub fn project_point<T: Scalar>(camera: &CameraModel<T>, p: BevPoint<T>) -> T {
    camera.cx + p.lateral * camera.fx / p.forward
}

fn in_extent<T: Scalar>(p: BevPoint<T>, params: &BevParams<T>) -> bool {
    p.forward >= T::zero()
        && p.forward <= params.forward_extent
        && p.lateral.abs() <= params.lateral_extent
}

/// Unproject every masked pixel with positive depth. Depth gaps between
/// vertically adjacent pixels of the same traversable surface are filled by
/// sampling along the ray: at range the per-row depth spacing exceeds the
/// BEV resolution, and the surface between two adjacent samples is ground
/// by construction. Points outside the BEV extent are dropped.
pub fn project_traversable(
    mask: &TraversabilityMask,
    obs: &Observation,
    camera: &CameraModel<Real>,
    params: &BevParams<Real>,
) -> Vec<BevPoint<Real>> {
    let mut points = Vec::new();
    let w = mask.width as usize;
    let h = mask.height as usize;
    let step = params.resolution * 0.5;
    for u in 0..w {
        let x_ndc = camera.x_ndc(u as Real);
        // nearest (bottom) to farthest; remember the previous row's depth
        // to bridge the radial gap when both rows are traversable
        let mut prev_z: Option<Real> = None;
        for v in (0..h).rev() {
            if !mask.bits[v * w + u] {
                prev_z = None;
                continue;
            }
            let z = obs.depth[v * w + u];
            if z <= 0.0 {
                prev_z = None;
                continue;
            }
            let p = BevPoint::new(z, z * x_ndc);
            if in_extent(p, params) {
                points.push(p);
            }
            if let Some(z0) = prev_z {
                let mut t = z0 + step;
                while t < z {
                    let q = BevPoint::new(t, t * x_ndc);
                    if in_extent(q, params) {
                        points.push(q);
                    }
                    t += step;
                }
            }
            prev_z = Some(z);
        }
    }
    points
}

/// Ground locations observed to be blocked: below the horizon, any
/// non-traversable pixel marks where an obstacle or wall face meets the
/// floor, at its planar depth.
pub fn project_blocked(
    mask: &TraversabilityMask,
    obs: &Observation,
    camera: &CameraModel<Real>,
    params: &BevParams<Real>,
) -> Vec<BevPoint<Real>> {
    let mut points = Vec::new();
    let w = mask.width as usize;
    let v0 = (camera.cy.floor() as usize + 1).min(mask.height as usize);
    for v in v0..mask.height as usize {
        for u in 0..w {
            if mask.bits[v * w + u] {
                continue;
            }
            let z = obs.depth[v * w + u];
            if z <= 0.0 {
                continue;
            }
            let p = unproject_pixel(camera, u as Real, z);
            if in_extent(p, params) {
                points.push(p);
            }
        }
    }
    points
}

/// The farthest projected point contained in the sub-goal segment; if the
/// whole segment projects beyond the extent, the extent boundary along the
/// centroid bearing.
pub fn select_subgoal_point(
    segment: &Segment,
    obs: &Observation,
    camera: &CameraModel<Real>,
    params: &BevParams<Real>,
) -> Result<BevPoint<Real>, BevError> {
    let mut any_valid = false;
    let mut best: Option<BevPoint<Real>> = None;
    for (u, v) in segment.pixels() {
        let z = obs.depth_at(u, v);
        if z <= 0.0 {
            continue;
        }
        any_valid = true;
        let p = unproject_pixel(camera, u as Real, z);
        if in_extent(p, params) && best.is_none_or(|b| p.forward > b.forward) {
            best = Some(p);
        }
    }
    if let Some(p) = best {
        return Ok(p);
    }
    if !any_valid {
        return Err(BevError::SubgoalProjectionFailed);
    }
    // clamp to the extent boundary along the centroid bearing
    let t = (segment.centroid_px.0 - camera.cx) / camera.fx;
    let s = if t == 0.0 {
        params.forward_extent
    } else {
        params.forward_extent.min(params.lateral_extent / t.abs())
    };
    Ok(BevPoint::new(s, s * t))
}

pub const BLOCKED: Real = Real::INFINITY;

#[derive(Clone, Debug, PartialEq)]
pub struct BevCostMap<T> {
    pub params: BevParams<T>,
    /// Rows: forward cells.
    pub rows: usize,
    /// Columns: lateral cells.
    pub cols: usize,
    pub traversable: Vec<bool>,
    /// Exact Euclidean distance (meters) to the nearest non-traversable
    /// cell (grid border counts), before saturation and smoothing.
    pub dist: Vec<T>,
    /// Smoothed planning cost; infinity on non-traversable cells.
    pub cost: Vec<T>,
    /// (row, col) of the robot.
    pub robot_cell: (usize, usize),
}

impl<T: Scalar> BevCostMap<T> {
    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn cell_center(&self, row: usize, col: usize) -> BevPoint<T> {
        let half = lit::<T>(0.5);
        BevPoint::new(
            (T::from_usize(row).unwrap() + half) * self.params.resolution,
            (T::from_usize(col).unwrap() + half) * self.params.resolution - self.params.lateral_extent,
        )
    }

    pub fn point_cell(&self, p: BevPoint<T>) -> Option<(usize, usize)> {
        let row = (p.forward / self.params.resolution).floor();
        let col = ((p.lateral + self.params.lateral_extent) / self.params.resolution).floor();
        if row < T::zero() || col < T::zero() {
            return None;
        }
        let (row, col) = (row.to_usize()?, col.to_usize()?);
        (row < self.rows && col < self.cols).then_some((row, col))
    }
}

/// Rasterize traversable points, apply observed-blocked evidence with
/// body-radius inflation, seed the robot's blind disc wherever nothing was
/// observed blocked, and compute the saturated, box-smoothed clearance
/// cost.
pub fn build_costmap<T: Scalar>(
    points: &[BevPoint<T>],
    blocked_points: &[BevPoint<T>],
    params: &BevParams<T>,
) -> Result<BevCostMap<T>, BevError> {
    assert!(params.box_filter % 2 == 1, "box filter must be odd");
    let res = params.resolution;
    let rows = (params.forward_extent / res).round().to_usize().unwrap().max(1);
    let cols = (lit::<T>(2.0) * params.lateral_extent / res).round().to_usize().unwrap().max(1);
    let rasterize = |p: &BevPoint<T>| -> Option<(usize, usize)> {
        let row = (p.forward / res).floor();
        let col = ((p.lateral + params.lateral_extent) / res).floor();
        if row < T::zero() || col < T::zero() {
            return None;
        }
        let (r, c) = (row.to_usize()?, col.to_usize()?);
        (r < rows && c < cols).then_some((r, c))
    };

    let mut traversable = vec![false; rows * cols];
    let mut any = false;
    for p in points {
        if let Some((r, c)) = rasterize(p) {
            traversable[r * cols + c] = true;
            any = true;
        }
    }
    if !any {
        return Err(BevError::EmptyTraversability);
    }

    // rasterize blocked evidence first, then inflate the distinct cells by
    // the body radius
    let mut observed = vec![false; rows * cols];
    for p in blocked_points {
        if let Some((r, c)) = rasterize(p) {
            observed[r * cols + c] = true;
        }
    }
    let mut blocked = observed.clone();
    let infl = (params.inflation_radius / res).to_f64().unwrap();
    if infl > 0.0 {
        let reach = infl.ceil() as i64;
        let mut disc: Vec<(i64, i64)> = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                if ((dr * dr + dc * dc) as f64).sqrt() <= infl {
                    disc.push((dr, dc));
                }
            }
        }
        for r in 0..rows {
            for c in 0..cols {
                if !observed[r * cols + c] {
                    continue;
                }
                for &(dr, dc) in &disc {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols {
                        blocked[nr as usize * cols + nc as usize] = true;
                    }
                }
            }
        }
    }

    // the camera cannot see the floor under the robot; seed the blind disc
    // only where nothing was observed blocked
    let robot_cell = (0usize, cols / 2);
    for r in 0..rows {
        for c in 0..cols {
            let center = BevPoint::new(
                (T::from_usize(r).unwrap() + lit(0.5)) * res,
                (T::from_usize(c).unwrap() + lit(0.5)) * res - params.lateral_extent,
            );
            let d = (center.forward * center.forward + center.lateral * center.lateral).sqrt();
            if d <= params.seed_radius {
                traversable[r * cols + c] = true;
            }
        }
    }
    for i in 0..rows * cols {
        if blocked[i] {
            traversable[i] = false;
        }
    }

    let dist = distance_transform(&traversable, rows, cols, res);

    // saturated inverse clearance, then separable box smoothing over a
    // d_sat-padded field so cells beyond the grid contribute full cost and
    // borders stay expensive
    let pre: Vec<T> = dist
        .iter()
        .map(|&d| (params.d_sat - d.min(params.d_sat)).max(T::zero()))
        .collect();
    let k = params.box_filter as i64;
    let half = (k / 2) as usize;
    let norm = T::from_i64(k * k).unwrap();
    let horiz = box_pass(&pre, rows, cols, half, params.d_sat, false);
    let both = box_pass(&horiz, rows, cols, half, params.d_sat * T::from_i64(k).unwrap(), true);
    let mut cost = vec![T::infinity(); rows * cols];
    for i in 0..rows * cols {
        if traversable[i] {
            cost[i] = both[i] / norm;
        }
    }

    Ok(BevCostMap { params: *params, rows, cols, traversable, dist, cost, robot_cell })
}

/// One axis of the separable box sum: windowed sums of length `2*half+1`
/// along rows (or columns when `vertical`), out-of-range positions counted
/// as `pad`.
fn box_pass<T: Scalar>(
    field: &[T],
    rows: usize,
    cols: usize,
    half: usize,
    pad: T,
    vertical: bool,
) -> Vec<T> {
    let mut out = vec![T::zero(); rows * cols];
    let (outer, inner) = if vertical { (cols, rows) } else { (rows, cols) };
    let mut line = vec![T::zero(); inner];
    for o in 0..outer {
        for (i, v) in line.iter_mut().enumerate() {
            *v = if vertical { field[i * cols + o] } else { field[o * cols + i] };
        }
        for i in 0..inner {
            let mut acc = T::zero();
            for j in i as i64 - half as i64..=i as i64 + half as i64 {
                if j < 0 || j >= inner as i64 {
                    acc += pad;
                } else {
                    acc += line[j as usize];
                }
            }
            if vertical {
                out[i * cols + o] = acc;
            } else {
                out[o * cols + i] = acc;
            }
        }
    }
    out
}

/// Exact Euclidean distance transform (Felzenszwalb-Huttenlocher). Sites
/// are the non-traversable cells plus a virtual ring just outside the grid,
/// so the border acts blocked. The column pass is a two-scan nearest-site
/// search (sites guaranteed by the pad ring); the row pass is the parabola
/// envelope over the squared column distances.
pub fn distance_transform<T: Scalar>(
    traversable: &[bool],
    rows: usize,
    cols: usize,
    resolution: T,
) -> Vec<T> {
    let (pr, pc) = (rows + 2, cols + 2);
    let mut site = vec![true; pr * pc];
    for r in 0..rows {
        for c in 0..cols {
            site[(r + 1) * pc + (c + 1)] = !traversable[r * cols + c];
        }
    }

    // squared vertical distance to the nearest site in each column
    let mut colsq = vec![0.0; pr * pc];
    for c in 0..pc {
        let mut d = pr; // pad row 0 is a site, so this is overwritten
        for r in 0..pr {
            d = if site[r * pc + c] { 0 } else { d + 1 };
            colsq[r * pc + c] = (d * d) as Real;
        }
        let mut d = pr;
        for r in (0..pr).rev() {
            d = if site[r * pc + c] { 0 } else { d + 1 };
            colsq[r * pc + c] = colsq[r * pc + c].min((d * d) as Real);
        }
    }

    // parabola envelope along each row
    let mut sq = vec![0.0; pr * pc];
    let mut scratch = vec![0.0; pc];
    for r in 0..pr {
        edt_1d(&colsq[r * pc..(r + 1) * pc], &mut scratch);
        sq[r * pc..(r + 1) * pc].copy_from_slice(&scratch);
    }

    let mut out = vec![T::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let d2 = sq[(r + 1) * pc + (c + 1)];
            out[r * cols + c] = T::from_f64(d2.sqrt()).unwrap() * resolution;
        }
    }
    out
}

/// 1D squared-distance lower envelope of parabolas; `f` must be finite.
fn edt_1d(f: &[Real], d: &mut [Real]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = Real::NEG_INFINITY;
    z[1] = Real::INFINITY;
    let intersect = |q: usize, p: usize| -> Real {
        ((f[q] + (q * q) as Real) - (f[p] + (p * p) as Real)) / (2.0 * (q as Real - p as Real))
    };
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = Real::INFINITY;
    }
    let mut k = 0usize;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as Real {
            k += 1;
        }
        let p = v[k];
        let dq = q as Real - p as Real;
        *out = dq * dq + f[p];
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalPlan<T> {
    /// Cell-center waypoints from the robot cell to the snapped goal cell;
    /// empty when infeasible.
    pub waypoints: Vec<BevPoint<T>>,
    pub subgoal_point: BevPoint<T>,
    pub feasible: bool,
}

impl<T: Scalar> LocalPlan<T> {
    pub fn infeasible(subgoal_point: BevPoint<T>) -> Self {
        Self { waypoints: Vec::new(), subgoal_point, feasible: false }
    }
}

/// Dijkstra over the traversable 8-connected grid. Edge cost is the step
/// length scaled by one plus the mean endpoint cost, so the obstacle-free
/// optimum is the geometric shortest path. The goal is snapped to the
/// nearest traversable cell within the snap radius.
pub fn plan_path<T: Scalar>(costmap: &BevCostMap<T>, goal: BevPoint<T>) -> LocalPlan<T> {
    let (rows, cols) = (costmap.rows, costmap.cols);
    let mut goal_cell: Option<(usize, usize)> = None;
    let mut best_d = costmap.params.snap_radius;
    for r in 0..rows {
        for c in 0..cols {
            if !costmap.traversable[r * cols + c] {
                continue;
            }
            let d = costmap.cell_center(r, c).dist(goal);
            if d < best_d || (goal_cell.is_none() && d <= best_d) {
                best_d = d;
                goal_cell = Some((r, c));
            }
        }
    }
    let Some(goal_cell) = goal_cell else {
        return LocalPlan::infeasible(goal);
    };

    let n = rows * cols;
    let mut dist = vec![T::infinity(); n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let start = costmap.idx(costmap.robot_cell.0, costmap.robot_cell.1);
    let goal_idx = costmap.idx(goal_cell.0, goal_cell.1);
    dist[start] = T::zero();

    use std::cmp::Ordering;
    use std::collections::BinaryHeap;
    struct Entry<T> {
        cost: T,
        idx: usize,
    }
    impl<T: Scalar> PartialEq for Entry<T> {
        fn eq(&self, other: &Self) -> bool {
            self.cmp(other) == Ordering::Equal
        }
    }
    impl<T: Scalar> Eq for Entry<T> {}
    impl<T: Scalar> Ord for Entry<T> {
        fn cmp(&self, other: &Self) -> Ordering {
            other
                .cost
                .partial_cmp(&self.cost)
                .unwrap_or(Ordering::Equal)
                .then_with(|| other.idx.cmp(&self.idx))
        }
    }
    impl<T: Scalar> PartialOrd for Entry<T> {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    let res = costmap.params.resolution;
    let diag = res * lit::<T>(std::f64::consts::SQRT_2);
    let mut heap = BinaryHeap::new();
    heap.push(Entry { cost: T::zero(), idx: start });
    while let Some(Entry { cost, idx }) = heap.pop() {
        if cost > dist[idx] {
            continue;
        }
        if idx == goal_idx {
            break;
        }
        let (r, c) = (idx / cols, idx % cols);
        for (dr, dc) in crate::grid::NEIGHBORS_8 {
            let (nr, nc) = (r as i32 + dr, c as i32 + dc);
            if nr < 0 || nc < 0 || nr as usize >= rows || nc as usize >= cols {
                continue;
            }
            let nidx = nr as usize * cols + nc as usize;
            if !costmap.traversable[nidx] {
                continue;
            }
            let step = if dr != 0 && dc != 0 {
                let o1 = (r as i32 + dr) as usize * cols + c;
                let o2 = r * cols + (c as i32 + dc) as usize;
                if !costmap.traversable[o1] || !costmap.traversable[o2] {
                    continue;
                }
                diag
            } else {
                res
            };
            let blend = T::one() + (costmap.cost[idx] + costmap.cost[nidx]) / lit::<T>(2.0);
            let nd = cost + step * blend;
            if nd < dist[nidx] {
                dist[nidx] = nd;
                parent[nidx] = Some(idx);
                heap.push(Entry { cost: nd, idx: nidx });
            }
        }
    }

    if dist[goal_idx].is_infinite() {
        return LocalPlan::infeasible(goal);
    }
    let mut cells = vec![goal_idx];
    let mut cur = goal_idx;
    while let Some(p) = parent[cur] {
        cells.push(p);
        cur = p;
    }
    cells.reverse();
    let waypoints = cells
        .iter()
        .map(|&i| costmap.cell_center(i / cols, i % cols))
        .collect();
    LocalPlan { waypoints, subgoal_point: goal, feasible: true }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FollowParams<T> {
    /// Cruise speed, m/s.
    pub v_fixed: T,
    /// Proportional heading gain.
    pub k_p: T,
    /// Arc-length lookahead along the plan, meters.
    pub lookahead: T,
    pub omega_max: T,
    /// Bearing beyond which the robot turns in place, radians.
    pub turn_in_place: T,
}

impl Default for FollowParams<Real> {
    fn default() -> Self {
        Self {
            v_fixed: 0.25,
            k_p: 1.5,
            lookahead: 0.5,
            omega_max: 1.0,
            turn_in_place: std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Proportional line following: steer at the first waypoint at least
/// `lookahead` along the plan arc, holding cruise speed; drop the linear
/// velocity to zero when badly misaligned.
pub fn follow_path<T: Scalar>(plan: &LocalPlan<T>, params: &FollowParams<T>) -> ControlCommand<T> {
    debug_assert!(plan.feasible, "follow_path requires a feasible plan");
    let Some(first) = plan.waypoints.first() else {
        return ControlCommand::stop();
    };
    let mut target = *plan.waypoints.last().unwrap();
    let mut arc = T::zero();
    let mut prev = *first;
    for wp in &plan.waypoints[1..] {
        arc += wp.dist(prev);
        prev = *wp;
        if arc >= params.lookahead {
            target = *wp;
            break;
        }
    }
    let bearing = target.lateral.atan2(target.forward);
    let yaw = (params.k_p * bearing).max(-params.omega_max).min(params.omega_max);
    let v = if bearing.abs() > params.turn_in_place { T::zero() } else { params.v_fixed };
    ControlCommand::new(v, yaw)
}
