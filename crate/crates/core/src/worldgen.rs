//! Procedural indoor worlds: BSP room splits with door openings, prism
//! furniture, and flat rug patches. Same seed and parameters give a
//! bit-identical world.

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64Mcg;

use crate::grid::{Cell, Grid};
use crate::world::{CellState, ObjectInstance, SemanticClass, World, WorldError};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct WorldGenParams {
    pub width: usize,
    pub height: usize,
    /// Meters per grid cell.
    pub cell_size: Real,
    pub max_rooms: usize,
    /// Smallest allowed room interior side, in cells.
    pub min_leaf: usize,
    /// Door opening width, in cells.
    pub door_cells: usize,
    /// Longest straight wall strip kept as one instance, in cells.
    pub wall_chunk_cells: usize,
    pub obstacle_count: usize,
    pub rug_count: usize,
    pub wall_height: Real,
    pub furniture_height: (Real, Real),
    pub fixture_height: (Real, Real),
    pub rug_height: Real,
    pub max_place_retries: usize,
}

impl Default for WorldGenParams {
    fn default() -> Self {
        Self {
            width: 80,
            height: 80,
            cell_size: 0.2,
            max_rooms: 9,
            min_leaf: 12,
            door_cells: 4,
            wall_chunk_cells: 8,
            obstacle_count: 14,
            rug_count: 2,
            wall_height: 2.5,
            furniture_height: (0.4, 0.9),
            fixture_height: (1.2, 2.0),
            rug_height: 0.02,
            max_place_retries: 60,
        }
    }
}

/// Inclusive cell rectangle.
#[derive(Clone, Copy, Debug)]
struct Region {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Region {
    fn w(&self) -> i32 {
        self.x1 - self.x0 + 1
    }
    fn h(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
}

pub fn generate_world(seed: u64, params: &WorldGenParams) -> Result<World, WorldError> {
    if params.width < 20 || params.height < 20 {
        return Err(WorldError::Generation("grid must be at least 20x20 cells".into()));
    }
    if params.max_rooms < 1 {
        return Err(WorldError::Generation("max_rooms must be >= 1".into()));
    }
    if params.min_leaf < 5 {
        return Err(WorldError::Generation("min_leaf must be >= 5".into()));
    }
    let mut rng = Pcg64Mcg::seed_from_u64(seed ^ 0x746f_706e_6176);
    let (w, h) = (params.width, params.height);
    let mut occupancy = Grid::filled(w, h, CellState::Wall);

    // Split the floor area into rooms. Interior walls are two cells thick
    // so each face belongs to exactly one room; regions describe interiors
    // only. The outer border stays a one-cell ring.
    let root = Region { x0: 1, y0: 1, x1: w as i32 - 2, y1: h as i32 - 2 };
    let mut leaves = vec![root];
    let mut splits: Vec<(Region, bool, i32)> = Vec::new(); // (pre-split region, vertical, wall start)
    while leaves.len() < params.max_rooms {
        // split the largest splittable leaf
        let min_span = (2 * params.min_leaf + 2) as i32;
        let Some(pos) = leaves
            .iter()
            .enumerate()
            .filter(|(_, r)| r.w() >= min_span || r.h() >= min_span)
            .max_by_key(|(i, r)| (r.w() * r.h(), -(*i as i64)))
            .map(|(i, _)| i)
        else {
            break;
        };
        let region = leaves.swap_remove(pos);
        let vertical = if region.w() >= min_span && region.h() >= min_span {
            rng.random_bool(0.5)
        } else {
            region.w() >= min_span
        };
        let margin = params.min_leaf as i32;
        let (a, b, line) = if vertical {
            let xs = rng.random_range(region.x0 + margin..=region.x1 - margin - 1);
            (Region { x1: xs - 1, ..region }, Region { x0: xs + 2, ..region }, xs)
        } else {
            let ys = rng.random_range(region.y0 + margin..=region.y1 - margin - 1);
            (Region { y1: ys - 1, ..region }, Region { y0: ys + 2, ..region }, ys)
        };
        splits.push((region, vertical, line));
        leaves.push(a);
        leaves.push(b);
    }

    // Carve room interiors.
    for r in &leaves {
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                *occupancy.get_mut(Cell::new(x, y)) = CellState::Free;
            }
        }
    }

    // Open a door through every split wall so the leaves stay connected.
    // Candidates must be free on both faces and are grouped into contiguous
    // stretches so a door never jumps a crossing wall.
    for (region, vertical, line) in &splits {
        let span: Vec<i32> = if *vertical {
            (region.y0..=region.y1).collect()
        } else {
            (region.x0..=region.x1).collect()
        };
        let is_open = |t: i32| -> bool {
            let (near, far) = if *vertical {
                (Cell::new(*line - 1, t), Cell::new(*line + 2, t))
            } else {
                (Cell::new(t, *line - 1), Cell::new(t, *line + 2))
            };
            *occupancy.get(near) == CellState::Free && *occupancy.get(far) == CellState::Free
        };
        let mut stretches: Vec<(i32, i32)> = Vec::new(); // inclusive (start, end)
        let mut run_start: Option<i32> = None;
        for &t in &span {
            if is_open(t) {
                run_start.get_or_insert(t);
            } else if let Some(s) = run_start.take() {
                stretches.push((s, t - 1));
            }
        }
        if let Some(s) = run_start {
            stretches.push((s, *span.last().unwrap()));
        }
        if stretches.is_empty() {
            return Err(WorldError::Generation("split wall with no door candidates".into()));
        }
        let (s, e) = stretches[rng.random_range(0..stretches.len())];
        let len = (e - s + 1) as usize;
        let width = params.door_cells.min(len) as i32;
        let t0 = s + rng.random_range(0..=(len as i32 - width));
        for t in t0..t0 + width {
            let (c1, c2) = if *vertical {
                (Cell::new(*line, t), Cell::new(*line + 1, t))
            } else {
                (Cell::new(t, *line), Cell::new(t, *line + 1))
            };
            *occupancy.get_mut(c1) = CellState::Free;
            *occupancy.get_mut(c2) = CellState::Free;
        }
    }

    let spawn = {
        let r = leaves[0];
        Cell::new((r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2)
    };

    // Place obstacles without disconnecting free space.
    let mut obstacle_rects: Vec<(Cell, i32, i32, SemanticClass, Real)> = Vec::new();
    for _ in 0..params.obstacle_count {
        let mut placed = false;
        for _ in 0..params.max_place_retries {
            let ow = rng.random_range(1..=3i32);
            let oh = rng.random_range(1..=3i32);
            let x = rng.random_range(1..w as i32 - 1 - ow);
            let y = rng.random_range(1..h as i32 - 1 - oh);
            let cells: Vec<Cell> = (0..oh)
                .flat_map(|dy| (0..ow).map(move |dx| Cell::new(x + dx, y + dy)))
                .collect();
            if cells.iter().any(|c| *occupancy.get(*c) != CellState::Free) {
                continue;
            }
            if cells.contains(&spawn) {
                continue;
            }
            for c in &cells {
                *occupancy.get_mut(*c) = CellState::Obstacle;
            }
            if free_space_connected(&occupancy, spawn) {
                let (class, height) = if rng.random_bool(0.7) {
                    let (lo, hi) = params.furniture_height;
                    (SemanticClass::Furniture, rng.random_range(lo..hi))
                } else {
                    let (lo, hi) = params.fixture_height;
                    (SemanticClass::Fixture, rng.random_range(lo..hi))
                };
                obstacle_rects.push((Cell::new(x, y), ow, oh, class, height));
                placed = true;
                break;
            }
            for c in &cells {
                *occupancy.get_mut(*c) = CellState::Free;
            }
        }
        if !placed {
            return Err(WorldError::Generation(
                "could not place obstacle without disconnecting free space".into(),
            ));
        }
    }

    // Rug patches: walkable ground overlays on free cells.
    let mut rug_rects: Vec<(Cell, i32, i32)> = Vec::new();
    'rugs: for _ in 0..params.rug_count {
        for _ in 0..params.max_place_retries {
            let ow = rng.random_range(3..=5i32);
            let oh = rng.random_range(3..=5i32);
            let x = rng.random_range(1..w as i32 - 1 - ow);
            let y = rng.random_range(1..h as i32 - 1 - oh);
            let cells: Vec<Cell> = (0..oh)
                .flat_map(|dy| (0..ow).map(move |dx| Cell::new(x + dx, y + dy)))
                .collect();
            let clear = cells.iter().all(|c| {
                *occupancy.get(*c) == CellState::Free
                    && !rug_rects.iter().any(|(rc, rw, rh)| {
                        c.x >= rc.x && c.x < rc.x + rw && c.y >= rc.y && c.y < rc.y + rh
                    })
            });
            if clear {
                rug_rects.push((Cell::new(x, y), ow, oh));
                continue 'rugs;
            }
        }
        // rugs are decoration; give up quietly if the world is too crowded
        break;
    }

    // Instance table: floor 0, wall runs, obstacles, rugs. Rug cells belong
    // to the rug instance, not the floor footprint.
    let mut surface = Grid::filled(w, h, 0u32);
    let mut instances = Vec::new();
    let on_rug = |c: Cell| {
        rug_rects
            .iter()
            .any(|(rc, rw, rh)| c.x >= rc.x && c.x < rc.x + rw && c.y >= rc.y && c.y < rc.y + rh)
    };
    let mut floor_cells = Vec::new();
    for (c, state) in occupancy.iter_cells() {
        if *state == CellState::Free && !on_rug(c) {
            floor_cells.push(c);
        }
    }
    instances.push(ObjectInstance {
        id: 0,
        class: SemanticClass::Floor,
        footprint: floor_cells,
        height: 0.0,
    });

    // Walls split into straight runs capped at wall_chunk_cells, so wall
    // objects have room-scale extent rather than spanning the building.
    let chunk = params.wall_chunk_cells.max(2);
    let mut next_id = 1u32;
    let mut claimed = Grid::filled(w, h, false);
    let mut push_wall = |cells: &[Cell], surface: &mut Grid<u32>, instances: &mut Vec<ObjectInstance>| {
        for piece in cells.chunks(chunk) {
            for rc in piece {
                *surface.get_mut(*rc) = next_id;
            }
            instances.push(ObjectInstance {
                id: next_id,
                class: SemanticClass::Wall,
                footprint: piece.to_vec(),
                height: params.wall_height,
            });
            next_id += 1;
        }
    };
    for y in 0..h as i32 {
        let mut x = 0i32;
        while x < w as i32 {
            let c = Cell::new(x, y);
            if *occupancy.get(c) == CellState::Wall && !claimed.get(c) {
                let mut run = vec![c];
                let mut nx = x + 1;
                while nx < w as i32 && *occupancy.get(Cell::new(nx, y)) == CellState::Wall {
                    run.push(Cell::new(nx, y));
                    nx += 1;
                }
                // two-cell runs are the cross-sections of thick vertical
                // walls; leave those to the vertical pass
                if run.len() >= 3 {
                    for rc in &run {
                        *claimed.get_mut(*rc) = true;
                    }
                    push_wall(&run, &mut surface, &mut instances);
                    x = nx;
                    continue;
                }
            }
            x += 1;
        }
    }
    for x in 0..w as i32 {
        let mut y = 0i32;
        while y < h as i32 {
            let c = Cell::new(x, y);
            if *occupancy.get(c) == CellState::Wall && !claimed.get(c) {
                let mut run = vec![c];
                *claimed.get_mut(c) = true;
                let mut ny = y + 1;
                while ny < h as i32 {
                    let nc = Cell::new(x, ny);
                    if *occupancy.get(nc) == CellState::Wall && !claimed.get(nc) {
                        run.push(nc);
                        *claimed.get_mut(nc) = true;
                        ny += 1;
                    } else {
                        break;
                    }
                }
                push_wall(&run, &mut surface, &mut instances);
                y = ny;
            } else {
                y += 1;
            }
        }
    }

    for (corner, ow, oh, class, height) in obstacle_rects {
        let mut footprint = Vec::new();
        for dy in 0..oh {
            for dx in 0..ow {
                let c = Cell::new(corner.x + dx, corner.y + dy);
                *surface.get_mut(c) = next_id;
                footprint.push(c);
            }
        }
        instances.push(ObjectInstance { id: next_id, class, footprint, height });
        next_id += 1;
    }

    for (corner, ow, oh) in rug_rects {
        let mut footprint = Vec::new();
        for dy in 0..oh {
            for dx in 0..ow {
                let c = Cell::new(corner.x + dx, corner.y + dy);
                *surface.get_mut(c) = next_id;
                footprint.push(c);
            }
        }
        instances.push(ObjectInstance {
            id: next_id,
            class: SemanticClass::Rug,
            footprint,
            height: params.rug_height,
        });
        next_id += 1;
    }

    let world = World {
        seed,
        cell_size: params.cell_size,
        occupancy,
        surface,
        instances,
        floor_instance_id: 0,
        spawn,
    };
    world.validate()?;
    Ok(world)
}

fn free_space_connected(occupancy: &Grid<CellState>, spawn: Cell) -> bool {
    if *occupancy.get(spawn) != CellState::Free {
        return false;
    }
    let total = occupancy.cells().iter().filter(|s| **s == CellState::Free).count();
    let mut seen = Grid::filled(occupancy.width(), occupancy.height(), false);
    let mut stack = vec![spawn];
    *seen.get_mut(spawn) = true;
    let mut count = 1usize;
    while let Some(c) = stack.pop() {
        for (dx, dy) in crate::grid::NEIGHBORS_4 {
            let n = Cell::new(c.x + dx, c.y + dy);
            if occupancy.in_bounds(n) && *occupancy.get(n) == CellState::Free && !*seen.get(n) {
                *seen.get_mut(n) = true;
                count += 1;
                stack.push(n);
            }
        }
    }
    count == total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_same_seed() {
        let params = WorldGenParams::default();
        let a = generate_world(7, &params).unwrap();
        let b = generate_world(7, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_different_layout() {
        let params = WorldGenParams::default();
        let a = generate_world(7, &params).unwrap();
        let b = generate_world(8, &params).unwrap();
        assert_ne!(a.occupancy, b.occupancy);
        a.validate().unwrap();
        b.validate().unwrap();
    }

    #[test]
    fn zero_obstacles_leaves_only_walls() {
        let params = WorldGenParams { obstacle_count: 0, rug_count: 0, ..Default::default() };
        let world = generate_world(5, &params).unwrap();
        assert!(world
            .occupancy
            .cells()
            .iter()
            .all(|s| matches!(s, CellState::Free | CellState::Wall)));
    }

    #[test]
    fn overcrowded_params_error_out() {
        let params = WorldGenParams {
            width: 20,
            height: 20,
            max_rooms: 1,
            obstacle_count: 500,
            ..Default::default()
        };
        assert!(generate_world(1, &params).is_err());
    }

    #[test]
    fn dims_below_minimum_rejected() {
        let params = WorldGenParams { width: 10, height: 10, ..Default::default() };
        assert!(generate_world(1, &params).is_err());
    }
}
