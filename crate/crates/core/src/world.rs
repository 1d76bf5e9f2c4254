//! Static 2.5D environments: an occupancy grid of walls and prism obstacles
//! on a flat floor, plus the object instance table the renderer and the
//! benchmark query.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geom::Vec2;
use crate::grid::{Cell, Grid, NEIGHBORS_4};
use crate::Real;

/// Instance id of "nothing": sky pixels in renders.
pub const NO_INSTANCE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemanticClass {
    Floor,
    Wall,
    Ceiling,
    Furniture,
    Fixture,
    Rug,
}

impl SemanticClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SemanticClass::Floor => "Floor",
            SemanticClass::Wall => "Wall",
            SemanticClass::Ceiling => "Ceiling",
            SemanticClass::Furniture => "Furniture",
            SemanticClass::Fixture => "Fixture",
            SemanticClass::Rug => "Rug",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "Floor" => SemanticClass::Floor,
            "Wall" => SemanticClass::Wall,
            "Ceiling" => SemanticClass::Ceiling,
            "Furniture" => SemanticClass::Furniture,
            "Fixture" => SemanticClass::Fixture,
            "Rug" => SemanticClass::Rug,
            _ => return None,
        })
    }
}

/// What occupies a grid cell. Rugs stay `Free`: they are walkable overlays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellState {
    Free,
    Wall,
    Obstacle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectInstance {
    pub id: u32,
    pub class: SemanticClass,
    pub footprint: Vec<Cell>,
    /// Prism height in meters; floors use 0.
    pub height: Real,
}

#[derive(Error, Debug)]
pub enum WorldError {
    #[error("world invariant violated: {0}")]
    Invariant(String),
    #[error("world generation failed: {0}")]
    Generation(String),
    #[error("malformed world file at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Immutable environment. `surface` resolves every cell to the instance a
/// ray or a footstep meets there: wall run or obstacle id on solid cells,
/// floor or rug id on free cells.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub seed: u64,
    pub cell_size: Real,
    pub occupancy: Grid<CellState>,
    pub surface: Grid<u32>,
    pub instances: Vec<ObjectInstance>,
    pub floor_instance_id: u32,
    pub spawn: Cell,
}

impl World {
    pub fn width(&self) -> usize {
        self.occupancy.width()
    }

    pub fn height(&self) -> usize {
        self.occupancy.height()
    }

    pub fn cell_of(&self, p: Vec2<Real>) -> Cell {
        Cell::new((p.x / self.cell_size).floor() as i32, (p.y / self.cell_size).floor() as i32)
    }

    pub fn cell_center(&self, c: Cell) -> Vec2<Real> {
        Vec2::new((c.x as Real + 0.5) * self.cell_size, (c.y as Real + 0.5) * self.cell_size)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        matches!(self.occupancy.try_get(c), Some(CellState::Free))
    }

    pub fn instance(&self, id: u32) -> Option<&ObjectInstance> {
        self.instances.get(id as usize).filter(|inst| inst.id == id)
    }

    pub fn class_of(&self, id: u32) -> Option<SemanticClass> {
        self.instance(id).map(|i| i.class)
    }

    /// True when a disc of `radius` centered at `p` overlaps no solid cell
    /// and stays inside the grid.
    pub fn disc_is_free(&self, p: Vec2<Real>, radius: Real) -> bool {
        let lo = self.cell_of(Vec2::new(p.x - radius, p.y - radius));
        let hi = self.cell_of(Vec2::new(p.x + radius, p.y + radius));
        for cy in lo.y..=hi.y {
            for cx in lo.x..=hi.x {
                let c = Cell::new(cx, cy);
                let solid = !matches!(self.occupancy.try_get(c), Some(CellState::Free));
                if !solid {
                    continue;
                }
                // distance from p to the cell rectangle
                let x0 = cx as Real * self.cell_size;
                let y0 = cy as Real * self.cell_size;
                let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + self.cell_size));
                let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + self.cell_size));
                if (dx * dx + dy * dy).sqrt() < radius {
                    return false;
                }
            }
        }
        true
    }

    /// Every free cell reachable from `spawn` (4-connectivity).
    pub fn reachable_free_cells(&self) -> HashSet<Cell> {
        let mut seen = HashSet::new();
        if !self.is_free(self.spawn) {
            return seen;
        }
        let mut stack = vec![self.spawn];
        seen.insert(self.spawn);
        while let Some(c) = stack.pop() {
            for (dx, dy) in NEIGHBORS_4 {
                let n = Cell::new(c.x + dx, c.y + dy);
                if self.is_free(n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen
    }

    /// Check every structural invariant; generation and parsing both end here.
    pub fn validate(&self) -> Result<(), WorldError> {
        let inv = |msg: String| Err(WorldError::Invariant(msg));
        if self.instances.is_empty() {
            return inv("no instances".into());
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.id as usize != i {
                return inv(format!("instance ids not dense at {}", inst.id));
            }
            if inst.footprint.is_empty() {
                return inv(format!("instance {} has empty footprint", inst.id));
            }
            if inst.class != SemanticClass::Floor && inst.height <= 0.0 {
                return inv(format!("instance {} has non-positive height", inst.id));
            }
        }
        if self.class_of(self.floor_instance_id) != Some(SemanticClass::Floor) {
            return inv("floor_instance_id is not a Floor instance".into());
        }
        // every solid cell maps to an instance of the right kind
        for (c, state) in self.occupancy.iter_cells() {
            let id = *self.surface.get(c);
            let class = self.class_of(id);
            match state {
                CellState::Wall if class != Some(SemanticClass::Wall) => {
                    return inv(format!("wall cell {c:?} surface {id} is not Wall"));
                }
                CellState::Obstacle
                    if !matches!(
                        class,
                        Some(SemanticClass::Furniture) | Some(SemanticClass::Fixture)
                    ) =>
                {
                    return inv(format!("obstacle cell {c:?} surface {id} is not an obstacle"));
                }
                CellState::Free
                    if !matches!(
                        class,
                        Some(SemanticClass::Floor) | Some(SemanticClass::Rug)
                    ) =>
                {
                    return inv(format!("free cell {c:?} surface {id} is not ground"));
                }
                _ => {}
            }
        }
        // obstacle instance ids appear exactly once and cover the grid's obstacle cells
        let mut grid_ids = HashSet::new();
        for (c, state) in self.occupancy.iter_cells() {
            if *state == CellState::Obstacle {
                grid_ids.insert(*self.surface.get(c));
            }
        }
        for id in &grid_ids {
            if self.instance(*id).is_none() {
                return inv(format!("obstacle id {id} missing from instance table"));
            }
        }
        // footprints agree with the surface grid
        for inst in &self.instances {
            for c in &inst.footprint {
                if !self.occupancy.in_bounds(*c) {
                    return inv(format!("instance {} footprint out of bounds", inst.id));
                }
                if *self.surface.get(*c) != inst.id {
                    return inv(format!("instance {} footprint disagrees with surface", inst.id));
                }
            }
        }
        // free space is one connected component
        let reach = self.reachable_free_cells();
        let free_total = self
            .occupancy
            .cells()
            .iter()
            .filter(|s| **s == CellState::Free)
            .count();
        if reach.len() != free_total {
            return inv(format!(
                "free space disconnected: {} reachable of {}",
                reach.len(),
                free_total
            ));
        }
        Ok(())
    }

    /// Versioned text encoding; `parse` inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "worldgrid/1");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "cell_size {}", self.cell_size);
        let _ = writeln!(out, "dims {} {}", self.width(), self.height());
        let _ = writeln!(out, "floor {}", self.floor_instance_id);
        let _ = writeln!(out, "spawn {} {}", self.spawn.x, self.spawn.y);
        let _ = writeln!(out, "occupancy");
        for y in 0..self.height() {
            let mut row = String::with_capacity(self.width());
            for x in 0..self.width() {
                row.push(match self.occupancy.get(Cell::new(x as i32, y as i32)) {
                    CellState::Free => '.',
                    CellState::Wall => '#',
                    CellState::Obstacle => 'o',
                });
            }
            let _ = writeln!(out, "{row}");
        }
        let _ = writeln!(out, "surface");
        for y in 0..self.height() {
            let ids: Vec<String> = (0..self.width())
                .map(|x| self.surface.get(Cell::new(x as i32, y as i32)).to_string())
                .collect();
            let _ = writeln!(out, "{}", ids.join(" "));
        }
        let _ = writeln!(out, "instances {}", self.instances.len());
        for inst in &self.instances {
            let _ = writeln!(out, "inst {} {} {}", inst.id, inst.class.as_str(), inst.height);
        }
        out
    }

    pub fn parse(text: &str) -> Result<World, WorldError> {
        let mut lines = text.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String), WorldError> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.to_string()))
                .ok_or_else(|| WorldError::Parse { line: 0, msg: format!("missing {expect}") })
        };
        let err = |line: usize, msg: &str| WorldError::Parse { line, msg: msg.into() };

        let (l, header) = next("header")?;
        if header.trim() != "worldgrid/1" {
            return Err(err(l, "expected worldgrid/1 header"));
        }
        let parse_kv = |line: usize, text: &str, key: &str| -> Result<Vec<String>, WorldError> {
            let mut parts = text.split_whitespace();
            if parts.next() != Some(key) {
                return Err(err(line, &format!("expected `{key}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };

        let (l, s) = next("seed")?;
        let seed: u64 = parse_kv(l, &s, "seed")?[0]
            .parse()
            .map_err(|_| err(l, "bad seed"))?;
        let (l, s) = next("cell_size")?;
        let cell_size: Real = parse_kv(l, &s, "cell_size")?[0]
            .parse()
            .map_err(|_| err(l, "bad cell_size"))?;
        let (l, s) = next("dims")?;
        let dims = parse_kv(l, &s, "dims")?;
        let (w, h): (usize, usize) = (
            dims[0].parse().map_err(|_| err(l, "bad width"))?,
            dims[1].parse().map_err(|_| err(l, "bad height"))?,
        );
        let (l, s) = next("floor")?;
        let floor_instance_id: u32 = parse_kv(l, &s, "floor")?[0]
            .parse()
            .map_err(|_| err(l, "bad floor id"))?;
        let (l, s) = next("spawn")?;
        let sp = parse_kv(l, &s, "spawn")?;
        let spawn = Cell::new(
            sp[0].parse().map_err(|_| err(l, "bad spawn x"))?,
            sp[1].parse().map_err(|_| err(l, "bad spawn y"))?,
        );

        let (l, s) = next("occupancy")?;
        if s.trim() != "occupancy" {
            return Err(err(l, "expected occupancy section"));
        }
        let mut occupancy = Grid::filled(w, h, CellState::Free);
        for y in 0..h {
            let (l, row) = next("occupancy row")?;
            let row = row.trim();
            if row.len() != w {
                return Err(err(l, "occupancy row width mismatch"));
            }
            for (x, ch) in row.chars().enumerate() {
                *occupancy.get_mut(Cell::new(x as i32, y as i32)) = match ch {
                    '.' => CellState::Free,
                    '#' => CellState::Wall,
                    'o' => CellState::Obstacle,
                    _ => return Err(err(l, "bad occupancy char")),
                };
            }
        }

        let (l, s) = next("surface")?;
        if s.trim() != "surface" {
            return Err(err(l, "expected surface section"));
        }
        let mut surface = Grid::filled(w, h, 0u32);
        for y in 0..h {
            let (l, row) = next("surface row")?;
            let ids: Vec<&str> = row.split_whitespace().collect();
            if ids.len() != w {
                return Err(err(l, "surface row width mismatch"));
            }
            for (x, tok) in ids.iter().enumerate() {
                *surface.get_mut(Cell::new(x as i32, y as i32)) =
                    tok.parse().map_err(|_| err(l, "bad surface id"))?;
            }
        }

        let (l, s) = next("instances")?;
        let count: usize = parse_kv(l, &s, "instances")?[0]
            .parse()
            .map_err(|_| err(l, "bad instance count"))?;
        let mut instances = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, s) = next("instance")?;
            let f = parse_kv(l, &s, "inst")?;
            if f.len() != 3 {
                return Err(err(l, "instance record needs id class height"));
            }
            let id: u32 = f[0].parse().map_err(|_| err(l, "bad instance id"))?;
            let class = SemanticClass::parse(&f[1]).ok_or_else(|| err(l, "bad class"))?;
            let height: Real = f[2].parse().map_err(|_| err(l, "bad height"))?;
            instances.push(ObjectInstance { id, class, footprint: Vec::new(), height });
        }

        // footprints are derived from the surface grid
        for y in 0..h {
            for x in 0..w {
                let c = Cell::new(x as i32, y as i32);
                let id = *surface.get(c) as usize;
                if id >= instances.len() {
                    return Err(err(0, "surface id out of range"));
                }
                instances[id].footprint.push(c);
            }
        }

        let world = World {
            seed,
            cell_size,
            occupancy,
            surface,
            instances,
            floor_instance_id,
            spawn,
        };
        world.validate()?;
        Ok(world)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::{generate_world, WorldGenParams};

    #[test]
    fn text_roundtrip() {
        let world = generate_world(11, &WorldGenParams::default()).unwrap();
        let text = world.to_text();
        let back = World::parse(&text).unwrap();
        assert_eq!(world, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn disc_check_respects_walls() {
        let world = generate_world(3, &WorldGenParams::default()).unwrap();
        let spawn = world.cell_center(world.spawn);
        assert!(world.disc_is_free(spawn, 0.2));
        // a point centered inside the border wall is blocked
        let wall_p = Vec2::new(world.cell_size * 0.5, world.cell_size * 0.5);
        assert!(!world.disc_is_free(wall_p, 0.2));
    }
}
