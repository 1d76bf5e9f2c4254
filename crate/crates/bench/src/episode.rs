//! Episode generation: goal sampling, geodesic start bands, teach traverses,
//! metric cost tables, alternate seen-but-unvisited goals, and post-teach
//! obstacle augmentation.

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64Mcg;
use thiserror::Error;
use topnav_core::geodesic::{distance_field, shortest_pose_path};
use topnav_core::geom::{Pose2, Vec2};
use topnav_core::grid::{Cell, Grid, NEIGHBORS_8};
use topnav_core::render::render;
use topnav_core::world::{CellState, ObjectInstance, SemanticClass, World};
use topnav_core::worldgen::generate_world;
use topnav_core::{Pose, Real};

use crate::config::Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    Easy,
    Hard,
    Full,
}

impl Category {
    /// Geodesic start-to-goal band in meters.
    pub fn band(self) -> (Real, Real) {
        match self {
            Category::Easy => (1.0, 3.0),
            Category::Hard => (3.0, 5.0),
            Category::Full => (8.0, 10.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Easy => "easy",
            Category::Hard => "hard",
            Category::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "easy" => Category::Easy,
            "hard" => Category::Hard,
            "full" => Category::Full,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Episode {
    /// Position in the deterministic episode list; seeds per-episode streams.
    pub index: usize,
    pub world_index: usize,
    pub world_seed: u64,
    pub start: Pose,
    pub goal_instance: u32,
    pub category: Category,
    pub teach_path: Vec<Pose>,
}

#[derive(Error, Debug)]
pub enum EpisodeError {
    #[error("world generation failed: {0}")]
    World(#[from] topnav_core::world::WorldError),
    #[error("no eligible goal instances in world {0}")]
    NoGoals(u64),
}

#[derive(Error, Debug, Clone, PartialEq)]
#[error("no eligible alternate goal")]
pub struct AltGoalUnavailable;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn world_seed_for(bench_seed: u64, world_index: usize) -> u64 {
    splitmix64(bench_seed ^ splitmix64(world_index as u64 + 1))
}

/// Stream seed for a given episode and purpose tag.
pub fn episode_seed(bench_seed: u64, episode_index: usize, tag: u64) -> u64 {
    splitmix64(bench_seed ^ splitmix64(episode_index as u64 + 101) ^ splitmix64(tag))
}

/// Instances a goal may be drawn from: objects, not structure or ground.
pub fn eligible_goal(inst: &ObjectInstance) -> bool {
    !matches!(
        inst.class,
        SemanticClass::Wall | SemanticClass::Ceiling | SemanticClass::Floor
    )
}

/// Geodesic distance (meters) from every free cell to the instance's
/// footprint; footprint cells themselves read zero.
pub fn instance_distance_field(world: &World, instance_id: u32) -> Grid<Real> {
    let inst = world.instance(instance_id).expect("instance exists");
    distance_field(world, &inst.footprint)
}

/// Metric sub-goal cost table: per instance, the geodesic gap between its
/// footprint and the goal's footprint; `None` when no free path connects
/// them.
pub fn metric_goal_costs(world: &World, goal_instance: u32) -> Vec<Option<Real>> {
    let field = instance_distance_field(world, goal_instance);
    world
        .instances
        .iter()
        .map(|inst| {
            if inst.id == goal_instance {
                return Some(0.0);
            }
            let mut best = Real::INFINITY;
            for c in &inst.footprint {
                // footprint cells are often solid; read the field on the
                // cell itself (rugs are free) and on its free neighbors
                let d = *field.get(*c);
                if d.is_finite() {
                    best = best.min(d);
                }
                for (dx, dy) in NEIGHBORS_8 {
                    let n = Cell::new(c.x + dx, c.y + dy);
                    if world.is_free(n) {
                        let d = *field.get(n);
                        if d.is_finite() {
                            best = best.min(d);
                        }
                    }
                }
            }
            best.is_finite().then_some(best)
        })
        .collect()
}

/// Euclidean distance from a position to the nearest goal-footprint cell
/// center; the success measure.
pub fn goal_distance(world: &World, goal_instance: u32, p: Vec2<Real>) -> Real {
    let inst = world.instance(goal_instance).expect("goal exists");
    inst.footprint
        .iter()
        .map(|c| world.cell_center(*c).dist(p))
        .fold(Real::INFINITY, Real::min)
}

/// Count pixels of `instance` in a render from `pose`.
fn visible_pixels(world: &World, cfg: &Config, pose: Pose, instance: u32) -> u32 {
    let cam = cfg.camera_model();
    match render(world, &cam, pose) {
        Ok(obs) => obs.instance.iter().filter(|&&id| id == instance).count() as u32,
        Err(_) => 0,
    }
}

/// Build the teach traverse: the geodesic pose path from the start all the
/// way to the goal's nearest adjacent free cell, the way a mapping run
/// drives to the goal. The goal must show at least `goal_visible_px` from
/// some pose; a goal-facing pose is appended when the path tangent alone
/// never brings it properly into view.
fn teach_traverse(
    world: &World,
    cfg: &Config,
    start: Pose,
    goal_instance: u32,
    goal_field: &Grid<Real>,
) -> Option<Vec<Pose>> {
    let start_cell = world.cell_of(start.position());
    let start_field = distance_field(world, &[start_cell]);
    let inst = world.instance(goal_instance)?;
    let mut target: Option<(Cell, Real)> = None;
    for c in &inst.footprint {
        for (dx, dy) in NEIGHBORS_8 {
            let n = Cell::new(c.x + dx, c.y + dy);
            if world.is_free(n) {
                let d = *start_field.get(n);
                if d.is_finite() && target.is_none_or(|(_, bd)| d < bd) {
                    target = Some((n, d));
                }
            }
        }
    }
    let (target_cell, _) = target?;
    let target_center = world.cell_center(target_cell);
    let mut teach = shortest_pose_path(
        world,
        start,
        Pose2::new(target_center.x, target_center.y, 0.0),
        cfg.bench.teach_spacing,
    )
    .ok()?;

    let best_seen = teach
        .iter()
        .map(|p| visible_pixels(world, cfg, *p, goal_instance))
        .max()
        .unwrap_or(0);
    if best_seen >= cfg.bench.goal_visible_px {
        return Some(teach);
    }
    // face the goal from the path's end
    let last = *teach.last().unwrap();
    let goal_c = nearest_footprint_center(world, goal_instance, last.position(), goal_field);
    let facing = Pose2::new(
        last.x,
        last.y,
        (goal_c.y - last.y).atan2(goal_c.x - last.x),
    );
    teach.push(facing);
    (visible_pixels(world, cfg, facing, goal_instance) > 0).then_some(teach)
}

fn nearest_footprint_center(
    world: &World,
    instance: u32,
    p: Vec2<Real>,
    _field: &Grid<Real>,
) -> Vec2<Real> {
    let inst = world.instance(instance).expect("instance exists");
    inst.footprint
        .iter()
        .map(|c| world.cell_center(*c))
        .min_by(|a, b| a.dist(p).total_cmp(&b.dist(p)))
        .unwrap()
}

pub struct BenchSet {
    pub worlds: Vec<World>,
    pub episodes: Vec<Episode>,
    /// One line per skipped (world, goal, category) combination.
    pub warnings: Vec<String>,
}

/// Deterministic episode list: per world, `goals_per_world` unique object
/// goals; per goal and category, a start pose rejection-sampled into the
/// geodesic band (and beyond the success radius in the straight line).
pub fn make_episodes(cfg: &Config) -> Result<BenchSet, EpisodeError> {
    let params = cfg.world_params();
    let categories: Vec<Category> =
        cfg.bench.categories.iter().filter_map(|c| Category::parse(c)).collect();
    let mut worlds = Vec::new();
    let mut episodes = Vec::new();
    let mut warnings = Vec::new();

    for w in 0..cfg.bench.worlds {
        let world_seed = world_seed_for(cfg.bench.seed, w);
        let world = generate_world(world_seed, &params)?;
        let mut rng = Pcg64Mcg::seed_from_u64(splitmix64(cfg.bench.seed ^ world_seed));

        let mut candidates: Vec<u32> = world
            .instances
            .iter()
            .filter(|i| eligible_goal(i))
            .map(|i| i.id)
            .collect();
        if candidates.is_empty() {
            return Err(EpisodeError::NoGoals(world_seed));
        }
        // sample goals without replacement
        let mut goals = Vec::new();
        for _ in 0..cfg.bench.goals_per_world.min(candidates.len()) {
            let pick = rng.random_range(0..candidates.len());
            goals.push(candidates.swap_remove(pick));
        }

        let free_cells: Vec<Cell> = world
            .occupancy
            .iter_cells()
            .filter(|(_, s)| **s == CellState::Free)
            .map(|(c, _)| c)
            .collect();

        for goal in goals {
            let field = instance_distance_field(&world, goal);
            for &category in &categories {
                let (lo, hi) = category.band();
                let mut found = false;
                for _ in 0..cfg.bench.start_retries {
                    let cell = free_cells[rng.random_range(0..free_cells.len())];
                    let center = world.cell_center(cell);
                    let d = *field.get(cell);
                    if !(d.is_finite() && d >= lo && d <= hi) {
                        continue;
                    }
                    if !world.disc_is_free(center, cfg.agent.radius + 0.02) {
                        continue;
                    }
                    if goal_distance(&world, goal, center) <= cfg.bench.success_radius {
                        continue; // no trivially-successful starts
                    }
                    let start = Pose2::new(center.x, center.y, 0.0);
                    let Some(teach) = teach_traverse(&world, cfg, start, goal, &field) else {
                        continue;
                    };
                    // the repeat run starts where the teach run started
                    let start = teach[0];
                    episodes.push(Episode {
                        index: episodes.len(),
                        world_index: w,
                        world_seed,
                        start,
                        goal_instance: goal,
                        category,
                        teach_path: teach,
                    });
                    found = true;
                    break;
                }
                if !found {
                    warnings.push(format!(
                        "world {world_seed}: no {} start in band for goal {goal}",
                        category.as_str()
                    ));
                }
            }
        }
        worlds.push(world);
    }
    Ok(BenchSet { worlds, episodes, warnings })
}

/// Alternate seen-but-unvisited goal: over the last fraction of teach poses
/// and the instances visible from them (walls and ceilings excluded), pick
/// the instance maximizing mean pixel depth plus geodesic distance to the
/// original goal. Ties go to the lower instance id.
pub fn select_alt_goal(
    world: &World,
    cfg: &Config,
    episode: &Episode,
) -> Result<u32, AltGoalUnavailable> {
    let n = episode.teach_path.len();
    let k0 = ((n as Real) * (1.0 - cfg.altgoal.last_fraction)).floor() as usize;
    let poses = &episode.teach_path[k0.min(n - 1)..];
    let goal_field = instance_distance_field(world, episode.goal_instance);
    let cam = cfg.camera_model();

    let mut best: Option<(Real, u32)> = None;
    for pose in poses {
        let Ok(obs) = render(world, &cam, *pose) else { continue };
        // mean depth per visible instance
        let mut sums: std::collections::BTreeMap<u32, (Real, u32)> = std::collections::BTreeMap::new();
        for i in 0..obs.instance.len() {
            let id = obs.instance[i];
            if id == topnav_core::world::NO_INSTANCE {
                continue;
            }
            let e = sums.entry(id).or_insert((0.0, 0));
            e.0 += obs.depth[i];
            e.1 += 1;
        }
        for (id, (depth_sum, count)) in sums {
            let Some(inst) = world.instance(id) else { continue };
            // structure and the global ground plane are not object goals
            if matches!(
                inst.class,
                SemanticClass::Wall | SemanticClass::Ceiling | SemanticClass::Floor
            ) {
                continue;
            }
            if id == episode.goal_instance {
                continue;
            }
            // geodesic gap between this instance and the original goal
            let mut geo = Real::INFINITY;
            for c in &inst.footprint {
                let d = *goal_field.get(*c);
                if d.is_finite() {
                    geo = geo.min(d);
                }
                for (dx, dy) in NEIGHBORS_8 {
                    let nb = Cell::new(c.x + dx, c.y + dy);
                    if world.is_free(nb) {
                        let d = *goal_field.get(nb);
                        if d.is_finite() {
                            geo = geo.min(d);
                        }
                    }
                }
            }
            if !geo.is_finite() {
                continue;
            }
            let score = depth_sum / count as Real + geo;
            let better = match best {
                None => true,
                Some((bs, bid)) => score > bs || (score == bs && id < bid),
            };
            if better {
                best = Some((score, id));
            }
        }
    }
    best.map(|(_, id)| id).ok_or(AltGoalUnavailable)
}

/// Copy of the world with extra furniture dropped near the teach path after
/// mapping, the way a previously-clear route gets cluttered. Placements
/// keep the disc-eroded free space between start and goal connected.
pub fn augment_with_obstacles(
    world: &World,
    cfg: &Config,
    episode: &Episode,
    count: usize,
) -> World {
    let mut out = world.clone();
    let seed = episode_seed(cfg.bench.seed, episode.index, 0xB10C);
    let mut rng = Pcg64Mcg::seed_from_u64(seed);

    // candidate cells: within a corridor of the teach path, away from the
    // start pose and outside the goal's success disc
    let mut corridor: Vec<Cell> = Vec::new();
    for pose in &episode.teach_path {
        let c = world.cell_of(pose.position());
        for dy in -3..=3 {
            for dx in -3..=3 {
                let n = Cell::new(c.x + dx, c.y + dy);
                if world.is_free(n) && !corridor.contains(&n) {
                    corridor.push(n);
                }
            }
        }
    }
    corridor.sort();

    let start_p = episode.start.position();
    let mut placed = 0;
    for _ in 0..cfg.world.max_place_retries * count.max(1) {
        if placed >= count {
            break;
        }
        let c = corridor[rng.random_range(0..corridor.len())];
        let center = world.cell_center(c);
        if center.dist(start_p) < cfg.bench.success_radius {
            continue;
        }
        if goal_distance(world, episode.goal_instance, center) <= cfg.bench.success_radius + 0.2 {
            continue;
        }
        // rug cells stay clear so the surface grid maps one-to-one
        if *out.occupancy.get(c) != CellState::Free || *out.surface.get(c) != out.floor_instance_id
        {
            continue;
        }
        let id = out.instances.len() as u32;
        *out.occupancy.get_mut(c) = CellState::Obstacle;
        *out.surface.get_mut(c) = id;
        let height = rng.random_range(cfg.world.furniture_height.0..cfg.world.furniture_height.1);
        out.instances.push(ObjectInstance {
            id,
            class: SemanticClass::Furniture,
            footprint: vec![c],
            height,
        });
        let floor = out.floor_instance_id as usize;
        out.instances[floor].footprint.retain(|fc| fc != &c);

        // free space must stay one component and the robot must still fit
        // through somewhere: check plain and disc-eroded connectivity
        let free_total =
            out.occupancy.cells().iter().filter(|s| **s == CellState::Free).count();
        let connected = out.reachable_free_cells().len() == free_total;
        if !connected || !disc_route_exists(&out, cfg, episode) {
            out.instances.pop();
            out.instances[floor].footprint.push(c);
            *out.occupancy.get_mut(c) = CellState::Free;
            *out.surface.get_mut(c) = world.floor_instance_id;
            continue;
        }
        placed += 1;
    }
    out.validate().expect("augmented world stays valid");
    out
}

/// Flood fill over cells whose disc neighborhood is free; true when some
/// cell within the success radius of the goal is reachable from the start.
fn disc_route_exists(world: &World, cfg: &Config, episode: &Episode) -> bool {
    let radius = cfg.agent.radius;
    let start_cell = world.cell_of(episode.start.position());
    let passable = |c: Cell| -> bool {
        world.occupancy.in_bounds(c) && world.disc_is_free(world.cell_center(c), radius)
    };
    if !passable(start_cell) {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![start_cell];
    seen.insert(start_cell);
    while let Some(c) = stack.pop() {
        if goal_distance(world, episode.goal_instance, world.cell_center(c))
            <= cfg.bench.success_radius
        {
            return true;
        }
        for (dx, dy) in NEIGHBORS_8 {
            let n = Cell::new(c.x + dx, c.y + dy);
            if !seen.contains(&n) && passable(n) {
                seen.insert(n);
                stack.push(n);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> Config {
        let mut cfg = Config::default();
        cfg.bench.worlds = 2;
        cfg.bench.goals_per_world = 2;
        cfg.bench.categories = vec!["easy".into(), "hard".into()];
        cfg.world.width = 48;
        cfg.world.height = 48;
        cfg.world.max_rooms = 4;
        cfg.world.obstacle_count = 8;
        cfg
    }

    #[test]
    fn episode_counts_and_bands() {
        let cfg = tiny_cfg();
        let set = make_episodes(&cfg).unwrap();
        assert!(!set.episodes.is_empty());
        assert!(set.episodes.len() <= 2 * 2 * 2);
        for ep in &set.episodes {
            let world = &set.worlds[ep.world_index];
            let field = instance_distance_field(world, ep.goal_instance);
            let d = *field.get(world.cell_of(ep.start.position()));
            let (lo, hi) = ep.category.band();
            assert!(d >= lo && d <= hi, "geodesic {d} outside {lo}..{hi}");
            assert!(
                goal_distance(world, ep.goal_instance, ep.start.position())
                    > cfg.bench.success_radius
            );
            // the goal is visible from the final teach pose
            let last = *ep.teach_path.last().unwrap();
            assert!(visible_pixels(world, &cfg, last, ep.goal_instance) > 0);
        }
    }

    #[test]
    fn episodes_are_deterministic() {
        let cfg = tiny_cfg();
        let a = make_episodes(&cfg).unwrap();
        let b = make_episodes(&cfg).unwrap();
        assert_eq!(a.episodes.len(), b.episodes.len());
        for (x, y) in a.episodes.iter().zip(b.episodes.iter()) {
            assert_eq!(x.start, y.start);
            assert_eq!(x.goal_instance, y.goal_instance);
            assert_eq!(x.teach_path, y.teach_path);
        }
    }

    #[test]
    fn metric_costs_zero_at_goal_and_finite_nearby() {
        let cfg = tiny_cfg();
        let set = make_episodes(&cfg).unwrap();
        let ep = &set.episodes[0];
        let world = &set.worlds[ep.world_index];
        let costs = metric_goal_costs(world, ep.goal_instance);
        assert_eq!(costs[ep.goal_instance as usize], Some(0.0));
        // the floor instance touches everything
        assert!(costs[world.floor_instance_id as usize].unwrap() < 1.0);
    }

    #[test]
    fn alt_goal_differs_and_is_reachable() {
        let cfg = tiny_cfg();
        let set = make_episodes(&cfg).unwrap();
        let mut found = false;
        for ep in &set.episodes {
            let world = &set.worlds[ep.world_index];
            if let Ok(alt) = select_alt_goal(world, &cfg, ep) {
                assert_ne!(alt, ep.goal_instance);
                let inst = world.instance(alt).unwrap();
                assert!(!matches!(
                    inst.class,
                    SemanticClass::Wall | SemanticClass::Ceiling
                ));
                found = true;
            }
        }
        assert!(found, "no episode produced an alt goal");
    }

    #[test]
    fn augmentation_preserves_validity_and_route() {
        let cfg = tiny_cfg();
        let set = make_episodes(&cfg).unwrap();
        let ep = &set.episodes[0];
        let world = &set.worlds[ep.world_index];
        let aug = augment_with_obstacles(world, &cfg, ep, 3);
        aug.validate().unwrap();
        assert!(aug.instances.len() >= world.instances.len());
        assert!(disc_route_exists(&aug, &cfg, ep));
    }
}
