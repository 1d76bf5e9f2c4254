//! End-to-end pipeline tests on a reduced bench configuration.

use topnav_bench::config::Config;
use topnav_bench::driver::{run_matrix, MatrixSpec};
use topnav_bench::episode::{instance_distance_field, make_episodes, Category};
use topnav_bench::run::{prepare_regime, run_episode, ControllerKind, Regime};
use topnav_bench::trace::{write_trace, TraceHeader, TRACE_SCHEMA};

fn small_cfg() -> Config {
    let mut cfg = Config::default();
    cfg.bench.worlds = 2;
    cfg.bench.goals_per_world = 2;
    cfg.bench.categories = vec!["easy".into(), "hard".into()];
    cfg.bench.budget = 250;
    cfg.world.width = 56;
    cfg.world.height = 56;
    cfg.world.max_rooms = 5;
    cfg.world.obstacle_count = 8;
    cfg
}

#[test]
fn category_bands_hold_for_generated_episodes() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    assert!(!set.episodes.is_empty());
    for ep in &set.episodes {
        let world = &set.worlds[ep.world_index];
        let field = instance_distance_field(world, ep.goal_instance);
        let d = *field.get(world.cell_of(ep.start.position()));
        let (lo, hi) = ep.category.band();
        assert!(d >= lo && d <= hi);
    }
}

#[test]
fn zero_budget_fails_with_zero_steps() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let ep = &set.episodes[0];
    let world = &set.worlds[ep.world_index];
    let setup = prepare_regime(world, &cfg, ep, Regime::GtMetric);
    let result = run_episode(world, &cfg, ep, &setup, ControllerKind::Topometric, true, 0);
    assert!(!result.success);
    assert_eq!(result.steps, 0);
    assert!(result.trace.is_empty());
}

#[test]
fn identical_runs_identical_trace_bytes() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let ep = &set.episodes[0];
    let world = &set.worlds[ep.world_index];
    let header = TraceHeader {
        schema: TRACE_SCHEMA.into(),
        episode: ep.index,
        world_seed: ep.world_seed,
        category: ep.category.as_str().into(),
        regime: "noisy".into(),
        controller: "topometric".into(),
        switch_enabled: true,
        budget: 120,
        goal_instance: ep.goal_instance,
        alt_goal: false,
    };
    let mut texts = Vec::new();
    for _ in 0..2 {
        let setup = prepare_regime(world, &cfg, ep, Regime::Noisy);
        let result = run_episode(world, &cfg, ep, &setup, ControllerKind::Topometric, true, 120);
        texts.push(write_trace(&header, &result));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn servo_only_never_reports_metric_steps() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let ep = &set.episodes[0];
    let world = &set.worlds[ep.world_index];
    let setup = prepare_regime(world, &cfg, ep, Regime::GtTopological);
    let result = run_episode(world, &cfg, ep, &setup, ControllerKind::ServoOnly, true, 150);
    assert!(result.trace.iter().all(|r| r.mode == "fallback"));
    assert_eq!(result.switch_count, 0);
}

#[test]
fn success_iff_within_radius_at_last_step() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    for ep in set.episodes.iter().take(4) {
        let world = &set.worlds[ep.world_index];
        let setup = prepare_regime(world, &cfg, ep, Regime::GtMetric);
        let result = run_episode(world, &cfg, ep, &setup, ControllerKind::Topometric, true, 250);
        assert_eq!(
            result.success,
            result.final_distance <= cfg.bench.success_radius && result.steps <= 250
        );
        if let Some(last) = result.trace.last() {
            assert_eq!(last.goal_dist, result.final_distance);
        }
        // poses stay in free space throughout
        for r in &result.trace {
            let cell = world.cell_of(topnav_core::geom::Vec2::new(r.x, r.y));
            assert!(world.is_free(cell));
        }
    }
}

#[test]
fn no_switch_emits_zero_command_on_metric_failure() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let ep = &set.episodes[0];
    let world = &set.worlds[ep.world_index];
    let setup = prepare_regime(world, &cfg, ep, Regime::GtMetric);
    let result = run_episode(world, &cfg, ep, &setup, ControllerKind::Topometric, false, 200);
    for r in &result.trace {
        if r.mode == "fallback" {
            assert_eq!((r.v, r.w), (0.0, 0.0), "no-switch must hold position");
        }
    }
}

#[test]
fn matrix_rows_cover_requested_groups_deterministically() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let spec = MatrixSpec {
        regimes: &[Regime::GtMetric],
        controllers: &[ControllerKind::Topometric, ControllerKind::ServoOnly],
        budget: 100,
        ..Default::default()
    };
    let a = run_matrix(&cfg, &set, &spec);
    let b = run_matrix(&cfg, &set, &spec);
    assert_eq!(a.summary_json(), b.summary_json());
    assert_eq!(a.rows.len(), set.episodes.len() * 2);
    let stats = a.stats();
    for cat in [Category::Easy, Category::Hard] {
        assert!(stats.keys().any(|k| k.category == cat));
    }
}

#[test]
fn mode_transitions_only_at_recorded_failure_reasons() {
    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let ep = &set.episodes[1 % set.episodes.len()];
    let world = &set.worlds[ep.world_index];
    let setup = prepare_regime(world, &cfg, ep, Regime::GtMetric);
    let result = run_episode(world, &cfg, ep, &setup, ControllerKind::Topometric, true, 250);
    for r in &result.trace {
        match r.mode {
            "metric" => assert_eq!(r.reason, "ok"),
            "fallback" => assert_ne!(r.reason, "ok"),
            other => panic!("unknown mode {other}"),
        }
    }
    let transitions = result
        .trace
        .windows(2)
        .filter(|w| w[0].mode == "metric" && w[1].mode == "fallback")
        .count() as u32;
    assert_eq!(transitions, result.switch_count);
}

#[test]
fn exact_episode_count_when_all_bands_fill() {
    // the default worlds satisfy every band; 2 worlds x 3 goals x 3 cats
    let mut cfg = Config::default();
    cfg.bench.worlds = 2;
    let set = make_episodes(&cfg).unwrap();
    assert!(set.warnings.is_empty(), "{:?}", set.warnings);
    assert_eq!(set.episodes.len(), 2 * 3 * 3);
}

#[test]
fn metric_cost_unreachable_behind_sealed_wall() {
    use topnav_core::grid::{Cell, Grid};
    use topnav_core::world::{CellState, ObjectInstance, SemanticClass, World};

    // 20x20: border ring, a sealed 3x3 box with furniture inside, another
    // furniture out in the open
    let n = 20usize;
    let mut occupancy = Grid::filled(n, n, CellState::Free);
    let mut surface = Grid::filled(n, n, 0u32);
    let mut ring = Vec::new();
    for i in 0..n as i32 {
        for c in [
            Cell::new(i, 0),
            Cell::new(i, n as i32 - 1),
            Cell::new(0, i),
            Cell::new(n as i32 - 1, i),
        ] {
            if !ring.contains(&c) {
                ring.push(c);
            }
        }
    }
    let mut box_ring = Vec::new();
    for x in 5..=7i32 {
        for y in 5..=7i32 {
            if x == 6 && y == 6 {
                continue;
            }
            box_ring.push(Cell::new(x, y));
        }
    }
    let sealed = Cell::new(6, 6);
    let open_furniture = Cell::new(14, 14);
    for c in ring.iter().chain(box_ring.iter()) {
        *occupancy.get_mut(*c) = CellState::Wall;
    }
    *occupancy.get_mut(sealed) = CellState::Obstacle;
    *occupancy.get_mut(open_furniture) = CellState::Obstacle;
    for (id, cells) in [(1u32, &ring), (2u32, &box_ring)] {
        for c in cells {
            *surface.get_mut(*c) = id;
        }
    }
    *surface.get_mut(sealed) = 3;
    *surface.get_mut(open_furniture) = 4;
    let floor: Vec<Cell> = occupancy
        .iter_cells()
        .filter(|(_, s)| **s == CellState::Free)
        .map(|(c, _)| c)
        .collect();
    let world = World {
        seed: 0,
        cell_size: 0.2,
        occupancy,
        surface,
        instances: vec![
            ObjectInstance { id: 0, class: SemanticClass::Floor, footprint: floor, height: 0.0 },
            ObjectInstance { id: 1, class: SemanticClass::Wall, footprint: ring, height: 2.5 },
            ObjectInstance { id: 2, class: SemanticClass::Wall, footprint: box_ring, height: 2.5 },
            ObjectInstance {
                id: 3,
                class: SemanticClass::Furniture,
                footprint: vec![sealed],
                height: 0.6,
            },
            ObjectInstance {
                id: 4,
                class: SemanticClass::Furniture,
                footprint: vec![open_furniture],
                height: 0.6,
            },
        ],
        floor_instance_id: 0,
        spawn: Cell::new(2, 2),
    };
    world.validate().unwrap();

    let costs = topnav_bench::episode::metric_goal_costs(&world, 4);
    assert_eq!(costs[4], Some(0.0));
    assert_eq!(costs[3], None, "sealed instance must be unreachable");
    assert!(costs[0].unwrap() < 0.5); // the floor touches the goal
    // open-room gap is about the euclidean footprint distance: the goal at
    // (14,14) vs the sealed box ring around (6,6) through free space
    let ring_cost = costs[2].unwrap();
    let euclid_gap = (((14.0 - 7.0) * (14.0 - 7.0) * 2.0) as f64).sqrt() * 0.2;
    assert!((ring_cost - euclid_gap).abs() < 0.5, "ring {ring_cost} vs gap {euclid_gap}");
}

#[test]
fn alt_goal_matches_exhaustive_scoring_oracle() {
    use topnav_core::render::render;
    use topnav_core::world::{SemanticClass, NO_INSTANCE};

    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let cam = cfg.camera_model();
    let mut compared = 0;
    for ep in &set.episodes {
        let world = &set.worlds[ep.world_index];
        let Ok(chosen) = topnav_bench::episode::select_alt_goal(world, &cfg, ep) else {
            continue;
        };
        // oracle: rescore every (pose, instance) pair from scratch
        let n = ep.teach_path.len();
        let k0 = ((n as f64) * (1.0 - cfg.altgoal.last_fraction)).floor() as usize;
        let field = topnav_bench::episode::instance_distance_field(world, ep.goal_instance);
        let mut best: Option<(f64, u32)> = None;
        for pose in &ep.teach_path[k0.min(n - 1)..] {
            let obs = render(world, &cam, *pose).unwrap();
            let mut acc: std::collections::BTreeMap<u32, (f64, u32)> = Default::default();
            for i in 0..obs.instance.len() {
                if obs.instance[i] != NO_INSTANCE {
                    let e = acc.entry(obs.instance[i]).or_insert((0.0, 0));
                    e.0 += obs.depth[i];
                    e.1 += 1;
                }
            }
            for (id, (dsum, cnt)) in acc {
                let inst = world.instance(id).unwrap();
                if matches!(
                    inst.class,
                    SemanticClass::Wall | SemanticClass::Ceiling | SemanticClass::Floor
                ) || id == ep.goal_instance
                {
                    continue;
                }
                let mut geo = f64::INFINITY;
                for c in &inst.footprint {
                    let d = *field.get(*c);
                    if d.is_finite() {
                        geo = geo.min(d);
                    }
                    for (dx, dy) in topnav_core::grid::NEIGHBORS_8 {
                        let nb = topnav_core::grid::Cell::new(c.x + dx, c.y + dy);
                        if world.is_free(nb) {
                            let d = *field.get(nb);
                            if d.is_finite() {
                                geo = geo.min(d);
                            }
                        }
                    }
                }
                if !geo.is_finite() {
                    continue;
                }
                let score = dsum / cnt as f64 + geo;
                let better = match best {
                    None => true,
                    Some((bs, bid)) => score > bs || (score == bs && id < bid),
                };
                if better {
                    best = Some((score, id));
                }
            }
        }
        assert_eq!(chosen, best.unwrap().1, "episode {}", ep.index);
        compared += 1;
    }
    assert!(compared >= 2, "oracle compared too few episodes");
}

#[test]
fn nearby_renders_associate_every_covisible_instance() {
    use topnav_core::assoc::{associate, AssociationModel};
    use topnav_core::render::render;
    use topnav_core::segment::extract_segments;

    let cfg = small_cfg();
    let set = make_episodes(&cfg).unwrap();
    let ep = &set.episodes[0];
    let world = &set.worlds[ep.world_index];
    let cam = cfg.camera_model();
    let a_pose = ep.teach_path[0];
    let b_pose = ep.teach_path[1];
    let a = topnav_bench::run::graph_segments(
        world,
        &extract_segments(&render(world, &cam, a_pose).unwrap(), 0, cfg.min_area()),
    );
    let b = topnav_bench::run::graph_segments(
        world,
        &extract_segments(&render(world, &cam, b_pose).unwrap(), 1, cfg.min_area()),
    );
    let matches = associate(&a, &b, &AssociationModel::ground_truth());
    // every instance id present in both frames appears in the matching
    let ids_a: std::collections::BTreeSet<u32> = a.iter().map(|s| s.instance_id).collect();
    let ids_b: std::collections::BTreeSet<u32> = b.iter().map(|s| s.instance_id).collect();
    let covisible: Vec<u32> = ids_a.intersection(&ids_b).copied().collect();
    assert!(!covisible.is_empty());
    for id in covisible {
        assert!(
            matches.iter().any(|&(x, y)| a[x].instance_id == id && b[y].instance_id == id),
            "instance {id} co-visible but unmatched"
        );
    }
}

#[test]
fn alt_goal_unavailable_when_goal_is_the_only_object() {
    // one furniture instance total: it becomes the goal, and no other
    // candidate remains for the alternate-goal rule
    let mut cfg = Config::default();
    cfg.bench.worlds = 1;
    cfg.bench.goals_per_world = 1;
    cfg.bench.categories = vec!["easy".into()];
    cfg.world.obstacle_count = 1;
    cfg.world.rug_count = 0;
    let set = make_episodes(&cfg).unwrap();
    assert_eq!(set.episodes.len(), 1);
    let ep = &set.episodes[0];
    let world = &set.worlds[ep.world_index];
    assert!(topnav_bench::episode::select_alt_goal(world, &cfg, ep).is_err());
}
