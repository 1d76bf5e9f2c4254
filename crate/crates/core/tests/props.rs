//! Randomized invariant suites, runnable in isolation:
//! `cargo test -p topnav-core --test props`

use proptest::prelude::*;
use topnav_core::agent::{step_agent, ControlCommand};
use topnav_core::assoc::AssociationModel;
use topnav_core::bev::{build_costmap, plan_path, BevParams, BevPoint, FollowParams, LocalPlan};
use topnav_core::control::{servo_yaw, softmax_weights, ServoParams};
use topnav_core::geodesic::{distance_field, geodesic_distance};
use topnav_core::geom::Pose2;
use topnav_core::graph::{build_map, compute_goal_costs};
use topnav_core::localize::SubGoalMask;
use topnav_core::scalar::wrap_angle;
use topnav_core::segment::{PixelRun, Segment};
use topnav_core::worldgen::{generate_world, WorldGenParams};
use topnav_core::{Pose, Real};

fn small_world(seed: u64) -> topnav_core::world::World {
    generate_world(
        seed,
        &WorldGenParams {
            width: 40,
            height: 40,
            max_rooms: 3,
            obstacle_count: 5,
            rug_count: 1,
            ..Default::default()
        },
    )
    .unwrap()
}

fn free_cells(world: &topnav_core::world::World) -> Vec<topnav_core::grid::Cell> {
    let mut cells: Vec<_> = world
        .occupancy
        .iter_cells()
        .filter(|(_, s)| **s == topnav_core::world::CellState::Free)
        .map(|(c, _)| c)
        .collect();
    cells.sort();
    cells
}

proptest! {
    #[test]
    fn wrap_angle_stays_in_range(theta in -50.0f64..50.0) {
        let t = wrap_angle(theta);
        prop_assert!(t > -std::f64::consts::PI && t <= std::f64::consts::PI);
    }

    #[test]
    fn geodesic_symmetry_and_triangle(seed in 0u64..30, picks in proptest::array::uniform3(0usize..10_000)) {
        let world = small_world(seed);
        let cells = free_cells(&world);
        let pose = |i: usize| -> Pose {
            let c = world.cell_center(cells[picks[i] % cells.len()]);
            Pose2::new(c.x, c.y, 0.0)
        };
        let (a, b, c) = (pose(0), pose(1), pose(2));
        let dab = geodesic_distance(&world, a, b).unwrap();
        let dba = geodesic_distance(&world, b, a).unwrap();
        prop_assert!((dab - dba).abs() < 1e-9);
        let dac = geodesic_distance(&world, a, c).unwrap();
        let dcb = geodesic_distance(&world, c, b).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-9);
    }

    #[test]
    fn agent_never_ends_in_solid(seed in 0u64..20, v in 0.0f64..1.0, w in -1.0f64..1.0, steps in 1usize..60) {
        let world = small_world(seed);
        let spawn = world.cell_center(world.spawn);
        let mut pose = Pose2::new(spawn.x, spawn.y, 0.3);
        let radius = 0.2;
        for _ in 0..steps {
            let (next, _) = step_agent(&world, pose, ControlCommand::new(v, w), 0.2, radius);
            prop_assert!(world.is_free(world.cell_of(next.position())));
            prop_assert!(world.disc_is_free(next.position(), radius - 1e-9));
            pose = next;
        }
    }

    #[test]
    fn map_edges_respect_kind_rule(seed in 0u64..200) {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(seed);
        let frames: Vec<Vec<Segment>> = (0..rng.random_range(1..5usize))
            .map(|f| {
                (0..rng.random_range(1..6u32))
                    .map(|l| Segment {
                        frame_index: f,
                        local_id: l,
                        instance_id: rng.random_range(0..8u32),
                        centroid_px: (rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)),
                        area_px: rng.random_range(60..500u32),
                        pixel_runs: vec![PixelRun { row: 0, start: l * 10, len: 5 }],
                    })
                    .collect()
            })
            .collect();
        let window = rng.random_range(1..3usize);
        let g = build_map(&frames, &AssociationModel::noisy(0.2, 0.2, seed), window);
        prop_assert!(g.check_edge_kinds().is_ok());
    }

    #[test]
    fn gt_tracked_instance_is_zero_cost_component(frames_n in 2usize..8) {
        // one instance visible in every frame plus per-frame clutter
        let frames: Vec<Vec<Segment>> = (0..frames_n)
            .map(|f| {
                vec![
                    Segment {
                        frame_index: f,
                        local_id: 0,
                        instance_id: 42,
                        centroid_px: (300.0 + f as Real, 200.0),
                        area_px: 400,
                        pixel_runs: vec![PixelRun { row: 200, start: 300, len: 20 }],
                    },
                    Segment {
                        frame_index: f,
                        local_id: 1,
                        instance_id: 100 + f as u32,
                        centroid_px: (100.0, 80.0),
                        area_px: 120,
                        pixel_runs: vec![PixelRun { row: 80, start: 100, len: 12 }],
                    },
                ]
            })
            .collect();
        let g = build_map(&frames, &AssociationModel::ground_truth(), 1);
        // goal at the tracked instance in the last frame
        let goal = g.node_index(frames_n - 1, 0);
        let costs = compute_goal_costs(&g, goal);
        for f in 0..frames_n {
            prop_assert_eq!(costs.get(g.node_index(f, 0)), Some(0));
        }
    }

    #[test]
    fn subgoal_mask_normalization_and_ranking(
        raws in proptest::collection::vec(0u32..40, 1..12),
        shift in 1u32..9,
    ) {
        let query: Vec<Segment> = (0..raws.len())
            .map(|i| Segment {
                frame_index: 0,
                local_id: i as u32,
                instance_id: i as u32,
                centroid_px: (i as Real * 10.0, 0.0),
                area_px: 100 + i as u32,
                pixel_runs: vec![PixelRun { row: 0, start: 0, len: 1 }],
            })
            .collect();
        let items: Vec<(usize, Option<usize>, Real)> =
            raws.iter().enumerate().map(|(i, &r)| (i, None, r as Real)).collect();
        let mask = SubGoalMask::from_raw_costs(items, &query).unwrap();
        for e in &mask.entries {
            prop_assert!((0.0..=1.0).contains(&e.norm_cost));
        }
        let all_equal = raws.iter().all(|&r| r == raws[0]);
        if all_equal {
            prop_assert!(mask.entries.iter().all(|e| e.norm_cost == 0.0));
        } else {
            let zeros = mask.entries.iter().filter(|e| e.norm_cost == 0.0).count();
            let ones = mask.entries.iter().filter(|e| e.norm_cost == 1.0).count();
            prop_assert!(zeros >= 1 && ones >= 1);
        }
        // ranking invariance under a constant shift
        let shifted: Vec<(usize, Option<usize>, Real)> = raws
            .iter()
            .enumerate()
            .map(|(i, &r)| (i, None, (r + shift) as Real))
            .collect();
        let mask2 = SubGoalMask::from_raw_costs(shifted, &query).unwrap();
        prop_assert_eq!(mask.best, mask2.best);
        let order = |m: &SubGoalMask| {
            let mut idx: Vec<usize> = (0..m.entries.len()).collect();
            idx.sort_by(|&a, &b| m.entries[a].norm_cost.total_cmp(&m.entries[b].norm_cost));
            idx
        };
        prop_assert_eq!(order(&mask), order(&mask2));
    }

    #[test]
    fn softmax_sums_to_one(scores in proptest::collection::vec(-40.0f64..40.0, 1..10)) {
        let w = softmax_weights(&scores);
        let sum: f64 = w.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn servo_sign_and_gain_scaling(
        us in proptest::collection::vec(0.0f64..640.0, 1..8),
        ls in proptest::collection::vec(0.0f64..1.0, 8),
    ) {
        let pairs: Vec<(Real, Real)> = us.iter().zip(ls.iter()).map(|(&u, &l)| (u, l)).collect();
        let p1 = ServoParams { tau: 5.0, gain: 0.4, image_width: 640.0 };
        let p2 = ServoParams { gain: 0.8, ..p1 };
        let y1 = servo_yaw(&pairs, &p1);
        let y2 = servo_yaw(&pairs, &p2);
        prop_assert!((y2 - 2.0 * y1).abs() < 1e-12);
        prop_assert!(y1.abs() <= 0.4 / 2.0 + 1e-12);
    }

    #[test]
    fn follow_scales_with_kp_and_matches_bearing_sign(
        forward in 0.1f64..3.0,
        lateral in -2.0f64..2.0,
    ) {
        let target = BevPoint::new(forward, lateral);
        let plan = LocalPlan { waypoints: vec![BevPoint::new(0.0, 0.0), target], subgoal_point: target, feasible: true };
        let base = FollowParams { omega_max: 1e9, ..Default::default() };
        let double = FollowParams { k_p: base.k_p * 2.0, ..base };
        let c1 = topnav_core::bev::follow_path(&plan, &base);
        let c2 = topnav_core::bev::follow_path(&plan, &double);
        prop_assert!((c2.yaw_rate - 2.0 * c1.yaw_rate).abs() < 1e-9);
        let bearing = lateral.atan2(forward);
        if bearing.abs() > 1e-12 {
            prop_assert_eq!(c1.yaw_rate.signum(), bearing.signum());
        }
    }

    #[test]
    fn feasible_plans_stay_on_traversable_adjacent_cells(seed in 0u64..150) {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(seed);
        let params = BevParams {
            resolution: 0.1,
            forward_extent: 1.5,
            lateral_extent: 0.75,
            d_sat: 0.3,
            box_filter: 3,
            snap_radius: 0.4,
            seed_radius: 0.15,
            inflation_radius: 0.0,
        };
        let p_blocked = rng.random_range(0.0..0.4);
        let mut pts = Vec::new();
        for r in 0..15 {
            for c in 0..15 {
                if !rng.random_bool(p_blocked) {
                    pts.push(BevPoint::new(
                        (r as Real + 0.5) * 0.1,
                        (c as Real + 0.5) * 0.1 - 0.75,
                    ));
                }
            }
        }
        if let Ok(cm) = build_costmap(&pts, &[], &params) {
            let goal = BevPoint::new(rng.random_range(0.2..1.4), rng.random_range(-0.7..0.7));
            let plan = plan_path(&cm, goal);
            if plan.feasible {
                prop_assert_eq!(
                    cm.point_cell(plan.waypoints[0]).unwrap(),
                    cm.robot_cell
                );
                for pair in plan.waypoints.windows(2) {
                    let a = cm.point_cell(pair[0]).unwrap();
                    let b = cm.point_cell(pair[1]).unwrap();
                    prop_assert!(cm.traversable[b.0 * cm.cols + b.1]);
                    prop_assert!(a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1);
                }
            }
        }
    }

    #[test]
    fn instance_distance_field_nonnegative_and_zero_at_sources(seed in 0u64..20) {
        let world = small_world(seed);
        // distance from the first obstacle-class instance's footprint
        let inst = world.instances.iter().find(|i| {
            matches!(
                i.class,
                topnav_core::world::SemanticClass::Furniture
                    | topnav_core::world::SemanticClass::Fixture
            )
        });
        if let Some(inst) = inst {
            let field = distance_field(&world, &inst.footprint);
            for c in &inst.footprint {
                prop_assert_eq!(*field.get(*c), 0.0);
            }
            for (_, d) in field.iter_cells() {
                prop_assert!(*d >= 0.0);
            }
        }
    }
}
