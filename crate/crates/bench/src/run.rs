//! Closed-loop episode execution across evaluation regimes.
//!
//! Each step renders the current view, extracts segments, obtains sub-goal
//! costs per the regime (metric table or topological graph via temporal
//! localization), runs the BEV pipeline, arbitrates between the metric and
//! fallback controllers, and integrates the command. Everything is seeded;
//! identical inputs give byte-identical traces.

use serde::Serialize;
use topnav_core::agent::step_agent;
use topnav_core::assoc::AssociationModel;
use topnav_core::bev::{
    build_costmap, classify_traversable, plan_path, project_blocked, project_traversable,
    select_subgoal_point,
};
use topnav_core::control::{
    choose_controller, segment_servo, ControlMode, ControllerChoice, SwitchReason,
};
use topnav_core::graph::{build_map, compute_goal_costs, GoalCostField, MapGraph};
use topnav_core::localize::{localize, subgoal_mask, LocalizationState, SubGoalMask};
use topnav_core::render::render;
use topnav_core::segment::{extract_segments, Segment};
use topnav_core::world::{SemanticClass, World};
use topnav_core::{Command, Real};

use crate::config::Config;
use crate::episode::{episode_seed, goal_distance, metric_goal_costs, Episode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regime {
    GtMetric,
    GtTopological,
    Noisy,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::GtMetric => "gt-metric",
            Regime::GtTopological => "gt-topological",
            Regime::Noisy => "noisy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gt-metric" => Regime::GtMetric,
            "gt-topological" => Regime::GtTopological,
            "noisy" => Regime::Noisy,
            _ => return None,
        })
    }

    /// Goal costs come from the metric table only in the GT-Metric regime;
    /// the other two plan over the topological graph.
    pub fn uses_metric_costs(self) -> bool {
        matches!(self, Regime::GtMetric)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ControllerKind {
    /// Full pipeline: metric local planner with fallback arbitration.
    Topometric,
    /// Segment-servoing fallback only; the zero-shot baseline.
    ServoOnly,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Topometric => "topometric",
            ControllerKind::ServoOnly => "servo-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "topometric" => ControllerKind::Topometric,
            "servo-only" => ControllerKind::ServoOnly,
            _ => return None,
        })
    }
}

/// Per-(episode, regime) preparation: the teach-run map and goal costs.
pub struct RegimeSetup {
    pub regime: Regime,
    pub assoc: AssociationModel,
    pub map: Option<MapGraph>,
    pub goal_costs: Option<GoalCostField>,
    /// Per-instance geodesic costs, GT-Metric only.
    pub metric_costs: Option<Vec<Option<Real>>>,
}

/// Segments that act as objects in the topological graph: everything but
/// the global ground plane (a single tracked floor instance would collapse
/// the graph into one zero-cost hub).
pub fn graph_segments(world: &World, segments: &[Segment]) -> Vec<Segment> {
    segments
        .iter()
        .filter(|s| world.class_of(s.instance_id) != Some(SemanticClass::Floor))
        .cloned()
        .collect()
}

/// Render the teach traverse and build the regime's planning inputs. The
/// `teach_world` is the world as it was during mapping; episodes may later
/// run in an augmented copy.
pub fn prepare_regime(
    teach_world: &World,
    cfg: &Config,
    episode: &Episode,
    regime: Regime,
) -> RegimeSetup {
    let assoc = match regime {
        Regime::Noisy => AssociationModel::noisy(
            cfg.noise.p_drop,
            cfg.noise.p_swap,
            episode_seed(cfg.bench.seed, episode.index, 0xA550C),
        ),
        _ => AssociationModel::ground_truth(),
    };
    if regime.uses_metric_costs() {
        return RegimeSetup {
            regime,
            assoc,
            map: None,
            goal_costs: None,
            metric_costs: Some(metric_goal_costs(teach_world, episode.goal_instance)),
        };
    }

    let cam = cfg.camera_model();
    let min_area = cfg.min_area();
    let frames: Vec<Vec<Segment>> = episode
        .teach_path
        .iter()
        .enumerate()
        .map(|(f, pose)| {
            let obs = render(teach_world, &cam, *pose).expect("teach pose is free");
            graph_segments(teach_world, &extract_segments(&obs, f, min_area))
        })
        .collect();
    let mut map = build_map(&frames, &assoc, cfg.mapping.window);

    // goal node: the goal instance's segment nearest the teach end, largest
    // area on ties; the traverse guarantees at least one sighting
    let goal_node = map
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.instance_id == episode.goal_instance)
        .max_by_key(|(i, n)| (n.frame_index, n.area_px, std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
        .expect("goal instance appears in the teach map");
    map.goal_node = Some(goal_node);
    let costs = compute_goal_costs(&map, goal_node);
    RegimeSetup { regime, assoc, map: Some(map), goal_costs: Some(costs), metric_costs: None }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u32,
    pub x: Real,
    pub y: Real,
    pub theta: Real,
    pub mode: &'static str,
    pub reason: &'static str,
    pub v: Real,
    pub w: Real,
    /// Localization reference frame, when the regime localizes.
    pub ref_index: Option<usize>,
    pub best_raw: Option<Real>,
    pub best_norm: Option<Real>,
    pub mask_entries: usize,
    pub collided: bool,
    pub goal_dist: Real,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: u32,
    pub final_distance: Real,
    pub switch_count: u32,
    pub collision_count: u32,
    pub trace: Vec<StepRecord>,
}

/// Run one episode. `run_world` is the world the robot acts in (possibly
/// augmented after the teach run); the map inside `setup` came from the
/// teach world.
pub fn run_episode(
    run_world: &World,
    cfg: &Config,
    episode: &Episode,
    setup: &RegimeSetup,
    controller: ControllerKind,
    switch_enabled: bool,
    budget: u32,
) -> EpisodeResult {
    let cam = cfg.camera_model();
    let bev = cfg.bev_params();
    let follow = cfg.follow_params();
    let servo = cfg.servo_params();
    let limits = cfg.control_limits();
    let min_area = cfg.min_area();
    let trav_classes = cfg.traversable_classes();
    let map_frames = setup.map.as_ref().map_or(0, |m| m.frame_count());

    let mut pose = episode.start;
    let mut loc = LocalizationState::new(0, cfg.localization.window_radius);
    let mut trace: Vec<StepRecord> = Vec::new();
    let mut success = false;
    let mut switch_count = 0u32;
    let mut collision_count = 0u32;
    let mut prev_mode: Option<ControlMode> = None;
    let mut final_distance = goal_distance(run_world, episode.goal_instance, pose.position());

    for step in 0..budget {
        let obs = render(run_world, &cam, pose).expect("agent pose stays free");
        // the live frame carries one fixed tag: association noise then
        // depends on the (view, map frame) pairing, not on the step count,
        // the way a deterministic matcher repeats its mistakes
        let segments = extract_segments(&obs, map_frames, min_area);
        let query = graph_segments(run_world, &segments);

        // sub-goal mask per regime
        let (mask, ref_index): (Option<SubGoalMask>, Option<usize>) = if setup.regime.uses_metric_costs() {
            let table = setup.metric_costs.as_ref().unwrap();
            let items: Vec<(usize, Option<usize>, Real)> = query
                .iter()
                .enumerate()
                .filter_map(|(i, s)| {
                    table
                        .get(s.instance_id as usize)
                        .copied()
                        .flatten()
                        .map(|c| (i, None, c))
                })
                .collect();
            (SubGoalMask::from_raw_costs(items, &query).ok(), None)
        } else {
            let map = setup.map.as_ref().unwrap();
            let costs = setup.goal_costs.as_ref().unwrap();
            let localized = match localize(&query, map, loc, &setup.assoc) {
                Ok(ok) => Some(ok),
                Err(_) => {
                    // one retry with a doubled window before giving up
                    let wide = LocalizationState::new(loc.ref_index, loc.window_radius * 2);
                    localize(&query, map, wide, &setup.assoc).ok()
                }
            };
            match localized {
                Some((new_state, corr)) => {
                    loc = LocalizationState::new(new_state.ref_index, cfg.localization.window_radius);
                    let mask = subgoal_mask(&corr, costs, &query).ok();
                    (mask, Some(loc.ref_index))
                }
                None => (None, Some(loc.ref_index)),
            }
        };

        // controller arbitration and command
        let last_collided = trace.last().is_some_and(|r| r.collided);
        let (choice, cmd) = decide_command(
            run_world, cfg, &obs, &segments, &query, mask.as_ref(), controller, switch_enabled,
            last_collided, &cam, &bev, &follow, &servo, &limits, &trav_classes,
        );

        if controller == ControllerKind::Topometric
            && switch_enabled
            && prev_mode == Some(ControlMode::Metric)
            && choice.mode == ControlMode::Fallback
        {
            switch_count += 1;
        }
        prev_mode = Some(choice.mode);

        let (next_pose, collided) = step_agent(run_world, pose, cmd, cfg.agent.dt, cfg.agent.radius);
        if collided {
            collision_count += 1;
        }
        pose = next_pose;
        final_distance = goal_distance(run_world, episode.goal_instance, pose.position());

        trace.push(StepRecord {
            step,
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
            mode: match choice.mode {
                ControlMode::Metric => "metric",
                ControlMode::Fallback => "fallback",
            },
            reason: choice.reason.as_str(),
            v: cmd.linear_v,
            w: cmd.yaw_rate,
            ref_index,
            best_raw: mask.as_ref().map(|m| m.best_entry().raw_cost),
            best_norm: mask.as_ref().map(|m| m.best_entry().norm_cost),
            mask_entries: mask.as_ref().map_or(0, |m| m.entries.len()),
            collided,
            goal_dist: final_distance,
        });

        if final_distance <= cfg.bench.success_radius {
            success = true;
            break;
        }
    }

    EpisodeResult {
        success,
        steps: trace.len() as u32,
        final_distance,
        switch_count,
        collision_count,
        trace,
    }
}

#[allow(clippy::too_many_arguments)]
fn decide_command(
    world: &World,
    cfg: &Config,
    obs: &topnav_core::render::Observation,
    segments: &[Segment],
    query: &[Segment],
    mask: Option<&SubGoalMask>,
    controller: ControllerKind,
    switch_enabled: bool,
    last_collided: bool,
    cam: &topnav_core::Camera,
    bev: &topnav_core::bev::BevParams<Real>,
    follow: &topnav_core::bev::FollowParams<Real>,
    servo: &topnav_core::control::ServoParams<Real>,
    limits: &topnav_core::control::ControlLimits<Real>,
    trav_classes: &[SemanticClass],
) -> (ControllerChoice, Command) {
    let rotate_search = Command::new(0.0, cfg.control.omega_search);

    // contact is ground-truth non-traversability of the spot ahead; the
    // slide-free stop would otherwise repeat the collision forever, so the
    // step after one rotates in place until the blocker enters the view
    if last_collided {
        if controller == ControllerKind::ServoOnly {
            let choice =
                ControllerChoice { mode: ControlMode::Fallback, reason: SwitchReason::Ok };
            return (choice, rotate_search);
        }
        let choice = ControllerChoice {
            mode: ControlMode::Fallback,
            reason: SwitchReason::EmptyTraversability,
        };
        let cmd = if switch_enabled { rotate_search } else { Command::stop() };
        return (choice, cmd);
    }

    // the servo-only baseline never touches the metric pipeline
    if controller == ControllerKind::ServoOnly {
        return match mask {
            Some(m) => (
                ControllerChoice { mode: ControlMode::Fallback, reason: SwitchReason::Ok },
                segment_servo(m, query, servo, limits),
            ),
            None => (
                ControllerChoice {
                    mode: ControlMode::Fallback,
                    reason: SwitchReason::LocalizationDegraded,
                },
                rotate_search,
            ),
        };
    }

    // without a sub-goal mask there is nothing to steer toward: search
    let Some(mask) = mask else {
        let choice = ControllerChoice {
            mode: ControlMode::Fallback,
            reason: SwitchReason::LocalizationDegraded,
        };
        let cmd = if switch_enabled { rotate_search } else { Command::stop() };
        return (choice, cmd);
    };

    // metric pipeline: traversability -> BEV cost map -> sub-goal -> plan
    let trav_mask = classify_traversable(segments, obs.width, obs.height, |id| {
        world.class_of(id).is_some_and(|c| trav_classes.contains(&c))
    });
    let points = project_traversable(&trav_mask, obs, cam, bev);
    let blocked = project_blocked(&trav_mask, obs, cam, bev);
    let costmap = build_costmap(&points, &blocked, bev).ok();
    let subgoal =
        select_subgoal_point(&query[mask.best_entry().query_idx], obs, cam, bev).ok();
    let plan = match (&costmap, &subgoal) {
        (Some(cm), Some(sg)) => Some(plan_path(cm, *sg)),
        _ => None,
    };
    let plan_ok = plan.as_ref().is_some_and(|p| p.feasible);
    let choice = choose_controller(costmap.is_some(), subgoal.is_some(), plan_ok, true);

    let cmd = match choice.mode {
        ControlMode::Metric => topnav_core::bev::follow_path(plan.as_ref().unwrap(), follow),
        ControlMode::Fallback => {
            if switch_enabled {
                segment_servo(mask, query, servo, limits)
            } else {
                Command::stop()
            }
        }
    };
    (choice, cmd)
}
