//! High-level benchmark orchestration shared by the CLI and the acceptance
//! suite: run a matrix of (regime, controller) over the episode list and
//! collect rows, traces, and summaries.

use std::collections::BTreeMap;

use crate::aggregate::{aggregate, render_table, summary_json, GroupKey, GroupStats, RunRow};
use crate::config::Config;
use crate::episode::{augment_with_obstacles, select_alt_goal, BenchSet, Episode};
use crate::run::{prepare_regime, run_episode, ControllerKind, EpisodeResult, Regime, RegimeSetup};
use crate::trace::{write_trace, TraceHeader, TRACE_SCHEMA};

#[derive(Clone, Debug, Default)]
pub struct MatrixOutput {
    pub rows: Vec<RunRow>,
    /// (file name, contents) pairs when trace collection is on.
    pub traces: Vec<(String, String)>,
}

impl MatrixOutput {
    pub fn stats(&self) -> BTreeMap<GroupKey, GroupStats> {
        aggregate(&self.rows)
    }

    pub fn summary_table(&self) -> String {
        render_table(&self.stats())
    }

    pub fn summary_json(&self) -> String {
        summary_json(&self.stats())
    }
}

pub struct MatrixSpec<'a> {
    pub regimes: &'a [Regime],
    pub controllers: &'a [ControllerKind],
    pub budget: u32,
    pub switch_enabled: bool,
    pub collect_traces: bool,
    /// Run against worlds augmented with post-teach obstacles.
    pub augment_obstacles: usize,
    /// Replace each episode's goal with its alternate seen-but-unvisited
    /// goal, skipping episodes that have none.
    pub alt_goals: bool,
}

impl Default for MatrixSpec<'_> {
    fn default() -> Self {
        Self {
            regimes: &[Regime::GtMetric],
            controllers: &[ControllerKind::Topometric],
            budget: 500,
            switch_enabled: true,
            collect_traces: false,
            augment_obstacles: 0,
            alt_goals: false,
        }
    }
}

/// Restrict a bench set to the episodes a predicate keeps; worlds are
/// shared by clone so indices stay valid.
pub fn subset(set: &BenchSet, keep: impl Fn(&Episode) -> bool) -> BenchSet {
    BenchSet {
        worlds: set.worlds.clone(),
        episodes: set.episodes.iter().filter(|e| keep(e)).cloned().collect(),
        warnings: Vec::new(),
    }
}

fn trace_name(ep: &Episode, regime: Regime, controller: ControllerKind, spec: &MatrixSpec) -> String {
    let mut name = format!(
        "ep{:03}_{}_{}_{}",
        ep.index,
        ep.category.as_str(),
        regime.as_str(),
        controller.as_str()
    );
    if !spec.switch_enabled {
        name.push_str("_noswitch");
    }
    if spec.alt_goals {
        name.push_str("_alt");
    }
    if spec.augment_obstacles > 0 {
        name.push_str("_aug");
    }
    name.push_str(".jsonl");
    name
}

/// Run every episode of the set through the matrix. Setups are prepared
/// once per (episode, regime) and shared across controllers; teach maps
/// always come from the unaugmented world.
pub fn run_matrix(cfg: &Config, set: &BenchSet, spec: &MatrixSpec) -> MatrixOutput {
    let mut out = MatrixOutput::default();
    for episode in &set.episodes {
        let teach_world = &set.worlds[episode.world_index];

        // alternate goals replace the target but keep the teach traverse
        let episode_run: Episode = if spec.alt_goals {
            match select_alt_goal(teach_world, cfg, episode) {
                Ok(alt) => Episode { goal_instance: alt, ..episode.clone() },
                Err(_) => continue,
            }
        } else {
            episode.clone()
        };

        let run_world = if spec.augment_obstacles > 0 {
            augment_with_obstacles(teach_world, cfg, &episode_run, spec.augment_obstacles)
        } else {
            teach_world.clone()
        };

        for &regime in spec.regimes {
            let setup: RegimeSetup = prepare_regime(teach_world, cfg, &episode_run, regime);
            for &controller in spec.controllers {
                let result: EpisodeResult = run_episode(
                    &run_world,
                    cfg,
                    &episode_run,
                    &setup,
                    controller,
                    spec.switch_enabled,
                    spec.budget,
                );
                out.rows.push(RunRow {
                    key: GroupKey { regime, controller, category: episode_run.category },
                    success: result.success,
                    steps: result.steps,
                    switches: result.switch_count,
                });
                if spec.collect_traces {
                    let header = TraceHeader {
                        schema: TRACE_SCHEMA.into(),
                        episode: episode_run.index,
                        world_seed: episode_run.world_seed,
                        category: episode_run.category.as_str().into(),
                        regime: regime.as_str().into(),
                        controller: controller.as_str().into(),
                        switch_enabled: spec.switch_enabled,
                        budget: spec.budget,
                        goal_instance: episode_run.goal_instance,
                        alt_goal: spec.alt_goals,
                    };
                    out.traces.push((
                        trace_name(&episode_run, regime, controller, spec),
                        write_trace(&header, &result),
                    ));
                }
            }
        }
    }
    out
}
