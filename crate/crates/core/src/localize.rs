//! Temporal-window localization against the map and the per-segment
//! sub-goal cost mask that drives both controllers.

use thiserror::Error;

use crate::assoc::{associate, AssociationModel};
use crate::graph::{GoalCostField, MapGraph};
use crate::segment::Segment;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalizationState {
    /// Map frame the robot last localized against.
    pub ref_index: usize,
    pub window_radius: usize,
}

impl LocalizationState {
    pub fn new(ref_index: usize, window_radius: usize) -> Self {
        assert!(window_radius >= 1);
        Self { ref_index, window_radius }
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LocalizeError {
    #[error("no segment matches within the temporal window")]
    Lost,
}

/// Correspondence from a query segment to a map node.
pub type Correspondence = (usize, usize);

/// Match the query frame against map frames in a window around the previous
/// reference. The winning frame is the one with the most matches (ties:
/// nearest to the previous reference, then lower index); matches from the
/// other candidates fill in query segments the winner missed.
pub fn localize(
    query: &[Segment],
    map: &MapGraph,
    state: LocalizationState,
    assoc: &AssociationModel,
) -> Result<(LocalizationState, Vec<Correspondence>), LocalizeError> {
    assert!(map.frame_count() > 0, "empty map");
    let frames = map.frame_count();
    let r = state.window_radius;
    let lo = state.ref_index.saturating_sub(r);
    let hi = (state.ref_index + r).min(frames - 1);

    let mut per_candidate: Vec<(usize, Vec<Correspondence>)> = Vec::new();
    for c in lo..=hi {
        let matches = associate(query, map.frame_segments(c), assoc);
        let mapped: Vec<Correspondence> =
            matches.into_iter().map(|(q, m)| (q, map.node_index(c, m))).collect();
        per_candidate.push((c, mapped));
    }

    let Some(&(winner, _)) = per_candidate
        .iter()
        .max_by(|(ca, ma), (cb, mb)| {
            ma.len()
                .cmp(&mb.len())
                .then_with(|| {
                    let da = ca.abs_diff(state.ref_index);
                    let db = cb.abs_diff(state.ref_index);
                    db.cmp(&da) // nearer wins
                })
                .then_with(|| cb.cmp(ca)) // lower index wins
        })
        .filter(|(_, m)| !m.is_empty())
    else {
        return Err(LocalizeError::Lost);
    };

    let mut corr: Vec<Correspondence> = Vec::new();
    let mut matched_query = vec![false; query.len()];
    let mut order: Vec<usize> = (lo..=hi).collect();
    order.sort_by_key(|c| (c.abs_diff(winner), *c));
    for c in order {
        let (_, matches) = per_candidate.iter().find(|(cc, _)| *cc == c).unwrap();
        for &(q, node) in matches {
            if !matched_query[q] {
                matched_query[q] = true;
                corr.push((q, node));
            }
        }
    }
    corr.sort_unstable();

    Ok((LocalizationState::new(winner, state.window_radius), corr))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubGoalEntry {
    pub query_idx: usize,
    /// Matched map node; `None` when costs come from a metric table rather
    /// than the graph.
    pub matched_node: Option<usize>,
    /// Path length toward the goal (graph hops + 1, or metric meters).
    pub raw_cost: Real,
    /// Min-max normalization of `raw_cost` over the mask; all zeros when
    /// every raw cost is equal.
    pub norm_cost: Real,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubGoalMask {
    pub entries: Vec<SubGoalEntry>,
    /// Index into `entries` of the minimum-raw-cost segment (ties: larger
    /// query area, then lower local id).
    pub best: usize,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SubgoalError {
    #[error("every matched segment is unreachable from the goal")]
    NoViableSubgoal,
}

impl SubGoalMask {
    /// Normalize raw costs and pick the best entry. `items` pairs a query
    /// segment with its (optional) map node and raw cost.
    pub fn from_raw_costs(
        items: Vec<(usize, Option<usize>, Real)>,
        query: &[Segment],
    ) -> Result<SubGoalMask, SubgoalError> {
        if items.is_empty() {
            return Err(SubgoalError::NoViableSubgoal);
        }
        let min = items.iter().map(|(_, _, c)| *c).fold(Real::INFINITY, Real::min);
        let max = items.iter().map(|(_, _, c)| *c).fold(Real::NEG_INFINITY, Real::max);
        let span = max - min;
        let entries: Vec<SubGoalEntry> = items
            .into_iter()
            .map(|(query_idx, matched_node, raw_cost)| SubGoalEntry {
                query_idx,
                matched_node,
                raw_cost,
                norm_cost: if span > 0.0 { (raw_cost - min) / span } else { 0.0 },
            })
            .collect();
        let best = entries
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.raw_cost
                    .total_cmp(&b.raw_cost)
                    .then_with(|| query[b.query_idx].area_px.cmp(&query[a.query_idx].area_px))
                    .then_with(|| query[a.query_idx].local_id.cmp(&query[b.query_idx].local_id))
            })
            .map(|(i, _)| i)
            .unwrap();
        Ok(SubGoalMask { entries, best })
    }

    pub fn best_entry(&self) -> &SubGoalEntry {
        &self.entries[self.best]
    }
}

/// Sub-goal costs for the localized query segments. A query segment's raw
/// cost is its matched node's goal cost plus one intra hop (the constant
/// bridge from the live frame into the map; ranking is unaffected).
/// Unreachable matches are dropped.
pub fn subgoal_mask(
    correspondences: &[Correspondence],
    costs: &GoalCostField,
    query: &[Segment],
) -> Result<SubGoalMask, SubgoalError> {
    let items: Vec<(usize, Option<usize>, Real)> = correspondences
        .iter()
        .filter_map(|&(q, node)| {
            costs.get(node).map(|c| (q, Some(node), (c + 1) as Real))
        })
        .collect();
    SubGoalMask::from_raw_costs(items, query)
}
