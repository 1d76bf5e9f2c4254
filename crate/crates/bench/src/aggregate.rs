//! Success-rate aggregation over (regime, controller, category) groups,
//! rendered as an aligned table and a machine-readable summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::episode::Category;
use crate::run::{ControllerKind, Regime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub regime: Regime,
    pub controller: ControllerKind,
    pub category: Category,
}

/// The aggregation input: one row per finished episode.
#[derive(Clone, Copy, Debug)]
pub struct RunRow {
    pub key: GroupKey,
    pub success: bool,
    pub steps: u32,
    pub switches: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupStats {
    pub episodes: usize,
    pub successes: usize,
    /// Percent in [0, 100].
    pub success_rate: f64,
    pub mean_steps: f64,
    pub mean_switches: f64,
}

pub fn aggregate(rows: &[RunRow]) -> BTreeMap<GroupKey, GroupStats> {
    let mut acc: BTreeMap<GroupKey, (usize, usize, u64, u64)> = BTreeMap::new();
    for row in rows {
        let e = acc.entry(row.key).or_insert((0, 0, 0, 0));
        e.0 += 1;
        e.1 += row.success as usize;
        e.2 += row.steps as u64;
        e.3 += row.switches as u64;
    }
    acc.into_iter()
        .map(|(k, (n, s, steps, switches))| {
            (
                k,
                GroupStats {
                    episodes: n,
                    successes: s,
                    success_rate: 100.0 * s as f64 / n as f64,
                    mean_steps: steps as f64 / n as f64,
                    mean_switches: switches as f64 / n as f64,
                },
            )
        })
        .collect()
}

/// Aligned text table, one row per group, in key order.
pub fn render_table(stats: &BTreeMap<GroupKey, GroupStats>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<12} {:<6} {:>4} {:>8} {:>11} {:>10}",
        "regime", "controller", "cat", "n", "success", "mean-steps", "switches"
    );
    for (k, s) in stats {
        let _ = writeln!(
            out,
            "{:<16} {:<12} {:<6} {:>4} {:>7.1}% {:>11.1} {:>10.2}",
            k.regime.as_str(),
            k.controller.as_str(),
            k.category.as_str(),
            s.episodes,
            s.success_rate,
            s.mean_steps,
            s.mean_switches,
        );
    }
    out
}

/// Deterministic JSON summary keyed by `regime/controller/category`.
pub fn summary_json(stats: &BTreeMap<GroupKey, GroupStats>) -> String {
    let keyed: BTreeMap<String, &GroupStats> = stats
        .iter()
        .map(|(k, s)| {
            (
                format!(
                    "{}/{}/{}",
                    k.regime.as_str(),
                    k.controller.as_str(),
                    k.category.as_str()
                ),
                s,
            )
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&keyed).expect("summary serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(r: Regime, c: ControllerKind, cat: Category) -> GroupKey {
        GroupKey { regime: r, controller: c, category: cat }
    }

    fn row(cat: Category, success: bool, steps: u32) -> RunRow {
        RunRow {
            key: key(Regime::GtMetric, ControllerKind::Topometric, cat),
            success,
            steps,
            switches: if success { 0 } else { 2 },
        }
    }

    #[test]
    fn three_of_four_is_75_percent() {
        let rows = vec![
            row(Category::Easy, true, 100),
            row(Category::Easy, true, 120),
            row(Category::Easy, true, 80),
            row(Category::Easy, false, 500),
        ];
        let stats = aggregate(&rows);
        let s = &stats[&key(Regime::GtMetric, ControllerKind::Topometric, Category::Easy)];
        assert_eq!(s.success_rate, 75.0);
        assert_eq!(s.episodes, 4);
        assert_eq!(s.mean_steps, 200.0);
    }

    #[test]
    fn golden_table_for_canned_results() {
        let rows = vec![
            row(Category::Easy, true, 90),
            row(Category::Easy, false, 500),
            row(Category::Hard, true, 200),
            RunRow {
                key: key(Regime::Noisy, ControllerKind::ServoOnly, Category::Hard),
                success: false,
                steps: 500,
                switches: 0,
            },
        ];
        let stats = aggregate(&rows);
        let table = render_table(&stats);
        let expect = "\
regime           controller   cat       n  success  mean-steps   switches
gt-metric        topometric   easy      2    50.0%       295.0       1.00
gt-metric        topometric   hard      1   100.0%       200.0       0.00
noisy            servo-only   hard      1     0.0%       500.0       0.00
";
        assert_eq!(table, expect);
    }

    #[test]
    fn summary_json_is_sorted_and_stable() {
        let rows = vec![row(Category::Hard, true, 10), row(Category::Easy, false, 20)];
        let stats = aggregate(&rows);
        let a = summary_json(&stats);
        let b = summary_json(&aggregate(&rows));
        assert_eq!(a, b);
        let easy_pos = a.find("easy").unwrap();
        let hard_pos = a.find("hard").unwrap();
        assert!(easy_pos < hard_pos);
    }
}
