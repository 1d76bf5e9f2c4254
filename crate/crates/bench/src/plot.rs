//! SVG trajectory plots: world occupancy, teach path, and the executed
//! path colored by controller mode. Output bytes are deterministic for
//! identical inputs.

use std::fmt::Write as _;

use topnav_core::world::{CellState, SemanticClass, World};
use topnav_core::{Pose, Real};

use crate::run::EpisodeResult;

const SCALE: Real = 40.0; // px per meter

fn class_color(class: SemanticClass) -> &'static str {
    match class {
        SemanticClass::Wall => "#3b3b3b",
        SemanticClass::Furniture => "#8a5a2b",
        SemanticClass::Fixture => "#5b5b8a",
        SemanticClass::Rug => "#b8d48a",
        SemanticClass::Floor | SemanticClass::Ceiling => "#ffffff",
    }
}

fn fmt(v: Real) -> String {
    format!("{:.2}", v * SCALE)
}

/// Render one episode into an SVG document.
pub fn render_svg(
    world: &World,
    teach: &[Pose],
    result: &EpisodeResult,
    goal_instance: u32,
    start: Pose,
) -> String {
    let w_m = world.width() as Real * world.cell_size;
    let h_m = world.height() as Real * world.cell_size;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"##,
        fmt(w_m),
        fmt(h_m),
        fmt(w_m),
        fmt(h_m)
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#f7f5f0"/>"##);

    // solid cells, goal footprint highlighted
    let goal = world.instance(goal_instance);
    for (cell, state) in world.occupancy.iter_cells() {
        let id = *world.surface.get(cell);
        let is_goal = goal.is_some_and(|g| g.id == id);
        let color = if is_goal {
            "#2e9e44"
        } else {
            match state {
                CellState::Free => {
                    if world.class_of(id) == Some(SemanticClass::Rug) {
                        class_color(SemanticClass::Rug)
                    } else {
                        continue;
                    }
                }
                _ => world.class_of(id).map(class_color).unwrap_or("#000000"),
            }
        };
        let _ = writeln!(
            svg,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"##,
            fmt(cell.x as Real * world.cell_size),
            fmt(cell.y as Real * world.cell_size),
            fmt(world.cell_size),
            fmt(world.cell_size),
            color
        );
    }

    // teach path: dashed gray
    if teach.len() >= 2 {
        let pts: Vec<String> =
            teach.iter().map(|p| format!("{},{}", fmt(p.x), fmt(p.y))).collect();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#9a9a9a" stroke-width="2" stroke-dasharray="6,5"/>"##,
            pts.join(" ")
        );
    }

    // executed path: one polyline per run of equal controller mode
    let mut i = 0usize;
    let trace = &result.trace;
    while i < trace.len() {
        let mode = &trace[i].mode;
        let mut j = i;
        while j + 1 < trace.len() && trace[j + 1].mode == *mode {
            j += 1;
        }
        // include the previous point so segments connect
        let from = i.saturating_sub(1);
        let pts: Vec<String> = trace[from..=j]
            .iter()
            .map(|r| format!("{},{}", fmt(r.x), fmt(r.y)))
            .collect();
        let color = if *mode == "metric" { "#1f6fb4" } else { "#e08020" };
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="2.5"/>"##,
            pts.join(" "),
            color
        );
        i = j + 1;
    }

    // start and end markers
    let _ = writeln!(
        svg,
        r##"<circle cx="{}" cy="{}" r="6" fill="#1f6fb4" stroke="#ffffff" stroke-width="1.5"/>"##,
        fmt(start.x),
        fmt(start.y)
    );
    if let Some(last) = trace.last() {
        let end_color = if result.success { "#2e9e44" } else { "#c23b22" };
        let _ = writeln!(
            svg,
            r##"<circle cx="{}" cy="{}" r="6" fill="{}" stroke="#ffffff" stroke-width="1.5"/>"##,
            fmt(last.x),
            fmt(last.y),
            end_color
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::StepRecord;
    use topnav_core::geom::Pose2;
    use topnav_core::worldgen::{generate_world, WorldGenParams};

    fn record(step: u32, x: Real, y: Real, mode: &'static str) -> StepRecord {
        StepRecord {
            step,
            x,
            y,
            theta: 0.0,
            mode,
            reason: "ok",
            v: 0.25,
            w: 0.0,
            ref_index: None,
            best_raw: None,
            best_norm: None,
            mask_entries: 0,
            collided: false,
            goal_dist: 1.0,
        }
    }

    #[test]
    fn mode_runs_become_separate_polylines() {
        let world = generate_world(5, &WorldGenParams::default()).unwrap();
        let result = EpisodeResult {
            success: true,
            steps: 6,
            final_distance: 0.5,
            switch_count: 2,
            collision_count: 0,
            trace: vec![
                record(0, 2.0, 2.0, "metric"),
                record(1, 2.1, 2.0, "metric"),
                record(2, 2.2, 2.0, "fallback"),
                record(3, 2.3, 2.0, "fallback"),
                record(4, 2.4, 2.0, "metric"),
                record(5, 2.5, 2.0, "metric"),
            ],
        };
        let goal = world.instances.iter().find(|i| i.id > 0).unwrap().id;
        let svg = render_svg(&world, &[], &result, goal, Pose2::new(2.0, 2.0, 0.0));
        let metric_lines = svg.matches("#1f6fb4").count();
        let fallback_lines = svg.matches("#e08020").count();
        // start marker shares the metric color: 2 metric path runs + marker
        assert_eq!(metric_lines, 3);
        assert_eq!(fallback_lines, 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn identical_inputs_identical_bytes() {
        let world = generate_world(6, &WorldGenParams::default()).unwrap();
        let result = EpisodeResult {
            success: false,
            steps: 1,
            final_distance: 3.0,
            switch_count: 0,
            collision_count: 0,
            trace: vec![record(0, 3.0, 3.0, "metric")],
        };
        let goal = world.instances.iter().find(|i| i.id > 0).unwrap().id;
        let teach = vec![Pose2::new(3.0, 3.0, 0.0), Pose2::new(4.0, 3.0, 0.0)];
        let a = render_svg(&world, &teach, &result, goal, teach[0]);
        let b = render_svg(&world, &teach, &result, goal, teach[0]);
        assert_eq!(a, b);
    }
}
