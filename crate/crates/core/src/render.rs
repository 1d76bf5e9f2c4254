//! Column-wise DDA raycaster over the occupancy grid.
//!
//! Walls and obstacles are vertical prisms standing on a flat floor. Each
//! column casts one ray; prism hits are painted near-to-far into the rows
//! their front faces span, then analytic floor casting fills the remaining
//! below-horizon rows. In this geometry the front face of a prism covers
//! exactly the floor strip it occludes, so the two passes compose without
//! overdraw.

use thiserror::Error;

use crate::camera::CameraModel;
use crate::geom::Pose2;
use crate::world::{CellState, World, NO_INSTANCE};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub width: u32,
    pub height: u32,
    /// Row-major instance ids; `NO_INSTANCE` for sky.
    pub instance: Vec<u32>,
    /// Row-major planar z-depth in meters; 0 on sky pixels.
    pub depth: Vec<Real>,
    /// Ground-truth camera pose. The harness uses it for scoring; the
    /// planner and controllers never read it.
    pub pose: Pose2<Real>,
}

impl Observation {
    #[inline]
    pub fn idx(&self, u: u32, v: u32) -> usize {
        debug_assert!(u < self.width && v < self.height);
        (v * self.width + u) as usize
    }

    #[inline]
    pub fn instance_at(&self, u: u32, v: u32) -> u32 {
        self.instance[self.idx(u, v)]
    }

    #[inline]
    pub fn depth_at(&self, u: u32, v: u32) -> Real {
        self.depth[self.idx(u, v)]
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RenderError {
    #[error("camera pose ({x:.3}, {y:.3}) is inside a solid cell")]
    PoseInSolid { x: Real, y: Real },
}

pub fn render(
    world: &World,
    camera: &CameraModel<Real>,
    pose: Pose2<Real>,
) -> Result<Observation, RenderError> {
    let pos_cell = world.cell_of(pose.position());
    if !world.is_free(pos_cell) {
        return Err(RenderError::PoseInSolid { x: pose.x, y: pose.y });
    }
    let (w, h) = (camera.width as usize, camera.height as usize);
    let mut instance = vec![NO_INSTANCE; w * h];
    let mut depth = vec![0.0; w * h];
    let heights: Vec<Real> = world.instances.iter().map(|i| i.height).collect();

    let forward = pose.forward();
    let right = pose.right();
    let max_range = (world.width().max(world.height()) as Real + 2.0) * world.cell_size * 2.0;
    let mut filled = vec![false; h];

    // shared per-row flat-ground depths below the horizon
    let v_start = (camera.cy.floor() as usize + 1).min(h);
    let floor_z: Vec<Real> =
        (v_start..h).map(|v| camera.floor_depth(v as Real).unwrap_or(0.0)).collect();
    let inv_cs = 1.0 / world.cell_size;
    let (ww, wh) = (world.width() as i64, world.height() as i64);
    let surface = world.surface.cells();

    for u in 0..w {
        filled.fill(false);
        let mut unfilled = h;
        let x_ndc = camera.x_ndc(u as Real);
        // dir has unit forward component, so `pos + z * dir` lies at planar depth z
        let dir_x = forward.x + x_ndc * right.x;
        let dir_y = forward.y + x_ndc * right.y;
        let inv_norm = 1.0 / (1.0 + x_ndc * x_ndc).sqrt();
        let (dx, dy) = (dir_x * inv_norm, dir_y * inv_norm);
        let cos_a = inv_norm; // forward . dir_unit

        // DDA over grid cells; `s` is Euclidean distance to each cell entry.
        let cs = world.cell_size;
        let mut cell = pos_cell;
        let step_x = if dx > 0.0 { 1 } else { -1 };
        let step_y = if dy > 0.0 { 1 } else { -1 };
        let delta_x = if dx != 0.0 { (cs / dx).abs() } else { Real::INFINITY };
        let delta_y = if dy != 0.0 { (cs / dy).abs() } else { Real::INFINITY };
        let fx0 = pose.x / cs - cell.x as Real;
        let fy0 = pose.y / cs - cell.y as Real;
        let mut side_x = if dx > 0.0 { (1.0 - fx0) * delta_x } else { fx0 * delta_x };
        let mut side_y = if dy > 0.0 { (1.0 - fy0) * delta_y } else { fy0 * delta_y };

        loop {
            let s;
            if side_x < side_y {
                s = side_x;
                side_x += delta_x;
                cell.x += step_x;
            } else {
                s = side_y;
                side_y += delta_y;
                cell.y += step_y;
            }
            if s > max_range || !world.occupancy.in_bounds(cell) {
                break;
            }
            let state = *world.occupancy.get(cell);
            if state == CellState::Free {
                continue;
            }
            let id = *world.surface.get(cell);
            let z = (s * cos_a).max(1e-9);
            let inst_h = heights[id as usize];
            let v_bot = camera.floor_row(z);
            let v_top = camera.cy - camera.fy * (inst_h - camera.cam_height) / z;
            let lo = v_top.ceil().max(0.0) as usize;
            let hi_f = v_bot.floor().min((h - 1) as Real);
            if hi_f >= lo as Real {
                #[allow(clippy::needless_range_loop)]
                for v in lo..=hi_f as usize {
                    if !filled[v] {
                        filled[v] = true;
                        unfilled -= 1;
                        let i = v * w + u;
                        instance[i] = id;
                        depth[i] = z;
                    }
                }
            }
            if state == CellState::Wall || unfilled == 0 {
                break;
            }
        }

        // Floor casting: any still-open row below the horizon sees ground.
        for v in v_start..h {
            if filled[v] {
                continue;
            }
            let z = floor_z[v - v_start];
            if z <= 0.0 {
                continue;
            }
            let cx = ((pose.x + z * dir_x) * inv_cs).floor() as i64;
            let cy = ((pose.y + z * dir_y) * inv_cs).floor() as i64;
            if cx >= 0 && cy >= 0 && cx < ww && cy < wh {
                let i = v * w + u;
                instance[i] = surface[cy as usize * ww as usize + cx as usize];
                depth[i] = z;
            }
        }
    }

    Ok(Observation {
        width: camera.width,
        height: camera.height,
        instance,
        depth,
        pose,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraModel;
    use crate::world::SemanticClass;
    use crate::worldgen::{generate_world, WorldGenParams};

    fn open_world() -> World {
        generate_world(
            4,
            &WorldGenParams { max_rooms: 1, obstacle_count: 0, rug_count: 0, ..Default::default() },
        )
        .unwrap()
    }

    fn camera() -> CameraModel<Real> {
        CameraModel::new(640, 480, std::f64::consts::FRAC_PI_2, 0.4).unwrap()
    }

    /// Pose facing the east border wall from `dist` meters before its front face.
    fn pose_facing_east_wall(world: &World, dist: Real) -> Pose2<Real> {
        let wall_front_x = (world.width() as Real - 1.0) * world.cell_size;
        let cy = world.cell_center(world.spawn).y;
        Pose2::new(wall_front_x - dist, cy, 0.0)
    }

    #[test]
    fn center_column_wall_depth() {
        let world = open_world();
        let cam = camera();
        let pose = pose_facing_east_wall(&world, 2.0);
        let obs = render(&world, &cam, pose).unwrap();
        let d = obs.depth_at(cam.cx as u32, cam.cy as u32);
        assert!((d - 2.0).abs() <= world.cell_size, "depth {d}");
        assert_eq!(
            world.class_of(obs.instance_at(cam.cx as u32, cam.cy as u32)),
            Some(SemanticClass::Wall)
        );
    }

    #[test]
    fn planar_depth_constant_across_wall_columns() {
        let world = open_world();
        let cam = camera();
        let pose = pose_facing_east_wall(&world, 2.0);
        let obs = render(&world, &cam, pose).unwrap();
        // at z=2 a ray at the image quarter has alpha = atan(0.5); ray length
        // would be 2/cos(alpha) ~= 2.24, planar depth must stay ~2
        for u in [160u32, 320, 480] {
            let v = cam.cy as u32;
            if world.class_of(obs.instance_at(u, v)) == Some(SemanticClass::Wall) {
                let d = obs.depth_at(u, v);
                assert!((d - 2.0).abs() <= world.cell_size, "column {u} depth {d}");
            }
        }
    }

    #[test]
    fn floor_rows_follow_flat_ground_relation() {
        let world = open_world();
        let cam = camera();
        let pose = pose_facing_east_wall(&world, 6.0);
        let obs = render(&world, &cam, pose).unwrap();
        // row where the floor should appear at 3 m
        let v = cam.floor_row(3.0).ceil() as u32;
        let u = cam.cx as u32;
        assert_eq!(world.class_of(obs.instance_at(u, v)), Some(SemanticClass::Floor));
        let expect = cam.floor_depth(v as Real).unwrap();
        assert!((obs.depth_at(u, v) - expect).abs() < 1e-9);
        assert!((expect - 3.0).abs() < 0.1);
    }

    #[test]
    fn rendering_is_pure() {
        let world = generate_world(6, &WorldGenParams::default()).unwrap();
        let cam = camera();
        let c = world.cell_center(world.spawn);
        let pose = Pose2::new(c.x, c.y, 0.9);
        let a = render(&world, &cam, pose).unwrap();
        let b = render(&world, &cam, pose).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pose_in_wall_is_an_error() {
        let world = open_world();
        let cam = camera();
        let bad = Pose2::new(0.1, 0.1, 0.0);
        assert!(matches!(render(&world, &cam, bad), Err(RenderError::PoseInSolid { .. })));
    }

    #[test]
    fn short_obstacle_reveals_floor_behind_it() {
        // a prism below eye height occludes exactly the floor strip behind
        // its face; rows above its top edge see floor again
        let mut world = open_world();
        let cam = camera();
        // plant a low 1-cell obstacle 2 m ahead of the camera
        let c = world.cell_center(world.spawn);
        let pose = Pose2::new(c.x, c.y, 0.0);
        let obst_cell = world.cell_of(crate::geom::Vec2::new(c.x + 2.0, c.y));
        *world.occupancy.get_mut(obst_cell) = crate::world::CellState::Obstacle;
        let id = world.instances.len() as u32;
        *world.surface.get_mut(obst_cell) = id;
        world.instances.push(crate::world::ObjectInstance {
            id,
            class: SemanticClass::Furniture,
            footprint: vec![obst_cell],
            height: 0.25, // below the 0.4 m camera
        });
        let floor_idx = world.floor_instance_id as usize;
        world.instances[floor_idx].footprint.retain(|fc| fc != &obst_cell);
        world.validate().unwrap();

        let obs = render(&world, &cam, pose).unwrap();
        let u = cam.cx as u32;
        // at the obstacle's depth the center column shows the prism face
        let face_row = (cam.floor_row(2.0) - 5.0) as u32;
        assert_eq!(obs.instance_at(u, face_row), id);
        // above its top edge the floor behind is visible again and farther
        let z_front = obs.depth_at(u, face_row);
        let top_row = cam.cy - cam.fy * (0.25 - cam.cam_height) / z_front;
        let behind_row = (top_row - 3.0) as u32;
        assert_eq!(
            world.class_of(obs.instance_at(u, behind_row)),
            Some(SemanticClass::Floor),
            "expected floor behind the short obstacle"
        );
        assert!(obs.depth_at(u, behind_row) > z_front);
    }

    #[test]
    fn tall_obstacle_blocks_view_behind() {
        let mut world = open_world();
        let cam = camera();
        let c = world.cell_center(world.spawn);
        let pose = Pose2::new(c.x, c.y, 0.0);
        let obst_cell = world.cell_of(crate::geom::Vec2::new(c.x + 2.0, c.y));
        *world.occupancy.get_mut(obst_cell) = crate::world::CellState::Obstacle;
        let id = world.instances.len() as u32;
        *world.surface.get_mut(obst_cell) = id;
        world.instances.push(crate::world::ObjectInstance {
            id,
            class: SemanticClass::Fixture,
            footprint: vec![obst_cell],
            height: 2.0,
        });
        let floor_idx = world.floor_instance_id as usize;
        world.instances[floor_idx].footprint.retain(|fc| fc != &obst_cell);
        world.validate().unwrap();

        let obs = render(&world, &cam, pose).unwrap();
        let u = cam.cx as u32;
        // the fixture towers over the camera: every row between the horizon
        // and its floor contact shows it; no floor farther than its face is
        // visible in this column
        let v_bot = cam.floor_row(obs.depth_at(u, cam.cy as u32 + 1)).floor() as u32;
        for v in [cam.cy as u32 + 1, cam.cy as u32 + 40, v_bot - 1] {
            assert_eq!(obs.instance_at(u, v), id, "row {v}");
        }
        for v in v_bot + 1..cam.height {
            if world.class_of(obs.instance_at(u, v)) == Some(SemanticClass::Floor) {
                assert!(obs.depth_at(u, v) < obs.depth_at(u, cam.cy as u32 + 1));
            }
        }
    }

    #[test]
    fn depth_positive_wherever_an_instance_is_seen() {
        let world = generate_world(12, &WorldGenParams::default()).unwrap();
        let cam = camera();
        let c = world.cell_center(world.spawn);
        let obs = render(&world, &cam, Pose2::new(c.x, c.y, -2.1)).unwrap();
        for i in 0..obs.instance.len() {
            if obs.instance[i] != NO_INSTANCE {
                assert!(obs.depth[i] > 0.0);
            }
        }
    }
}
