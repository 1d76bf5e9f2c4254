//! Unicycle kinematics with swept-disc collision against the grid.

use crate::geom::{Pose2, Vec2};
use crate::scalar::Scalar;
use crate::world::World;
use crate::Real;

/// One actuation command. `linear_v` is held by the controllers at either 0
/// or a fixed cruise speed; `yaw_rate` is positive toward the robot's right.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ControlCommand<T> {
    pub linear_v: T,
    pub yaw_rate: T,
}

impl<T: Scalar> ControlCommand<T> {
    pub fn new(linear_v: T, yaw_rate: T) -> Self {
        Self { linear_v, yaw_rate }
    }

    pub fn stop() -> Self {
        Self::new(T::zero(), T::zero())
    }
}

/// Integrate one step: translate along the current heading, then rotate and
/// renormalize. If the swept disc of `radius` touches a solid cell anywhere
/// along the translation, the position is held (no slide) and `collided`
/// is reported; the rotation still applies.
pub fn step_agent(
    world: &World,
    pose: Pose2<Real>,
    cmd: ControlCommand<Real>,
    dt: Real,
    radius: Real,
) -> (Pose2<Real>, bool) {
    debug_assert!(dt > 0.0);
    let new_theta = pose.theta + cmd.yaw_rate * dt;
    let dist = cmd.linear_v * dt;
    if dist == 0.0 {
        return (Pose2::new(pose.x, pose.y, new_theta), false);
    }
    let dir = pose.forward();
    let target = Vec2::new(pose.x + dir.x * dist, pose.y + dir.y * dist);

    // sample the sweep at half-cell granularity, endpoint included
    let steps = ((dist.abs() / (world.cell_size * 0.5)).ceil() as usize).max(1);
    for k in 1..=steps {
        let t = k as Real / steps as Real;
        let p = Vec2::new(pose.x + dir.x * dist * t, pose.y + dir.y * dist * t);
        if !world.disc_is_free(p, radius) {
            return (Pose2::new(pose.x, pose.y, new_theta), true);
        }
    }
    (Pose2::new(target.x, target.y, new_theta), false)
}
