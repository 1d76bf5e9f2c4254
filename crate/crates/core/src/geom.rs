//! Planar geometry primitives.
//!
//! World coordinates follow grid/image conventions: `x` grows with columns
//! (rightward), `y` grows with rows (downward), and headings are measured
//! from +x toward +y. A positive yaw rate therefore turns the robot toward
//! its own right-hand side, which is also the +u direction in the camera
//! image and the +lateral direction in the BEV frame. No sign flips anywhere.

use crate::scalar::{wrap_angle, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dot(self, rhs: Self) -> T {
        self.x * rhs.x + self.y * rhs.y
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn dist(self, rhs: Self) -> T {
        (self - rhs).norm()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> std::ops::Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> std::ops::Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Planar pose; `theta` is kept in (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose2<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Scalar> Pose2<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.x, self.y)
    }

    /// Unit heading vector.
    pub fn forward(&self) -> Vec2<T> {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }

    /// Unit right-hand vector (+90 degrees from heading in this frame).
    pub fn right(&self) -> Vec2<T> {
        Vec2::new(-self.theta.sin(), self.theta.cos())
    }
}
