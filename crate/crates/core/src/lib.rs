//! Topometric navigation core.
//!
//! A deterministic 2.5D grid-world simulator (procedural worlds, raycast
//! instance/depth rendering, unicycle kinematics, geodesic queries) plus the
//! navigation stack that runs on top of it: object-level topological graph
//! mapping and planning, temporal-window localization, a BEV metric local
//! planner, and a segment-servoing fallback controller with an auto-switch
//! arbiter.
//!
//! Geometric math is generic over [`Scalar`] (`f32`/`f64`); the simulator
//! and pipeline pin [`Real`].

pub mod agent;
pub mod assoc;
pub mod bev;
pub mod camera;
pub mod control;
pub mod delaunay;
pub mod geodesic;
pub mod graph;
pub mod geom;
pub mod grid;
pub mod localize;
pub mod render;
pub mod scalar;
pub mod segment;
pub mod world;
pub mod worldgen;

pub use scalar::Scalar;

/// Scalar type used by the simulator and the benchmark pipeline.
pub type Real = f64;

/// Planar pose at pipeline precision.
pub type Pose = geom::Pose2<Real>;

/// Camera at pipeline precision.
pub type Camera = camera::CameraModel<Real>;

/// Actuation command at pipeline precision.
pub type Command = agent::ControlCommand<Real>;
