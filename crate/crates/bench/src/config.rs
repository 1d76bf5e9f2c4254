//! Benchmark configuration: one TOML file covers the camera, the world
//! generator, the BEV planner, controller gains, noise probabilities, and
//! the bench dimensions. Field defaults mirror `topnav.toml` at the repo
//! root; a round-trip test keeps them in sync.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use topnav_core::bev::{BevParams, FollowParams};
use topnav_core::camera::CameraModel;
use topnav_core::control::{ControlLimits, ServoParams};
use topnav_core::world::SemanticClass;
use topnav_core::worldgen::WorldGenParams;
use topnav_core::{Camera, Real};

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub width: u32,
    pub height: u32,
    pub hfov_deg: Real,
    pub cam_height: Real,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { width: 640, height: 480, hfov_deg: 90.0, cam_height: 0.4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub width: usize,
    pub height: usize,
    pub cell_size: Real,
    pub max_rooms: usize,
    pub min_leaf: usize,
    pub door_cells: usize,
    pub wall_chunk_cells: usize,
    pub obstacle_count: usize,
    pub rug_count: usize,
    pub wall_height: Real,
    pub furniture_height: (Real, Real),
    pub fixture_height: (Real, Real),
    pub rug_height: Real,
    pub max_place_retries: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let p = WorldGenParams::default();
        Self {
            width: p.width,
            height: p.height,
            cell_size: p.cell_size,
            max_rooms: p.max_rooms,
            min_leaf: p.min_leaf,
            door_cells: p.door_cells,
            wall_chunk_cells: p.wall_chunk_cells,
            obstacle_count: p.obstacle_count,
            rug_count: p.rug_count,
            wall_height: p.wall_height,
            furniture_height: p.furniture_height,
            fixture_height: p.fixture_height,
            rug_height: p.rug_height,
            max_place_retries: p.max_place_retries,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub radius: Real,
    /// Simulation step, seconds (5 Hz control rate).
    pub dt: Real,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { radius: 0.2, dt: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BevConfig {
    pub resolution: Real,
    pub forward_extent: Real,
    pub lateral_extent: Real,
    pub d_sat: Real,
    pub box_filter: usize,
    pub snap_radius: Real,
    pub seed_radius: Real,
    pub inflation_radius: Real,
}

impl Default for BevConfig {
    fn default() -> Self {
        let p = BevParams::default();
        Self {
            resolution: p.resolution,
            forward_extent: p.forward_extent,
            lateral_extent: p.lateral_extent,
            d_sat: p.d_sat,
            box_filter: p.box_filter,
            snap_radius: p.snap_radius,
            seed_radius: p.seed_radius,
            inflation_radius: p.inflation_radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub v_fixed: Real,
    pub k_p: Real,
    pub lookahead: Real,
    pub omega_max: Real,
    /// In-place search rotation rate when no sub-goal is available.
    pub omega_search: Real,
    pub turn_in_place_deg: Real,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            v_fixed: 0.25,
            k_p: 1.5,
            lookahead: 0.5,
            omega_max: 1.0,
            omega_search: 0.5,
            turn_in_place_deg: 90.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoConfig {
    /// Softmax temperature; positive weights high-cost segments, negative
    /// weights low-cost segments.
    pub tau: Real,
    pub gain: Real,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self { tau: 5.0, gain: 0.4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraversabilityConfig {
    /// Semantic classes projected into the BEV as drivable ground.
    pub classes: Vec<String>,
}

impl Default for TraversabilityConfig {
    fn default() -> Self {
        Self { classes: vec!["Floor".into(), "Rug".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingConfig {
    /// Minimum segment area in pixels at 640x480; scaled with resolution.
    pub min_area: u32,
    /// Inter-frame association window (consecutive frames = 1).
    pub window: usize,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self { min_area: 50, window: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationConfig {
    pub window_radius: usize,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self { window_radius: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub p_drop: Real,
    pub p_swap: Real,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { p_drop: 0.2, p_swap: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub worlds: usize,
    pub goals_per_world: usize,
    pub categories: Vec<String>,
    pub budget: u32,
    /// Step budget for the auto-switch ablation.
    pub switch_budget: u32,
    pub teach_spacing: Real,
    /// Teach traverse stops at the first pose seeing this many goal pixels.
    pub goal_visible_px: u32,
    pub success_radius: Real,
    pub start_retries: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            worlds: 12,
            goals_per_world: 3,
            categories: vec!["easy".into(), "hard".into(), "full".into()],
            budget: 500,
            switch_budget: 250,
            teach_spacing: 0.3,
            goal_visible_px: 100,
            success_radius: 1.0,
            start_retries: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AltGoalConfig {
    /// Fraction of the teach traverse (from the end) to scan for candidates.
    pub last_fraction: Real,
    /// Regime the alt-goal suite runs under.
    pub regime: String,
}

impl Default for AltGoalConfig {
    fn default() -> Self {
        Self { last_fraction: 0.3, regime: "gt-metric".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub camera: CameraConfig,
    pub world: WorldConfig,
    pub agent: AgentConfig,
    pub bev: BevConfig,
    pub control: ControlConfig,
    pub servo: ServoConfig,
    pub traversability: TraversabilityConfig,
    pub mapping: MappingConfig,
    pub localization: LocalizationConfig,
    pub noise: NoiseConfig,
    pub bench: BenchConfig,
    pub altgoal: AltGoalConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: &str| Err(ConfigError::Invalid(m.into()));
        if !(0.0..=1.0).contains(&self.noise.p_drop) || !(0.0..=1.0).contains(&self.noise.p_swap) {
            return inv("noise probabilities must be in [0, 1]");
        }
        if self.bev.box_filter.is_multiple_of(2) {
            return inv("bev.box_filter must be odd");
        }
        if self.localization.window_radius < 1 {
            return inv("localization.window_radius must be >= 1");
        }
        if self.bench.worlds < 1 || self.bench.goals_per_world < 1 {
            return inv("bench.worlds and bench.goals_per_world must be >= 1");
        }
        for c in &self.bench.categories {
            if crate::episode::Category::parse(c).is_none() {
                return inv(&format!("unknown category `{c}`"));
            }
        }
        for c in &self.traversability.classes {
            if SemanticClass::parse(c).is_none() {
                return inv(&format!("unknown semantic class `{c}`"));
            }
        }
        if crate::run::Regime::parse(&self.altgoal.regime).is_none() {
            return inv(&format!("unknown altgoal.regime `{}`", self.altgoal.regime));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn camera_model(&self) -> Camera {
        CameraModel::new(
            self.camera.width,
            self.camera.height,
            self.camera.hfov_deg.to_radians(),
            self.camera.cam_height,
        )
        .expect("camera config is valid")
    }

    pub fn world_params(&self) -> WorldGenParams {
        WorldGenParams {
            width: self.world.width,
            height: self.world.height,
            cell_size: self.world.cell_size,
            max_rooms: self.world.max_rooms,
            min_leaf: self.world.min_leaf,
            door_cells: self.world.door_cells,
            wall_chunk_cells: self.world.wall_chunk_cells,
            obstacle_count: self.world.obstacle_count,
            rug_count: self.world.rug_count,
            wall_height: self.world.wall_height,
            furniture_height: self.world.furniture_height,
            fixture_height: self.world.fixture_height,
            rug_height: self.world.rug_height,
            max_place_retries: self.world.max_place_retries,
        }
    }

    pub fn bev_params(&self) -> BevParams<Real> {
        BevParams {
            resolution: self.bev.resolution,
            forward_extent: self.bev.forward_extent,
            lateral_extent: self.bev.lateral_extent,
            d_sat: self.bev.d_sat,
            box_filter: self.bev.box_filter,
            snap_radius: self.bev.snap_radius,
            seed_radius: self.bev.seed_radius,
            inflation_radius: self.bev.inflation_radius,
        }
    }

    pub fn follow_params(&self) -> FollowParams<Real> {
        FollowParams {
            v_fixed: self.control.v_fixed,
            k_p: self.control.k_p,
            lookahead: self.control.lookahead,
            omega_max: self.control.omega_max,
            turn_in_place: self.control.turn_in_place_deg.to_radians(),
        }
    }

    pub fn servo_params(&self) -> ServoParams<Real> {
        ServoParams {
            tau: self.servo.tau,
            gain: self.servo.gain,
            image_width: self.camera.width as Real,
        }
    }

    pub fn control_limits(&self) -> ControlLimits<Real> {
        ControlLimits { v_fixed: self.control.v_fixed, omega_max: self.control.omega_max }
    }

    pub fn traversable_classes(&self) -> Vec<SemanticClass> {
        self.traversability
            .classes
            .iter()
            .filter_map(|c| SemanticClass::parse(c))
            .collect()
    }

    pub fn min_area(&self) -> u32 {
        topnav_core::segment::scaled_min_area(
            self.mapping.min_area,
            self.camera.width,
            self.camera.height,
        )
    }
}
