//! Topological fallback control and the metric/fallback arbiter.
//!
//! Segment servoing turns the horizontal pixel offsets of the sub-goal
//! segments into a yaw rate: each localized segment is weighted by a
//! softmax over its normalized path cost (temperature `tau`), and the
//! weighted mean offset from the image center is scaled by `gain / width`.
//! With the default positive `tau` the weight grows with cost; setting
//! `tau` negative weights low-cost segments instead.

use crate::agent::ControlCommand;
use crate::localize::SubGoalMask;
use crate::scalar::Scalar;
use crate::segment::Segment;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServoParams<T> {
    /// Softmax temperature over normalized costs; sign selects whether
    /// high- or low-cost segments dominate.
    pub tau: T,
    /// Controller gain.
    pub gain: T,
    pub image_width: T,
}

impl Default for ServoParams<Real> {
    fn default() -> Self {
        Self { tau: 5.0, gain: 0.4, image_width: 640.0 }
    }
}

/// Speed limits shared by both controllers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlLimits<T> {
    pub v_fixed: T,
    pub omega_max: T,
}

impl Default for ControlLimits<Real> {
    fn default() -> Self {
        Self { v_fixed: 0.25, omega_max: 1.0 }
    }
}

/// Softmax weights with max-subtraction; sums to one for finite inputs.
pub fn softmax_weights<T: Scalar>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Yaw from weighted horizontal centroid offsets: `(gain / width) *
/// sum_i w_i * (u_i - cx)` where `w_i` is the softmax of `tau * cost_i`.
pub fn servo_yaw<T: Scalar>(centroids_and_costs: &[(T, T)], params: &ServoParams<T>) -> T {
    debug_assert!(!centroids_and_costs.is_empty());
    let scores: Vec<T> = centroids_and_costs.iter().map(|&(_, l)| params.tau * l).collect();
    let weights = softmax_weights(&scores);
    let center = params.image_width / T::from_f64(2.0).unwrap();
    let mut offset = T::zero();
    for (&(u, _), &w) in centroids_and_costs.iter().zip(weights.iter()) {
        offset += w * (u - center);
    }
    params.gain / params.image_width * offset
}

/// The fallback controller: rotate toward the weighted sub-goal offset at
/// half cruise speed. The arbiter must not call this with an empty mask.
pub fn segment_servo(
    mask: &SubGoalMask,
    query: &[Segment],
    params: &ServoParams<Real>,
    limits: &ControlLimits<Real>,
) -> ControlCommand<Real> {
    assert!(!mask.entries.is_empty(), "segment_servo requires a non-empty mask");
    let pairs: Vec<(Real, Real)> = mask
        .entries
        .iter()
        .map(|e| (query[e.query_idx].centroid_px.0, e.norm_cost))
        .collect();
    let yaw = servo_yaw(&pairs, params).clamp(-limits.omega_max, limits.omega_max);
    // rotate-dominant recovery: creep forward at half speed
    ControlCommand::new(0.5 * limits.v_fixed, yaw)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlMode {
    Metric,
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwitchReason {
    Ok,
    EmptyTraversability,
    SubgoalProjectionFailed,
    PlanInfeasible,
    LocalizationDegraded,
}

impl SwitchReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            SwitchReason::Ok => "ok",
            SwitchReason::EmptyTraversability => "empty_traversability",
            SwitchReason::SubgoalProjectionFailed => "subgoal_projection_failed",
            SwitchReason::PlanInfeasible => "plan_infeasible",
            SwitchReason::LocalizationDegraded => "localization_degraded",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ControllerChoice {
    pub mode: ControlMode,
    pub reason: SwitchReason,
}

/// Metric control only when the whole metric pipeline is healthy; otherwise
/// fall back, reporting the first failure in the fixed priority order.
pub fn choose_controller(
    traversability_ok: bool,
    subgoal_ok: bool,
    plan_feasible: bool,
    localization_ok: bool,
) -> ControllerChoice {
    let reason = if !traversability_ok {
        SwitchReason::EmptyTraversability
    } else if !subgoal_ok {
        SwitchReason::SubgoalProjectionFailed
    } else if !plan_feasible {
        SwitchReason::PlanInfeasible
    } else if !localization_ok {
        SwitchReason::LocalizationDegraded
    } else {
        return ControllerChoice { mode: ControlMode::Metric, reason: SwitchReason::Ok };
    };
    ControllerChoice { mode: ControlMode::Fallback, reason }
}
