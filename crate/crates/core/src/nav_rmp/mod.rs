//! Reactive navigation with Riemannian motion policies: a follow set-point
//! attractor, a heading attractor, and static and dynamic obstacle
//! repulsors resolved by metric-weighted least squares in SE(2).

mod attractors;
mod navigator;
mod occupancy;
mod policy;
mod repulsors;

pub use attractors::{
    compute_follow_goal, follow_goal_from, follow_goal_with_heading, goal_policy, leader_heading, soft_normalize, yaw_policy, FollowConfig, FollowGoal, GoalGains,
    YawGains,
};
pub use navigator::{NavConfig, NavStep, NavTarget, Navigator, PolicyTrace};
pub use occupancy::{HierarchicalOccupancy, ObstacleCube, OccupancyConfig};
pub use policy::{
    combine, position_to_se2, pullback, pullback_to_se2, se2_to_r3_jacobian, symmetric_pinv, yaw_to_se2, PolicyOutput, Se2Policy, PINV_CUTOFF,
};
pub use repulsors::{box_repulsor, obstacle_policy, static_obstacle_policy, DynamicObstacleBuffer, RepulsorConfig};
