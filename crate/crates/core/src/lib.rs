//! Simulated obstacle-avoidant leader following.

pub mod cli_runner;
pub mod geometry;
pub mod leader_fusion;
pub mod leader_tracker;
pub mod nav_rmp;
pub mod rf_array;
pub mod world_sim;
