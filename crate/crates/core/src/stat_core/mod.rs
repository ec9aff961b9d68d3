//! Statistics, the potential interface, generic prediction rules and the
//! online interaction loop.

mod online;
mod potential;
mod statistic;
mod strategy;

pub use online::{descent_check, run_online, DescentReport, Round, Strategy, Trajectory};
pub use potential::{accumulate, random_statistic, Potential};
pub use statistic::{Instance, Statistic};
pub use strategy::{
    control_points, linearized_from_residual, predict_convex, predict_linearized,
    predict_randomized, uniform_grid, ConvexOptions, RandomizedOptions, RandomizedPrediction,
};
