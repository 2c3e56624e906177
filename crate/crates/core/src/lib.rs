pub mod angle;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod kalman;
pub mod planner;
pub mod pnp;
pub mod sim;
