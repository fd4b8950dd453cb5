//! Extended object tracking in curvilinear road coordinates.
//!
//! A GM-PHD filter with unscented moment propagation estimates position,
//! velocity, yaw, yaw rate and rectangular extent of road objects from fused
//! lidar point clusters and radar velocities. The state is expressed in
//! road-aligned coordinates `(s, n)` and mapped into the vehicle frame by
//! Euler integration along a piecewise cubic road model.

pub mod angle;
pub mod fusion;
pub mod gmphd;
pub mod io;
pub mod meas_model;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod road;
pub mod sim;
pub mod state;
