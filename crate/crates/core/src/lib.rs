//! Desk-scale simulator for a multi-antenna UAV serving mobile ground nodes
//! over line-of-sight uplinks.
//!
//! The crate models correlated Rician ground-to-air channels for a uniform
//! linear array mounted along the UAV's flight direction, max-SINR receive
//! beamforming, Kalman tracking of the node positions, and heading
//! controllers that steer the UAV to maximize (weighted) ergodic uplink sum
//! rate under a per-step turn-rate constraint. A companion module analyzes
//! the static two-user problem of orienting a rectangular holding pattern.

pub mod asymptotic;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod heading;
mod linesearch;
pub mod rng;
pub mod sim;
pub mod tracking;
pub mod twouser;

pub use error::{Error, Result};
