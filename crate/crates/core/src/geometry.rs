//! UAV/ground-node line-of-sight geometry.
//!
//! The UAV flies at a fixed altitude with a heading measured
//! counterclockwise from the +x axis. For each ground node the link is
//! described by its slant distance, the cosine of the elevation angle seen
//! from the array, the bearing from the UAV to the node, and the resulting
//! inter-element phase delay of a half-wavelength uniform linear array
//! mounted along the flight direction:
//!
//! `p = pi * cos(phi) * sin(theta)`, with `cos(phi) =
//! sqrt(horiz^2 / (horiz^2 + h^2))` and `sin(theta) = cos(heading - bearing)`.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

/// UAV state: horizontal position, altitude, and heading in radians
/// (normalized to `[0, 2pi)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UavPose {
    pub x: f64,
    pub y: f64,
    pub altitude: f64,
    pub heading: f64,
}

impl UavPose {
    pub fn new(x: f64, y: f64, altitude: f64, heading: f64) -> Self {
        UavPose { x, y, altitude, heading: normalize_angle(heading) }
    }
}

/// Ground node position (altitude zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundPosition {
    pub x: f64,
    pub y: f64,
}

/// Line-of-sight description of one UAV-to-node link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGeometry {
    /// Slant distance in meters; at least the UAV altitude.
    pub distance: f64,
    /// Cosine of the elevation angle, in `[0, 1)`; zero for a node directly
    /// below the UAV.
    pub cos_elevation: f64,
    /// Bearing from the UAV to the node, in `[0, 2pi)`.
    pub bearing: f64,
    /// `cos(heading - bearing)`, the azimuth factor of the phase delay.
    pub sin_azimuth: f64,
    /// Inter-element phase delay in radians, in `[-pi, pi]`.
    pub phase_delay: f64,
}

/// Wrap an angle to `[0, 2pi)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can return TAU itself when `angle` is a tiny negative number.
    if a >= TAU {
        a - TAU
    } else {
        a
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Slant distance from the UAV to a ground node.
pub fn distance(uav: &UavPose, node: &GroundPosition) -> f64 {
    let dx = node.x - uav.x;
    let dy = node.y - uav.y;
    (dx * dx + dy * dy + uav.altitude * uav.altitude).sqrt()
}

/// Bearing from the UAV to the node in `[0, 2pi)`, measured from the +x axis.
/// A node horizontally coincident with the UAV gets bearing 0 by convention.
pub fn bearing(uav: &UavPose, node: &GroundPosition) -> f64 {
    let dx = node.x - uav.x;
    let dy = node.y - uav.y;
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    normalize_angle(dy.atan2(dx))
}

/// Full line-of-sight geometry for one link.
pub fn los_geometry(uav: &UavPose, node: &GroundPosition) -> LosGeometry {
    let dx = node.x - uav.x;
    let dy = node.y - uav.y;
    let horiz_sq = dx * dx + dy * dy;
    let dist_sq = horiz_sq + uav.altitude * uav.altitude;
    let distance = dist_sq.sqrt();
    let cos_elevation = if horiz_sq == 0.0 { 0.0 } else { (horiz_sq / dist_sq).sqrt() };
    let bearing = bearing(uav, node);
    let sin_azimuth = (uav.heading - bearing).cos();
    LosGeometry {
        distance,
        cos_elevation,
        bearing,
        sin_azimuth,
        phase_delay: PI * cos_elevation * sin_azimuth,
    }
}
