//! Radar frame conventions: right-handed, y forward, x right, z up.
//! Azimuth is measured from the y axis towards x, elevation from the x-y
//! plane towards z; both are zero at boresight.

use serde::{Deserialize, Serialize};

/// 3-D position in the radar frame with the frame timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub timestamp: f64,
}

impl PositionEstimate {
    pub fn new(p: [f64; 3], timestamp: f64) -> Self {
        Self { x: p[0], y: p[1], z: p[2], timestamp }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance_to(&self, p: [f64; 3]) -> f64 {
        distance(self.position(), p)
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn spherical_to_cartesian(range: f64, azimuth: f64, elevation: f64) -> [f64; 3] {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    [range * ce * sa, range * ce * ca, range * se]
}

/// Returns `(range, azimuth, elevation)`.
pub fn cartesian_to_spherical(p: [f64; 3]) -> (f64, f64, f64) {
    let r = norm(p);
    let azimuth = p[0].atan2(p[1]);
    let elevation = p[2].atan2(p[0].hypot(p[1]));
    (r, azimuth, elevation)
}

/// Direction cosines `(u, w) = (x/r, z/r)`, the quantities an array in the
/// x-z plane measures directly.
pub fn direction_cosines(p: [f64; 3]) -> (f64, f64) {
    let r = norm(p);
    if r == 0.0 {
        (0.0, 0.0)
    } else {
        (p[0] / r, p[2] / r)
    }
}

/// Position from range and direction cosines. `None` when `u^2 + w^2 > 1`,
/// i.e. the direction is not in front of the sensor.
pub fn position_from_cosines(range: f64, u: f64, w: f64) -> Option<[f64; 3]> {
    let rest = 1.0 - u * u - w * w;
    if rest < 0.0 {
        return None;
    }
    Some([range * u, range * rest.sqrt(), range * w])
}

/// Azimuth and elevation of a direction given by its cosines.
pub fn cosines_to_angles(u: f64, w: f64) -> (f64, f64) {
    let elevation = w.clamp(-1.0, 1.0).asin();
    let ce = elevation.cos();
    let azimuth = if ce > 0.0 { (u / ce).clamp(-1.0, 1.0).asin() } else { 0.0 };
    (azimuth, elevation)
}

/// Internal boresight-zero azimuth to the 30..150 degree reporting
/// convention.
pub fn azimuth_to_report_deg(azimuth: f64) -> f64 {
    90.0 + azimuth.to_degrees()
}
