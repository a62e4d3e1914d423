use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::norm;

/// Point-scatterer description of a quadcopter: one body return plus
/// blade-tip returns on each rotor disc.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DroneModel {
    /// Body amplitude referenced to 1 m.
    pub body_rcs: f64,
    /// Amplitude of each blade tip referenced to 1 m.
    pub tip_rcs: f64,
    pub rotor_count: usize,
    pub blade_tips_per_rotor: usize,
    /// m
    pub rotor_radius: f64,
    /// rev/min
    pub rotor_rpm: f64,
    /// Rotor hub positions relative to the body centre at zero heading, m.
    pub rotor_offsets: Vec<[f64; 3]>,
    /// Amplitude gain applied to rotors on the far side of the body.
    pub body_occlusion_factor: f64,
}

impl Default for DroneModel {
    /// A 60 cm class quadcopter: hubs 0.25 m from the centre, 6 cm blades at
    /// 8000 RPM.
    fn default() -> Self {
        let a = 0.25 / 2f64.sqrt();
        Self {
            body_rcs: 1.0,
            tip_rcs: 0.25,
            rotor_count: 4,
            blade_tips_per_rotor: 2,
            rotor_radius: 0.06,
            rotor_rpm: 8000.0,
            rotor_offsets: vec![[a, a, 0.0], [-a, a, 0.0], [-a, -a, 0.0], [a, -a, 0.0]],
            body_occlusion_factor: 0.4,
        }
    }
}

impl DroneModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.rotor_radius > 0.0) {
            return Err(Error::config("rotor_radius must be positive"));
        }
        if !(self.rotor_rpm >= 0.0) {
            return Err(Error::config("rotor_rpm must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.body_occlusion_factor) {
            return Err(Error::config("body_occlusion_factor must lie in [0, 1]"));
        }
        if self.rotor_offsets.len() != self.rotor_count {
            return Err(Error::config(format!(
                "{} rotor offsets for {} rotors",
                self.rotor_offsets.len(),
                self.rotor_count
            )));
        }
        if self.body_rcs < 0.0 || self.tip_rcs < 0.0 {
            return Err(Error::config("amplitudes must be non-negative"));
        }
        Ok(())
    }

    pub fn scatterer_count(&self) -> usize {
        1 + self.rotor_count * self.blade_tips_per_rotor
    }

    /// Tip speed of every blade, m/s.
    pub fn tip_speed(&self) -> f64 {
        2.0 * PI * self.rotor_rpm / 60.0 * self.rotor_radius
    }
}

/// Body state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DronePose {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// Yaw about +z, rad.
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: [f64; 3],
    /// Referenced to 1 m; propagation loss is applied at synthesis.
    pub amplitude: f64,
    /// m/s, positive receding.
    pub radial_velocity: f64,
}

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = norm(p);
    if n == 0.0 {
        [0.0, 1.0, 0.0]
    } else {
        [p[0] / n, p[1] / n, p[2] / n]
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Body scatterer first, then `blade_tips_per_rotor` tips for each rotor in
/// order. Adjacent rotors spin in opposite directions.
pub fn scatterers_at(drone: &DroneModel, pose: &DronePose, t: f64) -> Vec<Scatterer> {
    let mut out = Vec::with_capacity(drone.scatterer_count());
    let los = unit(pose.position);
    let body_radial = dot(pose.velocity, los);
    out.push(Scatterer { position: pose.position, amplitude: drone.body_rcs, radial_velocity: body_radial });

    let (sh, ch) = pose.heading.sin_cos();
    let spin_rate = 2.0 * PI * drone.rotor_rpm / 60.0;
    let tips = drone.blade_tips_per_rotor.max(1);
    for (j, off) in drone.rotor_offsets.iter().enumerate() {
        let hub_off = [off[0] * ch - off[1] * sh, off[0] * sh + off[1] * ch, off[2]];
        let hub = [pose.position[0] + hub_off[0], pose.position[1] + hub_off[1], pose.position[2] + hub_off[2]];
        let far_side = dot(hub_off, los) > 0.0;
        let amplitude = if far_side { drone.tip_rcs * drone.body_occlusion_factor } else { drone.tip_rcs };
        let spin = if j % 2 == 0 { 1.0 } else { -1.0 };
        // Fixed per-rotor phase so the blades are not all aligned.
        let base = 0.7 * j as f64 + pose.heading + spin * spin_rate * t;
        for b in 0..drone.blade_tips_per_rotor {
            let phi = base + 2.0 * PI * b as f64 / tips as f64;
            let (s, c) = phi.sin_cos();
            let r = drone.rotor_radius;
            let position = [hub[0] + r * c, hub[1] + r * s, hub[2]];
            let tangential = [-spin * spin_rate * r * s, spin * spin_rate * r * c, 0.0];
            out.push(Scatterer { position, amplitude, radial_velocity: body_radial + dot(tangential, unit(position)) });
        }
    }
    out
}
