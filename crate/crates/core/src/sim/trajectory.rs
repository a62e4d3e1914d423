use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::drone::DronePose;

/// Axis-aligned box in the radar frame, m.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for k in 0..3 {
            if !(self.min[k].is_finite() && self.max[k].is_finite()) || self.min[k] > self.max[k] {
                return Err(Error::config(format!("empty bounds on axis {k}: [{}, {}]", self.min[k], self.max[k])));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 3], slack: f64) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] - slack && p[k] <= self.max[k] + slack)
    }

    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|k| 0.5 * (self.min[k] + self.max[k]))
    }

    /// Smallest and largest distance from the sensor of any point in the box.
    pub fn range_span(&self) -> (f64, f64) {
        let nearest: [f64; 3] = std::array::from_fn(|k| 0f64.clamp(self.min[k], self.max[k]));
        let farthest: [f64; 3] =
            std::array::from_fn(|k| if self.min[k].abs() > self.max[k].abs() { self.min[k] } else { self.max[k] });
        (crate::geometry::norm(nearest), crate::geometry::norm(farthest))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub heading: f64,
}

impl TrajectorySample {
    pub fn pose(&self) -> DronePose {
        DronePose { position: self.position, velocity: self.velocity, heading: self.heading }
    }
}

/// Time-ordered drone states. Poses between samples are cubic Hermite
/// interpolated, so the path is C1.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
    /// How far past the last sample [`Trajectory::pose_at`] may extrapolate.
    tail: f64,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>, tail: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("trajectory needs at least one sample"));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::input("trajectory times must be strictly increasing"));
        }
        Ok(Self { samples, tail })
    }

    /// Constant-velocity motion sampled at `rate` Hz.
    pub fn linear(start: [f64; 3], velocity: [f64; 3], duration: f64, rate: f64) -> Self {
        let n = ((duration * rate).round() as usize).max(1);
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                TrajectorySample {
                    t,
                    position: std::array::from_fn(|k| start[k] + velocity[k] * t),
                    velocity,
                    heading: 0.0,
                }
            })
            .collect();
        Self { samples, tail: 1.0 / rate }
    }

    pub fn hover(position: [f64; 3], duration: f64, rate: f64) -> Self {
        Self::linear(position, [0.0; 3], duration, rate)
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().t + self.tail
    }

    pub fn pose_at(&self, t: f64) -> Result<DronePose> {
        let first = &self.samples[0];
        let last = self.samples.last().unwrap();
        if t < first.t || t > last.t + self.tail + 1e-12 {
            return Err(Error::input(format!(
                "trajectory covers [{}, {}] s, asked for {t} s",
                first.t,
                last.t + self.tail
            )));
        }
        let i = self.samples.partition_point(|s| s.t <= t).saturating_sub(1);
        let a = &self.samples[i];
        let Some(b) = self.samples.get(i + 1) else {
            let dt = t - a.t;
            return Ok(DronePose {
                position: std::array::from_fn(|k| a.position[k] + a.velocity[k] * dt),
                velocity: a.velocity,
                heading: a.heading,
            });
        };
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        Ok(DronePose {
            position: std::array::from_fn(|k| {
                h00 * a.position[k] + h10 * h * a.velocity[k] + h01 * b.position[k] + h11 * h * b.velocity[k]
            }),
            velocity: std::array::from_fn(|k| {
                d00 * a.position[k] + d10 * a.velocity[k] + d01 * b.position[k] + d11 * b.velocity[k]
            }),
            heading: a.heading + s * (b.heading - a.heading),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Harmonic {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

const HARMONICS: usize = 3;

/// Smooth random flight inside `bounds`, sampled at `rate` Hz.
///
/// Each axis is a sum of slow sinusoids about the box centre. Amplitudes
/// are scaled so the box and the speed limit hold analytically, and the
/// path depends only on `seed`.
pub fn gen_trajectory(seed: u64, duration: f64, bounds: &Bounds, max_speed: f64, rate: f64) -> Result<Trajectory> {
    bounds.validate()?;
    if !(duration > 0.0) || !(rate > 0.0) {
        return Err(Error::config("duration and sample rate must be positive"));
    }
    if !(max_speed >= 0.0) {
        return Err(Error::config("max_speed must be non-negative"));
    }
    let (near, far) = bounds.range_span();
    if near < 1.0 || far > 4.05 {
        log::warn!("flight box spans {near:.2}..{far:.2} m, outside the 1-4 m sweep");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = bounds.center();
    let mut axes = [[Harmonic { amplitude: 0.0, omega: 0.0, phase: 0.0 }; HARMONICS]; 3];
    let mut speed_bound = [0.0f64; 3];
    for k in 0..3 {
        let half = 0.5 * (bounds.max[k] - bounds.min[k]);
        let weights: [f64; HARMONICS] = std::array::from_fn(|_| rng.random_range(0.5..1.0));
        let total: f64 = weights.iter().sum();
        for j in 0..HARMONICS {
            axes[k][j] = Harmonic {
                amplitude: half * weights[j] / total,
                omega: 2.0 * PI * rng.random_range(0.03..0.15),
                phase: rng.random_range(0.0..2.0 * PI),
            };
            speed_bound[k] += axes[k][j].amplitude * axes[k][j].omega;
        }
    }
    let bound = speed_bound.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = if bound > max_speed { max_speed / bound } else { 1.0 };
    let heading0 = rng.random_range(-PI..PI);
    let heading_amp = rng.random_range(0.0..PI);
    let heading_omega = 2.0 * PI * rng.random_range(0.01..0.05);
    let heading_phase = rng.random_range(0.0..2.0 * PI);

    let n = ((duration * rate).round() as usize).max(1);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            let mut position = center;
            let mut velocity = [0.0; 3];
            for k in 0..3 {
                for h in &axes[k] {
                    let a = h.amplitude * scale;
                    let arg = h.omega * t + h.phase;
                    position[k] += a * arg.sin();
                    velocity[k] += a * h.omega * arg.cos();
                }
            }
            TrajectorySample {
                t,
                position,
                velocity,
                heading: heading0 + heading_amp * (heading_omega * t + heading_phase).sin(),
            }
        })
        .collect();
    Trajectory::new(samples, 1.0 / rate)
}
