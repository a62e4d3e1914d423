//! Virtual antenna geometry of the 3Tx/4Rx MIMO array.
//!
//! Positions are stored in units of half a wavelength in the antenna plane
//! (x to the right, z up). The layout reproduces the IWR6843ISK virtual
//! array: two transmitters on the z = 0 line form an 8-element horizontal
//! aperture, and the elevated transmitter adds a 4-element row at z = 1
//! centred over it.
//!
//! ```text
//!   z=1 .  .  4  5  6  7  .  .
//!   z=0 0  1  2  3  8  9 10 11
//!       x=0            ...   7
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const NUM_VIRTUAL: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualArrayLayout {
    /// (x, z) in units of lambda/2.
    pub positions: [(f64, f64); NUM_VIRTUAL],
    /// Two horizontal sub-arrays of four elements each, in increasing x.
    pub azimuth_rows: [[usize; 4]; 2],
    /// Vertical pairs as (lower, upper).
    pub elevation_pairs: [(usize, usize); 4],
}

impl Default for VirtualArrayLayout {
    fn default() -> Self {
        Self {
            positions: [
                (0.0, 0.0),
                (1.0, 0.0),
                (2.0, 0.0),
                (3.0, 0.0),
                (2.0, 1.0),
                (3.0, 1.0),
                (4.0, 1.0),
                (5.0, 1.0),
                (4.0, 0.0),
                (5.0, 0.0),
                (6.0, 0.0),
                (7.0, 0.0),
            ],
            azimuth_rows: [[0, 1, 2, 3], [8, 9, 10, 11]],
            elevation_pairs: [(2, 4), (3, 5), (8, 6), (9, 7)],
        }
    }
}

impl VirtualArrayLayout {
    /// Physical element spacing `d` for a given wavelength.
    pub fn spacing(wavelength: f64) -> f64 {
        wavelength / 2.0
    }

    /// The 8 elements of both azimuth rows, ordered by x.
    pub fn azimuth_aperture(&self) -> [usize; 8] {
        let mut out = [0usize; 8];
        out[..4].copy_from_slice(&self.azimuth_rows[0]);
        out[4..].copy_from_slice(&self.azimuth_rows[1]);
        out.sort_by(|&a, &b| self.positions[a].0.total_cmp(&self.positions[b].0));
        out
    }

    /// Phase of element `i` for a plane wave with direction cosines
    /// `u = x/r` and `w = z/r`.
    #[inline]
    pub fn phase(&self, i: usize, u: f64, w: f64) -> f64 {
        let (x, z) = self.positions[i];
        PI * (x * u + z * w)
    }

    pub fn steering(&self, u: f64, w: f64) -> [Complex64; NUM_VIRTUAL] {
        std::array::from_fn(|i| Complex64::from_polar(1.0, self.phase(i, u, w)))
    }

    pub fn validate(&self) -> Result<()> {
        let indices = self.azimuth_rows.iter().flatten().copied();
        let pairs = self.elevation_pairs.iter().flat_map(|&(a, b)| [a, b]);
        if let Some(i) = indices.chain(pairs).find(|&i| i >= NUM_VIRTUAL) {
            return Err(Error::config(format!("virtual antenna index {i} out of range")));
        }
        let mut seen = [0u8; NUM_VIRTUAL];
        for row in &self.azimuth_rows {
            let z = self.positions[row[0]].1;
            for pair in row.windows(2) {
                let (a, b) = (self.positions[pair[0]], self.positions[pair[1]]);
                if (b.0 - a.0 - 1.0).abs() > 1e-12 || (a.1 - z).abs() > 1e-12 || (b.1 - z).abs() > 1e-12 {
                    return Err(Error::config("azimuth rows need uniform lambda/2 spacing at a common z"));
                }
            }
            for &i in row {
                seen[i] += 1;
            }
        }
        if self.positions.iter().any(|&(x, z)| x.fract() != 0.0 || z.fract() != 0.0 || x < 0.0 || z < 0.0) {
            return Err(Error::config("virtual antenna positions must be non-negative whole multiples of lambda/2"));
        }
        let aperture = self.azimuth_aperture();
        if aperture.windows(2).any(|p| self.positions[p[1]].0 - self.positions[p[0]].0 != 1.0)
            || self.positions[aperture[0]].0 != 0.0
            || self.positions[self.azimuth_rows[0][0]].1 != self.positions[self.azimuth_rows[1][0]].1
        {
            return Err(Error::config("the azimuth rows must share z and tile x = 0..7 without gaps"));
        }
        if seen.iter().any(|&n| n > 1) {
            return Err(Error::config("a virtual antenna appears in more than one azimuth row"));
        }
        for &(lo, hi) in &self.elevation_pairs {
            let (a, b) = (self.positions[lo], self.positions[hi]);
            if (a.0 - b.0).abs() > 1e-12 || (b.1 - a.1 - 1.0).abs() > 1e-12 {
                return Err(Error::config("elevation pairs need a common x and lambda/2 vertical offset"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_is_valid() {
        let layout = VirtualArrayLayout::default();
        layout.validate().unwrap();
        let xs: Vec<f64> = layout.azimuth_aperture().iter().map(|&i| layout.positions[i].0).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn upper_row_is_centred() {
        // Equal mean x on both rows decouples azimuth and elevation.
        let layout = VirtualArrayLayout::default();
        let mean = |z: f64| {
            let xs: Vec<f64> = layout.positions.iter().filter(|p| p.1 == z).map(|p| p.0).collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        };
        assert_eq!(mean(0.0), mean(1.0));
    }

    #[test]
    fn broken_layouts_are_rejected() {
        let mut layout = VirtualArrayLayout::default();
        layout.elevation_pairs[0] = (0, 4);
        assert!(layout.validate().is_err());
        let mut layout = VirtualArrayLayout::default();
        layout.azimuth_rows[1] = [0, 9, 10, 11];
        assert!(layout.validate().is_err());
    }

    #[test]
    fn boresight_steering_is_all_ones() {
        let layout = VirtualArrayLayout::default();
        for s in layout.steering(0.0, 0.0) {
            assert_eq!(s, Complex64::new(1.0, 0.0));
        }
    }
}
