//! Classical FFT processing chain and the three FFT-based localizers.

pub mod aoa;
pub mod cfar;
pub mod clutter;
pub mod dbscan;
pub mod doppler;
pub mod pipelines;
pub mod range;
pub(crate) mod sine_dft;

pub use aoa::{aoa_fft, AngleEstimate, ANGLE_FFT_SIZE};
pub use cfar::{ca_cfar, cfar_2d, CfarHit, CfarParams, Detection};
pub use clutter::{clutter_removal, remove_clutter_in_place};
pub use dbscan::{dbscan, dbscan_reference, same_partition, Labels};
pub use doppler::{doppler_fft, RangeDopplerMap};
pub use pipelines::{
    fft_2d_heatmaps, fft_2d_peak, fft_3d_peak, locate_fft_2d, locate_fft_3d, locate_point_cloud, point_cloud,
    search_bins, CloudPoint, Heatmap, PointCloud, PointCloudParams,
};
pub use range::{hann_window, range_fft, RangeProfiles, RANGE_FFT_SIZE};
