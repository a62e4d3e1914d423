//! Per-chirp range-angle heatmaps for the learned localizer and the HTMP
//! tensor format they are exported in.
//!
//! An HTMP record is little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "HTMP"
//! 4       2     version (1)
//! 6       2     n_maps   heatmaps per chirp (6)
//! 8       2     rows     range bins (256)
//! 10      2     cols     angle bins (180)
//! 12      2     chirps   chirps per record
//! 14      4*N   f32 values, [chirp][map][row][col], N = chirps*n_maps*rows*cols
//! 14+4N   24    label x, y, z as f64
//! ```
//!
//! Records are concatenated; the manifest CSV gives each one's offset.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::array::{VirtualArrayLayout, NUM_VIRTUAL};
use crate::cube::DataCube;
use crate::dsp::pipelines::ChirpProfiler;
use crate::dsp::sine_dft::SineDft;
use crate::dsp::{ANGLE_FFT_SIZE, RANGE_FFT_SIZE};
use crate::error::{Error, Result};
use crate::io::rcub::read_full;
use crate::model::RadarConfig;
use crate::music::Pseudospectrum;

pub const AZIMUTH_MAPS: usize = 2;
pub const ELEVATION_MAPS: usize = 4;
pub const MAPS_PER_CHIRP: usize = AZIMUTH_MAPS + ELEVATION_MAPS;

pub const HTMP_MAGIC: [u8; 4] = *b"HTMP";
pub const HTMP_VERSION: u16 = 1;
pub const HTMP_HEADER_LEN: usize = 14;
pub const HTMP_LABEL_LEN: usize = 24;

/// The six maps of one chirp, max-normalized to `[0, 1]`, stored as
/// `[map][row][col]` with the azimuth maps first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpHeatmaps {
    pub frame_index: u64,
    pub chirp_index: usize,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
}

impl ChirpHeatmaps {
    pub fn map(&self, i: usize) -> &[f32] {
        let n = self.rows * self.cols;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn azimuth_map(&self, i: usize) -> &[f32] {
        assert!(i < AZIMUTH_MAPS);
        self.map(i)
    }

    pub fn elevation_map(&self, j: usize) -> &[f32] {
        assert!(j < ELEVATION_MAPS);
        self.map(AZIMUTH_MAPS + j)
    }

    /// `(row, col)` of a map's largest value; ties go to the first.
    pub fn argmax(&self, i: usize) -> (usize, usize) {
        let m = self.map(i);
        let mut best = 0;
        for (k, v) in m.iter().enumerate() {
            if *v > m[best] {
                best = k;
            }
        }
        (best / self.cols, best % self.cols)
    }
}

/// `k` chirp indices spread uniformly over `nc`: `i * nc / k`.
pub fn subsample_chirps(nc: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > nc {
        return Err(Error::config(format!("chirps per sample must lie in 1..={nc}, got {k}")));
    }
    Ok((0..k).map(|i| i * nc / k).collect())
}

fn normalize(values: &[f64], out: &mut Vec<f32>) {
    let max = values.iter().fold(0.0f64, |m, v| m.max(*v));
    if max > 0.0 {
        out.extend(values.iter().map(|v| (v / max) as f32));
    } else {
        out.extend(values.iter().map(|_| 0.0f32));
    }
}

/// Heatmaps of several chirps of one frame, sharing the frame's clutter
/// removal and FFT plans.
pub fn frame_heatmaps(
    cube: &DataCube,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    chirps: &[usize],
) -> Result<Vec<ChirpHeatmaps>> {
    cube.check_shape(cfg)?;
    if let Some(&c) = chirps.iter().find(|&&c| c >= cube.chirps()) {
        return Err(Error::input(format!("chirp index {c} out of range 0..{}", cube.chirps())));
    }
    let profiler = ChirpProfiler::new(cube, RANGE_FFT_SIZE)?;
    let (rows, cols) = (RANGE_FFT_SIZE, ANGLE_FFT_SIZE);
    let row_dft = SineDft::new(4, cols);
    let pair_dft = SineDft::new(2, cols);
    let mut maps: Vec<Vec<f64>> = vec![vec![0.0; rows * cols]; MAPS_PER_CHIRP];
    let mut out = Vec::with_capacity(chirps.len());
    for &chirp in chirps {
        let profile = profiler.profile(cube, chirp);
        for b in 0..rows {
            let cell: &[Complex64] = &profile[b * NUM_VIRTUAL..(b + 1) * NUM_VIRTUAL];
            let span = b * cols..(b + 1) * cols;
            for (i, row) in layout.azimuth_rows.iter().enumerate() {
                let taps: [Complex64; 4] = std::array::from_fn(|k| cell[row[k]]);
                row_dft.magnitudes(&taps, &mut maps[i][span.clone()]);
            }
            for (j, &(lo, hi)) in layout.elevation_pairs.iter().enumerate() {
                pair_dft.magnitudes(&[cell[lo], cell[hi]], &mut maps[AZIMUTH_MAPS + j][span.clone()]);
            }
        }
        let mut values = Vec::with_capacity(MAPS_PER_CHIRP * rows * cols);
        for m in &maps {
            normalize(m, &mut values);
        }
        out.push(ChirpHeatmaps { frame_index: cube.frame_index, chirp_index: chirp, rows, cols, values });
    }
    Ok(out)
}

pub fn chirp_heatmaps(
    cube: &DataCube,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    chirp_index: usize,
) -> Result<ChirpHeatmaps> {
    Ok(frame_heatmaps(cube, cfg, layout, &[chirp_index])?.remove(0))
}

/// One HTMP record.
#[derive(Debug, Clone, PartialEq)]
pub struct HtmpRecord {
    pub n_maps: u16,
    pub rows: u16,
    pub cols: u16,
    pub chirps: u16,
    /// `[chirp][map][row][col]`
    pub values: Vec<f32>,
    pub label: [f64; 3],
}

fn dim(n: usize, what: &str) -> Result<u16> {
    u16::try_from(n).map_err(|_| Error::input(format!("{what} = {n} does not fit the HTMP u16 field")))
}

impl HtmpRecord {
    /// The training sample of one frame: the chirps' maps in order.
    pub fn from_heatmaps(heatmaps: &[ChirpHeatmaps], label: [f64; 3]) -> Result<Self> {
        let first = heatmaps.first().ok_or_else(|| Error::input("a record needs at least one chirp"))?;
        if heatmaps.iter().any(|h| h.rows != first.rows || h.cols != first.cols) {
            return Err(Error::input("heatmaps of one record must share their shape"));
        }
        if !label.iter().all(|v| v.is_finite()) {
            return Err(Error::input("record label must be finite"));
        }
        Ok(Self {
            n_maps: MAPS_PER_CHIRP as u16,
            rows: dim(first.rows, "rows")?,
            cols: dim(first.cols, "cols")?,
            chirps: dim(heatmaps.len(), "chirps")?,
            values: heatmaps.iter().flat_map(|h| h.values.iter().copied()).collect(),
            label,
        })
    }

    /// A pseudospectrum as one record: maps are ranges, rows azimuths,
    /// columns elevations, values in dB; the label is the estimate.
    pub fn from_pseudospectrum(spec: &Pseudospectrum, estimate: [f64; 3]) -> Result<Self> {
        Ok(Self {
            n_maps: dim(spec.ranges.len(), "ranges")?,
            rows: dim(spec.azimuths_deg.len(), "azimuths")?,
            cols: dim(spec.elevations_deg.len(), "elevations")?,
            chirps: 1,
            values: spec.values_db.iter().map(|&v| v as f32).collect(),
            label: estimate,
        })
    }

    fn value_count(n_maps: u16, rows: u16, cols: u16, chirps: u16) -> usize {
        n_maps as usize * rows as usize * cols as usize * chirps as usize
    }

    pub fn byte_len(&self) -> usize {
        HTMP_HEADER_LEN + 4 * self.values.len() + HTMP_LABEL_LEN
    }

    /// Heatmap `map` of chirp `chirp`, `[row][col]`.
    pub fn heatmap(&self, chirp: usize, map: usize) -> &[f32] {
        let n = self.rows as usize * self.cols as usize;
        let at = (chirp * self.n_maps as usize + map) * n;
        &self.values[at..at + n]
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.values.len() != Self::value_count(self.n_maps, self.rows, self.cols, self.chirps) {
            return Err(Error::input("record values do not match its dimensions"));
        }
        let mut head = Vec::with_capacity(HTMP_HEADER_LEN);
        head.extend_from_slice(&HTMP_MAGIC);
        for v in [HTMP_VERSION, self.n_maps, self.rows, self.cols, self.chirps] {
            head.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&head)?;
        let mut body = Vec::with_capacity(4 * self.values.len());
        for v in &self.values {
            body.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&body)?;
        for v in self.label {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads one record starting at byte `offset` of the stream (used in
    /// error messages). Returns `None` at a clean end of stream.
    pub fn read_from<R: Read>(r: &mut R, offset: u64) -> Result<Option<Self>> {
        let mut head = [0u8; HTMP_HEADER_LEN];
        let got = read_full(r, &mut head)?;
        if got == 0 {
            return Ok(None);
        }
        if got < HTMP_HEADER_LEN {
            return Err(Error::Parse {
                offset: offset + got as u64,
                message: format!("HTMP header needs {HTMP_HEADER_LEN} bytes, found {got}"),
            });
        }
        if head[..4] != HTMP_MAGIC {
            return Err(Error::Parse { offset, message: "bad HTMP magic".into() });
        }
        let field = |i: usize| u16::from_le_bytes([head[4 + 2 * i], head[5 + 2 * i]]);
        let version = field(0);
        if version != HTMP_VERSION {
            return Err(Error::Parse { offset: offset + 4, message: format!("unsupported HTMP version {version}") });
        }
        let (n_maps, rows, cols, chirps) = (field(1), field(2), field(3), field(4));
        let n = Self::value_count(n_maps, rows, cols, chirps);
        let mut body = vec![0u8; 4 * n + HTMP_LABEL_LEN];
        let got = read_full(r, &mut body)?;
        if got < body.len() {
            return Err(Error::Parse {
                offset: offset + (HTMP_HEADER_LEN + got) as u64,
                message: format!(
                    "HTMP record needs {} bytes, found {}",
                    HTMP_HEADER_LEN + body.len(),
                    HTMP_HEADER_LEN + got
                ),
            });
        }
        let values = body[..4 * n].chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        let label: [f64; 3] = std::array::from_fn(|k| {
            let at = 4 * n + 8 * k;
            f64::from_le_bytes(body[at..at + 8].try_into().expect("8 bytes"))
        });
        Ok(Some(Self { n_maps, rows, cols, chirps, values, label }))
    }
}

/// Every record of an HTMP stream with its byte offset.
pub fn read_htmp<R: Read>(r: &mut R) -> Result<Vec<(u64, HtmpRecord)>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    while let Some(rec) = HtmpRecord::read_from(r, offset)? {
        let len = rec.byte_len() as u64;
        out.push((offset, rec));
        offset += len;
    }
    Ok(out)
}

/// Reads the record at `offset` of an HTMP file.
pub fn read_htmp_record(path: &Path, offset: u64) -> Result<HtmpRecord> {
    use std::io::{Seek, SeekFrom};
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    f.seek(SeekFrom::Start(offset))?;
    HtmpRecord::read_from(&mut f, offset)?
        .ok_or_else(|| Error::Parse { offset, message: "no HTMP record at this offset".into() })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ManifestRow {
    pub record_index: u64,
    pub file_offset: u64,
    pub frame_index: u64,
    pub sequence_id: String,
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    crate::io::write_csv(path, rows)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    crate::io::read_csv(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportParams {
    pub chirps_per_sample: usize,
    /// Keep every `stride`-th frame.
    pub stride: usize,
}

impl Default for ExportParams {
    fn default() -> Self {
        Self { chirps_per_sample: 16, stride: 1 }
    }
}

/// Counts from one export call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct ExportSummary {
    pub records: u64,
    pub skipped_no_label: u64,
    pub bytes: u64,
}

/// Streams training records: one per kept frame that has a label. Frames
/// without ground truth are skipped and logged. `start` carries the record
/// count and byte offset already in `out`, so several sequences can share
/// one file and manifest.
#[allow(clippy::too_many_arguments)]
pub fn export_training_set<W, I>(
    frames: I,
    sequence_id: &str,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    params: &ExportParams,
    out: &mut W,
    manifest: &mut Vec<ManifestRow>,
    start: (u64, u64),
) -> Result<ExportSummary>
where
    W: Write,
    I: IntoIterator<Item = Result<(DataCube, Option<[f64; 3]>)>>,
{
    if params.stride == 0 {
        return Err(Error::config("export stride must be positive"));
    }
    let chirps = subsample_chirps(cfg.chirps_per_frame, params.chirps_per_sample)?;
    let (mut index, mut offset) = start;
    let mut summary = ExportSummary::default();
    for (i, frame) in frames.into_iter().enumerate() {
        let (cube, label) = frame?;
        if i % params.stride != 0 {
            continue;
        }
        let Some(label) = label else {
            log::warn!("sequence {sequence_id}: frame {} has no ground truth, skipped", cube.frame_index);
            summary.skipped_no_label += 1;
            continue;
        };
        let maps = frame_heatmaps(&cube, cfg, layout, &chirps)?;
        let rec = HtmpRecord::from_heatmaps(&maps, label)?;
        rec.write_to(out)?;
        manifest.push(ManifestRow {
            record_index: index,
            file_offset: offset,
            frame_index: cube.frame_index,
            sequence_id: sequence_id.to_string(),
        });
        index += 1;
        offset += rec.byte_len() as u64;
        summary.records += 1;
        summary.bytes += rec.byte_len() as u64;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fft_2d_heatmaps;
    use crate::geometry::norm;
    use crate::sim::{synthesize_frame, PointTarget, Scene};

    fn cfg() -> RadarConfig {
        RadarConfig::default()
    }

    fn frame(targets: Vec<PointTarget>) -> DataCube {
        synthesize_frame(&Scene::points(targets, 1, &cfg()), &cfg(), &VirtualArrayLayout::default(), 0).unwrap().cube
    }

    fn mover(p: [f64; 3]) -> PointTarget {
        let r = norm(p);
        PointTarget { position: p, velocity: p.map(|c| c / r * 1.2), amplitude: 1.0 }
    }

    #[test]
    fn boresight_scatterer_peaks_together() {
        let cube = frame(vec![mover([0.0, 2.2, 0.0])]);
        let h = chirp_heatmaps(&cube, &cfg(), &VirtualArrayLayout::default(), 5).unwrap();
        let (row, col) = h.argmax(0);
        assert_eq!(col, ANGLE_FFT_SIZE / 2);
        for i in 0..MAPS_PER_CHIRP {
            assert_eq!(h.argmax(i), (row, ANGLE_FFT_SIZE / 2), "map {i}");
        }
        assert_eq!(h.chirp_index, 5);
    }

    #[test]
    fn zero_cube_gives_zero_maps() {
        let cube = DataCube::zeros(&cfg(), 0, 0.0);
        let h = chirp_heatmaps(&cube, &cfg(), &VirtualArrayLayout::default(), 0).unwrap();
        assert_eq!(h.values.len(), 6 * 256 * 180);
        assert!(h.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn maps_are_normalized() {
        let cube = frame(vec![mover([0.7, 2.9, -0.3]), mover([-0.5, 1.4, 0.4])]);
        let h = chirp_heatmaps(&cube, &cfg(), &VirtualArrayLayout::default(), 100).unwrap();
        for i in 0..MAPS_PER_CHIRP {
            let m = h.map(i);
            assert!(m.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(m.iter().fold(0.0f32, |a, b| a.max(*b)), 1.0);
        }
    }

    #[test]
    fn out_of_range_chirp_is_an_error() {
        let cube = DataCube::zeros(&cfg(), 0, 0.0);
        assert!(chirp_heatmaps(&cube, &cfg(), &VirtualArrayLayout::default(), 128).is_err());
    }

    #[test]
    fn subsample_rule() {
        assert_eq!(subsample_chirps(128, 16).unwrap(), (0..16).map(|i| 8 * i).collect::<Vec<_>>());
        assert_eq!(subsample_chirps(128, 1).unwrap(), vec![0]);
        assert_eq!(subsample_chirps(10, 4).unwrap(), vec![0, 2, 5, 7]);
        assert!(subsample_chirps(128, 0).is_err());
        assert!(subsample_chirps(128, 129).is_err());
    }

    #[test]
    fn azimuth_map_zero_shares_range_bin_with_fft_2d() {
        for p in [[0.3, 1.7, 0.1], [-0.8, 3.1, 0.4], [0.0, 2.6, -0.2]] {
            let cube = frame(vec![mover(p)]);
            let layout = VirtualArrayLayout::default();
            let h = chirp_heatmaps(&cube, &cfg(), &layout, 0).unwrap();
            let (az, el) = fft_2d_heatmaps(&cube, &layout).unwrap();
            let peak = crate::dsp::fft_2d_peak(&az, &el).unwrap();
            assert_eq!(h.argmax(0).0, peak.range_bin);
        }
    }

    #[test]
    fn record_round_trip_is_bit_exact() {
        let cube = frame(vec![mover([0.2, 2.0, 0.1])]);
        let maps = frame_heatmaps(&cube, &cfg(), &VirtualArrayLayout::default(), &[0, 64]).unwrap();
        let rec = HtmpRecord::from_heatmaps(&maps, [0.1, 2.0, -0.25]).unwrap();
        let mut bytes = Vec::new();
        rec.write_to(&mut bytes).unwrap();
        rec.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 2 * rec.byte_len());
        assert_eq!(&bytes[..4], b"HTMP");
        assert_eq!(u16::from_le_bytes([bytes[12], bytes[13]]), 2);
        let back = read_htmp(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, rec.byte_len() as u64);
        let same = back[0].1.values.iter().zip(&rec.values).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
        assert_eq!(back[0].1, rec);
        assert_eq!(back[0].1.heatmap(1, 2), maps[1].elevation_map(0));
    }

    #[test]
    fn truncated_record_reports_offset() {
        let cube = frame(vec![mover([0.2, 2.0, 0.1])]);
        let maps = frame_heatmaps(&cube, &cfg(), &VirtualArrayLayout::default(), &[0]).unwrap();
        let rec = HtmpRecord::from_heatmaps(&maps, [0.0; 3]).unwrap();
        let mut bytes = Vec::new();
        rec.write_to(&mut bytes).unwrap();
        rec.write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 10);
        match read_htmp(&mut bytes.as_slice()) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, bytes.len() as u64),
            other => panic!("{other:?}"),
        }
        let mut bad = vec![0u8; 20];
        bad[..4].copy_from_slice(b"HTMQ");
        assert!(matches!(read_htmp(&mut bad.as_slice()), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn export_skips_unlabelled_frames() {
        let c = RadarConfig { chirps_per_frame: 16, ..cfg() };
        let layout = VirtualArrayLayout::default();
        let scene = Scene::points(vec![mover([0.0, 2.0, 0.0])], 4, &c);
        let frames = (0..4u64).map(|i| {
            let cube = synthesize_frame(&scene, &c, &layout, i)?.cube;
            Ok((cube, (i != 2).then_some([0.0, 2.0, 0.0])))
        });
        let mut bytes = Vec::new();
        let mut manifest = Vec::new();
        let params = ExportParams { chirps_per_sample: 4, stride: 1 };
        let s = export_training_set(frames, "seq", &c, &layout, &params, &mut bytes, &mut manifest, (0, 0)).unwrap();
        assert_eq!((s.records, s.skipped_no_label), (3, 1));
        assert_eq!(manifest.iter().map(|m| m.frame_index).collect::<Vec<_>>(), vec![0, 1, 3]);
        let recs = read_htmp(&mut bytes.as_slice()).unwrap();
        for (m, (off, rec)) in manifest.iter().zip(&recs) {
            assert_eq!(m.file_offset, *off);
            assert_eq!(rec.chirps, 4);
            assert_eq!(rec.n_maps as usize * rec.chirps as usize, 24);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        write_manifest(&path, &manifest).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), manifest);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("record_index,file_offset,frame_index,sequence_id\n"));
    }

    #[test]
    fn pseudospectrum_dump() {
        let spec = Pseudospectrum {
            ranges: vec![1.0, 1.1],
            azimuths_deg: vec![80.0, 90.0, 100.0],
            elevations_deg: vec![0.0],
            values_db: (0..6).map(|i| i as f64 * 1.5).collect(),
        };
        let rec = HtmpRecord::from_pseudospectrum(&spec, [0.0, 1.0, 0.0]).unwrap();
        assert_eq!((rec.n_maps, rec.rows, rec.cols, rec.chirps), (2, 3, 1, 1));
        assert_eq!(rec.heatmap(0, 1), &[4.5, 6.0, 7.5]);
    }
}
