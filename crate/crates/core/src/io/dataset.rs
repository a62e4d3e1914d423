//! A sequence on disk:
//!
//! ```text
//! <dir>/config.txt     radar config keys plus `start_time` and `encoding`
//! <dir>/gt.csv         frame_index,t,x,y,z
//! <dir>/frames.rcube   RCUB capture
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use crate::array::VirtualArrayLayout;
use crate::cube::DataCube;
use crate::error::{Error, Result};
use crate::io::rcub::{CaptureReader, CaptureWriter, RawCaptureHeader, SampleEncoding, RCUB_HEADER_LEN};
use crate::io::{align_ground_truth, extrapolate_timestamps, read_csv, write_csv, Alignment, GtSample};
use crate::model::{KeyValues, RadarConfig};
use crate::sim::{synthesize_frame, Scene};

pub const CONFIG_FILE: &str = "config.txt";
pub const GT_FILE: &str = "gt.csv";
pub const FRAMES_FILE: &str = "frames.rcube";

/// Gain applied to simulated frames stored as int16, leaving headroom
/// below full scale (simulated samples peak around 2-3). The localizers
/// are scale invariant, so readers do not undo it.
pub const SIM_INT16_GAIN: f64 = 0.125;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub cfg: RadarConfig,
    pub start_time: f64,
    pub encoding: SampleEncoding,
    pub frame_count: usize,
    /// Empty when the sequence has no `gt.csv`.
    pub ground_truth: Vec<GtSample>,
}

pub fn write_config(path: &Path, cfg: &RadarConfig, start_time: f64, encoding: SampleEncoding) -> Result<()> {
    let text = format!("{}start_time = {start_time}\nencoding = {}\n", cfg.to_kv_string(), encoding.name());
    std::fs::write(path, text)?;
    Ok(())
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let config_path = dir.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&config_path)
            .map_err(|e| Error::input(format!("{}: {e}", config_path.display())))?;
        let mut kv = KeyValues::parse(&text, &config_path.display().to_string())?;
        let cfg = RadarConfig::take_from(&mut kv)?;
        let start_time = match kv.take("start_time") {
            Some(v) => v.parse().map_err(|_| Error::config(format!("start_time: `{v}` is not a number")))?,
            None => 0.0,
        };
        let encoding = SampleEncoding::parse(&kv.take("encoding").unwrap_or_else(|| "float32".into()))?;
        if let Some(key) = kv.keys().next() {
            return Err(Error::config(format!("{}: unknown key `{key}`", config_path.display())));
        }
        let mut head = [0u8; RCUB_HEADER_LEN as usize];
        let got = crate::io::rcub::read_full(&mut File::open(dir.join(FRAMES_FILE))?, &mut head)?;
        let header = RawCaptureHeader::parse(&head[..got], &cfg)?;
        if header.encoding != encoding {
            return Err(Error::config(format!(
                "{} says {} but the capture holds {}",
                config_path.display(),
                encoding.name(),
                header.encoding.name()
            )));
        }
        let gt_path = dir.join(GT_FILE);
        let ground_truth = if gt_path.exists() { read_csv(&gt_path)? } else { Vec::new() };
        Ok(Self {
            dir: dir.to_path_buf(),
            cfg,
            start_time,
            encoding,
            frame_count: header.frame_count as usize,
            ground_truth,
        })
    }

    /// Sequence name: the directory's file name.
    pub fn id(&self) -> String {
        self.dir.file_name().map_or_else(|| ".".into(), |n| n.to_string_lossy().into_owned())
    }

    pub fn frames(&self) -> Result<CaptureReader<BufReader<File>>> {
        let f = BufReader::with_capacity(1 << 20, File::open(self.dir.join(FRAMES_FILE))?);
        Ok(CaptureReader::new(f, &self.cfg)?.with_start_time(self.start_time))
    }

    pub fn frame_times(&self) -> Vec<f64> {
        extrapolate_timestamps(self.start_time, self.cfg.frame_period, self.frame_count)
    }

    /// Per-frame labels; every frame is unlabelled without ground truth.
    pub fn labels(&self) -> Result<Alignment> {
        if self.ground_truth.is_empty() {
            return Ok(Alignment { labels: vec![None; self.frame_count], dropped: self.frame_count });
        }
        align_ground_truth(&self.frame_times(), &self.ground_truth)
    }

    /// Frames paired with their labels.
    pub fn labelled_frames(&self) -> Result<impl Iterator<Item = Result<(DataCube, Option<[f64; 3]>)>>> {
        let labels = self.labels()?.labels;
        Ok(self.frames()?.zip(labels).map(|(f, l)| f.map(|c| (c, l))))
    }
}

/// Sequence directories under `root`, sorted by name; `root` itself when it
/// is a sequence.
pub fn sequence_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(CONFIG_FILE).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(root)? {
        let p = entry?.path();
        if p.join(CONFIG_FILE).is_file() {
            out.push(p);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::input(format!("{}: no sequences found", root.display())));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SequenceSummary {
    pub frames: usize,
    pub scatterers: usize,
    pub dropped_scatterers: usize,
    pub bytes: u64,
}

/// Renders every frame of `scene` into a dataset directory.
pub fn write_simulated_sequence(
    dir: &Path,
    scene: &Scene,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    encoding: SampleEncoding,
) -> Result<SequenceSummary> {
    scene.validate()?;
    std::fs::create_dir_all(dir)?;
    let frames = scene.trajectory.len();
    write_config(&dir.join(CONFIG_FILE), cfg, scene.start_time, encoding)?;
    let mut gt = Vec::with_capacity(frames);
    let count = u32::try_from(frames).map_err(|_| Error::input("too many frames"))?;
    let file = BufWriter::with_capacity(1 << 20, File::create(dir.join(FRAMES_FILE))?);
    let mut w = CaptureWriter::new(file, cfg, encoding, count)?;
    let mut dropped = 0;
    let mut clipped = 0usize;
    for i in 0..frames as u64 {
        let mut f = synthesize_frame(scene, cfg, layout, i)?;
        dropped += f.dropped_scatterers;
        if encoding == SampleEncoding::Int16Iq {
            for c in f.cube.as_mut_slice() {
                *c *= SIM_INT16_GAIN;
                clipped += (c.re.abs() >= 1.0) as usize + (c.im.abs() >= 1.0) as usize;
            }
        }
        w.write_frame(&f.cube)?;
        let p = scene.ground_truth(i, cfg)?;
        gt.push(GtSample { frame_index: i, t: scene.frame_time(i, cfg), x: p[0], y: p[1], z: p[2] });
    }
    w.finish()?;
    if clipped > 0 {
        log::warn!("{}: {clipped} int16 components saturated", dir.display());
    }
    write_csv(&dir.join(GT_FILE), &gt)?;
    Ok(SequenceSummary {
        frames,
        scatterers: scene.scatterer_count(),
        dropped_scatterers: dropped,
        bytes: RCUB_HEADER_LEN + frames as u64 * crate::io::frame_bytes(cfg, encoding),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{PointTarget, Trajectory};

    fn small() -> RadarConfig {
        RadarConfig { chirps_per_frame: 8, samples_per_chirp: 32, ..RadarConfig::default() }
    }

    fn scene(cfg: &RadarConfig) -> Scene {
        let mut s = Scene::points(vec![PointTarget::fixed([0.3, 2.0, 0.1], 1.0)], 5, cfg);
        s.trajectory = Trajectory::linear([0.0, 2.0, 0.0], [0.1, 0.2, 0.0], 0.5, 10.0);
        s.drone = Some(Default::default());
        s.start_time = 12.5;
        s.noise_std = 0.01;
        s
    }

    #[test]
    fn write_then_open() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        let seq = dir.path().join("seq_00");
        let s = scene(&cfg);
        let summary =
            write_simulated_sequence(&seq, &s, &cfg, &VirtualArrayLayout::default(), SampleEncoding::Float32).unwrap();
        assert_eq!(summary.frames, 5);
        assert_eq!(summary.bytes, std::fs::metadata(seq.join(FRAMES_FILE)).unwrap().len());
        let ds = Dataset::open(&seq).unwrap();
        assert_eq!((ds.frame_count, ds.start_time, ds.cfg), (5, 12.5, cfg));
        assert_eq!(ds.id(), "seq_00");
        let frames: Vec<_> = ds.labelled_frames().unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(frames.len(), 5);
        for (i, (cube, label)) in frames.iter().enumerate() {
            assert_eq!(cube.frame_index, i as u64);
            assert_eq!(*label, Some(s.ground_truth(i as u64, &cfg).unwrap()));
            let mut expect = synthesize_frame(&s, &cfg, &VirtualArrayLayout::default(), i as u64).unwrap().cube;
            expect.quantize_f32();
            assert_eq!(cube.as_slice(), expect.as_slice());
        }
        assert_eq!(sequence_dirs(dir.path()).unwrap(), vec![seq.clone()]);
        assert_eq!(sequence_dirs(&seq).unwrap(), vec![seq.clone()]);
        let text = std::fs::read_to_string(seq.join(GT_FILE)).unwrap();
        assert!(text.starts_with("frame_index,t,x,y,z\n"));
    }

    #[test]
    fn int16_sequences_are_scaled_below_full_scale() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        let s = scene(&cfg);
        write_simulated_sequence(dir.path(), &s, &cfg, &VirtualArrayLayout::default(), SampleEncoding::Int16Iq)
            .unwrap();
        let ds = Dataset::open(dir.path()).unwrap();
        for (i, cube) in ds.frames().unwrap().enumerate() {
            let cube = cube.unwrap();
            let synth = synthesize_frame(&s, &cfg, &VirtualArrayLayout::default(), i as u64).unwrap().cube;
            for (a, b) in cube.as_slice().iter().zip(synth.as_slice()) {
                let want = b * SIM_INT16_GAIN;
                assert!(want.re.abs() < 1.0 && want.im.abs() < 1.0);
                assert!((a - want).re.abs() <= 1.0 / 32768.0 && (a - want).im.abs() <= 1.0 / 32768.0);
            }
        }
    }

    #[test]
    fn config_mismatch_and_unknown_keys() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        write_simulated_sequence(
            dir.path(),
            &scene(&cfg),
            &cfg,
            &VirtualArrayLayout::default(),
            SampleEncoding::Int16Iq,
        )
        .unwrap();
        assert_eq!(Dataset::open(dir.path()).unwrap().encoding, SampleEncoding::Int16Iq);
        let path = dir.path().join(CONFIG_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, format!("{text}colour = blue\n")).unwrap();
        assert!(Dataset::open(dir.path()).is_err());
        std::fs::write(&path, text.replace("chirps_per_frame = 8", "chirps_per_frame = 16")).unwrap();
        assert!(matches!(Dataset::open(dir.path()), Err(Error::Parse { offset: 8, .. })));
        std::fs::write(&path, text.replace("int16", "float32")).unwrap();
        assert!(Dataset::open(dir.path()).is_err());
    }

    #[test]
    fn missing_ground_truth_leaves_frames_unlabelled() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        write_simulated_sequence(
            dir.path(),
            &scene(&cfg),
            &cfg,
            &VirtualArrayLayout::default(),
            SampleEncoding::Float32,
        )
        .unwrap();
        std::fs::remove_file(dir.path().join(GT_FILE)).unwrap();
        let ds = Dataset::open(dir.path()).unwrap();
        let a = ds.labels().unwrap();
        assert_eq!(a.dropped, 5);
        assert!(a.labels.iter().all(Option::is_none));
    }
}
