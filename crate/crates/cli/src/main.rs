//! `radloc`: simulate datasets, run the localizers, benchmark and export
//! training heatmaps.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use radloc::eval::{run_benchmark, BenchReport, Localizer, Method, WARMUP_FRAMES};
use radloc::heatmap::{export_training_set, write_manifest, ExportParams, MAPS_PER_CHIRP};
use radloc::io::{sequence_dirs, write_simulated_sequence, Dataset, DetectionRow, EstimateRow, SampleEncoding};
use radloc::model::KeyValues;
use radloc::sim::bench::sequence_scene;
use radloc::sim::{BenchSpec, SceneFrames};
use radloc::{RadarConfig, VirtualArrayLayout};

#[derive(Parser)]
#[command(name = "radloc", version, about = "FMCW radar drone localization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Config file: radar keys (all or none) plus optional `seed`,
    /// `workers`, `duration`, `encoding`. Flags win over the file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Threads for the MUSIC pipelines.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=1024))]
    workers: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render simulated sequences to disk.
    Simulate(SimulateArgs),
    /// Run one pipeline over a sequence and write per-frame estimates.
    Locate(LocateArgs),
    /// Score pipelines against ground truth and time them.
    Bench(BenchArgs),
    /// Write HTMP training heatmaps plus a manifest.
    Export(ExportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory; sequences go into `seq_NN` subdirectories.
    #[arg(long)]
    out: PathBuf,
    /// Render a named benchmark (all its sequences).
    #[arg(long, value_name = "NAME", conflicts_with = "seed")]
    bench: Option<String>,
    /// Trajectory and noise seed for a single sequence.
    #[arg(long)]
    seed: Option<u64>,
    /// Sequence length, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Sample encoding: float32 or int16.
    #[arg(long)]
    encoding: Option<String>,
}

#[derive(Args)]
struct LocateArgs {
    /// pointcloud, fft2d, fft3d, music2d or music3d.
    #[arg(long)]
    method: Method,
    /// A sequence directory (or a root holding exactly one).
    #[arg(long = "in")]
    input: PathBuf,
    /// Estimates CSV: frame,t,x,y,z,status.
    #[arg(long)]
    out: PathBuf,
    /// Also write CFAR detections (pointcloud only).
    #[arg(long, value_name = "CSV")]
    detections: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Pipeline to run; repeatable.
    #[arg(long, required_unless_present = "all")]
    method: Vec<Method>,
    /// Run all five pipelines.
    #[arg(long, conflicts_with = "method")]
    all: bool,
    /// Dataset root or sequence directory.
    #[arg(long = "in", required_unless_present = "bench", conflicts_with = "bench")]
    input: Option<PathBuf>,
    /// Synthesize a named benchmark in memory instead of reading one.
    #[arg(long, value_name = "NAME")]
    bench: Option<String>,
    /// With --bench: shorten each sequence to this many seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// With --bench: use only the first N sequences.
    #[arg(long)]
    sequences: Option<usize>,
    /// Directory for report.json and the CSV curves.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Dataset root or sequence directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory: train.htmp and manifest.csv.
    #[arg(long)]
    out: PathBuf,
    /// Chirps per record (6 heatmaps each).
    #[arg(long, default_value_t = 16)]
    chirps: usize,
    /// Keep every N-th frame.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<radloc::Error> for Failure {
    fn from(e: radloc::Error) -> Self {
        match e {
            radloc::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Settings from `--config`, before flags are applied.
#[derive(Default)]
struct FileSettings {
    radar: Option<RadarConfig>,
    seed: Option<u64>,
    workers: Option<usize>,
    duration: Option<f64>,
    encoding: Option<String>,
}

fn parse_value<T: std::str::FromStr>(kv: &mut KeyValues, key: &str) -> Outcome<Option<T>> {
    kv.take(key).map(|v| v.parse().map_err(|_| Failure::Usage(format!("config `{key}`: bad value `{v}`")))).transpose()
}

fn load_settings(path: Option<&Path>) -> Outcome<FileSettings> {
    let Some(path) = path else {
        return Ok(FileSettings::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut kv = KeyValues::parse(&text, &path.display().to_string()).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut s = FileSettings {
        seed: parse_value(&mut kv, "seed")?,
        workers: parse_value(&mut kv, "workers")?,
        duration: parse_value(&mut kv, "duration")?,
        encoding: kv.take("encoding"),
        radar: None,
    };
    if !kv.is_empty() {
        let radar = RadarConfig::take_from(&mut kv).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if let Some(key) = kv.keys().next() {
            return Err(Failure::Usage(format!("{}: unknown key `{key}`", path.display())));
        }
        s.radar = Some(radar);
    }
    Ok(s)
}

fn workers(common: &Common, file: &FileSettings) -> usize {
    common.workers.map(|w| w as usize).or(file.workers).unwrap_or_else(radloc::music::default_workers)
}

fn emit<T: Serialize>(json: bool, summary: &T, text: impl FnOnce() -> String) -> Outcome {
    if json {
        let s = serde_json::to_string_pretty(summary).map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("{s}");
    } else {
        println!("{}", text());
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulatedSequence {
    dir: PathBuf,
    seed: u64,
    frames: usize,
    scatterers: usize,
    dropped_scatterers: usize,
    bytes: u64,
}

fn simulate(args: &SimulateArgs, common: &Common) -> Outcome {
    let file = load_settings(common.config.as_deref())?;
    let cfg = file.radar.unwrap_or_default();
    let encoding = args.encoding.clone().or(file.encoding).unwrap_or_else(|| "float32".into());
    let encoding = SampleEncoding::parse(&encoding).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut spec = match &args.bench {
        Some(name) => BenchSpec::by_name(name).ok_or_else(|| Failure::Usage(format!("unknown benchmark `{name}`")))?,
        None => BenchSpec::v1(),
    };
    if let Some(d) = args.duration.or(file.duration) {
        spec.duration = d;
    }
    let seeds: Vec<u64> = match &args.bench {
        Some(_) => (0..spec.sequences as u64).collect(),
        None => vec![args.seed.or(file.seed).unwrap_or(0)],
    };
    let layout = VirtualArrayLayout::default();
    let mut out = Vec::new();
    for seed in seeds {
        let scene = sequence_scene(
            seed,
            spec.duration,
            &spec.bounds,
            spec.max_speed,
            spec.body_snr_db,
            Some(spec.ghost),
            spec.static_clutter.clone(),
            &cfg,
        )
        .map_err(|e| match e {
            radloc::Error::Domain(m) | radloc::Error::InvalidInput(m) => Failure::Usage(m),
            e => e.into(),
        })?;
        let dir = args.out.join(format!("seq_{seed:02}"));
        let s = write_simulated_sequence(&dir, &scene, &cfg, &layout, encoding)?;
        log::info!("{}: {} frames", dir.display(), s.frames);
        out.push(SimulatedSequence {
            dir,
            seed,
            frames: s.frames,
            scatterers: s.scatterers,
            dropped_scatterers: s.dropped_scatterers,
            bytes: s.bytes,
        });
    }
    emit(common.json, &out, || {
        out.iter()
            .map(|s| {
                format!(
                    "{}: {} frames, {} scatterers ({} dropped scatterer-frames), {} bytes",
                    s.dir.display(),
                    s.frames,
                    s.scatterers,
                    s.dropped_scatterers,
                    s.bytes
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn single_sequence(input: &Path) -> Outcome<Dataset> {
    let dirs = sequence_dirs(input)?;
    if dirs.len() != 1 {
        return Err(Failure::Usage(format!(
            "{} holds {} sequences; pass one sequence directory",
            input.display(),
            dirs.len()
        )));
    }
    Ok(Dataset::open(&dirs[0])?)
}

#[derive(Serialize)]
struct LocateSummary {
    method: Method,
    sequence: String,
    frames: usize,
    ok: usize,
    no_target: usize,
    errors: usize,
    out: PathBuf,
}

fn locate(args: &LocateArgs, common: &Common) -> Outcome {
    let file = load_settings(common.config.as_deref())?;
    if args.detections.is_some() && args.method != Method::PointCloud {
        return Err(Failure::Usage("--detections needs --method pointcloud".into()));
    }
    let ds = single_sequence(&args.input)?;
    let loc = Localizer::new(ds.cfg).with_workers(workers(common, &file));
    let mut rows = Vec::with_capacity(ds.frame_count);
    let mut detections = Vec::new();
    for frame in ds.frames()? {
        let cube = frame?;
        if args.detections.is_some() {
            let (_, dets) = radloc::dsp::point_cloud(&cube, &loc.cfg, &loc.layout, &loc.point_cloud)?;
            detections.extend(dets.iter().map(|d| DetectionRow::new(cube.frame_index, d)));
        }
        let r = loc.locate(args.method, &cube);
        if let Err(e) = &r {
            log::debug!("frame {}: {e}", cube.frame_index);
        }
        rows.push(EstimateRow::from_result(cube.frame_index, cube.timestamp, &r));
    }
    radloc::io::write_csv(&args.out, &rows)?;
    if let Some(path) = &args.detections {
        radloc::io::write_csv(path, &detections)?;
    }
    let count = |s| rows.iter().filter(|r| r.status == s).count();
    use radloc::io::EstimateStatus as S;
    let summary = LocateSummary {
        method: args.method,
        sequence: ds.id(),
        frames: rows.len(),
        ok: count(S::Ok),
        no_target: count(S::NoTarget),
        errors: count(S::Error),
        out: args.out.clone(),
    };
    emit(common.json, &summary, || {
        format!(
            "{} on {}: {} frames, {} ok, {} no target, {} errors -> {}",
            summary.method,
            summary.sequence,
            summary.frames,
            summary.ok,
            summary.no_target,
            summary.errors,
            summary.out.display()
        )
    })
}

fn bench_from_disk(input: &Path, methods: &[Method], workers: usize) -> Outcome<BenchReport> {
    let datasets = sequence_dirs(input)?.iter().map(|d| Dataset::open(d)).collect::<radloc::Result<Vec<_>>>()?;
    let cfg = datasets[0].cfg;
    if let Some(d) = datasets.iter().find(|d| d.cfg != cfg) {
        return Err(Failure::Runtime(format!("{}: radar config differs from the first sequence", d.dir.display())));
    }
    let mut frames = Vec::new();
    for d in &datasets {
        frames.push(d.labelled_frames()?);
    }
    let loc = Localizer::new(cfg).with_workers(workers);
    Ok(run_benchmark(frames.into_iter().flatten(), methods, &loc, WARMUP_FRAMES)?)
}

fn bench_synthetic(
    args: &BenchArgs,
    name: &str,
    file: &FileSettings,
    methods: &[Method],
    workers: usize,
) -> Outcome<BenchReport> {
    let mut spec = BenchSpec::by_name(name).ok_or_else(|| Failure::Usage(format!("unknown benchmark `{name}`")))?;
    if let Some(d) = args.duration.or(file.duration) {
        spec.duration = d;
    }
    let n = args.sequences.unwrap_or(spec.sequences).min(spec.sequences);
    let cfg = file.radar.unwrap_or_default();
    let layout = VirtualArrayLayout::default();
    let scenes = (0..n).map(|i| spec.scene(i, &cfg)).collect::<radloc::Result<Vec<_>>>()?;
    let frames =
        scenes.iter().flat_map(|s| SceneFrames::new(s, &cfg, &layout)).map(|r| r.map(|(f, gt)| (f.cube, Some(gt))));
    let loc = Localizer::new(cfg).with_workers(workers);
    Ok(run_benchmark(frames, methods, &loc, WARMUP_FRAMES)?)
}

fn bench(args: &BenchArgs, common: &Common) -> Outcome {
    let file = load_settings(common.config.as_deref())?;
    let methods: Vec<Method> = if args.all { Method::ALL.to_vec() } else { args.method.clone() };
    let workers = workers(common, &file);
    let report = match (&args.input, &args.bench) {
        (Some(input), _) => bench_from_disk(input, &methods, workers)?,
        (None, Some(name)) => bench_synthetic(args, name, &file, &methods, workers)?,
        (None, None) => unreachable!("clap requires one of --in / --bench"),
    };
    report.write_artifacts(&args.out)?;
    if common.json {
        println!("{}", report.to_json()?);
        return Ok(());
    }
    println!("{} frames ({} unlabelled), artifacts in {}", report.frames, report.unlabelled_frames, args.out.display());
    println!(
        "{:<11} {:>9} {:>9} {:>9} {:>9} {:>8} {:>7} {:>11} {:>7}",
        "method", "mean cm", "std cm", "max cm", "min cm", "dropped", "failed", "ms/frame", "workers"
    );
    for m in &report.methods {
        let stat = |f: fn(&radloc::eval::ErrorReport) -> f64| {
            m.error.as_ref().map_or("-".to_string(), |e| format!("{:.2}", f(e)))
        };
        println!(
            "{:<11} {:>9} {:>9} {:>9} {:>9} {:>8} {:>7} {:>11.3} {:>7}",
            m.method.name(),
            stat(|e| e.mean_cm),
            stat(|e| e.std_cm),
            stat(|e| e.max_cm),
            stat(|e| e.min_cm),
            m.dropped_frames,
            m.failed_frames,
            m.runtime.mean_ms,
            m.runtime.workers
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ExportReport {
    records: u64,
    skipped_no_label: u64,
    bytes: u64,
    heatmaps_per_record: usize,
    sequences: usize,
    data: PathBuf,
    manifest: PathBuf,
}

fn export(args: &ExportArgs, common: &Common) -> Outcome {
    load_settings(common.config.as_deref())?;
    if args.chirps == 0 || args.stride == 0 {
        return Err(Failure::Usage("--chirps and --stride must be positive".into()));
    }
    let dirs = sequence_dirs(&args.input)?;
    std::fs::create_dir_all(&args.out)?;
    let data = args.out.join("train.htmp");
    let manifest_path = args.out.join("manifest.csv");
    let mut out = BufWriter::new(File::create(&data)?);
    let mut manifest = Vec::new();
    let params = ExportParams { chirps_per_sample: args.chirps, stride: args.stride };
    let layout = VirtualArrayLayout::default();
    let mut total = ExportReport {
        records: 0,
        skipped_no_label: 0,
        bytes: 0,
        heatmaps_per_record: MAPS_PER_CHIRP * args.chirps,
        sequences: dirs.len(),
        data,
        manifest: manifest_path,
    };
    for dir in &dirs {
        let ds = Dataset::open(dir)?;
        let s = export_training_set(
            ds.labelled_frames()?,
            &ds.id(),
            &ds.cfg,
            &layout,
            &params,
            &mut out,
            &mut manifest,
            (total.records, total.bytes),
        )?;
        total.records += s.records;
        total.skipped_no_label += s.skipped_no_label;
        total.bytes += s.bytes;
    }
    std::io::Write::flush(&mut out)?;
    write_manifest(&total.manifest, &manifest)?;
    emit(common.json, &total, || {
        format!(
            "{} records ({} heatmaps each, {} frames without labels skipped), {} bytes -> {}",
            total.records,
            total.heatmaps_per_record,
            total.skipped_no_label,
            total.bytes,
            total.data.display()
        )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, &cli.common),
        Command::Locate(a) => locate(a, &cli.common),
        Command::Bench(a) => bench(a, &cli.common),
        Command::Export(a) => export(a, &cli.common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
