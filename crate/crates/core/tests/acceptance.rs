//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs the full `sim-bench-v1` (10 x 600 frames, every pipeline) by
//! default, which takes minutes. `RADLOC_ACCEPT_STRIDE=k` keeps every k-th
//! benchmark frame for quicker iterations; the stride is printed with the
//! results. Exit status is 1 when a criterion fails and
//! `RADLOC_ACCEPT_STRICT=1` is set, 0 otherwise, so a failure never hides
//! behind a missing line.

use std::f64::consts::PI;
use std::io::Cursor;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radloc::dsp::{
    ca_cfar, clutter_removal, dbscan, dbscan_reference, doppler_fft, fft_3d_peak, range_fft, CfarParams, RANGE_FFT_SIZE,
};
use radloc::eval::{distance_trend, run_benchmark, BenchReport, Localizer, Method, WARMUP_FRAMES};
use radloc::geometry::{cartesian_to_spherical, direction_cosines, norm, spherical_to_cartesian};
use radloc::heatmap::{frame_heatmaps, read_htmp, subsample_chirps, HtmpRecord};
use radloc::io::{parse_capture, serialize_capture, CaptureReader, SampleEncoding, RCUB_HEADER_LEN, SIM_INT16_GAIN};
use radloc::model::SPEED_OF_LIGHT;
use radloc::music::{default_workers, locate_music_3d, MusicParams, SweepGrid};
use radloc::sim::{synthesize_frame, BenchSpec, PointTarget, Scene};
use radloc::{freq_to_range, phase_to_angle, phase_to_velocity, DataCube, Error, RadarConfig, VirtualArrayLayout};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

#[derive(Default)]
struct Suite {
    passed: usize,
    failed: Vec<String>,
}

impl Suite {
    fn run(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
        if o.pass {
            self.passed += 1;
        } else {
            self.failed.push(name.to_string());
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn eq_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let cfg = RadarConfig {
            carrier_freq: rng.random_range(24e9..81e9),
            chirp_slope: rng.random_range(10e12..100e12),
            chirp_period: rng.random_range(20e-6..200e-6),
            ..RadarConfig::default()
        };
        let lambda = SPEED_OF_LIGHT / cfg.carrier_freq;

        let f = rng.random_range(0.0..10e6);
        let r = freq_to_range(f, &cfg).unwrap();
        worst = worst.max(rel(r, SPEED_OF_LIGHT * f / 2.0 / cfg.chirp_slope));

        let dphi = rng.random_range(-PI..=PI);
        let v = phase_to_velocity(dphi, &cfg).unwrap();
        worst = worst.max(rel(v, dphi / (4.0 * PI) * lambda / cfg.chirp_period));

        let d = lambda * rng.random_range(0.4..0.6);
        let s: f64 = rng.random_range(-0.999..0.999);
        let omega = 2.0 * PI * d * s / lambda;
        let theta = phase_to_angle(omega, d, &cfg).unwrap();
        worst = worst.max(rel(theta, (omega * lambda / (2.0 * PI * d)).asin()));
    }
    outcome(worst <= 1e-12, format!("worst relative deviation {worst:.2e} over 1000 inputs (limit 1e-12)"))
}

/// Moving single scatterer at a random in-grid position.
fn closure_frame(rng: &mut ChaCha8Rng, cfg: &RadarConfig) -> ([f64; 3], DataCube) {
    let range = rng.random_range(1.05..3.95);
    let az = rng.random_range(-55.0f64..55.0).to_radians();
    let el = rng.random_range(-14.0f64..14.0).to_radians();
    let p = spherical_to_cartesian(range, az, el);
    let speed = rng.random_range(0.6..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let target = PointTarget { position: p, velocity: p.map(|c| c / range * speed), amplitude: 1.0 };
    let scene = Scene::points(vec![target], 1, cfg);
    (p, synthesize_frame(&scene, cfg, &VirtualArrayLayout::default(), 0).unwrap().cube)
}

const CLOSURE_FRAMES: usize = 500;

/// Both closure checks see the same frames.
fn closure_frames() -> impl Iterator<Item = ([f64; 3], DataCube)> {
    let cfg = RadarConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..CLOSURE_FRAMES).map(move |_| closure_frame(&mut rng, &cfg))
}

fn closure_fft3d() -> Outcome {
    let cfg = RadarConfig::default();
    let layout = VirtualArrayLayout::default();
    let half_bin = 0.5 * cfg.derived().range_resolution;
    let half_col = 1.0 / 180.0;
    let (mut ok, mut miss) = (0, String::new());
    for (i, (p, cube)) in closure_frames().enumerate() {
        let peak = fft_3d_peak(&cube, &cfg, &layout).unwrap();
        let (u, w) = direction_cosines(p);
        let e = [(peak.range - norm(p)).abs() / half_bin, (peak.u - u).abs() / half_col, (peak.w - w).abs() / half_col];
        if e.iter().all(|&x| x <= 1.0) {
            ok += 1;
        } else if miss.is_empty() {
            miss = format!("; first miss frame {i}: errors {:.2}/{:.2}/{:.2} half-cells", e[0], e[1], e[2]);
        }
    }
    let frac = ok as f64 / CLOSURE_FRAMES as f64;
    outcome(frac >= 0.99, format!("{ok}/{CLOSURE_FRAMES} within half a cell (need 99%){miss}"))
}

fn closure_music3d() -> Outcome {
    let cfg = RadarConfig::default();
    let layout = VirtualArrayLayout::default();
    let grid = SweepGrid::default();
    let params = MusicParams { workers: default_workers(), ..MusicParams::default() };
    let (mut ok, mut miss) = (0, String::new());
    let mut worst = [0.0f64; 3];
    for (i, (p, cube)) in closure_frames().enumerate() {
        let est = locate_music_3d(&cube, &cfg, &layout, &grid, &params).unwrap().estimate.position();
        let (r0, a0, e0) = cartesian_to_spherical(p);
        let (r1, a1, e1) = cartesian_to_spherical(est);
        let d = [(r1 - r0).abs(), (a1 - a0).abs().to_degrees(), (e1 - e0).abs().to_degrees()];
        for (w, x) in worst.iter_mut().zip(d) {
            *w = w.max(x);
        }
        if d[0] <= 0.05 + 1e-9 && d[1] <= 0.5 + 1e-9 && d[2] <= 0.5 + 1e-9 {
            ok += 1;
        } else if miss.is_empty() {
            miss = format!("; first miss frame {i}: {:.3} m, {:.2} deg, {:.2} deg", d[0], d[1], d[2]);
        }
    }
    let frac = ok as f64 / CLOSURE_FRAMES as f64;
    outcome(
        frac >= 0.99,
        format!(
            "{ok}/{CLOSURE_FRAMES} within (0.05 m, 0.5 deg, 0.5 deg) (need 99%); worst {:.3} m, {:.2} deg, {:.2} deg{miss}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn bin_energy(p: &radloc::dsp::RangeProfiles, bin: usize) -> f64 {
    (0..p.chirps()).map(|c| (0..12).map(|v| p.get(c, bin, v).norm_sqr()).sum::<f64>()).sum()
}

fn clutter_suppression() -> Outcome {
    let cfg = RadarConfig::default();
    let layout = VirtualArrayLayout::default();
    let res = cfg.derived().range_resolution;
    let fixed_at = [0.2, 40.0 * res, 0.1];
    let moving = PointTarget { position: [-0.3, 3.2, 0.0], velocity: [0.0, 1.2, 0.0], amplitude: 1.0 };
    let both = Scene::points(vec![PointTarget::fixed(fixed_at, 1.0), moving], 1, &cfg);
    let alone = Scene::points(vec![moving], 1, &cfg);
    let cube = synthesize_frame(&both, &cfg, &layout, 0).unwrap().cube;
    let before = range_fft(&cube, RANGE_FFT_SIZE).unwrap();
    let after = clutter_removal(&before).unwrap();
    let bin = (norm(fixed_at) / res).round() as usize;
    let suppression = 10.0 * (bin_energy(&before, bin) / bin_energy(&after, bin)).log10();

    // Moving peak against the oracle: the mover alone, no clutter removal.
    let oracle =
        doppler_fft(&range_fft(&synthesize_frame(&alone, &cfg, &layout, 0).unwrap().cube, RANGE_FFT_SIZE).unwrap());
    let filtered = doppler_fft(&after);
    let peak = |m: &radloc::dsp::RangeDopplerMap| {
        let (mut best, mut at) = (0.0, 0);
        for (i, &v) in m.values().iter().enumerate() {
            if v > best {
                (best, at) = (v, i);
            }
        }
        (best, at)
    };
    let (ov, oi) = peak(&oracle);
    let fv = filtered.values()[oi];
    let perturbation = (20.0 * (fv / ov).log10()).abs();
    outcome(
        suppression >= 40.0 && perturbation < 1.0,
        format!(
            "static suppressed {suppression:.1} dB (need >= 40), mover peak changed {perturbation:.3} dB (need < 1)"
        ),
    )
}

fn cfar_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (rows, cols) = (1000, 1000);
    // Square-law detected complex Gaussian noise is exponential.
    let values: Vec<f64> = (0..rows * cols).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let hits = ca_cfar(&values, rows, cols, &CfarParams::default()).len();
    let rate = hits as f64 / (rows * cols) as f64;
    outcome(
        (0.5e-3..=2e-3).contains(&rate),
        format!("{hits} false alarms in 1e6 cells, rate {rate:.2e} (need 5e-4..2e-3)"),
    )
}

fn dbscan_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut same = 0;
    for _ in 0..100 {
        let n = rng.random_range(0..=200);
        // Clumps plus background, in a drone-sized room.
        let centers: Vec<[f64; 3]> =
            (0..rng.random_range(1..5)).map(|_| std::array::from_fn(|_| rng.random_range(-1.5..1.5))).collect();
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                if rng.random_bool(0.7) {
                    let c = centers[rng.random_range(0..centers.len())];
                    std::array::from_fn(|k| c[k] + rng.random_range(-0.3..0.3))
                } else {
                    std::array::from_fn(|_| rng.random_range(-2.0..2.0))
                }
            })
            .collect();
        let (eps, min_pts) = (rng.random_range(0.1..0.4), rng.random_range(2..6));
        if dbscan(&pts, eps, min_pts).unwrap() == dbscan_reference(&pts, eps, min_pts).unwrap() {
            same += 1;
        }
    }
    outcome(same == 100, format!("{same}/100 point sets partitioned identically"))
}

fn bench_scenes() -> (Vec<Scene>, RadarConfig) {
    let cfg = RadarConfig::default();
    let spec = BenchSpec::v1();
    let scenes = (0..spec.sequences).map(|i| spec.scene(i, &cfg).unwrap()).collect();
    (scenes, cfg)
}

fn run_bench(stride: usize, workers: usize) -> BenchReport {
    let (scenes, cfg) = bench_scenes();
    let layout = VirtualArrayLayout::default();
    let frames = scenes.iter().flat_map(|s| {
        let layout = layout.clone();
        (0..s.trajectory.len() as u64).step_by(stride).map(move |i| {
            let f = synthesize_frame(s, &cfg, &layout, i)?;
            Ok((f.cube, Some(s.ground_truth(i, &cfg)?)))
        })
    });
    let loc = Localizer::new(cfg).with_workers(workers);
    run_benchmark(frames, &Method::ALL, &loc, WARMUP_FRAMES).expect("benchmark runs")
}

fn stat(r: &BenchReport, m: Method, f: fn(&radloc::eval::ErrorReport) -> f64) -> f64 {
    r.method(m).and_then(|x| x.error.as_ref()).map_or(f64::NAN, f)
}

fn ms(r: &BenchReport, m: Method) -> f64 {
    r.method(m).map_or(f64::NAN, |x| x.runtime.mean_ms)
}

fn table_iii(r: &BenchReport) -> Outcome {
    let mean = |m| stat(r, m, |e| e.mean_cm);
    let std = |m| stat(r, m, |e| e.std_cm);
    let checks = [
        ("3D FFT mean < 2D FFT mean", mean(Method::Fft3d), mean(Method::Fft2d)),
        ("3D MUSIC mean < 2D MUSIC mean", mean(Method::Music3d), mean(Method::Music2d)),
        ("point cloud std < 2D FFT std", std(Method::PointCloud), std(Method::Fft2d)),
    ];
    let pass = checks.iter().all(|(_, a, b)| a < b);
    let detail = checks.iter().map(|(n, a, b)| format!("{n}: {a:.2} vs {b:.2} cm")).collect::<Vec<_>>().join("; ");
    let drops = Method::ALL
        .iter()
        .filter_map(|&m| r.method(m))
        .map(|m| format!("{} {}+{}", m.method, m.dropped_frames, m.failed_frames))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("{detail} (dropped+failed frames: {drops})"))
}

fn table_iv(r: &BenchReport, music_single_ms: f64, music_parallel_ms: f64, workers: usize) -> Outcome {
    let (f2, pc, f3) = (ms(r, Method::Fft2d), ms(r, Method::PointCloud), ms(r, Method::Fft3d));
    let (m2, m3) = (ms(r, Method::Music2d), ms(r, Method::Music3d));
    let checks = [
        (f2 < pc, format!("2D FFT {f2:.2} < point cloud {pc:.2} ms")),
        (f2 < f3, format!("2D FFT {f2:.2} < 3D FFT {f3:.2} ms")),
        (m3 >= 10.0 * m2, format!("3D MUSIC {m3:.1} >= 10 x 2D MUSIC {m2:.2} ms")),
        (
            music_parallel_ms < music_single_ms,
            format!(
                "3D MUSIC with {workers} workers {music_parallel_ms:.1} < single worker {music_single_ms:.1} ms \
                 ({} hardware threads)",
                default_workers()
            ),
        ),
    ];
    let pass = checks.iter().all(|c| c.0);
    let detail =
        checks.iter().map(|(ok, s)| if *ok { s.clone() } else { format!("NOT {s}") }).collect::<Vec<_>>().join("; ");
    outcome(pass, detail)
}

/// Mean ms per frame of 3D MUSIC over some benchmark frames.
fn music_runtime(cubes: &[DataCube], workers: usize) -> f64 {
    let cfg = RadarConfig::default();
    let loc = Localizer::new(cfg).with_workers(workers);
    for c in cubes.iter().take(2) {
        loc.locate(Method::Music3d, c).unwrap();
    }
    let start = Instant::now();
    for c in cubes {
        loc.locate(Method::Music3d, c).unwrap();
    }
    start.elapsed().as_secs_f64() * 1e3 / cubes.len() as f64
}

fn preprocessing(cubes: &[DataCube]) -> Outcome {
    let cfg = RadarConfig::default();
    let layout = VirtualArrayLayout::default();
    let chirps = subsample_chirps(cfg.chirps_per_frame, 16).unwrap();
    for c in cubes.iter().take(WARMUP_FRAMES) {
        frame_heatmaps(c, &cfg, &layout, &chirps).unwrap();
    }
    let start = Instant::now();
    let mut maps = 0;
    for c in cubes {
        maps += frame_heatmaps(c, &cfg, &layout, &chirps).unwrap().len() * 6;
    }
    let ms = start.elapsed().as_secs_f64() * 1e3 / cubes.len() as f64;
    outcome(ms < 100.0, format!("{ms:.1} ms/frame for {} heatmaps per frame (need < 100)", maps / cubes.len()))
}

fn distance_trend_2d(r: &BenchReport) -> Outcome {
    let bins =
        r.method(Method::Fft2d).and_then(|m| m.error.as_ref()).map(|e| e.by_distance.clone()).unwrap_or_default();
    let rho = distance_trend(&bins).unwrap_or(f64::NAN);
    let curve = bins.iter().map(|b| format!("{:.2}:{:.1}", b.center, b.mean_error_cm)).collect::<Vec<_>>().join(" ");
    outcome(rho > 0.5, format!("Spearman {rho:.3} over {} bins (need > 0.5); m:cm {curve}", bins.len()))
}

fn bit_exact_io(cubes: &[DataCube]) -> Outcome {
    let cfg = RadarConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for enc in [SampleEncoding::Float32, SampleEncoding::Int16Iq] {
        // Inputs as the simulator stores them: rounded to f32, or scaled
        // below int16 full scale.
        let input: Vec<DataCube> = cubes
            .iter()
            .map(|c| {
                let mut c = c.clone();
                match enc {
                    SampleEncoding::Float32 => c.quantize_f32(),
                    SampleEncoding::Int16Iq => c.as_mut_slice().iter_mut().for_each(|x| *x *= SIM_INT16_GAIN),
                }
                c
            })
            .collect();
        let bytes = serialize_capture(&input, &cfg, enc).unwrap();
        let decoded = parse_capture(&bytes, &cfg).unwrap();
        // Decoding then re-encoding must reproduce the bytes, and decoded
        // samples must come back unchanged.
        let again = serialize_capture(&decoded, &cfg, enc).unwrap();
        let twice = parse_capture(&again, &cfg).unwrap();
        let exact = bytes == again && decoded.iter().zip(&twice).all(|(a, b)| a.as_slice() == b.as_slice());
        let bound = enc.quantization_bound();
        let close = input.iter().zip(&decoded).all(|(a, b)| {
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .all(|(x, y)| (x.re - y.re).abs() <= bound && (x.im - y.im).abs() <= bound)
        });
        pass &= exact && close;
        notes.push(format!("RCUB {} {}", enc.name(), if exact && close { "exact" } else { "MISMATCH" }));

        // Cut inside frame 2: the error must name that frame's offset.
        let frame = radloc::io::frame_bytes(&cfg, enc);
        let cut = (RCUB_HEADER_LEN + 2 * frame + frame / 3) as usize;
        let want = RCUB_HEADER_LEN + 2 * frame;
        let stream = CaptureReader::new(Cursor::new(&bytes[..cut]), &cfg).unwrap().find_map(|r| r.err());
        let whole = parse_capture(&bytes[..cut], &cfg).err();
        let ok = |e: &Option<Error>| matches!(e, Some(Error::Truncated { frame: 2, offset, .. }) if *offset == want);
        pass &= ok(&stream) && ok(&whole);
        notes.push(format!(
            "truncation at byte {cut} reported at frame offset {} (want {want})",
            match &stream {
                Some(Error::Truncated { offset, .. }) => offset.to_string(),
                other => format!("{other:?}"),
            }
        ));
    }

    let layout = VirtualArrayLayout::default();
    let chirps = subsample_chirps(cfg.chirps_per_frame, 16).unwrap();
    let mut buf = Vec::new();
    let mut written = Vec::new();
    for (i, c) in cubes.iter().enumerate() {
        let maps = frame_heatmaps(c, &cfg, &layout, &chirps).unwrap();
        let rec = HtmpRecord::from_heatmaps(&maps, [i as f64 * 0.1, 2.0 + 1e-9 * i as f64, -0.3]).unwrap();
        rec.write_to(&mut buf).unwrap();
        written.push(rec);
    }
    let read: Vec<HtmpRecord> = read_htmp(&mut Cursor::new(&buf)).unwrap().into_iter().map(|(_, r)| r).collect();
    let bits = |r: &HtmpRecord| (r.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), r.label.map(f64::to_bits));
    let htmp_exact =
        read.len() == written.len() && read.iter().zip(&written).all(|(a, b)| bits(a) == bits(b) && a == b);
    let mut rewritten = Vec::new();
    for r in &read {
        r.write_to(&mut rewritten).unwrap();
    }
    let htmp_exact = htmp_exact && rewritten == buf;
    pass &= htmp_exact;
    notes.push(format!("HTMP {} records {}", written.len(), if htmp_exact { "exact" } else { "MISMATCH" }));
    let cut = written[0].byte_len() + written[1].byte_len() / 2;
    let htmp_trunc = read_htmp(&mut Cursor::new(&buf[..cut])).err();
    let at = match &htmp_trunc {
        Some(Error::Truncated { offset, .. }) | Some(Error::Parse { offset, .. }) => Some(*offset),
        _ => None,
    };
    // Reported where the bytes ran out.
    let want = cut as u64;
    pass &= at == Some(want);
    notes.push(format!("HTMP truncation reported at {at:?} (want {want})"));
    outcome(pass, notes.join("; "))
}

fn main() {
    let stride: usize = std::env::var("RADLOC_ACCEPT_STRIDE").ok().and_then(|s| s.parse().ok()).unwrap_or(1).max(1);
    let strict = std::env::var("RADLOC_ACCEPT_STRICT").is_ok_and(|v| v == "1");
    println!("acceptance: sim-bench-v1 stride {stride}, {} hardware threads", default_workers());
    let mut suite = Suite::default();

    suite.run("eq-fidelity", eq_fidelity);
    suite.run("closure-fft3d", closure_fft3d);
    suite.run("closure-music3d", closure_music3d);
    suite.run("clutter-removal", clutter_suppression);
    suite.run("cfar-calibration", cfar_calibration);
    suite.run("dbscan-oracle", dbscan_equivalence);

    // A spread of benchmark frames for the timing and I/O checks.
    let (scenes, cfg) = bench_scenes();
    let layout = VirtualArrayLayout::default();
    let sample: Vec<DataCube> = (0..40u64)
        .map(|k| synthesize_frame(&scenes[(k % 10) as usize], &cfg, &layout, 37 + 13 * k).unwrap().cube)
        .collect();
    suite.run("preprocessing-under-100ms", || preprocessing(&sample));
    suite.run("bit-exact-io", || bit_exact_io(&sample[..4]));

    let start = Instant::now();
    let report = run_bench(stride, 1);
    println!("     benchmark: {} frames in {:.0} s", report.frames, start.elapsed().as_secs_f64());
    let parallel_workers = default_workers().max(4);
    let single = music_runtime(&sample[..12], 1);
    let parallel = music_runtime(&sample[..12], parallel_workers);
    suite.run("table-iii-ordering", || table_iii(&report));
    suite.run("table-iv-ordering", || table_iv(&report, single, parallel, parallel_workers));
    suite.run("error-vs-distance-2d-fft", || distance_trend_2d(&report));

    println!("acceptance: {} passed, {} failed {:?}", suite.passed, suite.failed.len(), suite.failed);
    if strict && !suite.failed.is_empty() {
        std::process::exit(1);
    }
}
