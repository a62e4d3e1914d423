//! The `RCUB` raw capture container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "RCUB"
//! 4       2     version (1), u16 LE
//! 6       2     sample encoding, u16 LE: 0 = int16 interleaved IQ, 1 = float32 complex
//! 8       8     config digest (first 8 bytes of SHA-256 of the canonical config text)
//! 16      4     frame_count, u32 LE
//! 20      ...   frame_count frames back to back
//! ```
//!
//! A frame holds `chirps x samples x 12` complex samples, chirp-major, then
//! sample, then virtual antenna; each sample is (I, Q) little-endian.
//! int16 values are scaled by 2^-15.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::cube::DataCube;
use crate::error::{Error, Result};
use crate::model::RadarConfig;

pub const RCUB_MAGIC: [u8; 4] = *b"RCUB";
pub const RCUB_VERSION: u16 = 1;
pub const RCUB_HEADER_LEN: u64 = 20;

const INT16_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleEncoding {
    Int16Iq,
    Float32,
}

impl SampleEncoding {
    pub fn code(self) -> u16 {
        match self {
            SampleEncoding::Int16Iq => 0,
            SampleEncoding::Float32 => 1,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            0 => Some(SampleEncoding::Int16Iq),
            1 => Some(SampleEncoding::Float32),
            _ => None,
        }
    }

    /// Bytes per complex sample.
    pub fn sample_bytes(self) -> u64 {
        match self {
            SampleEncoding::Int16Iq => 4,
            SampleEncoding::Float32 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SampleEncoding::Int16Iq => "int16",
            SampleEncoding::Float32 => "float32",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "int16" => Ok(SampleEncoding::Int16Iq),
            "float32" => Ok(SampleEncoding::Float32),
            other => Err(Error::config(format!("unknown sample encoding `{other}` (int16 | float32)"))),
        }
    }

    /// Worst-case absolute error of one component after a round trip, for
    /// in-range values.
    pub fn quantization_bound(self) -> f64 {
        match self {
            SampleEncoding::Int16Iq => 1.0 / INT16_SCALE,
            SampleEncoding::Float32 => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawCaptureHeader {
    pub version: u16,
    pub encoding: SampleEncoding,
    pub digest: [u8; 8],
    pub frame_count: u32,
}

impl RawCaptureHeader {
    pub fn new(cfg: &RadarConfig, encoding: SampleEncoding, frame_count: u32) -> Self {
        Self { version: RCUB_VERSION, encoding, digest: cfg.digest(), frame_count }
    }

    pub fn to_bytes(&self) -> [u8; RCUB_HEADER_LEN as usize] {
        let mut b = [0u8; RCUB_HEADER_LEN as usize];
        b[..4].copy_from_slice(&RCUB_MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6..8].copy_from_slice(&self.encoding.code().to_le_bytes());
        b[8..16].copy_from_slice(&self.digest);
        b[16..20].copy_from_slice(&self.frame_count.to_le_bytes());
        b
    }

    /// Parses and checks the header against `cfg`.
    pub fn parse(b: &[u8], cfg: &RadarConfig) -> Result<Self> {
        if b.len() < RCUB_HEADER_LEN as usize {
            return Err(Error::Parse {
                offset: b.len() as u64,
                message: format!("header needs {RCUB_HEADER_LEN} bytes, found {}", b.len()),
            });
        }
        if b[..4] != RCUB_MAGIC {
            return Err(Error::Parse { offset: 0, message: format!("bad magic {:?}, expected \"RCUB\"", &b[..4]) });
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != RCUB_VERSION {
            return Err(Error::Parse { offset: 4, message: format!("unsupported RCUB version {version}") });
        }
        let code = u16::from_le_bytes([b[6], b[7]]);
        let encoding = SampleEncoding::from_code(code)
            .ok_or_else(|| Error::Parse { offset: 6, message: format!("unknown sample encoding {code}") })?;
        let digest: [u8; 8] = b[8..16].try_into().expect("8 bytes");
        if digest != cfg.digest() {
            return Err(Error::Parse {
                offset: 8,
                message: "config digest does not match the radar configuration".into(),
            });
        }
        let frame_count = u32::from_le_bytes([b[16], b[17], b[18], b[19]]);
        Ok(Self { version, encoding, digest, frame_count })
    }
}

pub fn frame_bytes(cfg: &RadarConfig, encoding: SampleEncoding) -> u64 {
    cfg.cube_len() as u64 * encoding.sample_bytes()
}

fn to_i16(x: f64) -> i16 {
    (x * INT16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Appends one encoded frame to `out`. int16 values outside `[-1, 1)`
/// saturate.
pub fn encode_frame(cube: &DataCube, encoding: SampleEncoding, out: &mut Vec<u8>) {
    out.reserve(cube.as_slice().len() * encoding.sample_bytes() as usize);
    for c in cube.as_slice() {
        match encoding {
            SampleEncoding::Int16Iq => {
                out.extend_from_slice(&to_i16(c.re).to_le_bytes());
                out.extend_from_slice(&to_i16(c.im).to_le_bytes());
            }
            SampleEncoding::Float32 => {
                out.extend_from_slice(&(c.re as f32).to_le_bytes());
                out.extend_from_slice(&(c.im as f32).to_le_bytes());
            }
        }
    }
}

pub fn decode_frame(
    bytes: &[u8],
    encoding: SampleEncoding,
    cfg: &RadarConfig,
    frame_index: u64,
    timestamp: f64,
) -> Result<DataCube> {
    let data: Vec<Complex64> = match encoding {
        SampleEncoding::Int16Iq => bytes
            .chunks_exact(4)
            .map(|b| {
                let i = i16::from_le_bytes([b[0], b[1]]) as f64 / INT16_SCALE;
                let q = i16::from_le_bytes([b[2], b[3]]) as f64 / INT16_SCALE;
                Complex64::new(i, q)
            })
            .collect(),
        SampleEncoding::Float32 => bytes
            .chunks_exact(8)
            .map(|b| {
                let i = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
                let q = f32::from_le_bytes([b[4], b[5], b[6], b[7]]) as f64;
                Complex64::new(i, q)
            })
            .collect(),
    };
    DataCube::from_vec(cfg, data, frame_index, timestamp)
}

/// Streaming writer; the frame count is fixed up front and checked by
/// [`CaptureWriter::finish`].
pub struct CaptureWriter<W: Write> {
    inner: W,
    encoding: SampleEncoding,
    cube_len: usize,
    expected: u32,
    written: u32,
    buf: Vec<u8>,
}

impl<W: Write> CaptureWriter<W> {
    pub fn new(mut inner: W, cfg: &RadarConfig, encoding: SampleEncoding, frame_count: u32) -> Result<Self> {
        inner.write_all(&RawCaptureHeader::new(cfg, encoding, frame_count).to_bytes())?;
        Ok(Self { inner, encoding, cube_len: cfg.cube_len(), expected: frame_count, written: 0, buf: Vec::new() })
    }

    pub fn write_frame(&mut self, cube: &DataCube) -> Result<()> {
        if self.written == self.expected {
            return Err(Error::input(format!("capture already holds its {} frames", self.expected)));
        }
        if cube.as_slice().len() != self.cube_len {
            return Err(Error::input("cube shape does not match the capture config"));
        }
        self.buf.clear();
        encode_frame(cube, self.encoding, &mut self.buf);
        self.inner.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.expected {
            return Err(Error::input(format!(
                "capture header promises {} frames, {} written",
                self.expected, self.written
            )));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn serialize_capture(cubes: &[DataCube], cfg: &RadarConfig, encoding: SampleEncoding) -> Result<Vec<u8>> {
    let count = u32::try_from(cubes.len()).map_err(|_| Error::input("too many frames for one capture"))?;
    let mut w = CaptureWriter::new(Vec::new(), cfg, encoding, count)?;
    for c in cubes {
        w.write_frame(c)?;
    }
    w.finish()
}

/// Pull-based frame iterator over a capture stream. Frame timestamps are
/// extrapolated from `start_time` and the frame period.
pub struct CaptureReader<R: Read> {
    inner: R,
    cfg: RadarConfig,
    header: RawCaptureHeader,
    start_time: f64,
    next: u32,
    buf: Vec<u8>,
    done: bool,
}

impl<R: Read> CaptureReader<R> {
    pub fn new(mut inner: R, cfg: &RadarConfig) -> Result<Self> {
        let mut head = [0u8; RCUB_HEADER_LEN as usize];
        let got = read_full(&mut inner, &mut head)?;
        let header = RawCaptureHeader::parse(&head[..got], cfg)?;
        Ok(Self {
            inner,
            cfg: *cfg,
            header,
            start_time: 0.0,
            next: 0,
            buf: vec![0u8; frame_bytes(cfg, header.encoding) as usize],
            done: false,
        })
    }

    pub fn with_start_time(mut self, start_time: f64) -> Self {
        self.start_time = start_time;
        self
    }

    pub fn header(&self) -> &RawCaptureHeader {
        &self.header
    }

    fn read_frame(&mut self) -> Result<DataCube> {
        let i = self.next;
        let size = self.buf.len() as u64;
        let offset = RCUB_HEADER_LEN + i as u64 * size;
        let got = read_full(&mut self.inner, &mut self.buf)? as u64;
        if got < size {
            return Err(Error::Truncated { frame: i as usize, offset, expected: size, actual: got });
        }
        self.next += 1;
        let t = self.start_time + i as f64 * self.cfg.frame_period;
        decode_frame(&self.buf, self.header.encoding, &self.cfg, i as u64, t)
    }

    /// After the last frame the stream must be exhausted.
    fn check_end(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        if read_full(&mut self.inner, &mut probe)? > 0 {
            let offset = RCUB_HEADER_LEN + self.header.frame_count as u64 * self.buf.len() as u64;
            return Err(Error::Parse {
                offset,
                message: format!("trailing bytes after {} frames", self.header.frame_count),
            });
        }
        Ok(())
    }
}

impl<R: Read> Iterator for CaptureReader<R> {
    type Item = Result<DataCube>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.next == self.header.frame_count {
            self.done = true;
            return self.check_end().err().map(Err);
        }
        let r = self.read_frame();
        if r.is_err() {
            self.done = true;
        }
        Some(r)
    }
}

pub(crate) fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(n)
}

/// Decodes a whole in-memory capture. The length is checked against the
/// header before any frame is decoded.
pub fn parse_capture(bytes: &[u8], cfg: &RadarConfig) -> Result<Vec<DataCube>> {
    let header = RawCaptureHeader::parse(bytes, cfg)?;
    let size = frame_bytes(cfg, header.encoding);
    let body = bytes.len() as u64 - RCUB_HEADER_LEN;
    let expected = header.frame_count as u64 * size;
    if body < expected {
        let frame = body / size;
        return Err(Error::Truncated {
            frame: frame as usize,
            offset: RCUB_HEADER_LEN + frame * size,
            expected: size,
            actual: body - frame * size,
        });
    }
    if body > expected {
        return Err(Error::Parse {
            offset: RCUB_HEADER_LEN + expected,
            message: format!("trailing bytes after {} frames", header.frame_count),
        });
    }
    CaptureReader::new(bytes, cfg)?.collect()
}
