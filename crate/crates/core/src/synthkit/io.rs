//! Trace files and binary PGM frame dumps.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::render::Frame;
use super::script::{FingerState, HandTraceRecord};
use crate::geometry::{SceneConfig, Vec3};
use crate::hand::CONTACT_EPS_MM;
use crate::textio::{data_lines, parse_bool01, parse_field, FormatError};

/// A trace file: `#` header lines followed by one line per frame,
/// `t_ms` then `finger_id tip_x tip_y tip_z contact` per finger.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceFile {
    /// `# key value` header entries in file order.
    pub headers: Vec<(String, String)>,
    pub records: Vec<HandTraceRecord>,
}

impl TraceFile {
    pub fn header(&self, key: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn scene_header(scene: &SceneConfig) -> String {
    let l = scene.light.position;
    let c = &scene.camera;
    format!(
        "light={:.4},{:.4},{:.4} camera={:.4},{:.4},{:.4} focal_px={:.4} principal={:.4},{:.4} resolution={}x{}",
        l.x, l.y, l.z, c.center.x, c.center.y, c.center.z, c.focal_px, c.principal_point.x,
        c.principal_point.y, c.width, c.height
    )
}

pub fn format_trace(trace: &TraceFile) -> String {
    let mut out = String::from("# shadowtouch-trace v1\n");
    for (k, v) in &trace.headers {
        let _ = writeln!(out, "# {k} {v}");
    }
    for r in &trace.records {
        let _ = write!(out, "{}", r.t_ms);
        for f in &r.fingers {
            let _ = write!(
                out,
                " {} {:.6} {:.6} {:.6} {}",
                f.id,
                f.tip.x,
                f.tip.y,
                f.tip.z,
                u8::from(f.contact)
            );
        }
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<TraceFile, FormatError> {
    let mut file = TraceFile::default();
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix('#') {
            let rest = rest.trim();
            if rest.starts_with("shadowtouch-trace") || rest.is_empty() {
                continue;
            }
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            file.headers.push((k.to_string(), v.trim().to_string()));
        }
    }
    let mut last_t = None;
    for (n, line) in data_lines(text) {
        let mut fields = line.split_whitespace();
        let t_ms: u64 = parse_field(n, "t_ms", fields.next())?;
        if last_t.is_some_and(|prev| t_ms <= prev) {
            return Err(FormatError::malformed(n, "timestamps must strictly increase"));
        }
        last_t = Some(t_ms);
        let rest: Vec<&str> = fields.collect();
        if rest.len() % 5 != 0 {
            return Err(FormatError::malformed(n, "expected groups of 5 fields per finger"));
        }
        let mut fingers: Vec<FingerState> = Vec::with_capacity(rest.len() / 5);
        for g in rest.chunks(5) {
            let id = parse_field(n, "finger_id", Some(g[0]))?;
            let tip = Vec3::new(
                parse_field(n, "tip_x", Some(g[1]))?,
                parse_field(n, "tip_y", Some(g[2]))?,
                parse_field(n, "tip_z", Some(g[3]))?,
            );
            if !tip.is_finite() || tip.z < 0.0 {
                return Err(FormatError::malformed(n, "tip must be finite with z >= 0"));
            }
            let contact = parse_bool01(n, "contact", Some(g[4]))?;
            if contact != (tip.z <= CONTACT_EPS_MM) {
                return Err(FormatError::malformed(n, "contact flag disagrees with tip height"));
            }
            if fingers.iter().any(|f| f.id == id) {
                return Err(FormatError::malformed(n, format!("duplicate finger id {id}")));
            }
            fingers.push(FingerState { id, tip, contact });
        }
        file.records.push(HandTraceRecord { t_ms, fingers });
    }
    Ok(file)
}

pub fn write_pgm<W: Write>(mut w: W, frame: &Frame) -> io::Result<()> {
    write!(w, "P5\n# t_ms={}\n{} {}\n255\n", frame.t_ms, frame.width, frame.height)?;
    w.write_all(&frame.pixels)
}

/// Reads a binary P5 PGM with maxval 255. A `# t_ms=N` comment sets the
/// frame timestamp; without one it is 0.
pub fn read_pgm(data: &[u8]) -> Result<Frame, FormatError> {
    let bad = |m: &str| FormatError::malformed(1, format!("pgm: {m}"));
    let mut pos = 0;
    let mut t_ms = 0;
    let mut tokens: Vec<String> = Vec::with_capacity(4);
    while tokens.len() < 4 {
        let Some(&c) = data.get(pos) else {
            return Err(bad("truncated header"));
        };
        if c == b'#' {
            let end = data[pos..].iter().position(|&b| b == b'\n').map_or(data.len(), |e| pos + e);
            let comment = String::from_utf8_lossy(&data[pos + 1..end]);
            if let Some(v) = comment.trim().strip_prefix("t_ms=") {
                t_ms = v.trim().parse().map_err(|_| bad("bad t_ms comment"))?;
            }
            pos = end + 1;
        } else if c.is_ascii_whitespace() {
            pos += 1;
        } else {
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() && data[pos] != b'#' {
                pos += 1;
            }
            tokens.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
        }
    }
    if tokens[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let width: u32 = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: u32 = tokens[2].parse().map_err(|_| bad("bad height"))?;
    if tokens[3] != "255" {
        return Err(bad("only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let len = width as usize * height as usize;
    let raster = data.get(pos..pos + len).ok_or_else(|| bad("truncated raster"))?;
    Frame::new(t_ms, width, height, raster.to_vec()).map_err(|e| bad(&e.to_string()))
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.pgm")
}

/// Writes frames as `frame_000000.pgm`, `frame_000001.pgm`, ... into `dir`.
pub fn write_frame_dir<'a>(
    dir: &Path,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (i, frame) in frames.into_iter().enumerate() {
        let path = dir.join(frame_file_name(i));
        let mut file = io::BufWriter::new(std::fs::File::create(&path)?);
        write_pgm(&mut file, frame)?;
        file.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads every `*.pgm` in `dir` in file-name order.
pub fn read_frame_dir(dir: &Path) -> Result<Vec<Frame>, FormatError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let data = std::fs::read(p)?;
            read_pgm(&data).map_err(|e| match e {
                FormatError::Malformed { message, .. } => FormatError::Malformed {
                    line: 1,
                    message: format!("{}: {message}", p.display()),
                },
                other => other,
            })
        })
        .collect()
}
