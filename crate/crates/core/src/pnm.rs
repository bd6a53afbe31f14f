//! Binary PGM (P5) / PPM (P6) rasters with maxval 255, and frame-list
//! manifests.
//!
//! Samples are copied byte for byte: no gamma handling, no colour conversion.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameRate, VideoSource};

pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn store_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(frame)).map_err(|e| Error::io(path, e))
}

pub fn encode(frame: &Frame) -> Vec<u8> {
    let magic = if frame.channels() == 3 { "P6" } else { "P5" };
    let header = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height());
    let mut out = Vec::with_capacity(header.len() + frame.sample_count());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(frame.pixels());
    out
}

pub fn decode(bytes: &[u8]) -> Result<Frame> {
    let mut cur = Cursor { bytes, pos: 0 };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(m) if m[0] == b'P' => {
            return Err(Error::UnsupportedFormat(format!(
                "netpbm variant {:?}",
                String::from_utf8_lossy(m)
            )))
        }
        _ => return Err(Error::Parse("missing P5/P6 magic".into())),
    };
    cur.pos = 2;
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval {maxval} (only 255 is supported)"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match cur.bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Parse("missing whitespace after maxval".into())),
    }
    let needed = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::Parse("raster dimensions overflow".into()))?;
    let data = &bytes[cur.pos..];
    if data.len() < needed {
        return Err(Error::Parse(format!(
            "truncated raster: {} of {needed} bytes",
            data.len()
        )));
    }
    Frame::new(width, height, channels, data[..needed].to_vec()).map_err(|e| match e {
        Error::DimensionMismatch(msg) => Error::Parse(msg),
        other => other,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        let before = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == before {
            return Err(Error::Parse(format!("expected whitespace before {what}")));
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("missing {what} in header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("{what} out of range")))
    }
}

/// Reads a manifest: first line `fps <num>` or `fps <num>/<den>`, then one
/// frame path per line (relative paths resolve against the manifest's
/// directory). Blank lines are ignored.
pub fn load_video(manifest_path: impl AsRef<Path>) -> Result<VideoSource> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let (frame_rate, paths) = parse_manifest(&text)?;
    let frames = paths
        .iter()
        .map(|p| load_frame(base.join(p)))
        .collect::<Result<Vec<_>>>()?;
    VideoSource::new(video_id(manifest_path), frame_rate, frames)
}

/// The manifest's file stem, or its directory name for the conventional
/// `manifest.txt`.
pub fn video_id(manifest_path: &Path) -> String {
    let name = |p: Option<&std::ffi::OsStr>| p.map(|s| s.to_string_lossy().into_owned());
    let stem = name(manifest_path.file_stem());
    if stem.as_deref().is_none_or(|s| s == "manifest") {
        if let Some(dir) = name(manifest_path.parent().and_then(Path::file_name)) {
            return dir;
        }
    }
    stem.unwrap_or_else(|| "video".into())
}

pub fn parse_manifest(text: &str) -> Result<(FrameRate, Vec<PathBuf>)> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty manifest".into()))?;
    let rate = first
        .trim()
        .strip_prefix("fps")
        .filter(|rest| rest.starts_with(char::is_whitespace))
        .ok_or_else(|| Error::Parse(format!("manifest must start with `fps <rate>`, got {first:?}")))?
        .parse()?;
    let paths = lines
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(PathBuf::from)
        .collect();
    Ok((rate, paths))
}

/// Writes `frames` as numbered rasters into `dir` plus a `manifest.txt`
/// listing them. Returns the manifest path.
pub fn store_video(video: &VideoSource, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!("fps {}\n", video.frame_rate);
    for frame in video.frames() {
        let name = raster_name(frame.id(), frame.channels());
        store_frame(frame, dir.join(&name))?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    let path = dir.join("manifest.txt");
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(manifest.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(crate) fn raster_name(index: u64, channels: usize) -> String {
    let ext = if channels == 3 { "ppm" } else { "pgm" };
    format!("{index:06}.{ext}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_p5() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 64, 128, 255]);
        let f = decode(&bytes).unwrap();
        assert_eq!(f.dims(), (2, 2, 1));
        assert_eq!(f.pixels(), &[0, 64, 128, 255]);
    }

    #[test]
    fn decodes_p6_single_pixel() {
        let mut bytes = b"P6 1 1 255 ".to_vec();
        bytes.extend_from_slice(&[10, 20, 30]);
        let f = decode(&bytes).unwrap();
        assert_eq!(f.dims(), (1, 1, 3));
        assert_eq!(f.pixels(), &[10, 20, 30]);
    }

    #[test]
    fn comments_between_tokens() {
        let mut bytes = b"P5\n# made by hand\n2 # width done\n1\n#max\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 8]);
        assert_eq!(decode(&bytes).unwrap().pixels(), &[7, 8]);
    }

    #[test]
    fn pixel_bytes_that_look_like_whitespace_survive() {
        // first raster byte is '\n' (10) and must not be eaten by the header parser
        let mut bytes = b"P5 2 1 255\n".to_vec();
        bytes.extend_from_slice(&[10, 32]);
        assert_eq!(decode(&bytes).unwrap().pixels(), &[10, 32]);
    }

    #[test]
    fn rejects_16_bit() {
        let mut bytes = b"P6 1 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0; 6]);
        assert!(matches!(decode(&bytes), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn rejects_truncated_and_malformed() {
        assert!(matches!(decode(b"P5 2 2 255\n\x01\x02"), Err(Error::Parse(_))));
        assert!(matches!(decode(b"P5 2 x 255\n"), Err(Error::Parse(_))));
        assert!(matches!(decode(b"GIF89a"), Err(Error::Parse(_))));
        assert!(matches!(decode(b"P5 0 2 255\n"), Err(Error::Parse(_))));
        assert!(matches!(decode(b"P3 1 1 255\n0 0 0"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn encode_uses_format_by_channels() {
        let rgb = Frame::filled(2, 1, 3, 5).unwrap();
        assert!(encode(&rgb).starts_with(b"P6"));
        let gray = Frame::filled(2, 1, 1, 5).unwrap();
        assert!(encode(&gray).starts_with(b"P5"));
    }

    #[test]
    fn manifest_header() {
        let (rate, paths) = parse_manifest("fps 30000/1001\na.pgm\n\nb.pgm\n").unwrap();
        assert_eq!(rate, FrameRate::new(30000, 1001).unwrap());
        assert_eq!(paths, vec![PathBuf::from("a.pgm"), PathBuf::from("b.pgm")]);
        assert!(parse_manifest("fps30\n").is_err());
        assert!(parse_manifest("rate 30\n").is_err());
        let (_, none) = parse_manifest("fps 30\n").unwrap();
        assert!(none.is_empty());
    }
}
