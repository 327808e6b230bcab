//! Saliency map files: 16-bit binary portable graymaps with a scale sidecar,
//! and raw little-endian `f32` grids.
//!
//! Raw grid layout: the 4-byte magic `CGZF`, width and height as `u32` LE,
//! then `width * height` `f32` LE values in row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Heatmap;
use crate::scalar::Scalar;

pub const RAW_MAGIC: &[u8; 4] = b"CGZF";
const PGM16_MAX: f64 = 65535.0;

/// Sidecar for a graymap: stored sample `s` decodes to `s / maxval * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmScale {
    pub scale: f64,
}

/// Writes a P5 graymap with maxval 65535, mapping the map maximum to the
/// top of the range. Returns the scale to store alongside the image.
pub fn write_pgm16<T: Scalar, W: Write>(map: &Heatmap<T>, mut out: W) -> Result<PgmScale> {
    let max = map
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.as_f64()));
    let mut buf = format!("P5\n{} {}\n65535\n", map.width(), map.height()).into_bytes();
    buf.reserve(map.values().len() * 2);
    for v in map.values() {
        let s = if max > 0.0 {
            (v.as_f64() / max * PGM16_MAX).round().clamp(0.0, PGM16_MAX) as u16
        } else {
            0
        };
        buf.extend_from_slice(&s.to_be_bytes());
    }
    out.write_all(&buf).map_err(|e| Error::io("<pgm output>", e))?;
    Ok(PgmScale { scale: max })
}

/// Reads a binary graymap (8- or 16-bit samples).
pub fn read_pgm<T: Scalar, R: Read>(mut input: R, scale: PgmScale) -> Result<Heatmap<T>> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<pgm input>", e))?;
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("truncated graymap header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::format(format!("unsupported graymap magic {:?}", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| Error::format(format!("bad graymap header field {s:?}")))
    };
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(format!("graymap maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let n = w as usize * h as usize;
    let width = if maxval < 256 { 1 } else { 2 };
    let raster = bytes
        .get(pos..pos + n * width)
        .ok_or_else(|| Error::format("truncated graymap raster"))?;
    let unit = scale.scale / maxval as f64;
    let data = if width == 1 {
        raster.iter().map(|b| T::of(*b as f64 * unit)).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| T::of(u16::from_be_bytes([c[0], c[1]]) as f64 * unit))
            .collect()
    };
    Heatmap::from_vec(w, h, data)
}

pub fn write_raw<T: Scalar, W: Write>(map: &Heatmap<T>, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + map.values().len() * 4);
    buf.extend_from_slice(RAW_MAGIC);
    buf.extend_from_slice(&map.width().to_le_bytes());
    buf.extend_from_slice(&map.height().to_le_bytes());
    for v in map.values() {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out.write_all(&buf).map_err(|e| Error::io("<raw output>", e))
}

pub fn read_raw<T: Scalar, R: Read>(mut input: R) -> Result<Heatmap<T>> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<raw input>", e))?;
    if bytes.len() < 12 || &bytes[..4] != RAW_MAGIC {
        return Err(Error::format("missing raw grid magic"));
    }
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let n = w as usize * h as usize;
    if bytes.len() != 12 + 4 * n {
        return Err(Error::format(format!(
            "raw grid {w}x{h} expects {} bytes, found {}",
            12 + 4 * n,
            bytes.len()
        )));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| T::of(f32::from_le_bytes(c.try_into().unwrap()) as f64))
        .collect();
    Heatmap::from_vec(w, h, data)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale.toml");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    Pgm,
    Raw,
}

impl MapFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MapFormat::Pgm => "pgm",
            MapFormat::Raw => "f32",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "pgm" => Some(MapFormat::Pgm),
            "f32" | "raw" => Some(MapFormat::Raw),
            _ => None,
        }
    }
}

/// Saves by extension; graymaps get a `.scale.toml` sidecar.
pub fn save_map<T: Scalar>(map: &Heatmap<T>, path: &Path) -> Result<()> {
    let format = MapFormat::from_path(path)
        .ok_or_else(|| Error::input(format!("unknown map extension on {}", path.display())))?;
    let mut buf = Vec::new();
    match format {
        MapFormat::Raw => write_raw(map, &mut buf)?,
        MapFormat::Pgm => {
            let scale = write_pgm16(map, &mut buf)?;
            let side = sidecar_path(path);
            let text = toml::to_string(&scale).expect("scale serializes");
            fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Loads by extension. A graymap without a sidecar decodes to `[0, 1]`.
pub fn load_map<T: Scalar>(path: &Path) -> Result<Heatmap<T>> {
    let format = MapFormat::from_path(path)
        .ok_or_else(|| Error::input(format!("unknown map extension on {}", path.display())))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        MapFormat::Raw => read_raw(bytes.as_slice()),
        MapFormat::Pgm => {
            let side = sidecar_path(path);
            let scale = match fs::read_to_string(&side) {
                Ok(text) => toml::from_str(&text)
                    .map_err(|e| Error::format(format!("{}: {e}", side.display())))?,
                Err(_) => PgmScale { scale: 1.0 },
            };
            read_pgm(bytes.as_slice(), scale)
        }
    }
}

/// File name for a per-frame map: zero-padded frame index.
pub fn frame_file_name(frame: u32, format: MapFormat) -> String {
    format!("{frame:06}.{}", format.extension())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> Heatmap<f64> {
        Heatmap::from_fn(5, 3, |x, y| (x * 3 + y) as f64 * 0.125).unwrap()
    }

    #[test]
    fn raw_round_trip_is_exact_for_f32_values() {
        let m = sample_map();
        let mut buf = Vec::new();
        write_raw(&m, &mut buf).unwrap();
        assert_eq!(&buf[..4], RAW_MAGIC);
        assert_eq!(buf.len(), 12 + 15 * 4);
        let back: Heatmap<f64> = read_raw(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn raw_rejects_truncation_and_bad_magic() {
        let mut buf = Vec::new();
        write_raw(&sample_map(), &mut buf).unwrap();
        assert!(read_raw::<f64, _>(&buf[..buf.len() - 1]).is_err());
        buf[0] = b'X';
        assert!(read_raw::<f64, _>(buf.as_slice()).is_err());
    }

    #[test]
    fn pgm16_round_trip_within_quantization() {
        let m = sample_map();
        let mut buf = Vec::new();
        let scale = write_pgm16(&m, &mut buf).unwrap();
        assert_eq!(scale.scale, 14.0 * 0.125);
        let back: Heatmap<f64> = read_pgm(buf.as_slice(), scale).unwrap();
        for (a, b) in m.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= scale.scale / 65535.0);
        }
    }

    #[test]
    fn pgm8_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255]);
        let m: Heatmap<f64> = read_pgm(bytes.as_slice(), PgmScale { scale: 1.0 }).unwrap();
        assert_eq!(m.values(), &[0.0, 1.0]);
    }

    #[test]
    fn files_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_map();
        let p = dir.path().join(frame_file_name(7, MapFormat::Pgm));
        assert!(p.ends_with("000007.pgm"));
        save_map(&m, &p).unwrap();
        let back: Heatmap<f64> = load_map(&p).unwrap();
        assert!((back.get(4, 2) - m.get(4, 2)).abs() < 1e-12);
        let r = dir.path().join("x.f32");
        save_map(&m, &r).unwrap();
        assert_eq!(load_map::<f64>(&r).unwrap(), m);
        assert!(save_map(&m, &dir.path().join("x.png")).is_err());
    }
}
