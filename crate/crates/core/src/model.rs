//! Shared domain types: clip geometry, gaze samples, fixation and saliency
//! grids, and frame-time arithmetic.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_FPS: u32 = 24;
pub const DEFAULT_PX_PER_DEGREE: f64 = 45.0;

/// Frame rate as a rational number of frames per second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Fps {
    num: u32,
    den: u32,
}

impl Fps {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::input(format!("fps must be positive, got {num}/{den}")));
        }
        Ok(Fps { num, den })
    }

    pub fn integer(fps: u32) -> Result<Self> {
        Fps::new(fps, 1)
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Fps {
    fn default() -> Self {
        Fps {
            num: DEFAULT_FPS,
            den: 1,
        }
    }
}

impl fmt::Display for Fps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Fps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input(format!("unparseable fps {s:?}"));
        match s.trim().split_once('/') {
            Some((n, d)) => Fps::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => Fps::integer(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

impl TryFrom<String> for Fps {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Fps> for String {
    fn from(f: Fps) -> String {
        f.to_string()
    }
}

/// Axis-aligned rectangle in display pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    /// Strict interior test; points on the boundary are outside.
    pub fn contains_strict(&self, x: f64, y: f64) -> bool {
        x > self.x && x < self.x + self.w && y > self.y && y < self.y + self.h
    }
}

/// Geometry and timing of one clip as shown to observers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub clip_id: String,
    pub frame_count: u32,
    #[serde(default)]
    pub fps: Fps,
    pub frame_width_px: u32,
    pub frame_height_px: u32,
    pub display_width_px: u32,
    pub display_height_px: u32,
    /// Content region after letterboxing. Derived from the aspect ratios
    /// when absent from a manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_area: Option<Rect>,
    #[serde(default = "default_px_per_degree")]
    pub px_per_degree: f64,
}

fn default_px_per_degree() -> f64 {
    DEFAULT_PX_PER_DEGREE
}

impl ClipMeta {
    /// Builds a clip shown centered on the display with the frame scaled to
    /// fit while preserving its aspect ratio.
    pub fn letterboxed(
        clip_id: impl Into<String>,
        frame_count: u32,
        frame: (u32, u32),
        display: (u32, u32),
    ) -> Result<Self> {
        let meta = ClipMeta {
            clip_id: clip_id.into(),
            frame_count,
            fps: Fps::default(),
            frame_width_px: frame.0,
            frame_height_px: frame.1,
            display_width_px: display.0,
            display_height_px: display.1,
            active_area: None,
            px_per_degree: DEFAULT_PX_PER_DEGREE,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn with_fps(mut self, fps: Fps) -> Self {
        self.fps = fps;
        self
    }

    pub fn with_active_area(mut self, area: Rect) -> Result<Self> {
        self.active_area = Some(area);
        self.validate()?;
        Ok(self)
    }

    pub fn with_px_per_degree(mut self, px: f64) -> Result<Self> {
        self.px_per_degree = px;
        self.validate()?;
        Ok(self)
    }

    /// The content rectangle: the explicit one when set, otherwise the
    /// aspect-preserving fit of the frame centered on the display.
    pub fn active_rect(&self) -> Rect {
        if let Some(r) = self.active_area {
            return r;
        }
        let (fw, fh) = (self.frame_width_px as f64, self.frame_height_px as f64);
        let (dw, dh) = (self.display_width_px as f64, self.display_height_px as f64);
        let scale = (dw / fw).min(dh / fh);
        let (w, h) = (fw * scale, fh * scale);
        Rect {
            x: (dw - w) / 2.0,
            y: (dh - h) / 2.0,
            w,
            h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count == 0 {
            return Err(Error::input(format!("clip {}: frame_count must be > 0", self.clip_id)));
        }
        if self.frame_width_px == 0
            || self.frame_height_px == 0
            || self.display_width_px == 0
            || self.display_height_px == 0
        {
            return Err(Error::input(format!("clip {}: zero dimension", self.clip_id)));
        }
        if !(self.px_per_degree > 0.0 && self.px_per_degree.is_finite()) {
            return Err(Error::input(format!(
                "clip {}: px_per_degree must be positive",
                self.clip_id
            )));
        }
        let r = self.active_rect();
        let fits = r.x >= 0.0
            && r.y >= 0.0
            && r.w > 0.0
            && r.h > 0.0
            && r.x + r.w <= self.display_width_px as f64 + 1e-9
            && r.y + r.h <= self.display_height_px as f64 + 1e-9;
        if !fits {
            return Err(Error::input(format!(
                "clip {}: active area {r:?} does not fit the display",
                self.clip_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GazeEvent {
    Fixation,
    Saccade,
    Unknown,
}

impl FromStr for GazeEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixation" | "f" => Ok(GazeEvent::Fixation),
            "saccade" | "s" => Ok(GazeEvent::Saccade),
            "unknown" | "unclassified" | "" => Ok(GazeEvent::Unknown),
            other => Err(Error::format(format!("unknown gaze event {other:?}"))),
        }
    }
}

/// One raw eye-tracker reading in display space.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeSample {
    pub observer_id: String,
    pub timestamp_ms: f64,
    pub x: f64,
    pub y: f64,
    pub valid: bool,
    pub event: GazeEvent,
}

/// Integer pixel position in frame space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

impl Pixel {
    pub const fn new(x: u32, y: u32) -> Self {
        Pixel { x, y }
    }
}

/// Frame shown at `timestamp_ms`: `floor(t * fps / 1000)`.
pub fn frame_of(timestamp_ms: f64, fps: Fps) -> Result<u64> {
    if timestamp_ms.is_nan() || timestamp_ms < 0.0 {
        return Err(Error::input(format!("timestamp must be >= 0, got {timestamp_ms}")));
    }
    let frames = timestamp_ms * fps.num() as f64 / (fps.den() as f64 * 1000.0);
    Ok(frames.floor() as u64)
}

/// Maps a display-space position into real-valued frame coordinates, or
/// `None` when it is not strictly inside the active area.
pub fn to_frame_coords(x: f64, y: f64, meta: &ClipMeta) -> Option<(f64, f64)> {
    let r = meta.active_rect();
    if !r.contains_strict(x, y) {
        return None;
    }
    let sx = meta.frame_width_px as f64 / r.w;
    let sy = meta.frame_height_px as f64 / r.h;
    Some(((x - r.x) * sx, (y - r.y) * sy))
}

/// Inverse of [`to_frame_coords`] for in-area points.
pub fn from_frame_coords(fx: f64, fy: f64, meta: &ClipMeta) -> (f64, f64) {
    let r = meta.active_rect();
    let sx = r.w / meta.frame_width_px as f64;
    let sy = r.h / meta.frame_height_px as f64;
    (r.x + fx * sx, r.y + fy * sy)
}

/// Rounds a real frame coordinate to its pixel, half-up, clamped to the grid.
pub fn rasterize(fx: f64, fy: f64, width: u32, height: u32) -> Pixel {
    let round = |v: f64, n: u32| -> u32 {
        let r = (v + 0.5).floor();
        if r <= 0.0 {
            0
        } else {
            (r as u64).min(n as u64 - 1) as u32
        }
    };
    Pixel::new(round(fx, width), round(fy, height))
}

/// Binary per-frame map of fixated pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixationMap {
    pub frame_index: u32,
    width: u32,
    height: u32,
    points: BTreeSet<Pixel>,
}

impl FixationMap {
    pub fn empty(frame_index: u32, width: u32, height: u32) -> Self {
        FixationMap {
            frame_index,
            width,
            height,
            points: BTreeSet::new(),
        }
    }

    /// Inserts a pixel; returns false when it was already set.
    pub fn insert(&mut self, p: Pixel) -> Result<bool> {
        if p.x >= self.width || p.y >= self.height {
            return Err(Error::input(format!(
                "fixation ({}, {}) outside {}x{} frame",
                p.x, p.y, self.width, self.height
            )));
        }
        Ok(self.points.insert(p))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.points.contains(&p)
    }

    pub fn points(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.points.iter().copied()
    }

    /// Dense 0/1 mask in row-major order.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.width as usize * self.height as usize];
        for p in &self.points {
            m[p.y as usize * self.width as usize + p.x as usize] = true;
        }
        m
    }
}

/// Dense non-negative real grid in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

impl<T: Scalar> Heatmap<T> {
    pub fn zeros(width: u32, height: u32) -> Self {
        Heatmap {
            width,
            height,
            data: vec![T::zero(); width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<T>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::input(format!(
                "{} values for a {width}x{height} grid",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::input(format!("saliency value {bad} is negative or non-finite")));
        }
        Ok(Heatmap {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Heatmap::from_vec(width, height, data)
    }

    /// Wraps data produced by an operation that preserves the invariants.
    pub(crate) fn from_vec_trusted(width: u32, height: u32, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width as usize * height as usize);
        Heatmap {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, x: u32, y: u32) -> T {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn at(&self, p: Pixel) -> T {
        self.get(p.x, p.y)
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Position of the largest value; the first one in row-major order on ties.
    pub fn argmax(&self) -> Pixel {
        let mut best = 0;
        for (i, v) in self.data.iter().enumerate() {
            if *v > self.data[best] {
                best = i;
            }
        }
        let w = self.width as usize;
        Pixel::new((best % w) as u32, (best / w) as u32)
    }

    pub fn cast<U: Scalar>(&self) -> Heatmap<U> {
        Heatmap {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_of_examples() {
        let fps = Fps::integer(24).unwrap();
        assert_eq!(frame_of(0.0, fps).unwrap(), 0);
        assert_eq!(frame_of(1000.0, fps).unwrap(), 24);
        // 41.7 * 24 / 1000 = 1.0008
        assert_eq!(frame_of(41.7, fps).unwrap(), 1);
        assert!(frame_of(-1.0, fps).is_err());
        assert!(frame_of(f64::NAN, fps).is_err());
    }

    #[test]
    fn fractional_fps() {
        let fps: Fps = "24000/1001".parse().unwrap();
        assert_eq!(fps.to_string(), "24000/1001");
        assert_eq!(frame_of(1001.0, fps).unwrap(), 24);
        assert!("0".parse::<Fps>().is_err());
    }

    #[test]
    fn identity_mapping_at_center() {
        let meta = ClipMeta::letterboxed("c", 10, (1920, 1200), (1920, 1200)).unwrap();
        assert_eq!(to_frame_coords(960.0, 600.0, &meta), Some((960.0, 600.0)));
    }

    #[test]
    fn letterbox_rejection() {
        let meta = ClipMeta::letterboxed("c", 10, (1920, 1050), (1920, 1200)).unwrap();
        assert_eq!(meta.active_rect().y, 75.0);
        assert_eq!(to_frame_coords(0.0, 0.0, &meta), None);
        // boundary rows are outside
        assert_eq!(to_frame_coords(960.0, 75.0, &meta), None);
    }

    #[test]
    fn letterbox_offset() {
        let meta = ClipMeta::letterboxed("c", 10, (1920, 800), (1920, 1200)).unwrap();
        let r = meta.active_rect();
        assert_eq!((r.y, r.h), (200.0, 800.0));
        assert_eq!(to_frame_coords(960.0, 600.0, &meta), Some((960.0, 400.0)));
    }

    #[test]
    fn scaled_letterbox_round_trip() {
        let meta = ClipMeta::letterboxed("c", 10, (1280, 544), (1920, 1200)).unwrap();
        let (fx, fy) = to_frame_coords(333.3, 700.1, &meta).unwrap();
        let (dx, dy) = from_frame_coords(fx, fy, &meta);
        assert!((dx - 333.3).abs() < 1e-9 && (dy - 700.1).abs() < 1e-9);
    }

    #[test]
    fn invalid_meta() {
        assert!(ClipMeta::letterboxed("c", 0, (10, 10), (10, 10)).is_err());
        let m = ClipMeta::letterboxed("c", 1, (10, 10), (10, 10)).unwrap();
        assert!(m.clone().with_px_per_degree(0.0).is_err());
        let big = Rect {
            x: 0.0,
            y: 0.0,
            w: 11.0,
            h: 10.0,
        };
        assert!(m.with_active_area(big).is_err());
    }

    #[test]
    fn rasterize_half_up_and_clamp() {
        assert_eq!(rasterize(2.5, 3.49, 10, 10), Pixel::new(3, 3));
        assert_eq!(rasterize(9.7, 0.1, 10, 10), Pixel::new(9, 0));
    }

    #[test]
    fn heatmap_rejects_negative() {
        assert!(Heatmap::<f64>::from_vec(1, 2, vec![0.0, -1.0]).is_err());
        assert!(Heatmap::<f32>::from_vec(1, 2, vec![0.0, f32::INFINITY]).is_err());
        assert!(Heatmap::<f64>::from_vec(2, 2, vec![0.0]).is_err());
    }
}
