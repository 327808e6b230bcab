//! Editing annotations: shots with camera motion, angle and size, the cuts
//! between them, and per-frame face boxes.
//!
//! Documents are TOML:
//!
//! ```toml
//! schema_version = 1
//! clip_id = "godfather"
//! frame_count = 20
//! frame_width = 1280
//! frame_height = 720
//!
//! [[shot]]
//! start = 0          # first frame
//! end = 10           # one past the last frame
//! motions = ["Pan", "Dolly"]
//! direction = "Left" # Pan/Dolly only, optional
//! angle = "Eye"
//! size = "MCU"
//!
//! [[face]]
//! frame = 3
//! boxes = [[100, 80, 40, 50]]  # x, y, w, h in frame pixels
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Fps;

pub const SCHEMA_VERSION: u32 = 1;

macro_rules! token_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $token:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.token() == s)
                    .ok_or_else(|| Error::validation(format!(
                        "unknown {} token {s:?}", stringify!($name)
                    )))
            }
        }
    };
}

token_enum!(
    /// Camera motion; a shot may combine several.
    Motion {
        Static => "Static",
        Track => "Track",
        Zoom => "Zoom",
        Pan => "Pan",
        Tilt => "Tilt",
        Dolly => "Dolly",
        Crane => "Crane",
        Handheld => "Handheld",
        RackFocus => "RackFocus",
    }
);

token_enum!(
    Direction {
        Left => "Left",
        Right => "Right",
        None => "None",
    }
);

token_enum!(
    Angle {
        Eye => "Eye",
        Low => "Low",
        High => "High",
        Worm => "Worm",
        Bird => "Bird",
        Top => "Top",
    }
);

token_enum!(
    /// Nine-step shot size scale from extreme closeup to establishing shot.
    ShotSize {
        Xcu => "XCU",
        Bcu => "BCU",
        Cu => "CU",
        Mcu => "MCU",
        Ms => "MS",
        Mls => "MLS",
        Ls => "LS",
        Vls => "VLS",
        Est => "EST",
    }
);

/// Motions that cannot accompany `Static`.
const MOVING: [Motion; 5] = [
    Motion::Pan,
    Motion::Tilt,
    Motion::Dolly,
    Motion::Crane,
    Motion::Handheld,
];

/// Half-open frame interval `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shot {
    pub start: u32,
    pub end: u32,
    /// Sorted, without duplicates.
    pub motions: Vec<Motion>,
    pub direction: Option<Direction>,
    pub angle: Angle,
    pub size: ShotSize,
}

impl Shot {
    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, frame: u32) -> bool {
        frame >= self.start && frame < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipAnnotation {
    pub clip_id: String,
    pub frame_count: u32,
    pub frame_width: u32,
    pub frame_height: u32,
    pub shots: Vec<Shot>,
    /// Face boxes by frame, in document order; frames without faces absent.
    pub faces: BTreeMap<u32, Vec<FaceBox>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema_version: u32,
    clip_id: String,
    frame_count: u32,
    frame_width: u32,
    frame_height: u32,
    #[serde(default, rename = "shot")]
    shots: Vec<RawShot>,
    #[serde(default, rename = "face", skip_serializing_if = "Vec::is_empty")]
    faces: Vec<RawFaces>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShot {
    start: u32,
    end: u32,
    motions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<String>,
    angle: String,
    size: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFaces {
    frame: u32,
    boxes: Vec<[u32; 4]>,
}

/// Parses and validates an annotation document.
pub fn parse_annotations(document: &str) -> Result<ClipAnnotation> {
    let raw: RawDocument =
        toml::from_str(document).map_err(|e| Error::format(format!("annotation document: {e}")))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            raw.schema_version
        )));
    }
    let mut shots = Vec::with_capacity(raw.shots.len());
    for s in raw.shots {
        let mut motions = s
            .motions
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<Motion>>>()?;
        motions.sort();
        motions.dedup();
        shots.push(Shot {
            start: s.start,
            end: s.end,
            motions,
            direction: s.direction.as_deref().map(str::parse).transpose()?,
            angle: s.angle.parse()?,
            size: s.size.parse()?,
        });
    }
    let mut faces: BTreeMap<u32, Vec<FaceBox>> = BTreeMap::new();
    for f in raw.faces {
        faces.entry(f.frame).or_default().extend(
            f.boxes
                .iter()
                .map(|b| FaceBox {
                    x: b[0],
                    y: b[1],
                    w: b[2],
                    h: b[3],
                }),
        );
    }
    let ann = ClipAnnotation {
        clip_id: raw.clip_id,
        frame_count: raw.frame_count,
        frame_width: raw.frame_width,
        frame_height: raw.frame_height,
        shots,
        faces,
    };
    ann.validate()?;
    Ok(ann)
}

impl ClipAnnotation {
    pub fn validate(&self) -> Result<()> {
        let id = &self.clip_id;
        if self.frame_count == 0 {
            return Err(Error::validation(format!("clip {id}: frame_count must be > 0")));
        }
        let mut expected = 0u32;
        for s in &self.shots {
            if s.start >= s.end {
                return Err(Error::validation(format!(
                    "clip {id}: empty shot [{}, {})",
                    s.start, s.end
                )));
            }
            if s.start > expected {
                return Err(Error::validation(format!(
                    "clip {id}: gap in shots covering frames {}-{}",
                    expected,
                    s.start - 1
                )));
            }
            if s.start < expected {
                return Err(Error::validation(format!(
                    "clip {id}: shots overlap on frames {}-{}",
                    s.start,
                    expected.min(s.end) - 1
                )));
            }
            if s.motions.is_empty() {
                return Err(Error::validation(format!(
                    "clip {id}: shot at frame {} has no camera motion",
                    s.start
                )));
            }
            if s.motions.contains(&Motion::Static) {
                if let Some(m) = s.motions.iter().find(|m| MOVING.contains(m)) {
                    return Err(Error::validation(format!(
                        "clip {id}: shot at frame {} is both Static and {m}",
                        s.start
                    )));
                }
            }
            if matches!(s.direction, Some(d) if d != Direction::None)
                && !s.motions.iter().any(|m| matches!(m, Motion::Pan | Motion::Dolly))
            {
                return Err(Error::validation(format!(
                    "clip {id}: shot at frame {} has a direction without Pan or Dolly",
                    s.start
                )));
            }
            expected = s.end;
        }
        if expected < self.frame_count {
            return Err(Error::validation(format!(
                "clip {id}: gap in shots covering frames {}-{}",
                expected,
                self.frame_count - 1
            )));
        }
        if expected > self.frame_count {
            return Err(Error::validation(format!(
                "clip {id}: shots run to frame {expected} past frame_count {}",
                self.frame_count
            )));
        }
        for (frame, boxes) in &self.faces {
            if *frame >= self.frame_count {
                return Err(Error::validation(format!(
                    "clip {id}: faces on frame {frame} past the clip end"
                )));
            }
            for b in boxes {
                let inside = b.w > 0
                    && b.h > 0
                    && b.x as u64 + b.w as u64 <= self.frame_width as u64
                    && b.y as u64 + b.h as u64 <= self.frame_height as u64;
                if !inside {
                    return Err(Error::validation(format!(
                        "clip {id}: face box {b:?} on frame {frame} leaves the {}x{} frame",
                        self.frame_width, self.frame_height
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical document text; parsing it yields an equal annotation.
    pub fn to_document(&self) -> String {
        let raw = RawDocument {
            schema_version: SCHEMA_VERSION,
            clip_id: self.clip_id.clone(),
            frame_count: self.frame_count,
            frame_width: self.frame_width,
            frame_height: self.frame_height,
            shots: self
                .shots
                .iter()
                .map(|s| RawShot {
                    start: s.start,
                    end: s.end,
                    motions: s.motions.iter().map(|m| m.token().to_string()).collect(),
                    direction: s.direction.map(|d| d.token().to_string()),
                    angle: s.angle.token().to_string(),
                    size: s.size.token().to_string(),
                })
                .collect(),
            faces: self
                .faces
                .iter()
                .map(|(frame, boxes)| RawFaces {
                    frame: *frame,
                    boxes: boxes.iter().map(|b| [b.x, b.y, b.w, b.h]).collect(),
                })
                .collect(),
        };
        toml::to_string(&raw).expect("annotation serializes")
    }

    pub fn shot_at(&self, frame: u32) -> Option<&Shot> {
        let i = self.shots.partition_point(|s| s.end <= frame);
        self.shots.get(i).filter(|s| s.contains(frame))
    }

    /// Labels of the given kind that apply to a frame.
    pub fn labels_at(&self, frame: u32, kind: LabelKind) -> Vec<String> {
        let Some(s) = self.shot_at(frame) else {
            return Vec::new();
        };
        match kind {
            LabelKind::Motion => s.motions.iter().map(|m| m.token().to_string()).collect(),
            LabelKind::Angle => vec![s.angle.token().to_string()],
            LabelKind::Size => vec![s.size.token().to_string()],
        }
    }
}

/// Start frames of every shot but the first.
pub fn cuts_of(ann: &ClipAnnotation) -> Vec<u32> {
    ann.shots.iter().skip(1).map(|s| s.start).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotStats {
    pub clip_id: String,
    pub shot_count: usize,
    pub sequence_length_s: f64,
    pub longest_s: f64,
    pub shortest_s: f64,
    pub average_s: f64,
}

pub fn shot_stats(ann: &ClipAnnotation, fps: Fps) -> ShotStats {
    let secs: Vec<f64> = ann
        .shots
        .iter()
        .map(|s| s.len() as f64 * fps.den() as f64 / fps.num() as f64)
        .collect();
    let total: f64 = secs.iter().sum();
    ShotStats {
        clip_id: ann.clip_id.clone(),
        shot_count: secs.len(),
        sequence_length_s: total,
        longest_s: secs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        shortest_s: secs.iter().copied().fold(f64::INFINITY, f64::min),
        average_s: total / secs.len() as f64,
    }
}

/// Writes a shot-length table, one row per clip.
pub fn write_shot_stats<W: Write>(rows: &[ShotStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "clip_id",
        "shots",
        "sequence_length_s",
        "longest_s",
        "shortest_s",
        "average_s",
    ])?;
    for r in rows {
        w.write_record([
            r.clip_id.clone(),
            r.shot_count.to_string(),
            format!("{:.3}", r.sequence_length_s),
            format!("{:.3}", r.longest_s),
            format!("{:.3}", r.shortest_s),
            format!("{:.3}", r.average_s),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<shot stats output>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Motion,
    Angle,
    Size,
}

impl FromStr for LabelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "motion" => Ok(LabelKind::Motion),
            "angle" => Ok(LabelKind::Angle),
            "size" => Ok(LabelKind::Size),
            _ => Err(Error::input(format!("unknown partition kind {s:?}"))),
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::Motion => "motion",
            LabelKind::Angle => "angle",
            LabelKind::Size => "size",
        })
    }
}

/// Frames grouped by label. Motion labels are multi-label: a frame appears
/// under each motion of its shot.
pub fn partition_frames(ann: &ClipAnnotation, kind: LabelKind) -> BTreeMap<String, Vec<u32>> {
    let mut out: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for s in &ann.shots {
        let labels: Vec<&str> = match kind {
            LabelKind::Motion => s.motions.iter().map(|m| m.token()).collect(),
            LabelKind::Angle => vec![s.angle.token()],
            LabelKind::Size => vec![s.size.token()],
        };
        for l in labels {
            out.entry(l.to_string()).or_default().extend(s.start..s.end);
        }
    }
    out
}

pub fn faces_at(ann: &ClipAnnotation, frame: u32) -> Result<&[FaceBox]> {
    if frame >= ann.frame_count {
        return Err(Error::input(format!(
            "frame {frame} outside clip {} of {} frames",
            ann.clip_id, ann.frame_count
        )));
    }
    Ok(ann.faces.get(&frame).map(Vec::as_slice).unwrap_or(&[]))
}
