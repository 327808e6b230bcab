//! Raw gaze parsing, observer filtering, cleaning and rasterization into
//! per-frame fixation maps.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    frame_of, from_frame_coords, rasterize, to_frame_coords, ClipMeta, FixationMap, GazeEvent,
    GazeSample, Pixel,
};

/// Observers need strictly more than this fraction of valid samples.
pub const DEFAULT_MIN_VALID_RATE: f64 = 0.9;

/// Maps the canonical gaze fields onto the column headers of a vendor export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub delimiter: char,
    pub observer_id: String,
    pub clip_id: String,
    pub timestamp_ms: String,
    pub x_px: String,
    pub y_px: String,
    pub validity: String,
    pub event: String,
    /// Tokens (case-insensitive) meaning the sample is valid.
    pub valid_tokens: Vec<String>,
    /// Multiplier turning the timestamp column into milliseconds.
    pub timestamp_scale: f64,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            delimiter: ',',
            observer_id: "observer_id".into(),
            clip_id: "clip_id".into(),
            timestamp_ms: "timestamp_ms".into(),
            x_px: "x_px".into(),
            y_px: "y_px".into(),
            validity: "validity".into(),
            event: "event".into(),
            valid_tokens: vec!["1".into(), "true".into(), "valid".into()],
            timestamp_scale: 1.0,
        }
    }
}

impl ColumnMapping {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(format!("column mapping: {e}")))
    }

    fn is_valid_token(&self, s: &str) -> bool {
        let s = s.trim();
        self.valid_tokens.iter().any(|t| t.eq_ignore_ascii_case(s))
    }
}

/// Counts of dropped samples by reason, accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub malformed_rows: u64,
    pub rejected_observers: Vec<String>,
    pub invalid_samples: u64,
    pub non_fixation_samples: u64,
    pub outside_active_area: u64,
    pub beyond_last_frame: u64,
    pub kept_points: u64,
}

impl IngestReport {
    pub fn merge(&mut self, other: &IngestReport) {
        self.rows_read += other.rows_read;
        self.malformed_rows += other.malformed_rows;
        self.rejected_observers
            .extend(other.rejected_observers.iter().cloned());
        self.invalid_samples += other.invalid_samples;
        self.non_fixation_samples += other.non_fixation_samples;
        self.outside_active_area += other.outside_active_area;
        self.beyond_last_frame += other.beyond_last_frame;
        self.kept_points += other.kept_points;
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

/// All samples of one observer watching one clip, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverRecord {
    pub observer_id: String,
    pub clip_id: String,
    pub samples: Vec<GazeSample>,
    pub valid_rate: f64,
}

impl ObserverRecord {
    pub fn new(observer_id: String, clip_id: String, mut samples: Vec<GazeSample>) -> Self {
        samples.sort_by(|a, b| a.timestamp_ms.total_cmp(&b.timestamp_ms));
        let valid = samples.iter().filter(|s| s.valid).count();
        let valid_rate = if samples.is_empty() {
            0.0
        } else {
            valid as f64 / samples.len() as f64
        };
        ObserverRecord {
            observer_id,
            clip_id,
            samples,
            valid_rate,
        }
    }
}

/// Parses delimiter-separated gaze text with a header row.
///
/// Rows that cannot be parsed are skipped and counted in the report. A valid
/// sample with a non-finite coordinate is malformed; invalid samples keep
/// their (possibly missing) coordinates since they still count toward the
/// observer's valid rate.
pub fn parse_gaze_samples<R: Read>(
    input: R,
    mapping: &ColumnMapping,
) -> Result<(Vec<ObserverRecord>, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(format!("missing mandatory column {name:?}")))
    };
    let c_obs = col(&mapping.observer_id)?;
    let c_clip = col(&mapping.clip_id)?;
    let c_ts = col(&mapping.timestamp_ms)?;
    let c_x = col(&mapping.x_px)?;
    let c_y = col(&mapping.y_px)?;
    let c_val = col(&mapping.validity)?;
    let c_ev = col(&mapping.event)?;

    let mut report = IngestReport::default();
    let mut groups: BTreeMap<(String, String), Vec<GazeSample>> = BTreeMap::new();
    for row in rdr.records() {
        report.rows_read += 1;
        let Ok(row) = row else {
            report.malformed_rows += 1;
            continue;
        };
        let parsed = (|| -> Option<(String, String, GazeSample)> {
            let obs = row.get(c_obs)?.to_string();
            let clip = row.get(c_clip)?.to_string();
            if obs.is_empty() || clip.is_empty() {
                return None;
            }
            let ts: f64 = row.get(c_ts)?.parse().ok()?;
            let ts = ts * mapping.timestamp_scale;
            if !ts.is_finite() || ts < 0.0 {
                return None;
            }
            let valid = mapping.is_valid_token(row.get(c_val)?);
            let coord = |c: usize| row.get(c).and_then(|v| v.parse::<f64>().ok());
            let (x, y) = match (coord(c_x), coord(c_y)) {
                (Some(x), Some(y)) if x.is_finite() && y.is_finite() => (x, y),
                _ if !valid => (f64::NAN, f64::NAN),
                _ => return None,
            };
            let event: GazeEvent = row.get(c_ev)?.parse().ok()?;
            Some((
                obs.clone(),
                clip,
                GazeSample {
                    observer_id: obs,
                    timestamp_ms: ts,
                    x,
                    y,
                    valid,
                    event,
                },
            ))
        })();
        match parsed {
            Some((obs, clip, s)) => groups.entry((clip, obs)).or_default().push(s),
            None => report.malformed_rows += 1,
        }
    }
    let records = groups
        .into_iter()
        .map(|((clip, obs), samples)| ObserverRecord::new(obs, clip, samples))
        .collect();
    Ok((records, report))
}

/// Splits records into those with `valid_rate > min_rate` and the rest.
pub fn filter_observers(
    records: Vec<ObserverRecord>,
    min_rate: f64,
) -> (Vec<ObserverRecord>, Vec<ObserverRecord>) {
    records.into_iter().partition(|r| r.valid_rate > min_rate)
}

/// One observer's cleaned fixation points, indexed by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverTrack {
    pub observer_id: String,
    pub frames: Vec<Vec<Pixel>>,
}

impl ObserverTrack {
    pub fn empty(observer_id: impl Into<String>, frame_count: u32) -> Self {
        ObserverTrack {
            observer_id: observer_id.into(),
            frames: vec![Vec::new(); frame_count as usize],
        }
    }

    pub fn point_count(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }
}

/// Per-observer, per-frame fixation points of one clip in frame pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanedFixations {
    pub clip_id: String,
    pub frame_count: u32,
    pub width: u32,
    pub height: u32,
    pub observers: Vec<ObserverTrack>,
}

impl CleanedFixations {
    pub fn new(meta: &ClipMeta) -> Self {
        CleanedFixations {
            clip_id: meta.clip_id.clone(),
            frame_count: meta.frame_count,
            width: meta.frame_width_px,
            height: meta.frame_height_px,
            observers: Vec::new(),
        }
    }

    /// Pooled binary map of every observer's points on one frame.
    pub fn frame_map(&self, frame: u32) -> Result<FixationMap> {
        build_fixation_map(
            self.observers
                .iter()
                .flat_map(|o| o.frames[frame as usize].iter().copied()),
            frame,
            self.width,
            self.height,
        )
    }

    /// Turns the points back into fixation samples, one per point, placed
    /// inside their pixel and at the middle of their frame.
    pub fn to_samples(&self, meta: &ClipMeta) -> Vec<ObserverRecord> {
        let frame_ms = 1000.0 * meta.fps.den() as f64 / meta.fps.num() as f64;
        self.observers
            .iter()
            .map(|o| {
                let samples = o
                    .frames
                    .iter()
                    .enumerate()
                    .flat_map(|(f, pts)| {
                        pts.iter().map(move |p| {
                            let (x, y) =
                                from_frame_coords(p.x as f64 + 0.25, p.y as f64 + 0.25, meta);
                            GazeSample {
                                observer_id: o.observer_id.clone(),
                                timestamp_ms: (f as f64 + 0.5) * frame_ms,
                                x,
                                y,
                                valid: true,
                                event: GazeEvent::Fixation,
                            }
                        })
                    })
                    .collect();
                ObserverRecord::new(o.observer_id.clone(), self.clip_id.clone(), samples)
            })
            .collect()
    }

    /// Writes long-form `observer_id,frame_index,x,y` records.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["observer_id", "frame_index", "x", "y"])?;
        for o in &self.observers {
            for (f, pts) in o.frames.iter().enumerate() {
                for p in pts {
                    w.write_record([
                        o.observer_id.as_str(),
                        &f.to_string(),
                        &p.x.to_string(),
                        &p.y.to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<fixation output>", e))?;
        Ok(())
    }

    /// Reads a file written by [`CleanedFixations::write_csv`]. Observers
    /// keep their order of first appearance.
    pub fn read_csv<R: Read>(input: R, meta: &ClipMeta) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            observer_id: String,
            frame_index: u32,
            x: u32,
            y: u32,
        }
        let mut out = CleanedFixations::new(meta);
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        for row in rdr.deserialize() {
            let row: Row = row?;
            if row.frame_index >= out.frame_count || row.x >= out.width || row.y >= out.height {
                return Err(Error::format(format!(
                    "fixation ({}, {}) at frame {} outside clip {}",
                    row.x, row.y, row.frame_index, out.clip_id
                )));
            }
            let i = *index.entry(row.observer_id.clone()).or_insert_with(|| {
                out.observers
                    .push(ObserverTrack::empty(row.observer_id.clone(), out.frame_count));
                out.observers.len() - 1
            });
            out.observers[i].frames[row.frame_index as usize].push(Pixel::new(row.x, row.y));
        }
        Ok(out)
    }
}

/// Keeps valid fixation samples, maps them into frame space, drops those
/// outside the active area or past the last frame, and bins them by frame.
pub fn clean_and_bin(
    records: &[ObserverRecord],
    meta: &ClipMeta,
    report: &mut IngestReport,
) -> Result<CleanedFixations> {
    meta.validate()?;
    let mut out = CleanedFixations::new(meta);
    for rec in records {
        if rec.clip_id != meta.clip_id {
            return Err(Error::input(format!(
                "record for clip {} passed with metadata for {}",
                rec.clip_id, meta.clip_id
            )));
        }
        let mut track = ObserverTrack::empty(rec.observer_id.clone(), meta.frame_count);
        for s in &rec.samples {
            if !s.valid {
                report.invalid_samples += 1;
                continue;
            }
            if s.event != GazeEvent::Fixation {
                report.non_fixation_samples += 1;
                continue;
            }
            let Some((fx, fy)) = to_frame_coords(s.x, s.y, meta) else {
                report.outside_active_area += 1;
                continue;
            };
            let frame = frame_of(s.timestamp_ms, meta.fps)?;
            if frame >= meta.frame_count as u64 {
                report.beyond_last_frame += 1;
                continue;
            }
            track.frames[frame as usize].push(rasterize(
                fx,
                fy,
                meta.frame_width_px,
                meta.frame_height_px,
            ));
            report.kept_points += 1;
        }
        out.observers.push(track);
    }
    Ok(out)
}

/// Rasterizes points into a binary map; duplicates collapse.
pub fn build_fixation_map(
    points: impl IntoIterator<Item = Pixel>,
    frame_index: u32,
    width: u32,
    height: u32,
) -> Result<FixationMap> {
    let mut map = FixationMap::empty(frame_index, width, height);
    for p in points {
        map.insert(p)?;
    }
    Ok(map)
}
