//! Model benchmarking, annotation-conditioned aggregates, center-bias
//! analysis and deterministic report emission.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotations::{Angle, ClipAnnotation, LabelKind, Motion, ShotSize};
use crate::error::{Error, Result};
use crate::ingest::CleanedFixations;
use crate::mapio::{frame_file_name, load_map, MapFormat};
use crate::metrics::{self, AucBorjiParams, Metric};
use crate::model::{FixationMap, Heatmap};
use crate::saliency::{blur_fixations, center_prior, resample_bilinear, Kernel};
use crate::scalar::Scalar;
use crate::SaliencyMap;

/// One metric value on one frame, with the editing labels of its shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub clip_id: String,
    pub frame_index: u32,
    pub metric: Metric,
    pub value: f64,
    /// `+`-joined motion labels, empty when unannotated.
    pub motions: String,
    pub angle: String,
    pub size: String,
}

impl ScoreRecord {
    pub fn labels(&self, kind: LabelKind) -> Vec<&str> {
        let raw = match kind {
            LabelKind::Motion => self.motions.as_str(),
            LabelKind::Angle => self.angle.as_str(),
            LabelKind::Size => self.size.as_str(),
        };
        raw.split('+').filter(|s| !s.is_empty()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameError {
    pub clip_id: String,
    pub frame_index: u32,
    pub message: String,
}

/// Long-form score records keyed by (clip, frame, metric).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    records: Vec<ScoreRecord>,
    pub errors: Vec<FrameError>,
    pub missing_frames: Vec<(String, u32)>,
}

impl ScoreTable {
    /// Builds a table, sorting by (clip, frame, metric) and rejecting
    /// duplicate keys.
    pub fn from_records(mut records: Vec<ScoreRecord>) -> Result<Self> {
        records.sort_by(|a, b| {
            (&a.clip_id, a.frame_index, a.metric).cmp(&(&b.clip_id, b.frame_index, b.metric))
        });
        if let Some(w) = records.windows(2).find(|w| {
            (&w[0].clip_id, w[0].frame_index, w[0].metric)
                == (&w[1].clip_id, w[1].frame_index, w[1].metric)
        }) {
            return Err(Error::input(format!(
                "duplicate score for clip {} frame {} metric {}",
                w[0].clip_id, w[0].frame_index, w[0].metric
            )));
        }
        Ok(ScoreTable {
            records,
            ..Default::default()
        })
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Joins several tables; keys must stay unique.
    pub fn merge(tables: Vec<ScoreTable>) -> Result<Self> {
        let mut records = Vec::new();
        let mut errors = Vec::new();
        let mut missing = Vec::new();
        for t in tables {
            records.extend(t.records);
            errors.extend(t.errors);
            missing.extend(t.missing_frames);
        }
        let mut out = ScoreTable::from_records(records)?;
        out.errors = errors;
        out.missing_frames = missing;
        Ok(out)
    }

    /// Unweighted mean over all frames, per metric.
    pub fn means(&self) -> BTreeMap<Metric, f64> {
        let mut acc: BTreeMap<Metric, (f64, usize)> = BTreeMap::new();
        for r in &self.records {
            let e = acc.entry(r.metric).or_default();
            e.0 += r.value;
            e.1 += 1;
        }
        acc.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect()
    }

    pub fn clip_means(&self) -> BTreeMap<String, BTreeMap<Metric, f64>> {
        let mut by_clip: BTreeMap<String, Vec<ScoreRecord>> = BTreeMap::new();
        for r in &self.records {
            by_clip.entry(r.clip_id.clone()).or_default().push(r.clone());
        }
        by_clip
            .into_iter()
            .map(|(c, recs)| {
                let t = ScoreTable {
                    records: recs,
                    ..Default::default()
                };
                (c, t.means())
            })
            .collect()
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let records = rdr.deserialize().collect::<std::result::Result<Vec<ScoreRecord>, _>>()?;
        ScoreTable::from_records(records)
    }
}

/// Supplies one predicted map per frame; `None` marks a missing frame.
pub trait PredictionSource: Sync {
    fn prediction(&self, clip_id: &str, frame: u32) -> Option<Result<SaliencyMap>>;
}

/// Per-frame map files named by zero-padded frame index in one directory.
#[derive(Debug, Clone)]
pub struct DirectorySource {
    pub dir: PathBuf,
}

impl PredictionSource for DirectorySource {
    fn prediction(&self, _clip_id: &str, frame: u32) -> Option<Result<SaliencyMap>> {
        [MapFormat::Raw, MapFormat::Pgm]
            .into_iter()
            .map(|f| self.dir.join(frame_file_name(frame, f)))
            .find(|p| p.exists())
            .map(|p| load_map(&p))
    }
}

/// The centered Gaussian baseline, identical on every frame.
#[derive(Debug, Clone)]
pub struct CenterPriorSource {
    map: SaliencyMap,
}

impl CenterPriorSource {
    pub fn new(width: u32, height: u32, sigma_fraction: f64) -> Result<Self> {
        Ok(CenterPriorSource {
            map: center_prior(width, height, sigma_fraction)?,
        })
    }
}

impl PredictionSource for CenterPriorSource {
    fn prediction(&self, _clip_id: &str, _frame: u32) -> Option<Result<SaliencyMap>> {
        Some(Ok(self.map.clone()))
    }
}

impl<F> PredictionSource for F
where
    F: Fn(&str, u32) -> Option<Result<SaliencyMap>> + Sync,
{
    fn prediction(&self, clip_id: &str, frame: u32) -> Option<Result<SaliencyMap>> {
        self(clip_id, frame)
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub kernel: Kernel<f64>,
    pub metrics: Vec<Metric>,
    pub aucb: AucBorjiParams,
    pub kld_epsilon: f64,
    /// Restricts evaluation to these frames when set.
    pub frames: Option<Vec<u32>>,
}

fn frame_labels(ann: Option<&ClipAnnotation>, frame: u32) -> (String, String, String) {
    match ann {
        Some(a) => (
            a.labels_at(frame, LabelKind::Motion).join("+"),
            a.labels_at(frame, LabelKind::Angle).join("+"),
            a.labels_at(frame, LabelKind::Size).join("+"),
        ),
        None => Default::default(),
    }
}

fn score_frame(
    truth_fix: &FixationMap,
    truth: &SaliencyMap,
    prediction: SaliencyMap,
    cfg: &BenchConfig,
) -> Vec<(Metric, Result<f64>)> {
    let prediction = match resample_bilinear(&prediction, truth.width(), truth.height()) {
        Ok(p) => p,
        Err(e) => {
            let msg = e.to_string();
            return cfg
                .metrics
                .iter()
                .map(|m| (*m, Err(Error::input(msg.clone()))))
                .collect();
        }
    };
    cfg.metrics
        .iter()
        .map(|&m| {
            let v = match m {
                Metric::Kld => metrics::kld_with_epsilon(&prediction, truth, cfg.kld_epsilon),
                _ => metrics::evaluate(m, &prediction, truth, truth_fix, cfg.aucb),
            };
            (m, v)
        })
        .collect()
}

/// Scores a prediction source against one clip's ground truth.
///
/// Frames without fixations have no ground truth and are not scored. A
/// missing prediction is recorded in `missing_frames`; unreadable maps and
/// undefined metric values become error entries and the run continues.
pub fn benchmark_model(
    fix: &CleanedFixations,
    ann: Option<&ClipAnnotation>,
    source: &dyn PredictionSource,
    cfg: &BenchConfig,
) -> Result<ScoreTable> {
    let frames: Vec<u32> = match &cfg.frames {
        Some(f) => f.iter().copied().filter(|f| *f < fix.frame_count).collect(),
        None => (0..fix.frame_count).collect(),
    };
    enum Outcome {
        Scored(Vec<ScoreRecord>, Vec<FrameError>),
        Missing,
        Skipped,
    }
    let outcomes: Vec<(u32, Outcome)> = frames
        .par_iter()
        .map(|&f| {
            let fmap = match fix.frame_map(f) {
                Ok(m) => m,
                Err(e) => {
                    let err = FrameError {
                        clip_id: fix.clip_id.clone(),
                        frame_index: f,
                        message: e.to_string(),
                    };
                    return (f, Outcome::Scored(Vec::new(), vec![err]));
                }
            };
            if fmap.is_empty() {
                return (f, Outcome::Skipped);
            }
            let pred = match source.prediction(&fix.clip_id, f) {
                None => return (f, Outcome::Missing),
                Some(Err(e)) => {
                    let err = FrameError {
                        clip_id: fix.clip_id.clone(),
                        frame_index: f,
                        message: e.to_string(),
                    };
                    return (f, Outcome::Scored(Vec::new(), vec![err]));
                }
                Some(Ok(p)) => p,
            };
            let truth = blur_fixations(&fmap, &cfg.kernel);
            let (motions, angle, size) = frame_labels(ann, f);
            let mut recs = Vec::new();
            let mut errs = Vec::new();
            for (m, v) in score_frame(&fmap, &truth, pred, cfg) {
                match v {
                    Ok(value) => recs.push(ScoreRecord {
                        clip_id: fix.clip_id.clone(),
                        frame_index: f,
                        metric: m,
                        value,
                        motions: motions.clone(),
                        angle: angle.clone(),
                        size: size.clone(),
                    }),
                    Err(e) => errs.push(FrameError {
                        clip_id: fix.clip_id.clone(),
                        frame_index: f,
                        message: format!("{m}: {e}"),
                    }),
                }
            }
            (f, Outcome::Scored(recs, errs))
        })
        .collect();

    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut missing = Vec::new();
    for (f, o) in outcomes {
        match o {
            Outcome::Scored(r, e) => {
                records.extend(r);
                errors.extend(e);
            }
            Outcome::Missing => missing.push((fix.clip_id.clone(), f)),
            Outcome::Skipped => {}
        }
    }
    let mut table = ScoreTable::from_records(records)?;
    table.errors = errors;
    table.missing_frames = missing;
    Ok(table)
}

/// Per-label metric means for one partition kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub kind: LabelKind,
    pub metrics: Vec<Metric>,
    /// Every label of the kind's vocabulary in scale order; `None` marks
    /// an empty bucket.
    pub rows: Vec<AggregateRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub label: String,
    pub frames: usize,
    pub means: Vec<Option<f64>>,
}

pub fn vocabulary(kind: LabelKind) -> Vec<&'static str> {
    match kind {
        LabelKind::Motion => Motion::ALL.iter().map(|m| m.token()).collect(),
        LabelKind::Angle => Angle::ALL.iter().map(|m| m.token()).collect(),
        LabelKind::Size => ShotSize::ALL.iter().map(|m| m.token()).collect(),
    }
}

/// Mean of each metric per label; multi-label motion frames count toward
/// each of their labels.
pub fn aggregate_by_annotation(scores: &ScoreTable, kind: LabelKind) -> Aggregate {
    let metrics: Vec<Metric> = {
        let mut m: Vec<Metric> = scores.records.iter().map(|r| r.metric).collect();
        m.sort();
        m.dedup();
        m
    };
    let mut acc: BTreeMap<(&str, Metric), (f64, usize)> = BTreeMap::new();
    let mut frames: BTreeMap<&str, std::collections::BTreeSet<(&str, u32)>> = BTreeMap::new();
    for r in &scores.records {
        for l in r.labels(kind) {
            let e = acc.entry((l, r.metric)).or_default();
            e.0 += r.value;
            e.1 += 1;
            frames
                .entry(l)
                .or_default()
                .insert((r.clip_id.as_str(), r.frame_index));
        }
    }
    let rows = vocabulary(kind)
        .into_iter()
        .map(|label| AggregateRow {
            label: label.to_string(),
            frames: frames.get(label).map_or(0, |s| s.len()),
            means: metrics
                .iter()
                .map(|m| acc.get(&(label, *m)).map(|(s, n)| s / *n as f64))
                .collect(),
        })
        .collect();
    Aggregate {
        kind,
        metrics,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasReport {
    pub cc_with_prior: f64,
    /// Argmax of the average map minus the central pixel `(w / 2, h / 2)`;
    /// negative `y` is above the center.
    pub peak_offset_x: f64,
    pub peak_offset_y: f64,
}

pub fn bias_report<T: Scalar>(avg: &Heatmap<T>, prior: &Heatmap<T>) -> Result<BiasReport> {
    let cc = metrics::cc(avg, prior)?;
    let peak = avg.argmax();
    Ok(BiasReport {
        cc_with_prior: cc,
        peak_offset_x: peak.x as f64 - (avg.width() / 2) as f64,
        peak_offset_y: peak.y as f64 - (avg.height() / 2) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    DelimitedText,
    StructuredText,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => ReportFormat::StructuredText,
            _ => ReportFormat::DelimitedText,
        }
    }
}

/// A rectangular table with a metadata header.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn fmt_value(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_value).unwrap_or_default()
}

impl Report {
    pub fn new(header: Vec<(String, String)>, columns: &[&str]) -> Self {
        Report {
            header,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn from_scores(header: Vec<(String, String)>, table: &ScoreTable) -> Self {
        let mut r = Report::new(
            header,
            &["clip_id", "frame_index", "metric", "value", "motions", "angle", "size"],
        );
        for s in table.records() {
            r.push(vec![
                s.clip_id.clone(),
                s.frame_index.to_string(),
                s.metric.to_string(),
                s.value.to_string(),
                s.motions.clone(),
                s.angle.clone(),
                s.size.clone(),
            ]);
        }
        r
    }

    /// Dataset means: one row per clip plus an `ALL` row.
    pub fn from_means(header: Vec<(String, String)>, table: &ScoreTable) -> Self {
        let metrics: Vec<Metric> = table.means().keys().copied().collect();
        let mut cols = vec!["clip_id".to_string()];
        cols.extend(metrics.iter().map(|m| m.to_string()));
        let mut r = Report {
            header,
            columns: cols,
            rows: Vec::new(),
        };
        for (clip, means) in table.clip_means() {
            let mut row = vec![clip];
            row.extend(metrics.iter().map(|m| fmt_opt(means.get(m).copied())));
            r.push(row);
        }
        let all = table.means();
        let mut row = vec!["ALL".to_string()];
        row.extend(metrics.iter().map(|m| fmt_opt(all.get(m).copied())));
        r.push(row);
        r
    }

    pub fn from_aggregate(header: Vec<(String, String)>, agg: &Aggregate) -> Self {
        let mut cols = vec![agg.kind.to_string(), "frames".to_string()];
        cols.extend(agg.metrics.iter().map(|m| m.to_string()));
        let mut r = Report {
            header,
            columns: cols,
            rows: Vec::new(),
        };
        for row in &agg.rows {
            let mut out = vec![row.label.clone(), row.frames.to_string()];
            out.extend(row.means.iter().map(|v| fmt_opt(*v)));
            r.push(out);
        }
        r
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::input("refusing to emit an empty report"));
        }
        match format {
            ReportFormat::DelimitedText => {
                let mut text = String::new();
                for (k, v) in &self.header {
                    text.push_str(&format!("# {k}={v}\n"));
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row)?;
                }
                let body = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
                text.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
                Ok(text)
            }
            ReportFormat::StructuredText => {
                let mut doc = toml::Table::new();
                let mut meta = toml::Table::new();
                for (k, v) in &self.header {
                    meta.insert(k.clone(), toml::Value::String(v.clone()));
                }
                doc.insert("meta".into(), toml::Value::Table(meta));
                let rows = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut t = toml::Table::new();
                        for (c, v) in self.columns.iter().zip(row) {
                            t.insert(c.clone(), toml::Value::String(v.clone()));
                        }
                        toml::Value::Table(t)
                    })
                    .collect();
                doc.insert("row".into(), toml::Value::Array(rows));
                Ok(toml::to_string(&doc).expect("report serializes"))
            }
        }
    }
}

/// Renders and writes a report; the format follows the file extension
/// unless given.
pub fn emit_report(report: &Report, path: &Path, format: Option<ReportFormat>) -> Result<()> {
    let text = report.render(format.unwrap_or_else(|| ReportFormat::from_path(path)))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
