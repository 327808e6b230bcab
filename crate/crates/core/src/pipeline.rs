//! Dataset-level runs: manifest loading, per-clip analyses and the full
//! report set.
//!
//! A dataset manifest is a TOML file listing clips and, optionally, model
//! prediction directories. Paths are relative to the manifest.
//!
//! ```toml
//! [[clip]]
//! clip_id = "shining"
//! frame_count = 2400
//! fps = "24"
//! frame_width_px = 1920
//! frame_height_px = 800
//! display_width_px = 1920
//! display_height_px = 1200
//! fixations = "fixations/shining.csv"
//! annotations = "annotations/shining.toml"
//!
//! [[model]]
//! name = "aclnet"
//! dir = "predictions/aclnet"   # one subdirectory per clip id
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotations::{cuts_of, parse_annotations, shot_stats, ClipAnnotation, LabelKind, ShotStats};
use crate::bench::{
    aggregate_by_annotation, benchmark_model, bias_report, emit_report, BenchConfig, BiasReport,
    CenterPriorSource, DirectorySource, PredictionSource, Report, ScoreTable,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ingest::CleanedFixations;
use crate::ioc::{cut_drop_analysis, hull_area_series, loo_window_ioc, CutDrop, IocConfig, IocSeries};
use crate::mapio::save_map;
use crate::metrics::Metric;
use crate::model::{ClipMeta, Heatmap};
use crate::saliency::{blur_grid, center_prior, make_kernel, resample_bilinear, AverageAccumulator, Kernel};
use crate::stats::{one_way_anova_named, pearson, welch_t_test, AnovaResult, Correlation, TTest};
use crate::SaliencyMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEntry {
    #[serde(flatten)]
    pub meta: ClipMeta,
    pub fixations: PathBuf,
    #[serde(default)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(default, rename = "clip")]
    pub clips: Vec<ClipEntry>,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelEntry>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl Dataset {
    pub fn from_toml(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut ds: Dataset =
            toml::from_str(text).map_err(|e| Error::format(format!("dataset manifest: {e}")))?;
        ds.root = root.into();
        let mut seen = std::collections::BTreeSet::new();
        for c in &ds.clips {
            c.meta.validate()?;
            if !seen.insert(c.meta.clip_id.as_str()) {
                return Err(Error::validation(format!("clip {} listed twice", c.meta.clip_id)));
            }
        }
        Ok(ds)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Dataset::from_toml(&text, root)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}

/// A clip with its fixations and annotation read into memory.
#[derive(Debug, Clone)]
pub struct LoadedClip {
    pub meta: ClipMeta,
    pub fixations: CleanedFixations,
    pub annotation: Option<ClipAnnotation>,
}

pub fn read_fixations(path: &Path, meta: &ClipMeta) -> Result<CleanedFixations> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    CleanedFixations::read_csv(BufReader::new(f), meta)
}

pub fn read_annotation(path: &Path) -> Result<ClipAnnotation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text)
}

pub fn load_clip(ds: &Dataset, entry: &ClipEntry) -> Result<LoadedClip> {
    let fixations = read_fixations(&ds.resolve(&entry.fixations), &entry.meta)?;
    let annotation = match &entry.annotations {
        Some(p) => {
            let a = read_annotation(&ds.resolve(p))?;
            if a.clip_id != entry.meta.clip_id || a.frame_count != entry.meta.frame_count {
                return Err(Error::validation(format!(
                    "annotation {} ({} frames) does not match clip {} ({} frames)",
                    a.clip_id, a.frame_count, entry.meta.clip_id, entry.meta.frame_count
                )));
            }
            Some(a)
        }
        None => None,
    };
    Ok(LoadedClip {
        meta: entry.meta.clone(),
        fixations,
        annotation,
    })
}

pub fn load_clips(ds: &Dataset) -> Result<Vec<LoadedClip>> {
    ds.clips.par_iter().map(|c| load_clip(ds, c)).collect()
}

/// Sliding-window IOC for every clip, in input order.
pub fn ioc_all(clips: &[LoadedClip], cfg: &IocConfig) -> Result<Vec<IocSeries>> {
    clips.par_iter().map(|c| loo_window_ioc(&c.fixations, cfg)).collect()
}

/// Labels of a window when it lies inside a single shot; windows spanning
/// a cut have no label.
pub fn window_labels(ann: &ClipAnnotation, start: u32, n: usize, kind: LabelKind) -> Option<Vec<String>> {
    let shot = ann.shot_at(start)?;
    if start as u64 + n as u64 > shot.end as u64 {
        return None;
    }
    Some(ann.labels_at(start, kind))
}

/// Present window scores grouped by the label of the shot that contains
/// the window.
pub fn ioc_groups<'a>(
    pairs: impl IntoIterator<Item = (&'a IocSeries, &'a ClipAnnotation)>,
    kind: LabelKind,
) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (series, ann) in pairs {
        for (t, v) in &series.values {
            let Some(v) = v else { continue };
            if let Some(labels) = window_labels(ann, *t, series.window, kind) {
                for l in labels {
                    out.entry(l).or_default().push(*v);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelTests {
    pub kind: LabelKind,
    /// `None` when fewer than two labels have two or more windows.
    pub anova: Option<AnovaResult>,
    pub pairwise: Vec<PairwiseTest>,
}

/// One-way ANOVA over the labels of one kind plus Welch tests for every
/// label pair. Labels with fewer than two windows are left out; pairs whose
/// variances are both zero are skipped.
pub fn label_tests(kind: LabelKind, groups: &BTreeMap<String, Vec<f64>>) -> Result<LabelTests> {
    let usable: Vec<(&String, &Vec<f64>)> = groups.iter().filter(|(_, v)| v.len() >= 2).collect();
    let anova = if usable.len() >= 2 {
        let names = usable.iter().map(|(k, _)| (*k).clone()).collect();
        let data: Vec<&[f64]> = usable.iter().map(|(_, v)| v.as_slice()).collect();
        match one_way_anova_named(names, &data) {
            Ok(a) => Some(a),
            Err(Error::Undefined(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let mut pairwise = Vec::new();
    for (i, (a, va)) in usable.iter().enumerate() {
        for (b, vb) in &usable[i + 1..] {
            match welch_t_test(va, vb) {
                Ok(test) => pairwise.push(PairwiseTest {
                    a: (*a).clone(),
                    b: (*b).clone(),
                    n_a: va.len(),
                    n_b: vb.len(),
                    test,
                }),
                Err(Error::Undefined(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(LabelTests {
        kind,
        anova,
        pairwise,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotLengthPoint {
    pub clip_id: String,
    pub mean_ioc: f64,
    pub average_shot_s: f64,
    pub excluded: bool,
}

/// Pairs each clip's mean IOC with its average shot length and correlates
/// the pairs not excluded.
pub fn ioc_vs_shot_length(
    clip_means: &BTreeMap<String, f64>,
    stats: &[ShotStats],
    exclude: &[String],
) -> Result<(Vec<ShotLengthPoint>, Correlation)> {
    let points: Vec<ShotLengthPoint> = stats
        .iter()
        .filter_map(|s| {
            clip_means.get(&s.clip_id).map(|m| ShotLengthPoint {
                clip_id: s.clip_id.clone(),
                mean_ioc: *m,
                average_shot_s: s.average_s,
                excluded: exclude.contains(&s.clip_id),
            })
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| !p.excluded)
        .map(|p| (p.average_shot_s, p.mean_ioc))
        .unzip();
    let r = pearson(&x, &y)?;
    Ok((points, r))
}

/// Mean blurred fixation map over the selected frames of every clip,
/// resampled to a `width` x `height` grid.
///
/// Each clip's selected binary maps are summed into a count grid and
/// blurred once; blurring and resampling are linear, so this equals
/// averaging the per-frame blurred maps.
pub fn dataset_average_map<F>(
    clips: &[LoadedClip],
    kernel: &Kernel<f64>,
    (width, height): (u32, u32),
    select: F,
) -> Result<(SaliencyMap, usize)>
where
    F: Fn(&LoadedClip, u32) -> bool + Sync,
{
    let parts: Vec<Option<(SaliencyMap, usize)>> = clips
        .par_iter()
        .map(|c| -> Result<Option<(SaliencyMap, usize)>> {
            let fix = &c.fixations;
            let (w, h) = (fix.width as usize, fix.height as usize);
            let mut counts = vec![0.0f64; w * h];
            let mut frames = 0usize;
            for f in 0..fix.frame_count {
                if !select(c, f) {
                    continue;
                }
                frames += 1;
                for p in fix.frame_map(f)?.points() {
                    counts[p.y as usize * w + p.x as usize] += 1.0;
                }
            }
            if frames == 0 {
                return Ok(None);
            }
            let grid = Heatmap::from_vec(fix.width, fix.height, counts)?;
            let blurred = resample_bilinear(&blur_grid(&grid, kernel), width, height)?;
            Ok(Some((blurred, frames)))
        })
        .collect::<Result<_>>()?;
    let mut acc = AverageAccumulator::new(width, height);
    let mut total = 0usize;
    for (map, frames) in parts.into_iter().flatten() {
        acc.add(&map)?;
        total += frames;
    }
    if total == 0 {
        return Err(Error::input("no frames left to average"));
    }
    // the accumulator divides by the clip count; rescale to a per-frame mean
    let clips_added = acc.count() as f64;
    let sum_mean: SaliencyMap = acc.finish()?;
    let scale = clips_added / total as f64;
    let avg = Heatmap::from_vec(
        width,
        height,
        sum_mean.into_values().into_iter().map(|v| v * scale).collect(),
    )?;
    Ok((avg, total))
}

/// Frames eligible for the average map: past the lead-in and not selected
/// out by a label filter.
pub fn skip_lead_in(skip_first: usize) -> impl Fn(&LoadedClip, u32) -> bool + Sync {
    move |_, f| f as usize >= skip_first
}

/// Label keys used for per-label average maps. Directed pans and dollies
/// also get a `Motion-Direction` key.
pub fn bias_keys(ann: &ClipAnnotation, frame: u32, kind: LabelKind) -> Vec<String> {
    let mut keys = ann.labels_at(frame, kind);
    if kind == LabelKind::Motion {
        if let Some(shot) = ann.shot_at(frame) {
            if let Some(d) = shot.direction {
                if d != crate::annotations::Direction::None {
                    for m in &shot.motions {
                        if matches!(m, crate::annotations::Motion::Pan | crate::annotations::Motion::Dolly) {
                            keys.push(format!("{}-{}", m.token(), d.token()));
                        }
                    }
                }
            }
        }
    }
    keys
}

/// Output of a complete pipeline run.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub ioc_clip_means: BTreeMap<String, f64>,
    pub ioc_dataset_mean: Option<f64>,
    pub correlation: Option<Correlation>,
    pub anova: Vec<LabelTests>,
    pub cut_drops: BTreeMap<String, Vec<CutDrop>>,
    pub bias: Option<BiasReport>,
    pub model_means: BTreeMap<String, BTreeMap<Metric, f64>>,
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Prediction source reading `<dir>/<clip_id>/<frame>.{f32,pgm}`.
struct ModelSource {
    dir: PathBuf,
}

impl PredictionSource for ModelSource {
    fn prediction(&self, clip_id: &str, frame: u32) -> Option<Result<SaliencyMap>> {
        DirectorySource {
            dir: self.dir.join(clip_id),
        }
        .prediction(clip_id, frame)
    }
}

pub fn bench_config(cfg: &RunConfig) -> Result<BenchConfig> {
    Ok(BenchConfig {
        kernel: make_kernel(cfg.sigma_px, cfg.truncation)?,
        metrics: Metric::ALL.to_vec(),
        aucb: cfg.aucb(),
        kld_epsilon: cfg.kld_epsilon,
        frames: None,
    })
}

/// Scores one model over every clip.
pub fn benchmark_clips(
    clips: &[LoadedClip],
    cfg: &BenchConfig,
    source_for: &(dyn Fn(&LoadedClip) -> Result<Box<dyn PredictionSource>> + Sync),
) -> Result<ScoreTable> {
    let tables = clips
        .iter()
        .map(|c| {
            let src = source_for(c)?;
            benchmark_model(&c.fixations, c.annotation.as_ref(), src.as_ref(), cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreTable::merge(tables)
}

/// Runs every analysis over the dataset and writes the report set into
/// `out_dir`. Output is a pure function of the inputs and the config.
pub fn run_full(ds: &Dataset, cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let clips = load_clips(ds)?;
    if clips.is_empty() {
        return Err(Error::input("dataset lists no clips"));
    }
    let header = cfg.header();
    let mut summary = RunSummary::default();
    let mut files: Vec<PathBuf> = Vec::new();
    let write = |files: &mut Vec<PathBuf>, name: &str, report: Report| -> Result<()> {
        let path = out_dir.join(name);
        emit_report(&report, &path, None)?;
        files.push(path);
        Ok(())
    };

    // congruency over the shot-level window
    let series = ioc_all(&clips, &cfg.ioc(cfg.window))?;
    let mut r = Report::new(header.clone(), &["clip_id", "window_start", "n", "score"]);
    for s in &series {
        for (t, v) in &s.values {
            r.push(vec![
                s.clip_id.clone(),
                t.to_string(),
                s.window.to_string(),
                v.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }
    write(&mut files, &format!("ioc_n{}.csv", cfg.window), r)?;

    let mut r = Report::new(header.clone(), &["clip_id", "mean", "median", "std", "windows"]);
    let mut pooled = Vec::new();
    let mut clip_means = BTreeMap::new();
    for s in &series {
        let present = s.present();
        pooled.extend_from_slice(&present);
        match crate::stats::summarize(&present) {
            Ok(sm) => {
                clip_means.insert(s.clip_id.clone(), sm.mean);
                r.push(vec![s.clip_id.clone(), fmt(sm.mean), fmt(sm.median), fmt(sm.std), sm.count.to_string()]);
            }
            Err(_) => r.push(vec![s.clip_id.clone(), String::new(), String::new(), String::new(), "0".into()]),
        }
    }
    if let Ok(sm) = crate::stats::summarize(&pooled) {
        summary.ioc_dataset_mean = Some(sm.mean);
        r.push(vec!["ALL".into(), fmt(sm.mean), fmt(sm.median), fmt(sm.std), sm.count.to_string()]);
    }
    write(&mut files, "ioc_summary.csv", r)?;
    summary.ioc_clip_means = clip_means.clone();

    let mut r = Report::new(header.clone(), &["clip_id", "frame_index", "hull_area_px2"]);
    let hulls: Vec<Vec<f64>> = clips.par_iter().map(|c| hull_area_series(&c.fixations)).collect();
    for (c, areas) in clips.iter().zip(&hulls) {
        for (f, a) in areas.iter().enumerate() {
            r.push(vec![c.meta.clip_id.clone(), f.to_string(), a.to_string()]);
        }
    }
    write(&mut files, "hull_area.csv", r)?;

    // editing structure
    let annotated: Vec<(&LoadedClip, &IocSeries, &ClipAnnotation)> = clips
        .iter()
        .zip(&series)
        .filter_map(|(c, s)| c.annotation.as_ref().map(|a| (c, s, a)))
        .collect();
    if !annotated.is_empty() {
        let stats: Vec<ShotStats> = annotated.iter().map(|(c, _, a)| shot_stats(a, c.meta.fps)).collect();
        let mut r = Report::new(
            header.clone(),
            &["clip_id", "shots", "sequence_length_s", "longest_s", "shortest_s", "average_s"],
        );
        for s in &stats {
            r.push(vec![
                s.clip_id.clone(),
                s.shot_count.to_string(),
                fmt(s.sequence_length_s),
                fmt(s.longest_s),
                fmt(s.shortest_s),
                fmt(s.average_s),
            ]);
        }
        write(&mut files, "shot_stats.csv", r)?;

        if let Ok((points, corr)) = ioc_vs_shot_length(&clip_means, &stats, &cfg.correlation_exclude) {
            let mut r = Report::new(header.clone(), &["clip_id", "average_shot_s", "mean_ioc", "excluded"]);
            for p in &points {
                r.push(vec![p.clip_id.clone(), fmt(p.average_shot_s), fmt(p.mean_ioc), p.excluded.to_string()]);
            }
            write(&mut files, "ioc_vs_shot_length.csv", r)?;
            let mut r = Report::new(header.clone(), &["r", "p", "n"]);
            r.push(vec![fmt(corr.r), fmt(corr.p), corr.n.to_string()]);
            write(&mut files, "correlation.csv", r)?;
            summary.correlation = Some(corr);
        }

        let mut anova = Report::new(
            header.clone(),
            &["kind", "f", "df_between", "df_within", "p", "groups"],
        );
        let mut pairs = Report::new(header.clone(), &["kind", "a", "b", "n_a", "n_b", "t", "df", "p"]);
        for kind in [LabelKind::Motion, LabelKind::Angle, LabelKind::Size] {
            let groups = ioc_groups(annotated.iter().map(|(_, s, a)| (*s, *a)), kind);
            let tests = label_tests(kind, &groups)?;
            match &tests.anova {
                Some(a) => anova.push(vec![
                    kind.to_string(),
                    fmt(a.f),
                    a.df_between.to_string(),
                    a.df_within.to_string(),
                    format!("{:e}", a.p),
                    a.group_names
                        .iter()
                        .zip(&a.group_sizes)
                        .map(|(g, n)| format!("{g}:{n}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                ]),
                None => anova.push(vec![kind.to_string(), String::new(), String::new(), String::new(), String::new(), String::new()]),
            }
            for p in &tests.pairwise {
                pairs.push(vec![
                    kind.to_string(),
                    p.a.clone(),
                    p.b.clone(),
                    p.n_a.to_string(),
                    p.n_b.to_string(),
                    fmt(p.test.t),
                    fmt(p.test.df),
                    format!("{:e}", p.test.p),
                ]);
            }
            summary.anova.push(tests);
        }
        write(&mut files, "anova.csv", anova)?;
        if !pairs.rows.is_empty() {
            write(&mut files, "pairwise_welch.csv", pairs)?;
        }

        // behaviour around cuts on the short window
        let short: Vec<IocSeries> = annotated
            .par_iter()
            .map(|(c, _, _)| loo_window_ioc(&c.fixations, &cfg.ioc(cfg.cut_window)))
            .collect::<Result<_>>()?;
        let mut r = Report::new(header.clone(), &["clip_id", "window_start", "n", "score"]);
        let mut drops = Report::new(
            header.clone(),
            &["clip_id", "cut", "pre_mean", "post_mean", "drop", "overlaps"],
        );
        for ((c, _, a), s) in annotated.iter().zip(&short) {
            for (t, v) in &s.values {
                r.push(vec![
                    s.clip_id.clone(),
                    t.to_string(),
                    s.window.to_string(),
                    v.map(|v| v.to_string()).unwrap_or_default(),
                ]);
            }
            let cd = cut_drop_analysis(s, &cuts_of(a), cfg.cut_pre_frames, cfg.cut_post_frames);
            for d in &cd {
                drops.push(vec![
                    c.meta.clip_id.clone(),
                    d.cut.to_string(),
                    fmt_opt(d.pre_mean),
                    fmt_opt(d.post_mean),
                    fmt_opt(d.drop),
                    d.overlaps.to_string(),
                ]);
            }
            summary.cut_drops.insert(c.meta.clip_id.clone(), cd);
        }
        write(&mut files, &format!("ioc_n{}.csv", cfg.cut_window), r)?;
        if !drops.rows.is_empty() {
            write(&mut files, "cut_drop.csv", drops)?;
        }
    }

    // center bias
    let kernel = make_kernel::<f64>(cfg.sigma_px, cfg.truncation)?;
    let grid = (cfg.reference_width, cfg.reference_height);
    let prior: SaliencyMap = center_prior(grid.0, grid.1, cfg.prior_sigma_fraction)?;
    let mut bias = Report::new(
        header.clone(),
        &["subset", "frames", "cc_with_prior", "peak_offset_x", "peak_offset_y"],
    );
    if let Ok((avg, frames)) = dataset_average_map(&clips, &kernel, grid, skip_lead_in(cfg.skip_first)) {
        let path = out_dir.join("average_map.f32");
        save_map(&avg, &path)?;
        files.push(path);
        if let Ok(b) = bias_report(&avg, &prior) {
            bias.push(vec![
                "ALL".into(),
                frames.to_string(),
                fmt(b.cc_with_prior),
                b.peak_offset_x.to_string(),
                b.peak_offset_y.to_string(),
            ]);
            summary.bias = Some(b);
        }
    }
    for kind in [LabelKind::Motion, LabelKind::Angle, LabelKind::Size] {
        let mut keys = std::collections::BTreeSet::new();
        for c in &clips {
            if let Some(a) = &c.annotation {
                for f in 0..a.frame_count {
                    keys.extend(bias_keys(a, f, kind));
                }
            }
        }
        for key in keys {
            let select = |c: &LoadedClip, f: u32| {
                f as usize >= cfg.skip_first
                    && c.annotation
                        .as_ref()
                        .is_some_and(|a| bias_keys(a, f, kind).contains(&key))
            };
            let Ok((avg, frames)) = dataset_average_map(&clips, &kernel, grid, select) else {
                continue;
            };
            if let Ok(b) = bias_report(&avg, &prior) {
                bias.push(vec![
                    format!("{kind}:{key}"),
                    frames.to_string(),
                    fmt(b.cc_with_prior),
                    b.peak_offset_x.to_string(),
                    b.peak_offset_y.to_string(),
                ]);
            }
        }
    }
    if !bias.rows.is_empty() {
        write(&mut files, "bias.csv", bias)?;
    }

    // model benchmarks; the center prior always runs as a baseline
    let bcfg = bench_config(cfg)?;
    let mut models: Vec<(String, Box<dyn Fn(&LoadedClip) -> Result<Box<dyn PredictionSource>> + Sync>)> =
        Vec::new();
    let frac = cfg.prior_sigma_fraction;
    models.push((
        "center_prior".into(),
        Box::new(move |c: &LoadedClip| {
            Ok(Box::new(CenterPriorSource::new(c.fixations.width, c.fixations.height, frac)?)
                as Box<dyn PredictionSource>)
        }),
    ));
    for m in &ds.models {
        let dir = ds.resolve(&m.dir);
        models.push((
            m.name.clone(),
            Box::new(move |_: &LoadedClip| Ok(Box::new(ModelSource { dir: dir.clone() }) as Box<dyn PredictionSource>)),
        ));
    }
    for (name, source_for) in &models {
        let table = benchmark_clips(&clips, &bcfg, source_for.as_ref())?;
        if table.is_empty() {
            continue;
        }
        write(&mut files, &format!("scores_{name}.csv"), Report::from_scores(header.clone(), &table))?;
        write(&mut files, &format!("means_{name}.csv"), Report::from_means(header.clone(), &table))?;
        if clips.iter().any(|c| c.annotation.is_some()) {
            for kind in [LabelKind::Motion, LabelKind::Angle, LabelKind::Size] {
                let agg = aggregate_by_annotation(&table, kind);
                write(&mut files, &format!("aggregate_{name}_{kind}.csv"), Report::from_aggregate(header.clone(), &agg))?;
            }
        }
        if !table.errors.is_empty() || !table.missing_frames.is_empty() {
            let mut r = Report::new(header.clone(), &["clip_id", "frame_index", "problem"]);
            for e in &table.errors {
                r.push(vec![e.clip_id.clone(), e.frame_index.to_string(), e.message.clone()]);
            }
            for (c, f) in &table.missing_frames {
                r.push(vec![c.clone(), f.to_string(), "missing prediction".into()]);
            }
            write(&mut files, &format!("problems_{name}.csv"), r)?;
        }
        summary.model_means.insert(name.clone(), table.means());
    }
    summary.files = files;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::parse_annotations;
    use crate::ingest::ObserverTrack;
    use crate::model::Pixel;

    fn ann(frames: u32) -> ClipAnnotation {
        parse_annotations(&format!(
            r#"schema_version = 1
clip_id = "c"
frame_count = {frames}
frame_width = 40
frame_height = 30

[[shot]]
start = 0
end = 10
motions = ["Pan"]
direction = "Left"
angle = "Eye"
size = "CU"

[[shot]]
start = 10
end = {frames}
motions = ["Static"]
angle = "High"
size = "LS"
"#
        ))
        .unwrap()
    }

    #[test]
    fn windows_spanning_cuts_are_unlabeled() {
        let a = ann(30);
        assert_eq!(window_labels(&a, 0, 5, LabelKind::Size), Some(vec!["CU".to_string()]));
        assert_eq!(window_labels(&a, 5, 5, LabelKind::Size), Some(vec!["CU".to_string()]));
        assert_eq!(window_labels(&a, 6, 5, LabelKind::Size), None);
        assert_eq!(window_labels(&a, 10, 20, LabelKind::Angle), Some(vec!["High".to_string()]));
        assert_eq!(window_labels(&a, 11, 20, LabelKind::Angle), None);
    }

    #[test]
    fn groups_and_tests() {
        let a = ann(30);
        let series = IocSeries {
            clip_id: "c".into(),
            window: 5,
            stride: 1,
            values: (0..26).map(|t| (t, Some(if t < 10 { 1.0 + t as f64 * 0.1 } else { 3.0 + t as f64 * 0.01 }))).collect(),
        };
        let groups = ioc_groups([(&series, &a)], LabelKind::Size);
        assert_eq!(groups["CU"].len(), 6);
        assert_eq!(groups["LS"].len(), 16);
        let t = label_tests(LabelKind::Size, &groups).unwrap();
        assert!(t.anova.unwrap().p < 1e-6);
        assert_eq!(t.pairwise.len(), 1);
    }

    #[test]
    fn direction_keys() {
        let a = ann(30);
        assert_eq!(bias_keys(&a, 3, LabelKind::Motion), vec!["Pan", "Pan-Left"]);
        assert_eq!(bias_keys(&a, 12, LabelKind::Motion), vec!["Static"]);
    }

    #[test]
    fn count_map_average_matches_frame_average() {
        let mut fix = CleanedFixations {
            clip_id: "c".into(),
            frame_count: 4,
            width: 24,
            height: 16,
            observers: vec![ObserverTrack::empty("a", 4), ObserverTrack::empty("b", 4)],
        };
        fix.observers[0].frames[1].push(Pixel::new(3, 4));
        fix.observers[1].frames[1].push(Pixel::new(3, 4));
        fix.observers[0].frames[2].push(Pixel::new(20, 10));
        fix.observers[1].frames[3].push(Pixel::new(12, 8));
        let meta = ClipMeta::letterboxed("c", 4, (24, 16), (24, 16)).unwrap();
        let clip = LoadedClip {
            meta,
            fixations: fix.clone(),
            annotation: None,
        };
        let kernel = make_kernel::<f64>(2.0, 3.0).unwrap();
        let (avg, frames) = dataset_average_map(&[clip.clone(), clip], &kernel, (12, 8), skip_lead_in(1)).unwrap();
        assert_eq!(frames, 6);
        let per_frame: Vec<SaliencyMap> = (0..4)
            .map(|f| {
                let b = crate::saliency::blur_fixations(&fix.frame_map(f).unwrap(), &kernel);
                resample_bilinear(&b, 12, 8).unwrap()
            })
            .collect();
        let want = crate::saliency::average_map(&[per_frame.clone(), per_frame], 1).unwrap();
        for (a, b) in avg.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let text = r#"
[[clip]]
clip_id = "a"
frame_count = 10
fps = "24000/1001"
frame_width_px = 64
frame_height_px = 32
display_width_px = 64
display_height_px = 40
fixations = "fix/a.csv"
annotations = "ann/a.toml"

[[model]]
name = "m"
dir = "pred/m"
"#;
        let ds = Dataset::from_toml(text, "/data").unwrap();
        assert_eq!(ds.clips[0].meta.fps.to_string(), "24000/1001");
        assert_eq!(ds.resolve(&ds.clips[0].fixations), PathBuf::from("/data/fix/a.csv"));
        let again = Dataset::from_toml(&ds.to_toml(), "/data").unwrap();
        assert_eq!(again, ds);
        let dup = format!("{}\n{}", text, &text[..text.find("[[model]]").unwrap()]);
        assert!(Dataset::from_toml(&dup, "/").is_err());
    }
}
