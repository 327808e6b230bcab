//! Small synthetic datasets written to disk in the manifest layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cinegaze::annotations::{Angle, ClipAnnotation, Direction, Motion, Shot, ShotSize};
use cinegaze::ingest::CleanedFixations;
use cinegaze::mapio::{frame_file_name, save_map, MapFormat};
use cinegaze::model::{ClipMeta, Heatmap};
use cinegaze::{Error, Result};

use crate::scanpath::{generate_scanpaths, ScanpathFixture};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFixture {
    pub seed: u64,
    pub clips: usize,
    pub frames: u32,
    pub width: u32,
    pub height: u32,
    pub observers: usize,
    pub shots_per_clip: u32,
    /// Writes one prediction directory named "toy" when set.
    pub with_model: bool,
}

impl Default for DatasetFixture {
    fn default() -> Self {
        DatasetFixture {
            seed: 1,
            clips: 3,
            frames: 60,
            width: 64,
            height: 40,
            observers: 5,
            shots_per_clip: 3,
            with_model: true,
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn clip_id(i: usize) -> String {
    format!("clip{i:02}")
}

/// Shots of equal length with labels cycling through each vocabulary.
pub fn annotation_for(id: &str, frames: u32, width: u32, height: u32, shots: u32, offset: usize) -> ClipAnnotation {
    let len = (frames / shots).max(1);
    let mut out = Vec::new();
    let mut start = 0;
    let mut k = offset;
    while start < frames {
        let end = if out.len() as u32 + 1 >= shots { frames } else { (start + len).min(frames) };
        let motion = [Motion::Static, Motion::Pan, Motion::Track, Motion::Zoom, Motion::Dolly][k % 5];
        out.push(Shot {
            start,
            end,
            motions: vec![motion],
            direction: matches!(motion, Motion::Pan | Motion::Dolly).then_some(Direction::ALL[k % 2]),
            angle: [Angle::Eye, Angle::Low, Angle::High][k % 3],
            size: [ShotSize::Cu, ShotSize::Ms, ShotSize::Ls, ShotSize::Mcu][k % 4],
        });
        start = end;
        k += 1;
    }
    ClipAnnotation {
        clip_id: id.into(),
        frame_count: frames,
        frame_width: width,
        frame_height: height,
        shots: out,
        faces: BTreeMap::new(),
    }
}

pub fn meta_toml(meta: &ClipMeta) -> String {
    format!(
        "clip_id = \"{}\"\nframe_count = {}\nframe_width_px = {}\nframe_height_px = {}\ndisplay_width_px = {}\ndisplay_height_px = {}\n",
        meta.clip_id,
        meta.frame_count,
        meta.frame_width_px,
        meta.frame_height_px,
        meta.display_width_px,
        meta.display_height_px
    )
}

/// Canonical raw gaze text for a cleaned clip: one fixation sample per point.
pub fn raw_gaze_csv(fix: &CleanedFixations, meta: &ClipMeta) -> String {
    let mut text = String::from("observer_id,clip_id,timestamp_ms,x_px,y_px,validity,event\n");
    for rec in fix.to_samples(meta) {
        for s in &rec.samples {
            writeln!(text, "{},{},{},{},{},1,Fixation", s.observer_id, rec.clip_id, s.timestamp_ms, s.x, s.y)
                .expect("string write");
        }
    }
    text
}

/// Generates the clips of `fx`, writes fixations, annotations and
/// optionally predictions under `dir`, and returns the manifest path.
pub fn write_dataset(dir: &Path, fx: &DatasetFixture) -> Result<PathBuf> {
    for sub in ["fixations", "annotations"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| io(&p, e))?;
    }
    let mut manifest = String::new();
    for i in 0..fx.clips {
        let id = clip_id(i);
        let cuts: Vec<u32> = (1..fx.shots_per_clip).map(|s| s * (fx.frames / fx.shots_per_clip)).collect();
        let mut fix = generate_scanpaths(&ScanpathFixture {
            seed: fx.seed.wrapping_mul(1000).wrapping_add(i as u64),
            observers: fx.observers,
            frames: fx.frames,
            width: fx.width,
            height: fx.height,
            congruency: 0.3 + 0.6 * (i as f64 / fx.clips.max(1) as f64),
            cluster_sigma: 2.0,
            cuts,
            reconvergence_lag: 3,
            dropout: 0.1,
            samples_per_frame: 2,
            jitter_sigma: 1.0,
        });
        fix.clip_id = id.clone();
        let fix_path = dir.join("fixations").join(format!("{id}.csv"));
        let file = fs::File::create(&fix_path).map_err(|e| io(&fix_path, e))?;
        fix.write_csv(std::io::BufWriter::new(file))?;
        let ann = annotation_for(&id, fx.frames, fx.width, fx.height, fx.shots_per_clip, i);
        let ann_path = dir.join("annotations").join(format!("{id}.toml"));
        fs::write(&ann_path, ann.to_document()).map_err(|e| io(&ann_path, e))?;
        writeln!(
            manifest,
            "[[clip]]\nclip_id = \"{id}\"\nframe_count = {}\nframe_width_px = {}\nframe_height_px = {}\n\
             display_width_px = {}\ndisplay_height_px = {}\nfixations = \"fixations/{id}.csv\"\n\
             annotations = \"annotations/{id}.toml\"\n",
            fx.frames, fx.width, fx.height, fx.width, fx.height
        )
        .expect("string write");

        if fx.with_model {
            let clip_dir = dir.join("models").join("toy").join(&id);
            fs::create_dir_all(&clip_dir).map_err(|e| io(&clip_dir, e))?;
            for f in 0..fx.frames {
                let (cx, cy) = ((f * 7 + i as u32 * 11) % fx.width, (f * 3) % fx.height);
                let map = Heatmap::from_fn(fx.width / 2, fx.height / 2, |x, y| {
                    let d = (2 * x).abs_diff(cx).pow(2) + (2 * y).abs_diff(cy).pow(2);
                    (1.0 / (1.0 + d as f32 / 50.0)) as f64
                })?
                .cast::<f32>();
                save_map(&map, &clip_dir.join(frame_file_name(f, MapFormat::Raw)))?;
            }
        }
    }
    if fx.with_model {
        manifest.push_str("[[model]]\nname = \"toy\"\ndir = \"models/toy\"\n");
    }
    let path = dir.join("dataset.toml");
    fs::write(&path, manifest).map_err(|e| io(&path, e))?;
    Ok(path)
}
