//! Inter-observer congruency.
//!
//! Two estimators: the per-frame convex hull area of all fixations, and a
//! leave-one-out score over a sliding window of `n` frames. For every
//! observer `o` with fixations in the window, the pooled binary fixation
//! map of the other observers is blurred with a Gaussian and NSS is taken
//! at `o`'s fixated pixels; the window score averages over observers.
//!
//! The sliding estimator never materializes a dense map. With `K` the
//! separable kernel and `A` the set of pooled pixels, the blurred map is
//! `M(x) = sum_{p in A} K(x - p)`, so NSS only needs
//!
//! * `sum_x M(x) = sum_p mass(p)` where `mass` is the kernel weight that
//!   stays inside the frame,
//! * `sum_x M(x)^2 = sum_{p,q} G(p, q)` with the clipped kernel Gram
//!   `G(p, q) = sum_x K(x - p) K(x - q)`, which factors into per-axis
//!   terms read from prefix tables,
//! * `M(f) = sum_p K(f - p)` at the left-out observer's pixels.
//!
//! These sums are maintained incrementally as frames enter and leave the
//! window. The map without observer `o` is the full pooled set minus the
//! pixels only `o` fixated, so each leave-one-out term is a correction
//! over `o`'s own pixels.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CleanedFixations;
use crate::model::Pixel;
use crate::saliency::{make_kernel, DEFAULT_TRUNCATION};

pub const DEFAULT_WINDOW: usize = 20;
pub const SHORT_WINDOW: usize = 5;
/// Windows per independently seeded chunk of the sliding computation.
const SEGMENT_WINDOWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IocConfig {
    /// Window length in frames.
    pub window: usize,
    pub sigma_px: f64,
    #[serde(default = "default_truncation")]
    pub truncation: f64,
    #[serde(default = "default_min_observers")]
    pub min_observers: usize,
}

fn default_truncation() -> f64 {
    DEFAULT_TRUNCATION
}

fn default_min_observers() -> usize {
    2
}

impl IocConfig {
    pub fn new(window: usize, sigma_px: f64) -> Self {
        IocConfig {
            window,
            sigma_px,
            truncation: DEFAULT_TRUNCATION,
            min_observers: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::input("IOC window must be at least one frame"));
        }
        if self.min_observers < 2 {
            return Err(Error::input("IOC needs min_observers >= 2"));
        }
        if !(self.sigma_px > 0.0) {
            return Err(Error::input("IOC sigma must be positive"));
        }
        Ok(())
    }
}

/// Window scores of one clip at stride 1; `None` where no observer could
/// be scored.
#[derive(Debug, Clone, PartialEq)]
pub struct IocSeries {
    pub clip_id: String,
    pub window: usize,
    pub stride: usize,
    pub values: Vec<(u32, Option<f64>)>,
}

impl IocSeries {
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().filter_map(|(_, v)| *v).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["clip_id", "window_start", "n", "score"])?;
        for (start, score) in &self.values {
            w.write_record([
                self.clip_id.as_str(),
                &start.to_string(),
                &self.window.to_string(),
                &score.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<ioc output>", e))?;
        Ok(())
    }

    /// Reads one or more series from a file; rows are grouped by clip in
    /// order of first appearance.
    pub fn read_csv<R: Read>(input: R) -> Result<Vec<IocSeries>> {
        #[derive(Deserialize)]
        struct Row {
            clip_id: String,
            window_start: u32,
            n: usize,
            score: Option<f64>,
        }
        let mut out: Vec<IocSeries> = Vec::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        for row in rdr.deserialize() {
            let row: Row = row?;
            match out.iter_mut().find(|s| s.clip_id == row.clip_id) {
                Some(s) => {
                    if s.window != row.n {
                        return Err(Error::format(format!(
                            "clip {} mixes window sizes {} and {}",
                            row.clip_id, s.window, row.n
                        )));
                    }
                    if s.values.last().is_some_and(|(t, _)| *t >= row.window_start) {
                        return Err(Error::format(format!(
                            "clip {}: window starts not increasing",
                            row.clip_id
                        )));
                    }
                    s.values.push((row.window_start, row.score));
                }
                None => out.push(IocSeries {
                    clip_id: row.clip_id,
                    window: row.n,
                    stride: 1,
                    values: vec![(row.window_start, row.score)],
                }),
            }
        }
        Ok(out)
    }
}

/// Area of the convex hull; zero for fewer than three non-collinear points.
pub fn convex_hull_area(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    // Andrew's monotone chain, dropping collinear points
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    twice.abs() / 2.0
}

/// Hull area of every observer's fixations on each frame.
pub fn hull_area_series(fix: &CleanedFixations) -> Vec<f64> {
    (0..fix.frame_count as usize)
        .map(|f| {
            let pts: Vec<(f64, f64)> = fix
                .observers
                .iter()
                .flat_map(|o| o.frames[f].iter().map(|p| (p.x as f64, p.y as f64)))
                .collect();
            convex_hull_area(&pts)
        })
        .collect()
}

/// Per-axis kernel tables for a frame side of length `len`.
struct AxisTables {
    len: i64,
    radius: i64,
    profile: Vec<f64>,
    /// Kernel weight falling inside `[0, len)` for a stamp at each position.
    mass: Vec<f64>,
    /// For each offset `d` in `[-2r, 2r]`, prefix sums over `j` of
    /// `k(j) k(j - d)`, starting at `j = max(-r, d - r)`.
    gram_prefix: Vec<Vec<f64>>,
}

impl AxisTables {
    fn new(len: u32, profile: &[f64]) -> Self {
        let r = (profile.len() / 2) as i64;
        let len = len as i64;
        let k = |j: i64| profile[(j + r) as usize];
        let mut mass = Vec::with_capacity(len as usize);
        let mut prefix = vec![0.0];
        for j in -r..=r {
            prefix.push(prefix.last().unwrap() + k(j));
        }
        for a in 0..len {
            let lo = (-r).max(-a);
            let hi = r.min(len - 1 - a);
            mass.push(prefix[(hi + r + 1) as usize] - prefix[(lo + r) as usize]);
        }
        let gram_prefix = (-2 * r..=2 * r)
            .map(|d| {
                let mut acc = vec![0.0];
                for j in (-r).max(d - r)..=r.min(d + r) {
                    acc.push(acc.last().unwrap() + k(j) * k(j - d));
                }
                acc
            })
            .collect();
        AxisTables {
            len,
            radius: r,
            profile: profile.to_vec(),
            mass,
            gram_prefix,
        }
    }

    fn kernel(&self, d: i64) -> f64 {
        if d.abs() > self.radius {
            0.0
        } else {
            self.profile[(d + self.radius) as usize]
        }
    }

    /// `sum_{x in [0, len)} k(x - a) k(x - b)`.
    fn gram(&self, a: i64, b: i64) -> f64 {
        let r = self.radius;
        let d = b - a;
        if d.abs() > 2 * r {
            return 0.0;
        }
        let first = (-r).max(d - r);
        let lo = first.max(-a);
        let hi = r.min(d + r).min(self.len - 1 - a);
        if lo > hi {
            return 0.0;
        }
        let table = &self.gram_prefix[(d + 2 * r) as usize];
        table[(hi - first + 1) as usize] - table[(lo - first) as usize]
    }
}

struct Geometry {
    x: AxisTables,
    y: AxisTables,
    pixels: f64,
}

impl Geometry {
    fn new(width: u32, height: u32, profile: &[f64]) -> Self {
        Geometry {
            x: AxisTables::new(width, profile),
            y: AxisTables::new(height, profile),
            pixels: width as f64 * height as f64,
        }
    }

    fn mass(&self, p: Pixel) -> f64 {
        self.x.mass[p.x as usize] * self.y.mass[p.y as usize]
    }

    fn gram(&self, p: Pixel, q: Pixel) -> f64 {
        let gx = self.x.gram(p.x as i64, q.x as i64);
        if gx == 0.0 {
            return 0.0;
        }
        gx * self.y.gram(p.y as i64, q.y as i64)
    }

    fn kernel(&self, p: Pixel, q: Pixel) -> f64 {
        self.x.kernel(p.x as i64 - q.x as i64) * self.y.kernel(p.y as i64 - q.y as i64)
    }
}

struct PooledPoint {
    pixel: Pixel,
    /// Observers whose window set holds this pixel.
    owners: u32,
    /// `sum_{q in A} G(p, q)`.
    gram_sum: f64,
    /// Blurred pooled map value at this pixel.
    value: f64,
}

/// Pooled window state: per-observer pixel multiplicities and the running
/// sums over the union of all observers' pixels.
struct WindowState<'g> {
    geo: &'g Geometry,
    per_observer: Vec<BTreeMap<Pixel, u32>>,
    index: HashMap<Pixel, usize>,
    pooled: Vec<PooledPoint>,
    sum: f64,
    sum_sq: f64,
}

impl<'g> WindowState<'g> {
    fn new(geo: &'g Geometry, observers: usize) -> Self {
        WindowState {
            geo,
            per_observer: vec![BTreeMap::new(); observers],
            index: HashMap::new(),
            pooled: Vec::new(),
            sum: 0.0,
            sum_sq: 0.0,
        }
    }

    fn add(&mut self, observer: usize, p: Pixel) {
        let c = self.per_observer[observer].entry(p).or_insert(0);
        *c += 1;
        if *c > 1 {
            return;
        }
        if let Some(&i) = self.index.get(&p) {
            self.pooled[i].owners += 1;
            return;
        }
        let (mut g, mut v) = (0.0, 0.0);
        for q in self.pooled.iter_mut() {
            let gq = self.geo.gram(p, q.pixel);
            if gq != 0.0 {
                q.gram_sum += gq;
                g += gq;
                let kq = self.geo.kernel(p, q.pixel);
                q.value += kq;
                v += kq;
            }
        }
        let self_gram = self.geo.gram(p, p);
        self.sum += self.geo.mass(p);
        self.sum_sq += 2.0 * g + self_gram;
        self.index.insert(p, self.pooled.len());
        self.pooled.push(PooledPoint {
            pixel: p,
            owners: 1,
            gram_sum: g + self_gram,
            value: v + self.geo.kernel(p, p),
        });
    }

    fn remove(&mut self, observer: usize, p: Pixel) {
        let counts = &mut self.per_observer[observer];
        let c = counts.get_mut(&p).expect("removing a pixel that was added");
        *c -= 1;
        if *c > 0 {
            return;
        }
        counts.remove(&p);
        let i = self.index[&p];
        self.pooled[i].owners -= 1;
        if self.pooled[i].owners > 0 {
            return;
        }
        self.index.remove(&p);
        let last = self.pooled.len() - 1;
        self.pooled.swap(i, last);
        self.pooled.pop();
        if i < self.pooled.len() {
            self.index.insert(self.pooled[i].pixel, i);
        }
        let mut g = 0.0;
        for q in self.pooled.iter_mut() {
            let gq = self.geo.gram(p, q.pixel);
            if gq != 0.0 {
                q.gram_sum -= gq;
                g += gq;
                q.value -= self.geo.kernel(p, q.pixel);
            }
        }
        self.sum -= self.geo.mass(p);
        self.sum_sq -= 2.0 * g + self.geo.gram(p, p);
    }

    /// Leave-one-out NSS for `observer`, or `None` when it has no pixels in
    /// the window or nobody else does.
    fn loo_nss(&self, observer: usize) -> Option<f64> {
        let own: Vec<Pixel> = self.per_observer[observer].keys().copied().collect();
        if own.is_empty() {
            return None;
        }
        let exclusive: Vec<&PooledPoint> = own
            .iter()
            .map(|p| &self.pooled[self.index[p]])
            .filter(|pt| pt.owners == 1)
            .collect();
        if exclusive.len() == self.pooled.len() {
            return None;
        }
        let mut sum = self.sum;
        let mut sum_sq = self.sum_sq;
        for (i, a) in exclusive.iter().enumerate() {
            sum -= self.geo.mass(a.pixel);
            sum_sq -= 2.0 * a.gram_sum;
            sum_sq += self.geo.gram(a.pixel, a.pixel);
            for b in &exclusive[i + 1..] {
                sum_sq += 2.0 * self.geo.gram(a.pixel, b.pixel);
            }
        }
        let mean = sum / self.geo.pixels;
        let var = sum_sq / self.geo.pixels - mean * mean;
        if !(var > 0.0) {
            return None;
        }
        let std = var.sqrt();
        let total: f64 = own
            .iter()
            .map(|&f| {
                let mut v = self.pooled[self.index[&f]].value;
                for e in &exclusive {
                    v -= self.geo.kernel(f, e.pixel);
                }
                (v - mean) / std
            })
            .sum();
        Some(total / own.len() as f64)
    }

    fn window_score(&self) -> Option<f64> {
        let scores: Vec<f64> = (0..self.per_observer.len())
            .filter_map(|o| self.loo_nss(o))
            .collect();
        if scores.is_empty() {
            None
        } else {
            Some(scores.iter().sum::<f64>() / scores.len() as f64)
        }
    }
}

/// Leave-one-out sliding-window congruency of one clip.
///
/// Windows `[t, t + n)` advance one frame at a time; windows running past
/// the last frame are not produced. Observers without fixations in a window
/// are skipped rather than scored.
pub fn loo_window_ioc(fix: &CleanedFixations, cfg: &IocConfig) -> Result<IocSeries> {
    cfg.validate()?;
    if fix.observers.len() < cfg.min_observers {
        return Err(Error::input(format!(
            "clip {} has {} observers, IOC needs {}",
            fix.clip_id,
            fix.observers.len(),
            cfg.min_observers
        )));
    }
    let kernel = make_kernel::<f64>(cfg.sigma_px, cfg.truncation)?;
    let geo = Geometry::new(fix.width, fix.height, kernel.profile());
    let n = cfg.window;
    let frames = fix.frame_count as usize;
    let windows = if frames >= n { frames - n + 1 } else { 0 };

    let segments: Vec<usize> = (0..windows).step_by(SEGMENT_WINDOWS).collect();
    let chunks: Vec<Vec<(u32, Option<f64>)>> = segments
        .par_iter()
        .map(|&first| {
            let last = (first + SEGMENT_WINDOWS).min(windows);
            let mut state = WindowState::new(&geo, fix.observers.len());
            let add_frame = |state: &mut WindowState, f: usize| {
                for (o, track) in fix.observers.iter().enumerate() {
                    for &p in &track.frames[f] {
                        state.add(o, p);
                    }
                }
            };
            for f in first..first + n {
                add_frame(&mut state, f);
            }
            let mut out = Vec::with_capacity(last - first);
            for t in first..last {
                if t > first {
                    for (o, track) in fix.observers.iter().enumerate() {
                        for &p in &track.frames[t - 1] {
                            state.remove(o, p);
                        }
                    }
                    add_frame(&mut state, t + n - 1);
                }
                out.push((t as u32, state.window_score()));
            }
            out
        })
        .collect();

    Ok(IocSeries {
        clip_id: fix.clip_id.clone(),
        window: n,
        stride: 1,
        values: chunks.into_iter().flatten().collect(),
    })
}

/// Mean, median, standard deviation and count over the present scores.
pub fn sequence_ioc_summary(series: &IocSeries) -> Result<crate::stats::Summary> {
    let present = series.present();
    if present.is_empty() {
        return Err(Error::input(format!("IOC series of {} has no scores", series.clip_id)));
    }
    crate::stats::summarize(&present)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutDrop {
    pub cut: u32,
    pub pre_mean: Option<f64>,
    pub post_mean: Option<f64>,
    pub drop: Option<f64>,
    /// Another cut falls inside the frames read by this cut's windows.
    pub overlaps: bool,
}

/// Compares congruency just before and just after each cut.
///
/// Pre-cut windows are those ending (inclusive last frame) within the
/// `pre_frames` frames before the cut; post-cut windows are those starting
/// in `[cut, cut + post_frames)`.
pub fn cut_drop_analysis(
    series: &IocSeries,
    cuts: &[u32],
    pre_frames: u32,
    post_frames: u32,
) -> Vec<CutDrop> {
    let n = series.window as i64;
    let score_at: BTreeMap<i64, f64> = series
        .values
        .iter()
        .filter_map(|(t, v)| v.map(|v| (*t as i64, v)))
        .collect();
    let mean_over = |lo: i64, hi: i64| -> Option<f64> {
        let vals: Vec<f64> = score_at.range(lo..hi).map(|(_, v)| *v).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    cuts.iter()
        .map(|&cut| {
            let c = cut as i64;
            let pre_lo = c - pre_frames as i64 - n + 1;
            let pre_hi = c - n + 1;
            let post_hi = c + post_frames as i64;
            let pre_mean = mean_over(pre_lo, pre_hi);
            let post_mean = mean_over(c, post_hi);
            let span = (c - pre_frames as i64 - n + 1)..(post_hi + n - 1);
            let overlaps = cuts
                .iter()
                .any(|&o| o != cut && span.contains(&(o as i64)));
            CutDrop {
                cut,
                pre_mean,
                post_mean,
                drop: pre_mean.zip(post_mean).map(|(a, b)| a - b),
                overlaps,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ObserverTrack;

    #[test]
    fn hull_examples() {
        assert_eq!(convex_hull_area(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)]), 50.0);
        assert_eq!(convex_hull_area(&[(0.0, 0.0), (1.0, 1.0), (5.0, 5.0), (2.0, 2.0)]), 0.0);
        assert_eq!(convex_hull_area(&[(1.0, 1.0), (1.0, 1.0)]), 0.0);
        assert_eq!(convex_hull_area(&[]), 0.0);
        let square = [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (2.0, 2.0), (2.0, 0.0)];
        assert_eq!(convex_hull_area(&square), 16.0);
    }

    #[test]
    fn axis_gram_matches_direct_sum() {
        let k = make_kernel::<f64>(1.7, 3.0).unwrap();
        let axis = AxisTables::new(13, k.profile());
        let r = axis.radius;
        for a in 0..13 {
            for b in 0..13 {
                let direct: f64 = (0..13).map(|x| axis.kernel(x - a) * axis.kernel(x - b)).sum();
                assert!((axis.gram(a, b) - direct).abs() < 1e-15, "{a} {b}");
            }
            let m: f64 = (0..13).map(|x| axis.kernel(x - a)).sum();
            assert!((axis.mass[a as usize] - m).abs() < 1e-15);
        }
        assert_eq!(axis.gram(0, 2 * r + 1), 0.0);
    }

    fn clip(frames: u32, observers: Vec<Vec<Vec<Pixel>>>) -> CleanedFixations {
        CleanedFixations {
            clip_id: "c".into(),
            frame_count: frames,
            width: 40,
            height: 30,
            observers: observers
                .into_iter()
                .enumerate()
                .map(|(i, frames)| ObserverTrack {
                    observer_id: format!("o{i}"),
                    frames,
                })
                .collect(),
        }
    }

    #[test]
    fn too_few_observers() {
        let fx = clip(3, vec![vec![vec![]; 3]]);
        assert!(loo_window_ioc(&fx, &IocConfig::new(2, 2.0)).is_err());
        assert!(IocConfig::new(0, 2.0).validate().is_err());
    }

    #[test]
    fn series_length_drops_partial_windows() {
        let p = Pixel::new(20, 15);
        let fx = clip(10, vec![vec![vec![p]; 10], vec![vec![p]; 10]]);
        let s = loo_window_ioc(&fx, &IocConfig::new(4, 2.0)).unwrap();
        assert_eq!(s.values.len(), 7);
        assert_eq!(s.values.last().unwrap().0, 6);
        let first = s.values[0].1.unwrap();
        assert!(s.values.iter().all(|(_, v)| (v.unwrap() - first).abs() < 1e-12));
    }

    #[test]
    fn empty_observer_makes_window_absent() {
        let p = Pixel::new(20, 15);
        let mut b = vec![vec![p]; 6];
        b[2].clear();
        b[3].clear();
        let fx = clip(6, vec![vec![vec![p]; 6], b]);
        let s = loo_window_ioc(&fx, &IocConfig::new(1, 2.0)).unwrap();
        assert!(s.values[1].1.is_some());
        assert_eq!(s.values[2].1, None);
        assert_eq!(s.values[3].1, None);
    }

    #[test]
    fn summary_and_errors() {
        let s = IocSeries {
            clip_id: "c".into(),
            window: 5,
            stride: 1,
            values: vec![(0, Some(1.0)), (1, None), (2, Some(2.0)), (3, Some(3.0))],
        };
        let sum = sequence_ioc_summary(&s).unwrap();
        assert_eq!((sum.mean, sum.median, sum.count), (2.0, 2.0, 3));
        let empty = IocSeries {
            values: vec![(0, None)],
            ..s
        };
        assert!(sequence_ioc_summary(&empty).is_err());
    }

    #[test]
    fn series_csv_round_trip() {
        let s = IocSeries {
            clip_id: "c".into(),
            window: 5,
            stride: 1,
            values: vec![(0, Some(1.25)), (1, None), (2, Some(0.1 + 0.2))],
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("c,1,5,\n"));
        assert_eq!(IocSeries::read_csv(buf.as_slice()).unwrap(), vec![s]);
    }

    fn step_series(n: usize, cut: u32, len: u32) -> IocSeries {
        IocSeries {
            clip_id: "c".into(),
            window: n,
            stride: 1,
            values: (0..len)
                .map(|t| (t, Some(if t < cut { 5.0 } else { 3.0 })))
                .collect(),
        }
    }

    #[test]
    fn cut_drop_step() {
        let d = cut_drop_analysis(&step_series(5, 40, 80), &[40], 5, 5);
        assert_eq!(d[0].drop, Some(2.0));
        assert!(!d[0].overlaps);
    }

    #[test]
    fn cut_drop_constant_and_overlap() {
        let s = IocSeries {
            values: (0..80).map(|t| (t, Some(4.0))).collect(),
            ..step_series(5, 0, 0)
        };
        let d = cut_drop_analysis(&s, &[20, 24, 60], 5, 5);
        assert!(d.iter().all(|c| c.drop == Some(0.0)));
        assert!(d[0].overlaps && d[1].overlaps && !d[2].overlaps);
    }

    #[test]
    fn cut_drop_at_clip_start_has_no_pre() {
        let d = cut_drop_analysis(&step_series(5, 2, 30), &[2], 5, 5);
        assert_eq!(d[0].pre_mean, None);
        assert_eq!(d[0].drop, None);
    }
}
