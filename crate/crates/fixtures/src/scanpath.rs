//! Synthetic scanpaths with controllable agreement between observers.

use cinegaze::ingest::{CleanedFixations, ObserverTrack};
use cinegaze::model::Pixel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct ScanpathFixture {
    pub seed: u64,
    pub observers: usize,
    pub frames: u32,
    pub width: u32,
    pub height: u32,
    /// 1 puts every observer on the shared target, 0 makes their targets
    /// independent.
    pub congruency: f64,
    /// Spread of each fixation around the observer's target, in pixels.
    pub cluster_sigma: f64,
    /// Frames where a new shot starts; shared and private targets are
    /// redrawn there.
    pub cuts: Vec<u32>,
    /// Frames after each cut during which observers look at independent
    /// targets before settling on the new shot's target.
    pub reconvergence_lag: u32,
    /// Probability of no fixation for an observer in a frame.
    pub dropout: f64,
    /// Gaze samples binned into each frame per observer.
    pub samples_per_frame: usize,
    /// Spread of the samples around the frame's fixation point.
    pub jitter_sigma: f64,
}

impl Default for ScanpathFixture {
    fn default() -> Self {
        ScanpathFixture {
            seed: 0,
            observers: 6,
            frames: 40,
            width: 32,
            height: 24,
            congruency: 0.5,
            cluster_sigma: 1.0,
            cuts: Vec::new(),
            reconvergence_lag: 0,
            dropout: 0.0,
            samples_per_frame: 1,
            jitter_sigma: 0.0,
        }
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, w: u32, h: u32) -> (f64, f64) {
    (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64))
}

/// Generates one clip of fixations; the output depends only on the fixture.
///
/// Each shot draws a shared target and one private target per observer.
/// An observer aims at `shared + (1 - congruency) * (private - shared)`,
/// except during the first `reconvergence_lag` frames after a cut where it
/// aims at a fresh private point, and fixates at that aim plus Gaussian
/// noise.
pub fn generate_scanpaths(fx: &ScanpathFixture) -> CleanedFixations {
    let mut rng = ChaCha8Rng::seed_from_u64(fx.seed);
    let (w, h) = (fx.width, fx.height);
    let noise = Normal::new(0.0, fx.cluster_sigma.max(0.0)).expect("finite sigma");
    let jitter = Normal::new(0.0, fx.jitter_sigma.max(0.0)).expect("finite sigma");
    let mut tracks: Vec<ObserverTrack> = (0..fx.observers)
        .map(|o| ObserverTrack::empty(format!("obs{o:02}"), fx.frames))
        .collect();

    let mut shared = uniform_point(&mut rng, w, h);
    let mut private: Vec<(f64, f64)> = (0..fx.observers).map(|_| uniform_point(&mut rng, w, h)).collect();
    let mut lagging: Vec<(f64, f64)> = Vec::new();
    let mut lag_left = 0u32;
    for f in 0..fx.frames {
        if fx.cuts.contains(&f) {
            shared = uniform_point(&mut rng, w, h);
            private = (0..fx.observers).map(|_| uniform_point(&mut rng, w, h)).collect();
            lagging = (0..fx.observers).map(|_| uniform_point(&mut rng, w, h)).collect();
            lag_left = fx.reconvergence_lag;
        }
        for (o, track) in tracks.iter_mut().enumerate() {
            let skip = rng.gen::<f64>() < fx.dropout;
            let (ax, ay) = if lag_left > 0 {
                lagging[o]
            } else {
                let (px, py) = private[o];
                (
                    shared.0 + (1.0 - fx.congruency) * (px - shared.0),
                    shared.1 + (1.0 - fx.congruency) * (py - shared.1),
                )
            };
            let (nx, ny) = if fx.cluster_sigma > 0.0 {
                (noise.sample(&mut rng), noise.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            if skip {
                continue;
            }
            let points = &mut track.frames[f as usize];
            for _ in 0..fx.samples_per_frame.max(1) {
                let (jx, jy) = if fx.jitter_sigma > 0.0 {
                    (jitter.sample(&mut rng), jitter.sample(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                let x = (ax + nx + jx).round().clamp(0.0, (w - 1) as f64) as u32;
                let y = (ay + ny + jy).round().clamp(0.0, (h - 1) as f64) as u32;
                let p = Pixel::new(x, y);
                if !points.contains(&p) {
                    points.push(p);
                }
            }
        }
        lag_left = lag_left.saturating_sub(1);
    }
    CleanedFixations {
        clip_id: format!("synthetic-{}", fx.seed),
        frame_count: fx.frames,
        width: w,
        height: h,
        observers: tracks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_congruency_without_noise_is_identical() {
        let fx = ScanpathFixture {
            congruency: 1.0,
            cluster_sigma: 0.0,
            cuts: vec![10, 25],
            ..Default::default()
        };
        let c = generate_scanpaths(&fx);
        for f in 0..fx.frames as usize {
            let first = &c.observers[0].frames[f];
            assert_eq!(first.len(), 1);
            assert!(c.observers.iter().all(|o| &o.frames[f] == first));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let fx = ScanpathFixture {
            seed: 9,
            dropout: 0.2,
            cuts: vec![5],
            reconvergence_lag: 3,
            ..Default::default()
        };
        assert_eq!(generate_scanpaths(&fx), generate_scanpaths(&fx));
        let other = ScanpathFixture { seed: 10, ..fx.clone() };
        assert_ne!(generate_scanpaths(&fx), generate_scanpaths(&other));
    }

    #[test]
    fn zero_congruency_spreads_observers() {
        let fx = ScanpathFixture {
            congruency: 0.0,
            cluster_sigma: 0.0,
            observers: 8,
            width: 200,
            height: 200,
            ..Default::default()
        };
        let c = generate_scanpaths(&fx);
        let distinct: std::collections::BTreeSet<_> = c.observers.iter().map(|o| o.frames[0][0]).collect();
        assert!(distinct.len() >= 7);
    }
}
