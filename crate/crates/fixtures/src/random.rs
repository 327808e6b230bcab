//! Seeded random maps and fixation sets for oracle comparisons.

use cinegaze::model::{FixationMap, Heatmap, Pixel};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-negative map with values in `[0, 1)`; about a fifth of the pixels
/// are exactly zero and a few values repeat, so ties and empty regions
/// occur.
pub fn heatmap(rng: &mut impl Rng, w: u32, h: u32) -> Heatmap<f64> {
    Heatmap::from_fn(w, h, |_, _| {
        let r: f64 = rng.gen();
        if r < 0.2 {
            0.0
        } else if r < 0.3 {
            0.5
        } else {
            rng.gen()
        }
    })
    .expect("finite values")
}

/// `k` distinct fixated pixels chosen uniformly.
pub fn fixations(rng: &mut impl Rng, w: u32, h: u32, k: usize) -> FixationMap {
    let mut f = FixationMap::empty(0, w, h);
    for i in sample(rng, (w * h) as usize, k) {
        f.insert(Pixel::new(i as u32 % w, i as u32 / w)).expect("inside");
    }
    f
}

/// Fixations at least `margin` pixels from every border.
pub fn interior_fixations(rng: &mut impl Rng, w: u32, h: u32, margin: u32, k: usize) -> FixationMap {
    let (iw, ih) = (w - 2 * margin, h - 2 * margin);
    let mut f = FixationMap::empty(0, w, h);
    for i in sample(rng, (iw * ih) as usize, k) {
        f.insert(Pixel::new(margin + i as u32 % iw, margin + i as u32 / iw))
            .expect("inside");
    }
    f
}
