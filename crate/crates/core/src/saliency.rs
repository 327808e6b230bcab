//! Gaussian saliency maps from fixation maps, dataset-average maps and the
//! centered Gaussian baseline.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FixationMap, Heatmap};
use crate::scalar::Scalar;

pub const DEFAULT_TRUNCATION: f64 = 3.0;
pub const DEFAULT_SKIP_FIRST: usize = 10;
pub const DEFAULT_PRIOR_SIGMA_FRACTION: f64 = 1.0 / 6.0;
/// Common grid for averaging clips of different aspect ratios.
pub const REFERENCE_GRID: (u32, u32) = (640, 400);

/// Discrete isotropic Gaussian with unit total weight.
///
/// The 2-D weights are the outer product of `profile` with itself, so the
/// kernel can be applied as two 1-D passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    sigma_px: f64,
    radius: usize,
    profile: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn sigma_px(&self) -> f64 {
        self.sigma_px
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Side length of the weight grid, `2 * radius + 1`.
    pub fn size(&self) -> usize {
        2 * self.radius + 1
    }

    /// 1-D weights indexed by offset `+ radius`; sums to one.
    pub fn profile(&self) -> &[T] {
        &self.profile
    }

    /// Weight at offset `(dx, dy)` from the center, zero outside the support.
    pub fn weight(&self, dx: i64, dy: i64) -> T {
        let r = self.radius as i64;
        if dx.abs() > r || dy.abs() > r {
            return T::zero();
        }
        self.profile[(dx + r) as usize] * self.profile[(dy + r) as usize]
    }

    /// Dense square weight grid, row-major.
    pub fn weights(&self) -> Vec<T> {
        let n = self.size();
        let mut w = Vec::with_capacity(n * n);
        for ky in &self.profile {
            for kx in &self.profile {
                w.push(*kx * *ky);
            }
        }
        w
    }
}

/// Samples a Gaussian of spread `sigma_px` on `[-radius, radius]` with
/// `radius = ceil(truncation * sigma_px)` and renormalizes to unit sum.
pub fn make_kernel<T: Scalar>(sigma_px: f64, truncation: f64) -> Result<Kernel<T>> {
    if !(sigma_px > 0.0 && sigma_px.is_finite()) {
        return Err(Error::input(format!("kernel sigma must be positive, got {sigma_px}")));
    }
    if !(truncation > 0.0 && truncation.is_finite()) {
        return Err(Error::input(format!("kernel truncation must be positive, got {truncation}")));
    }
    let radius = (truncation * sigma_px).ceil() as usize;
    let raw: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma_px * sigma_px)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(Kernel {
        sigma_px,
        radius,
        profile: raw.into_iter().map(|v| T::of(v / total)).collect(),
    })
}

/// Convolves a binary fixation map with the kernel, zero-padded at the
/// borders so mass near the edges leaks off the map.
pub fn blur_fixations<T: Scalar>(fmap: &FixationMap, kernel: &Kernel<T>) -> Heatmap<T> {
    let (w, h) = (fmap.width() as usize, fmap.height() as usize);
    let r = kernel.radius() as i64;
    let k = kernel.profile();

    // horizontal pass, only rows that hold points
    let mut rows = vec![T::zero(); w * h];
    let mut touched_rows = vec![false; h];
    for p in fmap.points() {
        let (px, py) = (p.x as i64, p.y as usize);
        touched_rows[py] = true;
        let lo = (px - r).max(0);
        let hi = (px + r).min(w as i64 - 1);
        let row = &mut rows[py * w..(py + 1) * w];
        for x in lo..=hi {
            row[x as usize] = row[x as usize] + k[(x - px + r) as usize];
        }
    }

    // vertical pass, scattering each nonzero row value down its column
    let mut out = vec![T::zero(); w * h];
    for (y, _) in touched_rows.iter().enumerate().filter(|(_, t)| **t) {
        let lo = (y as i64 - r).max(0) as usize;
        let hi = (y as i64 + r).min(h as i64 - 1) as usize;
        for x in 0..w {
            let v = rows[y * w + x];
            if v == T::zero() {
                continue;
            }
            for oy in lo..=hi {
                let kv = k[(oy as i64 - y as i64 + r) as usize];
                out[oy * w + x] = out[oy * w + x] + v * kv;
            }
        }
    }
    Heatmap::from_vec_trusted(fmap.width(), fmap.height(), out)
}

/// Convolves an arbitrary non-negative grid with the kernel, zero-padded.
///
/// Blurring a per-pixel fixation count map equals summing the blurred
/// binary maps it counts.
pub fn blur_grid<T: Scalar>(grid: &Heatmap<T>, kernel: &Kernel<T>) -> Heatmap<T> {
    let (w, h) = (grid.width() as usize, grid.height() as usize);
    let r = kernel.radius() as i64;
    let k: Vec<f64> = kernel.profile().iter().map(|v| v.as_f64()).collect();
    let src = grid.values();

    let mut rows = vec![0.0f64; w * h];
    rows.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let line = &src[y * w..(y + 1) * w];
        for (x, v) in line.iter().enumerate() {
            let v = v.as_f64();
            if v == 0.0 {
                continue;
            }
            let lo = (x as i64 - r).max(0) as usize;
            let hi = (x as i64 + r).min(w as i64 - 1) as usize;
            for (ox, out) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *out += v * k[(ox as i64 - x as i64 + r) as usize];
            }
        }
    });

    let mut out = vec![T::zero(); w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, line)| {
        let lo = (y as i64 - r).max(0) as usize;
        let hi = (y as i64 + r).min(h as i64 - 1) as usize;
        let mut acc = vec![0.0f64; w];
        for sy in lo..=hi {
            let kv = k[(y as i64 - sy as i64 + r) as usize];
            for (a, v) in acc.iter_mut().zip(&rows[sy * w..(sy + 1) * w]) {
                *a += v * kv;
            }
        }
        for (o, a) in line.iter_mut().zip(acc) {
            *o = T::of(a);
        }
    });
    Heatmap::from_vec_trusted(grid.width(), grid.height(), out)
}

/// Bilinear resampling with pixel-center alignment.
pub fn resample_bilinear<T: Scalar>(map: &Heatmap<T>, width: u32, height: u32) -> Result<Heatmap<T>> {
    if width == 0 || height == 0 {
        return Err(Error::input("resample target has a zero dimension"));
    }
    if map.dims() == (width, height) {
        return Ok(map.clone());
    }
    let (sw, sh) = (map.width() as f64, map.height() as f64);
    let src = |d: u32, dn: u32, sn: f64| -> (usize, usize, f64) {
        let s = ((d as f64 + 0.5) * sn / dn as f64 - 0.5).clamp(0.0, sn - 1.0);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(sn as usize - 1);
        (i0, i1, s - i0 as f64)
    };
    let xs: Vec<_> = (0..width).map(|x| src(x, width, sw)).collect();
    let mut out = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        let (y0, y1, fy) = src(y, height, sh);
        for &(x0, x1, fx) in &xs {
            let v = |xi: usize, yi: usize| map.get(xi as u32, yi as u32).as_f64();
            let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
            let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
            out.push(T::of((top * (1.0 - fy) + bottom * fy).max(0.0)));
        }
    }
    Ok(Heatmap::from_vec_trusted(width, height, out))
}

/// Streaming pixelwise mean; sums are kept in `f64` in insertion order.
#[derive(Debug, Clone)]
pub struct AverageAccumulator {
    width: u32,
    height: u32,
    sums: Vec<f64>,
    count: usize,
}

impl AverageAccumulator {
    pub fn new(width: u32, height: u32) -> Self {
        AverageAccumulator {
            width,
            height,
            sums: vec![0.0; width as usize * height as usize],
            count: 0,
        }
    }

    pub fn add<T: Scalar>(&mut self, map: &Heatmap<T>) -> Result<()> {
        if map.dims() != (self.width, self.height) {
            return Err(Error::input(format!(
                "map {:?} does not match average grid {}x{}",
                map.dims(),
                self.width,
                self.height
            )));
        }
        self.sums
            .par_chunks_mut(4096)
            .zip(map.values().par_chunks(4096))
            .for_each(|(acc, vals)| {
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a += v.as_f64();
                }
            });
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish<T: Scalar>(self) -> Result<Heatmap<T>> {
        if self.count == 0 {
            return Err(Error::input("no frames left to average"));
        }
        let n = self.count as f64;
        Ok(Heatmap::from_vec_trusted(
            self.width,
            self.height,
            self.sums.into_iter().map(|s| T::of(s / n)).collect(),
        ))
    }
}

/// Pixelwise mean over every frame of every clip, skipping the first
/// `skip_first` frames of each clip.
pub fn average_map<T: Scalar>(clips: &[Vec<Heatmap<T>>], skip_first: usize) -> Result<Heatmap<T>> {
    let first = clips
        .iter()
        .flat_map(|c| c.iter().skip(skip_first))
        .next()
        .ok_or_else(|| Error::input("no frames left to average"))?;
    let mut acc = AverageAccumulator::new(first.width(), first.height());
    for clip in clips {
        for map in clip.iter().skip(skip_first) {
            acc.add(map)?;
        }
    }
    acc.finish()
}

/// Isotropic Gaussian on the central pixel `(w / 2, h / 2)` with
/// `sigma = sigma_fraction * min(w, h)`, normalized to unit sum.
pub fn center_prior<T: Scalar>(width: u32, height: u32, sigma_fraction: f64) -> Result<Heatmap<T>> {
    if !(sigma_fraction > 0.0 && sigma_fraction.is_finite()) {
        return Err(Error::input(format!(
            "prior sigma fraction must be positive, got {sigma_fraction}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::input("center prior needs non-zero dimensions"));
    }
    let sigma = sigma_fraction * width.min(height) as f64;
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    let gx: Vec<f64> = (0..width)
        .map(|x| (-(x as f64 - cx).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let gy: Vec<f64> = (0..height)
        .map(|y| (-(y as f64 - cy).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total = gx.iter().sum::<f64>() * gy.iter().sum::<f64>();
    let mut data = Vec::with_capacity(width as usize * height as usize);
    for vy in &gy {
        for vx in &gx {
            data.push(T::of(vx * vy / total));
        }
    }
    Ok(Heatmap::from_vec_trusted(width, height, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pixel;

    #[test]
    fn kernel_radius_and_normalization() {
        let k = make_kernel::<f64>(45.0, 3.0).unwrap();
        assert_eq!(k.radius(), 135);
        let w = k.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let center = k.weight(0, 0);
        assert!(w.iter().all(|v| *v <= center));
    }

    #[test]
    fn dense_blur_of_counts_sums_sparse_blurs() {
        let k = make_kernel::<f64>(1.5, 3.0).unwrap();
        let mut a = FixationMap::empty(0, 20, 15);
        let mut b = FixationMap::empty(1, 20, 15);
        for p in [Pixel::new(0, 0), Pixel::new(7, 9), Pixel::new(19, 3)] {
            a.insert(p).unwrap();
        }
        for p in [Pixel::new(7, 9), Pixel::new(12, 14)] {
            b.insert(p).unwrap();
        }
        let counts = Heatmap::from_fn(20, 15, |x, y| {
            let p = Pixel::new(x, y);
            (a.contains(p) as u8 + b.contains(p) as u8) as f64
        })
        .unwrap();
        let dense = blur_grid(&counts, &k);
        let (ba, bb) = (blur_fixations(&a, &k), blur_fixations(&b, &k));
        for i in 0..dense.values().len() {
            let want = ba.values()[i] + bb.values()[i];
            assert!((dense.values()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_symmetry() {
        let k = make_kernel::<f64>(2.3, 3.0).unwrap();
        let r = k.radius() as i64;
        for dy in -r..=r {
            for dx in -r..=r {
                let v = k.weight(dx, dy);
                assert_eq!(v, k.weight(dy, dx));
                assert_eq!(v, k.weight(-dx, dy));
                assert_eq!(v, k.weight(dx, -dy));
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_sigma() {
        assert!(make_kernel::<f64>(0.0, 3.0).is_err());
        assert!(make_kernel::<f64>(-1.0, 3.0).is_err());
        assert!(make_kernel::<f64>(1.0, 0.0).is_err());
    }

    #[test]
    fn empty_map_blurs_to_zero() {
        let k = make_kernel::<f64>(2.0, 3.0).unwrap();
        let out = blur_fixations(&FixationMap::empty(0, 16, 16), &k);
        assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn delta_response_is_the_kernel() {
        let k = make_kernel::<f64>(2.0, 3.0).unwrap();
        let mut m = FixationMap::empty(0, 32, 32);
        m.insert(Pixel::new(15, 17)).unwrap();
        let out = blur_fixations(&m, &k);
        assert!((out.sum() - 1.0).abs() < 1e-6);
        for y in 0..32i64 {
            for x in 0..32i64 {
                let expect = k.weight(x - 15, y - 17);
                assert!((out.get(x as u32, y as u32) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn f32_blur_tracks_f64() {
        let k64 = make_kernel::<f64>(3.0, 3.0).unwrap();
        let k32 = make_kernel::<f32>(3.0, 3.0).unwrap();
        let mut m = FixationMap::empty(0, 24, 24);
        m.insert(Pixel::new(3, 20)).unwrap();
        m.insert(Pixel::new(12, 12)).unwrap();
        let a = blur_fixations(&m, &k64);
        let b = blur_fixations(&m, &k32);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - *y as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn average_examples() {
        let ones = Heatmap::<f64>::from_vec(2, 2, vec![1.0; 4]).unwrap();
        let threes = Heatmap::<f64>::from_vec(2, 2, vec![3.0; 4]).unwrap();
        let avg = average_map(&[vec![ones.clone()], vec![threes]], 0).unwrap();
        assert_eq!(avg.values(), &[2.0; 4]);

        let clip = vec![ones.clone(); 11];
        assert_eq!(average_map(&[clip], 10).unwrap(), ones);

        assert!(average_map(&[vec![ones; 10]], 10).is_err());
    }

    #[test]
    fn average_rejects_mismatched_dims() {
        let a = Heatmap::<f64>::zeros(2, 2);
        let b = Heatmap::<f64>::zeros(3, 2);
        assert!(average_map(&[vec![a, b]], 0).is_err());
    }

    #[test]
    fn center_prior_shape() {
        let p = center_prior::<f64>(100, 60, 1.0 / 6.0).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-9);
        let peak = p.argmax();
        assert_eq!((peak.x, peak.y), (50, 30));
        assert!(center_prior::<f64>(10, 10, 0.0).is_err());
    }

    #[test]
    fn center_prior_ratio() {
        let p = center_prior::<f64>(100, 100, 1.0 / 6.0).unwrap();
        let sigma: f64 = 100.0 / 6.0;
        let expect = (-(17.0f64.powi(2)) / (2.0 * sigma * sigma)).exp();
        let ratio = p.get(50, 67) / p.get(50, 50);
        assert!((ratio - expect).abs() < 1e-12);
        assert!((ratio - 0.594).abs() < 5e-4);
    }

    #[test]
    fn resample_identity_and_constant() {
        let m = Heatmap::<f64>::from_fn(8, 5, |x, y| (x + y) as f64).unwrap();
        assert_eq!(resample_bilinear(&m, 8, 5).unwrap(), m);
        let c = Heatmap::<f64>::from_vec(7, 3, vec![2.5; 21]).unwrap();
        let r = resample_bilinear(&c, 13, 9).unwrap();
        assert!(r.values().iter().all(|v| (*v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn resample_linear_ramp_upsampled_twice() {
        let m = Heatmap::<f64>::from_fn(4, 1, |x, _| x as f64).unwrap();
        let r = resample_bilinear(&m, 8, 1).unwrap();
        // centers at (i + 0.5) / 2 - 0.5, clamped to [0, 3]
        let expect = [0.0, 0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.0];
        for (v, e) in r.values().iter().zip(expect) {
            assert!((v - e).abs() < 1e-12);
        }
    }
}
