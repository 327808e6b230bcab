//! Direct-definition reference implementations.
//!
//! Everything here is written from the textbook formulas, favours clarity
//! over speed and refuses instances above the caps below.

use cinegaze::ingest::CleanedFixations;
use cinegaze::model::{FixationMap, Heatmap, Pixel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{OracleError, OracleResult};

pub const MAX_MAP_SIDE: u32 = 32;
/// Convolution alone is checked on larger grids.
pub const MAX_CONV_SIDE: u32 = 64;
pub const MAX_OBSERVERS: usize = 8;
pub const MAX_FRAMES: u32 = 50;

fn check_side(w: u32, h: u32, cap: u32) -> OracleResult<()> {
    if w > cap || h > cap {
        return Err(OracleError::TooLarge(format!("{w}x{h} exceeds {cap}x{cap}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- blur

/// Truncated 2-D Gaussian on a `(2r+1)^2` grid normalized over the grid,
/// with `r = ceil(truncation * sigma)`. Returned row-major with its radius.
pub fn gaussian_2d(sigma: f64, truncation: f64) -> (i64, Vec<f64>) {
    let r = (truncation * sigma).ceil() as i64;
    let mut g = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            g.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = g.iter().sum();
    (r, g.into_iter().map(|v| v / total).collect())
}

/// Direct 2-D convolution of a weighted point set, zero outside the grid.
pub fn direct_blur(points: &[(Pixel, f64)], w: u32, h: u32, sigma: f64, truncation: f64) -> OracleResult<Vec<f64>> {
    check_side(w, h, MAX_CONV_SIDE)?;
    let (r, k) = gaussian_2d(sigma, truncation);
    let side = 2 * r + 1;
    let mut input = vec![0.0; (w * h) as usize];
    for (p, v) in points {
        input[(p.y * w + p.x) as usize] += v;
    }
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for v in y - r..=y + r {
                for u in x - r..=x + r {
                    if u < 0 || v < 0 || u >= w as i64 || v >= h as i64 {
                        continue;
                    }
                    let weight = k[((y - v + r) * side + (x - u + r)) as usize];
                    acc += input[(v * w as i64 + u) as usize] * weight;
                }
            }
            out[(y * w as i64 + x) as usize] = acc;
        }
    }
    Ok(out)
}

pub fn direct_blur_map(f: &FixationMap, sigma: f64, truncation: f64) -> OracleResult<Vec<f64>> {
    let pts: Vec<(Pixel, f64)> = f.points().map(|p| (p, 1.0)).collect();
    direct_blur(&pts, f.width(), f.height(), sigma, truncation)
}

// ---------------------------------------------------------------- metrics

fn values(m: &Heatmap<f64>) -> OracleResult<Vec<f64>> {
    check_side(m.width(), m.height(), MAX_MAP_SIDE)?;
    Ok(m.values().to_vec())
}

fn mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

fn population_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    let mut s = 0.0;
    for x in v {
        s += (x - m) * (x - m);
    }
    (s / v.len() as f64).sqrt()
}

pub fn cc(a: &Heatmap<f64>, b: &Heatmap<f64>) -> OracleResult<f64> {
    let (x, y) = (values(a)?, values(b)?);
    let (sx, sy) = (population_sd(&x), population_sd(&y));
    if sx == 0.0 && sy == 0.0 {
        return Err(OracleError::Undefined("both maps constant"));
    }
    if sx == 0.0 || sy == 0.0 {
        return Ok(0.0);
    }
    let (mx, my) = (mean(&x), mean(&y));
    let mut num = 0.0;
    for i in 0..x.len() {
        num += (x[i] - mx) * (y[i] - my);
    }
    Ok(num / x.len() as f64 / (sx * sy))
}

fn to_distribution(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

pub fn sim(a: &Heatmap<f64>, b: &Heatmap<f64>) -> OracleResult<f64> {
    let (p, q) = (to_distribution(&values(a)?), to_distribution(&values(b)?));
    Ok(p.iter().zip(&q).map(|(x, y)| if x < y { *x } else { *y }).sum())
}

pub fn nss(s: &Heatmap<f64>, f: &FixationMap) -> OracleResult<f64> {
    let v = values(s)?;
    let (m, sd) = (mean(&v), population_sd(&v));
    if sd == 0.0 {
        return Err(OracleError::Undefined("constant map"));
    }
    let mut total = 0.0;
    let mut n = 0;
    for y in 0..s.height() {
        for x in 0..s.width() {
            if f.contains(Pixel::new(x, y)) {
                total += (s.get(x, y) - m) / sd;
                n += 1;
            }
        }
    }
    Ok(total / n as f64)
}

pub fn kld(p: &Heatmap<f64>, q: &Heatmap<f64>, eps: f64) -> OracleResult<f64> {
    let (p, q) = (to_distribution(&values(p)?), to_distribution(&values(q)?));
    let n = p.len() as f64;
    let mut d = 0.0;
    for i in 0..p.len() {
        if q[i] > 0.0 {
            let reg = (p[i] + eps) / (1.0 + n * eps);
            d += q[i] * (q[i] / reg).ln();
        }
    }
    Ok(d.max(0.0))
}

/// Saliency at fixated and non-fixated pixels, row-major.
fn labelled(s: &Heatmap<f64>, f: &FixationMap) -> OracleResult<(Vec<f64>, Vec<f64>)> {
    check_side(s.width(), s.height(), MAX_MAP_SIDE)?;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for y in 0..s.height() {
        for x in 0..s.width() {
            if f.contains(Pixel::new(x, y)) {
                pos.push(s.get(x, y));
            } else {
                neg.push(s.get(x, y));
            }
        }
    }
    Ok((pos, neg))
}

/// ROC area by counting, at each distinct positive value taken as a
/// threshold, the samples at or above it; trapezoids from (0,0) to (1,1).
fn roc_by_counting(pos: &[f64], neg: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = pos.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut curve = vec![(0.0, 0.0)];
    for t in thresholds {
        let tp = pos.iter().filter(|v| **v >= t).count() as f64 / pos.len() as f64;
        let fp = neg.iter().filter(|v| **v >= t).count() as f64 / neg.len() as f64;
        curve.push((fp, tp));
    }
    curve.push((1.0, 1.0));
    let mut area = 0.0;
    for w in curve.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        area += (x1 - x0) * (y1 + y0) / 2.0;
    }
    area
}

pub fn auc_judd(s: &Heatmap<f64>, f: &FixationMap) -> OracleResult<f64> {
    let (pos, neg) = labelled(s, f)?;
    if pos.is_empty() || neg.is_empty() {
        return Err(OracleError::Undefined("needs fixated and non-fixated pixels"));
    }
    Ok(roc_by_counting(&pos, &neg))
}

/// Negatives drawn exactly as the documented sampling contract states.
pub fn auc_borji(
    s: &Heatmap<f64>,
    f: &FixationMap,
    seed: u64,
    splits: usize,
    per_fixation: usize,
) -> OracleResult<f64> {
    let (pos, neg) = labelled(s, f)?;
    if pos.is_empty() || neg.is_empty() {
        return Err(OracleError::Undefined("needs fixated and non-fixated pixels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..splits {
        let drawn: Vec<f64> = (0..per_fixation * pos.len())
            .map(|_| neg[rng.gen_range(0..neg.len())])
            .collect();
        sum += roc_by_counting(&pos, &drawn);
    }
    Ok(sum / splits as f64)
}

// ---------------------------------------------------------------- hull

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Hull area from brute-force edge detection: the directed segment `i -> j`
/// is a counter-clockwise hull edge when every third point lies strictly to
/// its left or on the closed segment itself. Summing the shoelace terms of
/// those edges gives the area.
pub fn hull_area(points: &[(f64, f64)]) -> OracleResult<f64> {
    if points.len() > 200 {
        return Err(OracleError::TooLarge(format!("{} points", points.len())));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for p in points {
        if !pts.contains(p) {
            pts.push(*p);
        }
    }
    let mut twice = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let edge = pts.iter().enumerate().all(|(k, c)| {
                if k == i || k == j {
                    return true;
                }
                let z = cross(*a, *b, *c);
                if z > 0.0 {
                    return true;
                }
                if z < 0.0 {
                    return false;
                }
                let t = (c.0 - a.0) * (b.0 - a.0) + (c.1 - a.1) * (b.1 - a.1);
                let len2 = (b.0 - a.0).powi(2) + (b.1 - a.1).powi(2);
                t >= 0.0 && t <= len2
            });
            if edge {
                twice += a.0 * b.1 - b.0 * a.1;
            }
        }
    }
    Ok((twice / 2.0).abs())
}

// ---------------------------------------------------------------- ioc

/// Leave-one-out window congruency built from dense maps, window by window.
pub fn window_ioc(
    fix: &CleanedFixations,
    n: usize,
    sigma: f64,
    truncation: f64,
) -> OracleResult<Vec<(u32, Option<f64>)>> {
    check_side(fix.width, fix.height, MAX_MAP_SIDE)?;
    if fix.observers.len() > MAX_OBSERVERS || fix.frame_count > MAX_FRAMES {
        return Err(OracleError::TooLarge(format!(
            "{} observers, {} frames",
            fix.observers.len(),
            fix.frame_count
        )));
    }
    let (w, h) = (fix.width, fix.height);
    let frames = fix.frame_count as usize;
    let mut out = Vec::new();
    if frames < n {
        return Ok(out);
    }
    for t in 0..=frames - n {
        let pooled = |keep: &dyn Fn(usize) -> bool| -> Vec<Pixel> {
            let mut set: Vec<Pixel> = Vec::new();
            for (o, track) in fix.observers.iter().enumerate() {
                if !keep(o) {
                    continue;
                }
                for frame in &track.frames[t..t + n] {
                    for p in frame {
                        if !set.contains(p) {
                            set.push(*p);
                        }
                    }
                }
            }
            set
        };
        let mut scores = Vec::new();
        for o in 0..fix.observers.len() {
            let mine = pooled(&|i| i == o);
            let others = pooled(&|i| i != o);
            if mine.is_empty() || others.is_empty() {
                continue;
            }
            let weighted: Vec<(Pixel, f64)> = others.iter().map(|p| (*p, 1.0)).collect();
            let map = direct_blur(&weighted, w, h, sigma, truncation)?;
            let (m, sd) = (mean(&map), population_sd(&map));
            if sd == 0.0 {
                continue;
            }
            let z: f64 = mine.iter().map(|p| (map[(p.y * w + p.x) as usize] - m) / sd).sum();
            scores.push(z / mine.len() as f64);
        }
        let score = if scores.is_empty() {
            None
        } else {
            Some(scores.iter().sum::<f64>() / scores.len() as f64)
        };
        out.push((t as u32, score));
    }
    Ok(out)
}

// ---------------------------------------------------------------- stats

/// `ln Gamma` from the Stirling series after shifting the argument past 10.
pub fn ln_gamma(x: f64) -> f64 {
    let mut shift = 0.0;
    let mut z = x;
    while z < 10.0 {
        shift -= z.ln();
        z += 1.0;
    }
    let z2 = z * z;
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
        - 1.0 / (1680.0 * z * z2 * z2 * z2);
    shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = (a + b) / 2.0;
    let (l, r) = (simpson(f, a, m), simpson(f, m, b));
    if depth == 0 || (l + r - whole).abs() <= 15.0 * eps {
        return l + r + (l + r - whole) / 15.0;
    }
    adaptive(f, a, m, l, eps / 2.0, depth - 1) + adaptive(f, m, b, r, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature to about `1e-13` absolute error.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    // fixed pre-split keeps narrow peaks from being missed
    let pieces = 64;
    let step = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * step, a + (i + 1) as f64 * step);
            adaptive(f, lo, hi, simpson(f, lo, hi), 1e-14, 40)
        })
        .sum()
}

/// Two-sided Student t tail, `1 - 2 * integral of the density over [0, |t|]`.
pub fn t_two_sided_numeric(t: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    (1.0 - 2.0 * integrate(&density, 0.0, t.abs())).clamp(0.0, 1.0)
}

/// Upper tail of the F distribution, integrating the density over
/// `[0, f]` after the substitution `x = u^2`.
pub fn f_upper_numeric(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    let ln_beta = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
    let g = |u: f64| {
        let pow_u = if d1 == 1.0 { 0.0 } else { (d1 - 1.0) * u.ln() };
        let ln = std::f64::consts::LN_2 + d1 / 2.0 * d1.ln() + d2 / 2.0 * d2.ln() + pow_u
            - (d1 + d2) / 2.0 * (d1 * u * u + d2).ln()
            - ln_beta;
        ln.exp()
    };
    (1.0 - integrate(&g, 0.0, f.sqrt())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anova {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p: f64,
}

/// Textbook between/within sums of squares.
pub fn anova(groups: &[Vec<f64>]) -> OracleResult<Anova> {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        for x in g {
            ss_within += (x - m) * (x - m);
        }
    }
    let df_between = (groups.len() - 1) as f64;
    let df_within = (all.len() - groups.len()) as f64;
    if ss_within == 0.0 {
        return Err(OracleError::Undefined("no within-group variance"));
    }
    let f = (ss_between / df_between) / (ss_within / df_within);
    Ok(Anova {
        f,
        df_between,
        df_within,
        p: f_upper_numeric(f, df_between, df_within),
    })
}

fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Pooled-variance two-sample t statistic and its degrees of freedom.
pub fn pooled_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sp2 = ((na - 1.0) * sample_var(a) + (nb - 1.0) * sample_var(b)) / (na + nb - 2.0);
    let t = (mean(a) - mean(b)) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
    (t, na + nb - 2.0)
}

/// Welch statistic with Welch-Satterthwaite degrees of freedom and the
/// two-sided p from numeric integration.
pub fn welch(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (va, vb) = (sample_var(a) / a.len() as f64, sample_var(b) / b.len() as f64);
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    (t, df, t_two_sided_numeric(t, df))
}

/// Pearson r from raw sums, with the t-transform p value.
pub fn pearson(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    let df = n - 2.0;
    let t = r * (df / (1.0 - r * r)).sqrt();
    (r, t_two_sided_numeric(t, df))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirling_matches_factorials() {
        let mut fact = 1.0f64;
        for k in 1..20u32 {
            assert!((ln_gamma(k as f64) - fact.ln()).abs() < 1e-12, "{k}");
            fact *= k as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn cauchy_tail() {
        // df = 1 is Cauchy: two-sided tail 1 - 2 atan(t) / pi
        for t in [0.1, 1.0, 3.0, 20.0] {
            let want = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert!((t_two_sided_numeric(t, 1.0) - want).abs() < 1e-11);
        }
    }

    #[test]
    fn f_tail_with_two_numerator_df() {
        // d1 = 2, d2 = 2: upper tail is 1 / (1 + f)
        for f in [0.2, 1.0, 7.5] {
            assert!((f_upper_numeric(f, 2.0, 2.0) - 1.0 / (1.0 + f)).abs() < 1e-11);
        }
    }

    #[test]
    fn delta_blur_is_stamped_kernel() {
        let (r, k) = gaussian_2d(1.2, 3.0);
        assert_eq!(r, 4);
        let out = direct_blur(&[(Pixel::new(10, 10), 1.0)], 21, 21, 1.2, 3.0).unwrap();
        for dy in -r..=r {
            for dx in -r..=r {
                let v = out[((10 + dy) * 21 + 10 + dx) as usize];
                assert_eq!(v, k[((dy + r) * 9 + dx + r) as usize]);
            }
        }
    }

    #[test]
    fn hull_by_edges() {
        assert_eq!(hull_area(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)]).unwrap(), 50.0);
        assert_eq!(hull_area(&[(0.0, 0.0), (1.0, 1.0), (3.0, 3.0)]).unwrap(), 0.0);
        let sq = [(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (1.0, 1.0)];
        assert_eq!(hull_area(&sq).unwrap(), 16.0);
    }

    #[test]
    fn size_caps_refuse() {
        let big = Heatmap::<f64>::zeros(33, 10);
        assert!(matches!(cc(&big, &big), Err(OracleError::TooLarge(_))));
        assert!(direct_blur(&[], 65, 2, 1.0, 3.0).is_err());
    }
}
