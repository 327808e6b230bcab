//! Saliency evaluation metrics between a predicted map and ground truth.
//!
//! All metrics accumulate in `f64` regardless of the map element type.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FixationMap, Heatmap};
use crate::scalar::Scalar;

/// Regularizer added to the normalized prediction in [`kld`].
pub const KLD_EPSILON: f64 = 1e-7;
pub const DEFAULT_AUCB_SPLITS: usize = 100;
pub const DEFAULT_AUCB_NEGATIVES_PER_FIXATION: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "SIM")]
    Sim,
    #[serde(rename = "AUC_J")]
    AucJudd,
    #[serde(rename = "AUC_B")]
    AucBorji,
    #[serde(rename = "NSS")]
    Nss,
    #[serde(rename = "KLD")]
    Kld,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Cc,
        Metric::Sim,
        Metric::AucJudd,
        Metric::AucBorji,
        Metric::Nss,
        Metric::Kld,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cc => "CC",
            Metric::Sim => "SIM",
            Metric::AucJudd => "AUC_J",
            Metric::AucBorji => "AUC_B",
            Metric::Nss => "NSS",
            Metric::Kld => "KLD",
        }
    }

    /// Whether the metric checks against the binary fixation map rather
    /// than the blurred ground truth.
    pub fn uses_fixations(self) -> bool {
        matches!(self, Metric::AucJudd | Metric::AucBorji | Metric::Nss)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::input(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub metric: Metric,
    pub value: f64,
    pub frame_index: u32,
}

/// Parameters of the sampled-negative ROC area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AucBorjiParams {
    pub negatives_per_fixation: usize,
    pub splits: usize,
    pub seed: u64,
}

impl AucBorjiParams {
    pub fn with_seed(seed: u64) -> Self {
        AucBorjiParams {
            negatives_per_fixation: DEFAULT_AUCB_NEGATIVES_PER_FIXATION,
            splits: DEFAULT_AUCB_SPLITS,
            seed,
        }
    }
}

fn same_dims(a: (u32, u32), b: (u32, u32)) -> Result<()> {
    if a != b {
        return Err(Error::input(format!("dimension mismatch {a:?} vs {b:?}")));
    }
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn to_f64<T: Scalar>(m: &Heatmap<T>) -> Vec<f64> {
    m.values().iter().map(|v| v.as_f64()).collect()
}

fn normalized<T: Scalar>(m: &Heatmap<T>, what: &str) -> Result<Vec<f64>> {
    let v = to_f64(m);
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        return Err(Error::input(format!("{what} map sums to zero")));
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// Pearson correlation over all pixel pairs. A single constant map gives 0.
pub fn cc<T: Scalar>(p: &Heatmap<T>, q: &Heatmap<T>) -> Result<f64> {
    same_dims(p.dims(), q.dims())?;
    let (a, b) = (to_f64(p), to_f64(q));
    let (ma, sa) = mean_std(&a);
    let (mb, sb) = mean_std(&b);
    if sa == 0.0 && sb == 0.0 {
        return Err(Error::undefined("correlation of two constant maps"));
    }
    if sa == 0.0 || sb == 0.0 {
        return Ok(0.0);
    }
    let cov = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / a.len() as f64;
    Ok((cov / (sa * sb)).clamp(-1.0, 1.0))
}

/// Histogram intersection of the two maps normalized to unit sum.
pub fn sim<T: Scalar>(p: &Heatmap<T>, q: &Heatmap<T>) -> Result<f64> {
    same_dims(p.dims(), q.dims())?;
    let (a, b) = (normalized(p, "first")?, normalized(q, "second")?);
    let s: f64 = a.iter().zip(&b).map(|(x, y)| x.min(*y)).sum();
    Ok(s.clamp(0.0, 1.0))
}

/// Mean z-scored saliency at the fixated pixels, using the population
/// standard deviation of the whole map.
pub fn nss<T: Scalar>(s: &Heatmap<T>, f: &FixationMap) -> Result<f64> {
    same_dims(s.dims(), (f.width(), f.height()))?;
    if f.is_empty() {
        return Err(Error::input("NSS needs at least one fixation"));
    }
    let v = to_f64(s);
    let (mean, std) = mean_std(&v);
    if std == 0.0 {
        return Err(Error::undefined("NSS of a constant saliency map"));
    }
    let total: f64 = f.points().map(|p| (s.at(p).as_f64() - mean) / std).sum();
    Ok(total / f.len() as f64)
}

/// Splits the map into values at fixations and values elsewhere, both in
/// row-major order.
fn split_by_fixation<T: Scalar>(s: &Heatmap<T>, f: &FixationMap) -> Result<(Vec<f64>, Vec<f64>)> {
    same_dims(s.dims(), (f.width(), f.height()))?;
    let n = s.values().len();
    if f.is_empty() || f.len() == n {
        return Err(Error::input(
            "ROC area needs at least one fixated and one non-fixated pixel",
        ));
    }
    let mask = f.mask();
    let mut pos = Vec::with_capacity(f.len());
    let mut neg = Vec::with_capacity(n - f.len());
    for (v, m) in s.values().iter().zip(mask) {
        if m {
            pos.push(v.as_f64());
        } else {
            neg.push(v.as_f64());
        }
    }
    Ok((pos, neg))
}

/// Trapezoidal ROC area with thresholds at the distinct positive values,
/// counting values at the threshold as detected on both axes.
///
/// The curve runs from (0, 0) through one point per threshold (descending)
/// to (1, 1).
fn roc_area(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut pos = positives.to_vec();
    let mut neg = negatives.to_vec();
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let (mut ip, mut ineg) = (0usize, 0usize);
    let (mut prev_tp, mut prev_fp) = (0.0f64, 0.0f64);
    let mut area = 0.0;
    while ip < pos.len() {
        let t = pos[ip];
        while ip < pos.len() && pos[ip] >= t {
            ip += 1;
        }
        while ineg < neg.len() && neg[ineg] >= t {
            ineg += 1;
        }
        let tp = ip as f64 / np;
        let fp = ineg as f64 / nn;
        area += (fp - prev_fp) * (tp + prev_tp) / 2.0;
        prev_tp = tp;
        prev_fp = fp;
    }
    area += (1.0 - prev_fp) * (1.0 + prev_tp) / 2.0;
    area
}

/// ROC area with every non-fixated pixel as a negative.
pub fn auc_judd<T: Scalar>(s: &Heatmap<T>, f: &FixationMap) -> Result<f64> {
    let (pos, neg) = split_by_fixation(s, f)?;
    Ok(roc_area(&pos, &neg))
}

/// ROC area against uniformly sampled non-fixated pixels, averaged over
/// splits.
///
/// Sampling contract: a `ChaCha8Rng` seeded with `params.seed` draws, for
/// each split in turn, `negatives_per_fixation * |F|` indices with
/// `gen_range(0..m)` into the `m` non-fixated pixels in row-major order
/// (with replacement). The split areas are summed in order and divided by
/// the split count.
pub fn auc_borji<T: Scalar>(s: &Heatmap<T>, f: &FixationMap, params: AucBorjiParams) -> Result<f64> {
    if params.splits == 0 || params.negatives_per_fixation == 0 {
        return Err(Error::input("AUC-B needs at least one split and one negative"));
    }
    let (pos, neg) = split_by_fixation(s, f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let k = params.negatives_per_fixation * pos.len();
    let mut sampled = vec![0.0; k];
    let mut total = 0.0;
    for _ in 0..params.splits {
        for slot in sampled.iter_mut() {
            *slot = neg[rng.gen_range(0..neg.len())];
        }
        total += roc_area(&pos, &sampled);
    }
    Ok(total / params.splits as f64)
}

/// Divergence of the prediction `p` from the ground truth `q`.
///
/// Both maps are normalized to unit sum; the prediction is regularized as
/// `(p + eps) / (1 + n * eps)` so it stays a distribution. Terms with
/// `q = 0` contribute nothing.
pub fn kld<T: Scalar>(p: &Heatmap<T>, q: &Heatmap<T>) -> Result<f64> {
    kld_with_epsilon(p, q, KLD_EPSILON)
}

pub fn kld_with_epsilon<T: Scalar>(p: &Heatmap<T>, q: &Heatmap<T>, eps: f64) -> Result<f64> {
    same_dims(p.dims(), q.dims())?;
    if !(eps >= 0.0) {
        return Err(Error::input("KLD epsilon must be non-negative"));
    }
    let (a, b) = (normalized(p, "predicted")?, normalized(q, "ground truth")?);
    let norm = 1.0 + a.len() as f64 * eps;
    let mut total = 0.0;
    for (pv, qv) in a.iter().zip(&b) {
        if *qv > 0.0 {
            let pr = (pv + eps) / norm;
            total += qv * (qv / pr).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Evaluates one metric; fixation-based metrics read `fixations`, the
/// distribution metrics read `truth`.
pub fn evaluate<T: Scalar>(
    metric: Metric,
    prediction: &Heatmap<T>,
    truth: &Heatmap<T>,
    fixations: &FixationMap,
    aucb: AucBorjiParams,
) -> Result<f64> {
    match metric {
        Metric::Cc => cc(prediction, truth),
        Metric::Sim => sim(prediction, truth),
        Metric::AucJudd => auc_judd(prediction, fixations),
        Metric::AucBorji => auc_borji(prediction, fixations, aucb),
        Metric::Nss => nss(prediction, fixations),
        Metric::Kld => kld(prediction, truth),
    }
}
