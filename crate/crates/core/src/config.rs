//! Run configuration shared by every pipeline stage and echoed into
//! report headers.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::DEFAULT_MIN_VALID_RATE;
use crate::ioc::{IocConfig, DEFAULT_WINDOW, SHORT_WINDOW};
use crate::metrics::{AucBorjiParams, DEFAULT_AUCB_NEGATIVES_PER_FIXATION, DEFAULT_AUCB_SPLITS, KLD_EPSILON};
use crate::model::DEFAULT_PX_PER_DEGREE;
use crate::saliency::{DEFAULT_PRIOR_SIGMA_FRACTION, DEFAULT_SKIP_FIRST, DEFAULT_TRUNCATION, REFERENCE_GRID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sigma_px: f64,
    pub truncation: f64,
    /// IOC window for shot-level analysis.
    pub window: usize,
    /// IOC window for the cut-drop analysis.
    pub cut_window: usize,
    pub cut_pre_frames: u32,
    pub cut_post_frames: u32,
    pub min_observers: usize,
    pub skip_first: usize,
    pub min_valid_rate: f64,
    pub prior_sigma_fraction: f64,
    pub reference_width: u32,
    pub reference_height: u32,
    pub kld_epsilon: f64,
    pub aucb_seed: u64,
    pub aucb_splits: usize,
    pub aucb_negatives_per_fixation: usize,
    /// Clips left out of the IOC versus shot-length correlation.
    pub correlation_exclude: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sigma_px: DEFAULT_PX_PER_DEGREE,
            truncation: DEFAULT_TRUNCATION,
            window: DEFAULT_WINDOW,
            cut_window: SHORT_WINDOW,
            cut_pre_frames: SHORT_WINDOW as u32,
            cut_post_frames: SHORT_WINDOW as u32,
            min_observers: 2,
            skip_first: DEFAULT_SKIP_FIRST,
            min_valid_rate: DEFAULT_MIN_VALID_RATE,
            prior_sigma_fraction: DEFAULT_PRIOR_SIGMA_FRACTION,
            reference_width: REFERENCE_GRID.0,
            reference_height: REFERENCE_GRID.1,
            kld_epsilon: KLD_EPSILON,
            aucb_seed: 0,
            aucb_splits: DEFAULT_AUCB_SPLITS,
            aucb_negatives_per_fixation: DEFAULT_AUCB_NEGATIVES_PER_FIXATION,
            correlation_exclude: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::format(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.ioc(self.window).validate()?;
        self.ioc(self.cut_window).validate()?;
        if !(0.0..=1.0).contains(&self.min_valid_rate) {
            return Err(Error::input("min_valid_rate must lie in [0, 1]"));
        }
        if !(self.prior_sigma_fraction > 0.0) || !(self.truncation > 0.0) {
            return Err(Error::input("prior sigma fraction and truncation must be positive"));
        }
        if self.aucb_splits == 0 || self.aucb_negatives_per_fixation == 0 {
            return Err(Error::input("AUC-B needs at least one split and one negative"));
        }
        if self.reference_width == 0 || self.reference_height == 0 {
            return Err(Error::input("reference grid needs non-zero dimensions"));
        }
        Ok(())
    }

    pub fn ioc(&self, window: usize) -> IocConfig {
        IocConfig {
            window,
            sigma_px: self.sigma_px,
            truncation: self.truncation,
            min_observers: self.min_observers,
        }
    }

    pub fn aucb(&self) -> AucBorjiParams {
        AucBorjiParams {
            negatives_per_fixation: self.aucb_negatives_per_fixation,
            splits: self.aucb_splits,
            seed: self.aucb_seed,
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Metadata lines written at the top of every report.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("tool".to_string(), format!("cinegaze {}", crate::TOOL_VERSION)),
            ("config_hash".to_string(), self.hash()),
        ];
        let table: toml::Table = toml::from_str(&self.to_toml()).expect("config round-trips");
        for (k, v) in table {
            h.push((k, v.to_string()));
        }
        h.push((
            "kld_definition".into(),
            "sum q*ln(q/p'), p' = (p + eps)/(1 + n*eps) on unit-sum maps".into(),
        ));
        h.push(("ioc_stride".into(), "1".into()));
        h.push(("ioc_partial_windows".into(), "dropped".into()));
        h.push((
            "ioc_eligibility".into(),
            "observers without window fixations skipped; window absent when none scored".into(),
        ));
        h
    }
}
