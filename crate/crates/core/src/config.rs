//! Pipeline configuration: a flat `key = value` file, `#` comments allowed.
//! Command-line flags are applied on top with [`PipelineConfig::set`].

use std::path::Path;

use crate::classifier::{Gamma, SvmParams};
use crate::error::{Error, Result};
use crate::features::FeatureChannel;
use crate::geometry::CropGeometry;
use crate::model::DEFAULT_EMBEDDING_DIM;
use crate::synth::GateThresholds;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub channel: FeatureChannel,
    pub embedding_dim: usize,
    /// Scale embeddings to unit norm before differencing.
    pub normalize_embeddings: bool,
    pub svm: SvmParams,
    /// Side of the square canonical crop, in pixels.
    pub crop_size: usize,
    pub seed: u64,
    pub count: usize,
    pub warp_intensity: f64,
    pub gates: GateThresholds,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            channel: FeatureChannel::EmbeddingDiff,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            normalize_embeddings: false,
            svm: SvmParams::default(),
            crop_size: 224,
            seed: 0,
            count: 100,
            warp_intensity: 1.0,
            gates: GateThresholds::default(),
        }
    }
}

/// Recognized keys, in documentation order.
pub const CONFIG_KEYS: [&str; 13] = [
    "channel",
    "dim",
    "normalize",
    "svm_c",
    "svm_gamma",
    "svm_tolerance",
    "crop_size",
    "seed",
    "count",
    "warp_intensity",
    "gate_yaw",
    "gate_lip_gap",
    "gate_landmark_bound",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = number(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!(
            "{key} must be positive, got {value}"
        )))
    }
}

impl PipelineConfig {
    pub fn crop(&self) -> CropGeometry {
        CropGeometry::square(self.crop_size)
    }

    /// Set one key; values are range-checked.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "channel" => {
                self.channel = value
                    .parse()
                    .map_err(|_| Error::Config(format!("unknown channel {value:?}")))?
            }
            "dim" => {
                let d: usize = number(key, value)?;
                if d == 0 {
                    return Err(Error::Config("dim must be at least 1".into()));
                }
                self.embedding_dim = d;
            }
            "normalize" => {
                self.normalize_embeddings = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => {
                        return Err(Error::Config(format!(
                            "normalize: expected true/false, got {value:?}"
                        )))
                    }
                }
            }
            "svm_c" => self.svm.c = positive(key, value)?,
            "svm_gamma" => self.svm.gamma = value.parse::<Gamma>()?,
            "svm_tolerance" => self.svm.tolerance = positive(key, value)?,
            "crop_size" => {
                let s: usize = number(key, value)?;
                if !(16..=4096).contains(&s) {
                    return Err(Error::Config(format!(
                        "crop_size must be in 16..=4096, got {s}"
                    )));
                }
                self.crop_size = s;
            }
            "seed" => self.seed = number(key, value)?,
            "count" => self.count = number(key, value)?,
            "warp_intensity" => {
                let v: f64 = number(key, value)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Config(format!(
                        "warp_intensity must be in [0, 1], got {v}"
                    )));
                }
                self.warp_intensity = v;
            }
            "gate_yaw" => self.gates.max_yaw_asymmetry = positive(key, value)?,
            "gate_lip_gap" => self.gates.max_lip_gap = positive(key, value)?,
            "gate_landmark_bound" => self.gates.landmark_bound = positive(key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; expected one of {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            cfg.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
