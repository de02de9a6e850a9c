//! Feature channels computed from a reference/probe pair.
//!
//! * `embedding_diff`: element-wise difference of deep face embeddings.
//! * `landmark_diff`: difference of eye-normalized landmark coordinates
//!   (68 x-differences followed by 68 y-differences).
//! * `lbp_grid`: per-cell LBP histograms of both aligned faces, concatenated.
//! * `probe_only`: the probe embedding on its own.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_landmarks, AlignedFace};
use crate::model::{Embedding, LandmarkSet, RasterImage, LANDMARK_COUNT};

/// Grid of LBP cells per image side.
pub const LBP_GRID: usize = 4;
pub const LBP_BINS: usize = 256;
/// Length of one image's LBP descriptor (16 cells × 256 bins).
pub const LBP_IMAGE_DIM: usize = LBP_GRID * LBP_GRID * LBP_BINS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureChannel {
    EmbeddingDiff,
    LandmarkDiff,
    LbpGrid,
    ProbeOnly,
}

impl FeatureChannel {
    pub const ALL: [FeatureChannel; 4] = [
        FeatureChannel::EmbeddingDiff,
        FeatureChannel::LandmarkDiff,
        FeatureChannel::LbpGrid,
        FeatureChannel::ProbeOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureChannel::EmbeddingDiff => "embedding_diff",
            FeatureChannel::LandmarkDiff => "landmark_diff",
            FeatureChannel::LbpGrid => "lbp_grid",
            FeatureChannel::ProbeOnly => "probe_only",
        }
    }

    /// Output length for a given embedding dimension.
    pub fn dim(self, embedding_dim: usize) -> usize {
        match self {
            FeatureChannel::EmbeddingDiff | FeatureChannel::ProbeOnly => embedding_dim,
            FeatureChannel::LandmarkDiff => 2 * LANDMARK_COUNT,
            FeatureChannel::LbpGrid => 2 * LBP_IMAGE_DIM,
        }
    }
}

impl fmt::Display for FeatureChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureChannel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownToken {
                kind: "feature channel",
                token: s.to_string(),
                line: 0,
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub channel: FeatureChannel,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(channel: FeatureChannel, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{channel} feature entry {i} is not finite"
            )));
        }
        Ok(Self { channel, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn unit_scaled(values: &[f64]) -> Vec<f64> {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter().map(|v| v / norm).collect()
    } else {
        values.to_vec()
    }
}

/// `reference - probe`, optionally after scaling both to unit norm.
pub fn embedding_difference(
    reference: &Embedding,
    probe: &Embedding,
    normalize: bool,
) -> Result<FeatureVector> {
    if reference.dim() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            actual: probe.dim(),
        });
    }
    let values = if normalize {
        let r = unit_scaled(reference.values());
        let p = unit_scaled(probe.values());
        r.iter().zip(&p).map(|(a, b)| a - b).collect()
    } else {
        reference
            .values()
            .iter()
            .zip(probe.values())
            .map(|(a, b)| a - b)
            .collect()
    };
    FeatureVector::new(FeatureChannel::EmbeddingDiff, values)
}

/// Eye-normalized landmark difference: 68 x-differences then 68
/// y-differences, reference minus probe.
pub fn landmark_difference(reference: &LandmarkSet, probe: &LandmarkSet) -> Result<FeatureVector> {
    let r = normalize_landmarks(reference)?;
    let p = normalize_landmarks(probe)?;
    let mut values = Vec::with_capacity(2 * LANDMARK_COUNT);
    values.extend(r.iter().zip(&p).map(|(a, b)| a.x - b.x));
    values.extend(r.iter().zip(&p).map(|(a, b)| a.y - b.y));
    FeatureVector::new(FeatureChannel::LandmarkDiff, values)
}

pub fn probe_only_feature(probe: &Embedding) -> FeatureVector {
    FeatureVector {
        channel: FeatureChannel::ProbeOnly,
        values: probe.values().to_vec(),
    }
}

/// Neighbor offsets `(row, col)` in bit order: clockwise from the top-left.
pub const LBP_NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

/// Radius-1 LBP code of a 3×3 patch `[row][col]`; bit `b` is set when
/// neighbor `b` is at least the center.
pub fn lbp_code(patch: &[[u8; 3]; 3]) -> u8 {
    let center = patch[1][1];
    LBP_NEIGHBORS
        .iter()
        .enumerate()
        .fold(0u8, |code, (bit, &(dr, dc))| {
            let v = patch[(1 + dr) as usize][(1 + dc) as usize];
            if v >= center {
                code | (1 << bit)
            } else {
                code
            }
        })
}

/// Luma `round(0.299 R + 0.587 G + 0.114 B)` in exact integer arithmetic.
pub fn grayscale(image: &RasterImage) -> Vec<u8> {
    image
        .pixels()
        .chunks_exact(3)
        .map(|p| ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8)
        .collect()
}

/// Per-cell LBP histograms over a 4×4 grid, row-major cell order. Each cell
/// only histograms pixels whose full 3×3 neighborhood lies inside the cell.
pub fn lbp_histograms(image: &RasterImage) -> Result<Vec<f64>> {
    let (w, h) = (image.width(), image.height());
    if w % LBP_GRID != 0 || h % LBP_GRID != 0 {
        return Err(Error::InvalidInput(format!(
            "{w}x{h} image does not divide into a {LBP_GRID}x{LBP_GRID} grid"
        )));
    }
    let (cw, ch) = (w / LBP_GRID, h / LBP_GRID);
    if cw < 3 || ch < 3 {
        return Err(Error::InvalidInput(format!(
            "LBP cells of {cw}x{ch} pixels have no interior"
        )));
    }
    let gray = grayscale(image);
    let mut hist = vec![0.0; LBP_IMAGE_DIM];
    for gy in 0..LBP_GRID {
        for gx in 0..LBP_GRID {
            let bins = &mut hist[(gy * LBP_GRID + gx) * LBP_BINS..][..LBP_BINS];
            for y in gy * ch + 1..(gy + 1) * ch - 1 {
                for x in gx * cw + 1..(gx + 1) * cw - 1 {
                    let mut patch = [[0u8; 3]; 3];
                    for (r, row) in patch.iter_mut().enumerate() {
                        for (c, v) in row.iter_mut().enumerate() {
                            *v = gray[(y + r - 1) * w + (x + c - 1)];
                        }
                    }
                    bins[lbp_code(&patch) as usize] += 1.0;
                }
            }
        }
    }
    Ok(hist)
}

/// LBP grid descriptor of the reference followed by that of the probe.
pub fn lbp_grid_features(reference: &AlignedFace, probe: &AlignedFace) -> Result<FeatureVector> {
    let (r, p) = (&reference.image, &probe.image);
    if (r.width(), r.height()) != (p.width(), p.height()) {
        return Err(Error::InvalidInput(format!(
            "aligned face sizes differ: {}x{} vs {}x{}",
            r.width(),
            r.height(),
            p.width(),
            p.height()
        )));
    }
    let mut values = lbp_histograms(r)?;
    values.extend(lbp_histograms(p)?);
    FeatureVector::new(FeatureChannel::LbpGrid, values)
}
