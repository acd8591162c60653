//! Resolution ladder: per-level bandwidth, pixel height, and quality score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One rung of the resolution ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    /// Vertical resolution in pixels (e.g. 1080).
    pub pixel_height: u32,
    /// Bandwidth required to stream this level, Mbps.
    pub bandwidth_mbps: f64,
    /// Perceptual-quality score range for this level, `[lo, hi]` on the
    /// 0–100 VMAF scale. Defaults per pixel height when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmaf_range: Option<(f64, f64)>,
}

/// The quality ladder: `L` levels with strictly increasing bandwidth and
/// pixel height, plus the log-quality model constants `a` and `b`.
///
/// The quality score of level `l` (1-based) is
/// `Q_l = a + b * ln(R_l / R_1)` where `R_l` is the pixel height, so
/// `Q_1 = a` and the score is strictly increasing for `b > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionCatalog {
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    pub levels: Vec<LevelSpec>,
}

fn default_a() -> f64 {
    1.0
}

fn default_b() -> f64 {
    1.0
}

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("catalog has no levels")]
    Empty,
    #[error("level {0} out of range 1..={1}")]
    LevelOutOfRange(usize, usize),
}

/// Default VMAF score range for a given pixel height. The 720p entry is an
/// interpolation between its neighbors; the rest follow the standard tiers.
pub fn default_vmaf_range(pixel_height: u32) -> Option<(f64, f64)> {
    match pixel_height {
        480 => Some((50.0, 75.0)),
        720 => Some((60.0, 80.0)),
        1080 => Some((65.0, 85.0)),
        1440 => Some((70.0, 85.0)),
        2160 => Some((80.0, 95.0)),
        4320 => Some((95.0, 98.0)),
        _ => None,
    }
}

impl ResolutionCatalog {
    pub fn new(a: f64, b: f64, levels: Vec<LevelSpec>) -> Self {
        Self { a, b, levels }
    }

    /// The 480p–8K ladder used when a scenario does not supply its own.
    pub fn default_ladder() -> Self {
        let heights_bw = [
            (480u32, 1.5),
            (720, 3.0),
            (1080, 6.0),
            (1440, 12.0),
            (2160, 25.0),
            (4320, 80.0),
        ];
        let levels = heights_bw
            .iter()
            .map(|&(pixel_height, bandwidth_mbps)| LevelSpec {
                pixel_height,
                bandwidth_mbps,
                vmaf_range: default_vmaf_range(pixel_height),
            })
            .collect();
        Self::new(1.0, 1.0, levels)
    }

    /// Number of levels `L`.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Quality score `Q_l` for a 1-based level.
    pub fn quality(&self, level: usize) -> Result<f64, CatalogError> {
        if self.levels.is_empty() {
            return Err(CatalogError::Empty);
        }
        if level < 1 || level > self.levels.len() {
            return Err(CatalogError::LevelOutOfRange(level, self.levels.len()));
        }
        let r1 = f64::from(self.levels[0].pixel_height);
        let rl = f64::from(self.levels[level - 1].pixel_height);
        Ok(self.a + self.b * (rl / r1).ln())
    }

    /// Quality scores for all levels, `Q_1..Q_L` (0-based vector).
    pub fn qualities(&self) -> Vec<f64> {
        (1..=self.levels.len())
            .map(|l| self.quality(l).expect("level in range"))
            .collect()
    }

    /// Bandwidths `B_1..B_L` (0-based vector), Mbps.
    pub fn bandwidths(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.bandwidth_mbps).collect()
    }

    /// VMAF range for a 1-based level: the explicit range when configured,
    /// otherwise the default for the level's pixel height.
    pub fn vmaf_range(&self, level: usize) -> Option<(f64, f64)> {
        let spec = self.levels.get(level.checked_sub(1)?)?;
        spec.vmaf_range
            .or_else(|| default_vmaf_range(spec.pixel_height))
    }

    /// Display name of a 1-based level, e.g. `1080p`.
    pub fn level_name(&self, level: usize) -> String {
        match self.levels.get(level.wrapping_sub(1)) {
            Some(spec) => format!("{}p", spec.pixel_height),
            None => format!("level{level}"),
        }
    }

    /// Catalog invariant violations, as human-readable strings.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.levels.is_empty() {
            out.push("catalog has no levels".to_string());
            return out;
        }
        for (i, spec) in self.levels.iter().enumerate() {
            if !(spec.bandwidth_mbps > 0.0) {
                out.push(format!("level {}: bandwidth must be > 0", i + 1));
            }
            if let Some((lo, hi)) = spec.vmaf_range {
                if !(lo <= hi) {
                    out.push(format!("level {}: empty vmaf range", i + 1));
                }
            }
        }
        for w in self.levels.windows(2) {
            if w[1].bandwidth_mbps <= w[0].bandwidth_mbps {
                out.push(format!(
                    "bandwidth not strictly increasing at {} -> {} Mbps",
                    w[0].bandwidth_mbps, w[1].bandwidth_mbps
                ));
            }
            if w[1].pixel_height <= w[0].pixel_height {
                out.push(format!(
                    "pixel height not strictly increasing at {} -> {}",
                    w[0].pixel_height, w[1].pixel_height
                ));
            }
        }
        out
    }
}
