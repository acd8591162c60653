//! Evaluation metrics over simulation traces: per-level quality scores,
//! inter-arrival and jitter statistics, fairness, and the weighted composite
//! QoE score.

use crate::catalog::ResolutionCatalog;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("level {0} has no configured VMAF range")]
    UnknownLevel(usize),
    #[error("fairness is undefined for an all-zero allocation")]
    AllZero,
    #[error("composite input `{0}` = {1} outside [0, 1]")]
    OutOfRange(&'static str, f64),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic per-chunk quality score: a seeded uniform draw within the
/// level's configured VMAF range. The same `(level, seed, chunk)` triple
/// always produces the same score.
pub fn vmaf_for_level(
    catalog: &ResolutionCatalog,
    level: usize,
    seed: u64,
    chunk: u64,
) -> Result<f64, MetricsError> {
    let (lo, hi) = catalog
        .vmaf_range(level)
        .ok_or(MetricsError::UnknownLevel(level))?;
    let h = splitmix64(seed ^ splitmix64((level as u64) << 32 ^ chunk));
    let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
    Ok(lo + unit * (hi - lo))
}

/// Smoothed jitter recurrence `J(i) = J(i-1) + (|D(i)| - J(i-1)) / 16` with
/// `J(0) = 0`; returns the whole sequence.
pub fn rfc3550_jitter(abs_deviations: &[f64]) -> Vec<f64> {
    let mut j = 0.0;
    abs_deviations
        .iter()
        .map(|d| {
            j += (d.abs() - j) / 16.0;
            j
        })
        .collect()
}

/// Absolute deviations between consecutive inter-arrival intervals, the
/// `|D|` input to [`rfc3550_jitter`]. No request-frequency adjustment is
/// applied; these are raw timings.
pub fn interarrival_deviations(arrivals: &[f64]) -> Vec<f64> {
    let gaps: Vec<f64> = arrivals.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`, in `[1/n, 1]`.
pub fn jain_index(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() || values.iter().all(|v| *v == 0.0) {
        return Err(MetricsError::AllZero);
    }
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|v| v * v).sum();
    Ok(sum * sum / (values.len() as f64 * sq))
}

/// Weighted composite QoE over normalized inputs; quality and fairness
/// dominate, jitter and startup penalize.
pub fn composite_qoe(
    vmaf: f64,
    fairness: f64,
    buffer: f64,
    jitter: f64,
    startup: f64,
) -> Result<f64, MetricsError> {
    for (name, v) in [
        ("vmaf", vmaf),
        ("fairness", fairness),
        ("buffer", buffer),
        ("jitter", jitter),
        ("startup", startup),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricsError::OutOfRange(name, v));
        }
    }
    Ok((0.4 * vmaf + 0.2 * fairness + 0.15 * buffer + 0.15 * (1.0 - jitter)
        + 0.1 * (1.0 - startup))
        .max(0.0))
}

/// Normalizers anchoring each composite term: VMAF to its 100-point scale,
/// buffer to a 10 s healthy target, jitter to a 100 ms ceiling, startup to
/// the 3 s excellence threshold.
pub fn normalize_vmaf(v: f64) -> f64 {
    (v / 100.0).clamp(0.0, 1.0)
}

pub fn normalize_buffer(seconds: f64) -> f64 {
    (seconds.min(10.0) / 10.0).clamp(0.0, 1.0)
}

pub fn normalize_jitter(ms: f64) -> f64 {
    (ms.min(100.0) / 100.0).clamp(0.0, 1.0)
}

pub fn normalize_startup(seconds: f64) -> f64 {
    (seconds.min(3.0) / 3.0).clamp(0.0, 1.0)
}

/// Everything a client's run left behind, as consumed by the report builder.
#[derive(Debug, Clone, Serialize)]
pub struct ClientTrace {
    pub client_id: u32,
    /// Chunk arrival times, seconds, strictly increasing.
    pub arrivals_s: Vec<f64>,
    /// Delivered level (1-based) per arrived chunk.
    pub levels: Vec<usize>,
    /// Buffer level samples, seconds.
    pub buffer_samples_s: Vec<f64>,
    /// Time to first playable buffer fill, when playback started.
    pub startup_s: Option<f64>,
    /// Client abandoned at least one chunk and fell back to a lower level.
    pub downgraded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClientMetrics {
    pub client_id: u32,
    pub chunks: usize,
    pub mean_vmaf: f64,
    pub p95_vmaf: f64,
    pub mean_interarrival_ms: f64,
    pub p95_interarrival_ms: f64,
    pub jitter_ms: f64,
    pub startup_s: f64,
    pub mean_buffer_s: f64,
    pub mean_level_height: f64,
    pub downgraded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateMetrics {
    pub jain_index: f64,
    pub composite_qoe: f64,
    pub unserved: usize,
    pub mean_vmaf: f64,
    pub mean_interarrival_ms: f64,
    pub mean_jitter_ms: f64,
    pub mean_startup_s: f64,
    pub mean_buffer_s: f64,
}

/// Full report; `schema` is bumped on layout changes.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub schema: u32,
    pub per_client: Vec<ClientMetrics>,
    pub aggregate: AggregateMetrics,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Nearest-rank 95th percentile.
fn p95(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Build the full report from per-client traces. `unserved` counts users the
/// optimizer could not assign any level.
pub fn build_report(
    catalog: &ResolutionCatalog,
    seed: u64,
    traces: &[ClientTrace],
    unserved: usize,
) -> Result<MetricsReport, MetricsError> {
    let mut per_client = Vec::with_capacity(traces.len());
    for t in traces {
        let vmaf: Vec<f64> = t
            .levels
            .iter()
            .enumerate()
            .map(|(chunk, &level)| vmaf_for_level(catalog, level, seed, chunk as u64))
            .collect::<Result<_, _>>()?;
        let gaps_ms: Vec<f64> = t
            .arrivals_s
            .windows(2)
            .map(|w| (w[1] - w[0]) * 1e3)
            .collect();
        let jitter_seq = rfc3550_jitter(
            &interarrival_deviations(&t.arrivals_s)
                .iter()
                .map(|d| d * 1e3)
                .collect::<Vec<_>>(),
        );
        let heights: Vec<f64> = t
            .levels
            .iter()
            .map(|&l| f64::from(catalog.levels[l - 1].pixel_height))
            .collect();
        per_client.push(ClientMetrics {
            client_id: t.client_id,
            chunks: t.arrivals_s.len(),
            mean_vmaf: mean(&vmaf),
            p95_vmaf: p95(&vmaf),
            mean_interarrival_ms: mean(&gaps_ms),
            p95_interarrival_ms: p95(&gaps_ms),
            jitter_ms: jitter_seq.last().copied().unwrap_or(0.0),
            startup_s: t.startup_s.unwrap_or(0.0),
            mean_buffer_s: mean(&t.buffer_samples_s),
            mean_level_height: mean(&heights),
            downgraded: t.downgraded,
        });
    }

    let heights: Vec<f64> = per_client.iter().map(|c| c.mean_level_height).collect();
    let jain = jain_index(&heights)?;
    let mean_vmaf = mean(&per_client.iter().map(|c| c.mean_vmaf).collect::<Vec<_>>());
    let mean_ia = mean(
        &per_client
            .iter()
            .map(|c| c.mean_interarrival_ms)
            .collect::<Vec<_>>(),
    );
    let mean_jit = mean(&per_client.iter().map(|c| c.jitter_ms).collect::<Vec<_>>());
    let mean_startup = mean(&per_client.iter().map(|c| c.startup_s).collect::<Vec<_>>());
    let mean_buffer = mean(&per_client.iter().map(|c| c.mean_buffer_s).collect::<Vec<_>>());
    let qoe = composite_qoe(
        normalize_vmaf(mean_vmaf),
        jain,
        normalize_buffer(mean_buffer),
        normalize_jitter(mean_jit),
        normalize_startup(mean_startup),
    )?;

    Ok(MetricsReport {
        schema: 1,
        per_client,
        aggregate: AggregateMetrics {
            jain_index: jain,
            composite_qoe: qoe,
            unserved,
            mean_vmaf,
            mean_interarrival_ms: mean_ia,
            mean_jitter_ms: mean_jit,
            mean_startup_s: mean_startup,
            mean_buffer_s: mean_buffer,
        },
    })
}

impl MetricsReport {
    /// Per-client CSV for plotting.
    pub fn per_client_csv(&self) -> String {
        let mut out = String::from(
            "client_id,chunks,mean_vmaf,p95_vmaf,mean_interarrival_ms,p95_interarrival_ms,jitter_ms,startup_s,mean_buffer_s,mean_level_height,downgraded\n",
        );
        for c in &self.per_client {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
                c.client_id,
                c.chunks,
                c.mean_vmaf,
                c.p95_vmaf,
                c.mean_interarrival_ms,
                c.p95_interarrival_ms,
                c.jitter_ms,
                c.startup_s,
                c.mean_buffer_s,
                c.mean_level_height,
                c.downgraded
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vmaf_draws_stay_in_range_and_repeat() {
        let cat = ResolutionCatalog::default_ladder();
        for seed in 0..50u64 {
            let top = vmaf_for_level(&cat, 6, seed, 0).unwrap();
            assert!((95.0..=98.0).contains(&top), "8K draw {top}");
            let low = vmaf_for_level(&cat, 1, seed, 3).unwrap();
            assert!((50.0..=75.0).contains(&low), "480p draw {low}");
        }
        let a = vmaf_for_level(&cat, 3, 9, 7).unwrap();
        let b = vmaf_for_level(&cat, 3, 9, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_vmaf_range_is_an_error() {
        let mut cat = ResolutionCatalog::default_ladder();
        cat.levels[0].pixel_height = 333;
        cat.levels[0].vmaf_range = None;
        assert_eq!(
            vmaf_for_level(&cat, 1, 0, 0).unwrap_err(),
            MetricsError::UnknownLevel(1)
        );
    }

    #[test]
    fn jitter_recurrence_exact_values() {
        assert!(rfc3550_jitter(&[]).is_empty());
        // all-zero deviations stay at zero
        assert_eq!(rfc3550_jitter(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        // first |D| = 16 -> J(1) = 1
        assert_eq!(rfc3550_jitter(&[16.0])[0], 1.0);
        // constant |D| converges monotonically to it
        let seq = rfc3550_jitter(&vec![8.0; 200]);
        for w in seq.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!((seq.last().unwrap() - 8.0).abs() < 1e-4);
    }

    #[test]
    fn jitter_bounded_by_max_deviation() {
        let devs = [3.0, 9.0, 1.0, 4.0, 2.5];
        let seq = rfc3550_jitter(&devs);
        let max = devs.iter().cloned().fold(0.0f64, f64::max);
        assert!(seq.iter().all(|j| *j <= max));
    }

    #[test]
    fn jain_reference_values() {
        assert_eq!(jain_index(&[5.0, 5.0, 5.0]).unwrap(), 1.0);
        let lower = jain_index(&[1.0, 0.0, 0.0]).unwrap();
        assert!((lower - 1.0 / 3.0).abs() < 1e-12);
        assert!((jain_index(&[1.0, 3.0]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(jain_index(&[0.0, 0.0]).unwrap_err(), MetricsError::AllZero);
    }

    #[test]
    fn composite_reference_values() {
        assert_eq!(composite_qoe(1.0, 1.0, 1.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(composite_qoe(0.0, 0.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
        let v = composite_qoe(0.8, 0.9, 1.0, 0.2, 0.33).unwrap();
        assert!((v - 0.837).abs() < 1e-12);
        assert_eq!(
            composite_qoe(1.2, 0.0, 0.0, 0.0, 0.0).unwrap_err(),
            MetricsError::OutOfRange("vmaf", 1.2)
        );
    }

    #[test]
    fn deviations_from_arrivals() {
        // gaps 1.0, 3.0, 2.0 -> |D| = [2.0, 1.0]
        let d = interarrival_deviations(&[0.0, 1.0, 4.0, 6.0]);
        assert_eq!(d, vec![2.0, 1.0]);
    }

    #[test]
    fn p95_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(p95(&v), 95.0);
        assert_eq!(p95(&[7.0]), 7.0);
    }
}
