//! SR, OSR, SPL and NE with full/easy/hard breakdowns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{Difficulty, Episode, EpisodeResult, Outcome};
use crate::geometry::{path_length, Trajectory, Vec3};
use crate::Real;

pub const SUCCESS_RADIUS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("episode {0} has an empty executed trajectory")]
    EmptyTrajectory(String),
    #[error("no episodes to aggregate")]
    Empty,
    #[error("result {result} does not belong to episode {episode}")]
    Mismatch { result: String, episode: String },
}

/// What oracle success measures proximity to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Any executed point within the success radius of the target.
    #[default]
    Goal,
    /// Any executed point within the success radius of any ground-truth sample.
    Path,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats<T> {
    pub success: T,
    pub oracle_success: T,
    pub ne: T,
    pub spl: T,
    pub difficulty: Difficulty,
}

/// Per-episode terms from raw geometry.
pub fn stats_from_parts<T: Real>(
    executed: &Trajectory<T>,
    gt: &Trajectory<T>,
    target: Vec3<T>,
    success: bool,
    final_distance: T,
    radius: T,
    mode: OracleMode,
) -> Option<EpisodeStats<T>> {
    if executed.is_empty() {
        return None;
    }
    let l = path_length(gt);
    let p = path_length(executed);
    let s = if success { T::one() } else { T::zero() };
    let near = match mode {
        OracleMode::Goal => executed.poses().any(|e| (e.position() - target).norm() <= radius),
        // a successful landing already satisfies the oracle
        OracleMode::Path => success || executed.poses().any(|e| gt.poses().any(|g| (e.position() - g.position()).norm() <= radius)),
    };
    let denom = p.max(l);
    let spl = if denom > T::zero() { s * l / denom } else { s };
    Some(EpisodeStats {
        success: s,
        oracle_success: if near { T::one() } else { T::zero() },
        ne: final_distance,
        spl,
        difficulty: Difficulty::from_path_length(l.to_f64().unwrap_or(f64::INFINITY)),
    })
}

pub fn episode_stats(result: &EpisodeResult, episode: &Episode, mode: OracleMode) -> Result<EpisodeStats<f64>, MetricsError> {
    if result.episode_id != episode.id {
        return Err(MetricsError::Mismatch { result: result.episode_id.clone(), episode: episode.id.clone() });
    }
    stats_from_parts(
        &result.executed,
        &episode.gt_traj,
        episode.target.position,
        result.outcome == Outcome::Success,
        result.final_distance,
        SUCCESS_RADIUS,
        mode,
    )
    .ok_or_else(|| MetricsError::EmptyTrajectory(result.episode_id.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub n_episodes: usize,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    pub ne: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_episodes: usize,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    pub ne: f64,
    /// Keys `full`, `easy`, `hard`; a subset with no episodes is omitted.
    pub breakdown: BTreeMap<String, MetricRow>,
}

fn row<T: Real>(stats: &[&EpisodeStats<T>]) -> MetricRow {
    let n = T::from_usize(stats.len()).expect("count fits");
    let hundred = T::lit(100.0);
    let mean = |f: fn(&EpisodeStats<T>) -> T| stats.iter().fold(T::zero(), |a, s| a + f(s)) / n;
    let f = |v: T| v.to_f64().expect("finite metric");
    MetricRow {
        n_episodes: stats.len(),
        sr: f(hundred * mean(|s| s.success)),
        osr: f(hundred * mean(|s| s.oracle_success)),
        spl: f(hundred * mean(|s| s.spl)),
        ne: f(mean(|s| s.ne)),
    }
}

pub fn aggregate<T: Real>(stats: &[EpisodeStats<T>]) -> Result<MetricReport, MetricsError> {
    if stats.is_empty() {
        return Err(MetricsError::Empty);
    }
    let all: Vec<&EpisodeStats<T>> = stats.iter().collect();
    let full = row(&all);
    let mut breakdown = BTreeMap::new();
    breakdown.insert("full".to_string(), full);
    for (name, d) in [("easy", Difficulty::Easy), ("hard", Difficulty::Hard)] {
        let part: Vec<&EpisodeStats<T>> = stats.iter().filter(|s| s.difficulty == d).collect();
        if !part.is_empty() {
            breakdown.insert(name.to_string(), row(&part));
        }
    }
    Ok(MetricReport { n_episodes: full.n_episodes, sr: full.sr, osr: full.osr, spl: full.spl, ne: full.ne, breakdown })
}

/// Pairs results with episodes by id and aggregates. Errored results are skipped
/// and counted separately.
pub fn evaluate(results: &[EpisodeResult], episodes: &[Episode], mode: OracleMode) -> Result<(MetricReport, usize), MetricsError> {
    let by_id: BTreeMap<&str, &Episode> = episodes.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut stats = Vec::new();
    let mut errored = 0;
    for r in results {
        if r.outcome == Outcome::Errored {
            errored += 1;
            continue;
        }
        let ep = by_id
            .get(r.episode_id.as_str())
            .ok_or_else(|| MetricsError::Mismatch { result: r.episode_id.clone(), episode: "<none>".into() })?;
        stats.push(episode_stats(r, ep, mode)?);
    }
    Ok((aggregate(&stats)?, errored))
}

impl MetricReport {
    /// Human table with two decimals: NE, SR, OSR, SPL for each subset.
    pub fn to_table(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "{:<6} {:>6} {:>8} {:>8} {:>8} {:>8}", "split", "n", "NE", "SR", "OSR", "SPL");
        for key in ["full", "easy", "hard"] {
            match self.breakdown.get(key) {
                Some(r) => {
                    let _ = writeln!(out, "{key:<6} {:>6} {:>8.2} {:>8.2} {:>8.2} {:>8.2}", r.n_episodes, r.ne, r.sr, r.osr, r.spl);
                }
                None => {
                    let _ = writeln!(out, "{key:<6} {:>6} {:>8} {:>8} {:>8} {:>8}", 0, "-", "-", "-", "-");
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn is_consistent(&self) -> bool {
        std::iter::once(&MetricRow { n_episodes: self.n_episodes, sr: self.sr, osr: self.osr, spl: self.spl, ne: self.ne })
            .chain(self.breakdown.values())
            .all(|r| 0.0 <= r.spl && r.spl <= r.sr + 1e-9 && r.sr <= r.osr + 1e-9 && r.osr <= 100.0 + 1e-9 && r.ne >= 0.0)
    }
}
