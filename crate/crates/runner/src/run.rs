//! Parallel episode evaluation over isolated worker threads.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use uavnh_core::assistant::{AssistLevel, AssistantConfig};
use uavnh_core::episode::{run_episode, write_results, Episode, EpisodeResult, HarnessConfig, Policy, PolicyError};
use uavnh_core::metrics::{evaluate, MetricReport, OracleMode};
use uavnh_core::policies::{PolicySpec, DEFAULT_TIMEOUT};

use crate::store::{load_id_list, load_manifest, SceneStore};
use crate::RunError;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_envs: usize,
    pub base_seed: u64,
    pub level: AssistLevel,
    pub policy: PolicySpec,
    pub manifest: PathBuf,
    /// Optional list of episode ids restricting the manifest, e.g. a test split.
    pub subset: Option<PathBuf>,
    pub scenes: PathBuf,
    /// Directory receiving the results and report files.
    pub output: PathBuf,
    pub harness: HarnessConfig,
    pub oracle: OracleMode,
    pub bridge_timeout: Duration,
}

impl RunConfig {
    pub fn new(policy: PolicySpec, level: AssistLevel, manifest: PathBuf, scenes: PathBuf, output: PathBuf) -> Self {
        Self {
            n_envs: 1,
            base_seed: policy.seed,
            level,
            policy,
            manifest,
            subset: None,
            scenes,
            output,
            harness: HarnessConfig::default(),
            oracle: OracleMode::default(),
            bridge_timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.n_envs == 0 {
            return Err(RunError::Config("n_envs must be at least 1".into()));
        }
        if self.harness.max_decisions == 0 {
            return Err(RunError::Config("step budget must be positive".into()));
        }
        self.policy.validate().map_err(|e| RunError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Sorted by episode id.
    pub results: Vec<EpisodeResult>,
    pub report: MetricReport,
    pub errored: usize,
}

pub type PolicyFactory<'a> = dyn Fn() -> Result<Box<dyn Policy + Send>, PolicyError> + Sync + 'a;

/// Runs `episodes` on `n_envs` workers. Each worker owns its policy and
/// simulation; the outcome of an episode never depends on which worker ran it.
/// A panicking or failing episode becomes an errored result.
pub fn run_episodes(
    episodes: &[Episode],
    scenes: &SceneStore,
    make_policy: &PolicyFactory<'_>,
    assistant: &AssistantConfig,
    harness: &HarnessConfig,
    n_envs: usize,
) -> Result<Vec<EpisodeResult>, RunError> {
    if episodes.is_empty() {
        return Err(RunError::EmptyManifest);
    }
    if n_envs == 0 {
        return Err(RunError::Config("n_envs must be at least 1".into()));
    }
    let next = AtomicUsize::new(0);
    let sink = Mutex::new(Vec::with_capacity(episodes.len()));
    thread::scope(|s| {
        for _ in 0..n_envs.min(episodes.len()) {
            s.spawn(|| {
                let mut policy = None;
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(ep) = episodes.get(i) else { break };
                    let r = run_one(ep, scenes, make_policy, &mut policy, assistant, harness);
                    sink.lock().unwrap_or_else(|p| p.into_inner()).push(r);
                }
            });
        }
    });
    let mut results = sink.into_inner().unwrap_or_else(|p| p.into_inner());
    results.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    Ok(results)
}

fn run_one(
    ep: &Episode,
    scenes: &SceneStore,
    make_policy: &PolicyFactory<'_>,
    policy: &mut Option<Box<dyn Policy + Send>>,
    assistant: &AssistantConfig,
    harness: &HarnessConfig,
) -> EpisodeResult {
    let Some(scene) = scenes.get(&ep.scene_id) else {
        return EpisodeResult::errored(&ep.id, format!("unknown scene {}", ep.scene_id));
    };
    if policy.is_none() {
        match make_policy() {
            Ok(p) => *policy = Some(p),
            Err(e) => return EpisodeResult::errored(&ep.id, format!("policy unavailable: {e}")),
        }
    }
    let p = policy.as_mut().expect("policy was just built");
    match catch_unwind(AssertUnwindSafe(|| run_episode(scene, ep, p.as_mut(), assistant, harness))) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => EpisodeResult::errored(&ep.id, e.to_string()),
        Err(panic) => {
            // the policy may be in any state after a panic
            *policy = None;
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "worker panicked".into());
            EpisodeResult::errored(&ep.id, msg)
        }
    }
}

/// Loads the manifest and scenes, evaluates, and writes the results JSONL and
/// report JSON into the output directory.
pub fn run_parallel(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let mut episodes = load_manifest(&cfg.manifest)?;
    if let Some(subset) = &cfg.subset {
        let keep: std::collections::BTreeSet<String> = load_id_list(subset)?.into_iter().collect();
        episodes.retain(|e| keep.contains(&e.id));
    }
    if episodes.is_empty() {
        return Err(RunError::EmptyManifest);
    }
    let scenes = SceneStore::load_dir(&cfg.scenes)?;
    let spec = PolicySpec { seed: cfg.base_seed, ..cfg.policy.clone() };
    let max_wp = cfg.harness.max_waypoints;
    let timeout = cfg.bridge_timeout;
    let factory = move || spec.build(max_wp, timeout);
    let assistant = AssistantConfig::at_level(cfg.level);
    let results = run_episodes(&episodes, &scenes, &factory, &assistant, &cfg.harness, cfg.n_envs)?;
    let (report, errored) = evaluate(&results, &episodes, cfg.oracle).map_err(|e| RunError::Metrics(e.to_string()))?;

    fs::create_dir_all(&cfg.output).map_err(|e| RunError::io(&cfg.output, e))?;
    let rp = cfg.output.join(RESULTS_FILE);
    fs::write(&rp, write_results(&results)).map_err(|e| RunError::io(&rp, e))?;
    let mp = cfg.output.join(REPORT_FILE);
    fs::write(&mp, report.to_json()).map_err(|e| RunError::io(&mp, e))?;
    Ok(RunOutput { results, report, errored })
}
