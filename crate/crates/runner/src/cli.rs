//! The `uavnh` command line.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};
use uavnh_core::assistant::{AssistLevel, AssistantConfig};
use uavnh_core::collection::dataset::write_episode_dir;
use uavnh_core::collection::{backfill_sensors, collect_with_backtracking, split_dataset, CollectionError, DaggerConfig, SplitName};
use uavnh_core::episode::{generate_episodes, read_results, write_manifest, EpisodeGenConfig, HarnessConfig};
use uavnh_core::metrics::{evaluate, OracleMode};
use uavnh_core::policies::{PolicyKind, PolicySpec, TeacherPolicy};
use uavnh_core::world::{generate_scene, SceneConfig, SceneStyle};

use crate::run::{run_parallel, RunConfig};
use crate::server::{bind_address_from_env, serve, ServerConfig, ServerData};
use crate::store::{load_manifest, SceneStore};
use crate::RunError;

#[derive(Debug, Parser)]
#[command(name = "uavnh", version, about = "UAV object-search benchmark: scenes, episodes, evaluation and collection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate procedural scenes into a directory.
    GenScenes {
        #[arg(long, default_value_t = 6)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// urban, forest, open, or mixed to cycle through all three.
        #[arg(long, default_value = "mixed")]
        style: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an episode manifest over a scene directory.
    GenEpisodes {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a policy and write results, a report and a printed table.
    Eval {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Episode-id list (as written by `split`) restricting the manifest.
        #[arg(long)]
        subset: Option<PathBuf>,
        #[arg(long, default_value = "teacher")]
        policy: PolicyKind,
        /// host:port of an external policy server.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "L1")]
        assistant: AssistLevel,
        #[arg(long, default_value_t = 1)]
        n_envs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        max_decisions: usize,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// goal or path.
        #[arg(long, default_value = "goal")]
        oracle: String,
        #[arg(long)]
        detector_landing: bool,
        #[arg(long, default_value_t = 30.0)]
        bridge_timeout: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect DAgger trajectories with collision backtracking.
    CollectDagger {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "fixed")]
        student: PolicyKind,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "L1")]
        assistant: AssistLevel,
        #[arg(long, default_value_t = 0.7)]
        beta: f64,
        #[arg(long, default_value_t = 2)]
        backtrack_frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition a manifest into train and test splits.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',')]
        holdout_scenes: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        holdout_categories: Vec<String>,
        #[arg(long, default_value_t = 0.1)]
        seen_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Host teleoperation and bridge sessions.
    Serve {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides the UAVNH_BIND environment variable.
        #[arg(long)]
        bind: Option<String>,
        #[arg(long, default_value_t = 10.0)]
        stream_hz: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the report from a stored results file.
    Replay {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "goal")]
        oracle: String,
        #[arg(long)]
        json: bool,
    },
}

fn parse_oracle(s: &str) -> Result<OracleMode, RunError> {
    match s {
        "goal" => Ok(OracleMode::Goal),
        "path" => Ok(OracleMode::Path),
        _ => Err(RunError::Config(format!("unknown oracle mode {s:?}"))),
    }
}

fn policy_spec(kind: PolicyKind, seed: u64, endpoint: Option<String>) -> Result<PolicySpec, RunError> {
    let spec = PolicySpec { kind, seed, bridge_endpoint: endpoint };
    spec.validate().map_err(|e| RunError::Config(e.to_string()))?;
    Ok(spec)
}

fn styles(style: &str) -> Result<Vec<SceneStyle>, RunError> {
    match style {
        "mixed" => Ok(vec![SceneStyle::Urban, SceneStyle::Forest, SceneStyle::Open]),
        "urban" => Ok(vec![SceneStyle::Urban]),
        "forest" => Ok(vec![SceneStyle::Forest]),
        "open" => Ok(vec![SceneStyle::Open]),
        _ => Err(RunError::Config(format!("unknown style {style:?}"))),
    }
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

/// Executes a parsed command, returning the text to print on success.
pub fn execute(cmd: Command) -> Result<String, RunError> {
    match cmd {
        Command::GenScenes { count, seed, style, out } => {
            let styles = styles(&style)?;
            let mut scenes = Vec::with_capacity(count);
            for i in 0..count {
                let cfg = SceneConfig { style: styles[i % styles.len()], ..SceneConfig::default() };
                scenes.push(generate_scene(seed + i as u64, &cfg).map_err(|e| RunError::Failed(e.to_string()))?);
            }
            SceneStore::new(scenes).save_dir(&out)?;
            Ok(format!("wrote {count} scenes to {}\n", out.display()))
        }
        Command::GenEpisodes { scenes, count, seed, out } => {
            let store = SceneStore::load_dir(&scenes)?;
            if store.is_empty() {
                return Err(RunError::Config(format!("no scenes in {}", scenes.display())));
            }
            let list: Vec<_> = store.scenes().cloned().collect();
            let eps = generate_episodes(&list, count, seed, &EpisodeGenConfig::default()).map_err(|e| RunError::Failed(e.to_string()))?;
            write(&out, &write_manifest(&eps))?;
            Ok(format!("wrote {} episodes to {}\n", eps.len(), out.display()))
        }
        Command::Eval {
            scenes,
            manifest,
            subset,
            policy,
            endpoint,
            assistant,
            n_envs,
            seed,
            max_decisions,
            resolution,
            oracle,
            detector_landing,
            bridge_timeout,
            out,
        } => {
            let spec = policy_spec(policy, seed, endpoint)?;
            let mut cfg = RunConfig::new(spec, assistant, manifest, scenes, out);
            cfg.subset = subset;
            cfg.n_envs = n_envs;
            cfg.oracle = parse_oracle(&oracle)?;
            cfg.bridge_timeout = Duration::from_secs_f64(bridge_timeout);
            cfg.harness = HarnessConfig {
                max_decisions,
                detector_landing,
                camera: HarnessConfig::default().camera.with_resolution(resolution),
                ..HarnessConfig::default()
            };
            let run = run_parallel(&cfg)?;
            let title = format!("{:?} policy, {assistant} assistant", policy);
            let mut text = run.report.to_table(&title);
            if run.errored > 0 {
                return Err(RunError::Failed(format!("{text}{} episodes errored", run.errored)));
            }
            text.push_str(&format!("results in {}\n", cfg.output.display()));
            Ok(text)
        }
        Command::CollectDagger { scenes, manifest, student, endpoint, assistant, beta, backtrack_frames, seed, resolution, out } => {
            let spec = policy_spec(student, seed, endpoint)?;
            let store = SceneStore::load_dir(&scenes)?;
            let episodes = load_manifest(&manifest)?;
            if episodes.is_empty() {
                return Err(RunError::EmptyManifest);
            }
            let harness = HarnessConfig::default();
            let camera = harness.camera.with_resolution(resolution);
            let cfg = DaggerConfig { beta, backtrack_frames, seed, harness, assistant: AssistantConfig::at_level(assistant), ..DaggerConfig::default() };
            let mut student = spec.build(harness.max_waypoints, Duration::from_secs(30)).map_err(|e| RunError::Config(e.to_string()))?;
            let mut teacher = TeacherPolicy::default();
            let (mut kept, mut dropped) = (0, Vec::new());
            for ep in &episodes {
                let scene = store.get(&ep.scene_id).ok_or_else(|| RunError::Config(format!("no scene {}", ep.scene_id)))?;
                match collect_with_backtracking(scene, ep, student.as_mut(), &mut teacher, &cfg) {
                    Ok(r) => {
                        let record = backfill_sensors(&r.record, scene, &camera);
                        write_episode_dir(&out.join(&ep.id), ep, &record, &r.events).map_err(|e| RunError::Failed(e.to_string()))?;
                        kept += 1;
                    }
                    Err(e @ CollectionError::BacktrackImpossible { .. }) => dropped.push(format!("{}: {e}", ep.id)),
                    Err(e) => return Err(RunError::Failed(format!("{}: {e}", ep.id))),
                }
            }
            let mut text = format!("collected {kept} episodes into {}\n", out.display());
            for d in &dropped {
                text.push_str(&format!("dropped {d}\n"));
            }
            Ok(text)
        }
        Command::Split { manifest, holdout_scenes, holdout_categories, seen_fraction, seed, out } => {
            let episodes = load_manifest(&manifest)?;
            let hs: BTreeSet<String> = holdout_scenes.into_iter().collect();
            let hc: BTreeSet<String> = holdout_categories.into_iter().collect();
            let splits = split_dataset(&episodes, &hs, &hc, seen_fraction, seed).map_err(|e| RunError::Config(e.to_string()))?;
            let mut text = String::new();
            for name in SplitName::ALL {
                write(&out.join(format!("{}.jsonl", name.as_str())), &splits.manifest(name))?;
                text.push_str(&format!("{:<20} {}\n", name.as_str(), splits.get(name).len()));
            }
            Ok(text)
        }
        Command::Serve { scenes, manifest, bind, stream_hz, out } => {
            let data = ServerData::new(SceneStore::load_dir(&scenes)?, load_manifest(&manifest)?);
            let cfg = ServerConfig { stream_hz, ..ServerConfig::new(out) };
            let addr = bind.unwrap_or_else(bind_address_from_env);
            let handle = serve(&addr, data, cfg).map_err(|e| RunError::Io(format!("{addr}: {e}")))?;
            eprintln!("listening on {}", handle.addr());
            handle.join();
            Ok(String::new())
        }
        Command::Replay { results, manifest, oracle, json } => {
            let text = fs::read_to_string(&results).map_err(|e| RunError::io(&results, e))?;
            let results = read_results(&text).map_err(|e| RunError::Parse(e.to_string()))?;
            let episodes = load_manifest(&manifest)?;
            let (report, errored) = evaluate(&results, &episodes, parse_oracle(&oracle)?).map_err(|e| RunError::Metrics(e.to_string()))?;
            let mut out = if json { report.to_json() + "\n" } else { report.to_table("replay") };
            if errored > 0 {
                out.push_str(&format!("{errored} errored episodes excluded\n"));
            }
            Ok(out)
        }
    }
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
