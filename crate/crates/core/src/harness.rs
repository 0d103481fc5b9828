//! Orchestration of runs: sampling, integration, artifacts and resume.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, SCHEMA_VERSION};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::functionals::{majority_report, MajorityParams, MajorityReport};
use crate::localization::{localization_suite, scale_parameters, CharacteristicRecorder, CharacteristicReport, LocalizationSuite};
use crate::pusher::RunState;
use crate::scenario::{sample_initial_ensemble, RngState};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const LOCALIZATION_FILE: &str = "localization.json";
pub const LOCALIZATION_CONSTANTS_FILE: &str = "localization_constants.csv";
pub const MAJORITY_FILE: &str = "majority.json";
pub const FINAL_CHECKPOINT_FILE: &str = "checkpoint_final.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const ERROR_FILE: &str = "error.json";

/// `runs/<hash prefix>-seed<seed>` unless the config names a directory.
pub fn default_output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-seed{}", &cfg.hash()[..12], cfg.seed)))
}

/// Create `dir`, refusing one that already has content.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir)?;
        if entries.next().is_some() {
            return Err(Error::OutputExists(dir.to_path_buf()));
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// In-memory state of a run.
pub struct Session {
    pub config: RunConfig,
    pub rng: RngState,
    pub state: RunState,
}

impl Session {
    pub fn start(config: &RunConfig) -> Result<Self> {
        config.check().map_err(|(key, message)| Error::Configuration(format!("`{key}`: {message}")))?;
        let (ensemble, rng) = sample_initial_ensemble(&config.scenario(), config.n, config.total_mass, config.seed)?;
        let state = RunState::new(ensemble, &config.plan())?;
        Ok(Session { config: config.clone(), rng, state })
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self> {
        c.validate()?;
        Ok(Session { config: c.config, rng: c.rng, state: c.state })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(&self.config, self.rng, self.state.clone())
    }

    /// Integrate to the config's end time. `on_checkpoint` receives every
    /// intermediate checkpoint.
    pub fn run_to_end<F>(&mut self, mut on_checkpoint: F) -> Result<Outputs>
    where
        F: FnMut(Checkpoint) -> Result<()>,
    {
        let cfg = self.config.clone();
        let steps = cfg.steps()?;
        let mut recorder = match &cfg.localization {
            Some(loc) => {
                loc.validate()?;
                Some(CharacteristicRecorder::new(loc)?)
            }
            None => None,
        };
        let rng = self.rng;
        self.state.advance_observed(
            &cfg.integrator(),
            &cfg.plan(),
            steps,
            cfg.diagnostics.checkpoint_every,
            |s| on_checkpoint(Checkpoint::new(&cfg, rng, s.clone())),
            |s| match recorder.as_mut() {
                Some(r) if !r.is_empty() => r.snapshot(&s.ensemble),
                _ => Ok(()),
            },
        )?;
        self.outputs(recorder.as_ref())
    }

    fn outputs(&self, recorder: Option<&CharacteristicRecorder>) -> Result<Outputs> {
        let cfg = &self.config;
        let localization = match &cfg.localization {
            Some(loc) => {
                let suite = localization_suite(&self.state.ensemble, loc, cfg.functionals.n_c)?;
                let (mt, eps) = scale_parameters(&self.state.ensemble, cfg.functionals.n_c);
                let characteristics = match recorder {
                    Some(r) if !r.is_empty() => r.reports(&self.state.trajectory, mt, eps)?,
                    _ => Vec::new(),
                };
                Some(LocalizationReport { suite, characteristics })
            }
            None => None,
        };
        let majority = match cfg.diagnostics.majority_threshold {
            Some(threshold) if !self.state.trajectory.is_empty() && self.state.trajectory.times[0] == 0.0 => {
                let params = MajorityParams {
                    n_c: cfg.functionals.n_c,
                    log2_sup_moment_c: Some(self.state.acc.log2_sup_moment),
                    ..MajorityParams::default()
                };
                Some(majority_report(&self.state.trajectory, threshold, &params)?)
            }
            _ => None,
        };
        Ok(Outputs {
            diagnostics_csv: self.state.series.to_csv(),
            trajectory_csv: self.state.trajectory.to_csv(),
            localization,
            majority,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub suite: LocalizationSuite,
    pub characteristics: Vec<CharacteristicReport>,
}

/// Artifacts of a finished run, before they are written.
#[derive(Clone, Debug, PartialEq)]
pub struct Outputs {
    pub diagnostics_csv: String,
    pub trajectory_csv: String,
    pub localization: Option<LocalizationReport>,
    pub majority: Option<MajorityReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub rvp_core: String,
    pub checkpoint_schema: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub n: usize,
    pub steps: u64,
    pub t_end: f64,
    pub versions: Versions,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_time_seconds: f64,
    /// Checkpoint the run continued from, if any.
    pub resumed_from: Option<PathBuf>,
    pub artifacts: Vec<String>,
}

/// Run `cfg` end to end, writing artifacts into `out` (or the default
/// directory). Returns the directory.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| default_output_dir(cfg));
    prepare_output_dir(&dir)?;
    let result = Session::start(cfg).and_then(|s| drive(s, &dir, None));
    record_failure(&dir, result)
}

/// Continue a checkpointed run to its end time in a fresh directory.
pub fn resume(checkpoint: &Path, out: Option<&Path>) -> Result<PathBuf> {
    let c = Checkpoint::load(checkpoint)?;
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let base = default_output_dir(&c.config);
            PathBuf::from(format!("{}-resume-step{}", base.display(), c.state.step))
        }
    };
    prepare_output_dir(&dir)?;
    let result = Session::from_checkpoint(c).and_then(|s| drive(s, &dir, Some(checkpoint)));
    record_failure(&dir, result)
}

fn record_failure(dir: &Path, result: Result<PathBuf>) -> Result<PathBuf> {
    if let Err(e) = &result {
        let _ = fs::write(dir.join(ERROR_FILE), error_json(e));
    }
    result
}

fn drive(mut session: Session, dir: &Path, resumed_from: Option<&Path>) -> Result<PathBuf> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let cfg = session.config.clone();
    fs::write(dir.join(CONFIG_FILE), cfg.to_toml()?)?;
    let mut artifacts = vec![CONFIG_FILE.to_string()];
    let ck_dir = dir.join(CHECKPOINT_DIR);
    let mut written = Vec::new();
    let outputs = session.run_to_end(|c| {
        fs::create_dir_all(&ck_dir)?;
        let name = format!("step_{:010}.json", c.state.step);
        c.save(&ck_dir.join(&name))?;
        written.push(format!("{CHECKPOINT_DIR}/{name}"));
        Ok(())
    })?;
    artifacts.extend(written);

    fs::write(dir.join(DIAGNOSTICS_FILE), &outputs.diagnostics_csv)?;
    fs::write(dir.join(TRAJECTORY_FILE), &outputs.trajectory_csv)?;
    artifacts.push(DIAGNOSTICS_FILE.into());
    artifacts.push(TRAJECTORY_FILE.into());
    if let Some(loc) = &outputs.localization {
        fs::write(dir.join(LOCALIZATION_FILE), serde_json::to_string_pretty(loc)?)?;
        fs::write(dir.join(LOCALIZATION_CONSTANTS_FILE), loc.suite.constants_csv())?;
        artifacts.push(LOCALIZATION_FILE.into());
        artifacts.push(LOCALIZATION_CONSTANTS_FILE.into());
    }
    if let Some(m) = &outputs.majority {
        fs::write(dir.join(MAJORITY_FILE), serde_json::to_string_pretty(m)?)?;
        artifacts.push(MAJORITY_FILE.into());
    }
    session.checkpoint().save(&dir.join(FINAL_CHECKPOINT_FILE))?;
    artifacts.push(FINAL_CHECKPOINT_FILE.into());
    artifacts.push(MANIFEST_FILE.into());

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        n: cfg.n,
        steps: session.state.step,
        t_end: cfg.t_end,
        versions: Versions { rvp_core: env!("CARGO_PKG_VERSION").into(), checkpoint_schema: SCHEMA_VERSION },
        threads: rayon::current_num_threads(),
        started_unix,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        resumed_from: resumed_from.map(Path::to_path_buf),
        artifacts,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(dir.to_path_buf())
}

/// Machine-readable form of an error.
pub fn error_json(e: &Error) -> String {
    let mut obj = serde_json::json!({ "kind": e.kind(), "message": e.to_string() });
    match e {
        Error::Parse { line, key, .. } => {
            obj["line"] = (*line).into();
            obj["key"] = key.clone().into();
        }
        Error::Resolution { k, k_min, k_max } => {
            obj["k"] = (*k).into();
            obj["k_min"] = (*k_min).into();
            obj["k_max"] = (*k_max).into();
        }
        Error::IntegrationBlowup { particle, step } => {
            obj["particle"] = (*particle).into();
            obj["step"] = (*step).into();
        }
        _ => {}
    }
    serde_json::json!({ "error": obj }).to_string()
}

/// Run in memory and return the diagnostics CSV and every intermediate
/// checkpoint.
pub fn run_in_memory(cfg: &RunConfig) -> Result<(Outputs, Vec<Checkpoint>)> {
    let mut session = Session::start(cfg)?;
    let mut checkpoints = Vec::new();
    let out = session.run_to_end(|c| {
        checkpoints.push(c);
        Ok(())
    })?;
    Ok((out, checkpoints))
}

/// Resume in memory from a checkpoint, passing it through its JSON form.
pub fn resume_in_memory(c: &Checkpoint) -> Result<Outputs> {
    let restored = Checkpoint::from_json(&c.to_json()?)?;
    Session::from_checkpoint(restored)?.run_to_end(|_| Ok(()))
}
