//! `simulate`: run one scenario file, or every `*.json` in a directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trolleypose::pipeline::DEFAULT_MAX_DEGRADED_GAP;
use trolleypose::report::{write_frames_csv, write_summary_json};
use trolleypose::{run_scenario, CenterMode, FilterParams, HeadingStats, PipelineConfig, ScenarioConfig, SimError};

use crate::config::{config_hash, load};
use crate::error::CliError;
use crate::manifest::RunManifest;

/// On-disk layout of a simulate config. The estimator shares the scenario's
/// camera, model and bin count.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub pipeline: PipelineOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineOptions {
    #[serde(default)]
    pub filter: FilterParams,
    #[serde(default)]
    pub center_mode: CenterMode,
    #[serde(default)]
    pub heading_stats: HeadingStats,
    #[serde(default = "default_gap")]
    pub max_degraded_gap: usize,
}

fn default_gap() -> usize {
    DEFAULT_MAX_DEGRADED_GAP
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            center_mode: CenterMode::default(),
            heading_stats: HeadingStats::default(),
            max_degraded_gap: DEFAULT_MAX_DEGRADED_GAP,
        }
    }
}

impl SimulateConfig {
    pub fn pipeline_config(&self) -> PipelineConfig {
        let s = &self.scenario;
        PipelineConfig {
            filter: self.pipeline.filter,
            center_mode: self.pipeline.center_mode,
            heading_stats: self.pipeline.heading_stats,
            max_degraded_gap: self.pipeline.max_degraded_gap,
            ..PipelineConfig::new(s.camera.clone(), s.model.clone(), s.bin_count)
        }
    }
}

pub struct SimulateArgs<'a> {
    pub config: &'a Path,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub strict: bool,
    /// Also record the synthetic detector output as JSONL.
    pub detections: bool,
}

pub const DETECTIONS_FILE: &str = "detections.jsonl";
pub const FRAMES_FILE: &str = "frames.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    if !args.config.is_dir() {
        return run_one(args, args.config, args.out);
    }
    let configs = scenario_files(args.config)?;
    if configs.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no *.json configs found",
            args.config.display()
        )));
    }
    let failures: Vec<CliError> = configs
        .par_iter()
        .filter_map(|path| {
            let stem = path.file_stem().unwrap_or_default();
            run_one(args, path, &args.out.join(stem)).err()
        })
        .collect();
    for f in &failures {
        eprintln!("error: {f}");
    }
    let summary = format!("{} of {} scenarios failed", failures.len(), configs.len());
    match failures.iter().map(CliError::severity).max() {
        None => Ok(()),
        Some(1) => Err(CliError::Io(summary)),
        Some(_) => Err(CliError::Invalid(summary)),
    }
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn run_one(args: &SimulateArgs, path: &Path, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let mut loaded = load::<SimulateConfig>(path)?;
    if let Some(seed) = args.seed {
        loaded.value.scenario.rng_seed = seed;
    }
    let config = &loaded.value;
    config
        .scenario
        .validate()
        .map_err(|e| loaded.reject(path, &e.within("scenario")))?;
    let pipeline = config.pipeline_config();
    pipeline
        .filter
        .validate()
        .map_err(|e| loaded.reject(path, &e.within("pipeline")))?;

    log::info!("{}: simulating {} frames", path.display(), config.scenario.frame_count);
    let run = run_scenario(&config.scenario, &pipeline, args.strict).map_err(|e| match e {
        SimError::Invalid(v) => loaded.reject(path, &v),
        other => CliError::Invalid(format!("{}: {other}", path.display())),
    })?;

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join(FRAMES_FILE), |w| write_frames_csv(w, &run.records))?;
    write_file(&out.join(SUMMARY_FILE), |w| write_summary_json(w, &run.summary))?;
    let mut outputs = vec![FRAMES_FILE, SUMMARY_FILE];
    if args.detections {
        write_file(&out.join(DETECTIONS_FILE), |w| {
            for r in &run.records {
                serde_json::to_writer(&mut *w, &r.detection)?;
                writeln!(w)?;
            }
            Ok(())
        })?;
        outputs.push(DETECTIONS_FILE);
    }
    let manifest = RunManifest::new(
        config_hash(config),
        config.scenario.rng_seed,
        &outputs,
        started.elapsed(),
    );
    write_file(&out.join(MANIFEST_FILE), |w| manifest.write(w))?;
    log::info!(
        "{}: success rate {:.3}, wrote {}",
        path.display(),
        run.summary.success_rate,
        out.display()
    );
    Ok(())
}

pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}
