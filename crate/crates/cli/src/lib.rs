//! Experiment runner for `dqlab-core`: configuration, seeded randomness,
//! worker pool, CSV/JSON artifacts and a run manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod rng;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context as _, Result};
use dqlab_core::spin::SpinBathSpec;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use config::{Format, LoadedConfig};
use output::{write_json, write_text, Table};

pub use experiments::{lookup, EXPERIMENTS};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out: None,
            workers: 1,
            seed: None,
        }
    }
}

/// Everything an experiment may read.
pub struct Context<'a> {
    pub spec: SpinBathSpec<f64>,
    pub loaded: &'a LoadedConfig,
    pub seed: u64,
    params: Value,
    pool: rayon::ThreadPool,
}

impl Context<'_> {
    pub fn params<P: DeserializeOwned>(&self) -> Result<P> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| anyhow!("experiment `{}` parameters: {e}", self.loaded.config.experiment.name))
    }

    /// Runs `f` over `0..n` on the worker pool; results come back in index
    /// order whatever the completion order.
    pub fn sweep<R, F>(&self, n: usize, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize) -> Result<R> + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub report: Value,
    /// `(suffix, table)`; the first table is written as `<name>.csv`, the
    /// rest as `<name>-<suffix>.csv`.
    pub tables: Vec<(String, Table)>,
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn table(&self, suffix: &str) -> Option<&Table> {
        self.tables.iter().find(|(s, _)| s == suffix).map(|(_, t)| t)
    }
}

#[derive(Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub seed: u64,
}

/// Runs the configured experiment without writing anything.
pub fn execute(loaded: &LoadedConfig, opts: &RunOptions) -> Result<(Outcome, u64)> {
    let cfg = &loaded.config;
    let name = cfg.experiment.name.as_str();
    let Some(exp) = lookup(name) else {
        bail!("unknown experiment `{name}` (see `dqlab list`)");
    };
    if opts.workers == 0 {
        bail!("--workers must be at least 1");
    }
    let seed = opts.seed.or(cfg.experiment.seed).unwrap_or(0);
    let spec = config::build_spec(&cfg.spec, &loaded.base_dir, seed).context("spec")?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build()?;
    let params = Value::Object(cfg.experiment.params.clone().into_iter().collect());
    let ctx = Context {
        spec,
        loaded,
        seed,
        params,
        pool,
    };
    let outcome = exp(&ctx).with_context(|| format!("experiment `{name}`"))?;
    Ok((outcome, seed))
}

/// Runs the experiment and writes results plus `manifest.json`.
pub fn run(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunResult> {
    let start = Instant::now();
    let (outcome, seed) = execute(loaded, opts)?;
    let cfg = &loaded.config;
    let name = cfg.experiment.name.as_str();
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.directory.as_ref().map(|d| loaded.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("out").join(name));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    if cfg.output.formats.contains(&Format::Csv) {
        for (i, (suffix, table)) in outcome.tables.iter().enumerate() {
            let file = if i == 0 {
                format!("{name}.csv")
            } else {
                format!("{name}-{suffix}.csv")
            };
            let path = dir.join(file);
            write_text(&path, &table.to_csv(seed)?)?;
            files.push(path);
        }
    }
    if cfg.output.formats.contains(&Format::Json) {
        let path = dir.join(format!("{name}.json"));
        let report = json!({ "experiment": name, "seed": seed, "report": outcome.report });
        write_json(&path, &report)?;
        files.push(path);
    }
    let manifest = json!({
        "tool": "dqlab",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": name,
        "seed": seed,
        "workers": opts.workers,
        "config_path": loaded.path.as_ref().map(|p| p.display().to_string()),
        "config": serde_json::to_value(cfg)?,
        "outputs": files.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let mpath = dir.join("manifest.json");
    write_json(&mpath, &manifest)?;
    files.push(mpath);
    Ok(RunResult {
        outcome,
        dir,
        files,
        seed,
    })
}

/// The registry, one `name  description` line each.
pub fn list_experiments() -> String {
    let width = EXPERIMENTS.iter().map(|(n, _, _)| n.len()).max().unwrap_or(0);
    EXPERIMENTS
        .iter()
        .map(|(n, d, _)| format!("{n:width$}  {d}\n"))
        .collect()
}
