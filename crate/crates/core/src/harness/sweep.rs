//! Multi-run sweeps, across-seed aggregation and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::metrics::MetricsRow;
use super::sim::run_to_writer;
use crate::error::{Error, Result};
use crate::policy::Algorithm;

/// A grid of `(algorithm, w)` combinations, each run under every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub algorithms: Vec<Algorithm>,
    pub weights: Vec<f64>,
    pub seeds: Vec<u64>,
    pub base: SimConfig,
}

impl SweepPlan {
    pub fn configs(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &w in &self.weights {
                out.push(SimConfig {
                    algorithm,
                    w,
                    seeds: self.seeds.clone(),
                    ..self.base.clone()
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "need at least one seed"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "need at least one algorithm"));
        }
        if self.weights.is_empty() {
            return Err(Error::config("weights", "need at least one weight"));
        }
        for cfg in self.configs() {
            cfg.validate()?;
        }
        Ok(())
    }
}

/// Written next to the sweep outputs; enough to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub plan: SweepPlan,
    pub runs: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|source| Error::ConfigFile {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("manifest always serialises");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub raw: Vec<PathBuf>,
    pub aggregates: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn raw_dir(out: &Path) -> PathBuf {
    out.join("raw")
}

pub fn aggregate_dir(out: &Path) -> PathBuf {
    out.join("aggregate")
}

/// Runs every `(config, seed)` in parallel, one raw CSV each, then aggregates.
pub fn sweep(plan: &SweepPlan, out: &Path) -> Result<SweepOutput> {
    plan.validate()?;
    let raw = raw_dir(out);
    fs::create_dir_all(&raw).map_err(|e| Error::io(&raw, e))?;
    let jobs: Vec<(SimConfig, u64)> = plan
        .configs()
        .into_iter()
        .flat_map(|c| plan.seeds.iter().map(move |&s| (c.clone(), s)))
        .collect();
    let paths: Vec<PathBuf> = jobs
        .par_iter()
        .map(|(cfg, seed)| {
            let path = raw.join(format!("{}.csv", cfg.run_id(*seed)));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            run_to_writer(cfg, *seed, BufWriter::new(file), None::<std::io::Sink>)?;
            Ok(path)
        })
        .collect::<Result<_>>()?;
    let aggregates = aggregate_files(&paths, &aggregate_dir(out))?;
    let manifest = out.join("manifest.toml");
    Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        plan: plan.clone(),
        runs: jobs.iter().map(|(c, s)| c.run_id(*s)).collect(),
    }
    .write(&manifest)?;
    Ok(SweepOutput {
        raw: paths,
        aggregates,
        manifest,
    })
}

pub fn read_rows(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().ne(MetricsRow::HEADER.iter().copied()) {
        return Err(Error::Aggregate(format!(
            "{}: unexpected CSV header",
            path.display()
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::csv(path, e)))
        .collect()
}

/// Across-seed mean and sample standard deviation of every metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub w: f64,
    pub interval: usize,
    pub seeds: usize,
    pub reachability_mean: f64,
    pub reachability_mean_std: f64,
    pub overheard_frac: f64,
    pub overheard_frac_std: f64,
    pub pe_mean: f64,
    pub pe_mean_std: f64,
    pub cv_mean: f64,
    pub cv_mean_std: f64,
    pub objective_mean: f64,
    pub objective_mean_std: f64,
    pub reward_mean: f64,
    pub reward_mean_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups runs by `(algorithm, w)` and averages them interval by interval.
///
/// Runs in a group must cover the same intervals.
pub fn aggregate_rows(
    runs: &[Vec<MetricsRow>],
) -> Result<BTreeMap<(Algorithm, String), Vec<AggregateRow>>> {
    let mut groups: BTreeMap<(Algorithm, String), Vec<&Vec<MetricsRow>>> = BTreeMap::new();
    for run in runs {
        let Some(first) = run.first() else { continue };
        groups
            .entry((first.algorithm, first.w.to_string()))
            .or_default()
            .push(run);
    }
    let mut out = BTreeMap::new();
    for (key, members) in groups {
        let len = members[0].len();
        if members.iter().any(|r| r.len() != len) {
            return Err(Error::Aggregate(format!(
                "runs of {} w={} have different lengths",
                key.0, key.1
            )));
        }
        let mut rows = Vec::with_capacity(len);
        for t in 0..len {
            let slice: Vec<&MetricsRow> = members.iter().map(|r| &r[t]).collect();
            if slice.iter().any(|r| r.interval != slice[0].interval) {
                return Err(Error::Aggregate(format!("interval mismatch at row {t}")));
            }
            let stats: Vec<(f64, f64)> = (0..6)
                .map(|m| mean_std(&slice.iter().map(|r| r.metrics()[m]).collect::<Vec<_>>()))
                .collect();
            rows.push(AggregateRow {
                algorithm: key.0,
                w: slice[0].w,
                interval: slice[0].interval,
                seeds: slice.len(),
                reachability_mean: stats[0].0,
                reachability_mean_std: stats[0].1,
                overheard_frac: stats[1].0,
                overheard_frac_std: stats[1].1,
                pe_mean: stats[2].0,
                pe_mean_std: stats[2].1,
                cv_mean: stats[3].0,
                cv_mean_std: stats[3].1,
                objective_mean: stats[4].0,
                objective_mean_std: stats[4].1,
                reward_mean: stats[5].0,
                reward_mean_std: stats[5].1,
            });
        }
        out.insert(key, rows);
    }
    Ok(out)
}

/// Reads raw run CSVs and writes one `<algorithm>_w<w>.csv` per group into `out`.
pub fn aggregate_files(inputs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let runs = inputs
        .iter()
        .map(|p| read_rows(p))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    for ((algorithm, w), rows) in aggregate_rows(&runs)? {
        let path = out.join(format!("{algorithm}_w{w}.csv"));
        let mut writer = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        for row in rows {
            writer.serialize(row).map_err(|e| Error::csv(&path, e))?;
        }
        writer.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Raw CSVs directly inside `dir`, sorted by name.
pub fn csv_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}
