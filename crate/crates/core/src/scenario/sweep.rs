use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::run::{evaluate_full, run_scenario_with, ConfigError, RunOptions, RunSpec, ScenarioRecord};
use super::sampling::{sample_failed_generators, scenario_seed};
use crate::grid::GridCase;
use crate::partition::OperatingMode;

/// Header of the summary CSV.
pub const CSV_HEADER: &str = "n_failed,n_uncontrollable,cluster_size,mode,mean_yield_partial,mean_yield_full,frac_unstable,frac_pzero_gt_pinit,replications,master_seed";

/// A study description, as read from a sweep JSON file:
/// `{"master_seed": 1, "replications": 100, "runs": [{"n_failed": 1,
/// "n_uncontrollable": 5, "cluster_size": 1, "mode": "init"}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub runs: Vec<RunSpec>,
}

fn default_replications() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
    pub run: RunOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            jobs: 1,
            run: RunOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("run {index}: {source}")]
    Config {
        index: usize,
        #[source]
        source: ConfigError,
    },
    #[error("at least one replication is required")]
    NoReplications,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub spec: RunSpec,
    pub mean_yield_partial: Option<f64>,
    pub mean_yield_full: Option<f64>,
    pub frac_unstable: Option<f64>,
    /// Share of paired replications where the trip-everything mode beats
    /// the hold-set-point mode; `None` unless both modes were swept.
    pub frac_pzero_gt_pinit: Option<f64>,
    pub replications: usize,
    pub master_seed: u64,
    /// Replications excluded from the means.
    pub anomalies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Per-run records, ordered by replication index.
    pub records: Vec<Vec<ScenarioRecord>>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.spec.n_failed,
                r.spec.n_uncontrollable,
                r.spec.cluster_size,
                r.spec.mode.as_str(),
                fmt_opt(r.mean_yield_partial),
                fmt_opt(r.mean_yield_full),
                fmt_opt(r.frac_unstable),
                fmt_opt(r.frac_pzero_gt_pinit),
                r.replications,
                r.master_seed
            );
        }
        out
    }

    /// One JSON object per scenario, with the run it belongs to.
    pub fn details_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            run: &'a RunSpec,
            #[serde(flatten)]
            record: &'a ScenarioRecord,
        }
        let mut out = String::new();
        for (row, recs) in self.rows.iter().zip(&self.records) {
            for rec in recs {
                out.push_str(
                    &serde_json::to_string(&Line {
                        run: &row.spec,
                        record: rec,
                    })
                    .expect("records serialize"),
                );
                out.push('\n');
            }
        }
        out
    }

    pub fn total_anomalies(&self) -> usize {
        self.rows.iter().map(|r| r.anomalies).sum()
    }

    /// Scenarios where a model failed to solve.
    pub fn solver_anomalies(&self) -> usize {
        self.records
            .iter()
            .flatten()
            .filter(|r| r.anomaly.as_ref().is_some_and(|a| a.is_solver()))
            .count()
    }
}

#[cfg(feature = "parallel")]
fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, jobs: usize, f: F) -> Result<Vec<T>, SweepError> {
    use rayon::prelude::*;
    if jobs <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, F: Fn(usize) -> T>(n: usize, _jobs: usize, f: F) -> Result<Vec<T>, SweepError> {
    Ok((0..n).map(f).collect())
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Runs every replication of every run and aggregates them.
///
/// Replication `i` of every run uses the same scenario seed, so runs that
/// differ in one parameter are compared on common random numbers, and the
/// two operating modes are paired scenario by scenario.
pub fn sweep(case: &GridCase, config: &SweepConfig, opts: &SweepOptions) -> Result<SweepTable, SweepError> {
    if config.replications == 0 {
        return Err(SweepError::NoReplications);
    }
    for (index, r) in config.runs.iter().enumerate() {
        r.validate().map_err(|source| SweepError::Config { index, source })?;
    }
    let reps = config.replications;
    let master = config.master_seed;

    // the full-communication yield depends only on the failure set
    let mut full_keys: Vec<(usize, usize)> = config
        .runs
        .iter()
        .flat_map(|r| (0..reps).map(move |i| (r.n_failed, i)))
        .collect();
    full_keys.sort_unstable();
    full_keys.dedup();
    let full_vals = map_indexed(full_keys.len(), opts.jobs, |k| {
        let (n_failed, i) = full_keys[k];
        let seed = scenario_seed(master, i as u64);
        sample_failed_generators(case, n_failed, seed)
            .map_err(|e| e.to_string())
            .and_then(|f| {
                evaluate_full(case, &f, opts.run)
                    .map(|r| r.yield_.ratio)
                    .map_err(|e| e.to_string())
            })
    })?;
    let full: BTreeMap<(usize, usize), Result<f64, String>> = full_keys.into_iter().zip(full_vals).collect();

    let tasks: Vec<(usize, usize)> = (0..config.runs.len())
        .flat_map(|r| (0..reps).map(move |i| (r, i)))
        .collect();
    let flat = map_indexed(tasks.len(), opts.jobs, |t| {
        let (r, i) = tasks[t];
        let spec = &config.runs[r];
        let pre = full[&(spec.n_failed, i)].clone();
        run_scenario_with(case, spec, master, i as u64, Some(pre), opts.run)
    })?;
    let mut records: Vec<Vec<ScenarioRecord>> = vec![Vec::with_capacity(reps); config.runs.len()];
    for ((r, _), rec) in tasks.into_iter().zip(flat) {
        records[r].push(rec);
    }

    let mut rows = Vec::with_capacity(config.runs.len());
    for (spec, recs) in config.runs.iter().zip(&records) {
        let ok: Vec<&ScenarioRecord> = recs.iter().filter(|r| !r.is_anomalous()).collect();
        let other_mode = match spec.mode {
            OperatingMode::PInit => OperatingMode::PZero,
            OperatingMode::PZero => OperatingMode::PInit,
        };
        let partner = config.runs.iter().position(|o| {
            RunSpec {
                mode: other_mode,
                ..*spec
            } == *o
        });
        let frac_pzero_gt_pinit = partner.and_then(|p| {
            let (zero, init) = match spec.mode {
                OperatingMode::PZero => (recs, &records[p]),
                OperatingMode::PInit => (&records[p], recs),
            };
            mean(
                zero.iter()
                    .zip(init)
                    .filter_map(|(z, i)| match (z.yield_partial, i.yield_partial) {
                        (Some(z), Some(i)) if !z.is_nan() && !i.is_nan() => Some(if z > i + 1e-9 { 1.0 } else { 0.0 }),
                        _ => None,
                    }),
            )
        });
        rows.push(SweepRow {
            spec: *spec,
            mean_yield_partial: mean(ok.iter().filter_map(|r| r.yield_partial)),
            mean_yield_full: mean(ok.iter().filter_map(|r| r.yield_full)),
            frac_unstable: mean(ok.iter().map(|r| if r.unstable_areas > 0 { 1.0 } else { 0.0 })),
            frac_pzero_gt_pinit,
            replications: reps,
            master_seed: master,
            anomalies: recs.len() - ok.len(),
        });
    }
    Ok(SweepTable { rows, records })
}
