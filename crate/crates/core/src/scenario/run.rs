use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sampling::{sample_failed_generators, sample_uncontrollable_clusters, scenario_seed, SamplingError};
use crate::cascade::{run_cascade, CascadeResult};
use crate::control::{
    build_full_model, build_partial_model, compute_yield, extract_outcome, ControlError, ControlModel, ControlOutcome,
    Yield, YieldError,
};
use crate::grid::{GridCase, NodeId, NodeSet};
use crate::milp::{brute_force_milp, solve_milp, ModelError, MAX_ENUMERATED_BINARIES};
use crate::partition::{apply_mode, partition_areas, Dispatch, OperatingMode};

/// One point of a study: how much fails and how communication is lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub n_failed: usize,
    pub n_uncontrollable: usize,
    pub cluster_size: usize,
    pub mode: OperatingMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub spec: RunSpec,
    pub master_seed: u64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("cluster size must be at least 1")]
    ZeroClusterSize,
    #[error("cluster size {cluster_size} does not divide {n_uncontrollable} uncontrollable nodes")]
    Indivisible {
        n_uncontrollable: usize,
        cluster_size: usize,
    },
    #[error("at least one replication is required")]
    NoReplications,
}

impl RunSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cluster_size == 0 {
            return Err(ConfigError::ZeroClusterSize);
        }
        if !self.n_uncontrollable.is_multiple_of(self.cluster_size) {
            return Err(ConfigError::Indivisible {
                n_uncontrollable: self.n_uncontrollable,
                cluster_size: self.cluster_size,
            });
        }
        Ok(())
    }

    pub fn n_clusters(&self) -> usize {
        self.n_uncontrollable / self.cluster_size.max(1)
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.replications == 0 {
            return Err(ConfigError::NoReplications);
        }
        self.spec.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Yield(#[from] YieldError),
    #[error("branch-and-bound objective {milp} differs from enumeration {brute}")]
    OracleMismatch { milp: f64, brute: f64 },
}

impl From<ModelError> for ScenarioError {
    fn from(e: ModelError) -> Self {
        ScenarioError::Control(e.into())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Cross-check every model against enumeration when it has at most
    /// [`MAX_ENUMERATED_BINARIES`] binaries.
    pub verify: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaRecord {
    pub area_id: usize,
    pub nodes: Vec<NodeId>,
    pub stable: bool,
    /// Present for areas the control center cut off.
    pub cascade: Option<CascadeResult>,
}

/// Result of the partial-communication control of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialResult {
    pub outcome: ControlOutcome,
    pub areas: Vec<AreaRecord>,
    #[serde(rename = "yield")]
    pub yield_: Yield,
}

impl PartialResult {
    pub fn unstable_areas(&self) -> usize {
        self.areas.iter().filter(|a| !a.stable).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullResult {
    pub outcome: ControlOutcome,
    #[serde(rename = "yield")]
    pub yield_: Yield,
}

fn solve(case: &GridCase, model: &ControlModel, opts: RunOptions) -> Result<ControlOutcome, ScenarioError> {
    let sol = solve_milp(&model.milp).map_err(ControlError::from)?;
    if opts.verify && model.milp.num_binaries() <= MAX_ENUMERATED_BINARIES {
        let brute = brute_force_milp(&model.milp).map_err(ControlError::from)?;
        if brute.status != sol.status || (sol.is_optimal() && (brute.objective - sol.objective).abs() > 1e-6) {
            return Err(ScenarioError::OracleMismatch {
                milp: sol.objective,
                brute: brute.objective,
            });
        }
    }
    Ok(extract_outcome(case, model, &sol)?)
}

/// Control with full communication after `failed` nodes are lost.
pub fn evaluate_full(case: &GridCase, failed: &NodeSet, opts: RunOptions) -> Result<FullResult, ScenarioError> {
    let model = build_full_model(case, failed)?;
    let outcome = solve(case, &model, opts)?;
    let yield_ = compute_yield(&outcome, &BTreeMap::new(), case)?;
    Ok(FullResult { outcome, yield_ })
}

/// Control when `uncontrollable` nodes cannot be reached, followed by relay
/// cascades in every area the control center cuts off.
pub fn evaluate_partial(
    case: &GridCase,
    failed: &NodeSet,
    uncontrollable: &NodeSet,
    mode: OperatingMode,
    last_dispatch: &Dispatch,
    opts: RunOptions,
) -> Result<PartialResult, ScenarioError> {
    let partition = apply_mode(
        &partition_areas(case, failed, uncontrollable),
        case,
        mode,
        last_dispatch,
    );
    let model = build_partial_model(case, &partition)?;
    let outcome = solve(case, &model, opts)?;
    let band = case.band();
    let mut areas = Vec::with_capacity(partition.areas.len());
    let mut cascade_served = BTreeMap::new();
    for area in &partition.areas {
        let stable = outcome.is_area_stable(area.area_id);
        let cascade = (!stable).then(|| run_cascade(&area.island(case), (band.omega_min, band.omega_max)));
        if let Some(c) = &cascade {
            cascade_served.insert(area.area_id, c.served);
        }
        areas.push(AreaRecord {
            area_id: area.area_id,
            nodes: area.nodes.iter().copied().collect(),
            stable,
            cascade,
        });
    }
    let yield_ = compute_yield(&outcome, &cascade_served, case)?;
    Ok(PartialResult { outcome, areas, yield_ })
}

/// Summary of one random scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRecord {
    pub index: u64,
    pub seed: u64,
    pub failed: Vec<NodeId>,
    pub uncontrollable: Vec<NodeId>,
    pub yield_full: Option<f64>,
    pub yield_partial: Option<f64>,
    pub stable_flags: Vec<bool>,
    pub unstable_areas: usize,
    /// Surviving load of each cut-off area, keyed by area id.
    pub cascade_served: BTreeMap<usize, f64>,
    /// Full detail of cut-off areas, including relay logs.
    pub areas: Vec<AreaRecord>,
    /// Why the scenario could not be evaluated, if it could not.
    pub anomaly: Option<Anomaly>,
}

/// Where a scenario evaluation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyStage {
    /// The configuration asked for more nodes than the case has.
    Sampling,
    FullModel,
    PartialModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anomaly {
    pub stage: AnomalyStage,
    pub message: String,
}

impl Anomaly {
    fn new(stage: AnomalyStage, e: impl ToString) -> Self {
        Anomaly {
            stage,
            message: e.to_string(),
        }
    }

    /// True when a model failed to solve, as opposed to a sampling shortfall.
    pub fn is_solver(&self) -> bool {
        self.stage != AnomalyStage::Sampling
    }
}

impl ScenarioRecord {
    pub fn is_anomalous(&self) -> bool {
        self.anomaly.is_some()
    }
}

/// Samples the failed and uncontrollable sets of replication `index`.
pub fn sample_scenario(case: &GridCase, spec: &RunSpec, seed: u64) -> Result<(NodeSet, NodeSet), SamplingError> {
    let failed = sample_failed_generators(case, spec.n_failed, seed)?;
    let unc = sample_uncontrollable_clusters(case, spec.n_clusters(), spec.cluster_size, seed, &failed)?;
    Ok((failed, unc))
}

/// Runs replication `index` of a configuration. The result depends only on
/// the case, the configuration and the index.
pub fn run_scenario(case: &GridCase, config: &ScenarioConfig, index: u64) -> ScenarioRecord {
    run_scenario_with(
        case,
        &config.spec,
        config.master_seed,
        index,
        None,
        RunOptions::default(),
    )
}

pub(crate) fn run_scenario_with(
    case: &GridCase,
    spec: &RunSpec,
    master_seed: u64,
    index: u64,
    full: Option<Result<f64, String>>,
    opts: RunOptions,
) -> ScenarioRecord {
    let seed = scenario_seed(master_seed, index);
    let mut rec = ScenarioRecord {
        index,
        seed,
        failed: Vec::new(),
        uncontrollable: Vec::new(),
        yield_full: None,
        yield_partial: None,
        stable_flags: Vec::new(),
        unstable_areas: 0,
        cascade_served: BTreeMap::new(),
        areas: Vec::new(),
        anomaly: None,
    };
    let (failed, unc) = match sample_scenario(case, spec, seed) {
        Ok(s) => s,
        Err(e) => {
            rec.anomaly = Some(Anomaly::new(AnomalyStage::Sampling, e));
            return rec;
        }
    };
    rec.failed = failed.iter().copied().collect();
    rec.uncontrollable = unc.iter().copied().collect();

    let full = full.unwrap_or_else(|| {
        evaluate_full(case, &failed, opts)
            .map(|r| r.yield_.ratio)
            .map_err(|e| e.to_string())
    });
    match full {
        Ok(y) => rec.yield_full = Some(y),
        Err(e) => {
            rec.anomaly = Some(Anomaly::new(AnomalyStage::FullModel, e));
            return rec;
        }
    }
    match evaluate_partial(case, &failed, &unc, spec.mode, &Dispatch::from_case(case), opts) {
        Ok(p) => {
            rec.yield_partial = Some(p.yield_.ratio);
            rec.stable_flags = p.areas.iter().map(|a| a.stable).collect();
            rec.unstable_areas = p.unstable_areas();
            for a in &p.areas {
                if let Some(c) = &a.cascade {
                    rec.cascade_served.insert(a.area_id, c.served);
                }
            }
            rec.areas = p.areas;
        }
        Err(e) => rec.anomaly = Some(Anomaly::new(AnomalyStage::PartialModel, e)),
    }
    rec
}
