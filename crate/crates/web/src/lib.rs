//! Browser bindings for the emergency-control simulator.
//!
//! Every export takes plain values and returns a JSON string, so the page
//! needs no generated type glue. The `*_json` functions hold the logic and
//! are what the native tests exercise; the `#[wasm_bindgen]` wrappers only
//! turn their errors into JavaScript exceptions.

use gridcomm_core::cascade::{run_cascade, stability_check, CascadeResult, StabilityReport};
use gridcomm_core::grid::{GridCase, NodeId, NodeSet};
use gridcomm_core::partition::{apply_mode, partition_areas, Dispatch, OperatingMode};
use gridcomm_core::scenario::{
    bundled_case_text, evaluate_full, evaluate_partial, parse_case, sweep, FullResult, PartialResult, RunOptions,
    RunSpec, SweepConfig, SweepOptions, BUNDLED_CASES,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Replications allowed in one browser sweep, to keep the page responsive.
pub const MAX_BROWSER_REPLICATIONS: usize = 200;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("results serialize")
}

fn case_from(text: &str) -> Result<GridCase, String> {
    parse_case(text).map_err(|e| e.to_string())
}

fn mode_from(s: &str) -> Result<OperatingMode, String> {
    s.parse()
}

fn ids(case: &GridCase, list: &[u32], what: &str) -> Result<NodeSet, String> {
    list.iter()
        .map(|&id| {
            let id = NodeId(id);
            if case.contains_node(id) {
                Ok(id)
            } else {
                Err(format!("{what}: node {id} is not in the case"))
            }
        })
        .collect()
}

pub fn bundled_names_json() -> String {
    to_json(&BUNDLED_CASES)
}

pub fn bundled_case_json(name: &str) -> Result<String, String> {
    bundled_case_text(name)
        .map(str::to_owned)
        .ok_or_else(|| format!("no bundled case `{name}`"))
}

#[derive(Serialize)]
struct ScenarioView {
    full: FullResult,
    partial: PartialResult,
}

/// Full and partial control of one hand-picked scenario.
pub fn solve_scenario_json(case: &str, failed: &[u32], uncontrollable: &[u32], mode: &str) -> Result<String, String> {
    let case = case_from(case)?;
    let mode = mode_from(mode)?;
    let failed = ids(&case, failed, "failed")?;
    let unc = ids(&case, uncontrollable, "uncontrollable")?;
    let full = evaluate_full(&case, &failed, RunOptions::default()).map_err(|e| e.to_string())?;
    let partial = evaluate_partial(
        &case,
        &failed,
        &unc,
        mode,
        &Dispatch::from_case(&case),
        RunOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(to_json(&ScenarioView { full, partial }))
}

#[derive(Serialize)]
struct AreaCascade {
    nodes: Vec<NodeId>,
    stability: StabilityReport,
    cascade: CascadeResult,
}

/// Relay cascade in each connected group of `island` nodes left alone.
pub fn island_cascade_json(case: &str, island: &[u32], mode: &str) -> Result<String, String> {
    let case = case_from(case)?;
    let mode = mode_from(mode)?;
    let nodes = ids(&case, island, "island")?;
    let partition = apply_mode(
        &partition_areas(&case, &NodeSet::new(), &nodes),
        &case,
        mode,
        &Dispatch::from_case(&case),
    );
    let band = case.band();
    let limits = (band.omega_min, band.omega_max);
    let areas: Vec<AreaCascade> = partition
        .areas
        .iter()
        .map(|a| {
            let island = a.island(&case);
            AreaCascade {
                nodes: a.nodes.iter().copied().collect(),
                stability: stability_check(&island, limits),
                cascade: run_cascade(&island, limits),
            }
        })
        .collect();
    Ok(to_json(&areas))
}

#[derive(Serialize)]
struct CurvePoint {
    n_uncontrollable: usize,
    mean_yield_full: Option<f64>,
    mean_yield_init: Option<f64>,
    mean_yield_zero: Option<f64>,
    frac_unstable_init: Option<f64>,
    anomalies: usize,
}

/// Mean yield against the number of uncontrollable nodes, both modes.
pub fn sweep_curve_json(
    case: &str,
    n_failed: usize,
    cluster_size: usize,
    max_uncontrollable: usize,
    replications: usize,
    master_seed: u64,
) -> Result<String, String> {
    let case = case_from(case)?;
    if replications > MAX_BROWSER_REPLICATIONS {
        return Err(format!(
            "at most {MAX_BROWSER_REPLICATIONS} replications in the browser"
        ));
    }
    if cluster_size == 0 {
        return Err("cluster size must be at least 1".into());
    }
    let counts: Vec<usize> = (0..=max_uncontrollable).step_by(cluster_size).collect();
    let mut runs = Vec::with_capacity(counts.len() * 2);
    for &n in &counts {
        for mode in [OperatingMode::PInit, OperatingMode::PZero] {
            runs.push(RunSpec {
                n_failed,
                n_uncontrollable: n,
                cluster_size,
                mode,
            });
        }
    }
    let config = SweepConfig {
        master_seed,
        replications,
        runs,
    };
    let table = sweep(&case, &config, &SweepOptions::default()).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = table
        .rows
        .chunks(2)
        .map(|pair| CurvePoint {
            n_uncontrollable: pair[0].spec.n_uncontrollable,
            mean_yield_full: pair[0].mean_yield_full,
            mean_yield_init: pair[0].mean_yield_partial,
            mean_yield_zero: pair[1].mean_yield_partial,
            frac_unstable_init: pair[0].frac_unstable,
            anomalies: pair[0].anomalies + pair[1].anomalies,
        })
        .collect();
    Ok(to_json(&points))
}

#[wasm_bindgen]
pub fn bundled_names() -> String {
    bundled_names_json()
}

#[wasm_bindgen]
pub fn bundled_case(name: &str) -> Result<String, JsError> {
    bundled_case_json(name).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve_scenario(case: &str, failed: Vec<u32>, uncontrollable: Vec<u32>, mode: &str) -> Result<String, JsError> {
    solve_scenario_json(case, &failed, &uncontrollable, mode).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_island_cascade(case: &str, island: Vec<u32>, mode: &str) -> Result<String, JsError> {
    island_cascade_json(case, &island, mode).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sweep_curve(
    case: &str,
    n_failed: usize,
    cluster_size: usize,
    max_uncontrollable: usize,
    replications: usize,
    master_seed: u64,
) -> Result<String, JsError> {
    sweep_curve_json(
        case,
        n_failed,
        cluster_size,
        max_uncontrollable,
        replications,
        master_seed,
    )
    .map_err(|e| JsError::new(&e))
}
