//! Central emergency control: the optimization models the control center
//! solves, the grid state read back from a solution, and the yield metric.

mod build;
mod outcome;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use build::{
    build_full_model, build_partial_model, build_partial_model_with, BigM, ControlModel, Formulation, VarIndex,
    KEEP_AREA_BONUS,
};
pub use outcome::{
    extract_outcome, AreaState, ControlOutcome, GeneratorState, LineState, LoadState, NodeState, PhysicsReport,
    OUTCOME_TOL,
};

use crate::grid::GridCase;
use crate::milp::{solve_milp, ModelError, SolveError, Status};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("control model is {0:?}")]
    NotOptimal(Status),
    #[error("solution failed re-validation: {0}")]
    Consistency(String),
}

/// Solves a built model and extracts the validated outcome.
pub fn solve_control(case: &GridCase, model: &ControlModel) -> Result<ControlOutcome, ControlError> {
    let sol = solve_milp(&model.milp)?;
    extract_outcome(case, model, &sol)
}

/// Fraction of the pre-failure load that is still served.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Yield {
    pub served: f64,
    pub initial: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum YieldError {
    #[error("no cascade result for tripped area {0}")]
    MissingCascade(usize),
    #[error("cascade result given for area {0}, which is not tripped")]
    UnexpectedCascade(usize),
    #[error("served {served} exceeds initial load {initial}")]
    Accounting { served: f64, initial: f64 },
}

/// Served load over initial load. `cascade_served` holds the surviving load
/// (magnitude) of each tripped area, keyed by area id. A case without any
/// load has yield 1.
pub fn compute_yield(
    outcome: &ControlOutcome,
    cascade_served: &BTreeMap<usize, f64>,
    case: &GridCase,
) -> Result<Yield, YieldError> {
    let tripped = outcome.tripped_areas();
    for k in &tripped {
        if !cascade_served.contains_key(k) {
            return Err(YieldError::MissingCascade(*k));
        }
    }
    if let Some(k) = cascade_served.keys().find(|k| !tripped.contains(k)) {
        return Err(YieldError::UnexpectedCascade(*k));
    }
    let kept: f64 = outcome
        .loads
        .iter()
        .filter(|l| l.area.is_some())
        .map(|l| l.served.abs())
        .sum();
    let served = outcome.controllable_served() + kept + cascade_served.values().map(|v| v.abs()).sum::<f64>();
    let initial = case.initial_load();
    let ratio = if initial > 0.0 { served / initial } else { 1.0 };
    if ratio > 1.0 + 1e-9 {
        return Err(YieldError::Accounting { served, initial });
    }
    Ok(Yield { served, initial, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Line, Node, NodeId, NodeSet};
    use crate::milp::{brute_force_milp, solve_lp};
    use crate::partition::{apply_mode, partition_areas, Dispatch, OperatingMode};
    use crate::scenario::{bundled_case, sample_scenario, scenario_seed, RunSpec};

    fn ids(xs: &[u32]) -> NodeSet {
        xs.iter().map(|&x| NodeId(x)).collect()
    }

    fn served(o: &ControlOutcome) -> f64 {
        o.loads.iter().map(|l| l.served.abs()).sum()
    }

    fn partial(case: &GridCase, failed: &[u32], unc: &[u32], mode: OperatingMode) -> ControlModel {
        let p = partition_areas(case, &ids(failed), &ids(unc));
        build_partial_model(case, &apply_mode(&p, case, mode, &Dispatch::from_case(case))).unwrap()
    }

    #[test]
    fn census_of_the_five_node_fixture() {
        let case = bundled_case("case5").unwrap();
        let m = build_full_model(&case, &NodeSet::new()).unwrap();
        let ix = &m.index;
        let counts = [
            ix.theta.len(),
            ix.omega.len(),
            ix.pg.len(),
            ix.pl.len(),
            ix.flow.len(),
            ix.z.len(),
        ];
        assert_eq!(counts, [5, 5, 1, 1, 4, 4]);
        assert_eq!(m.milp.vars().len(), 20);
        assert_eq!(m.milp.num_binaries(), 4);
    }

    #[test]
    fn five_node_fixture_is_fully_served() {
        let case = bundled_case("case5").unwrap();
        let m = build_full_model(&case, &NodeSet::new()).unwrap();
        let o = solve_control(&case, &m).unwrap();
        assert!((o.objective + 1.0).abs() < 1e-6);
        assert!((o.loads[0].served + 1.0).abs() < 1e-6);
        assert!(o.lines.iter().all(|l| l.closed));
        assert!(o.physics(&case).worst() <= OUTCOME_TOL);
        let y = compute_yield(&o, &BTreeMap::new(), &case).unwrap();
        assert!((y.ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_transport_sheds_everything() {
        let base = bundled_case("case5").unwrap();
        let lines = base.lines().iter().map(|l| Line { f_max: 0.0, ..*l }).collect();
        let case = GridCase::new(base.nodes().to_vec(), lines, base.band());
        let m = build_full_model(&case, &NodeSet::new()).unwrap();
        let o = solve_control(&case, &m).unwrap();
        assert!(o.objective.abs() < 1e-6);
        assert!(o.lines.iter().all(|l| l.flow == 0.0 || !l.closed));
    }

    #[test]
    fn a_capacity_limit_forces_partial_shedding() {
        let base = bundled_case("case5").unwrap();
        let lines = base.lines().iter().map(|l| Line { f_max: 0.7, ..*l }).collect();
        let case = GridCase::new(base.nodes().to_vec(), lines, base.band());
        let m = build_full_model(&case, &NodeSet::new()).unwrap();
        let bnb = solve_milp(&m.milp).unwrap();
        let brute = brute_force_milp(&m.milp).unwrap();
        assert!((bnb.objective - brute.objective).abs() < 1e-6);
        assert!((bnb.objective + 0.7).abs() < 1e-6);
    }

    #[test]
    fn no_areas_is_the_full_model() {
        let case = bundled_case("case30").unwrap();
        let failed = ids(&[15, 18]);
        let full = build_full_model(&case, &failed).unwrap();
        let p = partition_areas(&case, &failed, &NodeSet::new());
        for mode in [OperatingMode::PInit, OperatingMode::PZero] {
            let part = build_partial_model(&case, &apply_mode(&p, &case, mode, &Dispatch::from_case(&case))).unwrap();
            assert_eq!(part.milp, full.milp);
        }
    }

    #[test]
    fn transit_bus_keeps_carrying_power() {
        let case = bundled_case("transit").unwrap();
        let full = solve_control(&case, &build_full_model(&case, &ids(&[7])).unwrap()).unwrap();
        let m = partial(&case, &[7], &[2], OperatingMode::PZero);
        let o = solve_control(&case, &m).unwrap();
        assert!(o.is_area_stable(0));
        assert!((served(&o) - served(&full)).abs() < 1e-6);
        assert!((served(&o) - 0.6).abs() < 1e-6);
    }

    fn oversupplied_generator_case() -> GridCase {
        // the generator set point is twice what the only load can absorb
        let base = bundled_case("case5").unwrap();
        let mut nodes = base.nodes().to_vec();
        nodes[4] = Node::load(5, -0.5, -0.5);
        GridCase::new(nodes, base.lines().to_vec(), base.band())
    }

    #[test]
    fn uncontrollable_generator_with_surplus_is_cut_off() {
        let case = oversupplied_generator_case();
        let m = partial(&case, &[], &[1], OperatingMode::PInit);
        let o = solve_control(&case, &m).unwrap();
        assert!(!o.is_area_stable(0));
        assert!(o.objective.abs() < 1e-6);
        let border = &m.partition.areas[0].border_lines;
        for l in o.lines.iter().filter(|l| border.contains(&l.id)) {
            assert!(!l.closed);
            assert_eq!(l.flow, 0.0);
        }
        assert_eq!(o.generators[0].output, None);

        let mut kept = m.clone();
        kept.milp.fix(kept.index.stable[0], 1.0).unwrap();
        let brute = brute_force_milp(&kept.milp).unwrap();
        assert_eq!(brute.status, crate::milp::Status::Infeasible);
    }

    #[test]
    fn tripped_area_contributes_nothing_in_the_model() {
        let case = bundled_case("transit").unwrap();
        let m = partial(&case, &[7], &[2, 5], OperatingMode::PInit);
        let o = solve_control(&case, &m).unwrap();
        assert_eq!(o.tripped_areas(), [0]);
        let load5 = o.loads.iter().find(|l| l.id == NodeId(5)).unwrap();
        assert_eq!(load5.served, 0.0);
        for l in &o.lines {
            let line = case.line(l.id).unwrap();
            if m.partition.areas[0].nodes.contains(&line.from) || m.partition.areas[0].nodes.contains(&line.to) {
                assert_eq!(l.flow, 0.0);
            }
        }
        assert!(o.nodes.iter().filter(|n| n.id == NodeId(2)).all(|n| n.omega.is_none()));
    }

    #[test]
    fn yield_adds_three_sources() {
        let case = bundled_case("transit").unwrap();
        let m = partial(&case, &[7], &[2, 5], OperatingMode::PInit);
        let o = solve_control(&case, &m).unwrap();
        let controllable = o.controllable_served();
        // pretend relays saved half of the cut-off area's 1.0 pu load
        let cascade = BTreeMap::from([(0, 0.5)]);
        let y = compute_yield(&o, &cascade, &case).unwrap();
        assert_eq!(y.initial, 1.6);
        assert!((y.served - (controllable + 0.0 + 0.5)).abs() < 1e-12);
        assert!((y.ratio - y.served / 1.6).abs() < 1e-12);

        assert_eq!(
            compute_yield(&o, &BTreeMap::new(), &case),
            Err(YieldError::MissingCascade(0))
        );
        let extra = BTreeMap::from([(0, 0.0), (3, 0.0)]);
        assert_eq!(compute_yield(&o, &extra, &case), Err(YieldError::UnexpectedCascade(3)));
        let too_much = BTreeMap::from([(0, 5.0)]);
        assert!(matches!(
            compute_yield(&o, &too_much, &case),
            Err(YieldError::Accounting { .. })
        ));
    }

    #[test]
    fn yield_ratio_arithmetic() {
        let case = bundled_case("case5").unwrap();
        let o = solve_control(&case, &build_full_model(&case, &ids(&[1])).unwrap()).unwrap();
        let y = compute_yield(&o, &BTreeMap::new(), &case).unwrap();
        assert_eq!((y.served, y.initial, y.ratio), (0.0, 1.0, 0.0));
    }

    #[test]
    fn formulations_agree_on_the_optimum() {
        let case = bundled_case("case30").unwrap();
        let mut checked = 0;
        for i in 0..12u64 {
            let spec = RunSpec {
                n_failed: 1 + (i % 3) as usize,
                n_uncontrollable: 2,
                cluster_size: if i % 2 == 0 { 1 } else { 2 },
                mode: if i % 4 < 2 {
                    OperatingMode::PInit
                } else {
                    OperatingMode::PZero
                },
            };
            let Ok((failed, unc)) = sample_scenario(&case, &spec, scenario_seed(99, i)) else {
                continue;
            };
            let p = apply_mode(
                &partition_areas(&case, &failed, &unc),
                &case,
                spec.mode,
                &Dispatch::from_case(&case),
            );
            let tight = build_partial_model_with(&case, &p, Formulation::Tight).unwrap();
            let literal = build_partial_model_with(&case, &p, Formulation::Literal).unwrap();
            let a = solve_milp(&tight.milp).unwrap();
            let b = solve_milp(&literal.milp).unwrap();
            assert!(
                (a.objective - b.objective).abs() < 1e-6,
                "scenario {i}: {} vs {}",
                a.objective,
                b.objective
            );
            // the tight relaxation is never weaker
            let ra = solve_lp(&tight.milp, true).unwrap();
            let rb = solve_lp(&literal.milp, true).unwrap();
            assert!(ra.objective >= rb.objective - 1e-6);
            checked += 1;
        }
        assert!(checked >= 10);
    }
}
