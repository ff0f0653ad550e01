use std::collections::BTreeMap;

use serde::Serialize;

use super::{ControlError, ControlModel};
use crate::grid::{GridCase, LineId, NodeId, NodeKind};
use crate::milp::MilpSolution;
use crate::partition::{Dispatch, NodeInit, Partition};

/// Tolerance for re-validating a solved outcome.
pub const OUTCOME_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorState {
    pub id: NodeId,
    pub area: Option<usize>,
    /// Dispatch set point; fixed at the mode value inside an area.
    pub pg: f64,
    /// Droop-adjusted output `pg - alpha (omega - omega_s)`. `None` for a
    /// tripped area, whose state is settled by the relay cascade.
    pub output: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadState {
    pub id: NodeId,
    pub area: Option<usize>,
    /// Served power (`<= 0`); zero for loads in a tripped area.
    pub served: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineState {
    pub id: LineId,
    pub flow: f64,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeState {
    pub id: NodeId,
    pub theta: f64,
    /// `None` inside a tripped area.
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaState {
    pub area_id: usize,
    pub stable: bool,
}

/// Grid state chosen by the control center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlOutcome {
    pub generators: Vec<GeneratorState>,
    pub loads: Vec<LoadState>,
    pub lines: Vec<LineState>,
    pub nodes: Vec<NodeState>,
    pub areas: Vec<AreaState>,
    pub objective: f64,
}

/// Worst-case physical residuals of an outcome, recomputed from the case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhysicsReport {
    pub balance: f64,
    pub flow_law: f64,
    pub open_flow: f64,
    pub capacity: f64,
    pub frequency_spread: f64,
    pub generator_bounds: f64,
    pub load_bounds: f64,
}

impl PhysicsReport {
    pub fn worst(&self) -> f64 {
        [
            self.balance,
            self.flow_law,
            self.open_flow,
            self.capacity,
            self.frequency_spread,
            self.generator_bounds,
            self.load_bounds,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl ControlOutcome {
    pub fn is_area_stable(&self, area: usize) -> bool {
        self.areas.iter().any(|a| a.area_id == area && a.stable)
    }

    /// Areas the control center had to cut off.
    pub fn tripped_areas(&self) -> Vec<usize> {
        self.areas.iter().filter(|a| !a.stable).map(|a| a.area_id).collect()
    }

    /// Served load of controllable nodes, as a magnitude.
    pub fn controllable_served(&self) -> f64 {
        self.loads
            .iter()
            .filter(|l| l.area.is_none())
            .map(|l| l.served.abs())
            .sum()
    }

    /// Generator outputs and served loads, for use as the next operating point.
    pub fn dispatch(&self) -> Dispatch {
        let mut d = BTreeMap::new();
        for g in &self.generators {
            d.insert(g.id, g.output.unwrap_or(g.pg));
        }
        for l in &self.loads {
            d.insert(l.id, l.served);
        }
        Dispatch(d)
    }

    /// Re-derives every physical law from the reported quantities.
    pub fn physics(&self, case: &GridCase) -> PhysicsReport {
        let mut r = PhysicsReport::default();
        let omega_s = case.omega_s();
        let nodes: BTreeMap<NodeId, &NodeState> = self.nodes.iter().map(|n| (n.id, n)).collect();
        let mut outflow: BTreeMap<NodeId, f64> = nodes.keys().map(|&n| (n, 0.0)).collect();
        let mut injection = outflow.clone();

        for ls in &self.lines {
            let l = case.line(ls.id).unwrap();
            *outflow.get_mut(&l.from).unwrap() += ls.flow;
            *outflow.get_mut(&l.to).unwrap() -= ls.flow;
            if ls.closed {
                let dtheta = nodes[&l.from].theta - nodes[&l.to].theta;
                r.flow_law = r.flow_law.max((l.reactance_x * ls.flow - dtheta).abs());
                r.capacity = r.capacity.max(ls.flow.abs() - l.f_max);
                if let (Some(a), Some(b)) = (nodes[&l.from].omega, nodes[&l.to].omega) {
                    r.frequency_spread = r.frequency_spread.max((a - b).abs());
                }
            } else {
                r.open_flow = r.open_flow.max(ls.flow.abs());
            }
        }
        for g in &self.generators {
            let Some(out) = g.output else { continue };
            *injection.get_mut(&g.id).unwrap() = out;
            if g.area.is_none() {
                let spec = case.node(g.id).and_then(|n| n.as_generator()).unwrap();
                r.generator_bounds = r.generator_bounds.max(spec.pg_min - out).max(out - spec.pg_max);
                let omega = nodes[&g.id].omega.unwrap();
                let droop = g.pg - case.alpha(g.id) * (omega - omega_s);
                r.balance = r.balance.max((droop - out).abs());
            }
        }
        for l in &self.loads {
            *injection.get_mut(&l.id).unwrap() = l.served;
            if l.area.is_none() {
                let spec = case.node(l.id).and_then(|n| n.as_load()).unwrap();
                r.load_bounds = r.load_bounds.max(spec.pl_max - l.served).max(l.served);
            }
        }
        for (id, out) in &outflow {
            r.balance = r.balance.max((injection[id] - out).abs());
        }
        r.capacity = r.capacity.max(0.0);
        r
    }
}

/// Maps an optimal solution back to grid quantities and re-validates it.
pub fn extract_outcome(
    case: &GridCase,
    model: &ControlModel,
    sol: &MilpSolution,
) -> Result<ControlOutcome, ControlError> {
    if !sol.is_optimal() {
        return Err(ControlError::NotOptimal(sol.status));
    }
    let ix = &model.index;
    let p: &Partition = &model.partition;
    let omega_s = case.omega_s();
    let bit = |v| sol.value(v).round() == 1.0;

    let areas: Vec<AreaState> = p
        .areas
        .iter()
        .map(|a| AreaState {
            area_id: a.area_id,
            stable: bit(ix.stable[a.area_id]),
        })
        .collect();
    let live = |id: NodeId| p.area_of(id).is_none_or(|k| areas[k].stable);

    let nodes: Vec<NodeState> = p
        .surviving_nodes
        .iter()
        .map(|&id| NodeState {
            id,
            theta: sol.value(ix.theta[&id]),
            omega: live(id).then(|| sol.value(ix.omega[&id])),
        })
        .collect();

    let mut lines = Vec::with_capacity(ix.flow.len());
    for (&lid, &f) in &ix.flow {
        let closed = match ix.z.get(&lid) {
            Some(&z) => bit(z),
            None => {
                let l = case.line(lid).unwrap();
                areas[p.area_of(l.from).unwrap()].stable
            }
        };
        let flow = sol.value(f);
        if !closed && flow.abs() > OUTCOME_TOL {
            return Err(ControlError::Consistency(format!("open line {lid} carries {flow}")));
        }
        lines.push(LineState {
            id: lid,
            flow: if closed { flow } else { 0.0 },
            closed,
        });
    }

    let mut generators = Vec::new();
    let mut loads = Vec::new();
    for &id in &p.surviving_nodes {
        let node = case.node(id).unwrap();
        let area = p.area_of(id);
        let omega = sol.value(ix.omega[&id]);
        match (&node.kind, area) {
            (NodeKind::Generator(_), None) => {
                let pg = sol.value(ix.pg[&id]);
                let alpha = case.alpha(id);
                generators.push(GeneratorState {
                    id,
                    area,
                    pg,
                    output: Some(pg - alpha * (omega - omega_s)),
                });
            }
            (NodeKind::Generator(_), Some(k)) => {
                let Some(&NodeInit::Generator { pg, alpha }) = p.areas[k].init_state.get(&id) else {
                    unreachable!("area generators carry an operating point")
                };
                generators.push(GeneratorState {
                    id,
                    area,
                    pg,
                    output: areas[k].stable.then_some(pg - alpha * (omega - omega_s)),
                });
            }
            (NodeKind::Load(_), None) => loads.push(LoadState {
                id,
                area,
                served: sol.value(ix.pl[&id]),
            }),
            (NodeKind::Load(_), Some(k)) => {
                let Some(&NodeInit::Load { pl }) = p.areas[k].init_state.get(&id) else {
                    unreachable!("area loads carry an operating point")
                };
                loads.push(LoadState {
                    id,
                    area,
                    served: if areas[k].stable { pl } else { 0.0 },
                });
            }
            (NodeKind::Bus, _) => {}
        }
    }

    let out = ControlOutcome {
        generators,
        loads,
        lines,
        nodes,
        areas,
        objective: sol.objective,
    };
    let report = out.physics(case);
    if report.worst() > OUTCOME_TOL {
        return Err(ControlError::Consistency(format!(
            "residuals exceed tolerance: {report:?}"
        )));
    }
    let band = case.band();
    for n in &out.nodes {
        let is_gen = case.node(n.id).is_some_and(|x| x.as_generator().is_some());
        if let (true, Some(w)) = (is_gen, n.omega) {
            if !band.contains(w, OUTCOME_TOL) {
                return Err(ControlError::Consistency(format!("generator {} runs at {w} Hz", n.id)));
            }
        }
    }
    Ok(out)
}
