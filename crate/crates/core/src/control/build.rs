use std::collections::BTreeMap;

use crate::grid::{GridCase, LineId, NodeId, NodeKind, NodeSet};
use crate::milp::{MilpModel, ModelError, Relation, VarId};
use crate::partition::{partition_areas, LineClass, NodeInit, Partition};

/// Objective reward for keeping an area, so that among equally good
/// dispatches the solver does not cut off an area needlessly (a load-free
/// area would otherwise be kept or dropped arbitrarily). Large enough to
/// survive the search's pruning tolerance, small enough not to trade any
/// meaningful load for it.
pub const KEEP_AREA_BONUS: f64 = 1e-5;

/// Where each grid quantity lives in the model's variable vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarIndex {
    pub theta: BTreeMap<NodeId, VarId>,
    pub omega: BTreeMap<NodeId, VarId>,
    /// Dispatch set point of controllable generators.
    pub pg: BTreeMap<NodeId, VarId>,
    /// Served power of controllable loads.
    pub pl: BTreeMap<NodeId, VarId>,
    pub flow: BTreeMap<LineId, VarId>,
    /// Line status of controllable and border lines.
    pub z: BTreeMap<LineId, VarId>,
    /// Stability flag per area, indexed by area id.
    pub stable: Vec<VarId>,
}

/// How the area constraints are written.
///
/// Both variants have the same integer solutions and optimum; they differ
/// only in the strength of the continuous relaxation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Formulation {
    /// Tripped-area generator frequencies are pinned to zero by the
    /// stability flag, one shared power big-M covers every node, and a single
    /// row per area ties all border lines to the flag.
    Literal,
    /// Area generator frequencies keep the band as plain bounds (a tripped
    /// area is decoupled, so its frequency is irrelevant), power big-Ms are
    /// sized per node, and each border line is tied to the flag on its own.
    #[default]
    Tight,
}

/// Big-M coefficients shared across a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    /// Phase-law relaxation, `sum(X * f_max)` over surviving lines.
    pub theta: f64,
    /// Frequency coherence on lines among controllable nodes.
    pub omega: f64,
    /// Frequency coherence on lines touching an area.
    pub omega_area: f64,
    /// Power-balance relaxation inside tripped areas ([`Formulation::Literal`]
    /// only; the tight variant sizes it per node).
    pub power: f64,
}

impl BigM {
    fn for_case(case: &GridCase, partition: &Partition, form: Formulation) -> Self {
        let band = case.band();
        let theta = partition
            .surviving_lines
            .iter()
            .filter_map(|&l| case.line(l))
            .map(|l| l.reactance_x * l.f_max.max(0.0))
            .sum();
        let mut power = 0.0;
        for &id in &partition.surviving_nodes {
            match case.node(id).map(|n| &n.kind) {
                Some(NodeKind::Generator(g)) => {
                    power += g.pg_max.abs() + case.alpha(id) * band.omega_max.abs();
                }
                Some(NodeKind::Load(l)) => power += l.pl_max.abs(),
                _ => {}
            }
        }
        // area set points may differ from the case limits
        for area in &partition.areas {
            for init in area.init_state.values() {
                power += match *init {
                    NodeInit::Generator { pg, .. } => pg.abs(),
                    NodeInit::Load { pl } => pl.abs(),
                };
            }
        }
        let spread = band.omega_max - band.omega_min;
        BigM {
            theta,
            omega: spread,
            omega_area: match form {
                Formulation::Literal => band.omega_max.abs().max(band.omega_min.abs()),
                Formulation::Tight => spread,
            },
            power,
        }
    }
}

/// A control model together with the maps needed to read its solution.
#[derive(Debug, Clone)]
pub struct ControlModel {
    pub milp: MilpModel,
    pub index: VarIndex,
    pub partition: Partition,
    pub big_m: BigM,
    pub formulation: Formulation,
}

/// Emergency-control model with every surviving node under central control.
pub fn build_full_model(case: &GridCase, failed: &NodeSet) -> Result<ControlModel, ModelError> {
    let partition = partition_areas(case, failed, &NodeSet::new());
    build_partial_model(case, &partition)
}

/// Emergency-control model where the partition's areas keep their mode
/// operating point and can only be kept (flag 1) or cut off (flag 0).
pub fn build_partial_model(case: &GridCase, partition: &Partition) -> Result<ControlModel, ModelError> {
    build_partial_model_with(case, partition, Formulation::default())
}

pub fn build_partial_model_with(
    case: &GridCase,
    partition: &Partition,
    form: Formulation,
) -> Result<ControlModel, ModelError> {
    let band = case.band();
    let omega_s = band.omega_s;
    let big_m = BigM::for_case(case, partition, form);
    let droop_swing = (band.omega_max - omega_s).abs().max((band.omega_min - omega_s).abs());
    let mut m = MilpModel::new();
    let mut ix = VarIndex::default();

    let inf = f64::INFINITY;
    for &id in &partition.surviving_nodes {
        ix.theta.insert(id, m.add_var(format!("theta_{id}"), -inf, inf)?);
    }
    for &id in &partition.surviving_nodes {
        let is_gen = case.node(id).is_some_and(|n| n.as_generator().is_some());
        let (lo, hi) = match (is_gen, partition.area_of(id)) {
            (true, None) => (band.omega_min, band.omega_max),
            (true, Some(_)) if form == Formulation::Literal => (band.omega_min.min(0.0), band.omega_max.max(0.0)),
            (true, Some(_)) => (band.omega_min, band.omega_max),
            (false, _) => (-inf, inf),
        };
        ix.omega.insert(id, m.add_var(format!("omega_{id}"), lo, hi)?);
    }
    for &id in &partition.controllable_nodes {
        if let Some(NodeKind::Generator(_)) = case.node(id).map(|n| &n.kind) {
            ix.pg.insert(id, m.add_var(format!("pg_{id}"), -inf, inf)?);
        }
    }
    for &id in &partition.controllable_nodes {
        if let Some(NodeKind::Load(l)) = case.node(id).map(|n| &n.kind) {
            ix.pl.insert(id, m.add_var(format!("pl_{id}"), l.pl_max.min(0.0), 0.0)?);
        }
    }
    for &lid in &partition.surviving_lines {
        let l = case.line(lid).expect("surviving line exists");
        let cap = l.f_max.max(0.0);
        ix.flow.insert(lid, m.add_var(format!("f_{lid}"), -cap, cap)?);
    }
    for &lid in &partition.surviving_lines {
        if !matches!(partition.line_class(lid), Some(LineClass::Internal(_))) {
            ix.z.insert(lid, m.add_binary(format!("z_{lid}")));
        }
    }
    for area in &partition.areas {
        let v = m.add_binary(format!("stable_{}", area.area_id));
        m.set_priority(v, 1);
        ix.stable.push(v);
    }

    // net outflow terms per node
    let mut outflow: BTreeMap<NodeId, Vec<(VarId, f64)>> =
        partition.surviving_nodes.iter().map(|&n| (n, Vec::new())).collect();
    for (&lid, &f) in &ix.flow {
        let l = case.line(lid).unwrap();
        outflow.get_mut(&l.from).unwrap().push((f, 1.0));
        outflow.get_mut(&l.to).unwrap().push((f, -1.0));
    }

    for &id in &partition.surviving_nodes {
        let node = case.node(id).unwrap();
        let out = outflow[&id].clone();
        let w = ix.omega[&id];
        match partition.area_of(id) {
            None => match &node.kind {
                NodeKind::Generator(g) => {
                    let a = case.alpha(id);
                    let pg = ix.pg[&id];
                    let mut t = out;
                    t.extend([(pg, -1.0), (w, a)]);
                    m.add_constraint(format!("bal_{id}"), t, Relation::Eq, a * omega_s)?;
                    m.add_constraint(
                        format!("out_lo_{id}"),
                        [(pg, 1.0), (w, -a)],
                        Relation::Ge,
                        g.pg_min - a * omega_s,
                    )?;
                    m.add_constraint(
                        format!("out_hi_{id}"),
                        [(pg, 1.0), (w, -a)],
                        Relation::Le,
                        g.pg_max - a * omega_s,
                    )?;
                }
                NodeKind::Load(_) => {
                    let mut t = out;
                    t.push((ix.pl[&id], -1.0));
                    m.add_constraint(format!("bal_{id}"), t, Relation::Eq, 0.0)?;
                }
                NodeKind::Bus => m.add_constraint(format!("bal_{id}"), out, Relation::Eq, 0.0)?,
            },
            Some(k) => {
                let stable = ix.stable[k];
                let area = &partition.areas[k];
                match area.init_state.get(&id) {
                    Some(&NodeInit::Generator { pg, alpha }) => {
                        // |outflow - pg + alpha (omega - omega_s)| <= M (1 - I); a
                        // tripped area carries no flow
                        let big = match form {
                            Formulation::Literal => big_m.power,
                            Formulation::Tight => pg.abs() + alpha.abs() * droop_swing,
                        };
                        let c = pg + alpha * omega_s;
                        let mut t = out;
                        t.push((w, alpha));
                        let mut hi = t.clone();
                        hi.push((stable, big));
                        m.add_constraint(format!("bal_hi_{id}"), hi, Relation::Le, big + c)?;
                        t.push((stable, -big));
                        m.add_constraint(format!("bal_lo_{id}"), t, Relation::Ge, c - big)?;
                        if form == Formulation::Literal {
                            m.add_constraint(
                                format!("freq_lo_{id}"),
                                [(w, 1.0), (stable, -band.omega_min)],
                                Relation::Ge,
                                0.0,
                            )?;
                            m.add_constraint(
                                format!("freq_hi_{id}"),
                                [(w, 1.0), (stable, -band.omega_max)],
                                Relation::Le,
                                0.0,
                            )?;
                        }
                    }
                    Some(&NodeInit::Load { pl }) => {
                        let big = match form {
                            Formulation::Literal => big_m.power,
                            Formulation::Tight => pl.abs(),
                        };
                        let mut hi = out.clone();
                        hi.push((stable, big));
                        m.add_constraint(format!("bal_hi_{id}"), hi, Relation::Le, big + pl)?;
                        let mut lo = out;
                        lo.push((stable, -big));
                        m.add_constraint(format!("bal_lo_{id}"), lo, Relation::Ge, pl - big)?;
                    }
                    // every incident line carries zero flow once the area trips,
                    // so the balance holds in both states
                    None => m.add_constraint(format!("bal_{id}"), out, Relation::Eq, 0.0)?,
                }
            }
        }
    }

    for &lid in &partition.surviving_lines {
        let l = case.line(lid).unwrap();
        let f = ix.flow[&lid];
        let (tf, tt) = (ix.theta[&l.from], ix.theta[&l.to]);
        let (wf, wt) = (ix.omega[&l.from], ix.omega[&l.to]);
        let class = partition.line_class(lid).unwrap();
        // the "open" indicator: z for switchable lines, I for area interiors
        let (on, m_omega) = match class {
            LineClass::Controllable => (ix.z[&lid], big_m.omega),
            LineClass::Border(_) => (ix.z[&lid], big_m.omega_area),
            LineClass::Internal(k) => (ix.stable[k], big_m.omega_area),
        };
        let (mt, x, cap) = (big_m.theta, l.reactance_x, l.f_max.max(0.0));
        m.add_constraint(
            format!("law_hi_{lid}"),
            [(f, x), (tf, -1.0), (tt, 1.0), (on, mt)],
            Relation::Le,
            mt,
        )?;
        m.add_constraint(
            format!("law_lo_{lid}"),
            [(f, x), (tf, -1.0), (tt, 1.0), (on, -mt)],
            Relation::Ge,
            -mt,
        )?;
        m.add_constraint(format!("cap_hi_{lid}"), [(f, 1.0), (on, -cap)], Relation::Le, 0.0)?;
        m.add_constraint(format!("cap_lo_{lid}"), [(f, 1.0), (on, cap)], Relation::Ge, 0.0)?;
        m.add_constraint(
            format!("coh_hi_{lid}"),
            [(wf, 1.0), (wt, -1.0), (on, m_omega)],
            Relation::Le,
            m_omega,
        )?;
        m.add_constraint(
            format!("coh_lo_{lid}"),
            [(wf, 1.0), (wt, -1.0), (on, -m_omega)],
            Relation::Ge,
            -m_omega,
        )?;
    }

    for area in &partition.areas {
        let stable = ix.stable[area.area_id];
        match form {
            Formulation::Literal if !area.border_lines.is_empty() => {
                let n = area.border_lines.len() as f64;
                let terms = area.border_lines.iter().map(|l| (ix.z[l], 1.0)).chain([(stable, -n)]);
                m.add_constraint(format!("island_{}", area.area_id), terms, Relation::Le, 0.0)?;
            }
            Formulation::Literal => {}
            Formulation::Tight => {
                for l in &area.border_lines {
                    m.add_constraint(
                        format!("island_{}_{l}", area.area_id),
                        [(ix.z[l], 1.0), (stable, -1.0)],
                        Relation::Le,
                        0.0,
                    )?;
                }
            }
        }
    }

    let mut objective: Vec<(VarId, f64)> = ix.pl.values().map(|&v| (v, 1.0)).collect();
    for area in &partition.areas {
        let init: f64 = area
            .init_state
            .values()
            .map(|s| match *s {
                NodeInit::Load { pl } => pl,
                NodeInit::Generator { .. } => 0.0,
            })
            .sum();
        objective.push((ix.stable[area.area_id], init - KEEP_AREA_BONUS));
    }
    m.set_objective(objective)?;

    Ok(ControlModel {
        milp: m,
        index: ix,
        partition: partition.clone(),
        big_m,
        formulation: form,
    })
}

impl ControlModel {
    /// Pins an area's stability flag and, when kept, opens its border lines.
    /// Used to ask whether the area can run on its own.
    pub fn isolate_area(&mut self, area: usize, stable: bool) -> Result<(), ModelError> {
        self.milp.fix(self.index.stable[area], if stable { 1.0 } else { 0.0 })?;
        for l in &self.partition.areas[area].border_lines {
            self.milp.fix(self.index.z[l], 0.0)?;
        }
        Ok(())
    }
}
