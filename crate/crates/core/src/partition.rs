//! Decomposition of a damaged grid into the controllable area and the
//! disjoint areas that lost their communication link.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::grid::{
    connected_components, GridCase, IslandNode, IslandNodeKind, IslandState, LineId, LineSet, NodeId, NodeKind, NodeSet,
};

/// Local fallback behavior of nodes cut off from the control center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatingMode {
    /// Hold the last dispatched operating point.
    #[serde(rename = "init")]
    PInit,
    /// Trip every generator and load; buses keep carrying flow.
    #[serde(rename = "zero")]
    PZero,
}

impl OperatingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatingMode::PInit => "init",
            OperatingMode::PZero => "zero",
        }
    }
}

impl std::str::FromStr for OperatingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "init" | "p_init" | "PInit" => Ok(OperatingMode::PInit),
            "zero" | "p_zero" | "PZero" => Ok(OperatingMode::PZero),
            other => Err(format!("unknown mode `{other}` (expected init or zero)")),
        }
    }
}

/// Mode operating point of one generator or load inside an area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeInit {
    /// Fixed set point and droop sensitivity; a tripped unit has both at zero.
    Generator {
        pg: f64,
        alpha: f64,
    },
    Load {
        pl: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncontrollableArea {
    pub area_id: usize,
    pub nodes: NodeSet,
    pub internal_lines: LineSet,
    pub border_lines: LineSet,
    pub init_state: BTreeMap<NodeId, NodeInit>,
}

impl UncontrollableArea {
    /// Magnitude of the area's consumption at its mode operating point.
    pub fn init_load(&self) -> f64 {
        self.init_state
            .values()
            .map(|s| match s {
                NodeInit::Load { pl } => pl.abs(),
                NodeInit::Generator { .. } => 0.0,
            })
            .sum()
    }

    /// The area cut off from the grid at its mode operating point.
    pub fn island(&self, case: &GridCase) -> IslandState {
        let nodes = self
            .nodes
            .iter()
            .map(|&id| IslandNode {
                id,
                kind: match self.init_state.get(&id) {
                    Some(NodeInit::Generator { pg, alpha }) => IslandNodeKind::Generator { pg: *pg, alpha: *alpha },
                    Some(NodeInit::Load { pl }) => IslandNodeKind::Load { pl: *pl },
                    None => IslandNodeKind::Bus,
                },
            })
            .collect();
        let lines = self
            .internal_lines
            .iter()
            .filter_map(|&l| case.line(l).copied())
            .collect();
        IslandState::new(case.omega_s(), nodes, lines).expect("area is connected by construction")
    }
}

/// Where a surviving line sits relative to the areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineClass {
    Controllable,
    Internal(usize),
    Border(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub failed: NodeSet,
    pub surviving_nodes: NodeSet,
    pub surviving_lines: LineSet,
    pub controllable_nodes: NodeSet,
    pub controllable_lines: LineSet,
    pub areas: Vec<UncontrollableArea>,
    pub mode: OperatingMode,
    #[serde(skip)]
    area_of: HashMap<NodeId, usize>,
}

impl Partition {
    pub fn area_of(&self, node: NodeId) -> Option<usize> {
        self.area_of.get(&node).copied()
    }

    pub fn uncontrollable_nodes(&self) -> NodeSet {
        self.area_of.keys().copied().collect()
    }

    /// Classification of a surviving line; `None` for a line that touches a
    /// failed node.
    pub fn line_class(&self, line: LineId) -> Option<LineClass> {
        if self.controllable_lines.contains(&line) {
            return Some(LineClass::Controllable);
        }
        self.areas.iter().find_map(|a| {
            if a.internal_lines.contains(&line) {
                Some(LineClass::Internal(a.area_id))
            } else if a.border_lines.contains(&line) {
                Some(LineClass::Border(a.area_id))
            } else {
                None
            }
        })
    }
}

/// Splits the surviving grid into the controllable area and the connected
/// uncontrollable areas.
///
/// Failed nodes and their lines are deleted first, so a node that is both
/// failed and uncontrollable counts as failed. Areas are numbered by their
/// smallest node id; their initial state is the case dispatch (`PInit`).
pub fn partition_areas(case: &GridCase, failed: &NodeSet, uncontrollable: &NodeSet) -> Partition {
    let surviving_nodes: NodeSet = case
        .nodes()
        .iter()
        .map(|n| n.id)
        .filter(|id| !failed.contains(id))
        .collect();
    let surviving: Vec<_> = case.surviving_lines(failed).collect();
    let surviving_lines: LineSet = surviving.iter().map(|l| l.id).collect();

    let unc: NodeSet = uncontrollable.intersection(&surviving_nodes).copied().collect();
    let comps = connected_components(
        unc.iter().copied(),
        surviving
            .iter()
            .filter(|l| unc.contains(&l.from) && unc.contains(&l.to))
            .map(|l| (l.from, l.to)),
    );

    let mut area_of = HashMap::new();
    let mut areas: Vec<UncontrollableArea> = comps
        .into_iter()
        .enumerate()
        .map(|(k, nodes)| {
            for &n in &nodes {
                area_of.insert(n, k);
            }
            UncontrollableArea {
                area_id: k,
                nodes: nodes.into_iter().collect(),
                internal_lines: LineSet::new(),
                border_lines: LineSet::new(),
                init_state: BTreeMap::new(),
            }
        })
        .collect();

    let mut controllable_lines = LineSet::new();
    for l in &surviving {
        match (area_of.get(&l.from), area_of.get(&l.to)) {
            (None, None) => {
                controllable_lines.insert(l.id);
            }
            (Some(&a), Some(&b)) => {
                debug_assert_eq!(a, b, "adjacent uncontrollable nodes share an area");
                areas[a].internal_lines.insert(l.id);
            }
            (Some(&a), None) | (None, Some(&a)) => {
                areas[a].border_lines.insert(l.id);
            }
        }
    }

    let controllable_nodes = surviving_nodes
        .iter()
        .filter(|n| !area_of.contains_key(n))
        .copied()
        .collect();
    let mut partition = Partition {
        failed: failed.clone(),
        surviving_nodes,
        surviving_lines,
        controllable_nodes,
        controllable_lines,
        areas,
        mode: OperatingMode::PInit,
        area_of,
    };
    let dispatch = Dispatch::from_case(case);
    set_init_state(&mut partition, case, OperatingMode::PInit, &dispatch);
    partition
}

/// Last known set points of generators (pu, `>= 0`) and loads (pu, `<= 0`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dispatch(pub BTreeMap<NodeId, f64>);

impl Dispatch {
    /// The case file's initial dispatch.
    pub fn from_case(case: &GridCase) -> Self {
        Dispatch(
            case.nodes()
                .iter()
                .filter_map(|n| match &n.kind {
                    NodeKind::Generator(g) => Some((n.id, g.pg_init)),
                    NodeKind::Load(l) => Some((n.id, l.pl_init)),
                    NodeKind::Bus => None,
                })
                .collect(),
        )
    }

    pub fn get(&self, id: NodeId) -> Option<f64> {
        self.0.get(&id).copied()
    }
}

fn set_init_state(p: &mut Partition, case: &GridCase, mode: OperatingMode, last: &Dispatch) {
    for area in &mut p.areas {
        area.init_state.clear();
        for &id in &area.nodes {
            let Some(node) = case.node(id) else { continue };
            let init = match (&node.kind, mode) {
                (NodeKind::Generator(g), OperatingMode::PInit) => NodeInit::Generator {
                    pg: last.get(id).unwrap_or(g.pg_init),
                    alpha: case.alpha(id),
                },
                (NodeKind::Generator(_), OperatingMode::PZero) => NodeInit::Generator { pg: 0.0, alpha: 0.0 },
                (NodeKind::Load(l), OperatingMode::PInit) => NodeInit::Load {
                    pl: last.get(id).unwrap_or(l.pl_init),
                },
                (NodeKind::Load(_), OperatingMode::PZero) => NodeInit::Load { pl: 0.0 },
                (NodeKind::Bus, _) => continue,
            };
            area.init_state.insert(id, init);
        }
    }
    p.mode = mode;
}

/// Sets every area's operating point for `mode`. `PInit` copies
/// `last_dispatch` (falling back to the case values for missing entries);
/// `PZero` trips all generators and loads of the areas.
pub fn apply_mode(partition: &Partition, case: &GridCase, mode: OperatingMode, last_dispatch: &Dispatch) -> Partition {
    let mut p = partition.clone();
    set_init_state(&mut p, case, mode, last_dispatch);
    p
}
