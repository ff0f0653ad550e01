//! Grid data model.
//!
//! Power is in per-unit on a single system base and frequency is in Hz.
//! Voltage magnitudes are fixed at 1 and never stored. Generators and loads
//! hang off exactly one bus; buses carry any number of lines.

mod flow;
mod graph;
mod island;
mod validate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flow::{dc_flow_solve, FlowAssignment, FlowError};
pub use graph::connected_components;
pub use island::{island_droop_frequency, IslandError, IslandNode, IslandNodeKind, IslandState};
pub use validate::{validate_case, Rule, Subject, ValidationReport, Violation};

pub const DEFAULT_OMEGA_S: f64 = 60.0;
pub const DEFAULT_OMEGA_MIN: f64 = 59.5;
pub const DEFAULT_OMEGA_MAX: f64 = 60.5;
/// Generator damping in per-unit power per per-unit frequency.
pub const DEFAULT_DAMPING: f64 = 0.02;
/// Standard per-unit regulation constant.
pub const REGULATION_PU: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type NodeSet = BTreeSet<NodeId>;
pub type LineSet = BTreeSet<LineId>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    pub pg_init: f64,
    pub pg_min: f64,
    pub pg_max: f64,
    pub damping_d: f64,
}

impl Generator {
    /// Regulation constant in Hz per pu, `R = omega_s * 0.05 / pg_init`.
    pub fn regulation_r(&self, omega_s: f64) -> f64 {
        omega_s * REGULATION_PU / self.pg_init
    }

    /// Droop sensitivity in pu/Hz, zero for a non-regulating unit.
    pub fn alpha(&self, omega_s: f64) -> f64 {
        self.pg_init / (omega_s * REGULATION_PU) + self.damping_d / omega_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Load {
    /// Initial consumption, `<= 0`.
    pub pl_init: f64,
    /// Largest-magnitude admissible consumption, `pl_max <= pl <= 0`.
    pub pl_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Generator(Generator),
    Load(Load),
    Bus,
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Generator(_) => "generator",
            NodeKind::Load(_) => "load",
            NodeKind::Bus => "bus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

impl Node {
    pub fn generator(id: u32, pg_init: f64, pg_min: f64, pg_max: f64) -> Self {
        Node {
            id: NodeId(id),
            kind: NodeKind::Generator(Generator {
                pg_init,
                pg_min,
                pg_max,
                damping_d: DEFAULT_DAMPING,
            }),
        }
    }

    pub fn load(id: u32, pl_init: f64, pl_max: f64) -> Self {
        Node {
            id: NodeId(id),
            kind: NodeKind::Load(Load { pl_init, pl_max }),
        }
    }

    pub fn bus(id: u32) -> Self {
        Node {
            id: NodeId(id),
            kind: NodeKind::Bus,
        }
    }

    pub fn as_generator(&self) -> Option<&Generator> {
        match &self.kind {
            NodeKind::Generator(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_load(&self) -> Option<&Load> {
        match &self.kind {
            NodeKind::Load(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_bus(&self) -> bool {
        matches!(self.kind, NodeKind::Bus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub id: LineId,
    pub from: NodeId,
    pub to: NodeId,
    pub reactance_x: f64,
    pub f_max: f64,
}

impl Line {
    pub fn new(id: u32, from: u32, to: u32, reactance_x: f64, f_max: f64) -> Self {
        Line {
            id: LineId(id),
            from: NodeId(from),
            to: NodeId(to),
            reactance_x,
            f_max,
        }
    }

    pub fn other_end(&self, node: NodeId) -> NodeId {
        if self.from == node {
            self.to
        } else {
            self.from
        }
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.from == node || self.to == node
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub omega_s: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for FrequencyBand {
    fn default() -> Self {
        FrequencyBand {
            omega_s: DEFAULT_OMEGA_S,
            omega_min: DEFAULT_OMEGA_MIN,
            omega_max: DEFAULT_OMEGA_MAX,
        }
    }
}

impl FrequencyBand {
    pub fn contains(&self, omega: f64, tol: f64) -> bool {
        omega >= self.omega_min - tol && omega <= self.omega_max + tol
    }
}

/// An immutable grid description.
///
/// Construction does not validate; run [`validate_case`] before handing a
/// case to the solvers. Lookups by id resolve to the first occurrence.
#[derive(Debug, Clone)]
pub struct GridCase {
    nodes: Vec<Node>,
    lines: Vec<Line>,
    band: FrequencyBand,
    node_pos: HashMap<NodeId, usize>,
    line_pos: HashMap<LineId, usize>,
    incident: HashMap<NodeId, Vec<usize>>,
}

/// Equality of the described grid; lookup tables are derived.
impl PartialEq for GridCase {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.lines == other.lines && self.band == other.band
    }
}

impl GridCase {
    pub fn new(nodes: Vec<Node>, lines: Vec<Line>, band: FrequencyBand) -> Self {
        let mut node_pos = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            node_pos.entry(n.id).or_insert(i);
        }
        let mut line_pos = HashMap::with_capacity(lines.len());
        let mut incident: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (i, l) in lines.iter().enumerate() {
            line_pos.entry(l.id).or_insert(i);
            incident.entry(l.from).or_default().push(i);
            if l.to != l.from {
                incident.entry(l.to).or_default().push(i);
            }
        }
        GridCase {
            nodes,
            lines,
            band,
            node_pos,
            line_pos,
            incident,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn band(&self) -> FrequencyBand {
        self.band
    }

    pub fn omega_s(&self) -> f64 {
        self.band.omega_s
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.node_pos.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.line_pos.get(&id).map(|&i| &self.lines[i])
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.node_pos.contains_key(&id)
    }

    /// Lines touching `id`, in file order.
    pub fn incident_lines(&self, id: NodeId) -> impl Iterator<Item = &Line> + '_ {
        self.incident
            .get(&id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.lines[i])
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.incident.get(&id).map_or(0, Vec::len)
    }

    pub fn generators(&self) -> impl Iterator<Item = (NodeId, &Generator)> + '_ {
        self.nodes.iter().filter_map(|n| n.as_generator().map(|g| (n.id, g)))
    }

    pub fn loads(&self) -> impl Iterator<Item = (NodeId, &Load)> + '_ {
        self.nodes.iter().filter_map(|n| n.as_load().map(|l| (n.id, l)))
    }

    pub fn node_ids(&self) -> NodeSet {
        self.nodes.iter().map(|n| n.id).collect()
    }

    /// Total pre-failure consumption magnitude.
    pub fn initial_load(&self) -> f64 {
        self.loads().map(|(_, l)| l.pl_init.abs()).sum()
    }

    /// Droop sensitivity of a node in pu/Hz; zero for loads, buses and
    /// non-regulating generators.
    pub fn alpha(&self, id: NodeId) -> f64 {
        self.node(id)
            .and_then(|n| regulation_alpha(n, self.band.omega_s).ok())
            .unwrap_or(0.0)
    }

    /// Lines whose endpoints both survive the removal of `failed`.
    pub fn surviving_lines<'a>(&'a self, failed: &'a NodeSet) -> impl Iterator<Item = &'a Line> + 'a {
        self.lines
            .iter()
            .filter(move |l| !failed.contains(&l.from) && !failed.contains(&l.to))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DroopError {
    #[error("node is not a generator")]
    NotGenerator,
    #[error("generator has no droop capacity (pg_init = 0 and damping = 0)")]
    ZeroDroop,
    #[error("island has no droop capacity and an imbalance of {imbalance} pu")]
    NoEquilibrium { imbalance: f64 },
    #[error("island is empty")]
    EmptyIsland,
}

/// Combined damping and droop sensitivity of a generator in pu/Hz:
/// `pg_init / (omega_s * 0.05) + damping_d / omega_s`.
pub fn regulation_alpha(gen: &Node, omega_s: f64) -> Result<f64, DroopError> {
    let g = gen.as_generator().ok_or(DroopError::NotGenerator)?;
    if g.pg_init == 0.0 && g.damping_d == 0.0 {
        return Err(DroopError::ZeroDroop);
    }
    Ok(g.alpha(omega_s))
}
