use std::collections::HashSet;

use thiserror::Error;

use super::{connected_components, DroopError, Line, LineId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IslandNodeKind {
    /// Set point `pg` and droop sensitivity `alpha` (pu/Hz).
    Generator {
        pg: f64,
        alpha: f64,
    },
    Load {
        pl: f64,
    },
    Bus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IslandNode {
    pub id: NodeId,
    pub kind: IslandNodeKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IslandError {
    #[error("line {line} references node {node} outside the island")]
    ForeignEndpoint { line: LineId, node: NodeId },
    #[error("duplicate node {0} in island")]
    DuplicateNode(NodeId),
    #[error("island is not connected ({0} components)")]
    Disconnected(usize),
}

/// A connected piece of grid operating on its own, with current injections.
///
/// Nodes and lines are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandState {
    omega_s: f64,
    nodes: Vec<IslandNode>,
    lines: Vec<Line>,
}

impl IslandState {
    pub fn new(omega_s: f64, mut nodes: Vec<IslandNode>, mut lines: Vec<Line>) -> Result<Self, IslandError> {
        nodes.sort_by_key(|n| n.id);
        lines.sort_by_key(|l| l.id);
        let mut ids = HashSet::with_capacity(nodes.len());
        for n in &nodes {
            if !ids.insert(n.id) {
                return Err(IslandError::DuplicateNode(n.id));
            }
        }
        for l in &lines {
            for end in [l.from, l.to] {
                if !ids.contains(&end) {
                    return Err(IslandError::ForeignEndpoint { line: l.id, node: end });
                }
            }
        }
        let island = IslandState { omega_s, nodes, lines };
        let parts = island.components().len();
        if parts > 1 {
            return Err(IslandError::Disconnected(parts));
        }
        Ok(island)
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    pub fn nodes(&self) -> &[IslandNode] {
        &self.nodes
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn total_alpha(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                IslandNodeKind::Generator { alpha, .. } => alpha,
                _ => 0.0,
            })
            .sum()
    }

    /// `sum(pg) + sum(pl)` at synchronous frequency.
    pub fn imbalance(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                IslandNodeKind::Generator { pg, .. } => pg,
                IslandNodeKind::Load { pl } => pl,
                IslandNodeKind::Bus => 0.0,
            })
            .sum()
    }

    /// Magnitude of the consumption currently served.
    pub fn served_load(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                IslandNodeKind::Load { pl } => pl.abs(),
                _ => 0.0,
            })
            .sum()
    }

    /// Per-node injections at frequency `omega`, aligned with [`nodes`](Self::nodes).
    pub fn injections_at(&self, omega: f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                IslandNodeKind::Generator { pg, alpha } => pg - alpha * (omega - self.omega_s),
                IslandNodeKind::Load { pl } => pl,
                IslandNodeKind::Bus => 0.0,
            })
            .collect()
    }

    pub(crate) fn components(&self) -> Vec<Vec<NodeId>> {
        connected_components(
            self.nodes.iter().map(|n| n.id),
            self.lines.iter().map(|l| (l.from, l.to)),
        )
    }

    /// The connected pieces of this island, ordered by smallest node id.
    pub fn split(&self) -> Vec<IslandState> {
        self.components()
            .into_iter()
            .map(|comp| {
                let keep: HashSet<NodeId> = comp.iter().copied().collect();
                IslandState {
                    omega_s: self.omega_s,
                    nodes: self.nodes.iter().filter(|n| keep.contains(&n.id)).copied().collect(),
                    lines: self.lines.iter().filter(|l| keep.contains(&l.from)).copied().collect(),
                }
            })
            .collect()
    }

    /// Removes a node together with its incident lines. The result may be
    /// disconnected; use [`split`](Self::split) afterwards.
    pub(crate) fn remove_node(&mut self, id: NodeId) {
        self.nodes.retain(|n| n.id != id);
        self.lines.retain(|l| !l.touches(id));
    }

    pub(crate) fn remove_line(&mut self, id: LineId) {
        self.lines.retain(|l| l.id != id);
    }
}

/// Uniform steady-state frequency of an island under droop control,
/// `omega_s + (sum pg + sum pl) / sum alpha`.
pub fn island_droop_frequency(island: &IslandState) -> Result<f64, DroopError> {
    if island.is_empty() {
        return Err(DroopError::EmptyIsland);
    }
    let alpha = island.total_alpha();
    let imbalance = island.imbalance();
    if alpha > 0.0 {
        Ok(island.omega_s + imbalance / alpha)
    } else if imbalance == 0.0 {
        Ok(island.omega_s)
    } else {
        Err(DroopError::NoEquilibrium { imbalance })
    }
}
