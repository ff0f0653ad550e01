//! Protection-relay cascade inside an island that was cut off from the grid
//! without central control.
//!
//! Each step re-solves the droop equilibrium of every sub-island and fires a
//! single relay in the first sub-island (by smallest node id) that is not
//! stable: frequency relays before line relays.

use serde::Serialize;

use crate::grid::{dc_flow_solve, island_droop_frequency, DroopError, IslandNodeKind, IslandState, LineId, NodeId};

/// Slack when comparing frequencies and flows against their limits.
pub const STABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instability {
    NoEquilibrium,
    UnderFrequency,
    OverFrequency,
    Overload,
}

impl Instability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Instability::NoEquilibrium => "no-equilibrium",
            Instability::UnderFrequency => "under-frequency",
            Instability::OverFrequency => "over-frequency",
            Instability::Overload => "overload",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// Droop equilibrium, when one exists.
    pub frequency: Option<f64>,
    /// First violated condition.
    pub diagnostic: Option<Instability>,
    /// Worst line `|f| / f_max` at the equilibrium; zero when not computed.
    pub max_loading: f64,
}

struct Overload {
    line: LineId,
    ratio: f64,
    /// Some line exceeds its capacity by more than the tolerance.
    exceeded: bool,
}

fn worst_line(island: &IslandState, omega: f64) -> Option<Overload> {
    if island.lines().is_empty() {
        return None;
    }
    let inj = island.injections_at(omega);
    // flows exist for any connected island at its droop equilibrium
    let fa = dc_flow_solve(island, &inj, island.nodes()[0].id).ok()?;
    let mut worst: Option<Overload> = None;
    let mut exceeded = false;
    for (l, f) in island.lines().iter().zip(&fa.flows) {
        exceeded |= f.abs() > l.f_max + STABILITY_TOL;
        let ratio = if l.f_max > 0.0 {
            f.abs() / l.f_max
        } else if f.abs() > STABILITY_TOL {
            f64::INFINITY
        } else {
            0.0
        };
        if worst.as_ref().is_none_or(|w| ratio > w.ratio) {
            worst = Some(Overload {
                line: l.id,
                ratio,
                exceeded: false,
            });
        }
    }
    worst.map(|w| Overload { exceeded, ..w })
}

fn overloaded(worst: &Option<Overload>) -> bool {
    worst.as_ref().is_some_and(|w| w.exceeded)
}

/// Whether a connected island can run on droop control alone.
pub fn stability_check(island: &IslandState, limits: (f64, f64)) -> StabilityReport {
    let (omega_min, omega_max) = limits;
    let unstable = |frequency, d, max_loading| StabilityReport {
        stable: false,
        frequency,
        diagnostic: Some(d),
        max_loading,
    };
    if island.is_empty() {
        return StabilityReport {
            stable: true,
            frequency: None,
            diagnostic: None,
            max_loading: 0.0,
        };
    }
    let omega = match island_droop_frequency(island) {
        Ok(w) => w,
        Err(_) => return unstable(None, Instability::NoEquilibrium, 0.0),
    };
    if omega < omega_min - STABILITY_TOL {
        return unstable(Some(omega), Instability::UnderFrequency, 0.0);
    }
    if omega > omega_max + STABILITY_TOL {
        return unstable(Some(omega), Instability::OverFrequency, 0.0);
    }
    let worst = worst_line(island, omega);
    let loading = worst.as_ref().map_or(0.0, |w| w.ratio);
    if overloaded(&worst) {
        return unstable(Some(omega), Instability::Overload, loading);
    }
    StabilityReport {
        stable: true,
        frequency: Some(omega),
        diagnostic: None,
        max_loading: loading,
    }
}

/// Which unit a frequency relay picks first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum RelayOrder {
    /// Smallest generator output / smallest load first.
    #[default]
    SmallestFirst,
    LargestFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "target")]
pub enum Relay {
    TripGenerator(NodeId),
    ShedLoad(NodeId),
    TripLine(LineId),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelayAction {
    #[serde(flatten)]
    pub relay: Relay,
    /// Frequency (Hz) seen by a generator or load relay, loading ratio seen
    /// by a line relay; absent when the island had no equilibrium.
    pub observed: Option<f64>,
    /// Total served load after the action.
    pub served_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubIsland {
    pub nodes: Vec<NodeId>,
    pub frequency: Option<f64>,
    pub served: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeResult {
    pub initial_served: f64,
    pub served: f64,
    pub actions: Vec<RelayAction>,
    pub islands: Vec<SubIsland>,
}

fn served(parts: &[IslandState]) -> f64 {
    parts.iter().map(|p| p.served_load()).sum()
}

fn pick<'a>(candidates: impl Iterator<Item = (NodeId, f64)> + 'a, order: RelayOrder) -> Option<NodeId> {
    let mut best: Option<(NodeId, f64)> = None;
    for (id, key) in candidates {
        let better = match (best, order) {
            (None, _) => true,
            (Some((_, b)), RelayOrder::SmallestFirst) => key < b,
            (Some((_, b)), RelayOrder::LargestFirst) => key > b,
        };
        if better {
            best = Some((id, key));
        }
    }
    best.map(|(id, _)| id)
}

fn generators(island: &IslandState, omega: f64) -> impl Iterator<Item = (NodeId, f64)> + '_ {
    let omega_s = island.omega_s();
    island.nodes().iter().filter_map(move |n| match n.kind {
        IslandNodeKind::Generator { pg, alpha } => Some((n.id, pg - alpha * (omega - omega_s))),
        _ => None,
    })
}

fn loads(island: &IslandState) -> impl Iterator<Item = (NodeId, f64)> + '_ {
    island.nodes().iter().filter_map(|n| match n.kind {
        IslandNodeKind::Load { pl } if pl != 0.0 => Some((n.id, pl.abs())),
        _ => None,
    })
}

/// A relay and the quantity it observed when it fired.
type Firing = (Relay, Option<f64>);

/// Runs relays until every sub-island is stable or empty, using the default
/// relay order.
pub fn run_cascade(island: &IslandState, limits: (f64, f64)) -> CascadeResult {
    run_cascade_with(island, limits, RelayOrder::SmallestFirst)
}

pub fn run_cascade_with(island: &IslandState, limits: (f64, f64), order: RelayOrder) -> CascadeResult {
    let (omega_min, omega_max) = limits;
    let budget = island.nodes().len() + island.lines().len();
    let initial_served = island.served_load();
    let mut parts: Vec<IslandState> = island.split();
    let mut actions = Vec::new();

    loop {
        let mut fired: Option<(usize, Vec<Firing>)> = None;
        for (i, part) in parts.iter().enumerate() {
            let step: Vec<Firing> = match island_droop_frequency(part) {
                Err(DroopError::NoEquilibrium { imbalance }) if imbalance < 0.0 => {
                    loads(part).map(|(id, _)| (Relay::ShedLoad(id), None)).collect()
                }
                Err(DroopError::NoEquilibrium { .. }) => {
                    let pg = part.nodes().iter().filter_map(|n| match n.kind {
                        IslandNodeKind::Generator { pg, .. } => Some((n.id, pg)),
                        _ => None,
                    });
                    pick(pg, order)
                        .map(|id| vec![(Relay::TripGenerator(id), None)])
                        .unwrap_or_default()
                }
                Err(_) => Vec::new(),
                Ok(w) if w > omega_max + STABILITY_TOL => pick(generators(part, w), order)
                    .map(|id| vec![(Relay::TripGenerator(id), Some(w))])
                    .unwrap_or_default(),
                Ok(w) if w < omega_min - STABILITY_TOL => {
                    let target = pick(loads(part), order)
                        .map(Relay::ShedLoad)
                        .or_else(|| pick(generators(part, w), order).map(Relay::TripGenerator));
                    target.map(|r| vec![(r, Some(w))]).unwrap_or_default()
                }
                Ok(w) => {
                    let worst = worst_line(part, w);
                    if overloaded(&worst) {
                        let w = worst.unwrap();
                        vec![(Relay::TripLine(w.line), Some(w.ratio))]
                    } else {
                        Vec::new()
                    }
                }
            };
            if !step.is_empty() {
                fired = Some((i, step));
                break;
            }
        }
        let Some((i, step)) = fired else { break };

        let mut part = parts.remove(i);
        let others = served(&parts);
        for (relay, observed) in step {
            match relay {
                Relay::TripGenerator(id) | Relay::ShedLoad(id) => part.remove_node(id),
                Relay::TripLine(id) => part.remove_line(id),
            }
            actions.push(RelayAction {
                relay,
                observed,
                served_after: others + part.served_load(),
            });
        }
        let pieces: Vec<IslandState> = part.split().into_iter().filter(|p| !p.is_empty()).collect();
        parts.splice(i..i, pieces);
        parts.sort_by_key(|p| p.nodes()[0].id);
        assert!(actions.len() <= budget, "cascade exceeded its action budget");
    }

    let islands = parts
        .iter()
        .map(|p| SubIsland {
            nodes: p.nodes().iter().map(|n| n.id).collect(),
            frequency: island_droop_frequency(p).ok(),
            served: p.served_load(),
        })
        .collect();
    CascadeResult {
        initial_served,
        served: served(&parts),
        actions,
        islands,
    }
}
