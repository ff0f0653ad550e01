//! Seeded sampling of generator failures and communication-loss clusters.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{GridCase, NodeId, NodeSet};

const FAILURE_STREAM: u64 = 1;
const CLUSTER_STREAM: u64 = 2;
const ROOTS_PER_CLUSTER: usize = 64;
const RESTARTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("asked for {requested} failed generators but the case has {available}")]
    TooManyFailures { requested: usize, available: usize },
    #[error("asked for {requested} uncontrollable nodes but only {available} are eligible")]
    TooManyNodes { requested: usize, available: usize },
    #[error("cluster size must be at least 1")]
    ZeroClusterSize,
    #[error("could not place {n_clusters} non-adjacent clusters of size {cluster_size} after {attempts} attempts")]
    Infeasible {
        n_clusters: usize,
        cluster_size: usize,
        attempts: usize,
    },
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of replication `index`: `splitmix64(master ^ splitmix64(index))`.
pub fn scenario_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform sample of `n` distinct generators.
pub fn sample_failed_generators(case: &GridCase, n: usize, seed: u64) -> Result<NodeSet, SamplingError> {
    let gens: Vec<NodeId> = case
        .generators()
        .map(|(id, _)| id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if n > gens.len() {
        return Err(SamplingError::TooManyFailures {
            requested: n,
            available: gens.len(),
        });
    }
    let mut r = rng(seed, FAILURE_STREAM);
    Ok(gens.choose_multiple(&mut r, n).copied().collect())
}

/// Adjacency among nodes outside `exclude`.
fn surviving_adjacency(case: &GridCase, exclude: &NodeSet) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = case
        .nodes()
        .iter()
        .map(|n| n.id)
        .filter(|id| !exclude.contains(id))
        .map(|id| (id, BTreeSet::new()))
        .collect();
    for l in case.surviving_lines(exclude) {
        adj.get_mut(&l.from).unwrap().insert(l.to);
        adj.get_mut(&l.to).unwrap().insert(l.from);
    }
    adj
}

/// Samples `n_clusters` connected clusters of `cluster_size` nodes each,
/// avoiding `exclude`. Clusters are pairwise non-adjacent in the grid
/// without `exclude`, so each one forms its own area.
///
/// Clusters are grown one after another from the same random stream, so
/// asking for more clusters with the same seed extends the earlier answer
/// whenever no restart was needed.
pub fn sample_uncontrollable_clusters(
    case: &GridCase,
    n_clusters: usize,
    cluster_size: usize,
    seed: u64,
    exclude: &NodeSet,
) -> Result<NodeSet, SamplingError> {
    if n_clusters == 0 {
        return Ok(NodeSet::new());
    }
    if cluster_size == 0 {
        return Err(SamplingError::ZeroClusterSize);
    }
    let adj = surviving_adjacency(case, exclude);
    let requested = n_clusters * cluster_size;
    if requested > adj.len() {
        return Err(SamplingError::TooManyNodes {
            requested,
            available: adj.len(),
        });
    }
    let mut r = rng(seed, CLUSTER_STREAM);
    let mut attempts = 0;
    for _ in 0..RESTARTS {
        // nodes that are taken or touch a taken node
        let mut blocked = NodeSet::new();
        let mut chosen = NodeSet::new();
        let mut placed = 0;
        while placed < n_clusters {
            let mut grown = None;
            for _ in 0..ROOTS_PER_CLUSTER {
                attempts += 1;
                let roots: Vec<NodeId> = adj.keys().filter(|n| !blocked.contains(n)).copied().collect();
                let Some(&root) = roots.choose(&mut r) else { break };
                if let Some(c) = grow(&adj, &blocked, root, cluster_size, &mut r) {
                    grown = Some(c);
                    break;
                }
            }
            let Some(cluster) = grown else { break };
            for n in &cluster {
                blocked.insert(*n);
                blocked.extend(adj[n].iter().copied());
            }
            chosen.extend(cluster);
            placed += 1;
        }
        if placed == n_clusters {
            return Ok(chosen);
        }
    }
    Err(SamplingError::Infeasible {
        n_clusters,
        cluster_size,
        attempts,
    })
}

fn grow(
    adj: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    blocked: &NodeSet,
    root: NodeId,
    size: usize,
    r: &mut ChaCha8Rng,
) -> Option<NodeSet> {
    let mut cluster = NodeSet::from([root]);
    while cluster.len() < size {
        let frontier: Vec<NodeId> = cluster
            .iter()
            .flat_map(|n| adj[n].iter())
            .filter(|n| !cluster.contains(n) && !blocked.contains(n))
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        cluster.insert(*frontier.choose(r)?);
    }
    Some(cluster)
}

/// Whether `nodes` splits into connected clusters of exactly `size` nodes
/// with no line between different clusters (lines at `exclude` ignored).
pub fn clusters_are_well_formed(case: &GridCase, nodes: &NodeSet, size: usize, exclude: &NodeSet) -> bool {
    let inner = case
        .surviving_lines(exclude)
        .filter(|l| nodes.contains(&l.from) && nodes.contains(&l.to))
        .map(|l| (l.from, l.to));
    let comps = crate::grid::connected_components(nodes.iter().copied(), inner);
    nodes.is_disjoint(exclude) && comps.iter().all(|c| c.len() == size)
}
