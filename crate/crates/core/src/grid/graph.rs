use std::collections::HashMap;

use super::NodeId;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Maximal connected node sets under `edges`.
///
/// Each component is sorted ascending and components are ordered by their
/// smallest member. Edges with an endpoint outside `nodes` are ignored.
pub fn connected_components<N, E>(nodes: N, edges: E) -> Vec<Vec<NodeId>>
where
    N: IntoIterator<Item = NodeId>,
    E: IntoIterator<Item = (NodeId, NodeId)>,
{
    let mut ids: Vec<NodeId> = nodes.into_iter().collect();
    ids.sort_unstable();
    ids.dedup();
    let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();

    for (a, b) in edges {
        let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
            continue;
        };
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        if ra != rb {
            // smaller index as root keeps roots at the smallest member
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    }

    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut out: Vec<Vec<NodeId>> = Vec::new();
    for i in 0..ids.len() {
        let r = find(&mut parent, i);
        let k = *slot.entry(r).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[k].push(ids[i]);
    }
    out
}
