use std::cmp::Ordering;
use std::rc::Rc;

use super::lp::{relax, solution_from, LpSession, Relaxation};
use super::{MilpModel, MilpSolution, SolveError, VarId, INTEGRALITY_TOL, OBJECTIVE_GAP};

/// Open-node count above which selection switches from best-bound to
/// deepest-first.
const OPEN_NODE_CAP: usize = 50_000;

struct OpenNode {
    bound: f64,
    depth: usize,
    seq: usize,
    parent: Rc<LpSession>,
    var: VarId,
    value: f64,
}

fn best_first(a: &OpenNode, b: &OpenNode) -> Ordering {
    a.bound
        .total_cmp(&b.bound)
        .then(b.depth.cmp(&a.depth))
        .then(a.seq.cmp(&b.seq))
}

fn deepest_first(a: &OpenNode, b: &OpenNode) -> Ordering {
    b.depth.cmp(&a.depth).then(a.seq.cmp(&b.seq))
}

/// Most fractional binary of the highest priority present; ties go to the
/// lowest index.
fn branching_var(model: &MilpModel, x: &[f64], binaries: &[VarId]) -> Option<VarId> {
    let mut best: Option<(VarId, u8, f64)> = None;
    for &b in binaries {
        let d = (x[b.0] - x[b.0].round()).abs();
        if d <= INTEGRALITY_TOL {
            continue;
        }
        let p = model.var(b).priority;
        if best.is_none_or(|(_, bp, bd)| p > bp || (p == bp && d > bd)) {
            best = Some((b, p, d));
        }
    }
    best.map(|(b, _, _)| b)
}

/// Exact branch-and-bound over the binary variables.
///
/// Until a first integral point is found the search dives depth-first,
/// trying the rounded value of the branching variable first. After that,
/// nodes are explored best-bound first using the parent's relaxation value,
/// deeper nodes first on ties. Children re-optimize from the parent basis.
/// The returned point comes from a final LP with every binary fixed to its
/// rounded incumbent value.
pub fn solve_milp(model: &MilpModel) -> Result<MilpSolution, SolveError> {
    let binaries = model.binaries();
    let root = match relax(model)? {
        Relaxation::Optimal(s) => s,
        Relaxation::Infeasible => return Ok(MilpSolution::infeasible(1)),
        Relaxation::Unbounded => return Ok(MilpSolution::unbounded(1)),
    };

    let mut nodes = 1;
    let mut seq = 0;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut open: Vec<OpenNode> = Vec::new();

    let visit = |session: LpSession,
                 depth: usize,
                 incumbent: &mut Option<(f64, Vec<f64>)>,
                 open: &mut Vec<OpenNode>,
                 seq: &mut usize| {
        let x = session.values();
        let obj = model.evaluate(&x);
        if incumbent.as_ref().is_some_and(|(best, _)| obj >= best - OBJECTIVE_GAP) {
            return;
        }
        match branching_var(model, &x, &binaries) {
            None => *incumbent = Some((obj, x)),
            Some(var) => {
                let parent = Rc::new(session);
                let up = x[var.0] >= 0.5;
                for value in if up { [1.0, 0.0] } else { [0.0, 1.0] } {
                    open.push(OpenNode {
                        bound: obj,
                        depth: depth + 1,
                        seq: *seq,
                        parent: Rc::clone(&parent),
                        var,
                        value,
                    });
                    *seq += 1;
                }
            }
        }
    };

    visit(root, 0, &mut incumbent, &mut open, &mut seq);

    while !open.is_empty() {
        let order = if incumbent.is_none() || open.len() > OPEN_NODE_CAP {
            deepest_first
        } else {
            best_first
        };
        let pick = (0..open.len()).min_by(|&a, &b| order(&open[a], &open[b])).unwrap();
        let node = open.swap_remove(pick);
        if incumbent
            .as_ref()
            .is_some_and(|(best, _)| node.bound >= best - OBJECTIVE_GAP)
        {
            continue;
        }
        nodes += 1;
        let session = Rc::try_unwrap(node.parent).unwrap_or_else(|rc| (*rc).clone());
        match session.fix(node.var, node.value)? {
            Relaxation::Optimal(s) => visit(s, node.depth, &mut incumbent, &mut open, &mut seq),
            Relaxation::Infeasible => {}
            Relaxation::Unbounded => return Ok(MilpSolution::unbounded(nodes)),
        }
    }

    let Some((_, x)) = incumbent else {
        return Ok(MilpSolution::infeasible(nodes));
    };
    let mut fixed = model.clone();
    for &b in &binaries {
        fixed.fix(b, x[b.0].round())?;
    }
    let values = match relax(&fixed)? {
        Relaxation::Optimal(s) => s.values(),
        // numerically marginal incumbent; keep it with exact binaries
        _ => {
            let mut x = x;
            for &b in &binaries {
                x[b.0] = x[b.0].round();
            }
            x
        }
    };
    Ok(solution_from(model, values, nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve_lp, Relation, Status};

    #[test]
    fn no_binaries_matches_lp() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, 4.0).unwrap();
        let y = m.add_var("y", 0.0, 4.0).unwrap();
        m.add_constraint("c", [(x, 1.0), (y, 2.0)], Relation::Le, 5.0).unwrap();
        m.set_objective([(x, -1.0), (y, -1.0)]).unwrap();
        let a = solve_milp(&m).unwrap();
        let b = solve_lp(&m, true).unwrap();
        assert_eq!(a.status, Status::Optimal);
        assert!((a.objective - b.objective).abs() < 1e-9);
        assert!((a.objective + 4.5).abs() < 1e-9);
    }

    #[test]
    fn pick_one_of_two() {
        let mut m = MilpModel::new();
        let z1 = m.add_binary("z1");
        let z2 = m.add_binary("z2");
        m.add_constraint("c", [(z1, 1.0), (z2, 1.0)], Relation::Le, 1.0)
            .unwrap();
        m.set_objective([(z1, -1.0), (z2, -1.0)]).unwrap();
        let s = solve_milp(&m).unwrap();
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert_eq!(s.value(z1) + s.value(z2), 1.0);
    }

    #[test]
    fn fractional_root_is_branched() {
        // knapsack whose relaxation is fractional
        let mut m = MilpModel::new();
        let w = [5.0, 4.0, 3.0];
        let v = [10.0, 7.0, 5.0];
        let z: Vec<_> = (0..3).map(|i| m.add_binary(format!("z{i}"))).collect();
        m.add_constraint("cap", z.iter().zip(w).map(|(&zi, wi)| (zi, wi)), Relation::Le, 8.0)
            .unwrap();
        m.set_objective(z.iter().zip(v).map(|(&zi, vi)| (zi, -vi))).unwrap();
        let s = solve_milp(&m).unwrap();
        assert!((s.objective + 15.0).abs() < 1e-9);
        assert!(s.nodes > 1);
        assert!(m.max_violation(&s.values) <= 1e-7);
        assert_eq!(m.integrality_violation(&s.values), 0.0);
    }

    #[test]
    fn integer_infeasible() {
        let mut m = MilpModel::new();
        let z = m.add_binary("z");
        m.add_constraint("lo", [(z, 1.0)], Relation::Ge, 0.3).unwrap();
        m.add_constraint("hi", [(z, 1.0)], Relation::Le, 0.7).unwrap();
        assert_eq!(solve_milp(&m).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn deterministic_rerun() {
        let mut m = MilpModel::new();
        let z: Vec<_> = (0..6).map(|i| m.add_binary(format!("z{i}"))).collect();
        let x = m.add_var("x", 0.0, 10.0).unwrap();
        m.add_constraint("c", z.iter().map(|&v| (v, 1.7)).chain([(x, 1.0)]), Relation::Le, 5.3)
            .unwrap();
        m.set_objective(
            z.iter()
                .enumerate()
                .map(|(i, &v)| (v, -(i as f64) - 1.3))
                .chain([(x, -0.9)]),
        )
        .unwrap();
        let a = solve_milp(&m).unwrap();
        let b = solve_milp(&m).unwrap();
        assert_eq!(a, b);
    }
}
