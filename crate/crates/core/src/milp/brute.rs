use super::lp::{relax, solution_from, Relaxation};
use super::{MilpModel, MilpSolution, ModelError, SolveError, OBJECTIVE_GAP};

pub const MAX_ENUMERATED_BINARIES: usize = 20;

/// Enumerates every binary assignment and solves the remaining LP.
///
/// Intended as a reference for small models. Among assignments whose optimum
/// lies within the objective gap of the best, the lexicographically smallest
/// one (first binary varies slowest) wins.
pub fn brute_force_milp(model: &MilpModel) -> Result<MilpSolution, SolveError> {
    let binaries = model.binaries();
    if binaries.len() > MAX_ENUMERATED_BINARIES {
        return Err(ModelError::TooManyBinaries {
            binaries: binaries.len(),
            limit: MAX_ENUMERATED_BINARIES,
        }
        .into());
    }
    let n = binaries.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut unbounded = false;
    let mut fixed = model.clone();
    let mut tried = 0;
    for mask in 0u32..(1u32 << n) {
        let mut skip = false;
        for (i, &b) in binaries.iter().enumerate() {
            let v = f64::from((mask >> (n - 1 - i)) & 1);
            let var = model.var(b);
            if v < var.lower || v > var.upper {
                skip = true;
                break;
            }
            fixed.fix(b, v)?;
        }
        if skip {
            continue;
        }
        tried += 1;
        match relax(&fixed)? {
            Relaxation::Optimal(s) => {
                let x = s.values();
                let obj = model.evaluate(&x);
                if best.as_ref().is_none_or(|(b, _)| obj < b - OBJECTIVE_GAP) {
                    best = Some((obj, x));
                }
            }
            Relaxation::Infeasible => {}
            Relaxation::Unbounded => unbounded = true,
        }
    }
    let tried = tried.max(1);
    if unbounded {
        return Ok(MilpSolution::unbounded(tried));
    }
    Ok(match best {
        Some((_, x)) => solution_from(model, x, tried),
        None => MilpSolution::infeasible(tried),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Relation, Status};

    #[test]
    fn refuses_large_models() {
        let mut m = MilpModel::new();
        for i in 0..=MAX_ENUMERATED_BINARIES {
            m.add_binary(format!("b{i}"));
        }
        assert!(matches!(
            brute_force_milp(&m),
            Err(SolveError::Model(ModelError::TooManyBinaries {
                binaries: 21,
                limit: 20
            }))
        ));
    }

    #[test]
    fn small_knapsack() {
        let mut m = MilpModel::new();
        let z: Vec<_> = (0..3).map(|i| m.add_binary(format!("z{i}"))).collect();
        m.add_constraint("cap", [(z[0], 5.0), (z[1], 4.0), (z[2], 3.0)], Relation::Le, 8.0)
            .unwrap();
        m.set_objective([(z[0], -10.0), (z[1], -7.0), (z[2], -5.0)]).unwrap();
        let s = brute_force_milp(&m).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective + 15.0).abs() < 1e-9);
        assert_eq!(s.nodes, 8);
    }

    #[test]
    fn respects_prefixed_binaries() {
        let mut m = MilpModel::new();
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.fix(a, 0.0).unwrap();
        m.set_objective([(a, -1.0), (b, -1.0)]).unwrap();
        let s = brute_force_milp(&m).unwrap();
        assert_eq!(s.value(a), 0.0);
        assert!((s.objective + 1.0).abs() < 1e-12);
        assert_eq!(s.nodes, 2);
    }
}
