//! Continuous relaxations, solved with a sparse revised simplex.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

use super::{MilpModel, MilpSolution, ModelError, Relation, SolveError, Status, VarId, FEASIBILITY_TOL};

/// A solved relaxation that can be re-optimized after fixing a variable.
#[derive(Clone)]
pub(crate) struct LpSession {
    solution: microlp::Solution,
    vars: Vec<microlp::Variable>,
}

pub(crate) enum Relaxation {
    Optimal(LpSession),
    Infeasible,
    Unbounded,
}

impl LpSession {
    pub(crate) fn values(&self) -> Vec<f64> {
        self.vars.iter().map(|&v| self.solution.var_value_raw(v)).collect()
    }

    /// Fixes `var` and re-optimizes from the current basis.
    pub(crate) fn fix(self, var: VarId, value: f64) -> Result<Relaxation, SolveError> {
        let vars = self.vars;
        let v = vars[var.0];
        map_outcome(self.solution.fix_var(v, value), vars)
    }
}

fn map_outcome(
    r: Result<SolveOutcome, microlp::Error>,
    vars: Vec<microlp::Variable>,
) -> Result<Relaxation, SolveError> {
    match r {
        Ok(SolveOutcome::Solution(solution)) => Ok(Relaxation::Optimal(LpSession { solution, vars })),
        Ok(SolveOutcome::Interrupted(_)) => Err(SolveError::Engine("solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(Relaxation::Infeasible),
        Err(microlp::Error::Unbounded) => Ok(Relaxation::Unbounded),
        Err(e) => Err(SolveError::Engine(e.to_string())),
    }
}

/// Solves the continuous relaxation with binaries treated as `[lower, upper]`
/// reals. Constraint rows with no terms are screened here and not passed on.
pub(crate) fn relax(model: &MilpModel) -> Result<Relaxation, SolveError> {
    let mut cost = vec![0.0; model.vars().len()];
    for &(v, c) in model.objective() {
        cost[v.0] += c;
    }
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<microlp::Variable> = model
        .vars()
        .iter()
        .zip(&cost)
        .map(|(v, &c)| p.add_var(c, (v.lower, v.upper)))
        .collect();
    for c in model.constraints() {
        if c.terms.is_empty() {
            let ok = match c.relation {
                Relation::Le => 0.0 <= c.rhs + FEASIBILITY_TOL,
                Relation::Ge => 0.0 >= c.rhs - FEASIBILITY_TOL,
                Relation::Eq => c.rhs.abs() <= FEASIBILITY_TOL,
            };
            if !ok {
                return Ok(Relaxation::Infeasible);
            }
            continue;
        }
        let op = match c.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Eq => ComparisonOp::Eq,
            Relation::Ge => ComparisonOp::Ge,
        };
        p.add_constraint(
            c.terms.iter().map(|&(v, a)| (vars[v.0], a)).collect::<Vec<_>>(),
            op,
            c.rhs,
        );
    }
    map_outcome(p.solve(), vars)
}

pub(crate) fn solution_from(model: &MilpModel, values: Vec<f64>, nodes: usize) -> MilpSolution {
    MilpSolution {
        status: Status::Optimal,
        objective: model.evaluate(&values),
        values,
        nodes,
    }
}

/// Solves a linear model. With `relaxed` set, binaries are continuous in
/// their bounds; otherwise every binary must already be fixed.
pub fn solve_lp(model: &MilpModel, relaxed: bool) -> Result<MilpSolution, SolveError> {
    if !relaxed {
        if let Some(v) = model.vars().iter().find(|v| v.binary && v.lower != v.upper) {
            return Err(ModelError::UnfixedBinary(v.name.clone()).into());
        }
    }
    Ok(match relax(model)? {
        Relaxation::Optimal(s) => solution_from(model, s.values(), 1),
        Relaxation::Infeasible => MilpSolution::infeasible(1),
        Relaxation::Unbounded => MilpSolution::unbounded(1),
    })
}
