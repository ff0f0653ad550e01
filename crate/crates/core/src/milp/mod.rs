//! Mixed-binary linear models, an LP engine, exact branch-and-bound, and an
//! enumeration oracle.
//!
//! Every model is a minimization. Tolerances: row feasibility 1e-7,
//! integrality 1e-6, absolute objective gap 1e-6.

mod bnb;
mod brute;
mod dump;
mod lp;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use bnb::solve_milp;
pub use brute::{brute_force_milp, MAX_ENUMERATED_BINARIES};
pub use lp::solve_lp;

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const OBJECTIVE_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
    /// Branching preference: fractional binaries of a higher priority are
    /// branched on first.
    pub priority: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Merged terms, one per variable, ascending by variable, no zeros.
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row, zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.relation {
            Relation::Le => (a - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - a).max(0.0),
            Relation::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable `{name}` has invalid bounds [{lower}, {upper}]")]
    BadBounds { name: String, lower: f64, upper: f64 },
    #[error("constraint `{constraint}` references undeclared variable {var}")]
    UnknownVariable { constraint: String, var: usize },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("binary variable `{0}` must stay within [0, 1]")]
    BinaryBounds(String),
    #[error("binary variable `{0}` is not fixed; solve the relaxation or the MILP instead")]
    UnfixedBinary(String),
    #[error("{binaries} binaries exceed the enumeration limit of {limit}")]
    TooManyBinaries { binaries: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("LP engine failure: {0}")]
    Engine(String),
}

/// A linear model with optional binary variables, minimized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, f64)>,
}

fn merge_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut t: Vec<(VarId, f64)> = terms.into_iter().collect();
    t.sort_by_key(|&(v, _)| v);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(t.len());
    for (v, c) in t {
        match out.last_mut() {
            Some((lv, lc)) if *lv == v => *lc += c,
            _ => out.push((v, c)),
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    out
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn binaries(&self) -> Vec<VarId> {
        (0..self.vars.len())
            .filter(|&i| self.vars[i].binary)
            .map(VarId)
            .collect()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.binary).count()
    }

    /// Adds a continuous variable; infinite bounds are allowed.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, ModelError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(ModelError::BadBounds { name, lower, upper });
        }
        self.vars.push(Variable {
            name,
            lower,
            upper,
            binary: false,
            priority: 0,
        });
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            binary: true,
            priority: 0,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<(), ModelError> {
        let name = name.into();
        let terms = merge_terms(terms);
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| v.0 >= self.vars.len()) {
            return Err(ModelError::UnknownVariable {
                constraint: name,
                var: v.0,
            });
        }
        if !rhs.is_finite() || terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(ModelError::NonFinite(name));
        }
        self.constraints.push(Constraint {
            name,
            terms,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Replaces the objective (to be minimized).
    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (VarId, f64)>) -> Result<(), ModelError> {
        let terms = merge_terms(terms);
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| v.0 >= self.vars.len()) {
            return Err(ModelError::UnknownVariable {
                constraint: "objective".into(),
                var: v.0,
            });
        }
        if terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(ModelError::NonFinite("objective".into()));
        }
        self.objective = terms;
        Ok(())
    }

    /// Tightens or relaxes a variable's bounds.
    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        let v = &mut self.vars[id.0];
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::BadBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        if v.binary && (lower < 0.0 || upper > 1.0) {
            return Err(ModelError::BinaryBounds(v.name.clone()));
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn set_priority(&mut self, id: VarId, priority: u8) {
        self.vars[id.0].priority = priority;
    }

    pub fn fix(&mut self, id: VarId, value: f64) -> Result<(), ModelError> {
        self.set_bounds(id, value, value)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Largest row or bound violation of `x`, recomputed from the model.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Largest distance of a binary variable from `{0, 1}`.
    pub fn integrality_violation(&self, x: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(x)
            .filter(|(v, _)| v.binary)
            .map(|(_, &xi)| (xi - xi.round()).abs())
            .fold(0.0, f64::max)
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: Status,
    /// Empty unless optimal.
    pub values: Vec<f64>,
    /// `+inf` when infeasible, `-inf` when unbounded.
    pub objective: f64,
    /// Branch-and-bound nodes whose relaxation was solved.
    pub nodes: usize,
}

impl MilpSolution {
    pub(crate) fn infeasible(nodes: usize) -> Self {
        MilpSolution {
            status: Status::Infeasible,
            values: Vec::new(),
            objective: f64::INFINITY,
            nodes,
        }
    }

    pub(crate) fn unbounded(nodes: usize) -> Self {
        MilpSolution {
            status: Status::Unbounded,
            values: Vec::new(),
            objective: f64::NEG_INFINITY,
            nodes,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }
}
