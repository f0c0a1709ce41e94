//! A small general linear-programming core.
//!
//! Problems are stated as `minimize c·x` over variables that are either
//! nonnegative or free, subject to `≤`, `≥` and `=` rows. [`solve`] runs a
//! bounded-variable simplex on a dense tableau; see [`simplex`] for details.

mod format;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use simplex::solve;

/// Index of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("constraint `{constraint}` references undeclared variable {var}")]
    UndeclaredVariable { constraint: String, var: usize },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("solution violates constraints by {0:e} after solve")]
    NumericalTrouble(f64),
}

/// A linear program in minimization form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub name: String,
    variables: Vec<Variable>,
    objective: Vec<(VarId, f64)>,
    constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        LpProblem { name: name.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, sign: Sign) -> VarId {
        self.variables.push(Variable { name: name.into(), sign });
        VarId(self.variables.len() - 1)
    }

    /// Adds `coef` to the objective coefficient of `var`.
    pub fn add_objective(&mut self, var: VarId, coef: f64) {
        match self.objective.iter_mut().find(|(v, _)| *v == var) {
            Some((_, c)) => *c += coef,
            None => self.objective.push((var, coef)),
        }
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { name: name.into(), terms, relation, rhs });
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_terms(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Largest violation over rows and sign restrictions.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values));
        let signs = self.variables.iter().zip(values).map(|(v, &x)| match v.sign {
            Sign::NonNegative => (-x).max(0.0),
            Sign::Free => 0.0,
        });
        rows.chain(signs).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        for c in &self.constraints {
            for &(v, a) in &c.terms {
                if v.0 >= n {
                    return Err(LpError::UndeclaredVariable { constraint: c.name.clone(), var: v.0 });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(c.name.clone()));
                }
            }
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(c.name.clone()));
            }
        }
        for &(v, a) in &self.objective {
            if v.0 >= n {
                return Err(LpError::UndeclaredVariable { constraint: String::from("objective"), var: v.0 });
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite(String::from("objective")));
            }
        }
        Ok(())
    }

    /// Renders the problem in CPLEX LP text format for cross-checking with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        format::write_lp(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective at `values`; meaningful only when optimal.
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed row and bound violation of a returned optimum.
    pub feasibility: f64,
    /// Allowed objective gap to the true optimum.
    pub objective: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { feasibility: 1e-7, objective: 1e-6 }
    }
}
