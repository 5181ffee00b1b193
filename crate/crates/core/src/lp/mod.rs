//! Dense-tableau LP solving for the continuous relaxations, with lazy
//! separation of clique constraints.

mod rowgen;
mod separation;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Model, Relation};

pub use rowgen::{solve_relaxation_rowgen, PairVars, RowGenOptions, RowGenResult};
pub use separation::{separate_clique_cuts, CliqueCut, PairValues, SeparationMode, VIOLATION_TOL};
pub use simplex::{simplex_solve, simplex_solve_with, SimplexOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("problem has no variables")]
    NoVariables,
    #[error("variable {0} has an infinite or empty bound interval")]
    BadBounds(usize),
    #[error("row {row} references variable {var}, but there are only {num_vars}")]
    UnknownVariable { row: usize, var: usize, num_vars: usize },
    #[error("model is not linear: {0}")]
    NotLinear(String),
    #[error("LP reported {0:?}")]
    NotOptimal(LpStatus),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LpRow {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// `max c^T x + constant` over linear rows and a finite box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// `num_vars` variables in `[0, 1]` with zero objective.
    pub fn unit_box(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            objective_constant: 0.0,
            rows: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![1.0; num_vars],
        }
    }

    /// Continuous relaxation of a linear model: integrality and two-point
    /// domains are replaced by their bound intervals.
    pub fn from_model(m: &Model) -> Result<Self, LpError> {
        if !m.objective().quadratic.is_empty() {
            return Err(LpError::NotLinear(format!("{} has a quadratic objective", m.name)));
        }
        if !m.psd_blocks().is_empty() {
            return Err(LpError::NotLinear(format!("{} has PSD blocks", m.name)));
        }
        let mut objective = vec![0.0; m.num_vars()];
        for &(j, c) in &m.objective().linear {
            objective[j] += c;
        }
        Ok(Self {
            objective,
            objective_constant: m.objective().constant,
            rows: m
                .constraints()
                .iter()
                .map(|c| LpRow {
                    terms: c.terms.clone(),
                    relation: c.relation,
                    rhs: c.rhs,
                })
                .collect(),
            lower: m.variables().iter().map(|v| v.lower).collect(),
            upper: m.variables().iter().map(|v| v.upper).collect(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(LpError::NoVariables);
        }
        assert_eq!(self.lower.len(), n, "lower bound vector length");
        assert_eq!(self.upper.len(), n, "upper bound vector length");
        for j in 0..n {
            if !(self.lower[j].is_finite() && self.upper[j].is_finite() && self.lower[j] <= self.upper[j]) {
                return Err(LpError::BadBounds(j));
            }
        }
        for (row, r) in self.rows.iter().enumerate() {
            if let Some(&(var, _)) = r.terms.iter().find(|&&(j, _)| j >= n) {
                return Err(LpError::UnknownVariable { row, var, num_vars: n });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|r| r.relation.violation(r.lhs(x), r.rhs))
            .fold(0.0, f64::max);
        let bounds = x
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Largest row or bound violation of `x`.
    pub max_violation: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
