//! Solver-agnostic formulation IR.
//!
//! A [`Model`] always maximizes. Quadratic objective terms are kept as the
//! symmetric half (`i <= j`, coefficient multiplies `x_i * x_j` once), and
//! PSD blocks are affine matrix maps `C + sum_i x_i A_i`.

mod lp_format;
mod sdpa;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, SymMatrix};

pub use lp_format::export_lp_format;
pub use sdpa::export_sdpa_format;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("model has PSD blocks, which the LP format cannot express")]
    HasPsdBlock,
    #[error("model has a quadratic objective, which the SDPA format cannot express")]
    HasQuadraticObjective,
    #[error("model has no PSD block")]
    NoPsdBlock,
    #[error("variable {0} has a two-point domain, which the LP format cannot express")]
    UnsupportedDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Continuous,
    /// Integer values in `[lower, upper]`; binary when the bounds are `[0, 1]`.
    Integer,
    /// Exactly one of the two bound values.
    TwoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub domain: Domain,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.domain == Domain::Integer && self.lower == 0.0 && self.upper == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    /// Amount by which `lhs rel rhs` is violated (0 when satisfied).
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Relation::Le => (lhs - rhs).max(0.0),
            Relation::Ge => (rhs - lhs).max(0.0),
            Relation::Eq => (lhs - rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * values[i]).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub constant: f64,
    pub linear: Vec<(usize, f64)>,
    /// `(i, j, c)` with `i <= j`, contributing `c * x_i * x_j`.
    pub quadratic: Vec<(usize, usize, f64)>,
}

/// Upper-triangle sparse entries `(i, j, value)` with `i <= j`.
pub type SparseSym = Vec<(usize, usize, f64)>;

/// `constant + sum_var value(var) * coefficient(var)` required to be PSD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub name: String,
    pub order: usize,
    pub constant: SparseSym,
    pub terms: Vec<(usize, SparseSym)>,
}

impl PsdBlock {
    pub fn evaluate(&self, values: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.order);
        for &(i, j, c) in &self.constant {
            m.add_to(i, j, c);
        }
        for (var, entries) in &self.terms {
            let x = values[*var];
            for &(i, j, c) in entries {
                m.add_to(i, j, c * x);
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub name: String,
    variables: Vec<Variable>,
    objective: Objective,
    constraints: Vec<Constraint>,
    psd_blocks: Vec<PsdBlock>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            objective: Objective::default(),
            constraints: Vec::new(),
            psd_blocks: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Declares a variable and returns its index. Names must be unique.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, domain: Domain) -> usize {
        let name = name.into();
        assert!(lower <= upper, "variable {name}: lower bound exceeds upper bound");
        let idx = self.variables.len();
        let previous = self.index.insert(name.clone(), idx);
        assert!(previous.is_none(), "duplicate variable name {name}");
        self.variables.push(Variable {
            name,
            lower,
            upper,
            domain,
        });
        idx
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, 0.0, 1.0, Domain::Integer)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        assert!(
            terms.iter().all(|&(i, _)| i < self.variables.len()),
            "constraint references an undeclared variable"
        );
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.objective.constant += c;
    }

    pub fn add_linear_objective(&mut self, var: usize, c: f64) {
        assert!(var < self.variables.len());
        self.objective.linear.push((var, c));
    }

    pub fn add_quadratic_objective(&mut self, a: usize, b: usize, c: f64) {
        assert!(a < self.variables.len() && b < self.variables.len());
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        self.objective.quadratic.push((i, j, c));
    }

    pub fn add_psd_block(&mut self, block: PsdBlock) {
        assert!(block.order >= 1, "PSD block must have positive order");
        let in_range = |e: &SparseSym| e.iter().all(|&(i, j, _)| i <= j && j < block.order);
        assert!(in_range(&block.constant), "PSD constant entries must be upper-triangle and in range");
        for (var, entries) in &block.terms {
            assert!(*var < self.variables.len(), "PSD block references an undeclared variable");
            assert!(in_range(entries), "PSD coefficient entries must be upper-triangle and in range");
        }
        self.psd_blocks.push(block);
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn psd_blocks(&self) -> &[PsdBlock] {
        &self.psd_blocks
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        if self.index.len() == self.variables.len() {
            self.index.get(name).copied()
        } else {
            // Deserialized models do not carry the name index.
            self.variables.iter().position(|v| v.name == name)
        }
    }

    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.variables.len());
        let obj = &self.objective;
        let linear: f64 = obj.linear.iter().map(|&(i, c)| c * values[i]).sum();
        let quad: f64 = obj.quadratic.iter().map(|&(i, j, c)| c * values[i] * values[j]).sum();
        obj.constant + linear + quad
    }

    /// First violated requirement of `values` (bounds, domains, linear rows,
    /// PSD blocks), or `None` when the point is feasible within `tol`.
    pub fn feasibility_violation(&self, values: &[f64], tol: f64) -> Option<String> {
        if values.len() != self.variables.len() {
            return Some(format!("expected {} values, got {}", self.variables.len(), values.len()));
        }
        for (var, &x) in self.variables.iter().zip(values) {
            if x < var.lower - tol || x > var.upper + tol {
                return Some(format!("{} = {x} outside [{}, {}]", var.name, var.lower, var.upper));
            }
            let off_domain = match var.domain {
                Domain::Continuous => false,
                Domain::Integer => (x - x.round()).abs() > tol,
                Domain::TwoPoint => (x - var.lower).abs() > tol && (x - var.upper).abs() > tol,
            };
            if off_domain {
                return Some(format!("{} = {x} outside its {:?} domain", var.name, var.domain));
            }
        }
        for c in &self.constraints {
            let v = c.relation.violation(c.lhs(values), c.rhs);
            if v > tol {
                return Some(format!("constraint {} violated by {v}", c.name));
            }
        }
        for block in &self.psd_blocks {
            match linalg::is_psd(&block.evaluate(values), tol.max(linalg::DEFAULT_TOL)) {
                Ok(check) if check.psd => {}
                Ok(check) => {
                    return Some(format!("PSD block {} has eigenvalue {}", block.name, check.min_eigenvalue));
                }
                Err(e) => return Some(format!("PSD block {}: {e}", block.name)),
            }
        }
        None
    }
}

/// Formats a number for the text exporters: shortest round-trip form, no `-0`.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Model {
        let mut m = Model::new("tiny");
        let a = m.add_binary("a");
        let b = m.add_var("b", 0.0, 2.0, Domain::Continuous);
        m.add_constraint("c0", vec![(a, 1.0), (b, 1.0)], Relation::Le, 2.0);
        m.add_objective_constant(1.0);
        m.add_linear_objective(b, 3.0);
        m.add_quadratic_objective(b, a, -1.0);
        m
    }

    #[test]
    fn quadratic_terms_are_canonical() {
        assert_eq!(tiny().objective().quadratic, vec![(0, 1, -1.0)]);
    }

    #[test]
    fn objective_and_feasibility() {
        let m = tiny();
        assert_eq!(m.evaluate_objective(&[1.0, 1.0]), 1.0 + 3.0 - 1.0);
        assert!(m.feasibility_violation(&[1.0, 1.0], 1e-9).is_none());
        assert!(m.feasibility_violation(&[0.5, 1.0], 1e-9).unwrap().contains("domain"));
        assert!(m.feasibility_violation(&[1.0, 1.5], 1e-9).unwrap().contains("c0"));
        assert!(m.feasibility_violation(&[1.0, 3.0], 1e-9).unwrap().contains("outside"));
    }

    #[test]
    fn var_lookup() {
        let m = tiny();
        assert_eq!(m.var_index("b"), Some(1));
        assert_eq!(m.var_index("zz"), None);
    }

    #[test]
    #[should_panic(expected = "duplicate variable")]
    fn duplicate_names_panic() {
        let mut m = Model::new("dup");
        m.add_binary("x");
        m.add_binary("x");
    }

    #[test]
    fn relation_violation() {
        assert_eq!(Relation::Le.violation(3.0, 2.0), 1.0);
        assert_eq!(Relation::Ge.violation(3.0, 2.0), 0.0);
        assert_eq!(Relation::Eq.violation(1.0, 2.5), 1.5);
    }
}
