//! Two-phase primal simplex on a dense tableau, with dual-simplex
//! re-optimization after rows are appended.
//!
//! Variables are shifted to `x' = x - lower`, and each finite upper bound
//! becomes an explicit `x' <= upper - lower` row.

use crate::model::Relation;

use super::{LpError, LpProblem, LpRow, LpSolution, LpStatus};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimplexOptions {
    /// Pivot budget; `None` means `50 * (rows + cols)`.
    pub max_iterations: Option<usize>,
}

pub fn simplex_solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    simplex_solve_with(p, SimplexOptions::default())
}

pub fn simplex_solve_with(p: &LpProblem, opts: SimplexOptions) -> Result<LpSolution, LpError> {
    let mut t = Tableau::new(p, opts)?;
    let status = t.solve();
    Ok(t.solution(p, status))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    Infeasible,
    IterationLimit,
}

pub(crate) struct Tableau {
    n: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs of the current objective (maximization).
    cost: Vec<f64>,
    /// Objective value in shifted coordinates.
    value: f64,
    banned: Vec<bool>,
    phase_one_artificials: Vec<usize>,
    is_basic: Vec<bool>,
    structural_cost: Vec<f64>,
    lower: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    explicit_limit: Option<usize>,
}

impl Tableau {
    pub(crate) fn new(p: &LpProblem, opts: SimplexOptions) -> Result<Self, LpError> {
        p.validate()?;
        let n = p.num_vars();
        let mut t = Tableau {
            n,
            rows: Vec::new(),
            rhs: Vec::new(),
            basis: Vec::new(),
            cost: vec![0.0; n],
            value: 0.0,
            banned: vec![false; n],
            phase_one_artificials: Vec::new(),
            is_basic: vec![false; n],
            structural_cost: p.objective.clone(),
            lower: p.lower.clone(),
            iterations: 0,
            max_iterations: 0,
            explicit_limit: opts.max_iterations,
        };

        let mut artificial_rows = Vec::new();
        let bound_rows = (0..n).map(|j| LpRow {
            terms: vec![(j, 1.0)],
            relation: Relation::Le,
            rhs: p.upper[j],
        });
        for row in p.rows.iter().cloned().chain(bound_rows) {
            let (mut dense, mut rhs) = t.shifted(&row);
            let mut relation = row.relation;
            if rhs < 0.0 {
                dense.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
                relation = match relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            let r = t.push_row(dense, rhs);
            match relation {
                Relation::Le => {
                    let s = t.push_column();
                    t.rows[r][s] = 1.0;
                    t.set_basic(r, s);
                }
                Relation::Ge | Relation::Eq => {
                    if relation == Relation::Ge {
                        let s = t.push_column();
                        t.rows[r][s] = -1.0;
                    }
                    let a = t.push_column();
                    t.rows[r][a] = 1.0;
                    t.set_basic(r, a);
                    artificial_rows.push(r);
                }
            }
        }
        t.refresh_limit();

        // Phase-1 objective: maximize minus the sum of artificials.
        if !artificial_rows.is_empty() {
            let artificials: Vec<usize> = artificial_rows.iter().map(|&r| t.basis[r]).collect();
            t.cost.iter_mut().for_each(|c| *c = 0.0);
            t.value = 0.0;
            for &r in &artificial_rows {
                for (c, a) in t.cost.iter_mut().zip(&t.rows[r]) {
                    *c += a;
                }
                t.value -= t.rhs[r];
            }
            for &a in &artificials {
                t.cost[a] = 0.0;
            }
            t.phase_one_artificials = artificials;
        }
        Ok(t)
    }

    fn refresh_limit(&mut self) {
        self.max_iterations = self
            .explicit_limit
            .unwrap_or(50 * (self.rows.len() + self.cost.len()));
    }

    fn shifted(&self, row: &LpRow) -> (Vec<f64>, f64) {
        let mut dense = vec![0.0; self.cost.len()];
        let mut rhs = row.rhs;
        for &(j, a) in &row.terms {
            dense[j] += a;
            rhs -= a * self.lower[j];
        }
        (dense, rhs)
    }

    fn push_row(&mut self, dense: Vec<f64>, rhs: f64) -> usize {
        debug_assert_eq!(dense.len(), self.cost.len());
        self.rows.push(dense);
        self.rhs.push(rhs);
        self.basis.push(usize::MAX);
        self.rows.len() - 1
    }

    fn push_column(&mut self) -> usize {
        for row in &mut self.rows {
            row.push(0.0);
        }
        self.cost.push(0.0);
        self.banned.push(false);
        self.is_basic.push(false);
        self.cost.len() - 1
    }

    fn set_basic(&mut self, r: usize, col: usize) {
        if self.basis[r] != usize::MAX {
            self.is_basic[self.basis[r]] = false;
        }
        self.basis[r] = col;
        self.is_basic[col] = true;
    }

    fn pivot(&mut self, p: usize, e: usize) {
        let piv = self.rows[p][e];
        let inv = 1.0 / piv;
        for a in self.rows[p].iter_mut() {
            *a *= inv;
        }
        self.rhs[p] *= inv;
        self.rows[p][e] = 1.0;
        let nz: Vec<usize> = self.rows[p]
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, _)| j)
            .collect();
        let (pivot_rhs, pivot_row) = (self.rhs[p], std::mem::take(&mut self.rows[p]));
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for &j in &nz {
                    row[j] -= f * pivot_row[j];
                }
                row[e] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -FEAS_TOL * 1e-3 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.cost[e];
        if f != 0.0 {
            for &j in &nz {
                self.cost[j] -= f * pivot_row[j];
            }
            self.cost[e] = 0.0;
            self.value += f * pivot_rhs;
        }
        self.rows[p] = pivot_row;
        self.set_basic(p, e);
        self.iterations += 1;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let candidates = self
            .cost
            .iter()
            .enumerate()
            .filter(|&(j, &c)| c > COST_TOL && !self.banned[j] && !self.is_basic[j]);
        if bland {
            candidates.map(|(j, _)| j).next()
        } else {
            candidates.max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).map(|(j, _)| j)
        }
    }

    fn leaving(&self, e: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = row[e];
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let better = if (ratio - br).abs() <= 1e-12 {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            a > self.rows[bi][e]
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn primal(&mut self) -> Outcome {
        let mut stall = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::IterationLimit;
            }
            let bland = stall >= STALL_LIMIT;
            let Some(e) = self.entering(bland) else {
                return Outcome::Optimal;
            };
            let Some(p) = self.leaving(e, bland) else {
                return Outcome::Unbounded;
            };
            let step = self.rhs[p].max(0.0) / self.rows[p][e];
            stall = if step <= 1e-12 { stall + 1 } else { 0 };
            self.pivot(p, e);
        }
    }

    fn dual(&mut self) -> Outcome {
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::IterationLimit;
            }
            let leave = self
                .rhs
                .iter()
                .enumerate()
                .filter(|(_, &b)| b < -FEAS_TOL)
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i);
            let Some(p) = leave else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for (j, &a) in self.rows[p].iter().enumerate() {
                if a >= -PIVOT_TOL || self.banned[j] || self.is_basic[j] {
                    continue;
                }
                let ratio = self.cost[j].min(0.0) / a;
                if best.is_none_or(|(_, br)| ratio < br - 1e-12) {
                    best = Some((j, ratio));
                }
            }
            let Some((e, _)) = best else {
                return Outcome::Infeasible;
            };
            self.pivot(p, e);
        }
    }

    pub(crate) fn solve(&mut self) -> LpStatus {
        if !self.phase_one_artificials.is_empty() {
            match self.primal() {
                Outcome::IterationLimit => return LpStatus::IterationLimit,
                Outcome::Unbounded => unreachable!("phase one is bounded above by zero"),
                Outcome::Optimal | Outcome::Infeasible => {}
            }
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
            if self.value < -1e-7 * scale {
                return LpStatus::Infeasible;
            }
            let artificials = std::mem::take(&mut self.phase_one_artificials);
            for &a in &artificials {
                self.banned[a] = true;
            }
            // Drive remaining basic artificials out at level zero.
            for r in 0..self.rows.len() {
                if self.banned[self.basis[r]] {
                    let col = (0..self.cost.len())
                        .filter(|&j| !self.banned[j] && !self.is_basic[j])
                        .max_by(|&a, &b| self.rows[r][a].abs().total_cmp(&self.rows[r][b].abs()));
                    if let Some(j) = col.filter(|&j| self.rows[r][j].abs() > 1e-7) {
                        self.pivot(r, j);
                    }
                }
            }
        }
        self.install_objective();
        { let o = self.primal(); self.finish(o) }
    }

    fn finish(&self, outcome: Outcome) -> LpStatus {
        match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Infeasible => LpStatus::Infeasible,
            Outcome::IterationLimit => LpStatus::IterationLimit,
            Outcome::Unbounded => unreachable!("all variables are bounded"),
        }
    }

    /// Reduced costs of the real objective for the current basis.
    fn install_objective(&mut self) {
        let ncols = self.cost.len();
        let mut cost = vec![0.0; ncols];
        cost[..self.n].copy_from_slice(&self.structural_cost);
        let mut value = 0.0;
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = if b < self.n { self.structural_cost[b] } else { 0.0 };
            if cb != 0.0 {
                for (c, a) in cost.iter_mut().zip(&self.rows[r]) {
                    *c -= cb * a;
                }
                value += cb * self.rhs[r];
            }
        }
        for &b in &self.basis {
            cost[b] = 0.0;
        }
        self.cost = cost;
        self.value = value;
    }

    /// Appends `>=`/`<=` rows to an optimal tableau and re-optimizes with
    /// dual simplex steps from the current basis.
    pub(crate) fn add_rows_and_reoptimize(&mut self, rows: &[LpRow]) -> LpStatus {
        for row in rows {
            assert!(row.relation != Relation::Eq, "only inequality rows can be appended");
            let s = self.push_column();
            let (mut dense, mut rhs) = self.shifted(row);
            if row.relation == Relation::Ge {
                dense.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
            }
            dense[s] = 1.0;
            for (i, &b) in self.basis.iter().enumerate() {
                let f = dense[b];
                if f != 0.0 {
                    for (d, a) in dense.iter_mut().zip(&self.rows[i]) {
                        *d -= f * a;
                    }
                    dense[b] = 0.0;
                    rhs -= f * self.rhs[i];
                }
            }
            let r = self.push_row(dense, rhs);
            self.set_basic(r, s);
        }
        self.refresh_limit();
        self.max_iterations += self.iterations;
        match self.dual() {
            Outcome::Optimal => {}
            other => return self.finish(other),
        }
        { let o = self.primal(); self.finish(o) }
    }

    pub(crate) fn solution(&self, p: &LpProblem, status: LpStatus) -> LpSolution {
        let mut x = self.lower.clone();
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] += self.rhs[r];
            }
        }
        // Clean roundoff against the box.
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(p.lower[j], p.upper[j]);
        }
        LpSolution {
            status,
            objective: p.evaluate(&x),
            max_violation: p.max_violation(&x),
            x,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{build_emilo, build_vmilo, EmiloOptions};
    use crate::graph::Graph;

    fn row(terms: &[(usize, f64)], relation: Relation, rhs: f64) -> LpRow {
        LpRow {
            terms: terms.to_vec(),
            relation,
            rhs,
        }
    }

    #[test]
    fn single_variable() {
        let mut p = LpProblem::unit_box(1);
        p.objective[0] = 1.0;
        p.rows.push(row(&[(0, 1.0)], Relation::Le, 1.0));
        let s = simplex_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vmilo_triangle_relaxation() {
        let m = build_vmilo(&Graph::complete(3).unwrap(), 2).unwrap();
        let s = simplex_solve(&LpProblem::from_model(&m).unwrap()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn emilo_triangle_relaxation() {
        let m = build_emilo(&Graph::complete(3).unwrap(), 2, EmiloOptions::default()).unwrap();
        let s = simplex_solve(&LpProblem::from_model(&m).unwrap()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9, "{}", s.objective);
        assert!(s.max_violation <= 1e-7);
    }

    #[test]
    fn shifted_bounds_and_equalities() {
        // max x0 - x1  s.t. x0 + x1 = -1, x0 in [-3, 2], x1 in [-2, 5]
        let p = LpProblem {
            objective: vec![1.0, -1.0],
            objective_constant: 0.5,
            rows: vec![row(&[(0, 1.0), (1, 1.0)], Relation::Eq, -1.0)],
            lower: vec![-3.0, -2.0],
            upper: vec![2.0, 5.0],
        };
        let s = simplex_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        // Best is x0 = 1, x1 = -2: objective 3 + 0.5.
        assert!((s.objective - 3.5).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn infeasible_is_detected() {
        let mut p = LpProblem::unit_box(2);
        p.rows.push(row(&[(0, 1.0), (1, 1.0)], Relation::Ge, 3.0));
        assert_eq!(simplex_solve(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let m = build_emilo(&Graph::complete(5).unwrap(), 2, EmiloOptions::default()).unwrap();
        let p = LpProblem::from_model(&m).unwrap();
        let s = simplex_solve_with(&p, SimplexOptions { max_iterations: Some(1) }).unwrap();
        assert_eq!(s.status, LpStatus::IterationLimit);
    }

    #[test]
    fn bad_problems_are_rejected() {
        assert_eq!(simplex_solve(&LpProblem::unit_box(0)), Err(LpError::NoVariables));
        let mut p = LpProblem::unit_box(1);
        p.upper[0] = f64::INFINITY;
        assert_eq!(simplex_solve(&p), Err(LpError::BadBounds(0)));
        let mut p = LpProblem::unit_box(1);
        p.rows.push(row(&[(3, 1.0)], Relation::Le, 1.0));
        assert!(matches!(simplex_solve(&p), Err(LpError::UnknownVariable { .. })));
    }

    #[test]
    fn appended_rows_reoptimize() {
        // max x0 + x1 in the unit box, then cut with x0 + x1 <= 1.5 and x0 >= 0.8.
        let mut p = LpProblem::unit_box(2);
        p.objective = vec![1.0, 1.0];
        let mut t = Tableau::new(&p, SimplexOptions::default()).unwrap();
        assert_eq!(t.solve(), LpStatus::Optimal);
        let cuts = [
            row(&[(0, 1.0), (1, 1.0)], Relation::Le, 1.5),
            row(&[(0, 1.0)], Relation::Ge, 0.8),
        ];
        assert_eq!(t.add_rows_and_reoptimize(&cuts), LpStatus::Optimal);
        p.rows.extend(cuts.iter().cloned());
        let s = t.solution(&p, LpStatus::Optimal);
        assert!((s.objective - 1.5).abs() < 1e-12);
        assert!(s.max_violation < 1e-12);
        assert_eq!(t.add_rows_and_reoptimize(&[row(&[(1, 1.0)], Relation::Ge, 0.9)]), LpStatus::Infeasible);
    }
}
