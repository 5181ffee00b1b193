//! Row generation: solve with the triangle rows only, separate violated
//! clique rows, append them and re-optimize from the previous basis.

use serde::{Deserialize, Serialize};

use crate::model::Relation;

use super::separation::{separate_clique_cuts, PairValues, SeparationMode};
use super::simplex::{SimplexOptions, Tableau};
use super::{LpError, LpProblem, LpRow, LpSolution, LpStatus};

/// Residual above which a warm-started solution is recomputed from scratch.
const WARM_RESIDUAL_TOL: f64 = 1e-7;

/// Maps unordered vertex pairs to LP variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairVars {
    n: usize,
    index: Vec<Option<usize>>,
}

impl PairVars {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            index: vec![None; n * n],
        }
    }

    /// The E-MILO layout: every pair present, in lexicographic order.
    pub fn all_pairs(n: usize) -> Self {
        let mut p = Self::new(n);
        for (i, (u, v)) in crate::combinatorics::all_pairs(n).enumerate() {
            p.insert(u, v, i);
        }
        p
    }

    pub fn insert(&mut self, u: usize, v: usize, var: usize) {
        self.index[u * self.n + v] = Some(var);
        self.index[v * self.n + u] = Some(var);
    }

    pub fn get(&self, u: usize, v: usize) -> Option<usize> {
        self.index[u * self.n + v]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn values(&self, x: &[f64]) -> PairValues {
        PairValues::from_fn(self.n, |u, v| self.get(u, v).map_or(0.0, |j| x[j]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowGenOptions {
    /// Cuts added per round.
    pub max_cuts: usize,
    /// Total number of clique rows that may be appended.
    pub cap_rows: usize,
    pub mode: SeparationMode,
}

impl Default for RowGenOptions {
    fn default() -> Self {
        Self {
            max_cuts: 200,
            cap_rows: 100_000,
            mode: SeparationMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowGenResult {
    pub solution: LpSolution,
    /// Separation rounds that added at least one row.
    pub rounds: usize,
    /// `false` when `cap_rows` stopped the loop with violated rows remaining.
    pub converged: bool,
    /// The appended clique subsets, in the order they were added.
    pub added: Vec<Vec<usize>>,
    /// LP objective after the initial solve and after each round.
    pub objective_history: Vec<f64>,
}

fn clique_row(pairs: &PairVars, q: &[usize]) -> LpRow {
    let mut terms = Vec::new();
    for (i, &a) in q.iter().enumerate() {
        for &b in &q[i + 1..] {
            let var = pairs
                .get(a, b)
                .unwrap_or_else(|| panic!("pair ({a}, {b}) has no variable"));
            terms.push((var, 1.0));
        }
    }
    LpRow {
        terms,
        relation: Relation::Ge,
        rhs: 1.0,
    }
}

/// Solves `base` and lazily adds violated clique rows over `universe`.
///
/// `base` should carry the triangle rows; the clique rows only tighten, so
/// the reported objective is a valid relaxation bound even when the row cap
/// stops the loop early.
pub fn solve_relaxation_rowgen(
    base: &LpProblem,
    k: usize,
    pairs: &PairVars,
    universe: &[usize],
    opts: RowGenOptions,
) -> Result<RowGenResult, LpError> {
    let mut tableau = Tableau::new(base, SimplexOptions::default())?;
    let status = tableau.solve();
    let mut solution = tableau.solution(base, status);
    let mut current = base.clone();
    let mut added = Vec::new();
    let mut history = vec![solution.objective];
    let mut rounds = 0;

    loop {
        if !solution.is_optimal() {
            break;
        }
        let z = pairs.values(&solution.x);
        let cuts = separate_clique_cuts(&z, k, universe, opts.mode, opts.max_cuts);
        if cuts.is_empty() {
            return Ok(RowGenResult {
                solution,
                rounds,
                converged: true,
                added,
                objective_history: history,
            });
        }
        let room = opts.cap_rows.saturating_sub(added.len());
        if room == 0 {
            break;
        }
        let rows: Vec<LpRow> = cuts.iter().take(room).map(|c| clique_row(pairs, &c.members)).collect();
        added.extend(cuts.into_iter().take(room).map(|c| c.members));
        current.rows.extend(rows.iter().cloned());
        let status = tableau.add_rows_and_reoptimize(&rows);
        solution = tableau.solution(&current, status);
        if solution.status != LpStatus::Infeasible && solution.max_violation > WARM_RESIDUAL_TOL {
            // Roundoff accumulated across warm starts; rebuild the tableau.
            tableau = Tableau::new(&current, SimplexOptions::default())?;
            let status = tableau.solve();
            solution = tableau.solution(&current, status);
        }
        history.push(solution.objective);
        rounds += 1;
    }
    Ok(RowGenResult {
        solution,
        rounds,
        converged: false,
        added,
        objective_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{build_emilo, EmiloOptions};
    use crate::graph::Graph;
    use crate::lp::simplex_solve;

    fn lazy_vs_eager(g: &Graph, k: usize) -> (RowGenResult, f64) {
        let lazy = build_emilo(g, k, EmiloOptions { lazy_cliques: true, ..Default::default() }).unwrap();
        let eager = build_emilo(g, k, EmiloOptions::default()).unwrap();
        let universe: Vec<usize> = (0..g.n()).collect();
        let r = solve_relaxation_rowgen(
            &LpProblem::from_model(&lazy).unwrap(),
            k,
            &PairVars::all_pairs(g.n()),
            &universe,
            RowGenOptions::default(),
        )
        .unwrap();
        let e = simplex_solve(&LpProblem::from_model(&eager).unwrap()).unwrap();
        (r, e.objective)
    }

    #[test]
    fn triangle_converges_quickly() {
        let (r, eager) = lazy_vs_eager(&Graph::complete(3).unwrap(), 2);
        assert!(r.converged && r.rounds <= 2);
        assert!((r.solution.objective - 2.0).abs() < 1e-9);
        assert!((eager - 2.0).abs() < 1e-9);
    }

    #[test]
    fn k4_with_three_parts_matches_eager() {
        let (r, eager) = lazy_vs_eager(&Graph::complete(4).unwrap(), 3);
        assert!(r.converged);
        assert!((r.solution.objective - eager).abs() < 1e-7);
    }

    #[test]
    fn no_clique_rows_when_n_equals_k() {
        let (r, _) = lazy_vs_eager(&Graph::complete(3).unwrap(), 3);
        assert_eq!(r.rounds, 0);
        assert!(r.added.is_empty());
        assert!((r.solution.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn row_cap_reports_non_convergence() {
        let g = Graph::complete(6).unwrap();
        let lazy = build_emilo(&g, 2, EmiloOptions { lazy_cliques: true, ..Default::default() }).unwrap();
        let base = LpProblem::from_model(&lazy).unwrap();
        let universe: Vec<usize> = (0..6).collect();
        let opts = RowGenOptions { max_cuts: 1, cap_rows: 1, mode: SeparationMode::Exact };
        let r = solve_relaxation_rowgen(&base, 2, &PairVars::all_pairs(6), &universe, opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.added.len(), 1);
        // Still an upper bound on the fully separated value.
        let eager = simplex_solve(&LpProblem::from_model(&build_emilo(&g, 2, EmiloOptions::default()).unwrap()).unwrap())
            .unwrap();
        assert!(r.solution.objective >= eager.objective - 1e-9);
        assert!(r.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}
