//! Continuous-relaxation bounds of the formulations and rounding of
//! fractional assignments.

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{branch_and_bound_opt, ExactError, ProofStatus};
use crate::formulations::{build_emilo, build_remilo, build_vmilo, cut_value, EmiloOptions, FormulationError, Partitioning};
use crate::graph::Graph;
use crate::lp::{simplex_solve, solve_relaxation_rowgen, LpError, LpProblem, PairVars, RowGenOptions};
use crate::polytopes::{random_assignment, FractionalAssignment, PolytopeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelaxError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("assignment has {got} rows, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
}

/// LP relaxation value and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpBound {
    pub value: f64,
    /// `false` when row generation hit its row cap; the value is still an
    /// upper bound, only weaker.
    pub converged: bool,
    pub rounds: usize,
    pub iterations: usize,
}

fn solve_eager(p: &LpProblem) -> Result<LpBound, RelaxError> {
    let s = simplex_solve(p)?;
    if !s.is_optimal() {
        return Err(LpError::NotOptimal(s.status).into());
    }
    Ok(LpBound {
        value: s.objective,
        converged: true,
        rounds: 0,
        iterations: s.iterations,
    })
}

fn trivial(value: f64) -> LpBound {
    LpBound {
        value,
        converged: true,
        rounds: 0,
        iterations: 0,
    }
}

/// The V-MILO relaxation optimum in closed form: every positive edge is cut
/// at `x = 1/k`, every other edge contributes nothing.
pub fn vmilo_relax_bound(g: &Graph) -> f64 {
    g.positive_weight()
}

/// The V-MILO relaxation solved by simplex, for cross-checking the closed form.
pub fn vmilo_relax_bound_lp(g: &Graph, k: usize) -> Result<LpBound, RelaxError> {
    if g.n() == 0 {
        return Ok(trivial(0.0));
    }
    solve_eager(&LpProblem::from_model(&build_vmilo(g, k)?)?)
}

pub fn emilo_relax_bound(g: &Graph, k: usize, lazy: bool) -> Result<LpBound, RelaxError> {
    emilo_relax_bound_with(g, k, lazy, RowGenOptions::default())
}

pub fn emilo_relax_bound_with(g: &Graph, k: usize, lazy: bool, opts: RowGenOptions) -> Result<LpBound, RelaxError> {
    if k < 2 {
        return Err(FormulationError::BadK(k).into());
    }
    if g.n() < 2 {
        return Ok(trivial(0.0));
    }
    let model = build_emilo(
        g,
        k,
        EmiloOptions {
            lazy_cliques: lazy,
            ..Default::default()
        },
    )?;
    let p = LpProblem::from_model(&model)?;
    if !lazy {
        return solve_eager(&p);
    }
    let universe: Vec<usize> = (0..g.n()).collect();
    let r = solve_relaxation_rowgen(&p, k, &PairVars::all_pairs(g.n()), &universe, opts)?;
    if !r.solution.is_optimal() {
        return Err(LpError::NotOptimal(r.solution.status).into());
    }
    Ok(LpBound {
        value: r.solution.objective,
        converged: r.converged,
        rounds: r.rounds,
        iterations: r.solution.iterations,
    })
}

pub fn remilo_relax_bound(g: &Graph, k: usize) -> Result<LpBound, RelaxError> {
    let (model, _) = build_remilo(g, k)?;
    if model.num_vars() == 0 {
        return Ok(trivial(g.total_weight()));
    }
    solve_eager(&LpProblem::from_model(&model)?)
}

/// BQO objective `sum_e w_e (1 - sum_j x_uj x_vj)` at a fractional point.
pub fn bqo_objective(g: &Graph, x: &FractionalAssignment) -> f64 {
    g.edges().iter().map(|e| e.w * (1.0 - x.overlap(e.u, e.v))).sum()
}

fn check_rows(g: &Graph, x: &FractionalAssignment) -> Result<(), RelaxError> {
    x.validate()?;
    if x.n() != g.n() {
        return Err(RelaxError::LengthMismatch {
            expected: g.n(),
            got: x.n(),
        });
    }
    Ok(())
}

/// One sweep in vertex order. The objective is affine in each row, so moving
/// a row to its best unit vector never decreases it; ties go to the smallest
/// part. Rows that are already unit vectors move only on strict improvement.
/// Returns whether some integral row moved.
fn sweep(adj: &[Vec<(usize, f64)>], x: &mut FractionalAssignment, move_integral: bool) -> bool {
    let k = x.k();
    let mut moved = false;
    let mut same = vec![0.0; k];
    for (v, nbrs) in adj.iter().enumerate() {
        same.iter_mut().for_each(|s| *s = 0.0);
        for &(u, w) in nbrs {
            for (j, s) in same.iter_mut().enumerate() {
                *s += w * x.get(u, j);
            }
        }
        let best = (0..k).min_by(|&a, &b| same[a].total_cmp(&same[b]).then(a.cmp(&b))).unwrap_or(0);
        match x.row(v).iter().position(|&a| a == 1.0) {
            Some(j) if !(move_integral && same[best] < same[j] - 1e-12) => {}
            Some(_) => {
                x.set_row_to_vertex(v, best);
                moved = true;
            }
            None => x.set_row_to_vertex(v, best),
        }
    }
    moved
}

/// Rounds `x` to a partitioning whose cut value is at least the BQO
/// objective at `x`.
pub fn round_fractional(g: &Graph, x: &FractionalAssignment) -> Result<Partitioning, RelaxError> {
    check_rows(g, x)?;
    let mut x = x.clone();
    sweep(&g.adjacency(), &mut x, false);
    Ok(x.as_partitioning().expect("every row was set to a unit vector"))
}

/// Rounding followed by sweeps until no vertex can improve by moving.
pub fn round_and_improve(g: &Graph, x: &FractionalAssignment) -> Result<Partitioning, RelaxError> {
    check_rows(g, x)?;
    let adj = g.adjacency();
    let mut x = x.clone();
    // Each strict improvement raises the cut, so this terminates.
    while sweep(&adj, &mut x, true) {}
    Ok(x.as_partitioning().expect("every row was set to a unit vector"))
}

/// Best locally optimal partitioning over `starts` random fractional starts.
pub fn multistart_round(g: &Graph, k: usize, starts: usize, seed: u64) -> Result<(f64, Partitioning), RelaxError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Partitioning)> = None;
    for _ in 0..starts.max(1) {
        let x = random_assignment(g.n(), k, &mut rng);
        let p = round_and_improve(g, &x)?;
        let value = cut_value(g, &p)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, p));
        }
    }
    Ok(best.expect("at least one start"))
}

pub const DEFAULT_STARTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BqoBudget {
    pub time_cap: Duration,
    pub starts: usize,
    pub seed: u64,
}

impl Default for BqoBudget {
    fn default() -> Self {
        Self {
            time_cap: Duration::from_secs(60),
            starts: DEFAULT_STARTS,
            seed: 0,
        }
    }
}

/// The BQO relaxation value. Its optimum is attained at an integral point,
/// so it equals the max k-cut value; when that cannot be proved within the
/// budget a certified bracket is reported instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BqoBound {
    Exact { value: f64, partitioning: Partitioning },
    Bracket { lower: f64, upper: f64, partitioning: Partitioning },
}

impl BqoBound {
    /// The value usable as an upper bound.
    pub fn upper(&self) -> f64 {
        match self {
            BqoBound::Exact { value, .. } => *value,
            BqoBound::Bracket { upper, .. } => *upper,
        }
    }
}

pub fn bqo_relax_bound(g: &Graph, k: usize, budget: BqoBudget) -> Result<BqoBound, RelaxError> {
    let r = branch_and_bound_opt(g, k, budget.time_cap)?;
    if r.status == ProofStatus::Proved {
        return Ok(BqoBound::Exact {
            value: r.value,
            partitioning: r.partitioning,
        });
    }
    let (ms_value, ms_partition) = multistart_round(g, k, budget.starts, budget.seed)?;
    let (lower, partitioning) = if ms_value > r.value {
        (ms_value, ms_partition)
    } else {
        (r.value, r.partitioning)
    };
    Ok(BqoBound::Bracket {
        lower,
        upper: r.upper_bound.max(lower),
        partitioning,
    })
}

/// Status of one method's result in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    /// Exact optimum, proved.
    Proved,
    /// Relaxation solved to optimality.
    Optimal,
    /// Row generation stopped at its row cap; bound valid but weaker.
    RowCap,
    /// Search stopped at the time cap; `bound` is the certified upper end.
    Timeout,
    /// Certified lower and upper values that were not shown to coincide.
    Bracket,
    /// Model exported for an external solver; no bound.
    External,
    Failed,
}

impl BoundStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundStatus::Proved => "proved",
            BoundStatus::Optimal => "optimal",
            BoundStatus::RowCap => "row-cap",
            BoundStatus::Timeout => "timeout",
            BoundStatus::Bracket => "bracket",
            BoundStatus::External => "external",
            BoundStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Bqo,
    VmiloRelax,
    EmiloRelax,
    RemiloRelax,
    MisdoExport,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Exact,
        Method::Bqo,
        Method::VmiloRelax,
        Method::EmiloRelax,
        Method::RemiloRelax,
        Method::MisdoExport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Bqo => "bqo",
            Method::VmiloRelax => "vmilo-relax",
            Method::EmiloRelax => "emilo-relax",
            Method::RemiloRelax => "remilo-relax",
            Method::MisdoExport => "misdo-export",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodBound {
    pub method: Method,
    /// Upper bound, absent for exports and failures.
    pub bound: Option<f64>,
    /// Certified lower value when the method brackets the optimum.
    pub lower: Option<f64>,
    pub status: BoundStatus,
    pub seconds: f64,
    /// `bound` divided by the smallest bound of the instance.
    pub scaled: Option<f64>,
    pub note: Option<String>,
}

/// Bounds of every method on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub density: f64,
    pub k: usize,
    /// Proved optimum, when some method established it.
    pub exact: Option<f64>,
    pub methods: Vec<MethodBound>,
}

/// One CSV line of a [`BoundReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub density: f64,
    pub k: usize,
    pub method: String,
    pub bound: Option<f64>,
    pub scaled_bound: Option<f64>,
    pub status: String,
    pub seconds: f64,
}

impl BoundReport {
    /// Fills `exact` from proved results and recomputes scaled bounds.
    ///
    /// Scaling divides by the smallest bound. When that is not positive the
    /// ratio carries no meaning and is left empty, except that a zero bound
    /// over a zero minimum scales to 1.
    pub fn rescale(&mut self) {
        self.exact = self
            .methods
            .iter()
            .find(|m| m.status == BoundStatus::Proved)
            .and_then(|m| m.bound);
        let best = self.methods.iter().filter_map(|m| m.bound).reduce(f64::min);
        for m in &mut self.methods {
            m.scaled = match (m.bound, best) {
                (Some(b), Some(best)) if best > 0.0 => Some(b / best),
                (Some(b), Some(best)) if b == 0.0 && best == 0.0 => Some(1.0),
                _ => None,
            };
        }
    }

    pub fn rows(&self) -> Vec<BoundRow> {
        self.methods
            .iter()
            .map(|m| BoundRow {
                instance: self.instance.clone(),
                n: self.n,
                m: self.m,
                density: self.density,
                k: self.k,
                method: m.method.name().to_string(),
                bound: m.bound,
                scaled_bound: m.scaled,
                status: m.status.as_str().to_string(),
                seconds: m.seconds,
            })
            .collect()
    }
}
