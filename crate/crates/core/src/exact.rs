//! Exact optima: exhaustive enumeration and depth-first branch-and-bound.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulations::{FormulationError, Partitioning};
use crate::graph::Graph;

/// Largest number of leaves brute force will visit.
pub const BRUTE_FORCE_LIMIT: f64 = 1e8;

/// Prune slack so that equal-valued subtrees are skipped without losing optima
/// to roundoff.
const PRUNE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("brute force over k^(n-1) = {k}^{exponent} assignments exceeds 1e8")]
    TooLarge { k: usize, exponent: usize },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProofStatus {
    Proved,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub value: f64,
    pub partitioning: Partitioning,
    pub status: ProofStatus,
    /// Equals `value` when proved; otherwise the largest bound of any
    /// subtree left unexplored.
    pub upper_bound: f64,
    pub nodes: u64,
}

/// Exhaustive search with vertex 0 pinned to part 0. Among optimal
/// assignments the lexicographically smallest is returned.
pub fn brute_force_opt(g: &Graph, k: usize) -> Result<(f64, Partitioning), ExactError> {
    Partitioning::new(Vec::new(), k)?;
    let n = g.n();
    let exponent = n.saturating_sub(1);
    if (k as f64).powi(exponent as i32) > BRUTE_FORCE_LIMIT {
        return Err(ExactError::TooLarge { k, exponent });
    }
    // Edges to earlier vertices, so the cut grows as vertices are fixed in order.
    let mut back: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in g.edges() {
        back[e.v].push((e.u, e.w));
    }
    let mut s = Brute {
        back: &back,
        k,
        current: vec![0; n],
        best: f64::NEG_INFINITY,
        best_assignment: vec![0; n],
    };
    if n > 0 {
        s.recurse(1, 0.0);
    } else {
        s.best = 0.0;
    }
    let p = Partitioning::new(s.best_assignment, k)?;
    Ok((s.best, p))
}

struct Brute<'a> {
    back: &'a [Vec<(usize, f64)>],
    k: usize,
    current: Vec<usize>,
    best: f64,
    best_assignment: Vec<usize>,
}

impl Brute<'_> {
    fn recurse(&mut self, v: usize, cut: f64) {
        if v == self.current.len() {
            // Strict improvement keeps the first, i.e. lexicographically smallest, optimum.
            if cut > self.best {
                self.best = cut;
                self.best_assignment.copy_from_slice(&self.current);
            }
            return;
        }
        for label in 0..self.k {
            self.current[v] = label;
            let gain: f64 = self.back[v]
                .iter()
                .filter(|&&(u, _)| self.current[u] != label)
                .map(|&(_, w)| w)
                .sum();
            self.recurse(v + 1, cut + gain);
        }
    }
}

/// Depth-first branch-and-bound with restricted-growth labels and the bound
/// `cut so far + positive weight of edges not yet decided`.
pub fn branch_and_bound_opt(g: &Graph, k: usize, time_cap: Duration) -> Result<ExactResult, ExactError> {
    Partitioning::new(Vec::new(), k)?;
    let n = g.n();
    let adj = g.adjacency();
    let mut order: Vec<usize> = (0..n).collect();
    let strength: Vec<f64> = adj.iter().map(|a| a.iter().map(|&(_, w)| w.abs()).sum()).collect();
    order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]).then(a.cmp(&b)));
    let mut position = vec![0; n];
    for (d, &v) in order.iter().enumerate() {
        position[v] = d;
    }
    // back[d]: edges from the vertex at depth d to shallower vertices, by depth.
    let mut back: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    // remaining[d]: positive weight of edges decided at depth >= d.
    let mut remaining = vec![0.0; n + 1];
    for e in g.edges() {
        let (a, b) = (position[e.u], position[e.v]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        back[hi].push((lo, e.w));
        remaining[hi] += e.w.max(0.0);
    }
    for d in (0..n).rev() {
        remaining[d] += remaining[d + 1];
    }

    let (greedy_value, greedy_labels) = greedy(&back, k);
    let mut s = Search {
        back: &back,
        remaining: &remaining,
        k,
        labels: vec![0; n],
        best: greedy_value,
        best_labels: greedy_labels,
        open_bound: f64::NEG_INFINITY,
        deadline: Instant::now().checked_add(time_cap),
        timed_out: false,
        nodes: 0,
    };
    s.recurse(0, 0.0, 0);

    let mut assignment = vec![0; n];
    for (d, &v) in order.iter().enumerate() {
        assignment[v] = s.best_labels[d];
    }
    let (status, upper_bound) = if s.timed_out {
        (ProofStatus::Timeout, s.open_bound.max(s.best))
    } else {
        (ProofStatus::Proved, s.best)
    };
    Ok(ExactResult {
        value: s.best,
        partitioning: Partitioning::new(assignment, k)?,
        status,
        upper_bound,
        nodes: s.nodes,
    })
}

/// Each vertex, in search order, joins the part that adds the most cut weight.
fn greedy(back: &[Vec<(usize, f64)>], k: usize) -> (f64, Vec<usize>) {
    let mut labels = vec![0; back.len()];
    let mut total = 0.0;
    let mut same = vec![0.0; k];
    for d in 0..back.len() {
        same.iter_mut().for_each(|s| *s = 0.0);
        let mut all = 0.0;
        for &(u, w) in &back[d] {
            same[labels[u]] += w;
            all += w;
        }
        let j = (0..k).min_by(|&a, &b| same[a].total_cmp(&same[b]).then(a.cmp(&b))).unwrap_or(0);
        labels[d] = j;
        total += all - same[j];
    }
    (total, labels)
}

struct Search<'a> {
    back: &'a [Vec<(usize, f64)>],
    remaining: &'a [f64],
    k: usize,
    labels: Vec<usize>,
    best: f64,
    best_labels: Vec<usize>,
    open_bound: f64,
    deadline: Option<Instant>,
    timed_out: bool,
    nodes: u64,
}

impl Search<'_> {
    fn check_time(&mut self) {
        if self.nodes % 1024 == 1 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.timed_out = true;
                }
            }
        }
    }

    fn recurse(&mut self, d: usize, cut: f64, used: usize) {
        self.nodes += 1;
        if d == self.labels.len() {
            if cut > self.best {
                self.best = cut;
                self.best_labels.copy_from_slice(&self.labels);
            }
            return;
        }
        self.check_time();
        let top = (used + 1).min(self.k);
        for label in 0..top {
            let gain: f64 = self.back[d]
                .iter()
                .filter(|&&(u, _)| self.labels[u] != label)
                .map(|&(_, w)| w)
                .sum();
            let child = cut + gain;
            let bound = child + self.remaining[d + 1];
            if bound <= self.best + PRUNE_EPS {
                continue;
            }
            if self.timed_out {
                self.open_bound = self.open_bound.max(bound);
                continue;
            }
            self.labels[d] = label;
            self.recurse(d + 1, child, used.max(label + 1));
        }
    }
}
