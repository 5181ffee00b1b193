//! Chordal extension, chordality certification and maximal cliques.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChordalError {
    /// The graph has a chordless cycle of length at least four.
    #[error("graph is not chordal; chordless cycle {cycle:?}")]
    NotChordal { cycle: Vec<usize> },
    #[error("invalid perfect elimination ordering: {0}")]
    InvalidPeo(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordalInfo {
    /// Chords added by the elimination, each as `(u, v)` with `u < v`.
    pub fill_edges: Vec<(usize, usize)>,
    /// Elimination order; a perfect elimination ordering of the extended graph.
    pub peo: Vec<usize>,
    /// Maximal cliques of the extended graph, each sorted, listed in lexicographic order.
    pub maximal_cliques: Vec<Vec<usize>>,
}

impl ChordalInfo {
    /// All edges of the extended graph, sorted, as `(u, v)` with `u < v`.
    pub fn extended_edges(&self, g: &Graph) -> Vec<(usize, usize)> {
        let mut edges: BTreeSet<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        edges.extend(self.fill_edges.iter().copied());
        edges.into_iter().collect()
    }
}

fn neighbor_sets(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for (u, v) in edges {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    adj
}

/// Greedy minimum-degree elimination. Ties go to the smallest vertex id.
pub fn chordal_extend(g: &Graph) -> ChordalInfo {
    let n = g.n();
    let mut adj = neighbor_sets(n, g.edges().iter().map(|e| (e.u, e.v)));
    let mut alive = vec![true; n];
    let mut fill = BTreeSet::new();
    let mut peo = Vec::with_capacity(n);

    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .expect("an uneliminated vertex remains");
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                    fill.insert((a.min(b), a.max(b)));
                }
            }
        }
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        adj[v].clear();
        alive[v] = false;
        peo.push(v);
    }

    let fill_edges: Vec<_> = fill.into_iter().collect();
    let extended = neighbor_sets(
        n,
        g.edges().iter().map(|e| (e.u, e.v)).chain(fill_edges.iter().copied()),
    );
    let maximal_cliques = cliques_from_peo(&extended, &peo);
    ChordalInfo {
        fill_edges,
        peo,
        maximal_cliques,
    }
}

/// Maximum-cardinality search; returns a perfect elimination ordering or a
/// chordless cycle witness.
pub fn verify_chordal(g: &Graph) -> Result<Vec<usize>, ChordalError> {
    let n = g.n();
    let adj = neighbor_sets(n, g.edges().iter().map(|e| (e.u, e.v)));

    // Visit order of MCS; its reverse is the candidate elimination order.
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut visit = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !visited[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .expect("an unvisited vertex remains");
        visited[v] = true;
        visit.push(v);
        for &u in &adj[v] {
            if !visited[u] {
                weight[u] += 1;
            }
        }
    }
    let peo: Vec<usize> = visit.into_iter().rev().collect();

    match peo_violation(&adj, &peo) {
        None => Ok(peo),
        Some((v, a, b)) => {
            let cycle = chordless_cycle_through(&adj, v, a, b)
                .or_else(|| find_chordless_cycle(&adj))
                .expect("a failed elimination ordering implies a chordless cycle");
            Err(ChordalError::NotChordal { cycle })
        }
    }
}

/// Returns `(v, a, b)` where `a, b` are later neighbors of `v` that are not adjacent.
fn peo_violation(adj: &[BTreeSet<usize>], peo: &[usize]) -> Option<(usize, usize, usize)> {
    let n = adj.len();
    let mut pos = vec![0; n];
    for (i, &v) in peo.iter().enumerate() {
        pos[v] = i;
    }
    for &v in peo {
        let later: Vec<usize> = adj[v].iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        let Some(&parent) = later.iter().min_by_key(|&&u| pos[u]) else {
            continue;
        };
        for &u in &later {
            if u != parent && !adj[parent].contains(&u) {
                return Some((v, parent, u));
            }
        }
    }
    None
}

/// Shortest `a -> b` path avoiding `v` and the rest of `N(v)`, closed through `v`.
/// Shortest paths are induced, and no interior vertex touches `v`, so the
/// resulting cycle is chordless whenever `a` and `b` are not adjacent.
fn chordless_cycle_through(adj: &[BTreeSet<usize>], v: usize, a: usize, b: usize) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut blocked = vec![false; n];
    blocked[v] = true;
    for &u in &adj[v] {
        blocked[u] = u != a && u != b;
    }
    let mut prev = vec![usize::MAX; n];
    let mut queue = VecDeque::from([a]);
    prev[a] = a;
    while let Some(x) = queue.pop_front() {
        if x == b {
            break;
        }
        for &y in &adj[x] {
            if !blocked[y] && prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    if prev[b] == usize::MAX {
        return None;
    }
    let mut path = vec![b];
    let mut x = b;
    while x != a {
        x = prev[x];
        path.push(x);
    }
    path.reverse();
    let mut cycle = vec![v];
    cycle.extend(path);
    Some(cycle)
}

fn find_chordless_cycle(adj: &[BTreeSet<usize>]) -> Option<Vec<usize>> {
    for v in 0..adj.len() {
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if !adj[a].contains(&b) {
                    if let Some(c) = chordless_cycle_through(adj, v, a, b) {
                        return Some(c);
                    }
                }
            }
        }
    }
    None
}

/// Maximal cliques of a chordal graph from a perfect elimination ordering.
pub fn maximal_cliques(g: &Graph, peo: &[usize]) -> Result<Vec<Vec<usize>>, ChordalError> {
    let n = g.n();
    if peo.len() != n {
        return Err(ChordalError::InvalidPeo(format!("length {} for {n} vertices", peo.len())));
    }
    let mut seen = vec![false; n];
    for &v in peo {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(ChordalError::InvalidPeo(format!("not a permutation (vertex {v})")));
        }
    }
    let adj = neighbor_sets(n, g.edges().iter().map(|e| (e.u, e.v)));
    if let Some((v, a, b)) = peo_violation(&adj, peo) {
        return Err(ChordalError::InvalidPeo(format!(
            "later neighbors {a} and {b} of vertex {v} are not adjacent"
        )));
    }
    Ok(cliques_from_peo(&adj, peo))
}

fn cliques_from_peo(adj: &[BTreeSet<usize>], peo: &[usize]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut pos = vec![0; n];
    for (i, &v) in peo.iter().enumerate() {
        pos[v] = i;
    }
    let mut candidates: Vec<Vec<usize>> = peo
        .iter()
        .map(|&v| {
            let mut c: Vec<usize> = adj[v].iter().copied().filter(|&u| pos[u] > pos[v]).collect();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect();
    candidates.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for c in candidates {
        let contained = kept.iter().any(|k| is_subset(&c, k));
        if !contained {
            kept.push(c);
        }
    }
    kept.sort();
    kept
}

/// Both slices sorted ascending.
fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}
