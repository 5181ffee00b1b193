//! Separation of the clique family `sum_{pairs of Q} z >= 1`, `|Q| = k + 1`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, pair_index};

/// A subset must have pair mass below `1 - VIOLATION_TOL` to be reported.
pub const VIOLATION_TOL: f64 = 1e-7;

/// Exact enumeration is used while `C(|universe|, k + 1)` stays below this.
pub const EXACT_ENUMERATION_LIMIT: u64 = 1_000_000;

/// Symmetric pair values `z_uv` over `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairValues {
    n: usize,
    dense: Vec<f64>,
}

impl PairValues {
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            n,
            dense: vec![value; n * n],
        }
    }

    /// From a vector indexed by [`pair_index`].
    pub fn from_pair_vector(n: usize, z: &[f64]) -> Self {
        assert_eq!(z.len(), n * n.saturating_sub(1) / 2, "pair vector length");
        let mut dense = vec![0.0; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let val = z[pair_index(n, u, v)];
                dense[u * n + v] = val;
                dense[v * n + u] = val;
            }
        }
        Self { n, dense }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut dense = vec![0.0; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let val = f(u, v);
                dense[u * n + v] = val;
                dense[v * n + u] = val;
            }
        }
        Self { n, dense }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.dense[u * self.n + v]
    }

    /// Sum of `z` over all pairs of `q`.
    pub fn mass(&self, q: &[usize]) -> f64 {
        let mut s = 0.0;
        for (i, &a) in q.iter().enumerate() {
            for &b in &q[i + 1..] {
                s += self.get(a, b);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMode {
    Exact,
    Greedy,
    /// Exact when the subset count is at most [`EXACT_ENUMERATION_LIMIT`].
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueCut {
    /// Sorted vertex ids, `k + 1` of them.
    pub members: Vec<usize>,
    /// Pair mass; the violation is `1 - mass`.
    pub mass: f64,
}

/// Most violated `(k + 1)`-subsets of `universe`, smallest mass first, at
/// most `max_cuts` of them. Only subsets with mass `< 1 - VIOLATION_TOL` are
/// returned, so an empty result means no violated subset was found.
pub fn separate_clique_cuts(
    z: &PairValues,
    k: usize,
    universe: &[usize],
    mode: SeparationMode,
    max_cuts: usize,
) -> Vec<CliqueCut> {
    let size = k + 1;
    if universe.len() < size || max_cuts == 0 {
        return Vec::new();
    }
    let mut universe = universe.to_vec();
    universe.sort_unstable();
    universe.dedup();
    let exact = match mode {
        SeparationMode::Exact => true,
        SeparationMode::Greedy => false,
        SeparationMode::Auto => binomial(universe.len(), size) <= EXACT_ENUMERATION_LIMIT,
    };
    let mut cuts = if exact {
        exact_search(z, size, &universe, max_cuts)
    } else {
        greedy_search(z, size, &universe)
    };
    cuts.sort_by(|a, b| a.mass.total_cmp(&b.mass).then_with(|| a.members.cmp(&b.members)));
    cuts.truncate(max_cuts);
    cuts
}

struct ExactSearch<'a> {
    z: &'a PairValues,
    size: usize,
    universe: &'a [usize],
    max_cuts: usize,
    chosen: Vec<usize>,
    found: Vec<CliqueCut>,
}

impl ExactSearch<'_> {
    fn limit(&self) -> f64 {
        let base = 1.0 - VIOLATION_TOL;
        if self.found.len() < self.max_cuts {
            base
        } else {
            // Keep only subsets strictly better than the current worst.
            self.found.iter().map(|c| c.mass).fold(f64::MIN, f64::max).min(base)
        }
    }

    fn recurse(&mut self, start: usize, mass: f64) {
        if self.chosen.len() == self.size {
            if mass < self.limit() {
                if self.found.len() == self.max_cuts {
                    let worst = self
                        .found
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.mass.total_cmp(&b.1.mass))
                        .map(|(i, _)| i)
                        .expect("found is full, hence non-empty");
                    self.found.swap_remove(worst);
                }
                self.found.push(CliqueCut {
                    members: self.chosen.clone(),
                    mass,
                });
            }
            return;
        }
        let remaining = self.size - self.chosen.len();
        for i in start..=self.universe.len() - remaining {
            let v = self.universe[i];
            let added: f64 = self.chosen.iter().map(|&u| self.z.get(u, v)).sum();
            let next = mass + added;
            // z >= 0, so partial sums only grow.
            if next >= self.limit() {
                continue;
            }
            self.chosen.push(v);
            self.recurse(i + 1, next);
            self.chosen.pop();
        }
    }
}

fn exact_search(z: &PairValues, size: usize, universe: &[usize], max_cuts: usize) -> Vec<CliqueCut> {
    let mut s = ExactSearch {
        z,
        size,
        universe,
        max_cuts,
        chosen: Vec::with_capacity(size),
        found: Vec::new(),
    };
    s.recurse(0, 0.0);
    s.found
}

fn greedy_search(z: &PairValues, size: usize, universe: &[usize]) -> Vec<CliqueCut> {
    let mut seen = BTreeSet::new();
    let mut cuts = Vec::new();
    for &seed in universe {
        let mut q = vec![seed];
        let mut mass = 0.0;
        while q.len() < size {
            let (v, added) = universe
                .iter()
                .filter(|v| !q.contains(v))
                .map(|&v| (v, q.iter().map(|&u| z.get(u, v)).sum::<f64>()))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .expect("universe has at least k + 1 vertices");
            q.push(v);
            mass += added;
        }
        q.sort_unstable();
        if mass < 1.0 - VIOLATION_TOL && seen.insert(q.clone()) {
            cuts.push(CliqueCut { members: q, mass });
        }
    }
    cuts
}
