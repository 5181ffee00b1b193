//! Weighted undirected simple graphs: the problem instances.
//!
//! Files use the rudy-style edge list: a header line `n m` followed by `m`
//! lines `u v w` with 1-based vertex ids. Internally vertices are `0..n`.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("line {line}: malformed input: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate edge {{{u}, {v}}} (0-based)")]
    DuplicateEdge { u: usize, v: usize },
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("bad generator parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Immutable weighted simple graph with edges stored as `u < v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    /// Percentage of the `C(n, 2)` possible edges that are present.
    pub density: f64,
}

impl Graph {
    /// Builds a graph, normalizing every edge to `u < v`.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            for vertex in [a, b] {
                if vertex >= n {
                    return Err(GraphError::VertexOutOfRange { vertex, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge { u, v });
            }
            out.push(Edge { u, v, w });
        }
        Ok(Self { n, edges: out })
    }

    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Self::new(n, std::iter::empty())
    }

    /// Complete graph with unit weights.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v, 1.0)));
        Self::new(n, edges)
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0` with unit weights, `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::BadParams(format!("cycle needs n >= 3, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))
    }

    /// Path `0 - 1 - ... - (n-1)` with unit weights.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (1..n).map(|i| (i - 1, i, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Sum of `max(w, 0)` over all edges.
    pub fn positive_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w.max(0.0)).sum()
    }

    /// Adjacency lists `(neighbor, weight)`, neighbors in insertion order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        adj
    }

    /// Dense symmetric weight matrix (zero where there is no edge).
    pub fn weight_matrix(&self) -> Vec<Vec<f64>> {
        let mut w = vec![vec![0.0; self.n]; self.n];
        for e in &self.edges {
            w[e.u][e.v] = e.w;
            w[e.v][e.u] = e.w;
        }
        w
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        self.edges.iter().any(|e| e.u == u && e.v == v)
    }

    pub fn stats(&self) -> GraphStats {
        graph_stats(self)
    }

    /// Renders the graph in the 1-based edge-list format read by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.m());
        for e in &self.edges {
            // `Display` for f64 prints the shortest representation that
            // round-trips, which never exceeds 17 significant digits.
            let _ = writeln!(out, "{} {} {}", e.u + 1, e.v + 1, e.w);
        }
        out
    }
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let n = g.n();
    let m = g.m();
    let pairs = n * n.saturating_sub(1) / 2;
    let density = if pairs == 0 {
        0.0
    } else {
        100.0 * m as f64 / pairs as f64
    };
    GraphStats { n, m, density }
}

fn is_comment(line: &str) -> bool {
    line.starts_with('#') || line.starts_with('c')
}

/// Parses the 1-based edge-list format. Lines starting with `#` or `c` are
/// comments; blank lines are skipped.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !is_comment(l));

    let (header_line, header) = lines.next().ok_or(GraphError::MalformedLine {
        line: 0,
        reason: "missing `n m` header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(GraphError::MalformedLine {
            line: header_line,
            reason: format!("expected `n m`, found {header:?}"),
        });
    }
    let parse_count = |s: &str| {
        s.parse::<usize>().map_err(|_| GraphError::MalformedLine {
            line: header_line,
            reason: format!("bad count {s:?}"),
        })
    };
    let n = parse_count(fields[0])?;
    let m = parse_count(fields[1])?;

    let mut edges = Vec::with_capacity(m);
    let mut last_line = header_line;
    for (line, body) in lines {
        last_line = line;
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphError::MalformedLine {
                line,
                reason: format!("expected `u v w`, found {body:?}"),
            });
        }
        let vertex = |s: &str| -> Result<usize, GraphError> {
            let id = s.parse::<usize>().map_err(|_| GraphError::MalformedLine {
                line,
                reason: format!("bad vertex id {s:?}"),
            })?;
            if id == 0 || id > n {
                return Err(GraphError::VertexOutOfRange { vertex: id, n });
            }
            Ok(id - 1)
        };
        let u = vertex(fields[0])?;
        let v = vertex(fields[1])?;
        let w = fields[2].parse::<f64>().map_err(|_| GraphError::MalformedLine {
            line,
            reason: format!("bad weight {:?}", fields[2]),
        })?;
        if !w.is_finite() {
            return Err(GraphError::MalformedLine {
                line,
                reason: "weight must be finite".into(),
            });
        }
        edges.push((u, v, w));
    }
    if edges.len() != m {
        return Err(GraphError::MalformedLine {
            line: last_line,
            reason: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Graph::new(n, edges)
}

/// Instance generators. Each is a deterministic function of its parameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceSpec {
    /// Erdős–Rényi `G(n, p)` with integer weights drawn uniformly from
    /// `weight_min..=weight_max`.
    Random {
        n: usize,
        p: f64,
        #[serde(default = "one")]
        weight_min: i64,
        #[serde(default = "one")]
        weight_max: i64,
    },
    /// Unit-weight band graph: `i ~ j` iff `0 < |i - j| <= bandwidth`.
    Band { n: usize, bandwidth: usize },
    /// `side x side` torus grid with weights drawn uniformly from `{-1, +1}`.
    Spinglass { side: usize },
}

fn one() -> i64 {
    1
}

impl InstanceSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Random { n, p, .. } => format!("random_n{n}_p{p}"),
            Self::Band { n, bandwidth } => format!("band_n{n}_b{bandwidth}"),
            Self::Spinglass { side } => format!("spinglass_{side}x{side}"),
        }
    }
}

pub fn gen_instance(spec: &InstanceSpec, seed: u64) -> Result<Graph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *spec {
        InstanceSpec::Random {
            n,
            p,
            weight_min,
            weight_max,
        } => {
            if n == 0 || !(p > 0.0 && p <= 1.0) || weight_min > weight_max {
                return Err(GraphError::BadParams(format!(
                    "random needs n >= 1, p in (0, 1], weight_min <= weight_max; got n={n}, p={p}, \
                     range={weight_min}..={weight_max}"
                )));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if p >= 1.0 || rng.random::<f64>() < p {
                        let w = rng.random_range(weight_min..=weight_max) as f64;
                        edges.push((u, v, w));
                    }
                }
            }
            Graph::new(n, edges)
        }
        InstanceSpec::Band { n, bandwidth } => {
            if n == 0 || bandwidth == 0 {
                return Err(GraphError::BadParams(format!(
                    "band needs n >= 1 and bandwidth >= 1; got n={n}, bandwidth={bandwidth}"
                )));
            }
            let edges = (0..n).flat_map(|i| (i + 1..n.min(i + bandwidth + 1)).map(move |j| (i, j, 1.0)));
            Graph::new(n, edges)
        }
        InstanceSpec::Spinglass { side } => {
            if side < 2 {
                return Err(GraphError::BadParams(format!("spinglass needs side >= 2, got {side}")));
            }
            let id = |r: usize, c: usize| r * side + c;
            let mut seen = HashSet::new();
            let mut edges = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    for (a, b) in [(id(r, c), id(r, (c + 1) % side)), (id(r, c), id((r + 1) % side, c))] {
                        let key = (a.min(b), a.max(b));
                        // On a 2x2 torus the wrap-around edge coincides with the direct one.
                        if seen.insert(key) {
                            let w = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            edges.push((key.0, key.1, w));
                        }
                    }
                }
            }
            Graph::new(side * side, edges)
        }
    }
}
