//! Builders for the five max k-cut formulations, plus cut evaluation.
//!
//! Variable names follow a fixed scheme (0-based ids): `x_v_j` vertex
//! assignment, `y_u_v` cut-edge indicator, `z_u_v` same-part indicator,
//! `Z_u_v` same-part matrix entry, `Zb_u_v` entry of the `{-1/(k-1), 1}` matrix.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chordal::{self, ChordalInfo};
use crate::combinatorics::{all_pairs, binomial, for_each_combination, pair_index};
use crate::graph::Graph;
use crate::model::{Domain, Model, PsdBlock, Relation};

/// Default cap on the number of clique rows added upfront to E-MILO.
pub const DEFAULT_CLIQUE_CAP: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulationError {
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
    #[error("formulation needs at least {needed} vertices, graph has {n}")]
    TooFewVertices { n: usize, needed: usize },
    #[error("{count} clique constraints exceed the upfront cap of {cap}; use lazy cliques")]
    TooLargeUpfront { count: u64, cap: u64 },
    #[error("assignment has length {got}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vertex {vertex} assigned to part {label}, but k = {k}")]
    LabelOutOfRange { vertex: usize, label: usize, k: usize },
}

/// Integral assignment of every vertex to one of `k` parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partitioning {
    assignment: Vec<usize>,
    k: usize,
}

impl Partitioning {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self, FormulationError> {
        check_k(k)?;
        if let Some((vertex, &label)) = assignment.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(FormulationError::LabelOutOfRange { vertex, label, k });
        }
        Ok(Self { assignment, k })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn part(&self, v: usize) -> usize {
        self.assignment[v]
    }
}

fn check_k(k: usize) -> Result<(), FormulationError> {
    if k < 2 {
        Err(FormulationError::BadK(k))
    } else {
        Ok(())
    }
}

/// Total weight of edges whose endpoints lie in different parts.
pub fn cut_value(g: &Graph, p: &Partitioning) -> Result<f64, FormulationError> {
    if p.assignment.len() != g.n() {
        return Err(FormulationError::LengthMismatch {
            expected: g.n(),
            got: p.assignment.len(),
        });
    }
    Ok(g.edges()
        .iter()
        .filter(|e| p.assignment[e.u] != p.assignment[e.v])
        .map(|e| e.w)
        .sum())
}

pub fn build_bqo(g: &Graph, k: usize) -> Result<Model, FormulationError> {
    check_k(k)?;
    let n = g.n();
    let mut m = Model::new("bqo");
    for v in 0..n {
        for j in 0..k {
            m.add_binary(format!("x_{v}_{j}"));
        }
    }
    let x = |v: usize, j: usize| v * k + j;
    for v in 0..n {
        m.add_constraint(format!("assign_{v}"), (0..k).map(|j| (x(v, j), 1.0)).collect(), Relation::Eq, 1.0);
    }
    m.add_objective_constant(g.total_weight());
    for e in g.edges() {
        for j in 0..k {
            m.add_quadratic_objective(x(e.u, j), x(e.v, j), -e.w);
        }
    }
    Ok(m)
}

pub fn build_vmilo(g: &Graph, k: usize) -> Result<Model, FormulationError> {
    check_k(k)?;
    let n = g.n();
    let mut m = Model::new("vmilo");
    for v in 0..n {
        for j in 0..k {
            m.add_binary(format!("x_{v}_{j}"));
        }
    }
    let x = |v: usize, j: usize| v * k + j;
    let ys: Vec<usize> = g.edges().iter().map(|e| m.add_binary(format!("y_{}_{}", e.u, e.v))).collect();

    for v in 0..n {
        m.add_constraint(format!("assign_{v}"), (0..k).map(|j| (x(v, j), 1.0)).collect(), Relation::Eq, 1.0);
    }
    for (e, &y) in g.edges().iter().zip(&ys) {
        let (u, v) = (e.u, e.v);
        for j in 0..k {
            m.add_constraint(
                format!("diff_{u}_{v}_{j}"),
                vec![(x(u, j), 1.0), (x(v, j), -1.0), (y, -1.0)],
                Relation::Le,
                0.0,
            );
            m.add_constraint(
                format!("diff_{v}_{u}_{j}"),
                vec![(x(v, j), 1.0), (x(u, j), -1.0), (y, -1.0)],
                Relation::Le,
                0.0,
            );
            m.add_constraint(
                format!("same_{u}_{v}_{j}"),
                vec![(x(u, j), 1.0), (x(v, j), 1.0), (y, 1.0)],
                Relation::Le,
                2.0,
            );
        }
        m.add_linear_objective(y, e.w);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmiloOptions {
    /// Omit the clique family; it is separated on demand instead.
    pub lazy_cliques: bool,
    pub clique_cap: u64,
}

impl Default for EmiloOptions {
    fn default() -> Self {
        Self {
            lazy_cliques: false,
            clique_cap: DEFAULT_CLIQUE_CAP,
        }
    }
}

fn add_triangle_rows(m: &mut Model, tri: [usize; 3], z: impl Fn(usize, usize) -> usize) {
    let [u, v, w] = tri;
    let (uv, vw, uw) = (z(u, v), z(v, w), z(u, w));
    // Each pair of a triple implies the third.
    for (tag, a, b, c) in [("a", uv, vw, uw), ("b", uw, uv, vw), ("c", vw, uw, uv)] {
        m.add_constraint(
            format!("tri_{u}_{v}_{w}_{tag}"),
            vec![(a, 1.0), (b, 1.0), (c, -1.0)],
            Relation::Le,
            1.0,
        );
    }
}

fn add_clique_row(m: &mut Model, q: &[usize], z: impl Fn(usize, usize) -> usize) {
    let mut terms = Vec::with_capacity(q.len() * (q.len() - 1) / 2);
    for (i, &a) in q.iter().enumerate() {
        for &b in &q[i + 1..] {
            terms.push((z(a, b), 1.0));
        }
    }
    let name = q.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_");
    m.add_constraint(format!("clique_{name}"), terms, Relation::Ge, 1.0);
}

/// Edge-based formulation over all `C(n, 2)` vertex pairs.
pub fn build_emilo(g: &Graph, k: usize, opts: EmiloOptions) -> Result<Model, FormulationError> {
    check_k(k)?;
    let n = g.n();
    if n < 2 {
        return Err(FormulationError::TooFewVertices { n, needed: 2 });
    }
    let clique_count = binomial(n, k + 1);
    if !opts.lazy_cliques && clique_count > opts.clique_cap {
        return Err(FormulationError::TooLargeUpfront {
            count: clique_count,
            cap: opts.clique_cap,
        });
    }
    let mut m = Model::new(if opts.lazy_cliques { "emilo_lazy" } else { "emilo" });
    for (u, v) in all_pairs(n) {
        m.add_binary(format!("z_{u}_{v}"));
    }
    let z = |u: usize, v: usize| pair_index(n, u, v);
    let vertices: Vec<usize> = (0..n).collect();
    for_each_combination(&vertices, 3, |t| add_triangle_rows(&mut m, [t[0], t[1], t[2]], z));
    if !opts.lazy_cliques {
        for_each_combination(&vertices, k + 1, |q| add_clique_row(&mut m, q, z));
    }
    m.add_objective_constant(g.total_weight());
    for e in g.edges() {
        m.add_linear_objective(z(e.u, e.v), -e.w);
    }
    Ok(m)
}

/// Reduced edge-based formulation on a chordal extension of `g`.
pub fn build_remilo(g: &Graph, k: usize) -> Result<(Model, ChordalInfo), FormulationError> {
    check_k(k)?;
    let n = g.n();
    let info = chordal::chordal_extend(g);
    let edges = info.extended_edges(g);
    let mut m = Model::new("remilo");
    let mut index = vec![usize::MAX; n * n];
    for &(u, v) in &edges {
        let idx = m.add_binary(format!("z_{u}_{v}"));
        index[u * n + v] = idx;
        index[v * n + u] = idx;
    }
    let z = |u: usize, v: usize| {
        let idx = index[u * n + v];
        debug_assert!(idx != usize::MAX, "pair ({u}, {v}) is not an extended edge");
        idx
    };

    let mut triangles = BTreeSet::new();
    let mut cliques = BTreeSet::new();
    for clique in &info.maximal_cliques {
        for_each_combination(clique, 3, |t| {
            triangles.insert([t[0], t[1], t[2]]);
        });
        for_each_combination(clique, k + 1, |q| {
            cliques.insert(q.to_vec());
        });
    }
    for t in triangles {
        add_triangle_rows(&mut m, t, z);
    }
    for q in &cliques {
        add_clique_row(&mut m, q, z);
    }
    m.add_objective_constant(g.total_weight());
    for e in g.edges() {
        m.add_linear_objective(z(e.u, e.v), -e.w);
    }
    Ok((m, info))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MisdoVariant {
    /// Binary same-part matrix `Z` with `k Z - e e^T` PSD.
    I,
    /// `Zb = (k Z - e e^T) / (k - 1)` with entries in `{-1/(k-1), 1}`, `Zb` PSD.
    II,
}

pub fn build_misdo(g: &Graph, k: usize, variant: MisdoVariant) -> Result<Model, FormulationError> {
    check_k(k)?;
    let n = g.n();
    let kf = k as f64;
    let (name, prefix, scale) = match variant {
        MisdoVariant::I => ("misdo1", "Z", 1.0),
        MisdoVariant::II => ("misdo2", "Zb", (kf - 1.0) / kf),
    };
    let mut m = Model::new(name);
    let mut index = vec![0; n * n];
    for u in 0..n {
        for v in u..n {
            let idx = match variant {
                MisdoVariant::I => m.add_binary(format!("{prefix}_{u}_{v}")),
                MisdoVariant::II => m.add_var(format!("{prefix}_{u}_{v}"), -1.0 / (kf - 1.0), 1.0, Domain::TwoPoint),
            };
            index[u * n + v] = idx;
            index[v * n + u] = idx;
        }
    }
    for v in 0..n {
        m.add_constraint(format!("diag_{v}"), vec![(index[v * n + v], 1.0)], Relation::Eq, 1.0);
    }
    let (constant, coef) = match variant {
        MisdoVariant::I => ((0..n).flat_map(|i| (i..n).map(move |j| (i, j, -1.0))).collect(), kf),
        MisdoVariant::II => (Vec::new(), 1.0),
    };
    let terms = (0..n)
        .flat_map(|u| (u..n).map(move |v| (u, v)))
        .map(|(u, v)| (index[u * n + v], vec![(u, v, coef)]))
        .collect();
    m.add_psd_block(PsdBlock {
        name: match variant {
            MisdoVariant::I => "kZ_minus_eeT".into(),
            MisdoVariant::II => "Zb".into(),
        },
        order: n,
        constant,
        terms,
    });
    m.add_objective_constant(scale * g.total_weight());
    for e in g.edges() {
        m.add_linear_objective(index[e.u * n + e.v], -scale * e.w);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Bqo,
    Vmilo,
    Emilo,
    Remilo,
    Misdo1,
    Misdo2,
}

impl Formulation {
    pub const ALL: [Formulation; 6] = [
        Formulation::Bqo,
        Formulation::Vmilo,
        Formulation::Emilo,
        Formulation::Remilo,
        Formulation::Misdo1,
        Formulation::Misdo2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Bqo => "bqo",
            Formulation::Vmilo => "vmilo",
            Formulation::Emilo => "emilo",
            Formulation::Remilo => "remilo",
            Formulation::Misdo1 => "misdo1",
            Formulation::Misdo2 => "misdo2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Builds the model with default options (E-MILO eager).
    pub fn build(self, g: &Graph, k: usize) -> Result<Model, FormulationError> {
        match self {
            Formulation::Bqo => build_bqo(g, k),
            Formulation::Vmilo => build_vmilo(g, k),
            Formulation::Emilo => build_emilo(g, k, EmiloOptions::default()),
            Formulation::Remilo => build_remilo(g, k).map(|(m, _)| m),
            Formulation::Misdo1 => build_misdo(g, k, MisdoVariant::I),
            Formulation::Misdo2 => build_misdo(g, k, MisdoVariant::II),
        }
    }
}

/// The point a partitioning induces in any model built here, by variable name.
pub fn induced_point(model: &Model, p: &Partitioning) -> Vec<f64> {
    let same = |u: usize, v: usize| p.part(u) == p.part(v);
    let k = p.k() as f64;
    model
        .variables()
        .iter()
        .map(|var| {
            let mut parts = var.name.split('_');
            let prefix = parts.next().unwrap_or_default();
            let ids: Vec<usize> = parts.map(|s| s.parse().expect("numeric id in variable name")).collect();
            let indicator = |b: bool| if b { 1.0 } else { 0.0 };
            match prefix {
                "x" => indicator(p.part(ids[0]) == ids[1]),
                "y" => indicator(!same(ids[0], ids[1])),
                "z" | "Z" => indicator(same(ids[0], ids[1])),
                "Zb" => {
                    if same(ids[0], ids[1]) {
                        1.0
                    } else {
                        -1.0 / (k - 1.0)
                    }
                }
                other => panic!("unknown variable family {other:?}"),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(a: &[usize], k: usize) -> Partitioning {
        Partitioning::new(a.to_vec(), k).unwrap()
    }

    #[test]
    fn cut_value_examples() {
        let k3 = Graph::complete(3).unwrap();
        assert_eq!(cut_value(&k3, &part(&[0, 0, 1], 2)).unwrap(), 2.0);
        assert_eq!(cut_value(&k3, &part(&[0, 0, 0], 2)).unwrap(), 0.0);
        let k4 = Graph::complete(4).unwrap();
        assert_eq!(cut_value(&k4, &part(&[0, 1, 2, 0], 3)).unwrap(), 5.0);
        assert!(matches!(
            cut_value(&k4, &part(&[0, 1], 3)),
            Err(FormulationError::LengthMismatch { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn partitioning_validation() {
        assert_eq!(Partitioning::new(vec![0], 1), Err(FormulationError::BadK(1)));
        assert!(matches!(
            Partitioning::new(vec![0, 2], 2),
            Err(FormulationError::LabelOutOfRange { vertex: 1, label: 2, k: 2 })
        ));
    }

    #[test]
    fn bqo_examples() {
        let m = build_bqo(&Graph::complete(3).unwrap(), 2).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints(), m.objective().quadratic.len()), (6, 3, 6));
        assert_eq!(m.objective().constant, 3.0);

        let neg = build_bqo(&Graph::new(2, [(0, 1, -4.0)]).unwrap(), 2).unwrap();
        assert_eq!(neg.objective().constant, -4.0);
        assert!(neg.objective().quadratic.iter().all(|&(_, _, c)| c == 4.0));

        let empty = build_bqo(&Graph::empty(3).unwrap(), 2).unwrap();
        assert_eq!(empty.objective().constant, 0.0);
        assert!(empty.objective().quadratic.is_empty() && empty.objective().linear.is_empty());

        assert_eq!(build_bqo(&Graph::empty(3).unwrap(), 1), Err(FormulationError::BadK(1)));
    }

    #[test]
    fn vmilo_examples() {
        let m = build_vmilo(&Graph::complete(3).unwrap(), 2).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints()), (9, 3 + 18));
        let m = build_vmilo(&Graph::path(2).unwrap(), 3).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints()), (7, 2 + 9));
        let m = build_vmilo(&Graph::empty(4).unwrap(), 2).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints()), (8, 4));
    }

    #[test]
    fn emilo_examples() {
        let eager = EmiloOptions::default();
        let m = build_emilo(&Graph::complete(4).unwrap(), 2, eager).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints()), (6, 12 + 4));
        let m = build_emilo(&Graph::complete(3).unwrap(), 2, eager).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints()), (3, 3 + 1));
        let m = build_emilo(&Graph::complete(3).unwrap(), 3, eager).unwrap();
        assert_eq!(m.num_constraints(), 3);

        let lazy = EmiloOptions { lazy_cliques: true, ..eager };
        assert_eq!(build_emilo(&Graph::complete(4).unwrap(), 2, lazy).unwrap().num_constraints(), 12);

        let capped = EmiloOptions { lazy_cliques: false, clique_cap: 3 };
        assert_eq!(
            build_emilo(&Graph::complete(4).unwrap(), 2, capped),
            Err(FormulationError::TooLargeUpfront { count: 4, cap: 3 })
        );
        assert!(build_emilo(&Graph::complete(4).unwrap(), 2, EmiloOptions { lazy_cliques: true, clique_cap: 3 }).is_ok());
        assert_eq!(
            build_emilo(&Graph::empty(1).unwrap(), 2, eager),
            Err(FormulationError::TooFewVertices { n: 1, needed: 2 })
        );
    }

    #[test]
    fn remilo_examples() {
        let (m, info) = build_remilo(&Graph::path(4).unwrap(), 2).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints()), (3, 0));
        assert!(info.fill_edges.is_empty());

        let (m, info) = build_remilo(&Graph::cycle(4).unwrap(), 2).unwrap();
        assert_eq!(info.fill_edges.len(), 1);
        assert_eq!(m.num_vars(), 5);
        // Two triangles, three orientations each, plus each triangle is a 3-subset clique row.
        let tri = m.constraints().iter().filter(|c| c.name.starts_with("tri_")).count();
        assert_eq!(tri, 6);

        for n in 2..7 {
            for k in 2..4 {
                let g = Graph::complete(n).unwrap();
                let (r, _) = build_remilo(&g, k).unwrap();
                let e = build_emilo(&g, k, EmiloOptions::default()).unwrap();
                assert_eq!((r.num_vars(), r.num_constraints()), (e.num_vars(), e.num_constraints()));
            }
        }
    }

    #[test]
    fn misdo_examples() {
        let k3 = Graph::complete(3).unwrap();
        let m = build_misdo(&k3, 2, MisdoVariant::I).unwrap();
        assert_eq!(m.num_vars(), 6);
        assert_eq!(m.num_constraints(), 3);
        let off_diag = m.variables().iter().filter(|v| {
            let ids: Vec<&str> = v.name.split('_').skip(1).collect();
            ids[0] != ids[1]
        });
        assert_eq!(off_diag.count(), 3);
        let block = &m.psd_blocks()[0];
        assert_eq!(block.order, 3);
        // 2Z - ee^T at Z = I has diagonal 1 and off-diagonal -1.
        let identity: Vec<f64> = induced_point(&m, &part(&[0, 1, 2], 3));
        let at_identity = block.evaluate(&identity);
        assert_eq!((at_identity.get(0, 0), at_identity.get(0, 1)), (1.0, -1.0));

        let m2 = build_misdo(&k3, 3, MisdoVariant::II).unwrap();
        let v = &m2.variables()[1];
        assert_eq!((v.lower, v.upper, v.domain), (-0.5, 1.0, Domain::TwoPoint));
        let g = Graph::new(3, [(0, 1, 2.0), (1, 2, -1.0)]).unwrap();
        let m2 = build_misdo(&g, 4, MisdoVariant::II).unwrap();
        assert!((m2.objective().constant - 0.75 * 1.0).abs() < 1e-15);
    }

    #[test]
    fn formulation_names_round_trip() {
        for f in Formulation::ALL {
            assert_eq!(Formulation::parse(f.name()), Some(f));
        }
        assert_eq!(Formulation::parse("nope"), None);
    }
}
