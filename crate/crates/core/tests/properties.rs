use std::time::Duration;

use proptest::prelude::*;

use kcut_core::chordal::{chordal_extend, maximal_cliques, verify_chordal};
use kcut_core::exact::{branch_and_bound_opt, brute_force_opt};
use kcut_core::formulations::{cut_value, Partitioning};
use kcut_core::graph::{parse_edge_list, Graph};
use kcut_core::linalg::{is_psd, jacobi_eigenvalues, SymMatrix};
use kcut_core::lp::{
    separate_clique_cuts, simplex_solve, LpProblem, LpRow, LpStatus, PairValues, SeparationMode, VIOLATION_TOL,
};
use kcut_core::model::Relation;
use kcut_core::polytopes::{lift_y, lift_z, lift_zbar, lift_zmatrix, FractionalAssignment};
use kcut_core::relaxations::{bqo_objective, round_fractional};

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(proptest::option::weighted(0.6, -3i32..=4), pairs).prop_map(move |ws| {
            let mut edges = Vec::new();
            let mut it = ws.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if let Some(w) = it.next().flatten() {
                        edges.push((u, v, f64::from(w)));
                    }
                }
            }
            Graph::new(n, edges).unwrap()
        })
    })
}

fn assignment(n: usize, k: usize) -> impl Strategy<Value = FractionalAssignment> {
    proptest::collection::vec(proptest::collection::vec(0.001f64..1.0, k), n).prop_map(|rows| {
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|a| a / s).collect()
            })
            .collect();
        FractionalAssignment::new(&rows).unwrap()
    })
}

fn graph_with_x() -> impl Strategy<Value = (Graph, usize, FractionalAssignment)> {
    (graph(8), 2usize..=4).prop_flat_map(|(g, k)| {
        let n = g.n();
        (Just(g), Just(k), assignment(n, k))
    })
}

fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    Graph::new(g.n(), g.edges().iter().map(|e| (perm[e.u], perm[e.v], e.w))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip(g in graph(9)) {
        prop_assert_eq!(parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn rounding_never_loses((g, _k, x) in graph_with_x()) {
        let p = round_fractional(&g, &x).unwrap();
        prop_assert!(cut_value(&g, &p).unwrap() >= bqo_objective(&g, &x) - 1e-9);
    }

    #[test]
    fn integral_points_are_rounding_fixed_points(g in graph(7), seed in any::<u64>()) {
        let labels: Vec<usize> = (0..g.n()).map(|v| ((seed >> (v % 60)) as usize + v) % 3).collect();
        let p = Partitioning::new(labels, 3).unwrap();
        prop_assert_eq!(round_fractional(&g, &FractionalAssignment::integral(&p)).unwrap(), p);
    }

    #[test]
    fn lifts_agree_at_integral_points(g in graph(7), seed in any::<u64>(), k in 2usize..=4) {
        let labels: Vec<usize> = (0..g.n()).map(|v| ((seed >> (v % 60)) as usize ^ v) % k).collect();
        let p = Partitioning::new(labels, k).unwrap();
        let x = FractionalAssignment::integral(&p);
        let n = g.n();
        let z = lift_z(&x);
        let zm = lift_zmatrix(&x);
        let zb = lift_zbar(&x);
        for (e, y) in g.edges().iter().zip(lift_y(&x, &g)) {
            prop_assert_eq!(y, f64::from(u8::from(p.part(e.u) != p.part(e.v))));
        }
        let mut idx = 0;
        for u in 0..n {
            for v in u + 1..n {
                prop_assert_eq!(zm.get(u, v), z[idx]);
                prop_assert!((zb.get(u, v) - (k as f64 * z[idx] - 1.0) / (k as f64 - 1.0)).abs() < 1e-15);
                idx += 1;
            }
        }
    }

    #[test]
    fn optimum_is_invariant_under_vertex_permutation(g in graph(7), k in 2usize..=3, shift in 0usize..7) {
        let n = g.n();
        let perm: Vec<usize> = (0..n).map(|v| (v * 3 + shift) % n).collect();
        prop_assume!({ let mut s = perm.clone(); s.sort(); s.dedup(); s.len() == n });
        let a = brute_force_opt(&g, k).unwrap().0;
        let b = brute_force_opt(&relabel(&g, &perm), k).unwrap().0;
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!(a <= g.positive_weight() + 1e-12);
        let bb = branch_and_bound_opt(&g, k, Duration::from_secs(60)).unwrap();
        prop_assert!((a - bb.value).abs() < 1e-9);
    }

    #[test]
    fn cut_value_is_invariant_under_part_relabeling(g in graph(7), seed in any::<u64>()) {
        let labels: Vec<usize> = (0..g.n()).map(|v| ((seed >> (2 * v)) & 3) as usize % 3).collect();
        let swapped: Vec<usize> = labels.iter().map(|&l| (l + 1) % 3).collect();
        let a = cut_value(&g, &Partitioning::new(labels, 3).unwrap()).unwrap();
        let b = cut_value(&g, &Partitioning::new(swapped, 3).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn chordal_extension_is_chordal(g in graph(9)) {
        let info = chordal_extend(&g);
        let ext = Graph::new(g.n(), info.extended_edges(&g).into_iter().map(|(u, v)| (u, v, 1.0))).unwrap();
        let peo = verify_chordal(&ext).unwrap();
        let cliques = maximal_cliques(&ext, &peo).unwrap();
        // Every extended edge lies in some maximal clique.
        for e in ext.edges() {
            prop_assert!(cliques.iter().any(|c| c.contains(&e.u) && c.contains(&e.v)));
        }
    }

    #[test]
    fn jacobi_preserves_trace_and_permutations(entries in proptest::collection::vec(-5.0f64..5.0, 21), shift in 1usize..6) {
        let a = SymMatrix::from_fn(6, |i, j| entries[i * (11 - i) / 2 + j - i]);
        let ev = jacobi_eigenvalues(&a, 1e-12).unwrap();
        prop_assert!((ev.iter().sum::<f64>() - a.trace()).abs() < 1e-9);
        let sq: f64 = ev.iter().map(|l| l * l).sum();
        prop_assert!((sq.sqrt() - a.frobenius_norm()).abs() < 1e-8);
        let perm: Vec<usize> = (0..6).map(|i| (i + shift) % 6).collect();
        let ev2 = jacobi_eigenvalues(&a.permuted(&perm), 1e-12).unwrap();
        for (x, y) in ev.iter().zip(&ev2) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn gram_matrices_are_psd(rows in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 5)) {
        let g = SymMatrix::from_fn(5, |i, j| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum());
        prop_assert!(is_psd(&g, 1e-9).unwrap().psd);
    }

    #[test]
    fn separation_matches_enumeration(vals in proptest::collection::vec(0.0f64..0.6, 21), k in 2usize..=3) {
        let z = PairValues::from_fn(7, |u, v| vals[u * (13 - u) / 2 + v - u - 1]);
        let universe: Vec<usize> = (0..7).collect();
        let exact = separate_clique_cuts(&z, k, &universe, SeparationMode::Exact, 1);
        let mut best = f64::INFINITY;
        kcut_core::combinatorics::for_each_combination(&universe, k + 1, |q| best = best.min(z.mass(q)));
        if best < 1.0 - VIOLATION_TOL {
            prop_assert_eq!(exact.len(), 1);
            prop_assert!((exact[0].mass - best).abs() < 1e-12);
        } else {
            prop_assert!(exact.is_empty());
        }
        for c in separate_clique_cuts(&z, k, &universe, SeparationMode::Greedy, 100) {
            prop_assert!(c.mass < 1.0 - VIOLATION_TOL);
            prop_assert!((z.mass(&c.members) - c.mass).abs() < 1e-12);
        }
    }
}

/// Best vertex of a 2-variable LP by enumerating intersections of pairs of
/// constraint lines (rows and box sides).
fn brute_force_lp(p: &LpProblem) -> Option<f64> {
    let mut lines: Vec<([f64; 2], f64)> = Vec::new();
    for r in &p.rows {
        let mut a = [0.0; 2];
        for &(j, c) in &r.terms {
            a[j] += c;
        }
        lines.push((a, r.rhs));
    }
    for j in 0..2 {
        let mut a = [0.0; 2];
        a[j] = 1.0;
        lines.push((a, p.lower[j]));
        lines.push((a, p.upper[j]));
    }
    let mut best: Option<f64> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let ([a, b], e) = lines[i];
            let ([c, d], f) = lines[j];
            let det = a * d - b * c;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [(e * d - b * f) / det, (a * f - e * c) / det];
            if p.max_violation(&x) <= 1e-9 {
                let v = p.evaluate(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

fn small_lp() -> impl Strategy<Value = LpProblem> {
    let row = (proptest::collection::vec(-3i32..=3, 2), 0u8..3, -4i32..=6).prop_map(|(a, rel, rhs)| LpRow {
        terms: vec![(0, f64::from(a[0])), (1, f64::from(a[1]))],
        relation: [Relation::Le, Relation::Ge, Relation::Eq][rel as usize],
        rhs: f64::from(rhs),
    });
    (proptest::collection::vec(-3i32..=3, 2), proptest::collection::vec(row, 0..4), -2i32..=0, 1i32..=3).prop_map(
        |(c, rows, lo, hi)| LpProblem {
            objective: c.iter().map(|&v| f64::from(v)).collect(),
            objective_constant: 0.0,
            rows,
            lower: vec![f64::from(lo); 2],
            upper: vec![f64::from(hi); 2],
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn simplex_matches_vertex_enumeration(p in small_lp()) {
        let s = simplex_solve(&p).unwrap();
        match brute_force_lp(&p) {
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - best).abs() < 1e-9, "{} vs {}", s.objective, best);
                prop_assert!(s.max_violation <= 1e-7);
            }
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn adding_rows_never_raises_the_optimum(p in small_lp(), extra in small_lp()) {
        let base = simplex_solve(&p).unwrap();
        let mut q = p.clone();
        q.rows.extend(extra.rows);
        let cut = simplex_solve(&q).unwrap();
        if base.status == LpStatus::Optimal && cut.status == LpStatus::Optimal {
            prop_assert!(cut.objective <= base.objective + 1e-9);
        }
        if base.status == LpStatus::Infeasible {
            prop_assert_eq!(cut.status, LpStatus::Infeasible);
        }
    }
}
