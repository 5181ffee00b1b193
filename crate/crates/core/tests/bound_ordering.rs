use std::time::Duration;

use kcut_core::exact::{branch_and_bound_opt, brute_force_opt};
use kcut_core::graph::{gen_instance, Graph, InstanceSpec};
use kcut_core::relaxations::{
    bqo_relax_bound, emilo_relax_bound, remilo_relax_bound, vmilo_relax_bound, vmilo_relax_bound_lp, BqoBudget,
};

const SLACK: f64 = 1e-6;

/// Random graphs with weights in -3..=3, zero weights included as edges.
fn mixed_sign(n: usize, p: f64, seed: u64) -> Graph {
    gen_instance(
        &InstanceSpec::Random {
            n,
            p,
            weight_min: -3,
            weight_max: 3,
        },
        seed,
    )
    .unwrap()
}

#[test]
fn ordering_on_mixed_sign_instances() {
    for seed in 0..30u64 {
        let n = 4 + (seed as usize % 7);
        let k = 2 + (seed as usize % 2);
        let g = mixed_sign(n, 0.6, seed);
        let exact = brute_force_opt(&g, k).unwrap().0;
        let bqo = bqo_relax_bound(&g, k, BqoBudget::default()).unwrap().upper();
        let emilo = emilo_relax_bound(&g, k, false).unwrap().value;
        let remilo = remilo_relax_bound(&g, k).unwrap().value;
        let vmilo = vmilo_relax_bound(&g);
        assert!((exact - bqo).abs() <= SLACK, "seed {seed}: exact {exact} bqo {bqo}");
        assert!(exact <= emilo + SLACK, "seed {seed}: exact {exact} emilo {emilo}");
        assert!(emilo <= vmilo + SLACK, "seed {seed}: emilo {emilo} vmilo {vmilo}");
        assert!((remilo - emilo).abs() <= SLACK, "seed {seed} n {n} k {k}: remilo {remilo} emilo {emilo}");
    }
}

#[test]
fn lazy_matches_eager() {
    for seed in 0..24u64 {
        let n = 3 + (seed as usize % 8);
        for k in [2, 3] {
            let g = mixed_sign(n, 0.7, 100 + seed);
            let eager = emilo_relax_bound(&g, k, false).unwrap().value;
            let lazy = emilo_relax_bound(&g, k, true).unwrap();
            assert!(lazy.converged);
            assert!((eager - lazy.value).abs() <= 1e-7, "seed {seed} k {k}: {eager} vs {}", lazy.value);
        }
    }
}

#[test]
fn vmilo_simplex_matches_closed_form() {
    for seed in 0..20u64 {
        let g = mixed_sign(3 + seed as usize % 5, 0.8, 200 + seed);
        let k = 2 + seed as usize % 3;
        let lp = vmilo_relax_bound_lp(&g, k).unwrap().value;
        assert!((lp - vmilo_relax_bound(&g)).abs() <= 1e-7, "seed {seed}");
    }
}

#[test]
fn exact_solvers_agree() {
    for seed in 0..40u64 {
        let n = 2 + seed as usize % 8;
        let k = 2 + seed as usize % 3;
        let g = mixed_sign(n, 0.5, 300 + seed);
        let a = brute_force_opt(&g, k).unwrap().0;
        let b = branch_and_bound_opt(&g, k, Duration::from_secs(60)).unwrap();
        assert!((a - b.value).abs() < 1e-9, "seed {seed}");
        assert!(a <= g.positive_weight() + 1e-12);
    }
}
