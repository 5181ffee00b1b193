"""Smoke test for the kcut extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/kcut-*.whl
"""

import kcut


def main():
    k3 = kcut.Graph.complete(3)
    assert (k3.n, k3.m, k3.density) == (3, 3, 100.0)
    assert kcut.cut_value(k3, [0, 0, 1], 2) == 2.0

    value, assignment = kcut.brute_force_opt(k3, 2)
    assert value == 2.0 and assignment == [0, 0, 1]

    c5 = kcut.Graph.from_edge_list("5 5\n1 2 1\n2 3 1\n3 4 1\n4 5 1\n1 5 1\n")
    r = kcut.branch_and_bound_opt(c5, 2)
    assert r["proved"] and r["value"] == 4.0

    assert kcut.vmilo_relax_bound(k3, 2)["bound"] == 3.0
    assert abs(kcut.emilo_relax_bound(k3, 2)["bound"] - 2.0) < 1e-9
    assert abs(kcut.emilo_relax_bound(k3, 2, lazy=True)["bound"] - 2.0) < 1e-9
    assert abs(kcut.remilo_relax_bound(k3, 2)["bound"] - 2.0) < 1e-9
    assert kcut.bqo_relax_bound(k3, 2) == (2.0, 2.0)

    rounded = kcut.round_fractional(k3, [[0.5, 0.5], [0.5, 0.5], [1.0, 0.0]])
    assert kcut.cut_value(k3, rounded, 2) >= 1.5

    fill, order, cliques = kcut.chordal_extend(kcut.Graph.cycle(6))
    assert len(fill) == 3 and sorted(order) == list(range(6)) and cliques

    g = kcut.Graph.random(8, 0.5, seed=7, weight_min=-2, weight_max=3)
    exact, _ = kcut.brute_force_opt(g, 3)
    assert exact <= kcut.emilo_relax_bound(g, 3)["bound"] + 1e-6 <= g.positive_weight() + 2e-6

    assert kcut.export(k3, 2, "bqo").startswith("\\")
    assert "mDIM" in kcut.export(k3, 2, "misdo1", "sdpa")

    report = kcut.certify("lemma1", samples=1000, seed=3)
    assert report["failed"] == 0 and all(c["passed"] for c in report["checks"])

    try:
        kcut.Graph(2, [(0, 0, 1.0)])
    except ValueError:
        pass
    else:
        raise AssertionError("self-loop accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
