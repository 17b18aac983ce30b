"""Smoke test for the Python bindings.

Build and install first:  pip install --no-build-isolation -e crates/py
Then run:                 python python/smoke_test.py
"""

import math
import os
import tempfile

import tradeoff_ann as ta


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # Exponents at the curve endpoints and the balanced point (c = 2, random geometry).
    r = math.sqrt(2) / 2
    assert close(ta.curve_point(2.0, r, rho_q=0.0).space_exponent(), 16 / 9)
    assert close(ta.curve_point(2.0, r).rho_q, 1 / 7)
    assert close(ta.curve_point(2.0, r, rho_u=0.0).rho_q, 7 / 16)
    assert close(ta.list_of_points_rho_q(2.0, 0.0), 0.75)
    assert ta.one_probe_space_exponent(2.0) == 4.0
    a, b = ta.alpha_beta(math.sqrt(2))
    assert abs(a) < 1e-15 and close(b, 1.0)
    assert close(ta.joint_cap_prob(math.sqrt(2), 1.0, 0.5), ta.cap_prob(1.0) * ta.cap_prob(0.5))

    # Data-independent tree on a planted instance.
    inst = ta.gen_sphere(2000, 128, 2.0, 100, 7)
    params = ta.solve_thresholds(ta.curve_point(2.0, inst.r), len(inst.points), k=3, success_const=3.0)
    tree = ta.FilterTree.build(inst.points, params, seed=7)
    hits = 0
    for qi in range(len(inst.queries)):
        q = inst.queries.row(qi)
        found, stats = tree.query(inst.points, q, inst.accept_radius)
        if found is not None:
            p = inst.points.row(found)
            assert math.dist(p, q) <= inst.accept_radius
            hits += 1
    print(f"filter tree: {tree.node_count} nodes, recall {hits / len(inst.queries):.2f}")
    assert hits >= 80

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "t.tree")
        tree.save(path)
        back = ta.FilterTree.load(path)
        q = inst.queries.row(0)
        assert back.query(inst.points, q, 1.2) == tree.query(inst.points, q, 1.2)

    # Data-dependent tree on clustered input: clusters are carved at the root.
    cl = ta.gen_clustered(1024, 128, 2.0, 4, 0.25, 100, 3)
    dd = ta.DDTree.build(cl.points, cl.cr / cl.r, cl.r, seed=3)
    ok, violations = dd.check_invariants()
    assert ok, violations
    assert dd.root_has_cluster()
    hits = 0
    for qi in range(len(cl.queries)):
        q = cl.queries.row(qi)
        found, _ = dd.query(cl.points, q, cl.accept_radius)
        if found is not None:
            assert math.dist(cl.points.row(found), q) <= cl.accept_radius
            hits += 1
    print(f"dd tree: {dd.node_kinds()}, recall {hits / len(cl.queries):.2f}")
    assert hits >= 85

    # Errors surface as Python exceptions.
    try:
        ta.curve_point(0.5, 0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    report = ta.run_bench("di", 1024, seed=1, d=64, q_count=50)
    assert "[results]" in report
    print("ok")


if __name__ == "__main__":
    main()
