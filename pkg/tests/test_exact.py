import math

import highspy
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from moap.conflict import build_offer_conflict_graph
from moap.core import Instance, Offer, Solution, evaluate, singleton_classes, validate_instance
from moap.exact import (
    BranchAndBoundConfig, CapacityExceeded, assign_vehicles, build_model, color_intervals,
    export_model, restrict, solve_bnb, solve_exact,
)
from moap.greedy import greedy


def row_ids(model):
    inst = model.instance
    return {frozenset(inst.offers[model.var_offer[v]].id for v in row) for row, _ in model.cap_rows}


def test_sample_clique_model(sample_graphs):
    g, _ = sample_graphs
    m = build_model(g.instance, g, "clique")
    assert len(m.eq_rows) == 3 and m.num_vars == 9
    assert row_ids(m) == {frozenset({"A2", "C1"}), frozenset({"A3", "C2"}), frozenset({"C2", "B1"})}
    assert all(rhs == 1 for _, rhs in m.cap_rows)
    counts = np.zeros(9, dtype=int)
    for row in m.eq_rows:
        counts[list(row)] += 1
    assert (counts == 1).all()


def test_sample_edge_model(sample_graphs):
    g, _ = sample_graphs
    m = build_model(g.instance, g, "edge")
    assert len(m.eq_rows) == 3 and len(m.cap_rows) == 3
    assert row_ids(m) == {frozenset({"A2", "C1"}), frozenset({"A3", "C2"}), frozenset({"C2", "B1"})}


def test_edge_rows_outnumber_clique_rows_on_triangles():
    inst = Instance.from_offers([Offer(f"o{i}", f"d{i}", i, 10, 1.0, "V") for i in range(4)]
                                + [Offer(f"t{i}", f"d{i}", 0, 1, 5.0) for i in range(4)], ["V"])
    g = build_offer_conflict_graph(inst)
    assert len(build_model(inst, g, "clique").cap_rows) == 1
    assert len(build_model(inst, g, "edge").cap_rows) == 6


def test_no_conflicts_gives_no_capacity_rows():
    inst = Instance.from_offers([Offer("a", "d1", 0, 1, 1.0, "V"), Offer("b", "d2", 1, 2, 1.0, "V")],
                                ["V"])
    m = build_model(inst, build_offer_conflict_graph(inst))
    assert m.cap_rows == []
    lp = export_model(m, "LP")
    assert lp.count("= 1") == 2 and "<=" not in lp


def test_class_model_needs_classes(sample_graphs):
    g, _ = sample_graphs
    with pytest.raises(ValueError):
        build_model(g.instance, g, "clique", classes=True)


def test_unknown_formulation(sample_graphs):
    g, _ = sample_graphs
    with pytest.raises(ValueError):
        build_model(g.instance, g, "star")


def test_config_validation():
    with pytest.raises(ValueError):
        BranchAndBoundConfig(time_limit=0)
    with pytest.raises(ValueError):
        BranchAndBoundConfig(bound="mincost", branching="fractional")


@pytest.mark.parametrize("bound", ["lp", "mincost"])
@pytest.mark.parametrize("formulation", ["clique", "edge"])
def test_sample_solved(sample, bound, formulation):
    cost, combo = oracles.exhaustive_optimum(sample)
    res = solve_exact(sample, formulation, cfg=BranchAndBoundConfig(bound=bound))
    assert res.optimal and res.status == "optimal"
    assert res.solution.objective == cost == 9
    assert res.solution.selection_ids(sample) == {"A": "A3", "B": "B1", "C": "C1"}
    assert tuple(res.solution.selection) == combo
    assert res.bound <= res.solution.objective + 1e-9


def test_sample_with_reweighted_costs():
    # make C2 the cheapest offer overall; the optimum must route around it
    raw = oracles.sample_raw({"A1": 5, "A2": 6, "A3": 7, "A4": 10, "B1": 3, "B2": 8,
                            "C1": 9, "C2": 0, "C3": 9})
    inst = validate_instance(raw)
    cost, _ = oracles.exhaustive_optimum(inst)
    res = solve_exact(inst)
    assert res.solution.objective == cost


def test_infeasible_instance():
    inst = Instance.from_offers([Offer("a", "d1", 0, 3, 1.0, "V"), Offer("b", "d2", 1, 4, 1.0, "V")],
                                ["V"])
    for bound in ("lp", "mincost"):
        res = solve_exact(inst, cfg=BranchAndBoundConfig(bound=bound))
        assert res.status == "infeasible" and res.solution is None
        assert res.optimal and math.isinf(res.bound)


def _check_result(inst, res, cost):
    assert res.optimal
    assert math.isclose(res.solution.objective, cost, abs_tol=1e-9)
    ev = evaluate(inst, res.solution.selection)
    assert ev.feasible and math.isclose(ev.objective, res.solution.objective)
    assert res.bound <= cost + 1e-6


def test_random_instances_match_search_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        inst = oracles.random_instance(rng, int(rng.integers(1, 11)), max_offers=4, n_vehicles=3,
                                       horizon=24)
        cost, _ = oracles.search_optimum(inst)
        res = solve_exact(inst, "clique")
        if math.isinf(cost):
            assert res.status == "infeasible"
        else:
            _check_result(inst, res, cost)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["clique", "edge"]),
       st.sampled_from(["lp", "mincost"]))
def test_bnb_matches_exhaustive(seed, formulation, bound):
    rng = np.random.default_rng(seed)
    inst = oracles.random_instance(rng, int(rng.integers(1, 7)), max_offers=3, taxi=bool(rng.integers(2)))
    cost, _ = oracles.exhaustive_optimum(inst)
    res = solve_exact(inst, formulation, cfg=BranchAndBoundConfig(bound=bound))
    if math.isinf(cost):
        assert res.status == "infeasible"
    else:
        _check_result(inst, res, cost)


def test_search_oracle_agrees_with_exhaustive():
    rng = np.random.default_rng(5)
    for _ in range(30):
        inst = oracles.random_instance(rng, int(rng.integers(1, 6)))
        assert oracles.search_optimum(inst)[0] == oracles.exhaustive_optimum(inst)[0]


def test_clique_root_bound_at_least_edge_root_bound():
    rng = np.random.default_rng(77)
    for _ in range(40):
        inst = oracles.random_instance(rng, 10, max_offers=4, n_vehicles=2, horizon=16, max_len=10)
        g = build_offer_conflict_graph(inst)
        cfg = BranchAndBoundConfig(node_limit=1)
        rc = solve_bnb(build_model(inst, g, "clique"), cfg)
        re_ = solve_bnb(build_model(inst, g, "edge"), cfg)
        assert rc.root_bound >= re_.root_bound - 1e-7


def test_determinism():
    inst = oracles.random_instance(np.random.default_rng(9), 10)
    a, b = solve_exact(inst), solve_exact(inst)
    assert a.solution.selection == b.solution.selection and a.nodes == b.nodes


def test_node_limit_reported_not_optimal():
    rng = np.random.default_rng(11)
    for _ in range(50):
        inst = oracles.random_instance(rng, 10, n_vehicles=2, horizon=12, max_len=10)
        res = solve_exact(inst, cfg=BranchAndBoundConfig(bound="mincost", node_limit=1))
        if not res.optimal:
            assert res.nodes == 1
            if res.solution is not None:
                assert res.bound <= res.solution.objective + 1e-9
            return
    pytest.skip("every instance closed at the root")


def test_warm_start_never_worse():
    rng = np.random.default_rng(3)
    for _ in range(20):
        inst = oracles.random_instance(rng, 10)
        g = build_offer_conflict_graph(inst)
        start = greedy(inst, g, "MaxMinCost")
        if not start.complete:
            continue
        model = build_model(inst, g)
        res = solve_bnb(model, BranchAndBoundConfig(node_limit=2, incumbent=start, bound="mincost"))
        assert res.solution is not None and res.solution.objective <= start.objective + 1e-9


def test_restrict_fixes_and_offsets(sample_graphs):
    g, _ = sample_graphs
    inst = g.instance
    m = build_model(inst, g)
    r = restrict(m, [inst.offer_index["C2"]])
    assert r.offset == 1 and not r.infeasible
    free = {inst.offers[o].id for o in r.var_offer}
    # A3 and B1 share V2 with C2 and drop out, as do the other C offers
    assert free == {"A1", "A2", "A4", "B2"}
    res = solve_bnb(r)
    assert res.solution.objective == 1 + 5 + 8


def test_restrict_conflicting_fixings_infeasible(sample_graphs):
    g, _ = sample_graphs
    inst = g.instance
    r = restrict(build_model(inst, g), [inst.offer_index["A3"], inst.offer_index["C2"]])
    assert r.infeasible


def test_lp_export_structure(sample_graphs):
    g, _ = sample_graphs
    text = export_model(build_model(g.instance, g), "LP")
    lower = text.lower()
    assert "minimize" in lower and "binar" in lower
    assert text.count("= 1\n") - text.count("<= 1\n") == 3
    binaries = lower.split("binar")[1].split("end")[0].split()
    assert len([b for b in binaries if b.startswith("x_")]) == 9


def _highs_optimum(text, suffix, tmp_path):
    path = tmp_path / f"m.{suffix}"
    path.write_text(text)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(path))
    h.run()
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    return h.getInfo().objective_function_value


@pytest.mark.parametrize("fmt, suffix", [("LP", "lp"), ("MPS", "mps")])
def test_exports_reimport_to_same_optimum(fmt, suffix, tmp_path):
    rng = np.random.default_rng(21)
    for k in range(8):
        inst = oracles.random_instance(rng, 8)
        g = build_offer_conflict_graph(inst)
        model = build_model(inst, g, "clique" if k % 2 else "edge")
        res = solve_bnb(model)
        if res.solution is None:
            continue
        got = _highs_optimum(export_model(model, fmt), suffix, tmp_path)
        assert math.isclose(got, res.solution.objective, abs_tol=1e-6)


def test_export_names_escaped():
    inst = Instance.from_offers([Offer("a b", "d 1", 0, 2, 1.0, "V"), Offer("c", "d2", 1, 3, 1.0, "V"),
                                 Offer("t", "d2", 1, 3, 4.0)], ["V"])
    m = build_model(inst, build_offer_conflict_graph(inst))
    text = export_model(m, "LP")
    assert "x_au20_b" in text and "d_du20_1" in text


def test_singleton_class_model_matches_plain(sample):
    sc = singleton_classes(sample)
    g_plain = build_offer_conflict_graph(sample)
    g_cls = build_offer_conflict_graph(sc)
    plain = build_model(sample, g_plain)
    cls = build_model(sc, g_cls, classes=True)
    assert len(plain.eq_rows) == len(cls.eq_rows)
    assert sorted(len(r) for r, _ in plain.cap_rows) == sorted(len(r) for r, _ in cls.cap_rows)
    assert all(rhs == 1 for _, rhs in cls.cap_rows)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_singleton_class_optimum_matches_plain(seed):
    inst = oracles.random_instance(np.random.default_rng(seed), 6)
    plain = solve_exact(inst)
    cls = solve_exact(singleton_classes(inst), classes=True)
    assert plain.status == cls.status
    if plain.solution is not None:
        assert math.isclose(plain.solution.objective, cls.solution.objective)
        assert cls.solution.feasible


def test_color_two_vehicles():
    colors = color_intervals([("a", 0, 2), ("b", 1, 3), ("c", 2, 4)], 2)
    assert colors == {"a": 0, "b": 1, "c": 0}


def test_color_disjoint_uses_one():
    colors = color_intervals([("a", 0, 1), ("b", 1, 2), ("c", 5, 6)], 3)
    assert set(colors.values()) == {0}


def test_color_capacity_exceeded():
    with pytest.raises(CapacityExceeded):
        color_intervals([("a", 0, 3), ("b", 1, 3), ("c", 2, 3)], 2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(1, 6)), max_size=12))
def test_coloring_uses_clique_number(spans):
    items = [(i, s, s + l) for i, (s, l) in enumerate(spans)]
    depth = max((sum(1 for _, s, e in items if s <= t < e) for t in range(30)), default=0)
    colors = color_intervals(items, max(depth, 1))
    assert len(set(colors.values())) == depth
    for i, s, e in items:
        for j, s2, e2 in items:
            if i < j and colors[i] == colors[j]:
                assert e <= s2 or e2 <= s


def _class_instance():
    offers = [Offer(f"c{i}", f"d{i}", s, e, 1.0, vehicle_class="car")
              for i, (s, e) in enumerate([(0, 2), (1, 3), (2, 4), (1, 5)])]
    offers += [Offer(f"t{i}", f"d{i}", 0, 1, 10.0) for i in range(4)]
    return Instance.from_offers(offers, ["k1", "k2"], {"k1": "car", "k2": "car"})


def test_class_solve_and_assign():
    inst = _class_instance()
    cost, _ = oracles.exhaustive_optimum(inst)
    res = solve_exact(inst, classes=True)
    assert res.optimal and res.solution.objective == cost == 13
    va = res.solution.vehicle_assignment
    assert set(va.values()) <= {"k1", "k2"}
    assert evaluate(inst, res.solution.selection, va).feasible


def test_assign_vehicles_rejects_overfull():
    inst = _class_instance()
    sol = Solution.from_selection(inst, {"d0": "c0", "d1": "c1", "d2": "t2", "d3": "c3"})
    with pytest.raises(CapacityExceeded):
        assign_vehicles(inst, sol)
