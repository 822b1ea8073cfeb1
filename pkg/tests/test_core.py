import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from moap.core import (
    Evaluation, Instance, Offer, Solution, TimeInterval, ValidationError, dumps_instance,
    evaluate, expand_classes, lower_bound_per_demand, objectives_match, read_instance,
    singleton_classes, solution_from_dict, validate_instance, write_instance,
)


def test_sample_is_valid(sample):
    assert sample.num_demands == 3
    assert sample.num_offers == 9
    assert sample.vehicles == ("V1", "V2")
    # offers sorted by (demand id, offer id)
    assert [o.id for o in sample.offers] == ["A1", "A2", "A3", "A4", "B1", "B2", "C1", "C2", "C3"]


def test_empty_demand_rejected():
    raw = {"vehicles": [], "demands": [{"id": "d", "offers": []}]}
    with pytest.raises(ValidationError) as exc:
        validate_instance(raw)
    assert "empty demand" in exc.value.kinds


def test_degenerate_interval_rejected():
    raw = {"demands": [{"id": "d", "offers": [{"id": "o", "start": 5, "end": 5, "cost": 1}]}]}
    with pytest.raises(ValidationError) as exc:
        validate_instance(raw)
    assert exc.value.errors[0][:2] == ("degenerate interval", "o")


@pytest.mark.parametrize("offer, kind", [
    ({"id": "o", "start": 0, "end": 1, "cost": -2}, "negative cost"),
    ({"id": "o", "start": 0, "end": 1, "cost": 1, "vehicle": "ghost"}, "dangling reference"),
    ({"id": "o", "start": 0, "end": 1, "cost": 1, "class": "ghost"}, "dangling reference"),
    ({"id": "o", "start": 0.5, "end": 1, "cost": 1}, "bad value"),
    ({"id": "o", "start": 0, "end": 1, "cost": "x"}, "bad value"),
])
def test_bad_offers(offer, kind):
    raw = {"vehicles": [{"id": "V"}], "demands": [{"id": "d", "offers": [offer]}]}
    with pytest.raises(ValidationError) as exc:
        validate_instance(raw)
    assert kind in exc.value.kinds


def test_duplicate_offer_id_rejected():
    offers = [{"id": "o", "start": 0, "end": 1, "cost": 1}] * 2
    with pytest.raises(ValidationError) as exc:
        validate_instance({"demands": [{"id": "d", "offers": offers}]})
    assert "duplicate id" in exc.value.kinds


def test_identical_offers_under_distinct_ids_are_fine():
    offers = [{"id": f"o{i}", "start": 0, "end": 1, "cost": 1} for i in range(2)]
    inst = validate_instance({"demands": [{"id": "d", "offers": offers}]})
    assert inst.num_offers == 2


def test_integral_float_times_are_ticks():
    raw = {"demands": [{"id": "d", "offers": [{"id": "o", "start": 2.0, "end": 7.0, "cost": 1}]}]}
    o = validate_instance(raw).offers[0]
    assert (o.start, o.end) == (2, 7) and isinstance(o.start, int)


def test_half_open_intervals():
    assert not TimeInterval(0, 2).overlaps(TimeInterval(2, 4))
    assert TimeInterval(0, 3).overlaps(TimeInterval(2, 4))
    assert TimeInterval(3, 8).duration() == 5
    with pytest.raises(ValueError):
        TimeInterval(4, 4)


def test_evaluate_sample_feasible(sample):
    ev = evaluate(sample, {"A": "A3", "B": "B1", "C": "C1"})
    assert ev.feasible and ev.violations == ()
    assert ev.objective == 9


def test_evaluate_sample_two_overlaps(sample):
    ev = evaluate(sample, {"A": "A3", "B": "B1", "C": "C2"})
    assert not ev.feasible
    assert ev.overlap_pairs() == {frozenset({"A3", "C2"}), frozenset({"C2", "B1"})}


def test_evaluate_all_taxi(sample):
    ev = evaluate(sample, {"A": "A4", "B": "B2", "C": "C3"})
    assert ev.feasible and ev.objective == 27


def test_evaluate_foreign_and_missing(sample):
    ev = evaluate(sample, {"A": "B1", "B": None, "C": "C3"})
    kinds = sorted(v.kind for v in ev.violations)
    assert kinds == ["foreign", "missing"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_evaluate_matches_pairwise_oracle(seed):
    rng = np.random.default_rng(seed)
    inst = oracles.random_instance(rng, int(rng.integers(1, 7)))
    sel = [int(rng.choice(d.offers)) for d in inst.demands]
    ev = evaluate(inst, sel)
    assert ev.feasible == oracles.feasible_selection(inst, sel)
    assert math.isclose(ev.objective, sum(inst.offers[o].cost for o in sel))
    expected = {frozenset({inst.offers[a].id, inst.offers[b].id})
                for i, a in enumerate(sel) for b in sel[i + 1:]
                if inst.offers[a].vehicle and inst.offers[a].vehicle == inst.offers[b].vehicle
                and oracles.overlap(inst.offers[a], inst.offers[b])}
    assert ev.overlap_pairs() == expected
    # evaluation is pure
    assert evaluate(inst, sel) == ev
    if ev.feasible:
        assert ev.objective >= lower_bound_per_demand(inst) - 1e-9


def test_round_trip_is_byte_identical(sample, tmp_path):
    p = tmp_path / "a.json"
    write_instance(sample, p)
    again = tmp_path / "b.json"
    write_instance(read_instance(p), again)
    assert p.read_bytes() == again.read_bytes()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_random(seed):
    inst = oracles.random_instance(np.random.default_rng(seed), 5)
    text = dumps_instance(inst)
    assert dumps_instance(validate_instance(json.loads(text))) == text


def test_solution_round_trip(sample):
    sol = Solution.from_selection(sample, {"A": "A3", "B": "B1", "C": "C1"})
    d = sol.to_dict(sample, solver="x", runtime_ms=1.5, seed=3)
    assert d["selection"] == {"A": "A3", "B": "B1", "C": "C1"}
    back = solution_from_dict(sample, json.loads(json.dumps(d)))
    assert back.selection == sol.selection and objectives_match(back.objective, 9)


def _class_instance():
    offers = [
        Offer("a", "d1", 0, 2, 1.0, vehicle_class="car"),
        Offer("b", "d2", 1, 3, 1.0, vehicle_class="car"),
        Offer("c", "d3", 1, 3, 1.0, vehicle_class="car"),
        Offer("t1", "d1", 0, 2, 9.0), Offer("t2", "d2", 0, 2, 9.0), Offer("t3", "d3", 0, 2, 9.0),
    ]
    return Instance.from_offers(offers, ["k1", "k2"], {"k1": "car", "k2": "car"})


def test_class_capacity_check():
    inst = _class_instance()
    assert evaluate(inst, {"d1": "a", "d2": "b", "d3": "t3"}).feasible
    ev = evaluate(inst, {"d1": "a", "d2": "b", "d3": "c"})
    assert [v.kind for v in ev.violations] == ["capacity"]


def test_vehicle_assignment_checked():
    inst = _class_instance()
    sel = {"d1": "a", "d2": "b", "d3": "t3"}
    assert evaluate(inst, sel, {"a": "k1", "b": "k2"}).feasible
    assert evaluate(inst, sel, {"a": "k1", "b": "k1"}).overlap_pairs() == {frozenset({"a", "b"})}


def test_class_offer_needs_class_map():
    with pytest.raises(ValidationError):
        Instance.from_offers([Offer("a", "d", 0, 1, 1.0, vehicle_class="car")], ["k1"])


def test_expand_and_singleton_classes(sample):
    sc = singleton_classes(sample)
    assert sc.has_class_offers and set(sc.class_size.values()) == {1}
    ex = expand_classes(_class_instance())
    assert not ex.has_class_offers
    assert sorted(o.id for o in ex.offers if o.vehicle) == ["a@k1", "a@k2", "b@k1", "b@k2", "c@k1", "c@k2"]


def test_evaluation_is_a_value():
    assert Evaluation(1.0, True, ()) == Evaluation(1.0, True, ())
