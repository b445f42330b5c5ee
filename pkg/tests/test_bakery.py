import json

import numpy as np
import pytest

from sldiflow.bakery import (
    BATCH_MACHINES,
    N_EVENTS,
    NO_WAIT,
    BakeryConfig,
    BakeryModel,
    ConfigError,
    FULL_SCALE_CAPACITIES,
    FULL_SCALE_QUANTITIES,
    audit_trajectory,
    bakery_makespan,
    build_modes,
    build_sequence,
    finish,
    index_products,
    random_config,
    start,
    synthetic_config,
)
from sldiflow.maxplus import NEG_INF, POS_INF
from sldiflow.sldi import check_trajectory


def test_event_indexing():
    assert (start(1), finish(1), start(7), finish(7)) == (0, 1, 12, 13)
    assert N_EVENTS == 14


def test_index_products_example():
    cfg = synthetic_config([1, 3], [1, 2], seed=0)
    idx = index_products(cfg, (2, 1))
    assert idx.types == (2, 2, 2, 1)
    assert idx.batches == (1, 1, 2, 1)
    assert build_sequence(idx) == ("a2", "b2", "c2", "a1")
    assert (idx.Q, idx.B) == (4, 3)


def test_sequence_shapes():
    cfg = synthetic_config([3], [3])
    idx = index_products(cfg, (1,))
    assert idx.batches == (1, 1, 1) and idx.B == 1
    assert build_sequence(idx) == ("a1", "a1", "a1")
    cfg = synthetic_config([1, 1], [2, 2])
    assert build_sequence(index_products(cfg, (2, 1))) == ("c2", "a1")


def test_last_batch_size_when_capacity_divides_demand():
    cfg = synthetic_config([6, 7], [3, 3])
    idx = index_products(cfg, (1, 2))
    sizes = {}
    for j, b in zip(idx.types, idx.batches):
        sizes[j, b] = sizes.get((j, b), 0) + 1
    assert sizes == {(1, 1): 3, (1, 2): 3, (2, 1): 3, (2, 2): 3, (2, 3): 1}


def test_full_scale_counts():
    cfg = synthetic_config(FULL_SCALE_QUANTITIES, FULL_SCALE_CAPACITIES)
    assert (cfg.Q, cfg.J, cfg.B) == (975, 9, 12)


def test_schedule_must_be_a_permutation():
    cfg = synthetic_config([2, 0, 3], [1, 1, 1])
    assert index_products(cfg, (3, 2, 1)).schedule == (3, 1)  # zero-demand type dropped
    for bad in [(1,), (1, 1, 3), (1, 4, 3)]:
        with pytest.raises(ValueError):
            index_products(cfg, bad)


def test_mode_structure():
    cfg = synthetic_config([2, 2], [1, 2], seed=3)
    modes = build_modes(cfg)
    assert sorted(modes) == ["a1", "a2", "b1", "b2", "c1", "c2"]
    for j in (1, 2):
        a, b, c = modes[f"a{j}"], modes[f"b{j}"], modes[f"c{j}"]
        assert (c.b1 == POS_INF).all() and (b.b1 == POS_INF).all()
        assert np.array_equal(a.a0, c.a0) and np.array_equal(a.b0, b.b0)
        for m in NO_WAIT:
            assert c.a1[start(m), finish(m)] == 0
        for m in BATCH_MACHINES:
            assert b.a1[start(m), finish(m)] == 0
            assert a.a1[start(m), start(m)] == a.b1[start(m), start(m)] == 0
        assert a.a1[start(1), start(1)] == a.b1[start(1), start(1)] == 0
        assert c.a1[start(1), finish(1)] == cfg.clean_time
        assert a.a1[finish(1), finish(1)] == 0


def test_zero_cleaning_time_only_adds_one_entry():
    cfg = synthetic_config([2, 2], [2, 2], seed=1)
    cfg.clean_time = 0.0
    modes = build_modes(cfg)
    diff = np.argwhere(modes["b1"].a1 != modes["c1"].a1)
    assert diff.tolist() == [[start(1), finish(1)]]
    assert modes["c1"].a1[start(1), finish(1)] == 0 and modes["b1"].a1[start(1), finish(1)] == NEG_INF


def test_single_product_makespan_is_sum_of_minima():
    cfg = synthetic_config([1], [1], seed=6)
    expected = cfg.proc_min[:, 0].sum() + cfg.transport_min.sum()
    for method in ("dense", "block", "oracle"):
        assert bakery_makespan(cfg, (1,), method).makespan == expected


def test_methods_agree_and_trajectories_audit_clean():
    rng = np.random.default_rng(17)
    for _ in range(12):
        cfg = random_config(rng, max_types=3, max_products=18)
        model = BakeryModel(cfg)
        w = tuple(reversed(cfg.active_types))
        results = {m: model.makespan(w, m) for m in ("dense", "block", "oracle")}
        assert len({r.makespan for r in results.values()}) == 1
        res = model.makespan(w, "dense", want_trajectory=True)
        assert check_trajectory(model.instance(w), res.trajectory, tol=1e-6) == []
        assert audit_trajectory(cfg, model.indexing(w), res.trajectory) == []


def test_doubling_times_doubles_makespan():
    cfg = synthetic_config([3, 2], [2, 1], seed=2)
    base = bakery_makespan(cfg, (1, 2)).makespan
    scaled = BakeryConfig(cfg.quantities, cfg.capacities, 2 * cfg.proc_min, 2 * cfg.proc_max,
                          2 * cfg.transport_min, 2 * cfg.transport_max, 2 * cfg.clean_time)
    assert bakery_makespan(scaled, (1, 2)).makespan == 2 * base


def test_infeasible_trolley_window():
    cfg = synthetic_config([4, 3], [2, 3], seed=0, feasible=False)
    res = bakery_makespan(cfg, (1, 2))
    assert not res.feasible and res.witness is not None
    assert not bakery_makespan(cfg, (2, 1), "oracle").feasible


def test_empty_demand_is_degenerate():
    cfg = synthetic_config([0, 0], [1, 1])
    res = bakery_makespan(cfg, ())
    assert res.feasible and res.makespan == 0 and res.status == "degenerate"


def test_trajectory_only_from_trajectory_methods():
    cfg = synthetic_config([2], [2])
    with pytest.raises(ValueError, match="no trajectory"):
        bakery_makespan(cfg, (1,), "block", want_trajectory=True)
    res = bakery_makespan(cfg, (1,), "oracle", want_trajectory=True)
    assert res.trajectory.shape == (2, N_EVENTS)


# -- validation and documents -----------------------------------------------------

def test_validation_messages():
    cfg = synthetic_config([2, 2], [1, 1])
    cfg.proc_min[5, 1] = cfg.proc_max[5, 1] + 1
    cfg.proc_max[2, 0] += 1
    cfg.transport_max[0] = 3
    cfg.capacities = (0, 1)
    problems = cfg.validate()
    assert any("machine 6 (proofing), type 2" in p and ">" in p for p in problems)
    assert any("machine 3 (rounding), type 1" in p and "no-wait" in p for p in problems)
    assert any("link 1" in p and "rigid" in p for p in problems)
    assert any("type 1: capacity 0" in p for p in problems)
    with pytest.raises(ConfigError):
        cfg.check()


def test_document_round_trip(tmp_path):
    cfg = synthetic_config([3, 0, 2], [2, 1, 2], seed=5)
    path = tmp_path / "shop.json"
    cfg.save(path)
    back = BakeryConfig.load(path)
    assert back.quantities == cfg.quantities and back.capacities == cfg.capacities
    assert np.array_equal(back.proc_max, cfg.proc_max)
    assert back.validate() == []
    demand = tmp_path / "demand.json"
    demand.write_text(json.dumps({"quantities": {"type1": 1, "type3": 4}}))
    assert BakeryConfig.load(path, demand).quantities == (1, 0, 4)


def test_parse_errors_carry_context(tmp_path):
    doc = synthetic_config([1, 1], [1, 1]).to_dict()
    del doc["types"][1]["capacity"]
    with pytest.raises(ConfigError, match=r"types\[2\].*capacity"):
        BakeryConfig.from_dict(doc)
    doc = synthetic_config([1], [1]).to_dict()
    doc["machines"][3]["processing"] = [[1]]
    with pytest.raises(ConfigError, match=r"machines\[4\]\.processing\[1\]"):
        BakeryConfig.from_dict(doc)
    bad = tmp_path / "bad.json"
    bad.write_text('{"types": [\n  {"name": "x",}\n]}')
    with pytest.raises(ConfigError, match="line 2, column"):
        BakeryConfig.load(bad)
    doc = synthetic_config([1], [1]).to_dict()
    doc["demand"] = {"nope": 3}
    with pytest.raises(ConfigError, match="unknown types"):
        BakeryConfig.from_dict(doc)
