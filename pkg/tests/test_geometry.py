import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gilbert_rare.geometry import PointConfiguration, Window, count_edges
from oracles import brute_force_edges


def test_window_basics():
    w = Window.box(20, 20)
    assert w.dim == 2
    assert w.volume() == 400.0
    assert math.isclose(w.diameter(), math.sqrt(800))
    assert w.contains([0, 20]) and not w.contains([20.1, 3])
    assert w.eroded(1.0) == Window((1.0, 1.0), (19.0, 19.0))
    assert Window.interval(1.5).eroded(1.0) is None


def test_window_parse_roundtrip():
    assert Window.parse("5") == Window.interval(5)
    w = Window.parse("0,20,0,25")
    assert w == Window.box(20, 25)
    assert Window.parse(w.spec()) == w


@pytest.mark.parametrize("lower,upper", [((0,), (0,)), ((1, 0), (0, 1)), ((0,), (1, 2)), ((), ())])
def test_window_rejects_degenerate(lower, upper):
    with pytest.raises(ValueError):
        Window(lower, upper)


def test_window_parse_odd_pairs():
    with pytest.raises(ValueError):
        Window.parse("0,1,2")


def test_count_edges_examples():
    assert count_edges([0.2, 0.5, 1.8]) == 1
    assert count_edges([]) == 0
    assert count_edges([(0, 0), (0.5, 0), (0, 0.9), (3, 3)]) == 2


def test_count_edges_closed_threshold():
    assert count_edges([0.0, 1.0]) == 1
    assert count_edges([(0, 0), (0.6, 0.8)]) == 1
    assert count_edges([(0, 0, 0), (0, 0, 1.0000001)]) == 0


def test_count_edges_rejects_nan():
    with pytest.raises(ValueError):
        count_edges([0.0, float("nan")])


@given(st.integers(1, 3), st.lists(st.floats(0, 1), min_size=0, max_size=120), st.floats(0.5, 6))
def test_count_edges_matches_brute_force(d, raw, scale):
    n = len(raw) // d
    pts = np.asarray(raw[: n * d]).reshape(n, d) * scale
    assert count_edges(pts) == brute_force_edges(pts)


def test_insert_examples():
    cfg = PointConfiguration(Window.interval(2))
    assert cfg.insert([0.2]) == (0, 0)
    cfg.insert([1.8])
    assert cfg.insert([0.4]) == (1, 1)


def test_insert_at_distance_exactly_one():
    cfg = PointConfiguration(Window.box(3, 3))
    cfg.insert([1.0, 1.0])
    edges, delta = cfg.insert([2.0, 1.0])
    assert (edges, delta) == (1, 1)


def test_insert_outside_window_rejected():
    cfg = PointConfiguration(Window.box(1, 1))
    with pytest.raises(ValueError):
        cfg.insert([1.5, 0.5])
    with pytest.raises(ValueError):
        cfg.insert([0.5])


def test_remove_examples():
    cfg = PointConfiguration(Window.box(4, 4))
    ids = []
    for x in [(0, 0), (0.5, 0), (0, 0.9), (3, 3)]:
        ids.append(cfg.next_id)
        cfg.insert(x)
    assert cfg.edge_count == 2
    assert cfg.remove(ids[3]) == 2
    assert cfg.remove(ids[0]) == 0
    with pytest.raises(KeyError):
        cfg.remove(ids[0])
    with pytest.raises(KeyError):
        cfg.remove(99)


def test_insert_remove_roundtrip_restores_state():
    rng = np.random.default_rng(4)
    cfg = PointConfiguration(Window.box(5, 5), capacity=4)
    for x in rng.random((60, 2)) * 5:
        cfg.insert(x)
    before = (cfg.edge_count, cfg.degrees.copy())
    pid = cfg.next_id
    cfg.insert([2.5, 2.5])
    cfg.remove(pid)
    assert cfg.edge_count == before[0]
    np.testing.assert_array_equal(cfg.degrees, before[1])


def test_neighbors_query():
    cfg = PointConfiguration(Window.box(5, 5))
    for x in [(1, 1), (1.5, 1), (3, 3), (2, 1)]:
        cfg.insert(x)
    np.testing.assert_array_equal(cfg.neighbors([1.2, 1.0]), [0, 1, 3])


def _check_invariants(cfg):
    pts = cfg.points
    assert cfg.edge_count == brute_force_edges(pts)
    assert 2 * cfg.edge_count == int(cfg.degrees.sum())
    for pid, deg in zip(cfg.ids(), cfg.degrees):
        x = cfg.point(pid)
        assert all(cfg.window.contains(p) for p in pts)
        near = np.sum(np.sum((pts - x) ** 2, axis=1) <= 1.0) - 1
        assert deg == near


def test_random_mutation_sequences():
    """1000 random insert/remove interleavings in dimensions 1 to 3."""
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        d = 1 + trial % 3
        side = rng.uniform(1.0, 5.0)
        win = Window.box(*([side] * d))
        cfg = PointConfiguration(win, capacity=2)
        for _ in range(rng.integers(1, 60)):
            alive = cfg.ids()
            if len(alive) and rng.random() < 0.35:
                cfg.remove(int(rng.choice(alive)))
            elif len(alive) < 50:
                cfg.insert(rng.random(d) * side)
            assert 2 * cfg.edge_count == int(cfg.degrees.sum())
        assert cfg.edge_count == count_edges(cfg.points) if len(cfg) else cfg.edge_count == 0
        if trial % 50 == 0:
            _check_invariants(cfg)


@given(st.lists(st.tuples(st.booleans(), st.floats(0, 3), st.floats(0, 3)), max_size=80))
def test_mutations_property(ops):
    cfg = PointConfiguration(Window.box(3, 3), capacity=1)
    for is_remove, x, y in ops:
        alive = cfg.ids()
        if is_remove and len(alive):
            cfg.remove(int(alive[int(x * 7) % len(alive)]))
        else:
            cfg.insert([x, y])
    _check_invariants(cfg)
