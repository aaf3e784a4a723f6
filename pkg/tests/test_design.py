from fractions import Fraction

import numpy as np
import pytest

from apdesign.decomposition import AlternatingComponent, Kind
from apdesign.design import (
    AP_STREAM,
    DesignParams,
    ap_randomize,
    check_assignment,
    joint_prob,
    joint_probs,
    marginal_probs,
    naive_randomize,
    sample_batches,
    sample_component,
    stream,
    unconditional_prob,
)
from apdesign.errors import IndexOutOfRange, InfeasibleAssignment, InvalidP, ShapeMismatch
from apdesign.simulation import enumerate_oracle
from oracles import brute_force_distribution


def path(k, start=1):
    labels = ["T" if j % 2 == 0 else "C" for j in range(k)]
    return AlternatingComponent(Kind.PATH, range(start, start + k + 1), labels)


def cycle(k, start=1):
    labels = ["T" if j % 2 == 0 else "C" for j in range(k)]
    return AlternatingComponent(Kind.CYCLE, list(range(start, start + k)) + [start], labels)


def test_unconditional_examples():
    assert unconditional_prob(path(3), 2, 0.5) == pytest.approx(1 / 3)
    assert unconditional_prob(cycle(4), 4, 0.5) == pytest.approx(0.5)
    assert unconditional_prob(path(3), 1, 1.0) == pytest.approx(0.5)
    with pytest.raises(IndexOutOfRange):
        unconditional_prob(path(3), 4, 0.5)


def test_joint_examples():
    assert joint_prob(path(3), 1, 2, 0.3) == 0
    assert joint_prob(path(3), 1, 3, 0.5) == pytest.approx(1 / 6)
    assert joint_prob(cycle(4), 2, 4, 0.5) == pytest.approx(1 / 3)


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_invalid_p(p):
    with pytest.raises(InvalidP):
        marginal_probs(Kind.PATH, 3, p)


def test_p_one_path_two_alternates():
    dist = dict(enumerate_oracle(Kind.PATH, 1.0, k=2))
    assert dist == {(1, 0): 0.5, (0, 1): 0.5}
    w = sample_component(path(2), 1.0, stream(1, AP_STREAM), 2000)
    assert set(map(tuple, w)) == {(1, 0), (0, 1)}


def test_single_edge_at_p_one_is_always_selected():
    w = sample_component(path(1), 1.0, stream(3, AP_STREAM), 50)
    assert w.all()
    assert marginal_probs(Kind.PATH, 1, 1.0).tolist() == [1.0]


@pytest.mark.parametrize("kind,k", [("path", k) for k in range(1, 11)] + [("cycle", k) for k in (4, 6, 8, 10, 12)])
@pytest.mark.parametrize("p", [Fraction(1, 4), Fraction(1, 2), Fraction(9, 10), Fraction(1)])
def test_closed_forms_match_oracle(kind, k, p):
    dist = enumerate_oracle(kind, p, k=k)
    assert sum(prob for _, prob in dist) == 1
    assert dict(dist) == brute_force_distribution(kind, k, p)
    m = marginal_probs(Kind(kind), k, float(p))
    jp = joint_probs(Kind(kind), k, float(p))
    for j in range(k):
        exact = sum(prob for w, prob in dist if w[j])
        assert abs(m[j] - float(exact)) < 1e-12
        for q in range(j + 1, k):
            exact = sum(prob for w, prob in dist if w[j] and w[q])
            assert abs(jp[j, q] - float(exact)) < 1e-12


def test_every_draw_is_feasible():
    comps = [path(1), path(2), path(7), cycle(4), cycle(10)]
    for p in (0.2, 0.5, 1.0):
        batches = sample_batches(comps, DesignParams(p, seed=5), 2000)
        for comp, w in zip(comps, batches):
            assert not (w[:, 1:] & w[:, :-1]).any()
            if comp.is_cycle:
                closes = (w[:, 0] == 0) & (w[:, -2] == 0)
                assert (w[:, -1] == closes).all()


def test_batch_row_zero_is_the_single_draw():
    comps = [path(5), cycle(6)]
    params = DesignParams(0.4, seed=11)
    single = ap_randomize(comps, params).w
    batch = sample_batches(comps, params, 100)
    assert single == tuple(tuple(int(x) for x in b[0]) for b in batch)


def test_thread_count_does_not_change_realization():
    comps = [path(k) for k in range(1, 30)]
    params = DesignParams(0.5, seed=2024)
    assert ap_randomize(comps, params, threads=1).w == ap_randomize(comps, params, threads=8).w


def test_p_map_overrides():
    comps = [path(4), path(4)]
    params = DesignParams(0.5, seed=0, p_map={1: 1.0})
    assert params.p_for(0) == 0.5 and params.p_for(1) == 1.0
    batch = sample_batches(comps, params, 500)
    assert set(map(tuple, batch[1])) <= {(1, 0, 1, 0), (0, 1, 0, 1)}


def test_components_are_independent():
    comps = [path(3), path(3)]
    R = 20000
    a, b = sample_batches(comps, DesignParams(0.5, seed=9), R)
    r = np.corrcoef(a[:, 0], b[:, 0])[0, 1]
    assert abs(r) < 4 / np.sqrt(R)


def test_naive_is_seeded():
    p = DesignParams(0.5, seed=77)
    assert (naive_randomize(p, 50) == naive_randomize(p, 50)).all()
    assert isinstance(naive_randomize(p), bool)


def test_check_assignment():
    comps = [path(3), cycle(4)]
    check_assignment(comps, [(1, 0, 1), (0, 1, 0, 1)])
    with pytest.raises(ShapeMismatch):
        check_assignment(comps, [(1, 0, 1)])
    with pytest.raises(ShapeMismatch):
        check_assignment(comps, [(1, 0), (0, 1, 0, 1)])
    with pytest.raises(InfeasibleAssignment):
        check_assignment(comps, [(1, 1, 0), (0, 1, 0, 1)])
    with pytest.raises(InfeasibleAssignment):
        check_assignment(comps, [(1, 0, 1), (0, 1, 0, 0)])
