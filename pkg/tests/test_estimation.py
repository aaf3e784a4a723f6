import math

import pytest
from hypothesis import given, settings, strategies as st

from apdesign.decomposition import AlternatingComponent, Kind
from apdesign.design import AssignmentRealization, DesignParams
from apdesign.errors import InvalidAlpha, InvalidK, MissingOutcome
from apdesign.estimation import (
    asymptotic_variance_per_edge,
    confidence_interval,
    estimate,
    gamma_hat,
    gamma_true,
    ht_estimate,
    naive_estimate,
    naive_variance,
    sigma2_component_hat,
    variance_bound,
    variance_bound_estimate,
    variance_exact,
    worst_case_variance,
)
from apdesign.matching import OutcomeTable
from apdesign.simulation import enumerate_oracle
from test_design import cycle, path

P_GRID = [0.1, 0.25, math.sqrt(2) - 1, 0.5, 0.75, 0.9]


def test_ht_example():
    assert gamma_hat(path(3), [1, 0, 1], [1, 1, 1], 0.5) == pytest.approx(6)


def test_empty_estimate():
    a = AssignmentRealization((), DesignParams(0.5))
    r = estimate([], a, {}, n=5)
    assert r.tau_hat == 0 and r.ci == (0.0, 0.0)


def test_labels_not_parity_drive_signs():
    c = AlternatingComponent(Kind.PATH, [1, 2, 3], ["C", "T"])
    assert gamma_hat(c, [1, 0], [1, 1], 0.5) == pytest.approx(-3)
    assert gamma_true(c, [2, 5]) == 3


def test_missing_outcome_only_for_selected_edges():
    comps = [path(2)]
    a = AssignmentRealization(((1, 0),), DesignParams(0.5))
    table = OutcomeTable({(1, 2): 1.0})
    ht_estimate(comps, a, table, n=1)
    with pytest.raises(MissingOutcome):
        ht_estimate(comps, AssignmentRealization(((0, 1),), DesignParams(0.5)), table, n=1)


def test_variance_examples():
    assert variance_exact(path(3), [1, 1, 1], 0.5) == pytest.approx(11)
    assert variance_exact(path(1), [3.0], 0.4) == pytest.approx(9 / 0.4)
    assert worst_case_variance("path", 3, 0.5) == pytest.approx(11)
    assert worst_case_variance("path", 2, 1.0) == 4
    assert worst_case_variance("path", 2, 1 - 1e-9) == pytest.approx(4, abs=1e-6)


def test_cycle_variance_matches_oracle():
    dist = enumerate_oracle(cycle(4), 0.5)
    vals = [gamma_hat(cycle(4), w, [1] * 4, 0.5) for w, _ in dist]
    mean = sum(prob * v for (_, prob), v in zip(dist, vals))
    var = sum(prob * (v - mean) ** 2 for (_, prob), v in zip(dist, vals))
    assert abs(var - variance_exact(cycle(4), [1] * 4, 0.5)) < 1e-12


def test_asymptotic_value():
    p = math.sqrt(2) - 1
    assert asymptotic_variance_per_edge(p) == pytest.approx(3 + 2 * math.sqrt(2))


@pytest.mark.parametrize("kind,k", [("path", 0), ("cycle", 2), ("cycle", 5)])
def test_invalid_k(kind, k):
    with pytest.raises(InvalidK):
        worst_case_variance(kind, k, 0.5)


def test_worst_case_is_continuous_near_one():
    for kind, k in [("path", 5), ("cycle", 6), ("path", 50)]:
        # the closed form and the near-one series meet at 1 - p = 1e-3
        below = worst_case_variance(kind, k, 1 - 1.000001e-3)
        above = worst_case_variance(kind, k, 1 - 0.999999e-3)
        assert abs(below - above) < 1e-5 * below
        assert abs(worst_case_variance(kind, k, 1 - 1e-12) - k * k) < 1e-6 * k * k


def test_variance_bound_examples():
    assert variance_bound(path(1), [2.0], 0.5) == pytest.approx(3 * 4)
    assert variance_bound(path(3), [1, 1, 1], 0.5) == pytest.approx(11)
    assert sigma2_component_hat(path(5), [1, 0, 1, 0, 1], [0] * 5, 0.5) == 0


def test_interval():
    assert confidence_interval(1.5, 0.0) == (1.5, 1.5)
    lo, hi = confidence_interval(0.0, 1.0, 0.95)
    assert lo == pytest.approx(-1.959964, abs=1e-6) and hi == pytest.approx(1.959964, abs=1e-6)
    for bad in (0.0, 1.0, 1.2):
        with pytest.raises(InvalidAlpha):
            confidence_interval(0.0, 1.0, bad)


def test_naive_formulas():
    assert naive_variance(1, 1) == 4
    assert naive_variance(0, 0) == 0
    yt, yc = 0.7, 0.4
    values = [naive_estimate(True, yt, yc), naive_estimate(False, yt, yc)]
    mean = 0.5 * sum(values)
    assert mean == pytest.approx(yt - yc)
    var = 0.5 * sum((v - mean) ** 2 for v in values)
    assert abs(var - naive_variance(yt, yc)) < 1e-12


def test_report_json_fields():
    comps = [path(3), cycle(4)]
    a = AssignmentRealization(((1, 0, 1), (0, 1, 0, 1)), DesignParams(0.5))
    r = estimate(comps, a, OutcomeTable({e: 1.0 for c in comps for e in c.edges}), n=4, alpha=0.9)
    d = r.to_dict()
    assert set(d) >= {"tau_hat", "sigma2_hat", "ci_lo", "ci_hi", "alpha", "per_component"}
    assert set(d["per_component"][0]) == {"index", "k", "kind", "gamma_hat", "sigma2_i_hat"}
    sig, per = variance_bound_estimate(comps, a, {e: 1.0 for c in comps for e in c.edges}, 4)
    assert sig == pytest.approx(sum(per) / 16)


def _oracle(comp, y, p):
    dist = enumerate_oracle(comp, p)
    g = [gamma_hat(comp, w, y, p) for w, _ in dist]
    s = [sigma2_component_hat(comp, w, y, p) for w, _ in dist]
    probs = [prob for _, prob in dist]
    mean = math.fsum(pr * v for pr, v in zip(probs, g))
    var = math.fsum(pr * (v - mean) ** 2 for pr, v in zip(probs, g))
    return mean, var, math.fsum(pr * v for pr, v in zip(probs, s))


components = st.one_of(
    st.integers(1, 12).map(path),
    st.sampled_from([4, 6, 8, 10, 12]).map(cycle),
)


@settings(max_examples=150, deadline=None)
@given(components, st.sampled_from(P_GRID), st.data())
def test_oracle_identities(comp, p, data):
    y = data.draw(st.lists(st.floats(0, 1), min_size=comp.k, max_size=comp.k))
    mean, var, esig = _oracle(comp, y, p)
    scale = 1 + sum(v * v for v in y) / p
    assert abs(mean - gamma_true(comp, y)) < 1e-12 * scale
    assert abs(var - variance_exact(comp, y, p)) < 1e-12 * scale * comp.k
    assert abs(esig - variance_bound(comp, y, p)) < 1e-12 * scale * comp.k
    assert variance_bound(comp, y, p) >= variance_exact(comp, y, p) - 1e-9
    assert variance_exact(comp, y, p) <= worst_case_variance(comp.kind, comp.k, p) + 1e-9
    ones = [1.0] * comp.k
    assert abs(variance_exact(comp, ones, p) - worst_case_variance(comp.kind, comp.k, p)) < 1e-10


def test_multi_component_additivity():
    comps = [path(2, 1), cycle(4, 10), path(3, 20)]
    y = [[0.3, 0.9], [0.1, 0.5, 0.7, 0.2], [1.0, 0.4, 0.6]]
    table = {e: v for c, vals in zip(comps, y) for e, v in zip(c.edges, vals)}
    p, n = 0.5, 3.0
    dists = [enumerate_oracle(c, p) for c in comps]
    mean = second = 0.0
    for w0, p0 in dists[0]:
        for w1, p1 in dists[1]:
            for w2, p2 in dists[2]:
                a = AssignmentRealization((w0, w1, w2), DesignParams(p))
                tau = ht_estimate(comps, a, table, n).tau_hat
                mean += p0 * p1 * p2 * tau
                second += p0 * p1 * p2 * tau * tau
    expected = sum(variance_exact(c, v, p) for c, v in zip(comps, y)) / n**2
    assert abs(second - mean**2 - expected) < 1e-12


def test_positional_outcomes_rejected_for_wrong_length():
    with pytest.raises(ValueError):
        gamma_hat(path(3), [1, 0, 1], [1, 1], 0.5)
