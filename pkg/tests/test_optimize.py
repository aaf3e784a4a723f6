import math

import pytest
from scipy import optimize as sciopt

from apdesign.errors import InvalidK
from apdesign.estimation import asymptotic_variance_per_edge, worst_case_variance
from apdesign.optimize import asymptotic_p, golden_section, optimize_p, table


def test_short_path_rows():
    r = optimize_p("path", 2)
    assert (r.p_star, r.value_per_edge) == (1.0, 2.0)
    r = optimize_p("path", 1)
    assert r.p_star == 1.0 and r.value_per_edge == 0.0


def test_path_five_and_cycle_six():
    r = optimize_p("path", 5)
    assert r.p_star == pytest.approx(0.61552, abs=1e-4)
    assert r.value_per_edge == pytest.approx(4.35964, abs=1e-4)
    r = optimize_p("cycle", 6)
    assert r.p_star == pytest.approx(0.46505, abs=1e-4)
    assert r.value_per_edge == pytest.approx(5.13646, abs=1e-4)


def test_asymptotic_point():
    assert asymptotic_p() == math.sqrt(2) - 1
    assert asymptotic_variance_per_edge(asymptotic_p()) == pytest.approx(3 + 2 * math.sqrt(2), abs=1e-12)
    res = sciopt.minimize_scalar(asymptotic_variance_per_edge, bounds=(1e-6, 1 - 1e-6), method="bounded",
                                 options={"xatol": 1e-12})
    assert res.x == pytest.approx(asymptotic_p(), abs=1e-9)
    assert abs(optimize_p("path", 1000).p_star - asymptotic_p()) < 5e-4


def test_golden_section_on_parabola():
    assert golden_section(lambda x: (x - 0.3) ** 2, 0.0, 1.0, 1e-9) == pytest.approx(0.3, abs=1e-8)


def test_monotone_and_locally_optimal():
    rows = {(r.kind.value, r.k): r for r in table()}
    ps = [rows[("path", k)].p_star for k in (5, 6, 10, 50, 100, 1000)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    for (kind, k), r in rows.items():
        best = r.value_per_edge * k
        for q in (r.p_star - 1e-3, r.p_star + 1e-3):
            if 0 < q <= 1:
                assert worst_case_variance(kind, k, q) >= best - 1e-12


def test_optimizer_agrees_with_scipy_interior():
    for kind, k in [("path", 7), ("cycle", 8), ("path", 200)]:
        ref = sciopt.minimize_scalar(lambda p: worst_case_variance(kind, k, p), bounds=(1e-4, 0.999),
                                     method="bounded", options={"xatol": 1e-10})
        assert optimize_p(kind, k).p_star == pytest.approx(ref.x, abs=1e-5)


def test_invalid_length():
    with pytest.raises(InvalidK):
        optimize_p("cycle", 3)


def test_four_edge_path_has_interior_optimum():
    # exact rational check, independent of the closed forms: at p = 3/4 the
    # all-ones variance of a four-edge path is below the p = 1 value of 16
    from fractions import Fraction

    from oracles import brute_force_distribution, exact_moments

    p = Fraction(3, 4)
    dist = brute_force_distribution("path", 4, p)
    marg = [sum(pr for w, pr in dist.items() if w[j]) for j in range(4)]
    signs = (1, -1, 1, -1)
    _, var = exact_moments(dist, lambda w: sum(s * x / m for s, x, m in zip(signs, w, marg)))
    assert var == Fraction(371, 24)
    assert var < 16
    assert optimize_p("path", 4).p_star < 1
