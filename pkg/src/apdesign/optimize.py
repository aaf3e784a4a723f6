"""Minimax choice of the conditional selection probability for one component."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decomposition import Kind
from .estimation import _check_k, worst_case_variance

INV_PHI = (math.sqrt(5) - 1) / 2

SCAN_POINTS = 512
SCAN_LOW = 1e-4
P_TOL = 1e-7

TABLE_GRID = {
    Kind.PATH: (2, 4, 5, 6, 10, 50, 100, 1000),
    Kind.CYCLE: (4, 6, 10, 50, 100, 1000),
}


@dataclass(frozen=True)
class OptimalDesign:
    kind: Kind
    k: int
    p_star: float
    value_per_edge: float


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = P_TOL) -> float:
    """Minimizer of a unimodal ``f`` on [a, b] to within ``tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (a + b) / 2


def optimize_p(kind: Kind | str, k: int, bound: float = 1.0) -> OptimalDesign:
    """Minimize the worst-case component variance over p in (0, 1].

    ``bound`` only rescales the objective, so the search runs at bound 1 and
    the reported per-edge value is for bound 1 as well.
    """
    kind = Kind(kind)
    _check_k(kind, k)
    if kind is Kind.PATH and k == 1:
        return OptimalDesign(kind, k, 1.0, 0.0)

    def f(p):
        return worst_case_variance(kind, k, p)

    grid = np.geomspace(SCAN_LOW, 1.0, SCAN_POINTS)
    values = np.array([f(p) for p in grid[:-1]])
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[i + 1]
    p_in = float(golden_section(f, float(lo), float(hi)))
    v_in = float(f(p_in))
    v_one = float(f(1.0))
    if v_one <= v_in:
        return OptimalDesign(kind, k, 1.0, v_one / k)
    return OptimalDesign(kind, k, p_in, v_in / k)


def asymptotic_p() -> float:
    """Limit of the optimal p for long components, the minimizer of (1+p)/(p(1-p))."""
    return math.sqrt(2) - 1


def table() -> list[OptimalDesign]:
    return [optimize_p(kind, k) for kind, ks in TABLE_GRID.items() for k in ks]
