"""Independent reference implementations used only by the tests."""

from collections import defaultdict
from fractions import Fraction
from itertools import product

import numpy as np


def ford_fulkerson_value(arcs, source_caps, sink_caps):
    """Max-flow value by depth-first augmentation on a full residual graph.

    Deliberately different from the library: DFS instead of BFS, explicit
    reverse arcs, and integer capacities held in a dict of dicts.
    """
    src, snk = ("__src__",), ("__snk__",)
    cap = defaultdict(lambda: defaultdict(int))
    for a in arcs:
        cap[a.tail][a.head] += 1
    for v, c in source_caps.items():
        cap[src][v] += c
    for v, c in sink_caps.items():
        cap[v][snk] += c

    def dfs(u, seen):
        if u == snk:
            return [u]
        seen.add(u)
        for v, c in list(cap[u].items()):
            if c > 0 and v not in seen:
                rest = dfs(v, seen)
                if rest:
                    return [u] + rest
        return None

    flow = 0
    while True:
        path = dfs(src, set())
        if path is None:
            return flow
        for u, v in zip(path, path[1:]):
            cap[u][v] -= 1
            cap[v][u] += 1
        flow += 1


def brute_force_distribution(kind, k, p):
    """Realization probabilities by scoring all 2^k vectors with the conditional rules."""
    one = Fraction(1) if isinstance(p, Fraction) else 1.0
    out = {}
    for w in product((0, 1), repeat=k):
        if kind == "path" and k == 1 and p == 1:
            prob = one if w == (1,) else 0 * one
        else:
            prob = p / (one + p) if w[0] else one / (one + p)
            stop = k - 1 if kind == "cycle" else k
            for j in range(1, stop):
                if w[j - 1]:
                    prob *= 0 if w[j] else 1
                else:
                    prob *= p if w[j] else one - p
            if kind == "cycle":
                closes = int(w[0] == 0 and w[k - 2] == 0)
                prob *= 1 if w[k - 1] == closes else 0
        if prob:
            out[w] = prob
    return out


def exact_moments(dist, values):
    """Mean and variance of values[w] over a {w: prob} distribution."""
    mean = sum(prob * values(w) for w, prob in dist.items())
    second = sum(prob * values(w) ** 2 for w, prob in dist.items())
    return mean, second - mean**2


def random_component_grid(rng, n=50):
    """(kind, k) pairs: paths k <= 10 and cycles k in {4, 6, 8, 10}."""
    grid = []
    for i in range(n):
        if i % 2:
            grid.append(("cycle", int(rng.choice([4, 6, 8, 10]))))
        else:
            grid.append(("path", int(rng.integers(1, 11))))
    return grid


def rational_outcomes(rng, k, denom=97):
    return [Fraction(int(rng.integers(0, denom + 1)), denom) for _ in range(k)]


def as_floats(xs):
    return np.array([float(x) for x in xs])
