"""Alternating path randomized design and the naive coin-flip baseline.

Random streams are numpy ``PCG64`` generators seeded from
``SeedSequence(seed, spawn_key=(stream_tag, index))``. Component ``i`` of an
AP draw always reads the stream ``(AP_STREAM, i)``, so a realization does not
depend on the order or the thread that samples it. A batch of ``R`` draws
reads ``R * k`` uniforms from the same stream, row ``r`` being draw ``r``;
row 0 is exactly the single draw.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .decomposition import AlternatingComponent, Kind
from .errors import IndexOutOfRange, InfeasibleAssignment, InvalidP, ShapeMismatch

AP_STREAM = 0
NAIVE_STREAM = 1
INSTANCE_STREAM = 2
OUTCOME_STREAM = 3

SEED_MAX = 2**64 - 1


def check_p(p: float) -> float:
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise InvalidP(f"p must lie in (0, 1], got {p}")
    return p


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    if not 0 <= int(seed) <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(tag, index))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class DesignParams:
    p: float
    seed: int = 0
    p_map: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "p", check_p(self.p))
        object.__setattr__(
            self, "p_map", {int(i): check_p(v) for i, v in dict(self.p_map).items()}
        )

    def p_for(self, index: int) -> float:
        return self.p_map.get(index, self.p)


class Design(str, Enum):
    AP = "AP"
    NAIVE = "Naive"


@dataclass(frozen=True)
class AssignmentRealization:
    w: tuple[tuple[int, ...], ...]
    params: DesignParams
    design: Design = Design.AP


def _single_edge_sure(kind: Kind, k: int, p: float) -> bool:
    # A lone edge has no interference; at p = 1 it is always realized.
    return kind is Kind.PATH and k == 1 and p == 1.0


def unconditional_prob(component: AlternatingComponent, j: int, p: float) -> float:
    """P(W_j = 1) for the 1-based edge index ``j``."""
    return marginal_probs(component.kind, component.k, p)[_check_index(component.k, j) - 1]


def marginal_probs(kind: Kind, k: int, p: float) -> np.ndarray:
    p = check_p(p)
    if _single_edge_sure(kind, k, p):
        return np.ones(1)
    probs = np.full(k, p / (1.0 + p))
    if kind is Kind.CYCLE:
        probs[-1] = (1.0 - (-p) ** (k - 1)) / (1.0 + p) ** 2
    return probs


def joint_prob(component: AlternatingComponent, j: int, q: int, p: float) -> float:
    """P(W_j = 1, W_q = 1) for 1-based indices ``j < q``."""
    k = component.k
    _check_index(k, j)
    _check_index(k, q)
    if not j < q:
        raise IndexOutOfRange(f"need j < q, got j={j}, q={q}")
    p = check_p(p)
    if component.kind is Kind.CYCLE and q == k:
        return p * (1 - (-p) ** (j - 1)) * (1 - (-p) ** (k - 1 - j)) / (1 + p) ** 3
    return (p * p - (-p) ** (q - j + 1)) / (p + 1) ** 2


def joint_probs(kind: Kind, k: int, p: float) -> np.ndarray:
    """Matrix of pairwise selection probabilities; the diagonal holds the marginals."""
    p = check_p(p)
    idx = np.arange(1, k + 1)
    gap = idx[None, :] - idx[:, None]
    with np.errstate(invalid="ignore"):
        out = (p * p - (-p) ** (np.abs(gap) + 1)) / (p + 1) ** 2
    if kind is Kind.CYCLE:
        j = idx[:-1]
        last = p * (1 - (-p) ** (j - 1)) * (1 - (-p) ** (k - 1 - j)) / (1 + p) ** 3
        out[:-1, -1] = last
        out[-1, :-1] = last
    np.fill_diagonal(out, marginal_probs(kind, k, p))
    return out


def _check_index(k: int, j: int) -> int:
    if not 1 <= j <= k:
        raise IndexOutOfRange(f"edge index {j} outside 1..{k}")
    return j


def sample_from_uniforms(kind: Kind, p: float, u: np.ndarray) -> np.ndarray:
    """Apply the sequential selection rule to uniforms of shape (draws, k)."""
    draws, k = u.shape
    w = np.zeros((draws, k), dtype=np.uint8)
    if _single_edge_sure(kind, k, p):
        w[:, 0] = 1
        return w
    w[:, 0] = u[:, 0] < p / (1.0 + p)
    stop = k - 1 if kind is Kind.CYCLE else k
    for j in range(1, stop):
        w[:, j] = (w[:, j - 1] == 0) & (u[:, j] < p)
    if kind is Kind.CYCLE:
        w[:, k - 1] = (w[:, 0] == 0) & (w[:, k - 2] == 0)
    return w


def sample_component(
    component: AlternatingComponent, p: float, rng: np.random.Generator, size: int = 1
) -> np.ndarray:
    """``size`` independent selection vectors for one component, shape (size, k)."""
    p = check_p(p)
    u = rng.random((size, component.k))
    return sample_from_uniforms(component.kind, p, u)


def sample_batches(
    components: Sequence[AlternatingComponent],
    params: DesignParams,
    size: int,
    threads: int = 1,
) -> list[np.ndarray]:
    """Per-component (size, k) selection matrices, each from its own stream."""

    def one(i):
        comp = components[i]
        return sample_component(comp, params.p_for(i), stream(params.seed, AP_STREAM, i), size)

    if threads > 1 and len(components) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(len(components))))
    return [one(i) for i in range(len(components))]


def ap_randomize(
    components: Sequence[AlternatingComponent], params: DesignParams, threads: int = 1
) -> AssignmentRealization:
    batches = sample_batches(components, params, 1, threads)
    w = tuple(tuple(int(x) for x in b[0]) for b in batches)
    return AssignmentRealization(w, params, Design.AP)


def naive_randomize(params: DesignParams, size: int | None = None):
    """True means the treatment plan is run. ``size`` gives an array of flips."""
    rng = stream(params.seed, NAIVE_STREAM)
    if size is None:
        return bool(rng.random() < 0.5)
    return rng.random(size) < 0.5


def check_assignment(components: Sequence[AlternatingComponent], w: Sequence[Sequence[int]]) -> None:
    """Raise if ``w`` does not align with ``components`` or breaks the feasibility rules."""
    if len(w) != len(components):
        raise ShapeMismatch(f"{len(w)} selection vectors for {len(components)} components")
    for i, (comp, wi) in enumerate(zip(components, w)):
        if len(wi) != comp.k:
            raise ShapeMismatch(f"component {i} has {comp.k} edges but {len(wi)} indicators")
        if any(x not in (0, 1) for x in wi):
            raise InfeasibleAssignment(f"component {i} has non-binary indicators")
        if any(a and b for a, b in zip(wi, wi[1:])):
            raise InfeasibleAssignment(f"component {i} selects two adjacent edges")
        if comp.kind is Kind.CYCLE:
            closes = int(wi[0] == 0 and wi[-2] == 0)
            if wi[-1] != closes:
                raise InfeasibleAssignment(f"component {i} breaks the cycle closing rule")
