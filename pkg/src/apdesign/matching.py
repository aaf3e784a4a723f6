"""Matchings, outcome tables and the disagreement set between two plans."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import (
    CapacityExceeded,
    DemandReused,
    DuplicatePartner,
    MissingOutcome,
    ModeMismatch,
    PopulationMismatch,
    UnknownAgent,
)

Edge = tuple[int, int]


class Mode(str, Enum):
    ONE_TO_ONE = "one-to-one"
    MANY_TO_ONE = "many-to-one"


def canonical_edge(a: int, b: int, mode: Mode = Mode.ONE_TO_ONE) -> Edge:
    """One-to-one pairs are stored low id first; many-to-one as (supplier, demand)."""
    a, b = int(a), int(b)
    if a <= 0 or b <= 0:
        raise ValueError(f"agent ids must be positive, got ({a}, {b})")
    if mode is Mode.ONE_TO_ONE:
        if a == b:
            raise ValueError(f"agent {a} cannot be matched with itself")
        return (a, b) if a < b else (b, a)
    return (a, b)


@dataclass(frozen=True)
class Matching:
    """A set of match pairs.

    ``population`` holds the agents (one-to-one) or the suppliers
    (many-to-one); ``demands`` is only used in many-to-one mode. Either may
    be left as None, in which case membership is not checked.
    """

    mode: Mode
    edges: frozenset[Edge]
    capacity: int | None = None
    population: frozenset[int] | None = None
    demands: frozenset[int] | None = None

    @classmethod
    def one_to_one(cls, edges: Iterable[Edge], agents: Iterable[int] | None = None) -> "Matching":
        return cls(
            Mode.ONE_TO_ONE,
            frozenset(canonical_edge(a, b) for a, b in edges),
            None,
            None if agents is None else frozenset(agents),
        )

    @classmethod
    def many_to_one(
        cls,
        edges: Iterable[Edge],
        capacity: int,
        suppliers: Iterable[int] | None = None,
        demands: Iterable[int] | None = None,
    ) -> "Matching":
        if capacity < 1:
            raise ValueError(f"capacity must be a positive integer, got {capacity}")
        return cls(
            Mode.MANY_TO_ONE,
            frozenset(canonical_edge(s, d, Mode.MANY_TO_ONE) for s, d in edges),
            int(capacity),
            None if suppliers is None else frozenset(suppliers),
            None if demands is None else frozenset(demands),
        )

    def __len__(self) -> int:
        return len(self.edges)


def validate_matching(m: Matching) -> None:
    """Raise a FeasibilityError subclass if ``m`` is not a feasible matching."""
    if m.mode is Mode.ONE_TO_ONE:
        counts = Counter(v for e in m.edges for v in e)
        for agent in sorted(counts):
            if counts[agent] > 1:
                raise DuplicatePartner(agent)
        if m.population is not None:
            for agent in sorted(counts):
                if agent not in m.population:
                    raise UnknownAgent(agent)
        return

    if m.capacity is None:
        raise ValueError("many-to-one matching needs a capacity")
    supplier_load = Counter(s for s, _ in m.edges)
    demand_load = Counter(d for _, d in m.edges)
    for s in sorted(supplier_load):
        if supplier_load[s] > m.capacity:
            raise CapacityExceeded(s, supplier_load[s], m.capacity)
    for d in sorted(demand_load):
        if demand_load[d] > 1:
            raise DemandReused(d)
    if m.population is not None:
        for s in sorted(supplier_load):
            if s not in m.population:
                raise UnknownAgent(s)
    if m.demands is not None:
        for d in sorted(demand_load):
            if d not in m.demands:
                raise UnknownAgent(d)


@dataclass(frozen=True)
class DisagreementSet:
    """Pairs that appear in exactly one of the two plans, split by plan."""

    t_edges: frozenset[Edge]
    c_edges: frozenset[Edge]
    mode: Mode = Mode.ONE_TO_ONE

    def __post_init__(self):
        both = self.t_edges & self.c_edges
        if both:
            raise ValueError(f"edges {sorted(both)} are labelled both t and c")

    def __len__(self) -> int:
        return len(self.t_edges) + len(self.c_edges)

    def swapped(self) -> "DisagreementSet":
        return DisagreementSet(self.c_edges, self.t_edges, self.mode)


def build_disagreement(mt: Matching, mc: Matching) -> DisagreementSet:
    if mt.mode is not mc.mode:
        raise ModeMismatch(f"treatment is {mt.mode.value}, control is {mc.mode.value}")
    if mt.capacity != mc.capacity:
        raise ModeMismatch(f"capacities differ: {mt.capacity} vs {mc.capacity}")
    for name in ("population", "demands"):
        a, b = getattr(mt, name), getattr(mc, name)
        if a is not None and b is not None and a != b:
            raise PopulationMismatch(f"treatment and control {name} differ")
    validate_matching(mt)
    validate_matching(mc)
    return DisagreementSet(mt.edges - mc.edges, mc.edges - mt.edges, mt.mode)


@dataclass(frozen=True)
class OutcomeTable:
    """Potential outcomes keyed by canonical edge, optionally bounded by ``bound``."""

    entries: Mapping[Edge, float] = field(default_factory=dict)
    bound: float | None = None

    def __post_init__(self):
        if self.bound is not None:
            if self.bound <= 0:
                raise ValueError("outcome bound must be positive")
            for e, y in self.entries.items():
                if not 0.0 <= y <= self.bound:
                    raise ValueError(f"outcome {y} for edge {e} is outside [0, {self.bound}]")

    def __getitem__(self, edge: Edge) -> float:
        try:
            return self.entries[edge]
        except KeyError:
            raise MissingOutcome(edge) from None

    def __contains__(self, edge) -> bool:
        return edge in self.entries

    def get(self, edge: Edge, default=None):
        return self.entries.get(edge, default)


def estimand_normalizer(m: Matching, by: str = "capacity") -> int:
    """Default many-to-one divisor: C0 times the number of suppliers, or the number of demands."""
    if m.mode is not Mode.MANY_TO_ONE:
        raise ValueError("the one-to-one divisor must be passed explicitly")
    if by == "capacity":
        suppliers = m.population if m.population is not None else {s for s, _ in m.edges}
        return m.capacity * len(suppliers)
    if by == "demands":
        if m.demands is None:
            raise ValueError("normalizing by demands needs the demand population")
        return len(m.demands)
    raise ValueError(f"unknown normalizer {by!r}")


def ate_ground_truth(
    mt: Matching,
    mc: Matching,
    y: OutcomeTable | Mapping[Edge, float],
    n: int | None = None,
    normalizer: str = "capacity",
) -> float:
    """Difference of the plans' total outcomes divided by ``n``.

    Needs the full potential outcome table, so it is a simulation oracle only.
    """
    if not isinstance(y, OutcomeTable):
        y = OutcomeTable(dict(y))
    if n is None:
        if mt.mode is Mode.ONE_TO_ONE:
            raise ValueError("one-to-one estimand needs the number of pairs n")
        n = estimand_normalizer(mt, normalizer)
    if n <= 0:
        raise ValueError("normalizer must be positive")
    total_t = sum(y[e] for e in sorted(mt.edges))
    total_c = sum(y[e] for e in sorted(mc.edges))
    return (total_t - total_c) / n
