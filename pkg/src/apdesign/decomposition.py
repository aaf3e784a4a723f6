"""Alternating paths and cycles, and the one-to-one decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Sequence

from .errors import ComponentError, DegreeViolation
from .matching import DisagreementSet, Edge, Mode


class Kind(str, Enum):
    PATH = "path"
    CYCLE = "cycle"


class Label(str, Enum):
    T = "T"
    C = "C"

    @property
    def sign(self) -> int:
        return 1 if self is Label.T else -1


# One-to-one vertices are plain agent ids. Many-to-one vertices are
# ("s", supplier_id) or ("d", demand_id) so the two id spaces never collide.
Vertex = Hashable


def supplier(i: int) -> tuple[str, int]:
    return ("s", int(i))


def demand(j: int) -> tuple[str, int]:
    return ("d", int(j))


def is_tagged(v) -> bool:
    return isinstance(v, tuple) and len(v) == 2 and v[0] in ("s", "d")


def edge_between(u: Vertex, v: Vertex) -> Edge:
    """Canonical matching edge for two adjacent component vertices."""
    if is_tagged(u) and is_tagged(v):
        if {u[0], v[0]} != {"s", "d"}:
            raise ComponentError(f"{u} and {v} are not a supplier-demand pair")
        return (u[1], v[1]) if u[0] == "s" else (v[1], u[1])
    if is_tagged(u) or is_tagged(v):
        raise ComponentError(f"cannot mix vertex styles: {u}, {v}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class AlternatingComponent:
    """An ordered path or cycle whose edges alternate between the two plans.

    ``vertices`` has k + 1 entries; a cycle repeats its first vertex at the
    end. Vertex repetition inside a component is not rejected here because
    decomposition checkers need to be able to represent that violation.
    """

    kind: Kind
    vertices: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "labels", tuple(Label(x) for x in self.labels))
        k = len(self.labels)
        if k < 1:
            raise ComponentError("a component needs at least one edge")
        if len(self.vertices) != k + 1:
            raise ComponentError(f"{k} labels need {k + 1} vertices, got {len(self.vertices)}")
        for a, b in zip(self.labels, self.labels[1:]):
            if a is b:
                raise ComponentError(f"labels do not alternate: {''.join(x.value for x in self.labels)}")
        if self.kind is Kind.CYCLE:
            if self.vertices[0] != self.vertices[-1]:
                raise ComponentError("a cycle must end at its first vertex")
            if k < 4 or k % 2:
                raise ComponentError(f"alternating cycles have even length >= 4, got {k}")
        elif self.vertices[0] == self.vertices[-1]:
            raise ComponentError("a path must have distinct endpoints")
        for u, v in zip(self.vertices, self.vertices[1:]):
            edge_between(u, v)

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def is_cycle(self) -> bool:
        return self.kind is Kind.CYCLE

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(edge_between(u, v) for u, v in zip(self.vertices, self.vertices[1:]))

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple(x.sign for x in self.labels)

    def labelled_edges(self) -> list[tuple[Edge, Label]]:
        return list(zip(self.edges, self.labels))


def _partners(edges) -> dict:
    partner: dict = {}
    for a, b in sorted(edges):
        for u, v in ((a, b), (b, a)):
            if u in partner:
                raise DegreeViolation(u)
            partner[u] = v
    return partner


def decompose_one_to_one(d: DisagreementSet) -> list[AlternatingComponent]:
    """Split a one-to-one disagreement set into its alternating paths and cycles.

    Paths start at their smaller endpoint. Cycles start at their smallest
    agent and leave it along its t-edge. Components are ordered by their
    smallest agent.
    """
    if d.mode is not Mode.ONE_TO_ONE:
        raise ValueError("use decompose_many_to_one for many-to-one disagreement sets")
    t_mate = _partners(d.t_edges)
    c_mate = _partners(d.c_edges)
    mates = {Label.T: t_mate, Label.C: c_mate}
    agents = sorted(set(t_mate) | set(c_mate))
    seen: set[int] = set()
    components = []

    def walk(start, label):
        verts, labels = [start], []
        v = start
        while v in mates[label]:
            nxt = mates[label][v]
            labels.append(label)
            verts.append(nxt)
            v = nxt
            label = Label.C if label is Label.T else Label.T
            if v == start:
                break
        return verts, labels

    for a in agents:
        if a in seen:
            continue
        degree = (a in t_mate) + (a in c_mate)
        if degree == 1:
            first = Label.T if a in t_mate else Label.C
            verts, labels = walk(a, first)
            seen.update(verts)
            components.append(AlternatingComponent(Kind.PATH, verts, labels))
            continue
        # degree 2: either on a cycle or in the middle of a path
        verts, labels = walk(a, Label.T)
        if verts[-1] == a:
            seen.update(verts)
            components.append(AlternatingComponent(Kind.CYCLE, verts, labels))
            continue
        back, back_labels = walk(a, Label.C)
        verts = back[::-1] + verts[1:]
        labels = back_labels[::-1] + labels
        if verts[-1] < verts[0]:
            verts, labels = verts[::-1], labels[::-1]
        seen.update(verts)
        components.append(AlternatingComponent(Kind.PATH, verts, labels))

    components.sort(key=lambda c: min(c.vertices))
    return components


def components_partition(components: Sequence[AlternatingComponent], d: DisagreementSet) -> bool:
    """True iff every disagreement edge appears in exactly one component with its own label."""
    seen = []
    for comp in components:
        seen.extend(comp.labelled_edges())
    expected = [(e, Label.T) for e in d.t_edges] + [(e, Label.C) for e in d.c_edges]
    return sorted(seen) == sorted(expected)
