"""Feasible alternating decompositions for many-to-one disagreement sets.

The disagreement set is encoded as a directed multigraph on suppliers (plus
demands that appear in only one plan). Simple paths from surplus to deficit
vertices are extracted with breadth-first augmenting paths on a unit
capacity network; the balanced remainder is split into simple cycles along
closed walks. Mapping every path and cycle back to matching edges gives
alternating components that a capacity-respecting AP draw can use.
"""

from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decomposition import AlternatingComponent, Kind, Label, demand, supplier
from .errors import DegreeViolation, UnbalancedVertex
from .matching import DisagreementSet, Mode


@dataclass(frozen=True, order=True)
class Arc:
    """Directed arc labelled by the demand it carries.

    supplier -> supplier: the demand moves from its t-supplier (tail) to its
    c-supplier (head). supplier -> demand: a t-only demand. demand ->
    supplier: a c-only demand. Each demand yields at most one arc, so the
    label identifies the arc.
    """

    tail: tuple
    head: tuple
    label: int

    def expansion(self) -> tuple[list[tuple], list[Label]]:
        """Vertices after the tail and the labels of the matching edges they close."""
        if self.tail[0] == "s" and self.head[0] == "s":
            return [demand(self.label), self.head], [Label.T, Label.C]
        if self.tail[0] == "s":
            return [self.head], [Label.T]
        return [self.head], [Label.C]


@dataclass(frozen=True)
class AuxDigraph:
    vertices: tuple
    arcs: tuple[Arc, ...]

    def out_degree(self) -> Counter:
        return Counter(a.tail for a in self.arcs)

    def in_degree(self) -> Counter:
        return Counter(a.head for a in self.arcs)

    def imbalance(self) -> dict:
        out, inn = self.out_degree(), self.in_degree()
        return {v: out[v] - inn[v] for v in self.vertices}


def _digraph(arcs) -> AuxDigraph:
    arcs = tuple(sorted(arcs))
    verts = sorted({a.tail for a in arcs} | {a.head for a in arcs})
    return AuxDigraph(tuple(verts), arcs)


def build_aux_digraph(d: DisagreementSet) -> AuxDigraph:
    if d.mode is not Mode.MANY_TO_ONE:
        raise ValueError("auxiliary digraph is defined for many-to-one disagreement sets")
    t_sup: dict[int, int] = {}
    c_sup: dict[int, int] = {}
    for edges, owner, name in ((d.t_edges, t_sup, "t"), (d.c_edges, c_sup, "c")):
        for s, j in sorted(edges):
            if j in owner:
                raise DegreeViolation(demand(j), f"demand {j} has two {name}-matches")
            owner[j] = s
    arcs = []
    for j in sorted(set(t_sup) | set(c_sup)):
        if j in t_sup and j in c_sup:
            arcs.append(Arc(supplier(t_sup[j]), supplier(c_sup[j]), j))
        elif j in t_sup:
            arcs.append(Arc(supplier(t_sup[j]), demand(j), j))
        else:
            arcs.append(Arc(demand(j), supplier(c_sup[j]), j))
    return _digraph(arcs)


@dataclass(frozen=True)
class FlowNetwork:
    graph: AuxDigraph
    source_caps: dict
    sink_caps: dict

    @property
    def c_prime(self) -> int:
        return sum(self.source_caps.values())


def build_flow_network(g: AuxDigraph) -> FlowNetwork:
    b = g.imbalance()
    return FlowNetwork(
        g,
        {v: x for v, x in sorted(b.items()) if x > 0},
        {v: -x for v, x in sorted(b.items()) if x < 0},
    )


def _bfs_residual(adj, used, source_res, sink_res):
    """Shortest augmenting path as a list of arc indices, or None."""
    parent = {}
    queue = deque()
    for v in sorted(source_res):
        if source_res[v] > 0:
            parent[v] = None
            queue.append(v)
    while queue:
        u = queue.popleft()
        if sink_res.get(u, 0) > 0:
            path = []
            while parent[u] is not None:
                prev, idx = parent[u]
                path.append(idx)
                u = prev
            return u, path[::-1]
        for idx, head in adj[u]:
            if not used[idx] and head not in parent:
                parent[head] = (u, idx)
                queue.append(head)
    return None


def edmonds_karp(net: FlowNetwork) -> list[list[Arc]]:
    """Augmenting paths of the unit network, each stripped of the terminal arcs.

    Residual capacities are only decreased along found paths, so every path
    uses original arcs forward and the paths are edge-disjoint.
    """
    arcs = net.graph.arcs
    adj = defaultdict(list)
    for idx, a in enumerate(arcs):
        adj[a.tail].append((idx, a.head))
    for v in adj:
        adj[v].sort(key=lambda item: (item[1], arcs[item[0]].label))
    used = [False] * len(arcs)
    source_res = dict(net.source_caps)
    sink_res = dict(net.sink_caps)
    paths = []
    while True:
        found = _bfs_residual(adj, used, source_res, sink_res)
        if found is None:
            break
        start, idxs = found
        end = arcs[idxs[-1]].head
        for i in idxs:
            used[i] = True
        source_res[start] -= 1
        sink_res[end] -= 1
        paths.append([arcs[i] for i in idxs])
    return paths


def remaining_graph(g: AuxDigraph, paths: Sequence[Sequence[Arc]]) -> AuxDigraph:
    taken = {a for path in paths for a in path}
    return _digraph(a for a in g.arcs if a not in taken)


def eulerian_cycle_decomposition(g: AuxDigraph) -> list[list[Arc]]:
    """Edge-disjoint simple directed cycles covering every arc of a balanced digraph.

    Builds a closed walk from the smallest vertex with an unused arc, always
    leaving along the smallest unused label, then cuts the walk into simple
    cycles: whenever a vertex repeats, the segment since its first position
    is emitted and removed from the walk.
    """
    out, inn = g.out_degree(), g.in_degree()
    for v in g.vertices:
        if out[v] != inn[v]:
            raise UnbalancedVertex(v, out[v], inn[v])
    pending = defaultdict(deque)
    for a in sorted(g.arcs, key=lambda a: (a.tail, a.label)):
        pending[a.tail].append(a)
    cycles = []
    for v0 in g.vertices:
        while pending[v0]:
            walk_v, walk_a = [v0], []
            v = v0
            while pending[v]:
                a = pending[v].popleft()
                walk_a.append(a)
                v = a.head
                walk_v.append(v)
            stack_v, stack_a, first_pos = [], [], {}
            for i, x in enumerate(walk_v):
                if x in first_pos:
                    j = first_pos[x]
                    cycles.append(stack_a[j:])
                    for y in stack_v[j + 1 :]:
                        del first_pos[y]
                    del stack_v[j + 1 :]
                    del stack_a[j:]
                else:
                    first_pos[x] = len(stack_v)
                    stack_v.append(x)
                if i < len(walk_a):
                    stack_a.append(walk_a[i])
    return cycles


def expand(arcs: Sequence[Arc], closed: bool) -> AlternatingComponent:
    """Map a simple directed path or cycle back to its matching edges."""
    vertices = [arcs[0].tail]
    labels: list[Label] = []
    for a in arcs:
        vs, ls = a.expansion()
        vertices.extend(vs)
        labels.extend(ls)
    return AlternatingComponent(Kind.CYCLE if closed else Kind.PATH, vertices, labels)


@dataclass
class FlowDecomposition:
    graph: AuxDigraph
    network: FlowNetwork
    paths: list[list[Arc]]
    remainder: AuxDigraph
    cycles: list[list[Arc]]
    components: list[AlternatingComponent]


def decompose_many_to_one_detailed(d: DisagreementSet) -> FlowDecomposition:
    g = build_aux_digraph(d)
    net = build_flow_network(g)
    paths = edmonds_karp(net)
    rem = remaining_graph(g, paths)
    cycles = eulerian_cycle_decomposition(rem)
    comps = [expand(p, False) for p in paths] + [expand(c, True) for c in cycles]
    return FlowDecomposition(g, net, paths, rem, cycles, comps)


def decompose_many_to_one(d: DisagreementSet) -> list[AlternatingComponent]:
    return decompose_many_to_one_detailed(d).components


@dataclass
class ConditionResult:
    name: str
    passed: bool
    witnesses: list = field(default_factory=list)


@dataclass
class DecompositionReport:
    conditions: list[ConditionResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "conditions": [
                {"name": c.name, "passed": c.passed, "witnesses": c.witnesses}
                for c in self.conditions
            ],
        }


def validate_decomposition(
    d: DisagreementSet, components: Sequence[AlternatingComponent], capacity: int
) -> DecompositionReport:
    """Check a many-to-one decomposition; violations are reported, not raised."""
    covered = Counter()
    for comp in components:
        covered.update(comp.labelled_edges())
    expected = Counter([(e, Label.T) for e in d.t_edges] + [(e, Label.C) for e in d.c_edges])
    cover_bad = sorted(
        [list(e), lab.value, covered[(e, lab)]]
        for (e, lab) in set(covered) | set(expected)
        if covered[(e, lab)] != expected[(e, lab)]
    )

    supplier_uses = Counter()
    demand_uses = Counter()
    repeats = []
    alternation_bad = []
    for i, comp in enumerate(components):
        verts = comp.vertices[:-1] if comp.is_cycle else comp.vertices
        for v in set(verts):
            (supplier_uses if v[0] == "s" else demand_uses)[v[1]] += 1
        for v, n in sorted(Counter(verts).items()):
            if n > 1:
                repeats.append({"component": i, "vertex": _vertex_name(v), "count": n})
        if any(a is b for a, b in zip(comp.labels, comp.labels[1:])):
            alternation_bad.append(i)

    return DecompositionReport([
        ConditionResult("exact_cover", not cover_bad, cover_bad),
        ConditionResult(
            "supplier_capacity",
            all(n <= capacity for n in supplier_uses.values()),
            sorted(_vertex_name(supplier(s)) for s, n in supplier_uses.items() if n > capacity),
        ),
        ConditionResult(
            "demand_once",
            all(n <= 1 for n in demand_uses.values()),
            sorted(_vertex_name(demand(j)) for j, n in demand_uses.items() if n > 1),
        ),
        ConditionResult("no_repeated_vertex", not repeats, repeats),
        ConditionResult("alternation", not alternation_bad, alternation_bad),
    ])


def _vertex_name(v) -> str:
    return f"{v[0]}{v[1]}"


def capacity_violations(
    components: Sequence[AlternatingComponent],
    batches: Sequence[np.ndarray],
    capacity: int,
    fixed_edges=(),
) -> int:
    """Number of draws whose realized matching overloads a supplier or reuses a demand.

    ``batches[i]`` holds the (draws, k) selections of component ``i``;
    ``fixed_edges`` are realized in every draw (pairs shared by both plans).
    """
    if not components:
        return 0
    draws = batches[0].shape[0]
    sup_load = defaultdict(lambda: np.zeros(draws, dtype=np.int64))
    dem_load = defaultdict(lambda: np.zeros(draws, dtype=np.int64))
    for s, j in fixed_edges:
        sup_load[s] += 1
        dem_load[j] += 1
    for comp, w in zip(components, batches):
        for col, (s, j) in enumerate(comp.edges):
            sup_load[s] += w[:, col]
            dem_load[j] += w[:, col]
    bad = np.zeros(draws, dtype=bool)
    for load in sup_load.values():
        bad |= load > capacity
    for load in dem_load.values():
        bad |= load > 1
    return int(bad.sum())
