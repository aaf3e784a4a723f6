"""File formats: matching and outcome CSVs, population sidecars, JSON artifacts.

Numbers are written with Python's shortest round-trip float repr, so every
JSON artifact reads back to the same binary values.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .decomposition import AlternatingComponent, Kind, Label, demand, is_tagged, supplier
from .design import AssignmentRealization, Design, DesignParams
from .errors import (
    CapacityExceeded,
    ComponentError,
    DemandReused,
    DuplicatePartner,
    ParseError,
)
from .matching import DisagreementSet, Matching, Mode, OutcomeTable, canonical_edge

HEADERS = {
    ("a", "b"): Mode.ONE_TO_ONE,
    ("supplier", "demand"): Mode.MANY_TO_ONE,
}


def _rows(path: Path, expected_width: int):
    """Yield (line_number, stripped cells) for every data row after the header."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc})") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    reader = csv.reader(text.splitlines())
    header = None
    for line, row in enumerate(reader, start=1):
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells):
            continue
        if header is None:
            header = tuple(c.lower() for c in cells)
            yield line, header
            continue
        if len(cells) != expected_width:
            raise ParseError(f"{path}:{line}: expected {expected_width} fields, got {len(cells)}")
        yield line, cells
    if header is None:
        raise ParseError(f"{path}: missing header")


def _agent(path, line, raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ParseError(f"{path}:{line}: {raw!r} is not an integer agent id") from None
    if value < 0:
        raise ParseError(f"{path}:{line}: agent ids must be positive, got {value}")
    return value


def _at(path, line, err):
    err.args = (f"{path}:{line}: {err.args[0]}",)
    return err


def read_population(path) -> dict | None:
    """Sidecar JSON with mode, capacity and population lists, or None if absent."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: population sidecar must be a JSON object")
    return raw


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def read_matching(path, mode: Mode | str | None = None, capacity: int | None = None) -> Matching:
    """Parse a matching CSV; a sibling ``.json`` sidecar may supply population and capacity.

    A 0 in either column means the other agent is unmatched and the row is skipped.
    """
    path = Path(path)
    rows = _rows(path, 2)
    _, header = next(rows)
    if header not in HEADERS:
        raise ParseError(f"{path}:1: header must be 'a,b' or 'supplier,demand', got {','.join(header)}")
    file_mode = HEADERS[header]
    mode = Mode(mode) if mode is not None else file_mode
    if mode is not file_mode:
        raise ParseError(f"{path}:1: header {','.join(header)} does not fit mode {mode.value}")
    side = read_population(sidecar_path(path)) or {}
    if side.get("mode") not in (None, mode.value):
        raise ParseError(f"{sidecar_path(path)}: sidecar mode {side['mode']} does not fit {mode.value}")
    if capacity is None:
        capacity = side.get("capacity")
    if mode is Mode.MANY_TO_ONE and capacity is None:
        raise ParseError(f"{path}: many-to-one matchings need a capacity")

    edges = []
    counts: Counter = Counter()
    for line, (ra, rb) in rows:
        a, b = _agent(path, line, ra), _agent(path, line, rb)
        if a == 0 or b == 0:
            continue
        if mode is Mode.ONE_TO_ONE:
            if a == b:
                raise ParseError(f"{path}:{line}: agent {a} cannot be matched with itself")
            for v in (a, b):
                counts[v] += 1
                if counts[v] > 1:
                    raise DuplicatePartner(v, f"{path}:{line}: agent {v} is matched more than once")
        else:
            counts[("s", a)] += 1
            counts[("d", b)] += 1
            if counts[("d", b)] > 1:
                raise _at(path, line, DemandReused(b))
            if counts[("s", a)] > capacity:
                raise _at(path, line, CapacityExceeded(a, counts[("s", a)], capacity))
        edges.append((a, b))

    if mode is Mode.ONE_TO_ONE:
        return Matching.one_to_one(edges, side.get("population"))
    return Matching.many_to_one(edges, int(capacity), side.get("suppliers"), side.get("demands"))


def write_matching(path, m: Matching) -> None:
    header = ["a", "b"] if m.mode is Mode.ONE_TO_ONE else ["supplier", "demand"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(sorted(m.edges))


def read_outcomes(path, mode: Mode | str = Mode.ONE_TO_ONE, bound: float | None = None) -> OutcomeTable:
    path = Path(path)
    mode = Mode(mode)
    rows = _rows(path, 3)
    _, header = next(rows)
    if header not in (("a", "b", "y"), ("supplier", "demand", "y")):
        raise ParseError(f"{path}:1: outcome header must be 'a,b,y', got {','.join(header)}")
    entries = {}
    for line, (ra, rb, ry) in rows:
        a, b = _agent(path, line, ra), _agent(path, line, rb)
        try:
            y = float(ry)
        except ValueError:
            raise ParseError(f"{path}:{line}: {ry!r} is not a number") from None
        if not math.isfinite(y):
            raise ParseError(f"{path}:{line}: outcome must be finite")
        e = canonical_edge(a, b, mode)
        if e in entries:
            raise ParseError(f"{path}:{line}: duplicate outcome for pair {e}")
        entries[e] = y
    try:
        return OutcomeTable(entries, bound)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_outcomes(path, y) -> None:
    entries = y.entries if isinstance(y, OutcomeTable) else y
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "y"])
        for (a, b), v in sorted(entries.items()):
            w.writerow([a, b, repr(float(v))])


# -- JSON ----------------------------------------------------------------------


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def load_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None


def _vertex_out(v):
    return f"{v[0]}{v[1]}" if is_tagged(v) else v


def _vertex_in(raw, where):
    if isinstance(raw, bool):
        raise ParseError(f"{where}: bad vertex {raw!r}")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, str) and len(raw) > 1 and raw[0] in "sd" and raw[1:].isdigit():
        return supplier(raw[1:]) if raw[0] == "s" else demand(raw[1:])
    raise ParseError(f"{where}: bad vertex {raw!r}")


def component_to_dict(c: AlternatingComponent) -> dict:
    return {
        "kind": c.kind.value,
        "vertices": [_vertex_out(v) for v in c.vertices],
        "labels": [x.value for x in c.labels],
    }


@dataclass
class ComponentsFile:
    components: list[AlternatingComponent]
    mode: Mode = Mode.ONE_TO_ONE
    capacity: int | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "capacity": self.capacity,
            "components": [component_to_dict(c) for c in self.components],
        }


def write_components(path, comps: Sequence[AlternatingComponent], mode: Mode, capacity=None) -> None:
    write_json(path, ComponentsFile(list(comps), Mode(mode), capacity).to_dict())


def read_components(path) -> ComponentsFile:
    """Accepts the full object form or a bare array of components."""
    raw = load_json(path)
    if isinstance(raw, list):
        raw = {"components": raw}
    if not isinstance(raw, dict) or not isinstance(raw.get("components"), list):
        raise ParseError(f"{path}: expected an object with a 'components' array")
    comps = []
    for i, item in enumerate(raw["components"]):
        where = f"{path}: component {i}"
        try:
            verts = [_vertex_in(v, where) for v in item["vertices"]]
            comps.append(AlternatingComponent(Kind(item["kind"]), verts, [Label(x) for x in item["labels"]]))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{where}: missing or malformed field {exc}") from None
        except ComponentError as exc:
            raise ParseError(f"{where}: {exc}") from None
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from None
    tagged = any(is_tagged(v) for c in comps for v in c.vertices)
    mode = Mode(raw.get("mode") or (Mode.MANY_TO_ONE if tagged else Mode.ONE_TO_ONE))
    return ComponentsFile(comps, mode, raw.get("capacity"))


def assignment_to_dict(a: AssignmentRealization) -> dict:
    out = {"design": a.design.value, "seed": a.params.seed, "p": a.params.p}
    if a.params.p_map:
        out["p_map"] = {str(i): v for i, v in sorted(a.params.p_map.items())}
    out["w"] = [list(row) for row in a.w]
    return out


def write_assignment(path, a: AssignmentRealization) -> None:
    write_json(path, assignment_to_dict(a))


def read_assignment(path) -> AssignmentRealization:
    raw = load_json(path)
    try:
        params = DesignParams(
            float(raw["p"]),
            raw.get("seed") or 0,
            {int(k): float(v) for k, v in (raw.get("p_map") or {}).items()},
        )
        w = tuple(tuple(int(x) for x in row) for row in raw["w"])
        design = Design(raw.get("design", "AP"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed assignment ({exc})") from None
    return AssignmentRealization(w, params, design)


def read_p_map(path) -> dict[int, float]:
    """Per-component p overrides: a JSON object mapping component index to p."""
    raw = load_json(path)
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: p-map must be a JSON object")
    try:
        return {int(k): float(v) for k, v in raw.items()}
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def disagreement_to_dict(d: DisagreementSet, capacity=None) -> dict:
    return {
        "mode": d.mode.value,
        "capacity": capacity,
        "t_edges": [list(e) for e in sorted(d.t_edges)],
        "c_edges": [list(e) for e in sorted(d.c_edges)],
    }


def read_disagreement(path) -> tuple[DisagreementSet, int | None]:
    raw = load_json(path)
    try:
        mode = Mode(raw.get("mode", Mode.MANY_TO_ONE.value))
        t = frozenset(canonical_edge(int(a), int(b), mode) for a, b in raw["t_edges"])
        c = frozenset(canonical_edge(int(a), int(b), mode) for a, b in raw["c_edges"])
        return DisagreementSet(t, c, mode), raw.get("capacity")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed disagreement set ({exc})") from None
