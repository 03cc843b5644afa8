"""
Planar diagram codes with edge-labelled, oriented crossings.

A crossing carries the (in, out) edges of its under- and over-strand and the
Wirtinger exponent: out_under = over^sign · in_under · over^-sign, while the
over-strand keeps its matrix across the crossing.
"""

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Deque, Dict, Iterable, List, Mapping, Optional, Set, Tuple

import sympy

from services.errors import ParseError, PropagationError, UnassignedArcError
from services.matrices import Mat2

logger = logging.getLogger(__name__)

PD_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Crossing:
    """One crossing: (in, out) edge pairs for both strands plus the Wirtinger sign."""

    label: str
    under: Tuple[int, int]
    over: Tuple[int, int]
    sign: int

    def edges(self) -> Tuple[int, int, int, int]:
        return (self.under[0], self.under[1], self.over[0], self.over[1])

    def relabel(self, mapping: Mapping[int, int]) -> "Crossing":
        def m(e: int) -> int:
            return mapping.get(e, e)
        return Crossing(
            self.label,
            (m(self.under[0]), m(self.under[1])),
            (m(self.over[0]), m(self.over[1])),
            self.sign,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "under": list(self.under),
            "over": list(self.over),
            "sign": self.sign,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Crossing":
        try:
            under = tuple(int(e) for e in data["under"])
            over = tuple(int(e) for e in data["over"])
            sign = int(data["sign"])
            label = str(data["label"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed crossing record {data!r}: {e}")
        if len(under) != 2 or len(over) != 2 or sign not in (1, -1):
            raise ParseError(f"Malformed crossing record {data!r}")
        return cls(label, under, over, sign)


class _UnionFind:
    def __init__(self, items: Iterable[int]):
        self.parent = {item: item for item in items}

    def find(self, item: int) -> int:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def classes(self) -> List[List[int]]:
        groups: Dict[int, List[int]] = {}
        for item in self.parent:
            groups.setdefault(self.find(item), []).append(item)
        return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


@dataclass
class PDCode:
    """Oriented planar diagram; free_edges are crossingless closed loops."""

    crossings: List[Crossing]
    name: str = ""
    free_edges: List[int] = field(default_factory=list)
    designated: Dict[str, str] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    # Structure -------------------------------------------------------

    @property
    def edges(self) -> List[int]:
        found: Set[int] = set(self.free_edges)
        for crossing in self.crossings:
            found.update(crossing.edges())
        return sorted(found)

    def crossing(self, label: str) -> Crossing:
        label = self.designated.get(label, label)
        for crossing in self.crossings:
            if crossing.label == label:
                return crossing
        raise ParseError(f"No crossing labelled '{label}' in diagram '{self.name}'")

    def labels(self) -> List[str]:
        return [crossing.label for crossing in self.crossings]

    def validate(self) -> None:
        """Every edge starts at exactly one slot and ends at exactly one slot."""
        starts: Dict[int, int] = {}
        ends: Dict[int, int] = {}
        seen_labels: Set[str] = set()
        for crossing in self.crossings:
            if crossing.label in seen_labels:
                raise ParseError(f"Duplicate crossing label '{crossing.label}'")
            seen_labels.add(crossing.label)
            for edge_in, edge_out in (crossing.under, crossing.over):
                ends[edge_in] = ends.get(edge_in, 0) + 1
                starts[edge_out] = starts.get(edge_out, 0) + 1
        for edge in set(starts) | set(ends):
            if starts.get(edge, 0) != 1 or ends.get(edge, 0) != 1:
                raise ParseError(
                    f"Edge {edge} is not bounded by exactly two crossing slots",
                    {"edge": edge, "starts": starts.get(edge, 0), "ends": ends.get(edge, 0)},
                )
        for edge in self.free_edges:
            if edge in starts or edge in ends:
                raise ParseError(f"Free edge {edge} also appears at a crossing")

    def arcs(self) -> List[List[int]]:
        """Wirtinger arcs: classes of edges joined through over-passes."""
        uf = _UnionFind(self.edges)
        for crossing in self.crossings:
            uf.union(*crossing.over)
        return uf.classes()

    def arc_of(self) -> Dict[int, int]:
        return {edge: arc[0] for arc in self.arcs() for edge in arc}

    def components(self) -> List[List[int]]:
        uf = _UnionFind(self.edges)
        for crossing in self.crossings:
            uf.union(*crossing.over)
            uf.union(*crossing.under)
        return uf.classes()

    def component_count(self) -> int:
        return len(self.components())

    def component_of(self, edge: int) -> List[int]:
        for component in self.components():
            if edge in component:
                return component
        raise ParseError(f"Edge {edge} is not in diagram '{self.name}'")

    def successor(self) -> Dict[int, int]:
        """Edge following each edge along its strand orientation."""
        nxt: Dict[int, int] = {}
        for crossing in self.crossings:
            nxt[crossing.under[0]] = crossing.under[1]
            nxt[crossing.over[0]] = crossing.over[1]
        for edge in self.free_edges:
            nxt[edge] = edge
        return nxt

    def traverse(self, start: int) -> List[int]:
        """Edges of the component through start, in orientation order."""
        nxt = self.successor()
        path = [start]
        edge = nxt.get(start, start)
        while edge != start:
            path.append(edge)
            edge = nxt[edge]
        return path

    def relabel(self, mapping: Mapping[int, int]) -> "PDCode":
        return PDCode(
            crossings=[c.relabel(mapping) for c in self.crossings],
            name=self.name,
            free_edges=[mapping.get(e, e) for e in self.free_edges],
            designated=dict(self.designated),
            meta=dict(self.meta),
        )

    def reverse_component(self, edge: int) -> "PDCode":
        """
        Same diagram with the component through edge oriented backwards.

        Every strand on it swaps in and out; a crossing changes sign when
        exactly one of its strands is reversed.
        """
        component = set(self.component_of(edge))
        crossings = []
        for c in self.crossings:
            under_rev = c.under[0] in component
            over_rev = c.over[0] in component
            under = (c.under[1], c.under[0]) if under_rev else c.under
            over = (c.over[1], c.over[0]) if over_rev else c.over
            sign = -c.sign if under_rev != over_rev else c.sign
            crossings.append(Crossing(c.label, under, over, sign))
        reversed_pd = PDCode(
            crossings=crossings,
            name=f"{self.name} (reversed at {edge})",
            free_edges=list(self.free_edges),
            designated=dict(self.designated),
            meta=dict(self.meta),
        )
        reversed_pd.validate()
        return reversed_pd

    def is_alternating(self) -> bool:
        """Over- and under-passes alternate along every component."""
        passes: Dict[int, bool] = {}
        for c in self.crossings:
            passes[c.under[0]] = False
            passes[c.over[0]] = True
        for component in self.components():
            path = [e for e in self.traverse(component[0]) if e in passes]
            if any(passes[a] == passes[b] for a, b in zip(path, path[1:] + path[:1])):
                return False
        return True

    def compacted(self) -> Tuple["PDCode", Dict[int, int]]:
        """Renumber edges to 0..E-1 in sorted order."""
        mapping = {edge: index for index, edge in enumerate(self.edges)}
        return self.relabel(mapping), mapping

    # Serialization ---------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "version": PD_SCHEMA_VERSION,
            "name": self.name,
            "crossings": [c.to_dict() for c in self.crossings],
        }
        if self.free_edges:
            data["free_edges"] = list(self.free_edges)
        if self.designated:
            data["designated"] = dict(self.designated)
        if self.meta:
            data["meta"] = dict(self.meta)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PDCode":
        version = data.get("version", PD_SCHEMA_VERSION)
        if version != PD_SCHEMA_VERSION:
            raise ParseError(f"Unsupported PD schema version {version}")
        if "crossings" not in data:
            raise ParseError("PD data has no 'crossings' list")
        pd = cls(
            crossings=[Crossing.from_dict(c) for c in data["crossings"]],
            name=str(data.get("name", "")),
            free_edges=[int(e) for e in data.get("free_edges", [])],
            designated={str(k): str(v) for k, v in data.get("designated", {}).items()},
            meta=dict(data.get("meta", {})),
        )
        pd.validate()
        return pd


def load_pd(path: Path) -> PDCode:
    """Load and validate a PD JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ParseError(f"Diagram file not found: {path}")
    except json.JSONDecodeError as e:
        raise ParseError(f"Diagram file {path} is not valid JSON: {e}")
    pd = PDCode.from_dict(data)
    logger.debug(f"Loaded diagram '{pd.name}' with {len(pd.crossings)} crossings from {path}")
    return pd


# ============================================
# WIRTINGER RELATIONS
# ============================================

RepAssignment = Dict[int, Mat2]


@dataclass
class FamilyPoint:
    """One member of a representation family: its parameters, edge matrices and residual."""
    params: Tuple[complex, ...]
    assignment: RepAssignment
    residual: float


def _conjugate(over: Mat2, inner: Mat2, sign: int) -> Mat2:
    if sign == 1:
        return over @ inner @ over.inverse()
    return over.inverse() @ inner @ over


def crossing_defects(pd: PDCode, rep: Mapping[int, Mat2]) -> List[Tuple[str, Mat2, Mat2]]:
    """Per crossing: (label, under-relation defect, over-continuity defect)."""
    missing = [edge for edge in pd.edges if edge not in rep]
    if missing:
        raise UnassignedArcError(
            f"Edges {missing} have no assigned matrix",
            {"missing": missing},
        )
    defects = []
    for crossing in pd.crossings:
        over = rep[crossing.over[0]]
        predicted = _conjugate(over, rep[crossing.under[0]], crossing.sign)
        defects.append((
            crossing.label,
            rep[crossing.under[1]] - predicted,
            rep[crossing.over[1]] - over,
        ))
    return defects


def wirtinger_residual(pd: PDCode, rep: Mapping[int, Mat2]) -> float:
    """Largest entry deviation over all crossing relations; 0 for a representation."""
    worst = 0.0
    for _, under_defect, over_defect in crossing_defects(pd, rep):
        worst = max(worst, under_defect.norm(), over_defect.norm())
    return worst


def is_representation_exact(pd: PDCode, rep: Mapping[int, Mat2]) -> bool:
    """Structural check for exact (polynomial or rational) assignments."""
    zero = Mat2(0, 0, 0, 0)
    return all(
        under_defect == zero and over_defect == zero
        for _, under_defect, over_defect in crossing_defects(pd, rep)
    )


def meridian_traces(rep: Mapping[int, Mat2]) -> List[complex]:
    return [complex(m.to_complex().trace()) for _, m in sorted(rep.items())]


def propagate(
    pd: PDCode,
    seeds: Mapping[int, Mat2],
    tol: float = 1e-8,
    strict: bool = True,
) -> RepAssignment:
    """
    Extend seeded edge matrices to the whole diagram by Wirtinger relations.

    Breadth-first from the seeds. When a relation determines an edge that is
    already assigned, the deviation is checked against tol; with strict=False
    the first value is kept and deviations are left for the residual.

    Args:
        pd: Diagram
        seeds: Edge id -> matrix
        tol: Consistency tolerance (exact matrices are compared exactly)
        strict: Raise on inconsistency instead of recording it

    Returns:
        Assignment covering every edge
    """
    rep: RepAssignment = dict(seeds)
    by_edge: Dict[int, List[Crossing]] = {}
    for crossing in pd.crossings:
        for edge in crossing.edges():
            by_edge.setdefault(edge, []).append(crossing)

    def assign(edge: int, value: Mat2, crossing: Crossing) -> bool:
        if edge in rep:
            if strict:
                current = rep[edge]
                if current.is_exact() and value.is_exact():
                    consistent = current == value
                    deviation = 0.0 if consistent else float("inf")
                else:
                    deviation = current.distance(value)
                    consistent = deviation <= tol
                if not consistent:
                    raise PropagationError(
                        f"Inconsistent matrix on edge {edge} at crossing '{crossing.label}'",
                        {"edge": edge, "crossing": crossing.label, "deviation": deviation},
                    )
            return False
        rep[edge] = value
        return True

    queue: Deque[int] = deque(sorted(seeds))
    while queue:
        edge = queue.popleft()
        for crossing in by_edge.get(edge, []):
            o_in, o_out = crossing.over
            u_in, u_out = crossing.under
            if o_in in rep and assign(o_out, rep[o_in], crossing):
                queue.append(o_out)
            if o_out in rep and assign(o_in, rep[o_out], crossing):
                queue.append(o_in)
            if o_in not in rep:
                continue
            over = rep[o_in]
            if u_in in rep and assign(u_out, _conjugate(over, rep[u_in], crossing.sign), crossing):
                queue.append(u_out)
            if u_out in rep and assign(u_in, _conjugate(over, rep[u_out], -crossing.sign), crossing):
                queue.append(u_in)

    missing = [edge for edge in pd.edges if edge not in rep]
    if missing:
        raise PropagationError(
            f"Propagation stuck: {len(missing)} edges unreachable from the seeds",
            {"missing": missing, "seeded": sorted(seeds)},
        )
    return rep


# ============================================
# COLOURING DETERMINANT
# ============================================

def fox_determinant(pd: PDCode) -> int:
    """
    Knot determinant from the Fox colouring matrix.

    Rows are crossings, columns arcs: 2 at the over arc, -1 at each under arc.
    Any first minor gives |det|; 0 signals a link with a nontrivial kernel.
    """
    if pd.free_edges:
        return 0
    arcs = pd.arcs()
    if not pd.crossings:
        return 1
    index = {edge: i for i, arc in enumerate(arcs) for edge in arc}
    size = len(arcs)
    matrix = sympy.zeros(len(pd.crossings), size)
    for row, crossing in enumerate(pd.crossings):
        matrix[row, index[crossing.over[0]]] += 2
        matrix[row, index[crossing.under[0]]] -= 1
        matrix[row, index[crossing.under[1]]] -= 1
    if len(pd.crossings) != size:
        # some component never passes under and splits off
        return 0
    if size == 1:
        return 1
    return abs(int(matrix[1:, 1:].det(method="bareiss")))


def has_exact_entries(rep: Mapping[int, Mat2]) -> bool:
    return all(m.is_exact() for m in rep.values())


def max_trace_spread(rep: Mapping[int, Mat2], edges: Optional[Iterable[int]] = None) -> float:
    """Largest deviation between meridian traces over the chosen edges."""
    keys = sorted(rep) if edges is None else list(edges)
    traces = [complex(rep[k].to_complex().trace()) for k in keys]
    if not traces:
        return 0.0
    return max(abs(t - traces[0]) for t in traces)

