from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from django.utils.functional import cached_property


class GraphValidationError(ValueError):
    """
    Raised with the complete ValidationReport; the message lists every
    violated invariant.
    """
    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(v.message for v in report.violations))


class UnknownEndpointError(KeyError):
    pass


class ConditionKind(str, enum.Enum):
    DIRICHLET = 'dirichlet'
    KIRCHHOFF = 'kirchhoff'
    ROBIN = 'robin'
    CUSTOM = 'custom'


class Endpoint(NamedTuple):
    """
    One end of an edge: side 0 is the initial point, side 1 the terminal point.
    """
    edge: str
    side: int

    @property
    def key(self):
        return "{}:{}".format(self.edge, self.side)

    @property
    def sigma(self):
        # dσ sign: ∫∂G y dσ = Σ y(1) - y(0)
        return 1 if self.side == 1 else -1

    @classmethod
    def parse(cls, key):
        edge, _, side = str(key).rpartition(':')
        if not edge or side not in ('0', '1'):
            raise UnknownEndpointError("Malformed endpoint key: %r" % key)
        return cls(edge, int(side))


@dataclass(frozen=True)
class PiecewisePotential:
    breakpoints: Tuple[float, ...]
    values: Tuple[float, ...]

    @classmethod
    def constant(cls, value):
        return cls((0.0, 1.0), (float(value),))

    def problems(self):
        found = []
        b = np.asarray(self.breakpoints, dtype=float)
        if len(self.values) != len(b) - 1:
            found.append("potential needs one value per subinterval")
        if len(b) < 2 or b[0] != 0.0 or b[-1] != 1.0:
            found.append("potential breakpoints must start at 0 and end at 1")
        elif np.any(np.diff(b) <= 0.0):
            found.append("potential breakpoints must be strictly ascending")
        if not np.all(np.isfinite(np.asarray(self.values, dtype=float))):
            found.append("potential values must be finite")
        return found

    def __call__(self, x):
        # Right-continuous; x = 1 belongs to the last piece.
        idx = np.searchsorted(self.breakpoints, x, side='right') - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[idx]

    @property
    def is_constant(self):
        return len(set(self.values)) == 1

    def pieces(self):
        b = self.breakpoints
        return [(b[i], b[i + 1], v) for i, v in enumerate(self.values)]

    def reflected(self):
        """The potential seen along the reversed edge, x -> 1 - x."""
        breakpoints = tuple(1.0 - x for x in reversed(self.breakpoints))
        return PiecewisePotential(breakpoints, tuple(reversed(self.values)))

    def shifted(self, amount):
        return PiecewisePotential(self.breakpoints, tuple(v + amount for v in self.values))


@dataclass(frozen=True)
class Edge:
    id: str
    start: str
    end: str
    weight: int
    potential: PiecewisePotential = field(default_factory=lambda: PiecewisePotential.constant(0.0))
    mesh: int = 64
    length: float = 1.0

    @property
    def endpoints(self):
        return Endpoint(self.id, 0), Endpoint(self.id, 1)


@dataclass(frozen=True)
class VertexCondition:
    """
    A co-normal vertex condition: Dirichlet-like constraint rows over the
    incident endpoint values plus a boundary function f generating the
    natural conditions through the form.

    ``rows`` (custom only) index the incident endpoints in the order returned
    by MetricGraph.incident_endpoints. ``f`` maps endpoints to the boundary
    function in the form convention.
    """
    vertex: str
    kind: ConditionKind
    rows: Tuple[Tuple[float, ...], ...] = ()
    f: Mapping[Endpoint, float] = field(default_factory=dict)

    def constraint_rows(self, degree):
        if self.kind is ConditionKind.DIRICHLET:
            return np.eye(degree)
        if self.kind is ConditionKind.KIRCHHOFF:
            rows = np.zeros((max(degree - 1, 0), degree))
            rows[:, 0] = 1.0
            rows[np.arange(degree - 1), np.arange(1, degree)] = -1.0
            return rows
        if self.kind is ConditionKind.ROBIN:
            return np.zeros((0, degree))
        if not self.rows:
            return np.zeros((0, degree))
        return np.asarray(self.rows, dtype=float)

    def boundary_value(self, endpoint):
        if self.kind in (ConditionKind.DIRICHLET, ConditionKind.KIRCHHOFF):
            return 0.0
        return float(self.f.get(endpoint, 0.0))


@dataclass(frozen=True)
class MetricGraph:
    edges: Tuple[Edge, ...]
    vertices: Tuple[str, ...]
    conditions: Tuple[VertexCondition, ...]

    @cached_property
    def _edges_by_id(self):
        return {edge.id: edge for edge in self.edges}

    @cached_property
    def _conditions_by_vertex(self):
        return {condition.vertex: condition for condition in self.conditions}

    def edge(self, edge_id):
        return self._edges_by_id[edge_id]

    def condition_at(self, vertex):
        return self._conditions_by_vertex[vertex]

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def positive_edges(self):
        return tuple(e for e in self.edges if e.weight > 0)

    @property
    def negative_edges(self):
        return tuple(e for e in self.edges if e.weight < 0)

    @property
    def positive_length(self):
        # Unit edges: length(G+) is the positive edge count.
        return float(sum(e.length for e in self.positive_edges))

    @property
    def mesh_signature(self):
        return tuple((e.id, e.mesh) for e in self.edges)

    def incident_endpoints(self, vertex):
        found = []
        for edge in self.edges:
            if edge.start == vertex:
                found.append(Endpoint(edge.id, 0))
            if edge.end == vertex:
                found.append(Endpoint(edge.id, 1))
        return found

    def vertex_of(self, endpoint):
        edge = self.edge(endpoint.edge)
        return edge.start if endpoint.side == 0 else edge.end

    def boundary_value(self, endpoint):
        """f at an endpoint, in the form convention."""
        return self.condition_at(self.vertex_of(endpoint)).boundary_value(endpoint)

    @cached_property
    def incidence(self):
        graph = nx.MultiDiGraph()
        graph.add_nodes_from(self.vertices)
        for edge in self.edges:
            graph.add_edge(edge.start, edge.end, key=edge.id, weight=edge.weight)
        return graph


class EndpointMap:
    """
    Global degree of freedom and dσ sign for every edge endpoint, prior to
    constraint elimination.
    """
    def __init__(self, entries: Dict[Endpoint, Tuple[int, int]]):
        self._entries = dict(entries)

    def dof(self, endpoint):
        try:
            return self._entries[endpoint][0]
        except KeyError:
            raise UnknownEndpointError(endpoint)

    def sign(self, endpoint):
        try:
            return self._entries[endpoint][1]
        except KeyError:
            raise UnknownEndpointError(endpoint)

    def items(self):
        return self._entries.items()

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __contains__(self, endpoint):
        return endpoint in self._entries


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    vertex: Optional[str] = None
    edge: Optional[str] = None


@dataclass
class ValidationReport:
    edge_count: int = 0
    positive_count: int = 0
    constraint_rows: int = 0
    natural_conditions: int = 0
    condition_counts: Dict[str, int] = field(default_factory=dict)
    violations: List[Violation] = field(default_factory=list)

    @property
    def is_valid(self):
        return not self.violations

    def add(self, code, message, vertex=None, edge=None):
        self.violations.append(Violation(code, message, vertex, edge))

    def raise_for_violations(self):
        if self.violations:
            raise GraphValidationError(self)
        return self

    def as_dict(self):
        return {
            'valid': self.is_valid,
            'K': self.edge_count,
            'n': self.positive_count,
            'J': self.constraint_rows,
            'natural': self.natural_conditions,
            'violations': [v.__dict__ for v in self.violations],
        }


def as_endpoint_map(mapping: Mapping) -> Dict[Endpoint, float]:
    if not isinstance(mapping, Mapping):
        raise TypeError("f must map endpoint keys to values, got %s" % type(mapping).__name__)
    return {Endpoint.parse(k) if not isinstance(k, Endpoint) else k: float(v) for k, v in mapping.items()}


def as_rows(rows: Sequence[Sequence[float]]) -> Tuple[Tuple[float, ...], ...]:
    if isinstance(rows, np.ndarray):
        rows = rows.tolist()
    if isinstance(rows, (str, bytes, Mapping)) or not isinstance(rows, Sequence):
        raise TypeError("rows must be a list of rows, got %s" % type(rows).__name__)
    if any(isinstance(row, (str, bytes)) or not isinstance(row, Sequence) for row in rows):
        raise TypeError("each custom row must be a list of coefficients")
    result = tuple(tuple(float(x) for x in row) for row in rows)
    if len({len(row) for row in result}) > 1:
        raise ValueError("custom rows have unequal lengths %s" % sorted({len(row) for row in result}))
    return result
