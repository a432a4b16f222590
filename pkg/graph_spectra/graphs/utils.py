import dataclasses
import json
import logging

import networkx as nx
import numpy as np

from .models import (ConditionKind, Edge, Endpoint, EndpointMap, GraphValidationError,
                     MetricGraph, PiecewisePotential, ValidationReport, VertexCondition,
                     as_endpoint_map, as_rows)

logger = logging.getLogger(__name__)


def validate_graph(g):
    """
    Check every structural invariant of a metric graph and report all of the
    violations found. Nothing is repaired.
    """
    report = ValidationReport(
        edge_count=len(g.edges),
        positive_count=len(g.positive_edges),
    )
    if not g.edges:
        report.add('no_edges', "graph has no edges (K >= 1 required)")

    vertex_ids = set(g.vertices)
    if len(vertex_ids) != len(g.vertices):
        report.add('duplicate_vertex', "vertex ids are not unique")

    seen = set()
    for edge in g.edges:
        if edge.id in seen:
            report.add('duplicate_edge', "edge id %s is not unique" % edge.id, edge=edge.id)
        seen.add(edge.id)
        if edge.weight not in (1, -1):
            report.add('weight', "edge %s weight must be +1 or -1" % edge.id, edge=edge.id)
        if edge.length != 1.0:
            report.add('length', "edge %s has non-unit length %r" % (edge.id, edge.length), edge=edge.id)
        if not isinstance(edge.mesh, int) or edge.mesh < 2:
            report.add('mesh', "edge %s mesh count must be an integer >= 2" % edge.id, edge=edge.id)
        for problem in edge.potential.problems():
            report.add('potential', "edge %s: %s" % (edge.id, problem), edge=edge.id)
        for vertex in (edge.start, edge.end):
            if vertex not in vertex_ids:
                report.add('unknown_vertex', "edge %s references unknown vertex %s" % (edge.id, vertex),
                           vertex=vertex, edge=edge.id)

    by_vertex = {}
    for condition in g.conditions:
        if condition.vertex not in vertex_ids:
            report.add('orphan_condition', "condition given for unknown vertex %s" % condition.vertex,
                       vertex=condition.vertex)
        by_vertex.setdefault(condition.vertex, []).append(condition)

    incidence = g.incidence
    for vertex in g.vertices:
        conditions = by_vertex.get(vertex, [])
        if len(conditions) != 1:
            report.add('condition_count', "vertex %s carries %d conditions, expected exactly one"
                       % (vertex, len(conditions)), vertex=vertex)
            continue
        condition = conditions[0]
        degree = incidence.degree(vertex) if vertex in incidence else 0
        if degree == 0:
            report.add('isolated_vertex', "vertex %s has no incident edge" % vertex, vertex=vertex)
            continue
        _check_condition(g, condition, degree, report)

    report.condition_counts = {v: incidence.degree(v) for v in g.vertices if v in incidence}
    if report.constraint_rows > 2 * report.edge_count:
        report.add('too_many_constraints', "J = %d exceeds 2K = %d"
                   % (report.constraint_rows, 2 * report.edge_count))
    if report.is_valid and report.constraint_rows + report.natural_conditions != 2 * report.edge_count:
        report.add('condition_total', "constraint rows plus natural conditions must equal 2K")

    if report.is_valid:
        logger.debug("graph valid: K=%d n=%d J=%d components=%d", report.edge_count,
                     report.positive_count, report.constraint_rows,
                     nx.number_weakly_connected_components(incidence))
    return report


def _check_condition(g, condition, degree, report):
    vertex = condition.vertex
    incident = set(g.incident_endpoints(vertex))

    if condition.rows and condition.kind is not ConditionKind.CUSTOM:
        report.add('unused_rows', "rows given at %s vertex %s; only custom conditions take rows"
                   % (condition.kind.value, vertex), vertex=vertex)
    if condition.f and condition.kind in (ConditionKind.DIRICHLET, ConditionKind.KIRCHHOFF):
        report.add('unused_f', "f given at %s vertex %s; only robin and custom conditions take f"
                   % (condition.kind.value, vertex), vertex=vertex)

    if condition.kind is ConditionKind.CUSTOM:
        rows = condition.constraint_rows(degree)
        if rows.shape[0] > degree:
            report.add('condition_count', "condition count exceeds degree at vertex %s (%d rows, degree %d)"
                       % (vertex, rows.shape[0], degree), vertex=vertex)
            return
        if rows.size and rows.shape[1] != degree:
            report.add('row_width', "custom rows at vertex %s must have %d columns" % (vertex, degree),
                       vertex=vertex)
            return
        if rows.size and np.linalg.matrix_rank(rows) < rows.shape[0]:
            report.add('constraint_rank', "constraints not independent at vertex %s" % vertex, vertex=vertex)
            return
    else:
        rows = condition.constraint_rows(degree)

    for endpoint, value in condition.f.items():
        if endpoint not in incident:
            report.add('unknown_endpoint', "f given at %s which is not incident to vertex %s"
                       % (endpoint.key, vertex), vertex=vertex, edge=endpoint.edge)
        elif not np.isfinite(value):
            report.add('boundary_value', "f at %s is not finite" % endpoint.key, vertex=vertex)

    report.constraint_rows += rows.shape[0]
    report.natural_conditions += degree - rows.shape[0]


def build_endpoint_map(g):
    entries = {}
    offset = 0
    for edge in g.edges:
        entries[Endpoint(edge.id, 0)] = (offset, -1)
        entries[Endpoint(edge.id, 1)] = (offset + edge.mesh, 1)
        offset += edge.mesh + 1
    return EndpointMap(entries)


def reverse_edge(g, edge_id):
    """
    The same problem with one edge traversed the other way: the potential is
    reflected, the endpoint data swapped and f negated at the swapped ends
    so that the boundary term of the form is unchanged.
    """
    old = g.edge(edge_id)
    new_edge = dataclasses.replace(old, start=old.end, end=old.start, potential=old.potential.reflected())
    edges = tuple(new_edge if e.id == edge_id else e for e in g.edges)
    reversed_graph = MetricGraph(edges, g.vertices, ())

    def swap(endpoint):
        if endpoint.edge == edge_id:
            return Endpoint(edge_id, 1 - endpoint.side)
        return endpoint

    conditions = []
    for condition in g.conditions:
        f = {}
        for endpoint, value in condition.f.items():
            f[swap(endpoint)] = -value if endpoint.edge == edge_id else value
        rows = condition.rows
        if condition.kind is ConditionKind.CUSTOM and rows:
            old_order = g.incident_endpoints(condition.vertex)
            new_order = reversed_graph.incident_endpoints(condition.vertex)
            columns = [old_order.index(swap(endpoint)) for endpoint in new_order]
            rows = as_rows(np.asarray(rows, dtype=float)[:, columns])
        conditions.append(dataclasses.replace(condition, f=f, rows=rows))
    return MetricGraph(edges, g.vertices, tuple(conditions))


def negate_weights(g):
    edges = tuple(dataclasses.replace(e, weight=-e.weight) for e in g.edges)
    return dataclasses.replace(g, edges=edges)


def with_mesh(g, mesh):
    edges = tuple(dataclasses.replace(e, mesh=int(mesh)) for e in g.edges)
    return dataclasses.replace(g, edges=edges)


def refined(g, factor=2):
    edges = tuple(dataclasses.replace(e, mesh=e.mesh * factor) for e in g.edges)
    return dataclasses.replace(g, edges=edges)


def as_potential(value):
    if isinstance(value, PiecewisePotential):
        return value
    if isinstance(value, dict):
        return PiecewisePotential(tuple(float(x) for x in value['breakpoints']),
                                  tuple(float(x) for x in value['values']))
    if isinstance(value, (tuple, list)):
        breakpoints, values = value
        return PiecewisePotential(tuple(float(x) for x in breakpoints), tuple(float(x) for x in values))
    return PiecewisePotential.constant(value)


def make_condition(vertex, kind, f=None, rows=None):
    return VertexCondition(
        vertex=vertex,
        kind=ConditionKind(kind),
        rows=as_rows(rows if rows is not None else ()),
        f=as_endpoint_map(f if f is not None else {}),
    )


def interval_graph(weight=1, potential=0.0, mesh=64, left='dirichlet', right='dirichlet', f=(0.0, 0.0)):
    """A single edge v0 -> v1; ``f`` holds the form-convention values at sides 0 and 1."""
    edge = Edge('e1', 'v0', 'v1', weight, as_potential(potential), mesh)
    conditions = (
        make_condition('v0', left, f={Endpoint('e1', 0): f[0]} if left == 'robin' else None),
        make_condition('v1', right, f={Endpoint('e1', 1): f[1]} if right == 'robin' else None),
    )
    return MetricGraph((edge,), ('v0', 'v1'), conditions)


def path_graph(weights=(1, -1), potentials=None, mesh=64, ends='dirichlet', interior='kirchhoff'):
    potentials = potentials if potentials is not None else [0.0] * len(weights)
    vertices = tuple('v%d' % i for i in range(len(weights) + 1))
    edges = tuple(
        Edge('e%d' % (i + 1), vertices[i], vertices[i + 1], w, as_potential(q), mesh)
        for i, (w, q) in enumerate(zip(weights, potentials))
    )
    conditions = tuple(
        make_condition(v, ends if i in (0, len(vertices) - 1) else interior)
        for i, v in enumerate(vertices)
    )
    return MetricGraph(edges, vertices, conditions)


def star_graph(weights=(1, 1, 1), potentials=None, mesh=64, tips='dirichlet', center='kirchhoff'):
    """Edges run from the center (side 0) out to the tips (side 1)."""
    potentials = potentials if potentials is not None else [0.0] * len(weights)
    tip_ids = tuple('t%d' % (i + 1) for i in range(len(weights)))
    edges = tuple(
        Edge('e%d' % (i + 1), 'c', tip, w, as_potential(q), mesh)
        for i, (tip, w, q) in enumerate(zip(tip_ids, weights, potentials))
    )
    conditions = (make_condition('c', center),) + tuple(make_condition(t, tips) for t in tip_ids)
    return MetricGraph(edges, ('c',) + tip_ids, conditions)


def graph_from_dict(data):
    report = ValidationReport()
    try:
        edges = tuple(
            Edge(
                id=str(item['id']),
                start=str(item['start']),
                end=str(item['end']),
                weight=int(item['weight']),
                potential=as_potential(item.get('potential', 0.0)),
                mesh=int(item.get('mesh', 64)),
                length=float(item.get('length', 1.0)),
            )
            for item in data['edges']
        )
        vertices, conditions = [], []
        for item in data['vertices']:
            vertex = str(item['id'])
            spec = item['condition']
            vertices.append(vertex)
            conditions.append(make_condition(vertex, spec['type'], f=spec.get('f'), rows=spec.get('rows')))
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        report.add('schema', "malformed graph specification: %s" % (e,))
        raise GraphValidationError(report)
    return MetricGraph(edges, tuple(vertices), tuple(conditions))


def graph_to_dict(g):
    edges = [
        {
            'id': e.id,
            'start': e.start,
            'end': e.end,
            'weight': e.weight,
            'potential': {'breakpoints': list(e.potential.breakpoints), 'values': list(e.potential.values)},
            'mesh': e.mesh,
        }
        for e in g.edges
    ]
    vertices = []
    for vertex in g.vertices:
        condition = g.condition_at(vertex)
        spec = {'type': condition.kind.value}
        if condition.kind in (ConditionKind.ROBIN, ConditionKind.CUSTOM):
            spec['f'] = {endpoint.key: value for endpoint, value in condition.f.items()}
        if condition.kind is ConditionKind.CUSTOM:
            spec['rows'] = [list(row) for row in condition.rows]
        vertices.append({'id': vertex, 'condition': spec})
    return {'edges': edges, 'vertices': vertices}


def load_graph(path):
    with open(path) as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as e:
            report = ValidationReport()
            report.add('schema', "graph specification is not valid JSON: %s" % e)
            raise GraphValidationError(report)
    return graph_from_dict(data)


def dump_graph(g, path):
    with open(path, 'w') as handle:
        json.dump(graph_to_dict(g), handle, indent=2, sort_keys=True)
