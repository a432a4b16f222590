import json
import os
import tempfile
import unittest

import numpy as np
from hypothesis import given, strategies as st

from .models import ConditionKind, Edge, Endpoint, GraphValidationError, MetricGraph, PiecewisePotential
from .utils import (build_endpoint_map, dump_graph, graph_from_dict, graph_to_dict, interval_graph,
                    load_graph, make_condition, negate_weights, path_graph, reverse_edge, star_graph,
                    validate_graph, with_mesh)

DOCS = os.path.join(os.path.dirname(__file__), '..', '..', 'docs', 'graphs')


class ValidateGraphTest(unittest.TestCase):
    def test_single_dirichlet_edge(self):
        report = validate_graph(interval_graph())
        self.assertTrue(report.is_valid)
        self.assertEqual(report.constraint_rows, 2)
        self.assertEqual(report.edge_count, 1)
        self.assertEqual(report.positive_count, 1)

    def test_signed_path_center_degree(self):
        g = path_graph(weights=(1, -1))
        report = validate_graph(g)
        self.assertTrue(report.is_valid)
        self.assertEqual(report.condition_counts['v1'], 2)
        self.assertEqual(report.constraint_rows, 3)
        self.assertEqual(report.natural_conditions, 1)

    def test_too_many_custom_rows(self):
        g = path_graph(weights=(1, 1))
        conditions = tuple(
            make_condition('v1', 'custom', rows=[[1, -1], [1, 0], [0, 1]]) if c.vertex == 'v1' else c
            for c in g.conditions
        )
        report = validate_graph(MetricGraph(g.edges, g.vertices, conditions))
        self.assertFalse(report.is_valid)
        self.assertIn("condition count exceeds degree", report.violations[0].message)
        self.assertEqual(report.violations[0].vertex, 'v1')

    def test_dependent_custom_rows(self):
        g = path_graph(weights=(1, 1))
        conditions = tuple(
            make_condition('v1', 'custom', rows=[[1, -1], [2, -2]]) if c.vertex == 'v1' else c
            for c in g.conditions
        )
        report = validate_graph(MetricGraph(g.edges, g.vertices, conditions))
        self.assertIn('constraint_rank', [v.code for v in report.violations])

    def test_every_violation_is_listed(self):
        edge = Edge('e1', 'a', 'z', 2, PiecewisePotential.constant(0.0), mesh=1, length=2.0)
        g = MetricGraph((edge,), ('a', 'b'), (make_condition('a', 'dirichlet'),))
        report = validate_graph(g)
        codes = {v.code for v in report.violations}
        self.assertTrue({'weight', 'mesh', 'length', 'unknown_vertex', 'condition_count'} <= codes)
        with self.assertRaises(GraphValidationError) as raised:
            report.raise_for_violations()
        self.assertIs(raised.exception.report, report)

    def test_isolated_vertex(self):
        g = interval_graph()
        g = MetricGraph(g.edges, g.vertices + ('lonely',), g.conditions + (make_condition('lonely', 'dirichlet'),))
        self.assertIn('isolated_vertex', [v.code for v in validate_graph(g).violations])

    def test_empty_graph(self):
        report = validate_graph(MetricGraph((), (), ()))
        self.assertIn('no_edges', [v.code for v in report.violations])

    def test_robin_f_at_foreign_endpoint(self):
        g = interval_graph(left='robin')
        bad = make_condition('v0', 'robin', f={'e1:1': 2.0})
        g = MetricGraph(g.edges, g.vertices, (bad, g.conditions[1]))
        self.assertIn('unknown_endpoint', [v.code for v in validate_graph(g).violations])

    @given(st.lists(st.sampled_from([1, -1]), min_size=1, max_size=5),
           st.sampled_from(['dirichlet', 'robin']),
           st.sampled_from(['kirchhoff', 'dirichlet', 'robin']))
    def test_conditions_account_for_every_endpoint(self, weights, ends, interior):
        report = validate_graph(path_graph(weights=weights, mesh=4, ends=ends, interior=interior))
        self.assertTrue(report.is_valid)
        self.assertEqual(report.constraint_rows + report.natural_conditions, 2 * len(weights))


class PotentialTest(unittest.TestCase):
    def test_right_continuous(self):
        q = PiecewisePotential((0.0, 0.5, 1.0), (1.0, 2.0))
        self.assertEqual(q(0.25), 1.0)
        self.assertEqual(q(0.5), 2.0)
        self.assertEqual(q(1.0), 2.0)
        np.testing.assert_array_equal(q(np.array([0.0, 0.49, 0.5])), [1.0, 1.0, 2.0])

    def test_reflection(self):
        q = PiecewisePotential((0.0, 0.25, 1.0), (1.0, 3.0))
        r = q.reflected()
        self.assertEqual(r.breakpoints, (0.0, 0.75, 1.0))
        self.assertEqual(r.values, (3.0, 1.0))
        self.assertEqual(r(0.9), q(0.1))

    def test_problems(self):
        self.assertEqual(PiecewisePotential.constant(1.0).problems(), [])
        self.assertTrue(PiecewisePotential((0.0, 0.6, 0.4, 1.0), (1, 2, 3)).problems())
        self.assertTrue(PiecewisePotential((0.0, 1.0), (float('inf'),)).problems())


class EndpointMapTest(unittest.TestCase):
    def test_single_edge(self):
        mapping = build_endpoint_map(interval_graph(mesh=8))
        self.assertEqual(mapping.dof(Endpoint('e1', 0)), 0)
        self.assertEqual(mapping.sign(Endpoint('e1', 0)), -1)
        self.assertEqual(mapping.dof(Endpoint('e1', 1)), 8)
        self.assertEqual(mapping.sign(Endpoint('e1', 1)), 1)

    def test_counts_and_shared_vertex(self):
        g = star_graph(weights=(1, -1, 1), mesh=4)
        mapping = build_endpoint_map(g)
        self.assertEqual(len(mapping), 6)
        center = [mapping.dof(ep) for ep in g.incident_endpoints('c')]
        self.assertEqual(len(set(center)), 3)

    def test_endpoint_keys(self):
        self.assertEqual(Endpoint.parse('e12:1'), Endpoint('e12', 1))
        self.assertEqual(Endpoint('e3', 0).key, 'e3:0')
        with self.assertRaises(KeyError):
            Endpoint.parse('e1-1')


class TransformTest(unittest.TestCase):
    def test_reverse_edge_swaps_robin_data(self):
        g = interval_graph(potential=((0.0, 0.3, 1.0), (1.0, 2.0)), left='robin', right='robin', f=(0.5, 2.0))
        r = reverse_edge(g, 'e1')
        edge = r.edge('e1')
        self.assertEqual((edge.start, edge.end), ('v1', 'v0'))
        self.assertEqual(r.boundary_value(Endpoint('e1', 1)), -0.5)
        self.assertEqual(r.boundary_value(Endpoint('e1', 0)), -2.0)
        self.assertAlmostEqual(edge.potential.breakpoints[1], 0.7)
        self.assertTrue(validate_graph(r).is_valid)

    def test_negate_and_mesh(self):
        g = path_graph(weights=(1, -1), mesh=8)
        self.assertEqual([e.weight for e in negate_weights(g).edges], [-1, 1])
        self.assertEqual(with_mesh(g, 32).mesh_signature, (('e1', 32), ('e2', 32)))

    def test_incidence(self):
        g = star_graph(weights=(1, 1, -1))
        self.assertEqual(g.incidence.degree('c'), 3)
        self.assertEqual(g.incidence.number_of_edges(), 3)


class SerializationTest(unittest.TestCase):
    def test_dict_round_trip(self):
        g = interval_graph(weight=-1, potential=((0.0, 0.5, 1.0), (1.0, 0.0)), right='robin', f=(0.0, 1.5))
        again = graph_from_dict(json.loads(json.dumps(graph_to_dict(g))))
        self.assertEqual(again.edges, g.edges)
        self.assertEqual(again.condition_at('v1').f, {Endpoint('e1', 1): 1.5})
        self.assertIs(again.condition_at('v0').kind, ConditionKind.DIRICHLET)

    def test_file_round_trip(self):
        g = star_graph(weights=(1, 1, -1), mesh=6)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'star.json')
            dump_graph(g, path)
            self.assertEqual(load_graph(path).mesh_signature, g.mesh_signature)

    def test_shipped_graphs_validate(self):
        for name in ('interval_dirichlet.json', 'signed_path.json', 'mixed_star.json'):
            g = load_graph(os.path.join(DOCS, name))
            self.assertTrue(validate_graph(g).is_valid, name)

    def test_malformed_input(self):
        with self.assertRaises(GraphValidationError):
            graph_from_dict({'edges': [{'id': 'e1'}], 'vertices': []})
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.json')
            with open(path, 'w') as handle:
                handle.write('{"edges": [')
            with self.assertRaises(GraphValidationError):
                load_graph(path)

    def with_center(self, condition):
        data = graph_to_dict(path_graph(weights=(1, 1), mesh=4))
        data['vertices'][1]['condition'] = condition
        return data

    def test_f_must_be_an_object(self):
        with self.assertRaises(GraphValidationError) as raised:
            graph_from_dict(self.with_center({'type': 'robin', 'f': [1.0, 2.0]}))
        self.assertEqual([v.code for v in raised.exception.report.violations], ['schema'])
        self.assertIn('f must map endpoint keys', str(raised.exception))

    def test_custom_rows_must_be_rectangular(self):
        with self.assertRaises(GraphValidationError) as raised:
            graph_from_dict(self.with_center({'type': 'custom', 'rows': [[1, -1], [1]]}))
        self.assertIn('unequal lengths', str(raised.exception))
        for rows in ([1, -1], 'ab', {'r': [1, -1]}):
            with self.assertRaises(GraphValidationError):
                graph_from_dict(self.with_center({'type': 'custom', 'rows': rows}))

    def test_condition_must_be_an_object(self):
        with self.assertRaises(GraphValidationError):
            graph_from_dict(self.with_center(['kirchhoff']))

    def test_unused_condition_data(self):
        g = graph_from_dict(self.with_center({'type': 'kirchhoff', 'f': {'e1:1': 1.0}}))
        self.assertEqual([v.code for v in validate_graph(g).violations], ['unused_f'])
        g = graph_from_dict(self.with_center({'type': 'dirichlet', 'f': {'e1:1': 1.0}}))
        self.assertEqual([v.code for v in validate_graph(g).violations], ['unused_f'])
        g = graph_from_dict(self.with_center({'type': 'robin', 'rows': [[1, -1]]}))
        self.assertEqual([v.code for v in validate_graph(g).violations], ['unused_rows'])
        g = graph_from_dict(self.with_center({'type': 'custom', 'rows': [[1, -1]], 'f': {'e1:1': 1.0}}))
        self.assertTrue(validate_graph(g).is_valid)
