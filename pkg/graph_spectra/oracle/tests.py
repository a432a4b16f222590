import dataclasses
import os
import unittest

import numpy as np
from hypothesis import given, strategies as st
from scipy import optimize

from ..graphs.utils import interval_graph, load_graph, path_graph, star_graph
from .models import TransferMatrix, UnsupportedPotentialError
from .tasks import (edge_transfer, edge_transfer_matrix, fem_convergence, oracle_census, scan_diagnostics,
                    scan_roots, secular_det, secular_system)

DOCS = os.path.join(os.path.dirname(__file__), '..', '..', 'docs', 'graphs')


def signed_path_frequencies():
    """Roots of tan ω + tanh ω = 0 below √50."""
    return [optimize.brentq(lambda w: np.tan(w) + np.tanh(w), a, b, xtol=1e-14)
            for a, b in ((2.0, 2.5), (5.0, 5.6))]


class EdgeTransferTest(unittest.TestCase):
    def test_free(self):
        np.testing.assert_array_equal(edge_transfer(0.0, 1.0).matrix, [[1.0, 1.0], [0.0, 1.0]])

    def test_half_turn(self):
        np.testing.assert_allclose(edge_transfer(-np.pi ** 2, 1.0).matrix, [[-1.0, 0.0], [0.0, -1.0]], atol=1e-15)

    def test_hyperbolic(self):
        t = edge_transfer(1.0, 1.0)
        np.testing.assert_allclose(t.matrix, [[np.cosh(1), np.sinh(1)], [np.sinh(1), np.cosh(1)]], rtol=1e-15)
        self.assertAlmostEqual(t.determinant, 1.0, places=14)

    def test_bad_length(self):
        with self.assertRaises(ValueError):
            edge_transfer(1.0, 0.0)

    @given(st.lists(st.tuples(st.floats(min_value=-25.0, max_value=4.0),
                              st.floats(min_value=0.01, max_value=0.25)), min_size=1, max_size=3))
    def test_wronskian_preserved(self, pieces):
        total = TransferMatrix.identity()
        for c, length in pieces:
            total = edge_transfer(c, length) @ total
        self.assertLessEqual(abs(total.determinant - 1.0), 1e-10)
        self.assertAlmostEqual(total.length, sum(length for _, length in pieces), places=12)

    def test_carries_exact_solution(self):
        # y = sin(ωx) solves y'' = -ω² y
        w = 2.3
        edge = interval_graph(potential=((0.0, 0.3, 1.0), (1.0, 1.0))).edges[0]
        t = edge_transfer_matrix(edge, w ** 2 + 1.0)
        np.testing.assert_allclose(t.apply(0.0, w), [np.sin(w), w * np.cos(w)], atol=1e-14)


class SecularSystemTest(unittest.TestCase):
    def test_rows_cover_every_endpoint(self):
        system = secular_system(path_graph(weights=(1, -1)), 3.0)
        self.assertEqual(system.size, 4)
        self.assertEqual(system.labels, (('v0', 'constraint'), ('v1', 'constraint'), ('v1', 'natural'),
                                         ('v2', 'constraint')))
        self.assertEqual(len(system.scales), 2)
        self.assertLessEqual(np.abs(system.matrix).max(), 1.0)

    def test_robin_rows_only(self):
        g = interval_graph(left='robin', right='robin', f=(0.5, 2.0))
        system = secular_system(g, 1.0)
        self.assertEqual(system.labels, (('v0', 'natural'), ('v1', 'natural')))

    def test_dirichlet_edge(self):
        g = interval_graph()
        for n in (1, 2, 3):
            lam = (n * np.pi) ** 2
            self.assertLessEqual(abs(secular_det(g, lam)), 1e-12)
            self.assertLess(secular_det(g, lam - 0.1) * secular_det(g, lam + 0.1), 0.0)
        self.assertNotEqual(secular_det(g, 20.0), 0.0)

    def test_signed_path(self):
        g = path_graph(weights=(1, -1))
        w = signed_path_frequencies()[0]
        self.assertLessEqual(abs(secular_det(g, w ** 2)), 1e-10)
        self.assertNotEqual(secular_det(g, 20.0), 0.0)

    def test_unsupported_potential(self):
        g = interval_graph()
        edge = dataclasses.replace(g.edges[0], potential=lambda x: x ** 2)
        with self.assertRaisesRegex(UnsupportedPotentialError, "piecewise-constant"):
            secular_det(dataclasses.replace(g, edges=(edge,)), 1.0)

    def test_custom_rows(self):
        g = interval_graph(left='custom')
        condition = dataclasses.replace(g.conditions[0], rows=((1.0,),))
        g = dataclasses.replace(g, conditions=(condition, g.conditions[1]))
        self.assertEqual(secular_system(g, 1.0).labels[0], ('v0', 'constraint'))
        for lam in (3.0, 20.0):
            self.assertAlmostEqual(secular_det(g, lam), secular_det(interval_graph(), lam), places=14)


class ScanTest(unittest.TestCase):
    def test_dirichlet_edge(self):
        roots = scan_roots(interval_graph(), 0.0, 100.0)
        np.testing.assert_allclose(roots, [np.pi ** 2, 4 * np.pi ** 2, 9 * np.pi ** 2], rtol=1e-8)

    def test_signed_path_and_mirror(self):
        g = path_graph(weights=(1, -1))
        expected = [w ** 2 for w in signed_path_frequencies()]
        positive = scan_roots(g, 0.0, 50.0)
        np.testing.assert_allclose(positive, expected, rtol=1e-8)
        self.assertAlmostEqual(positive[0] / 2.36502 ** 2, 1.0, places=4)
        negative = scan_roots(g, -50.0, 0.0)
        np.testing.assert_allclose(negative, [-x for x in reversed(expected)], rtol=1e-8)

    def test_double_roots_are_flagged(self):
        g = star_graph(weights=(1, 1, 1))
        with self.assertLogs('graph_spectra.oracle.tasks', 'WARNING') as logs:
            scan = scan_diagnostics(g, 0.0, 50.0, grid=2000)
        np.testing.assert_allclose(scan.roots, [(np.pi / 2) ** 2, (1.5 * np.pi) ** 2], rtol=1e-8)
        np.testing.assert_allclose(scan.suspects, [np.pi ** 2, 4 * np.pi ** 2], rtol=1e-5)
        self.assertTrue(all('possible double root' in line for line in logs.output))

    def test_empty_window(self):
        with self.assertRaises(ValueError):
            scan_roots(interval_graph(), 5.0, 5.0)


class CensusTest(unittest.TestCase):
    def test_census_graphs(self):
        graphs = {
            'interval': interval_graph(),
            'signed_path': path_graph(weights=(1, -1)),
            'signed_path_q1': path_graph(weights=(1, -1), potentials=(1.0, 1.0)),
        }
        counts = {'interval': 2, 'signed_path': 4, 'signed_path_q1': 4}
        for name, g in graphs.items():
            census = oracle_census(g)
            with self.subTest(graph=name):
                self.assertTrue(census.passed)
                self.assertTrue(census.count_match)
                self.assertEqual(census.oracle_count, counts[name])
                self.assertLessEqual(census.max_relative_error, 1e-2)

    def test_mixed_star(self):
        census = oracle_census(load_graph(os.path.join(DOCS, 'mixed_star.json')))
        self.assertEqual(census.missed, [])
        self.assertEqual(census.spurious, [])
        self.assertTrue(any(fem < 0 for fem, _, _ in census.pairs))
        self.assertTrue(census.as_dict()['passed'])

    def test_robin_ends(self):
        census = oracle_census(interval_graph(potential=1.0, left='robin', right='robin', f=(0.5, 2.0)),
                               window=(0.0, 60.0))
        self.assertTrue(census.passed)
        self.assertGreaterEqual(census.oracle_count, 2)

    def test_double_roots_are_unresolved(self):
        census = oracle_census(star_graph(weights=(1, 1, 1)), window=(0.0, 30.0), grid=1500)
        self.assertEqual(census.missed, [])
        self.assertEqual(len(census.unresolved), 2)
        self.assertFalse(census.count_match)

    def test_quadratic_agreement(self):
        for g in (interval_graph(), path_graph(weights=(1, -1))):
            errors = fem_convergence(g, window=(0.0, 50.0))
            with self.subTest(graph=g.mesh_signature):
                self.assertLessEqual(errors[64], 1e-2)
                self.assertLessEqual(errors[128], 2.5e-3)
                self.assertTrue(3.2 <= errors[64] / errors[128] <= 5.0)
