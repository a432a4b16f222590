import dataclasses
import os
import unittest
from unittest import mock

import numpy as np
from scipy import linalg

from ..assembly.tasks import assemble_global
from ..graphs.utils import interval_graph, path_graph, star_graph, with_mesh
from ..spectra.tasks import solve_pencil
from .models import DecoupledKind, DecoupledPositivityError, NondSign, NonNestedError, UnconvergedError
from .tasks import (asymptotic_fit, bracket_report, convergence_check, converged_asymptotic_fit, converged_mesh,
                    decoupled_spectrum, edge_problem, sign_flip_duality, verify_bracketing)

MIXED_STAR = star_graph(weights=(1, 1, -1), potentials=(1.0, ((0.0, 0.4, 1.0), (2.0, 0.0)), 0.5), mesh=32)


class DecoupledSpectrumTest(unittest.TestCase):
    def test_dirichlet_edge(self):
        decoupled = decoupled_spectrum(interval_graph(mesh=64), DecoupledKind.DIRICHLET)
        values = decoupled.per_edge['e1']
        self.assertEqual(len(values), 63)
        for n in (1, 2):
            self.assertAlmostEqual(values[n - 1] / (n * np.pi) ** 2, 1.0, delta=2e-3)
        self.assertTrue(decoupled.verified)

    def test_mirrored_path_multiplicities(self):
        decoupled = decoupled_spectrum(path_graph(weights=(1, -1), mesh=64), 'dirichlet')
        first = decoupled.multiplicity_table[0]
        self.assertAlmostEqual(first.value / np.pi ** 2, 1.0, delta=1e-3)
        self.assertEqual((first.nu, first.nu_plus), (2, 1))
        self.assertEqual(len(decoupled.merged_positive), 63)
        self.assertAlmostEqual(decoupled.merged_negative[0], -decoupled.merged_positive[0], places=12)
        self.assertTrue(np.all(np.diff(decoupled.merged_negative) <= 0))

    def test_neumann_edge_with_unit_potential(self):
        decoupled = decoupled_spectrum(interval_graph(potential=1.0, mesh=64), DecoupledKind.NON_DIRICHLET)
        values = decoupled.per_edge['e1']
        self.assertEqual(len(values), 65)
        self.assertAlmostEqual(values[0], 1.0, places=10)
        for n in (1, 2):
            self.assertAlmostEqual(values[n] / (1 + (n * np.pi) ** 2), 1.0, delta=2e-3)

    def test_positivity_failure(self):
        g = interval_graph(mesh=16)
        with self.assertRaises(DecoupledPositivityError) as caught:
            decoupled_spectrum(g, DecoupledKind.NON_DIRICHLET)
        self.assertEqual(caught.exception.edge_id, 'e1')

        with self.assertLogs('graph_spectra.bracketing.tasks', 'WARNING'):
            decoupled = decoupled_spectrum(g, DecoupledKind.NON_DIRICHLET, strict=False)
        self.assertFalse(decoupled.verified)
        self.assertEqual(list(decoupled.positivity_failures), ['e1'])
        self.assertLess(abs(decoupled.per_edge['e1'][0]), 1e-10)

    def test_robin_sign_conventions(self):
        g = interval_graph(potential=1.0, mesh=32, left='robin', right='robin', f=(0.5, 2.0))
        flipped = interval_graph(potential=1.0, mesh=32, left='robin', right='robin', f=(-0.5, -2.0))
        for graph, sign in ((g, NondSign.FORM), (flipped, NondSign.PAPER)):
            d = assemble_global(graph)
            expected = linalg.eigh(d.form_matrix, d.unsigned_mass, eigvals_only=True)
            decoupled = decoupled_spectrum(g, DecoupledKind.NON_DIRICHLET, sign, strict=False)
            with self.subTest(nond_sign=sign.value):
                np.testing.assert_allclose(decoupled.per_edge['e1'], expected, rtol=1e-10, atol=1e-10)

    def test_edge_problem_shape(self):
        g = path_graph(weights=(1, -1), mesh=8)
        single = edge_problem(g, g.edges[1], 'dirichlet')
        self.assertEqual(single.vertices, ('e2:0', 'e2:1'))
        self.assertEqual(single.edges[0].weight, 1)
        self.assertEqual(single.mesh_signature, (('e2', 8),))

    def test_edge_order_does_not_matter(self):
        shuffled = dataclasses.replace(MIXED_STAR, edges=MIXED_STAR.edges[::-1])
        for kind in DecoupledKind:
            before = decoupled_spectrum(MIXED_STAR, kind, strict=False)
            after = decoupled_spectrum(shuffled, kind, strict=False)
            with self.subTest(kind=kind.value):
                np.testing.assert_array_equal(before.merged_positive, after.merged_positive)
                np.testing.assert_array_equal(before.merged_negative, after.merged_negative)
                self.assertEqual(before.multiplicity_table, after.multiplicity_table)

    def test_sign_flip_duality(self):
        self.assertEqual(sign_flip_duality(MIXED_STAR), {'dirichlet': 0.0, 'nondirichlet': 0.0})


class BracketingTest(unittest.TestCase):
    def test_star_rows_with_neumann_kernel(self):
        g = star_graph(weights=(1, 1, 1), mesh=64)
        s = solve_pencil(assemble_global(g))
        report = verify_bracketing(g, s, tol=0.0, count=10)
        self.assertEqual([row.n for row in report.rows], list(range(1, 11)))
        self.assertTrue(report.passed)
        self.assertEqual(report.tol, 0.0)
        self.assertFalse(any(row.verified for row in report.rows))
        self.assertEqual(set(report.positivity_failures), {'e1', 'e2', 'e3'})
        self.assertIn('rows unverified', report.notes[-1])
        # the doubly degenerate star modes coincide with the Dirichlet edge modes
        self.assertAlmostEqual(report.rows[1].upper_slack / report.rows[1].value, 0.0, places=9)

    def test_unverified_rows_default_to_loose_tolerance(self):
        g = star_graph(weights=(1, 1, 1), mesh=16)
        report = verify_bracketing(g, solve_pencil(assemble_global(g)))
        self.assertEqual(report.tol, 1e-2)

    @mock.patch.dict(os.environ, {'GRAPH_SPECTRA_BRACKET_RTOL': '0.05'})
    def test_loose_tolerance_setting(self):
        g = star_graph(weights=(1, 1, 1), mesh=16)
        self.assertEqual(verify_bracketing(g, solve_pencil(assemble_global(g))).tol, 5e-2)

    def test_signed_path_after_convergence_gate(self):
        g = path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=192)
        report = bracket_report(g, count=5, converge=True)
        self.assertEqual(report.tol, 0.0)
        self.assertTrue(report.passed)
        self.assertTrue(all(row.verified for row in report.rows))
        self.assertTrue(all(row.lower_slack >= 0 and row.upper_slack >= 0 for row in report.rows))
        self.assertEqual(sorted(report.convergence), [1, 2, 3, 4, 5])
        self.assertLess(max(report.convergence.values()), 1e-3)
        payload = report.as_dict()
        self.assertTrue(payload['passed'])
        self.assertEqual(len(payload['rows']), 5)

    def test_mixed_star(self):
        report = bracket_report(MIXED_STAR, count=10)
        self.assertTrue(report.passed)
        self.assertEqual(len(report.rows), 10)

    def test_non_nested_meshes(self):
        g = path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=64)
        coarse = decoupled_spectrum(with_mesh(g, 32), DecoupledKind.DIRICHLET)
        with self.assertRaisesRegex(NonNestedError, "non-nested"):
            verify_bracketing(g, solve_pencil(assemble_global(g)), dirichlet=coarse)

    def test_truncated_rows(self):
        g = path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=4)
        report = verify_bracketing(g, solve_pencil(assemble_global(g)), count=10)
        self.assertTrue(report.truncated)
        self.assertEqual(len(report.rows), 3)
        self.assertIn('omitted', report.notes[0])
        self.assertTrue(report.passed)


class AsymptoticTest(unittest.TestCase):
    def fit(self, g):
        return asymptotic_fit(solve_pencil(assemble_global(g)), g)

    def test_single_edge(self):
        fit = self.fit(interval_graph(mesh=760))
        self.assertEqual(fit.positive_length, 1.0)
        self.assertLess(fit.slope_error, 5e-3)
        self.assertEqual(len(fit.points), 26)

    def test_signed_path_with_potential(self):
        fit = self.fit(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=760))
        self.assertLess(fit.slope_error, 2e-2)
        self.assertLessEqual(fit.max_remainder, np.pi)

    def test_star(self):
        fit = self.fit(star_graph(weights=(1, 1, 1), mesh=256))
        self.assertEqual(fit.positive_length, 3.0)
        self.assertAlmostEqual(fit.target_slope, np.pi / 3, places=12)
        self.assertLess(fit.slope_error, 2e-2)

    def test_coarse_mesh(self):
        with self.assertRaisesRegex(UnconvergedError, "mesh too coarse"):
            self.fit(interval_graph(mesh=64))
        with self.assertRaisesRegex(UnconvergedError, "positive branch holds 15 of 30"):
            self.fit(interval_graph(mesh=16))

    def test_convergence_check(self):
        changes = convergence_check(interval_graph(mesh=128), [1, 2, 3])
        self.assertEqual(sorted(changes), [1, 2, 3])
        # P1 eigenvalues converge at second order
        self.assertAlmostEqual(changes[1] / (0.75 * (np.pi / 128) ** 2 / 12), 1.0, delta=1e-2)

    def test_refined_fit_from_coarse_mesh(self):
        fit = converged_asymptotic_fit(interval_graph(mesh=16))
        self.assertGreater(fit.mesh, 16)
        self.assertLessEqual(fit.mesh, 2048)
        self.assertLess(fit.slope_error, 5e-3)
        self.assertEqual(len(fit.points), 26)

    def test_converged_mesh_keeps_fine_graph(self):
        g = interval_graph(mesh=760)
        fine, values = converged_mesh(g, range(5, 31))
        self.assertIs(fine, g)
        self.assertGreaterEqual(len(values), 30)
        self.assertLess(max(convergence_check(fine, range(5, 31)).values()), 1e-3)

    def test_refinement_cap(self):
        with self.assertRaisesRegex(UnconvergedError, r"not converged at mesh 32 \(cap 32\)"):
            converged_asymptotic_fit(interval_graph(mesh=16), max_mesh=32)

    @mock.patch.dict(os.environ, {'GRAPH_SPECTRA_ASYMPTOTIC_MAX_MESH': '64'})
    def test_refinement_cap_setting(self):
        with self.assertRaisesRegex(UnconvergedError, r"cap 64"):
            converged_asymptotic_fit(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=16))
