import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from ..assembly.models import DiscreteForm
from ..assembly.tasks import assemble_global
from ..graphs.models import EndpointMap
from ..graphs.utils import interval_graph, path_graph, star_graph
from ..spectra.tasks import solve_pencil
from .models import (C_MINUS, C_PLUS, DimensionMismatchError, HalfRangeDegeneracyError, PositiveConeEmptyError)
from .tasks import (build_S, classify_cone, halfrange_gram, indefinite_inner, krein_report, maxmin_value,
                    probe_vectors, projection_checks, s_norm, s_norm_constants, spectral_projections,
                    verify_adjoint_identity, verify_vw_identity)

MIXED_STAR = star_graph(weights=(1, 1, -1), potentials=(1.0, ((0.0, 0.4, 1.0), (2.0, 0.0)), 0.5), mesh=24)


def solved(g):
    d = assemble_global(g)
    return d, solve_pencil(d)


class IndefiniteInnerTest(unittest.TestCase):
    def setUp(self):
        self.d = assemble_global(path_graph(weights=(1, -1), mesh=8))

    def test_sign_follows_edge(self):
        # reduced dofs 0..6 are the interior of e1, 8..14 the interior of e2
        rng = np.random.default_rng(3)
        plus, minus = np.zeros(15), np.zeros(15)
        plus[:7] = rng.standard_normal(7)
        minus[8:] = rng.standard_normal(7)
        self.assertAlmostEqual(indefinite_inner(plus, plus, self.d), plus @ self.d.unsigned_mass @ plus, places=14)
        self.assertAlmostEqual(indefinite_inner(minus, minus, self.d), -(minus @ self.d.unsigned_mass @ minus),
                               places=14)
        self.assertGreater(indefinite_inner(plus, plus, self.d), 0)

    def test_eigenvectors_orthogonal(self):
        s = solve_pencil(self.d)
        self.assertLessEqual(abs(indefinite_inner(s.eigenvector(1), s.eigenvector(2), self.d)), 1e-10)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            indefinite_inner(np.zeros(3), np.zeros(15), self.d)


class ConeTest(unittest.TestCase):
    def test_all_positive(self):
        d, s = solved(interval_graph(mesh=32))
        self.assertTrue(all(entry.tag == C_PLUS for entry in classify_cone(s, d)))

    def test_mirrored_path(self):
        d, s = solved(path_graph(weights=(1, -1), mesh=32))
        table = {entry.index: entry for entry in classify_cone(s, d)}
        self.assertEqual(table[1].tag, C_PLUS)
        self.assertEqual(table[-1].tag, C_MINUS)
        self.assertAlmostEqual(table[-1].eigenvalue, -table[1].eigenvalue, places=8)

    def test_no_mismatch_on_mixed_star(self):
        d, s = solved(MIXED_STAR)
        table = classify_cone(s, d)
        self.assertEqual(len(table), len(s))
        self.assertTrue(all((entry.tag == C_PLUS) == (entry.eigenvalue > 0) for entry in table))


class OperatorTest(unittest.TestCase):
    def test_diagonal_S(self):
        n = 2
        form, signed = np.diag([2.0, 3.0]), np.diag([1.0, -1.0])
        d = DiscreteForm(form, signed, np.eye(n), np.eye(n), form, signed, np.eye(n),
                         np.array([1.0, -1.0]), {}, EndpointMap({}))
        np.testing.assert_allclose(build_S(d), np.diag([0.5, -1.0 / 3.0]), atol=1e-15)

    def test_S_matches_pencil(self):
        d, s = solved(MIXED_STAR)
        S = build_S(d)
        vectors = s.vectors
        np.testing.assert_allclose(S @ vectors, vectors / s.values, atol=1e-10 * np.abs(vectors).max())

    def test_s_norm_of_eigenvectors(self):
        d, s = solved(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=32))
        self.assertAlmostEqual(s_norm(s.eigenvector(1), d, s), 1 / np.sqrt(s.eigenvalue(1)), places=10)
        self.assertAlmostEqual(s_norm(s.eigenvector(-1), d, s), 1 / np.sqrt(-s.eigenvalue(-1)), places=10)
        self.assertEqual(s_norm(np.zeros(d.dof_count), d, s), 0.0)


class ProjectionTest(unittest.TestCase):
    def test_projector_algebra(self):
        for g in (MIXED_STAR, path_graph(weights=(1, -1), mesh=16)):
            d, s = solved(g)
            checks = projection_checks(d, s, probe_vectors(d, 20))
            with self.subTest(graph=g.mesh_signature):
                self.assertLessEqual(checks['completeness'], 1e-10)
                self.assertLessEqual(checks['idempotence'], 1e-10)
                self.assertLessEqual(checks['f_self_adjoint'], 1e-11)
                self.assertLessEqual(checks['b_orthogonality'], 1e-10)
                self.assertEqual(checks['q_complement'], 0.0)
                self.assertGreater(checks['abs_s_min'], 0.0)
                self.assertLessEqual(checks['s_f_symmetry'], 1e-11)

    def test_infinite_part_only_at_sign_change(self):
        d, s = solved(path_graph(weights=(1, -1), mesh=16))
        self.assertEqual(projection_checks(d, s, probe_vectors(d, 2))['infinite_rank'], 1)
        d, s = solved(interval_graph(mesh=16))
        projections = spectral_projections(d, s)
        np.testing.assert_allclose(projections.p_plus, np.eye(d.dof_count), atol=1e-10)
        self.assertEqual(projections.p_minus.shape, (d.dof_count, d.dof_count))
        np.testing.assert_array_equal(projections.p_minus, 0.0)


class IdentityTest(unittest.TestCase):
    def test_vw_identity(self):
        d, s = solved(path_graph(weights=(1, -1), mesh=64))
        residuals = verify_vw_identity(d, s, probe_vectors(d, 100, seed=0))
        self.assertEqual(len(residuals), 100)
        self.assertLessEqual(max(residuals), 1e-8)
        self.assertEqual(verify_vw_identity(d, s, [np.zeros(d.dof_count)]), [0.0])

    @settings(max_examples=10, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    def test_vw_identity_on_mixed_star(self, seed):
        d, s = solved(MIXED_STAR)
        self.assertLessEqual(max(verify_vw_identity(d, s, probe_vectors(d, 5, seed=seed))), 1e-8)

    def test_adjoint_identity(self):
        for g in (path_graph(weights=(1, -1), mesh=32), MIXED_STAR):
            d, s = solved(g)
            self.assertLessEqual(verify_adjoint_identity(d, s), 1e-10)

    def test_norm_constants(self):
        d, s = solved(interval_graph(mesh=32))
        constants = s_norm_constants(d, s, probe_vectors(d, 100))
        # without a negative part the S-norm is the L² norm
        for key in ('probe_min', 'probe_max', 'pencil_min', 'pencil_max'):
            self.assertAlmostEqual(constants[key], 1.0, places=8)

    def test_norm_constants_indefinite(self):
        d, s = solved(path_graph(weights=(1, -1), mesh=32))
        constants = s_norm_constants(d, s, probe_vectors(d, 100))
        self.assertGreater(constants['probe_min'], 0.0)
        self.assertTrue(np.isfinite(constants['probe_max'] / constants['probe_min']))


class MaxMinTest(unittest.TestCase):
    def test_first_value_is_bottom(self):
        d, s = solved(interval_graph(mesh=64))
        self.assertAlmostEqual(maxmin_value(0, d, s) / s.eigenvalue(1), 1.0, places=10)
        self.assertAlmostEqual(maxmin_value(0, d, s) / np.pi ** 2, 1.0, places=3)

    def test_signed_path(self):
        d, s = solved(path_graph(weights=(1, -1), mesh=32))
        for n in range(6):
            with self.subTest(n=n):
                self.assertLessEqual(abs(maxmin_value(n, d, s) - s.eigenvalue(n + 1)) / s.eigenvalue(n + 1), 1e-8)

    def test_mixed_star_both_branches(self):
        d, s = solved(MIXED_STAR)
        for n in range(6):
            with self.subTest(n=n):
                self.assertLessEqual(abs(maxmin_value(n, d, s) / s.eigenvalue(n + 1) - 1.0), 1e-8)
        for n in range(3):
            with self.subTest(n=-n):
                self.assertLessEqual(abs(maxmin_value(n, d, s, branch=-1) / s.eigenvalue(-(n + 1)) - 1.0), 1e-8)

    def test_empty_cone(self):
        d, s = solved(interval_graph(mesh=4))
        with self.assertRaisesRegex(PositiveConeEmptyError, "positive cone empty"):
            maxmin_value(3, d, s)
        with self.assertRaises(PositiveConeEmptyError):
            maxmin_value(0, d, s, branch=-1)


class HalfRangeTest(unittest.TestCase):
    def test_all_positive_graph_is_orthonormal(self):
        d, s = solved(star_graph(weights=(1, 1, 1), mesh=16))
        N, lo, hi = halfrange_gram(s, d, 10)
        self.assertEqual(N, 10)
        self.assertAlmostEqual(lo, 1.0, places=10)
        self.assertAlmostEqual(hi, 1.0, places=10)

    def test_single_function(self):
        d, s = solved(path_graph(weights=(1, -1), mesh=16))
        _, lo, hi = halfrange_gram(s, d, 1)
        self.assertAlmostEqual(lo, 1.0, places=14)
        self.assertAlmostEqual(hi, 1.0, places=14)

    def test_gram_floor_does_not_degenerate(self):
        d, s = solved(path_graph(weights=(1, -1), mesh=64))
        floors = [halfrange_gram(s, d, N)[1] for N in (5, 10, 15, 20)]
        self.assertGreater(floors[0], 0.0)
        self.assertTrue(all(floor >= 0.5 * floors[0] for floor in floors))

    def test_truncation_too_long(self):
        d, s = solved(interval_graph(mesh=4))
        with self.assertRaises(DimensionMismatchError):
            halfrange_gram(s, d, 4)

    def test_vanishing_restriction(self):
        n = 2
        form, signed = np.diag([2.0, 3.0]), np.diag([1.0, 1.0])
        d = DiscreteForm(form, signed, np.eye(n), np.eye(n), form, signed, np.eye(n),
                         np.array([-1.0, -1.0]), {}, EndpointMap({}))
        with self.assertRaisesRegex(HalfRangeDegeneracyError, "vanishes"):
            halfrange_gram(solve_pencil(d), d, 1)


class ReportTest(unittest.TestCase):
    def test_signed_path_report(self):
        d, s = solved(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=64))
        report = krein_report(d, s)
        self.assertEqual(report.cone_mismatches, 0)
        self.assertEqual(len(report.vw_residuals), 100)
        self.assertLessEqual(report.max_vw_residual, 1e-8)
        self.assertLessEqual(report.max_maxmin_gap, 1e-8)
        self.assertEqual([row[0] for row in report.gram_spectra], [5, 10, 15, 20])
        payload = report.as_dict()
        self.assertEqual(set(payload['maxmin_gaps']), {'0', '1', '2', '3', '4', '5'})
        self.assertEqual(payload['notes'], [])

    def test_short_branch_is_noted(self):
        d, s = solved(interval_graph(mesh=8))
        report = krein_report(d, s, probes=probe_vectors(d, 5))
        self.assertEqual([row[0] for row in report.gram_spectra], [5])
        self.assertEqual(len(report.notes), 3)
