import os
import tempfile
import unittest

import numpy as np
from hypothesis import given, strategies as st

from ..graphs.models import Edge, MetricGraph, PiecewisePotential
from ..graphs.utils import interval_graph, make_condition, path_graph, star_graph
from .models import ConstraintError, PositivityError
from .tasks import assemble_edge, assemble_global, check_positivity, constraint_basis, dump_matrix


class AssembleEdgeTest(unittest.TestCase):
    def test_closed_form_element_matrices(self):
        stiffness, mass = assemble_edge(Edge('e1', 'a', 'b', 1, mesh=2))
        np.testing.assert_allclose(stiffness, [[2, -2, 0], [-2, 4, -2], [0, -2, 2]], atol=1e-14)
        np.testing.assert_allclose(mass, np.array([[2, 1, 0], [1, 4, 1], [0, 1, 2]]) / 12.0, atol=1e-15)

    def test_constant_shift(self):
        base, mass = assemble_edge(Edge('e1', 'a', 'b', 1, mesh=2))
        shifted, _ = assemble_edge(Edge('e1', 'a', 'b', 1, PiecewisePotential.constant(3.0), mesh=2))
        np.testing.assert_allclose(shifted, base + 3.0 * mass, atol=1e-14)

    def test_unaligned_breakpoint_is_integrated_exactly(self):
        # q = 2 on [0, 0.3), 0 after: ∫ q φ_i φ_j split across an element
        q = PiecewisePotential((0.0, 0.3, 1.0), (2.0, 0.0))
        stiffness, _ = assemble_edge(Edge('e1', 'a', 'b', 1, q, mesh=2))
        base, _ = assemble_edge(Edge('e1', 'a', 'b', 1, mesh=2))
        potential = stiffness - base
        # ∫₀^0.3 2 (1 - 2x)² dx, ∫₀^0.3 2 (2x)² dx, ∫₀^0.3 2 (1 - 2x) 2x dx
        self.assertAlmostEqual(potential[0, 0], 2 * (1 - 0.4 ** 3) / 6, places=14)
        self.assertAlmostEqual(potential[1, 1], 2 * 4 * 0.3 ** 3 / 3, places=14)
        self.assertAlmostEqual(potential[0, 1], 2 * (2 * 0.3 ** 2 / 2 - 4 * 0.3 ** 3 / 3), places=14)
        self.assertEqual(potential[2, 2], 0.0)

    @given(st.integers(min_value=2, max_value=40), st.floats(min_value=-5, max_value=5))
    def test_total_potential_mass(self, m, value):
        q = PiecewisePotential((0.0, 0.37, 1.0), (value, 1.0))
        stiffness, mass = assemble_edge(Edge('e1', 'a', 'b', 1, q, mesh=m))
        base, _ = assemble_edge(Edge('e1', 'a', 'b', 1, mesh=m))
        ones = np.ones(m + 1)
        # 1ᵀ (K_q) 1 = ∫ q
        self.assertAlmostEqual(ones @ (stiffness - base) @ ones, 0.37 * value + 0.63, places=10)
        self.assertAlmostEqual(ones @ mass @ ones, 1.0, places=12)


class AssembleGlobalTest(unittest.TestCase):
    def test_dirichlet_elimination(self):
        d = assemble_global(interval_graph(mesh=4))
        stiffness, _ = assemble_edge(Edge('e1', 'a', 'b', 1, mesh=4))
        self.assertEqual(d.dof_count, 3)
        np.testing.assert_allclose(d.form_matrix, stiffness[1:4, 1:4], atol=1e-13)

    def test_robin_boundary_term(self):
        d = assemble_global(interval_graph(mesh=4, left='robin', right='robin', f=(0.7, 1.3)))
        stiffness, _ = assemble_edge(Edge('e1', 'a', 'b', 1, mesh=4))
        expected = stiffness.copy()
        expected[4, 4] += 1.3
        expected[0, 0] -= 0.7
        self.assertEqual(d.dof_count, 5)
        np.testing.assert_allclose(d.form_matrix, expected, atol=1e-13)

    def test_signed_path_by_hand(self):
        d = assemble_global(path_graph(weights=(1, -1), mesh=4))
        self.assertEqual(d.dof_count, 7)
        _, mass = assemble_edge(Edge('e1', 'a', 'b', 1, mesh=4))
        h6 = 0.25 / 6.0
        # interior dofs of e1, the shared dof, interior dofs of e2
        expected = np.zeros((7, 7))
        expected[:3, :3] = mass[1:4, 1:4]
        expected[4:, 4:] = -mass[1:4, 1:4]
        shared = [c for c in range(7) if np.count_nonzero(d.constraint_basis[:, c]) == 2][0]
        self.assertEqual(shared, 3)
        expected[3, 3] = 2 * h6 - 2 * h6
        expected[2, 3] = expected[3, 2] = h6
        expected[3, 4] = expected[4, 3] = -h6
        np.testing.assert_allclose(d.signed_mass, expected, atol=1e-15)

    def test_symmetry(self):
        d = assemble_global(star_graph(weights=(1, 1, -1), potentials=(1.0, ((0.0, 0.4, 1.0), (2.0, 0.0)), 0.5), mesh=16))
        for matrix in (d.form_matrix, d.signed_mass, d.unsigned_mass):
            self.assertLessEqual(np.abs(matrix - matrix.T).max(), 1e-13 * np.abs(matrix).max())

    def test_signed_mass_definite_per_sign(self):
        d = assemble_global(path_graph(weights=(1, -1), mesh=8))
        plus = np.abs(d.constraint_basis[d.positive_mask]).sum(axis=0) > 0
        only_plus = plus & ~(np.abs(d.constraint_basis[~d.positive_mask]).sum(axis=0) > 0)
        only_minus = ~plus
        self.assertTrue(np.all(np.linalg.eigvalsh(d.signed_mass[np.ix_(only_plus, only_plus)]) > 0))
        self.assertTrue(np.all(np.linalg.eigvalsh(d.signed_mass[np.ix_(only_minus, only_minus)]) < 0))

    def test_kernel_of_neumann_form(self):
        d = assemble_global(interval_graph(mesh=8, left='robin', right='robin'))
        np.testing.assert_allclose(d.form_matrix @ np.ones(9), 0.0, atol=1e-12)

    def test_expand_respects_continuity(self):
        g = star_graph(weights=(1, -1, 1), mesh=4)
        d = assemble_global(g)
        full = d.expand(np.random.RandomState(0).randn(d.dof_count))
        center = [full[d.endpoint_map.dof(ep)] for ep in g.incident_endpoints('c')]
        self.assertEqual(len(set(center)), 1)
        np.testing.assert_allclose(d.constraint_rows @ full, 0.0, atol=1e-14)

    def test_dependent_rows_rejected(self):
        with self.assertRaisesRegex(ConstraintError, "constraints not independent"):
            constraint_basis([[1.0, -1.0, 0.0], [2.0, -2.0, 0.0]])

    def test_custom_periodic_vertex(self):
        # a loop: both ends of e1 meet at one vertex, continuity plus f ≡ 0
        edge = Edge('e1', 'p', 'p', 1, PiecewisePotential.constant(1.0), mesh=8)
        g = MetricGraph((edge,), ('p',), (make_condition('p', 'custom', rows=[[1.0, -1.0]]),))
        d = assemble_global(g)
        self.assertEqual(d.dof_count, 8)


class PositivityTest(unittest.TestCase):
    def test_dirichlet_positive(self):
        report = check_positivity(assemble_global(interval_graph(mesh=64)))
        self.assertTrue(report.positive)
        self.assertAlmostEqual(report.rho_1 / np.pi ** 2, 1.0, delta=1e-3)

    def test_neumann_kernel(self):
        d = assemble_global(interval_graph(mesh=16, left='robin', right='robin'))
        with self.assertRaisesRegex(PositivityError, "L not positive definite"):
            check_positivity(d)
        self.assertFalse(check_positivity(d, raise_on_failure=False).positive)

    def test_neumann_shifted(self):
        report = check_positivity(assemble_global(interval_graph(potential=1.0, mesh=16, left='robin', right='robin')))
        self.assertTrue(report.positive)
        self.assertAlmostEqual(report.rho_1, 1.0, places=10)


class DumpMatrixTest(unittest.TestCase):
    def test_entries(self):
        d = assemble_global(interval_graph(mesh=4))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'form.txt')
            dump_matrix(d.form_matrix, path)
            with open(path) as handle:
                lines = handle.read().splitlines()
        self.assertEqual(len(lines), 7)
        self.assertEqual(lines[0], '0 0 8')
        self.assertIn('1 0 -4', lines)
