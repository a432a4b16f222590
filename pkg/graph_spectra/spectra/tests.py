import os
import unittest

import numpy as np
from hypothesis import given, strategies as st
from scipy import optimize

from ..assembly.models import DiscreteForm, PositivityError
from ..assembly.tasks import assemble_global
from ..graphs.models import EndpointMap
from ..graphs.utils import interval_graph, load_graph, path_graph, reverse_edge, star_graph, with_mesh
from .models import SingularMassError, SpectrumResult, UnknownBranchIndexError, spectrum_solved
from .tasks import eigenfunction_values, mirror_defect, pencil_eigenvalues, solve_pencil, spectrum_checks

MIXED_STAR = os.path.join(os.path.dirname(__file__), "..", "..", "docs", "graphs", "mixed_star.json")


def diagonal_form(form, signed):
    n = len(form)
    form, signed = np.diag(np.asarray(form, dtype=float)), np.diag(np.asarray(signed, dtype=float))
    return DiscreteForm(
        form_matrix=form, signed_mass=signed, unsigned_mass=np.eye(n), constraint_basis=np.eye(n),
        full_form=form, full_signed_mass=signed, full_unsigned_mass=np.eye(n),
        dof_signs=np.sign(np.diag(signed)), edge_dof_slices={}, endpoint_map=EndpointMap({}),
    )


def signed_path_root():
    """ω₁ with tan ω + tanh ω = 0."""
    return optimize.brentq(lambda w: np.tan(w) + np.tanh(w), 2.0, 2.5, xtol=1e-14)


class SolvePencilTest(unittest.TestCase):
    def test_diagonal_pencil(self):
        s = solve_pencil(diagonal_form([2.0, 3.0], [1.0, -1.0]))
        np.testing.assert_allclose(s.positive_values, [2.0])
        np.testing.assert_allclose(s.negative_values, [-3.0])
        self.assertEqual(s.indices, [1, -1])
        self.assertEqual(s.reduced_dimension, 2)

    def test_singular_mass(self):
        with self.assertRaisesRegex(SingularMassError, "singular signed mass"):
            solve_pencil(diagonal_form([2.0, 3.0], [1.0, 0.0]))

    def test_dirichlet_interval(self):
        s = solve_pencil(assemble_global(interval_graph(mesh=64)))
        self.assertLessEqual(abs(s.eigenvalue(1) / np.pi ** 2 - 1.0), 5e-4)
        self.assertLessEqual(abs(s.eigenvalue(2) / (4 * np.pi ** 2) - 1.0), 2e-3)
        self.assertLessEqual(abs(s.eigenvalue(5) / (25 * np.pi ** 2) - 1.0), 1e-2)
        self.assertEqual(len(s.negative_values), 0)
        self.assertEqual(len(s), 63)

    def test_quadratic_convergence(self):
        errors = [solve_pencil(assemble_global(interval_graph(mesh=m))).eigenvalue(1) - np.pi ** 2
                  for m in (64, 128)]
        self.assertTrue(all(e > 0 for e in errors))
        self.assertTrue(3.2 <= errors[0] / errors[1] <= 5.0)

    def test_signed_path(self):
        s = solve_pencil(assemble_global(path_graph(weights=(1, -1), mesh=128)))
        self.assertLessEqual(abs(s.eigenvalue(1) / signed_path_root() ** 2 - 1.0), 1e-3)
        self.assertLessEqual(mirror_defect(s), 1e-8)
        # odd-dimensional mirror-symmetric pencil: one μ = 0 mode at the sign change
        self.assertEqual(s.infinite_count, 1)
        self.assertEqual(len(s) + s.infinite_count, s.reduced_dimension)

    def test_positivity_propagates(self):
        with self.assertRaisesRegex(PositivityError, "L not positive definite"):
            solve_pencil(assemble_global(interval_graph(mesh=16, left='robin', right='robin')))

    def test_unknown_index(self):
        s = solve_pencil(assemble_global(interval_graph(mesh=8)))
        with self.assertRaises(UnknownBranchIndexError):
            s.eigenvalue(-1)
        with self.assertRaises(UnknownBranchIndexError):
            s.eigenvector(8)

    def test_signal(self):
        received = []

        def receiver(sender, form, spectrum, **kwargs):
            received.append((form, spectrum))

        spectrum_solved.connect(receiver, sender=SpectrumResult, weak=False)
        try:
            d = assemble_global(interval_graph(mesh=8))
            s = solve_pencil(d)
        finally:
            spectrum_solved.disconnect(receiver, sender=SpectrumResult)
        self.assertEqual(received, [(d, s)])

    def test_pencil_eigenvalues_match(self):
        d = assemble_global(star_graph(weights=(1, 1, -1), mesh=16))
        s = solve_pencil(d)
        np.testing.assert_allclose(pencil_eigenvalues(d, 6), s.positive_values[:6], rtol=1e-10)

    @given(st.floats(min_value=0.0, max_value=20.0))
    def test_constant_shift_on_positive_edge(self, c):
        base = solve_pencil(assemble_global(interval_graph(mesh=16))).positive_values
        shifted = solve_pencil(assemble_global(interval_graph(potential=c, mesh=16))).positive_values
        np.testing.assert_allclose(shifted, base + c, rtol=1e-10)


class SpectrumChecksTest(unittest.TestCase):
    graphs = {
        'interval': interval_graph(mesh=64),
        'signed_path': path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=64),
        'mixed_star': star_graph(weights=(1, 1, -1), potentials=(1.0, ((0.0, 0.4, 1.0), (2.0, 0.0)), 0.5),
                                 mesh=32),
    }

    def test_orthogonality_and_residuals(self):
        for name, g in self.graphs.items():
            d = assemble_global(g)
            checks = spectrum_checks(d, solve_pencil(d))
            with self.subTest(graph=name):
                self.assertLessEqual(checks['f_offdiagonal'], 1e-10)
                self.assertLessEqual(checks['f_diagonal'], 1e-10)
                self.assertLessEqual(checks['b_offdiagonal'], 1e-10)
                self.assertLessEqual(checks['rayleigh'], 1e-9)
                self.assertLessEqual(checks['pencil_residual'], 1e-9)
                self.assertEqual(checks['basis_rank'], d.dof_count)
                self.assertTrue(checks['real'])

    def test_reversal_invariance(self):
        g = with_mesh(load_graph(MIXED_STAR), 16)
        before = solve_pencil(assemble_global(g)).values
        for edge in g.edges:
            after = solve_pencil(assemble_global(reverse_edge(g, edge.id))).values
            np.testing.assert_allclose(after, before, rtol=1e-9)


class EigenfunctionTest(unittest.TestCase):
    def test_first_dirichlet_mode(self):
        d = assemble_global(interval_graph(mesh=64))
        x, values = eigenfunction_values(solve_pencil(d), d, 1)['e1']
        values = values / values[np.argmax(np.abs(values))]
        self.assertLessEqual(np.abs(values - np.sin(np.pi * x)).max(), 1e-3)

    def test_constraints_and_continuity(self):
        g = path_graph(weights=(1, -1), mesh=32)
        d = assemble_global(g)
        s = solve_pencil(d)
        for index in (1, 2, -1, -3):
            sampled = eigenfunction_values(s, d, index)
            full = d.expand(s.eigenvector(index))
            np.testing.assert_allclose(d.constraint_rows @ full, 0.0, atol=1e-12)
            self.assertEqual(sampled['e1'][1][-1], sampled['e2'][1][0])
