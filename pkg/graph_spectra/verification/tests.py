import json
import os
import unittest
from unittest import mock

from ..assembly.models import PositivityError
from ..assembly.tasks import assemble_global
from ..graphs.utils import interval_graph, path_graph, star_graph
from ..krein.tasks import probe_vectors
from ..spectra.tasks import solve_pencil
from .models import FAILED, PASSED, SKIPPED, GateFailure, GateResult, gate_checked
from .tasks import (asymptotic_suite, bracket_suite, collect_gates, krein_suite, oracle_suite, record_gate,
                    run_suite, spectrum_suite, verify_all)

SIGNED_PATH = path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=64)


class GateTest(unittest.TestCase):
    def test_limits(self):
        self.assertTrue(record_gate('unit', 'below', 1e-12, 1e-10).passed)
        self.assertTrue(record_gate('unit', 'equal', 0, 0).passed)
        self.assertFalse(record_gate('unit', 'above', 1e-9, 1e-10).passed)
        self.assertTrue(record_gate('unit', 'floor', 0.3, 0.0, at_least=True).passed)
        self.assertFalse(record_gate('unit', 'nan', float('nan'), 1.0).passed)

    def test_signal(self):
        received = []

        def receiver(sender, gate, **kwargs):
            received.append((sender, gate))

        gate_checked.connect(receiver)
        try:
            gate = record_gate('unit', 'signal', 1.0, 2.0)
        finally:
            gate_checked.disconnect(receiver)
        self.assertEqual(received, [(GateResult, gate)])

    def test_nested_collection(self):
        with collect_gates() as outer:
            record_gate('unit', 'first', 0, 1)
            with collect_gates() as inner:
                record_gate('unit', 'second', 2, 1)
        self.assertEqual([gate.name for gate in outer], ['first', 'second'])
        self.assertEqual([gate.name for gate in inner], ['second'])
        record_gate('unit', 'after', 0, 1)
        self.assertEqual(len(outer), 2)

    def test_run_suite_status(self):
        def failing():
            record_gate('unit', 'ok', 0, 1)
            record_gate('unit', 'bad', 2, 1)

        result = run_suite('unit', failing)
        self.assertEqual(result.status, FAILED)
        self.assertEqual([gate.passed for gate in result.gates], [True, False])
        self.assertEqual(result.info, {})


class SuiteTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.d = assemble_global(SIGNED_PATH)
        cls.s = solve_pencil(cls.d)

    def test_spectrum(self):
        result = run_suite('spectrum', spectrum_suite, self.d, self.s)
        self.assertEqual(result.status, PASSED)
        self.assertEqual(result.info['infinite_count'], 1)
        self.assertLessEqual(result.info['mirror_defect'], 1e-8)
        self.assertIn('pencil_residual', [gate.name for gate in result.gates])

    def test_krein(self):
        result = run_suite('krein', krein_suite, self.d, self.s, probe_vectors(self.d, 20))
        self.assertEqual(result.status, PASSED)
        names = {gate.name for gate in result.gates}
        self.assertTrue({'vw_residual', 'adjoint_residual', 'maxmin_gap', 'gram_floor_ratio'} <= names)

    def test_bracket(self):
        result = run_suite('bracket', bracket_suite, SIGNED_PATH, self.s)
        self.assertEqual(result.status, PASSED)
        self.assertEqual(result.info['rows'], 10)
        self.assertTrue(result.info['verified'])

    def test_bracket_on_neumann_star_is_unverified(self):
        g = star_graph(weights=(1, 1, 1), mesh=32)
        result = run_suite('bracket', bracket_suite, g, solve_pencil(assemble_global(g)))
        self.assertEqual(result.status, PASSED)
        self.assertFalse(result.info['verified'])

    def test_asymptotics_refines_coarse_mesh(self):
        result = run_suite('asymptotics', asymptotic_suite, SIGNED_PATH)
        self.assertEqual(result.status, PASSED)
        self.assertEqual([gate.name for gate in result.gates], ['converged', 'slope_error', 'max_remainder'])
        self.assertGreater(result.info['mesh'], 64)

    @mock.patch.dict(os.environ, {'GRAPH_SPECTRA_ASYMPTOTIC_MAX_MESH': '128'})
    def test_asymptotics_unconverged_at_cap_fails(self):
        result = run_suite('asymptotics', asymptotic_suite, SIGNED_PATH)
        self.assertEqual(result.status, FAILED)
        self.assertEqual([gate.name for gate in result.gates], ['converged'])
        self.assertIn('cap 128', result.info['error'])

    def test_asymptotics_without_positive_edges_is_skipped(self):
        g = path_graph(weights=(-1, -1), potentials=(1.0, 1.0), mesh=16)
        result = run_suite('asymptotics', asymptotic_suite, g)
        self.assertEqual(result.status, SKIPPED)
        self.assertEqual(result.gates, [])

    def test_asymptotics_on_fine_mesh(self):
        result = run_suite('asymptotics', asymptotic_suite, interval_graph(mesh=760))
        self.assertEqual(result.status, PASSED)
        self.assertEqual(result.info['mesh'], 760)
        self.assertEqual([gate.name for gate in result.gates], ['converged', 'slope_error', 'max_remainder'])

    def test_oracle(self):
        result = run_suite('oracle', oracle_suite, SIGNED_PATH, self.s)
        self.assertEqual(result.status, PASSED)
        self.assertEqual(result.info['oracle_count'], 4)
        self.assertEqual(result.info['fem_count'], 4)


class VerifyAllTest(unittest.TestCase):
    def test_signed_path(self):
        report = verify_all(SIGNED_PATH, probes=20)
        self.assertTrue(report.passed)
        self.assertEqual([suite.name for suite in report.suites],
                         ['spectrum', 'krein', 'bracket', 'asymptotics', 'oracle'])
        self.assertEqual(report.suite('asymptotics').status, PASSED)
        self.assertEqual(report.failed_gates, [])
        payload = json.loads(json.dumps(report.as_dict()))
        self.assertTrue(payload['passed'])

    @mock.patch.dict(os.environ, {'GRAPH_SPECTRA_PENCIL_RESIDUAL_RTOL': '0'})
    def test_failure_is_raised(self):
        with self.assertRaises(GateFailure) as caught:
            verify_all(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=16), probes=5,
                       raise_on_failure=True)
        self.assertIn('spectrum.pencil_residual', str(caught.exception))
        self.assertFalse(caught.exception.report.passed)

    def test_positivity_propagates(self):
        with self.assertRaises(PositivityError):
            verify_all(interval_graph(left='kirchhoff', right='kirchhoff', mesh=8))
