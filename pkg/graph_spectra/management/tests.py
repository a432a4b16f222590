import csv
import json
import math
import os
import tempfile
import unittest
from io import StringIO
from unittest import mock

import numpy as np
from django.core.management import call_command

import graph_spectra
from graph_spectra import __version__, reports
from graph_spectra.apps import GraphSpectraConfig

from ..graphs.utils import dump_graph, interval_graph, path_graph
from .commands.graph_spectra import Command, UsageError, parse_window

DOCS = os.path.join(os.path.dirname(__file__), '..', '..', 'docs', 'graphs')


def read_rows(path):
    with open(path, newline='') as handle:
        return list(csv.reader(handle))


class CommandTestCase(unittest.TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = tmp.name
        self.stdout = StringIO()
        self.stderr = StringIO()

    def graph_file(self, g, name='graph.json'):
        path = os.path.join(self.tmp, name)
        dump_graph(g, path)
        return path

    def run_command(self, command, graph, *args, out='out'):
        out = os.path.join(self.tmp, out)
        call_command(Command(), command, '--input', graph, '--out', out, *args,
                     stdout=self.stdout, stderr=self.stderr)
        return out

    def assert_exit(self, status, command, graph, *args):
        with self.assertRaises(SystemExit) as caught:
            self.run_command(command, graph, *args)
        self.assertEqual(caught.exception.code, status)
        error = json.loads(self.stderr.getvalue())
        self.assertEqual(error['exit_status'], status)
        return error

    def read_bytes(self, *parts):
        with open(os.path.join(self.tmp, *parts), 'rb') as handle:
            return handle.read()


class SpectrumCommandTest(CommandTestCase):
    def test_interval(self):
        out = self.run_command('spectrum', os.path.join(DOCS, 'interval_dirichlet.json'))
        rows = read_rows(os.path.join(out, 'spectrum.csv'))
        self.assertEqual(rows[0], ['branch_index', 'lambda'])
        self.assertEqual(rows[1][0], '1')
        self.assertAlmostEqual(float(rows[1][1]) / math.pi ** 2, 1.0, places=3)
        self.assertTrue(all(int(index) > 0 for index, _ in rows[1:]))

        for index in range(1, 6):
            self.assertTrue(os.path.exists(os.path.join(out, 'eigenfunction_%d.csv' % index)))
        self.assertFalse(os.path.exists(os.path.join(out, 'eigenfunction_6.csv')))
        self.assertFalse(os.path.exists(os.path.join(out, 'eigenfunction_-1.csv')))

        samples = read_rows(os.path.join(out, 'eigenfunction_1.csv'))
        self.assertEqual(samples[0], ['edge_id', 'x', 'value'])
        self.assertEqual(len(samples), 1 + 65)
        self.assertAlmostEqual(float(samples[1][2]), 0.0, places=12)

    def test_window_and_mesh(self):
        graph = self.graph_file(path_graph(weights=(1, -1)))
        out = self.run_command('spectrum', graph, '--mesh', '16', '--window=-50:50', '--truncation', '2')
        values = [float(value) for _, value in read_rows(os.path.join(out, 'spectrum.csv'))[1:]]
        self.assertEqual(len(values), 4)
        self.assertTrue(all(-50 < value < 50 for value in values))
        for name in ('eigenfunction_1.csv', 'eigenfunction_2.csv', 'eigenfunction_-1.csv', 'eigenfunction_-2.csv'):
            self.assertTrue(os.path.exists(os.path.join(out, name)))

    def test_dump_matrices(self):
        graph = self.graph_file(interval_graph(mesh=4))
        out = self.run_command('spectrum', graph, '--dump-matrices')
        for name in ('form.txt', 'signed_mass.txt', 'unsigned_mass.txt'):
            with open(os.path.join(out, name)) as handle:
                lines = handle.read().splitlines()
            self.assertTrue(lines)
            i, j, value = lines[0].split()
            self.assertEqual((int(i), int(j)), (0, 0))
            float(value)

    def test_reruns_are_identical(self):
        graph = self.graph_file(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=16))
        self.run_command('spectrum', graph, out='first')
        self.run_command('spectrum', graph, out='second')
        for name in ('spectrum.csv', 'eigenfunction_1.csv', 'eigenfunction_-1.csv'):
            self.assertEqual(self.read_bytes('first', name), self.read_bytes('second', name))

    def test_neumann_edge_is_outside_hypotheses(self):
        graph = self.graph_file(interval_graph(left='kirchhoff', right='kirchhoff', mesh=8))
        error = self.assert_exit(3, 'spectrum', graph)
        self.assertEqual(error['error'], 'PositivityError')
        self.assertIn('L not positive definite', error['message'])


class ArgumentErrorTest(CommandTestCase):
    def test_bad_window(self):
        graph = os.path.join(DOCS, 'interval_dirichlet.json')
        self.assertIn('empty window', self.assert_exit(2, 'spectrum', graph, '--window', '5:1')['message'])
        self.stderr = StringIO()
        self.assertEqual(self.assert_exit(2, 'oracle', graph, '--window', 'wide')['error'], 'UsageError')

    def test_bad_mesh(self):
        self.assert_exit(2, 'spectrum', os.path.join(DOCS, 'interval_dirichlet.json'), '--mesh', '1')

    def test_invalid_json(self):
        path = os.path.join(self.tmp, 'broken.json')
        with open(path, 'w') as handle:
            handle.write('{"edges": [')
        self.assertEqual(self.assert_exit(2, 'spectrum', path)['error'], 'GraphValidationError')

    def test_ragged_custom_rows(self):
        path = os.path.join(self.tmp, 'ragged.json')
        with open(os.path.join(DOCS, 'signed_path.json')) as handle:
            data = json.load(handle)
        data['vertices'][1]['condition'] = {'type': 'custom', 'rows': [[1, -1], [1]]}
        with open(path, 'w') as handle:
            json.dump(data, handle)
        error = self.assert_exit(2, 'spectrum', path)
        self.assertEqual(error['error'], 'GraphValidationError')
        self.assertIn('unequal lengths', error['message'])

    def test_missing_file(self):
        self.assert_exit(1, 'spectrum', os.path.join(self.tmp, 'missing.json'))

    def test_parse_window(self):
        self.assertEqual(parse_window('-50:50'), (-50.0, 50.0))
        with self.assertRaises(UsageError):
            parse_window('1:2:3')


class AnalysisCommandTest(CommandTestCase):
    def setUp(self):
        super().setUp()
        self.signed_path = self.graph_file(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=64))

    def test_krein(self):
        graph = self.graph_file(path_graph(weights=(1, -1), potentials=(1.0, 1.0), mesh=16), 'coarse.json')
        args = ('--probes', '5', '--truncation', '5')
        self.run_command('krein', graph, *args, out='first')
        self.run_command('krein', graph, *args, out='second')
        report = json.loads(self.read_bytes('first', 'krein.json'))
        self.assertEqual(report['cone_mismatches'], 0)
        self.assertEqual(read_rows(os.path.join(self.tmp, 'first', 'gram.csv'))[0], ['N', 'min_eig', 'max_eig'])
        for name in ('krein.json', 'gram.csv'):
            self.assertEqual(self.read_bytes('first', name), self.read_bytes('second', name))

    def test_bracket(self):
        out = self.run_command('bracket', self.signed_path)
        rows = read_rows(os.path.join(out, 'bracket.csv'))
        self.assertEqual(rows[0], ['n', 'lambda_N', 'lambda', 'lambda_D', 'pass', 'lower_slack',
                                   'upper_slack', 'verified'])
        self.assertEqual(len(rows), 11)
        self.assertTrue(all(row[4] == 'true' for row in rows[1:]))
        with open(os.path.join(out, 'bracket.json')) as handle:
            self.assertTrue(json.load(handle)['passed'])

    def test_oracle(self):
        out = self.run_command('oracle', os.path.join(DOCS, 'interval_dirichlet.json'), '--window=0:50')
        rows = read_rows(os.path.join(out, 'oracle.csv'))
        self.assertEqual([row[0] for row in rows[1:]], ['1', '2'])
        self.assertAlmostEqual(float(rows[1][1]), math.pi ** 2, places=7)
        self.assertAlmostEqual(float(rows[2][1]), 4 * math.pi ** 2, places=6)

    def test_asymptotics_refines_mesh(self):
        out = self.run_command('asymptotics', self.graph_file(interval_graph(mesh=64)))
        rows = read_rows(os.path.join(out, 'asymptotics.csv'))
        self.assertEqual(rows[0], ['n', 'sqrt_lambda', 'model'])
        self.assertEqual([row[0] for row in rows[1:]], [str(n) for n in range(5, 31)])
        with open(os.path.join(out, 'asymptotics.json')) as handle:
            fit = json.load(handle)
        self.assertGreater(fit['mesh'], 64)
        self.assertLess(fit['slope_error'], 2e-2)

    @mock.patch.dict(os.environ, {'GRAPH_SPECTRA_ASYMPTOTIC_MAX_MESH': '32'})
    def test_asymptotics_unconverged_at_cap(self):
        error = self.assert_exit(4, 'asymptotics', self.graph_file(interval_graph(mesh=16)))
        self.assertEqual(error['error'], 'UnconvergedError')
        self.assertIn('mesh too coarse', error['message'])

    def test_verify_all(self):
        out = self.run_command('verify-all', self.signed_path, '--probes', '20')
        with open(os.path.join(out, 'verify.json')) as handle:
            report = json.load(handle)
        self.assertTrue(report['passed'])
        self.assertEqual(report['failed_gates'], [])
        self.assertEqual([suite['name'] for suite in report['suites']],
                         ['spectrum', 'krein', 'bracket', 'asymptotics', 'oracle'])
        self.assertEqual(report['suites'][3]['status'], 'passed')
        self.assertEqual(self.stderr.getvalue(), '')


class ReportFormatTest(CommandTestCase):
    def test_json_floats_round_trip(self):
        path = reports.write_json({'value': 0.1 + 0.2, 'tiny': 1e-300, 'nan': np.nan, 'flag': np.bool_(True)},
                                  os.path.join(self.tmp, 'floats.json'))
        text = self.read_bytes('floats.json').decode()
        self.assertIn('"value": 0.30000000000000004', text)
        self.assertTrue(text.endswith('}\n'))
        with open(path) as handle:
            payload = json.load(handle)
        self.assertEqual(payload['value'], 0.1 + 0.2)
        self.assertEqual(payload['tiny'], 1e-300)
        self.assertIsNone(payload['nan'])
        self.assertIs(payload['flag'], True)

    def test_csv_cells(self):
        self.assertEqual(reports.format_cell(0.1), '0.10000000000000001')
        self.assertEqual(reports.format_cell(np.bool_(False)), 'false')
        self.assertEqual(reports.format_cell(3), '3')


class PackageTest(unittest.TestCase):
    def test_version_and_app_config(self):
        self.assertEqual(Command().get_version(), __version__)
        self.assertEqual(GraphSpectraConfig.name, 'graph_spectra')
        self.assertFalse(hasattr(graph_spectra, 'default_app_config'))
