import json
import logging
import os
import sys

from django.conf import settings
from django.core.management.base import BaseCommand

from graph_spectra import __version__
from graph_spectra import reports
from graph_spectra.assembly.models import ConstraintError, OverConstrainedError, PositivityError
from graph_spectra.assembly.tasks import assemble_global, dump_matrix
from graph_spectra.bracketing.models import (DecoupledPositivityError, NondSign, NonNestedError,
                                             UnconvergedError)
from graph_spectra.bracketing.tasks import bracket_report, converged_asymptotic_fit
from graph_spectra.graphs.models import GraphValidationError, UnknownEndpointError
from graph_spectra.graphs.utils import load_graph, validate_graph, with_mesh
from graph_spectra.krein.models import ConeViolationError, HalfRangeDegeneracyError
from graph_spectra.krein.tasks import krein_report, probe_vectors
from graph_spectra.oracle.models import SecularShapeError, UnsupportedPotentialError
from graph_spectra.oracle.tasks import oracle_census
from graph_spectra.spectra.models import SingularMassError
from graph_spectra.spectra.tasks import solve_pencil
from graph_spectra.verification.models import FAILED, GateFailure, VerificationReport
from graph_spectra.verification.tasks import (asymptotic_gates, bracket_gates, krein_gates, oracle_gates,
                                              run_suite, verify_all)

logger = logging.getLogger('graph_spectra')

COMMANDS = ('spectrum', 'krein', 'bracket', 'asymptotics', 'oracle', 'verify-all')

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.INFO, 3: logging.DEBUG}

EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_HYPOTHESIS = 3
EXIT_GATE = 4

EXIT_STATUS = (
    (GraphValidationError, EXIT_VALIDATION),
    (UnknownEndpointError, EXIT_VALIDATION),
    (ConstraintError, EXIT_VALIDATION),
    (UnsupportedPotentialError, EXIT_VALIDATION),
    (OverConstrainedError, EXIT_VALIDATION),
    (PositivityError, EXIT_HYPOTHESIS),
    (DecoupledPositivityError, EXIT_HYPOTHESIS),
    (GateFailure, EXIT_GATE),
    (ConeViolationError, EXIT_GATE),
    (HalfRangeDegeneracyError, EXIT_GATE),
    (SingularMassError, EXIT_GATE),
    (UnconvergedError, EXIT_GATE),
    (NonNestedError, EXIT_GATE),
    (SecularShapeError, EXIT_GATE),
    (OSError, EXIT_IO),
)


class UsageError(ValueError):
    pass


HANDLED = (UsageError,) + tuple(error for error, _ in EXIT_STATUS)


def parse_window(raw):
    try:
        lo, hi = (float(part) for part in raw.split(':'))
    except ValueError:
        raise UsageError("window must be lo:hi, got %r" % raw)
    if not lo < hi:
        raise UsageError("empty window %r" % raw)
    return lo, hi


class Command(BaseCommand):
    help = 'Computes and verifies the spectrum of an indefinite Sturm-Liouville problem on a metric graph'
    requires_system_checks = []

    def get_version(self):
        return __version__

    def add_arguments(self, parser):
        parser.add_argument('command', choices=COMMANDS)
        parser.add_argument('--input', required=True, help='graph specification (JSON)')
        parser.add_argument('--out', default='.', help='output directory')
        parser.add_argument('--mesh', type=int, help='elements per edge, overrides the file')
        parser.add_argument('--window', help='eigenvalue window lo:hi (use --window=-50:50 for a negative lo)')
        parser.add_argument('--truncation', type=int, help='truncation N / row count')
        parser.add_argument('--nond-sign', choices=[sign.value for sign in NondSign], default=NondSign.FORM.value)
        parser.add_argument('--tol-bracket', type=float, help='relative bracketing tolerance')
        parser.add_argument('--probes', type=int, help='number of random probe vectors')
        parser.add_argument('--seed', type=int, help='probe RNG seed')
        parser.add_argument('--grid', type=int, help='oracle scan grid points')
        parser.add_argument('--dump-matrices', action='store_true', help='write the assembled matrices')

    def handle(self, *args, **options):
        logger.setLevel(VERBOSITY_LEVELS.get(options['verbosity'], logging.DEBUG))
        try:
            self.dispatch(options)
        except HANDLED as e:
            self.fail(e)

    def fail(self, error):
        status = EXIT_VALIDATION
        for error_class, code in EXIT_STATUS:
            if isinstance(error, error_class):
                status = code
                break
        logger.debug("%s exits with status %d", type(error).__name__, status)
        self.stderr.write(json.dumps({'error': type(error).__name__, 'message': str(error),
                                      'exit_status': status}))
        raise SystemExit(status)

    def load(self, options):
        if options['mesh'] is not None and options['mesh'] < 2:
            raise UsageError("mesh override must be at least 2, got %d" % options['mesh'])
        if options['truncation'] is not None and options['truncation'] < 1:
            raise UsageError("truncation must be positive, got %d" % options['truncation'])
        g = load_graph(options['input'])
        if options['mesh'] is not None:
            g = with_mesh(g, options['mesh'])
        report = validate_graph(g).raise_for_violations()
        logger.info("%s: %d edges (%d positive), %d constraint rows", options['input'], report.edge_count,
                    report.positive_count, report.constraint_rows)
        return g

    def dispatch(self, options):
        window = parse_window(options['window']) if options['window'] else None
        g = self.load(options)
        out = options['out']
        os.makedirs(out, exist_ok=True)

        d = assemble_global(g)
        if options['dump_matrices']:
            for name, matrix in (('form', d.form_matrix), ('signed_mass', d.signed_mass),
                                 ('unsigned_mass', d.unsigned_mass)):
                dump_matrix(matrix, os.path.join(out, '%s.txt' % name))
        s = solve_pencil(d)
        command = options['command']
        N = options['truncation']
        nond_sign = NondSign(options['nond_sign'])

        if command == 'spectrum':
            reports.write_spectrum(s, out, window)
            reports.write_eigenfunctions(s, d, out, N or 5)
        elif command == 'krein':
            probes = probe_vectors(d, options['probes'], options['seed'])
            report = krein_report(d, s, probes=probes, truncations=(N,) if N else None)
            reports.write_json(report.as_dict(), os.path.join(out, reports.KREIN_JSON))
            reports.write_gram(report, out)
            self.gate('krein', krein_gates, report)
        elif command == 'bracket':
            report = bracket_report(g, s, count=N or 10, tol=options['tol_bracket'], nond_sign=nond_sign)
            reports.write_bracket(report, out)
            self.gate('bracket', bracket_gates, report)
        elif command == 'asymptotics':
            fit = converged_asymptotic_fit(g)
            reports.write_asymptotics(fit, out)
            self.gate('asymptotics', asymptotic_gates, fit)
        elif command == 'oracle':
            census = oracle_census(g, window or (-50.0, 50.0), options['grid'], s)
            reports.write_roots(census.roots, out)
            self.gate('oracle', oracle_gates, census)
        else:
            report = verify_all(g, probes=options['probes'], seed=options['seed'],
                                truncations=(N,) if N else None, tol=options['tol_bracket'],
                                nond_sign=nond_sign, window=window or (-50.0, 50.0), grid=options['grid'])
            reports.write_json(report.as_dict(), os.path.join(out, reports.VERIFY_JSON))
            if not report.passed:
                raise GateFailure(report)
        self.stdout.write("%s: results in %s" % (command, out))

    def gate(self, name, gates, report):
        result = run_suite(name, gates, report)
        if result.status == FAILED:
            raise GateFailure(VerificationReport([result]))


def main(argv=None):
    """Console entry point; runs the command without a Django project."""
    argv = sys.argv if argv is None else argv
    if not settings.configured:
        settings.configure()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    logger.addHandler(handler)
    Command().run_from_argv(['graph-spectra', 'graph_spectra'] + list(argv[1:]))
