import logging
import math
from contextlib import contextmanager

from ..assembly.tasks import assemble_global
from ..bracketing.models import NondSign, UnconvergedError
from ..bracketing.tasks import bracket_report, converged_asymptotic_fit
from ..conf import get_setting
from ..krein.models import ConeViolationError, HalfRangeDegeneracyError
from ..krein.tasks import krein_report, probe_vectors
from ..oracle.tasks import oracle_census
from ..spectra.tasks import mirror_defect, solve_pencil, spectrum_checks
from .models import (FAILED, PASSED, SKIPPED, GateFailure, GateResult, SuiteResult, SuiteSkipped,
                     VerificationReport, gate_checked)

logger = logging.getLogger(__name__)


def record_gate(suite, name, value, limit, at_least=False):
    """
    Evaluate ``value <= limit`` (``>=`` with ``at_least``) and announce the
    result on ``gate_checked``. NaN never passes.
    """
    value, limit = float(value), float(limit)
    passed = bool(value >= limit if at_least else value <= limit)
    gate = GateResult(suite, name, value, limit, passed)
    if not passed:
        logger.warning("gate %s.%s failed: %.6g against limit %.6g", suite, name, value, limit)
    gate_checked.send(sender=GateResult, gate=gate)
    return gate


@contextmanager
def collect_gates():
    gates = []

    def receiver(sender, gate, **kwargs):
        gates.append(gate)

    gate_checked.connect(receiver, weak=False)
    try:
        yield gates
    finally:
        gate_checked.disconnect(receiver)


def run_suite(name, runner, *args, **kwargs):
    with collect_gates() as gates:
        try:
            info = runner(*args, **kwargs) or {}
        except SuiteSkipped as e:
            logger.warning("%s suite skipped: %s", name, e)
            return SuiteResult(name, SKIPPED, list(gates), reason=str(e))
    status = PASSED if all(gate.passed for gate in gates) else FAILED
    return SuiteResult(name, status, list(gates), info=info)


def spectrum_suite(d, s):
    checks = spectrum_checks(d, s)
    orthogonality = get_setting('ORTHOGONALITY_TOL')
    residual = get_setting('PENCIL_RESIDUAL_RTOL')
    for key in ('f_offdiagonal', 'f_diagonal', 'b_offdiagonal'):
        record_gate('spectrum', key, checks[key], orthogonality)
    record_gate('spectrum', 'rayleigh', checks['rayleigh'], residual)
    record_gate('spectrum', 'pencil_residual', checks['pencil_residual'], residual)
    record_gate('spectrum', 'rank_deficit', s.reduced_dimension - checks['basis_rank'], 0)
    return {
        'positive_count': len(s.positive_values),
        'negative_count': len(s.negative_values),
        'infinite_count': s.infinite_count,
        'mirror_defect': mirror_defect(s),
    }


def krein_suite(d, s, probes=None, truncations=None):
    try:
        report = krein_report(d, s, probes=probes, truncations=truncations)
    except ConeViolationError as e:
        record_gate('krein', 'cone_mismatches', 1, 0)
        return {'error': str(e)}
    except HalfRangeDegeneracyError as e:
        record_gate('krein', 'halfrange_degenerate', 1, 0)
        return {'error': str(e)}
    return krein_gates(report)


def krein_gates(report):
    projection = get_setting('PROJECTION_TOL')
    checks = report.projection_checks
    record_gate('krein', 'cone_mismatches', report.cone_mismatches, 0)
    record_gate('krein', 'vw_residual', report.max_vw_residual, get_setting('VW_RTOL'))
    record_gate('krein', 'adjoint_residual', report.adjoint_residual, get_setting('ADJOINT_RTOL'))
    for key in ('completeness', 'idempotence', 'b_orthogonality', 'f_self_adjoint', 's_f_symmetry'):
        record_gate('krein', key, checks[key], projection)
    record_gate('krein', 'abs_s_min', checks['abs_s_min'], 0.0, at_least=True)
    if report.maxmin_gaps:
        record_gate('krein', 'maxmin_gap', report.max_maxmin_gap, get_setting('MAXMIN_RTOL'))

    floors = [low for _, low, _ in report.gram_spectra]
    if floors:
        record_gate('krein', 'gram_min', min(floors), 0.0, at_least=True)
    if len(floors) > 1:
        # the Gram floor must not collapse as the truncation grows
        record_gate('krein', 'gram_floor_ratio', floors[0] / min(floors), 2.0)
    return {
        's_norm_constants': dict(report.s_norm_constants),
        'gram_spectra': [{'N': n, 'min_eig': lo, 'max_eig': hi} for n, lo, hi in report.gram_spectra],
        'notes': list(report.notes),
    }


def bracket_suite(g, s, count=10, tol=None, nond_sign=NondSign.FORM):
    if not len(s.positive_values):
        raise SuiteSkipped("no positive eigenvalues to bracket")
    return bracket_gates(bracket_report(g, s, count=count, tol=tol, nond_sign=nond_sign))


def bracket_gates(report):
    record_gate('bracket', 'failed_rows', sum(1 for row in report.rows if not row.passed), 0)
    return {
        'rows': len(report.rows),
        'tol': report.tol,
        'verified': not report.positivity_failures,
        'truncated': report.truncated,
        'notes': list(report.notes),
    }


def asymptotic_suite(g, n_range=(5, 30)):
    """
    Fit on the first refinement of ``g`` that passes the convergence gate.
    Failing to converge below the mesh cap is a failed gate.
    """
    if not g.positive_edges:
        raise SuiteSkipped("no positive edges")
    try:
        fit = converged_asymptotic_fit(g, n_range)
    except UnconvergedError as e:
        record_gate('asymptotics', 'converged', 0, 1, at_least=True)
        return {'error': str(e)}
    record_gate('asymptotics', 'converged', 1, 1, at_least=True)
    return asymptotic_gates(fit)


def asymptotic_gates(fit):
    record_gate('asymptotics', 'slope_error', fit.slope_error, get_setting('ASYMPTOTIC_SLOPE_RTOL'))
    record_gate('asymptotics', 'max_remainder', fit.max_remainder, math.pi)
    return fit.as_dict()


def oracle_suite(g, s, window=(-50.0, 50.0), grid=None):
    return oracle_gates(oracle_census(g, window, grid, s))


def oracle_gates(census):
    record_gate('oracle', 'missed', len(census.missed), 0)
    record_gate('oracle', 'spurious', len(census.spurious), 0)
    record_gate('oracle', 'count_mismatch', abs(census.fem_count - len(census.unresolved) - census.oracle_count), 0)
    record_gate('oracle', 'max_relative_error', census.max_relative_error, get_setting('ORACLE_FEM_RTOL'))
    return {
        'oracle_count': census.oracle_count,
        'fem_count': census.fem_count,
        'unresolved': list(census.unresolved),
        'suspects': list(census.suspects),
    }


def verify_all(g, probes=None, seed=None, truncations=None, count=10, tol=None, nond_sign=NondSign.FORM,
               window=(-50.0, 50.0), grid=None, raise_on_failure=False):
    """
    Solve ``g`` once and run every suite against the result. A positivity
    failure of the coupled problem propagates; everything else becomes
    gates.
    """
    d = assemble_global(g)
    s = solve_pencil(d)
    probe_set = probe_vectors(d, probes, seed)

    report = VerificationReport()
    report.suites.append(run_suite('spectrum', spectrum_suite, d, s))
    report.suites.append(run_suite('krein', krein_suite, d, s, probe_set, truncations))
    report.suites.append(run_suite('bracket', bracket_suite, g, s, count, tol, nond_sign))
    report.suites.append(run_suite('asymptotics', asymptotic_suite, g))
    report.suites.append(run_suite('oracle', oracle_suite, g, s, window, grid))

    logger.info("verify-all: %s (%d gates, %d failed, %d suites skipped)",
                'passed' if report.passed else 'FAILED', len(report.gates), len(report.failed_gates),
                sum(1 for suite in report.suites if suite.status == SKIPPED))
    if raise_on_failure and not report.passed:
        raise GateFailure(report)
    return report

