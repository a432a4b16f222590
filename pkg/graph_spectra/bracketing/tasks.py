import dataclasses
import logging
import math

import numpy as np
from scipy import linalg

from ..assembly.tasks import assemble_global, check_positivity
from ..conf import get_setting
from ..graphs.models import Endpoint, MetricGraph
from ..graphs.utils import make_condition, negate_weights, refined
from ..spectra.tasks import pencil_eigenvalues, solve_pencil
from .models import (AsymptoticFit, BracketReport, BracketRow, DecoupledKind, DecoupledPositivityError,
                     DecoupledSpectrum, Multiplicity, NondSign, NonNestedError, UnconvergedError)

logger = logging.getLogger(__name__)


def edge_problem(g, edge, kind, nond_sign=NondSign.FORM):
    """
    The edge cut loose from the graph as a one-edge graph, carrying Dirichlet
    conditions or the graph's f at both ends. The weight is set to +1: the
    scalar problem is solved for μ and the sign applied when merging.
    """
    kind = DecoupledKind(kind)
    single = dataclasses.replace(edge, start='%s:0' % edge.id, end='%s:1' % edge.id, weight=1)
    conditions = []
    for endpoint, vertex in zip(edge.endpoints, (single.start, single.end)):
        if kind is DecoupledKind.DIRICHLET:
            conditions.append(make_condition(vertex, 'dirichlet'))
        else:
            f = g.boundary_value(endpoint)
            if NondSign(nond_sign) is NondSign.PAPER:
                f = -f
            conditions.append(make_condition(vertex, 'robin', f={Endpoint(edge.id, endpoint.side): f}))
    return MetricGraph((single,), (single.start, single.end), tuple(conditions))


def _group(values, weights):
    table = []
    rtol = 1e-9
    order = np.argsort(values)
    for i in order:
        value, positive = values[i], weights[i] > 0
        if table and abs(value - table[-1].value) <= rtol * max(abs(value), 1.0):
            last = table[-1]
            table[-1] = Multiplicity(last.value, last.nu + 1, last.nu_plus + int(positive))
        else:
            table.append(Multiplicity(float(value), 1, int(positive)))
    return table


def decoupled_spectrum(g, kind, nond_sign=NondSign.FORM, strict=True):
    kind = DecoupledKind(kind)
    per_edge, weights, failures = {}, {}, {}
    for edge in g.edges:
        d = assemble_global(edge_problem(g, edge, kind, nond_sign))
        report = check_positivity(d, raise_on_failure=False)
        if not report.positive:
            if strict:
                raise DecoupledPositivityError(edge.id, report.message)
            failures[edge.id] = report.message
            logger.warning("decoupled %s problem on edge %s: %s", kind.value, edge.id, report.message)
        per_edge[edge.id] = linalg.eigh(d.form_matrix, d.unsigned_mass, eigvals_only=True)
        weights[edge.id] = edge.weight

    positive = [per_edge[e.id] for e in g.edges if e.weight > 0]
    negative = [per_edge[e.id] for e in g.edges if e.weight < 0]
    all_values = np.concatenate([per_edge[e.id] for e in g.edges])
    all_weights = np.concatenate([np.full(len(per_edge[e.id]), e.weight) for e in g.edges])
    return DecoupledSpectrum(
        kind=kind,
        per_edge=per_edge,
        weights=weights,
        merged_positive=np.sort(np.concatenate(positive)) if positive else np.zeros(0),
        merged_negative=-np.sort(np.concatenate(negative)) if negative else np.zeros(0),
        multiplicity_table=_group(all_values, all_weights),
        mesh_signature=g.mesh_signature,
        positivity_failures=failures,
    )


def verify_bracketing(g, s, tol=None, dirichlet=None, nondirichlet=None, count=None, nond_sign=NondSign.FORM):
    """
    Rows λ_n^N ≤ λ_n ≤ λ_n^D over the positive branch. On identical meshes the
    coupled trial space sits between the decoupled ones and the comparison
    is exact up to round-off, so ``tol`` defaults to 0; it falls back to
    BRACKET_RTOL when a decoupled problem fails positivity.
    """
    if dirichlet is None:
        dirichlet = decoupled_spectrum(g, DecoupledKind.DIRICHLET, strict=False)
    if nondirichlet is None:
        nondirichlet = decoupled_spectrum(g, DecoupledKind.NON_DIRICHLET, nond_sign, strict=False)
    for decoupled in (dirichlet, nondirichlet):
        if decoupled.mesh_signature != g.mesh_signature:
            raise NonNestedError("non-nested discretizations: coupled mesh %s, decoupled %s mesh %s"
                                 % (g.mesh_signature, decoupled.kind.value, decoupled.mesh_signature))

    verified = nondirichlet.verified and dirichlet.verified
    report = BracketReport(nested=True, positivity_failures=dict(nondirichlet.positivity_failures))
    if tol is None:
        tol = 0.0 if verified else get_setting('BRACKET_RTOL')
    report.tol = float(tol)
    guard = get_setting('ROUNDOFF_RTOL')

    available = min(len(s.positive_values), len(dirichlet.merged_positive), len(nondirichlet.merged_positive))
    wanted = available if count is None else count
    if wanted > available:
        report.truncated = True
        report.notes.append("rows beyond n = %d omitted: decoupled or coupled spectrum exhausted" % available)

    for n in range(1, min(wanted, available) + 1):
        value = float(s.positive_values[n - 1])
        lower = float(nondirichlet.merged_positive[n - 1])
        upper = float(dirichlet.merged_positive[n - 1])
        allowance = (report.tol + guard) * abs(value)
        report.rows.append(BracketRow(
            n=n, lambda_N=lower, value=value, lambda_D=upper,
            passed=bool(lower <= value + allowance and value <= upper + allowance),
            lower_slack=value - lower, upper_slack=upper - value, verified=verified,
        ))
    if not verified:
        report.notes.append("decoupled positivity failed on %s; rows unverified"
                            % ', '.join(sorted(report.positivity_failures)))
    return report


def mesh_changes(g, indices):
    """
    Relative movement of the requested positive-branch eigenvalues when
    every edge mesh is doubled, with the eigenvalues at the current mesh.
    """
    indices = sorted(indices)
    top = indices[-1]
    coarse = pencil_eigenvalues(assemble_global(g), top)
    fine = pencil_eigenvalues(assemble_global(refined(g)), top)
    if len(coarse) < top or len(fine) < top:
        raise UnconvergedError("mesh too coarse for requested n: positive branch holds %d of %d"
                               % (len(coarse), top))
    changes = {n: float(abs(coarse[n - 1] - fine[n - 1]) / abs(fine[n - 1])) for n in indices}
    return changes, coarse


def convergence_check(g, indices):
    changes, _ = mesh_changes(g, indices)
    limit = get_setting('CONVERGENCE_RTOL')
    worst = max(changes, key=changes.get)
    if changes[worst] >= limit:
        raise UnconvergedError("mesh too coarse for requested n: λ_%d moves %.2e under mesh doubling (limit %.0e)"
                               % (worst, changes[worst], limit))
    return changes


def converged_mesh(g, indices, max_mesh=None):
    """
    Refine ``g`` until the requested eigenvalues pass the mesh-doubling gate.

    P1 eigenvalues move as h², so each step jumps straight to the factor the
    measured change asks for (at least 2). Returns the refined graph and its
    positive-branch eigenvalues; raises UnconvergedError once the finest
    edge would exceed ``max_mesh``.
    """
    max_mesh = get_setting('ASYMPTOTIC_MAX_MESH') if max_mesh is None else int(max_mesh)
    limit = get_setting('CONVERGENCE_RTOL')
    top = max(indices)
    while True:
        mesh = max(edge.mesh for edge in g.edges)
        try:
            changes, values = mesh_changes(g, indices)
        except UnconvergedError:
            factor = max(2, math.ceil(1.1 * top / max(len(g.positive_edges), 1) / mesh))
        else:
            worst = max(changes.values())
            if worst < limit:
                logger.debug("eigenvalues up to n=%d converged at mesh %d (worst change %.2e)", top, mesh, worst)
                return g, values
            factor = max(2, math.ceil(1.15 * math.sqrt(worst / limit)))
        factor = min(factor, max_mesh // mesh)
        if factor < 2:
            raise UnconvergedError("mesh too coarse for requested n: not converged at mesh %d (cap %d)"
                                   % (mesh, max_mesh))
        logger.debug("refining mesh %d by %d for n up to %d", mesh, factor, top)
        g = refined(g, factor)


def _fit(values, g, n_range):
    lo, hi = n_range
    if len(values) < hi:
        raise UnconvergedError("mesh too coarse for requested n: positive branch holds %d of %d"
                               % (len(values), hi))
    n = np.arange(lo, hi + 1)
    roots = np.sqrt(values[lo - 1:hi])
    slope, intercept = np.polyfit(n, roots, 1)
    # unit edges: length(G⁺) is the positive edge count
    length = g.positive_length
    target = np.pi / length
    fit = AsymptoticFit(
        slope=float(slope),
        intercept=float(intercept),
        max_residual=float(np.abs(roots - (slope * n + intercept)).max()),
        target_slope=float(target),
        positive_length=length,
        n_range=(lo, hi),
        max_remainder=float(np.abs(roots - n * target).max()),
        points=[(int(k), float(r), float(k * target)) for k, r in zip(n, roots)],
        mesh=max(edge.mesh for edge in g.edges),
    )
    logger.debug("asymptotic fit over n=%d..%d: slope %.6f, target %.6f", lo, hi, fit.slope, fit.target_slope)
    return fit


def asymptotic_fit(s, g, n_range=(5, 30), check=True):
    lo, hi = n_range
    if len(s.positive_values) < hi:
        raise UnconvergedError("mesh too coarse for requested n: positive branch holds %d of %d"
                               % (len(s.positive_values), hi))
    if check:
        convergence_check(g, range(lo, hi + 1))
    return _fit(s.positive_values, g, n_range)


def converged_asymptotic_fit(g, n_range=(5, 30), max_mesh=None):
    """The asymptotic fit on the first refinement of ``g`` whose eigenvalues up to n pass the convergence gate."""
    lo, hi = n_range
    fine, values = converged_mesh(g, range(lo, hi + 1), max_mesh)
    return _fit(values, fine, n_range)


def sign_flip_duality(g, nond_sign=NondSign.FORM):
    """
    Decoupled spectra of the weight-negated graph against the originals:
    branches exchange and change sign. Returns the max defect per kind.
    """
    flipped = negate_weights(g)
    defects = {}
    for kind in DecoupledKind:
        before = decoupled_spectrum(g, kind, nond_sign, strict=False)
        after = decoupled_spectrum(flipped, kind, nond_sign, strict=False)
        pairs = ((after.merged_positive, -before.merged_negative), (after.merged_negative, -before.merged_positive))
        defect = 0.0
        for a, b in pairs:
            if len(a) != len(b):
                defect = float('inf')
                break
            if len(a):
                defect = max(defect, float((np.abs(a - b) / np.maximum(np.abs(b), 1.0)).max()))
        defects[kind.value] = defect
    return defects


def bracket_report(g, s=None, count=10, tol=None, nond_sign=NondSign.FORM, converge=False):
    if s is None:
        s = solve_pencil(assemble_global(g))
    convergence = convergence_check(g, range(1, count + 1)) if converge else {}
    report = verify_bracketing(g, s, tol=tol, count=count, nond_sign=nond_sign)
    report.convergence = convergence
    logger.debug("bracket report: %d rows, passed=%s", len(report.rows), report.passed)
    return report
