import logging

import numpy as np
from scipy import linalg, optimize

from ..assembly.tasks import assemble_global
from ..conf import get_setting
from ..graphs.models import PiecewisePotential
from ..graphs.utils import validate_graph, with_mesh
from ..spectra.tasks import solve_pencil
from .models import (OracleCensus, ScanResult, SecularShapeError, SecularSystem, TransferMatrix,
                     UnsupportedPotentialError)

logger = logging.getLogger(__name__)


def edge_transfer(c, length):
    """Transfer matrix of y'' = c·y over ``length``."""
    if length <= 0:
        raise ValueError("transfer length must be positive, got %r" % length)
    if c > 0:
        w = np.sqrt(c)
        ch, sh = np.cosh(w * length), np.sinh(w * length)
        matrix = np.array([[ch, sh / w], [w * sh, ch]])
    elif c < 0:
        w = np.sqrt(-c)
        co, si = np.cos(w * length), np.sin(w * length)
        matrix = np.array([[co, si / w], [-w * si, co]])
    else:
        matrix = np.array([[1.0, length], [0.0, 1.0]])
    return TransferMatrix(matrix, float(c), float(length))


def edge_transfer_matrix(edge, lam):
    """Product of the piece transfers along ``edge`` with c = q - b·λ."""
    total = TransferMatrix.identity()
    for start, stop, q in edge.potential.pieces():
        total = edge_transfer(q - edge.weight * lam, (stop - start) * edge.length) @ total
    return total


def _layout(g):
    """Per vertex: incident endpoints, constraint rows, natural-condition basis, dσ signs and f."""
    for edge in g.edges:
        if not isinstance(edge.potential, PiecewisePotential):
            raise UnsupportedPotentialError("unsupported potential on edge %s: piecewise-constant q required"
                                            % edge.id)
    validate_graph(g).raise_for_violations()

    layout = []
    for vertex in g.vertices:
        endpoints = g.incident_endpoints(vertex)
        rows = g.condition_at(vertex).constraint_rows(len(endpoints))
        natural = linalg.null_space(rows) if rows.shape[0] else np.eye(len(endpoints))
        sigma = np.array([endpoint.sigma for endpoint in endpoints], dtype=float)
        f = np.array([g.boundary_value(endpoint) for endpoint in endpoints])
        layout.append((vertex, endpoints, rows, natural, sigma, f))
    return layout


def secular_system(g, lam, layout=None):
    layout = _layout(g) if layout is None else layout
    size = 2 * len(g.edges)
    columns = {edge.id: 2 * i for i, edge in enumerate(g.edges)}

    values, derivatives = {}, {}
    for edge in g.edges:
        i = columns[edge.id]
        t = edge_transfer_matrix(edge, lam).matrix
        start_value, start_derivative = np.zeros(size), np.zeros(size)
        start_value[i], start_derivative[i + 1] = 1.0, 1.0
        end_value, end_derivative = np.zeros(size), np.zeros(size)
        end_value[i:i + 2], end_derivative[i:i + 2] = t[0], t[1]
        start, end = edge.endpoints
        values[start], derivatives[start] = start_value, start_derivative
        values[end], derivatives[end] = end_value, end_derivative

    blocks, labels = [], []
    for vertex, endpoints, rows, natural, sigma, f in layout:
        v = np.array([values[e] for e in endpoints])
        d = np.array([derivatives[e] for e in endpoints])
        if rows.shape[0]:
            blocks.append(rows @ v)
            labels.extend((vertex, 'constraint') for _ in range(rows.shape[0]))
        if natural.shape[1]:
            # Σ dσ·(y' + f·y)·φ = 0 for every φ allowed by the constraint rows
            blocks.append(natural.T @ (sigma[:, None] * (d + f[:, None] * v)))
            labels.extend((vertex, 'natural') for _ in range(natural.shape[1]))

    matrix = np.vstack(blocks)
    if matrix.shape != (size, size):
        raise SecularShapeError("secular system is %d×%d, expected %d×%d" % (matrix.shape + (size, size)))
    scales = np.abs(matrix).reshape(size, -1, 2).max(axis=(0, 2))
    scales[scales == 0.0] = 1.0
    return SecularSystem(float(lam), matrix / np.repeat(scales, 2), tuple(labels), scales)


def secular_det(g, lam, layout=None):
    return secular_system(g, lam, layout).determinant


def scan_diagnostics(g, lambda_min, lambda_max, grid=None):
    """
    Sample the secular determinant on ``grid`` cells of the open window,
    bisect every sign change and flag local minima of |det| that touch zero
    without crossing it.
    """
    if not lambda_max > lambda_min:
        raise ValueError("empty λ window (%r, %r)" % (lambda_min, lambda_max))
    grid = get_setting('ORACLE_GRID') if grid is None else int(grid)
    xtol = get_setting('ROOT_XTOL')
    layout = _layout(g)

    def det(lam):
        return secular_det(g, lam, layout)

    xs = np.linspace(lambda_min, lambda_max, grid + 1)
    ys = np.array([det(x) for x in xs])
    result = ScanResult(window=(float(lambda_min), float(lambda_max)), grid=grid)

    for k in range(grid):
        a, b = xs[k], xs[k + 1]
        if k and ys[k] == 0.0:
            result.roots.append(float(a))
        elif ys[k] * ys[k + 1] < 0.0:
            root = optimize.bisect(det, a, b, xtol=xtol * max(1.0, abs(a), abs(b)))
            result.roots.append(float(root))

    threshold = get_setting('DOUBLE_ROOT_RTOL')
    for k in range(1, grid):
        left, middle, right = np.abs(ys[k - 1:k + 2])
        if not (middle < left and middle < right and ys[k - 1] * ys[k] > 0 and ys[k] * ys[k + 1] > 0):
            continue
        found = optimize.minimize_scalar(lambda x: abs(det(x)), bounds=(xs[k - 1], xs[k + 1]), method='bounded',
                                         options={'xatol': xtol * max(1.0, abs(xs[k]))})
        if found.fun <= threshold * min(left, right):
            result.suspects.append(float(found.x))
            logger.warning("possible double root or tangency near λ = %.10g; refine grid", found.x)

    logger.debug("secular scan over (%g, %g) on %d cells: %d roots, %d suspects",
                 lambda_min, lambda_max, grid, len(result.roots), len(result.suspects))
    return result


def scan_roots(g, lambda_min, lambda_max, grid=None):
    return scan_diagnostics(g, lambda_min, lambda_max, grid).roots


def _match(values, scan, window, rtol):
    lo, hi = window
    census = OracleCensus(window=(float(lo), float(hi)), rtol=rtol, suspects=list(scan.suspects))
    census.roots = [r for r in scan.roots if lo < r < hi]
    census.fem_values = [float(v) for v in np.sort(values) if lo < v < hi]

    roots = np.asarray(scan.roots)
    for value in census.fem_values:
        if len(roots):
            root = float(roots[np.argmin(np.abs(roots - value))])
            rel = abs(value - root) / abs(root)
            if rel <= rtol:
                census.pairs.append((value, root, rel))
                continue
        if any(abs(value - x) <= rtol * abs(x) for x in scan.suspects):
            census.unresolved.append(value)
        else:
            census.missed.append(value)

    values = np.asarray(values)
    census.spurious = [r for r in census.roots if not np.any(np.abs(values - r) <= rtol * abs(r))]
    return census


def oracle_census(g, window=(-50.0, 50.0), grid=None, s=None):
    """
    Pair the FEM spectrum of ``g`` in the open window with secular roots.
    The scan runs on a window widened by the tolerance so that a FEM value
    just inside an edge still finds its root just outside.
    """
    rtol = get_setting('ORACLE_FEM_RTOL')
    if s is None:
        s = solve_pencil(assemble_global(g))
    lo, hi = window
    margin = rtol * max(abs(lo), abs(hi))
    census = _match(s.values, scan_diagnostics(g, lo - margin, hi + margin, grid), window, rtol)
    logger.debug("oracle census on (%g, %g): %d roots, %d FEM values, max relative error %.2e",
                 lo, hi, census.oracle_count, census.fem_count, census.max_relative_error)
    return census


def fem_convergence(g, window=(-50.0, 50.0), meshes=(64, 128), grid=None):
    """
    Largest root/FEM relative error at every mesh in ``meshes``, all paired
    against a single secular scan.
    """
    rtol = get_setting('ORACLE_FEM_RTOL')
    lo, hi = window
    margin = rtol * max(abs(lo), abs(hi))
    scan = scan_diagnostics(g, lo - margin, hi + margin, grid)
    errors = {}
    for mesh in meshes:
        refined = with_mesh(g, mesh)
        census = _match(solve_pencil(assemble_global(refined)).values, scan, window, rtol)
        errors[mesh] = census.max_relative_error
    return errors
