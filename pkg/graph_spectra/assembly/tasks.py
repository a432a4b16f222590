import logging

import numpy as np
from scipy import linalg

from ..conf import get_setting
from ..graphs.utils import build_endpoint_map, validate_graph
from .models import (ConstraintError, DiscreteForm, OverConstrainedError, PositivityError,
                     PositivityReport)

logger = logging.getLogger(__name__)


def _potential_element_matrices(edge, nodes, h):
    """
    Exact ∫ q φ_a φ_b over every element for a piecewise-constant q whose
    breakpoints need not sit on mesh nodes. Returns arrays (LL, LR, RR)
    with one entry per element.
    """
    left = nodes[:-1, None]
    starts = np.array([s for s, _, _ in edge.potential.pieces()])[None, :]
    stops = np.array([t for _, t, _ in edge.potential.pieces()])[None, :]
    values = np.array([v for _, _, v in edge.potential.pieces()])[None, :]

    # local coordinates of the piece/element overlap
    a = np.clip((starts - left) / h, 0.0, 1.0)
    b = np.clip((stops - left) / h, 0.0, 1.0)

    ll = ((1.0 - a) ** 3 - (1.0 - b) ** 3) / 3.0
    rr = (b ** 3 - a ** 3) / 3.0
    lr = (b ** 2 - a ** 2) / 2.0 - (b ** 3 - a ** 3) / 3.0
    weight = values * h
    return (weight * ll).sum(axis=1), (weight * lr).sum(axis=1), (weight * rr).sum(axis=1)


def _tridiagonal(diagonal, off):
    return np.diag(diagonal) + np.diag(off, 1) + np.diag(off, -1)


def assemble_edge(edge):
    """
    P1 stiffness (∫ y'φ' + q y φ) and mass (∫ y φ) matrices on a uniform
    mesh of ``edge.mesh`` subintervals.
    """
    m = edge.mesh
    h = 1.0 / m
    nodes = np.linspace(0.0, 1.0, m + 1)

    q_ll, q_lr, q_rr = _potential_element_matrices(edge, nodes, h)

    diagonal = np.zeros(m + 1)
    diagonal[:-1] += 1.0 / h + q_ll
    diagonal[1:] += 1.0 / h + q_rr
    stiffness = _tridiagonal(diagonal, -1.0 / h + q_lr)

    mass_diagonal = np.full(m + 1, 4.0 * h / 6.0)
    mass_diagonal[[0, -1]] = 2.0 * h / 6.0
    mass = _tridiagonal(mass_diagonal, np.full(m, h / 6.0))
    return stiffness, mass


def constraint_basis(rows, tol=None):
    """
    Columns spanning the nullspace of ``rows``, from the Gauss-Jordan reduced
    form: pivot dofs are expressed through the free dofs, free dofs keep a
    unit column. A continuity row therefore yields one shared column with
    exact ones on both endpoints.
    """
    rows = np.array(rows, dtype=float)
    count, width = rows.shape
    if count == 0:
        return np.eye(width)
    if tol is None:
        tol = 1e-12 * max(np.abs(rows).max(), 1.0)

    reduced = rows.copy()
    pivots = []
    r = 0
    for c in np.flatnonzero(np.any(rows != 0.0, axis=0)):
        if r == count:
            break
        p = r + int(np.argmax(np.abs(reduced[r:, c])))
        if abs(reduced[p, c]) <= tol:
            continue
        reduced[[r, p]] = reduced[[p, r]]
        reduced[r] /= reduced[r, c]
        others = np.arange(count) != r
        reduced[others] -= np.outer(reduced[others, c], reduced[r])
        pivots.append(c)
        r += 1
    if r < count:
        raise ConstraintError("constraints not independent (rank %d of %d rows)" % (r, count))

    free = np.setdiff1d(np.arange(width), pivots)
    if free.size == 0:
        raise OverConstrainedError("over-constrained graph: the reduced space is empty")
    basis = np.zeros((width, free.size))
    basis[free, np.arange(free.size)] = 1.0
    basis[pivots, :] = -reduced[:r][:, free]
    # drop round-off fill on exact 0/±1 structures
    basis[np.abs(basis) < tol] = 0.0
    return basis


def _constraint_matrix(g, endpoint_map, width):
    blocks = []
    for vertex in g.vertices:
        endpoints = g.incident_endpoints(vertex)
        local = g.condition_at(vertex).constraint_rows(len(endpoints))
        block = np.zeros((local.shape[0], width))
        for j, endpoint in enumerate(endpoints):
            block[:, endpoint_map.dof(endpoint)] = local[:, j]
        blocks.append(block)
    return np.vstack(blocks) if blocks else np.zeros((0, width))


def assemble_global(g):
    validate_graph(g).raise_for_violations()

    stiffness, masses, signs, slices = [], [], [], {}
    offset = 0
    for edge in g.edges:
        k, m = assemble_edge(edge)
        stiffness.append(k)
        masses.append(m)
        signs.append(np.full(edge.mesh + 1, float(edge.weight)))
        slices[edge.id] = slice(offset, offset + edge.mesh + 1)
        offset += edge.mesh + 1

    full_form = linalg.block_diag(*stiffness)
    full_unsigned = linalg.block_diag(*masses)
    dof_signs = np.concatenate(signs)
    full_signed = full_unsigned * dof_signs[:, None]

    endpoint_map = build_endpoint_map(g)
    # ∫∂G f x y dσ: +f at terminal ends, -f at initial ends
    for endpoint, (dof, sigma) in endpoint_map.items():
        full_form[dof, dof] += sigma * g.boundary_value(endpoint)

    rows = _constraint_matrix(g, endpoint_map, offset)
    basis = constraint_basis(rows)

    def reduce(matrix):
        reduced = basis.T @ matrix @ basis
        return 0.5 * (reduced + reduced.T)

    form = DiscreteForm(
        form_matrix=reduce(full_form),
        signed_mass=reduce(full_signed),
        unsigned_mass=reduce(full_unsigned),
        constraint_basis=basis,
        full_form=full_form,
        full_signed_mass=full_signed,
        full_unsigned_mass=full_unsigned,
        dof_signs=dof_signs,
        edge_dof_slices=slices,
        endpoint_map=endpoint_map,
        mesh_signature=g.mesh_signature,
        constraint_rows=rows,
    )
    logger.debug("assembled %d edges: %d full dofs, %d constraint rows, %d reduced dofs",
                 len(g.edges), offset, rows.shape[0], form.dof_count)
    return form


def check_positivity(d, raise_on_failure=True):
    """
    Decide whether the form matrix is positive definite and estimate the
    bottom ρ₁ of the definite pencil form·u = ρ·mass·u.
    """
    try:
        linalg.cho_factor(d.form_matrix, lower=False)
        factorized = True
    except linalg.LinAlgError:
        factorized = False

    rho_1 = float(linalg.eigh(d.form_matrix, d.unsigned_mass, eigvals_only=True,
                              subset_by_index=[0, 0])[0])
    scale = np.linalg.norm(d.form_matrix, 1) / np.linalg.norm(d.unsigned_mass, 1)
    threshold = get_setting('POSITIVITY_RTOL') * scale
    positive = factorized and rho_1 > threshold

    if positive:
        report = PositivityReport(True, rho_1, factorized, threshold)
    else:
        report = PositivityReport(False, rho_1, factorized, threshold,
                                  "L not positive definite; positivity hypothesis violated "
                                  "(rho_1 = %.6g)" % rho_1)
        logger.warning(report.message)
        if raise_on_failure:
            raise PositivityError(report.message, report)
    return report


def dump_matrix(matrix, path):
    """Write ``i j value`` lines for every nonzero entry (0-based)."""
    rows, cols = np.nonzero(matrix)
    with open(path, 'w') as handle:
        for i, j in zip(rows, cols):
            handle.write("%d %d %.17g\n" % (i, j, matrix[i, j]))
