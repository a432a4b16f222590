import logging
import time

import numpy as np
from scipy import linalg

from ..assembly.models import PositivityError
from ..assembly.tasks import check_positivity
from ..conf import get_setting
from .models import SingularMassError, SpectrumResult, spectrum_solved

logger = logging.getLogger(__name__)


def solve_pencil(d):
    """
    Solve form·y = λ·signed_mass·y.

    The pencil is handed to LAPACK as signed_mass·y = μ·form·y: the form
    is Cholesky-factored, the reduced symmetric matrix is tridiagonalised and
    diagonalised by implicit QL, and the eigenvectors come back
    F-orthonormal. λ = 1/μ.
    """
    check_positivity(d)
    started = time.time()

    try:
        mu, vectors = linalg.eigh(d.signed_mass, d.form_matrix, driver='gv')
    except linalg.LinAlgError as e:
        raise PositivityError("L not positive definite; positivity hypothesis violated (%s)" % e)

    cutoff = get_setting('SINGULAR_MASS_RTOL') * np.abs(mu).max()
    infinite = np.flatnonzero(np.abs(mu) <= cutoff)
    if len(infinite) > d.straddling_count:
        raise SingularMassError("singular signed mass: %d eigenvalues μ = 0 within %.1e relative, "
                                "at most %d expected" % (len(infinite), get_setting('SINGULAR_MASS_RTOL'),
                                                         d.straddling_count))

    # μ ascending: positive λ ascending is μ descending, negative λ descending is μ ascending
    positive = np.flatnonzero(mu > cutoff)[::-1]
    negative = np.flatnonzero(mu < -cutoff)
    spectrum = SpectrumResult(
        positive_values=1.0 / mu[positive],
        positive_vectors=vectors[:, positive],
        negative_values=1.0 / mu[negative],
        negative_vectors=vectors[:, negative],
        infinite_vectors=vectors[:, infinite],
    )
    logger.debug("solved %d-dimensional pencil in %.3fs: %d positive, %d negative, %d infinite",
                 d.dof_count, time.time() - started, len(positive), len(negative), len(infinite))
    spectrum_solved.send(sender=SpectrumResult, form=d, spectrum=spectrum)
    return spectrum


def pencil_eigenvalues(d, count):
    """The lowest ``count`` positive-branch eigenvalues, without eigenvectors."""
    n = d.dof_count
    count = min(count, n)
    try:
        mu = linalg.eigh(d.signed_mass, d.form_matrix, eigvals_only=True, subset_by_index=[n - count, n - 1])
    except linalg.LinAlgError as e:
        raise PositivityError("L not positive definite; positivity hypothesis violated (%s)" % e)
    return np.sort(1.0 / mu[mu > 0])


def eigenfunction_values(s, d, index):
    """Nodal values of one eigenfunction per edge, as ``{edge_id: (x, values)}``."""
    values = d.edge_values(s.eigenvector(index))
    return {edge_id: (d.nodes(edge_id), values[edge_id]) for edge_id in d.edge_dof_slices}


def _off_diagonal_max(matrix):
    if matrix.shape[0] < 2:
        return 0.0
    return float(np.abs(matrix - np.diag(np.diag(matrix))).max())


def spectrum_checks(d, s):
    vectors = s.vectors
    values = s.values
    form = vectors.T @ d.form_matrix @ vectors
    krein = vectors.T @ d.signed_mass @ vectors

    residuals = d.form_matrix @ vectors - (d.signed_mass @ vectors) * values
    scale = ((np.linalg.norm(d.form_matrix, 1) + np.abs(values) * np.linalg.norm(d.signed_mass, 1))
             * np.abs(vectors).sum(axis=0))
    checks = {
        'f_offdiagonal': _off_diagonal_max(form),
        'f_diagonal': float(np.abs(np.diag(form) - 1.0).max()),
        'b_offdiagonal': _off_diagonal_max(krein),
        'rayleigh': float(np.abs(np.diag(form) - values * np.diag(krein)).max()),
        'pencil_residual': float((np.abs(residuals).sum(axis=0) / scale).max()),
        'basis_rank': int(np.linalg.matrix_rank(np.hstack([vectors, s.infinite_vectors])
                                                if s.infinite_count else vectors)),
        'infinite_count': s.infinite_count,
        'real': bool(np.isrealobj(values) and np.isrealobj(vectors)),
    }
    logger.debug("spectrum checks: %s", checks)
    return checks


def mirror_defect(s):
    """max |λ_n + λ₋ₙ| / |λ_n| over the indices present on both branches."""
    k = min(len(s.positive_values), len(s.negative_values))
    if k == 0:
        return float('nan')
    plus = s.positive_values[:k]
    return float((np.abs(plus + s.negative_values[:k]) / np.abs(plus)).max())
