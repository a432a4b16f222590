import logging

import numpy as np
from scipy import linalg

from ..conf import get_setting
from .models import (C_MINUS, C_PLUS, ConeEntry, ConeViolationError, DimensionMismatchError,
                     HalfRangeDegeneracyError, KreinReport, NormConsistencyError, PositiveConeEmptyError,
                     SpectralProjections)

logger = logging.getLogger(__name__)


def _branch(s, branch):
    if branch > 0:
        return s.positive_values, s.positive_vectors
    return s.negative_values, s.negative_vectors


def _l2_norm(u, d):
    return float(np.sqrt(max(u @ d.unsigned_mass @ u, 0.0)))


def probe_vectors(d, count=None, seed=None):
    count = get_setting('PROBES') if count is None else count
    seed = get_setting('SEED') if seed is None else seed
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, d.dof_count))


def indefinite_inner(u, v, d):
    """[u, v] = uᵀ·signed_mass·v."""
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != (d.dof_count,) or v.shape != (d.dof_count,):
        raise DimensionMismatchError("expected vectors of length %d, got %s and %s"
                                     % (d.dof_count, u.shape, v.shape))
    return float(u @ d.signed_mass @ v)


def classify_cone(s, d):
    """Tag every eigenvector by the sign of [y, y] and check it against sign(λ)."""
    tol = get_setting('CONE_TOL')
    table = []
    for index, value, vector in s.positive_branch + s.negative_branch:
        krein = indefinite_inner(vector, vector, d)
        if abs(krein) < tol * _l2_norm(vector, d) ** 2 or (krein > 0) != (value > 0):
            raise ConeViolationError("cone theorem violated at branch index %d: λ = %.6g, [y,y] = %.3g"
                                     % (index, value, krein))
        table.append(ConeEntry(index, float(value), krein, C_PLUS if krein > 0 else C_MINUS))
    return table


def build_S(d):
    """S = form⁻¹·signed_mass, formed explicitly from the Cholesky factor."""
    return linalg.cho_solve(d.cholesky, d.signed_mass)


def spectral_projections(d, s):
    p_plus = s.positive_vectors @ s.positive_vectors.T @ d.form_matrix
    p_minus = s.negative_vectors @ s.negative_vectors.T @ d.form_matrix
    q_plus = np.diag(d.positive_mask.astype(float))
    q_minus = np.diag((~d.positive_mask).astype(float))
    return SpectralProjections(p_plus, p_minus, q_plus, q_minus)


def s_gram(d, s, projections=None):
    """Matrix of the S inner product, (u, v)_S = F(|S|u, v) = uᵀ·signed_mass·(P₊ − P₋)·v."""
    projections = projections or spectral_projections(d, s)
    gram = d.signed_mass @ (projections.p_plus - projections.p_minus)
    return 0.5 * (gram + gram.T)


def s_norm(u, d, s, gram=None):
    gram = s_gram(d, s) if gram is None else gram
    radicand = float(u @ gram @ u)
    if radicand < -1e-12 * max(float(u @ d.form_matrix @ u), 1.0):
        raise NormConsistencyError("negative S-norm radicand %.3g" % radicand)
    return float(np.sqrt(max(radicand, 0.0)))


def _edge_split(d, projections):
    """Q₊·Z·P₊, Q₋·Z·P₋ and the cross terms, all mapping reduced to edge-wise coordinates."""
    z = d.constraint_basis
    plus = z @ projections.p_plus
    minus = z @ projections.p_minus
    v = projections.q_plus @ plus + projections.q_minus @ minus
    w = projections.q_plus @ minus + projections.q_minus @ plus
    return v, w


def verify_vw_identity(d, s, probes):
    """
    Relative residuals of ‖Vu‖² = ‖u‖_S² + ‖Wu‖² with V = Q₊P₊ + Q₋P₋ and
    W = Q₊P₋ + Q₋P₊, norms taken in the edge-wise L² inner product.
    """
    projections = spectral_projections(d, s)
    gram = s_gram(d, s, projections)
    v, w = _edge_split(d, projections)
    mass = d.full_unsigned_mass

    residuals = []
    for u in probes:
        vu, wu = v @ u, w @ u
        lhs = float(vu @ mass @ vu)
        if lhs == 0.0:
            residuals.append(0.0)
            continue
        residuals.append(abs(lhs - s_norm(u, d, s, gram) ** 2 - float(wu @ mass @ wu)) / lhs)
    return residuals


def verify_adjoint_identity(d, s):
    """
    Check that P₊Q₊ + P₋Q₋ is the adjoint of V between the S inner product
    and L², as ``G_S·V* = Vᵀ·M`` (G_S the S-Gram matrix, M the edge-wise
    mass). P± are extended to L² through the B-orthogonal expansion
    P₊f = Σ λ_n [f, y_n] y_n.
    """
    projections = spectral_projections(d, s)
    gram = s_gram(d, s, projections)
    v, _ = _edge_split(d, projections)
    lift = d.constraint_basis.T @ d.full_signed_mass

    extend_plus = (s.positive_vectors * s.positive_values) @ s.positive_vectors.T @ lift
    extend_minus = (s.negative_vectors * s.negative_values) @ s.negative_vectors.T @ lift
    adjoint = extend_plus @ projections.q_plus + extend_minus @ projections.q_minus

    expected = v.T @ d.full_unsigned_mass
    return float(np.linalg.norm(gram @ adjoint - expected) / np.linalg.norm(expected))


def s_norm_constants(d, s, probes):
    """
    Observed equivalence constants of ‖·‖_S and ‖·‖: extremal probe ratios,
    and the extremal generalized eigenvalues of the two Gram matrices on
    the span of the finite eigenvectors.
    """
    gram = s_gram(d, s)
    ratios = [s_norm(u, d, s, gram) / _l2_norm(u, d) for u in probes]
    finite = s.vectors
    extremes = linalg.eigh(finite.T @ gram @ finite, finite.T @ d.unsigned_mass @ finite, eigvals_only=True)
    return {
        'probe_min': float(min(ratios)),
        'probe_max': float(max(ratios)),
        'pencil_min': float(np.sqrt(max(extremes[0], 0.0))),
        'pencil_max': float(np.sqrt(extremes[-1])),
    }


def projection_checks(d, s, probes):
    projections = spectral_projections(d, s)
    p_plus, p_minus = projections.p_plus, projections.p_minus
    identity = np.eye(d.dof_count)
    p_infinite = s.infinite_vectors @ s.infinite_vectors.T @ d.form_matrix if s.infinite_count else 0 * identity

    def asymmetry(matrix):
        scale = np.abs(matrix).max()
        return float(np.abs(matrix - matrix.T).max() / scale) if scale else 0.0

    krein = 0.0
    for u, v in zip(probes, probes[::-1]):
        value = abs(indefinite_inner(p_plus @ u, p_minus @ v, d))
        krein = max(krein, value / (_l2_norm(u, d) * _l2_norm(v, d)))

    S = build_S(d)
    finite = s.vectors
    abs_s = linalg.eigvalsh(finite.T @ s_gram(d, s, projections) @ finite)
    q_plus, q_minus = projections.q_plus, projections.q_minus
    return {
        'completeness': float(np.abs(p_plus + p_minus + p_infinite - identity).max()),
        'infinite_rank': s.infinite_count,
        'idempotence': float(max(np.abs(p_plus @ p_plus - p_plus).max(), np.abs(p_minus @ p_minus - p_minus).max())),
        'f_self_adjoint': max(asymmetry(d.form_matrix @ p_plus), asymmetry(d.form_matrix @ p_minus)),
        'b_orthogonality': krein,
        'q_complement': float(np.abs(q_plus + q_minus - np.eye(len(q_plus))).max() + np.abs(q_plus @ q_minus).max()),
        'abs_s_min': float(abs_s[0]) if len(abs_s) else 0.0,
        's_f_symmetry': asymmetry(d.form_matrix @ S),
        's_residual': float(np.abs(d.form_matrix @ S - d.signed_mass).max() / np.abs(d.signed_mass).max()),
    }


def maxmin_value(n, d, s, branch=1):
    """
    d_{n+1}(y₁, …, y_n): the bottom of F(φ,φ)/(Bφ,φ) over the cone (Bφ,φ) > 0
    of the B-orthogonal complement of the first n positive eigenvectors.
    With ``branch=-1`` the negative cone and eigenvectors are used instead,
    returning the companion value for λ₋₍ₙ₊₁₎.
    """
    values, vectors = _branch(s, branch)
    if n < 0 or n >= len(values):
        raise PositiveConeEmptyError("positive cone empty: branch holds %d eigenvalues, n = %d" % (len(values), n))

    if n:
        complement = linalg.null_space(vectors[:, :n].T @ d.signed_mass)
    else:
        complement = np.eye(d.dof_count)
    form = complement.T @ d.form_matrix @ complement
    mass = complement.T @ d.signed_mass @ complement
    mu = linalg.eigh(0.5 * (mass + mass.T), 0.5 * (form + form.T), eigvals_only=True)

    cutoff = get_setting('SINGULAR_MASS_RTOL') * np.abs(mu).max()
    cone = mu[mu > cutoff] if branch > 0 else mu[mu < -cutoff]
    if not len(cone):
        raise PositiveConeEmptyError("positive cone empty in the complement of %d eigenvectors" % n)
    return float(1.0 / (cone.max() if branch > 0 else cone.min()))


def halfrange_gram(s, d, N, branch=1):
    """
    Spectrum of the Gram matrix of the first N eigenfunctions restricted to
    G⁺ (G⁻ for ``branch=-1``) and normalized in L².
    """
    values, vectors = _branch(s, branch)
    if N > len(values):
        raise DimensionMismatchError("truncation %d exceeds the %d available eigenpairs" % (N, len(values)))
    mask = d.positive_mask if branch > 0 else ~d.positive_mask
    full = d.constraint_basis @ vectors[:, :N]
    restricted = full * mask[:, None]

    mass = d.full_unsigned_mass
    norms = np.sqrt(np.einsum('in,ij,jn->n', restricted, mass, restricted))
    totals = np.sqrt(np.einsum('in,ij,jn->n', full, mass, full))
    vanishing = np.flatnonzero(norms < 1e-12 * totals)
    if len(vanishing):
        raise HalfRangeDegeneracyError("eigenfunction vanishes on G%s at branch index %d"
                                       % ('⁺' if branch > 0 else '⁻', branch * (vanishing[0] + 1)))
    restricted = restricted / norms
    eigenvalues = linalg.eigvalsh(restricted.T @ mass @ restricted)
    return N, float(eigenvalues[0]), float(eigenvalues[-1])


def krein_report(d, s, probes=None, truncations=None, maxmin_count=6):
    probes = probe_vectors(d) if probes is None else probes
    truncations = get_setting('TRUNCATIONS') if truncations is None else truncations
    report = KreinReport()

    report.cone_table = classify_cone(s, d)
    report.s_norm_constants = s_norm_constants(d, s, probes)
    report.vw_residuals = verify_vw_identity(d, s, probes)
    report.adjoint_residual = verify_adjoint_identity(d, s)
    report.projection_checks = projection_checks(d, s, probes)

    for n in range(min(maxmin_count, len(s.positive_values))):
        target = s.positive_values[n]
        report.maxmin_gaps[n] = abs(maxmin_value(n, d, s) - target) / abs(target)

    for N in truncations:
        if N > len(s.positive_values):
            report.notes.append("truncation %d skipped: only %d positive eigenpairs" % (N, len(s.positive_values)))
            continue
        report.gram_spectra.append(halfrange_gram(s, d, N))

    logger.debug("krein report: %d cone entries, max V/W residual %.2e, max max-min gap %.2e",
                 len(report.cone_table), report.max_vw_residual, report.max_maxmin_gap)
    return report
