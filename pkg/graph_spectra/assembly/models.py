from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from django.utils.functional import cached_property
from scipy import linalg

from ..graphs.models import EndpointMap


class ConstraintError(Exception):
    pass


class OverConstrainedError(Exception):
    pass


class PositivityError(Exception):
    """
    The form is not positive definite, so the problem lies outside the
    hypotheses under which the indefinite spectral theory applies.
    """
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class DiscreteForm:
    """
    The discrete variational problem F(u, v) = λ (Bu, v) on the
    constraint-reduced P1 space.

    The reduced matrices are congruences ``Zᵀ A Z`` of the edge-wise
    ("full") matrices, where Z is ``constraint_basis``. The full matrices
    keep every edge endpoint as its own degree of freedom and are what the
    edge-restriction projections act on.
    """
    form_matrix: np.ndarray
    signed_mass: np.ndarray
    unsigned_mass: np.ndarray
    constraint_basis: np.ndarray
    full_form: np.ndarray
    full_signed_mass: np.ndarray
    full_unsigned_mass: np.ndarray
    dof_signs: np.ndarray
    edge_dof_slices: Dict[str, slice]
    endpoint_map: EndpointMap
    mesh_signature: Tuple[Tuple[str, int], ...] = ()
    constraint_rows: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dof_count(self):
        return self.form_matrix.shape[0]

    @property
    def full_dof_count(self):
        return self.full_form.shape[0]

    @cached_property
    def cholesky(self):
        """Upper Cholesky factor of the form matrix, in cho_factor layout."""
        try:
            return linalg.cho_factor(self.form_matrix, lower=False)
        except linalg.LinAlgError:
            raise PositivityError("L not positive definite; positivity hypothesis violated "
                                  "(Cholesky factorization of the form failed)")

    @cached_property
    def positive_mask(self):
        return self.dof_signs > 0

    @cached_property
    def straddling_count(self):
        """Reduced basis functions supported on edges of both signs."""
        support = np.abs(self.constraint_basis)
        plus = support[self.dof_signs > 0].sum(axis=0) > 0
        minus = support[self.dof_signs < 0].sum(axis=0) > 0
        return int(np.count_nonzero(plus & minus))

    def expand(self, u):
        """Lift reduced coordinates to edge-wise nodal values."""
        return self.constraint_basis @ u

    def edge_values(self, u):
        full = self.expand(u)
        return {edge_id: full[dofs] for edge_id, dofs in self.edge_dof_slices.items()}

    def nodes(self, edge_id):
        dofs = self.edge_dof_slices[edge_id]
        return np.linspace(0.0, 1.0, dofs.stop - dofs.start)


@dataclass(frozen=True)
class PositivityReport:
    positive: bool
    rho_1: float
    factorized: bool
    threshold: float
    message: str = ''

    def as_dict(self):
        return {
            'positive': self.positive,
            'rho_1': self.rho_1,
            'factorized': self.factorized,
            'threshold': self.threshold,
            'message': self.message,
        }
