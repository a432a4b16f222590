from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from django.dispatch import Signal

# A pencil was solved: sent with form=<DiscreteForm>, spectrum=<SpectrumResult>
spectrum_solved = Signal()


class SingularMassError(Exception):
    pass


class UnknownBranchIndexError(KeyError):
    pass


F_ORTHONORMAL = 'F-orthonormal'
B_ORTHONORMAL_SIGNED = 'B-orthonormal-signed'


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """
    Eigenpairs of form·y = λ·signed_mass·y split by the sign of λ.

    ``positive_values`` is ascending (λ₁ ≤ λ₂ ≤ …) and ``negative_values``
    descending (λ₋₁ ≥ λ₋₂ ≥ …). Eigenvectors are columns of the matching
    ``*_vectors`` array, in reduced coordinates.

    ``infinite_vectors`` span the kernel of the Galerkin signed mass (μ = 0,
    λ = ∞). Continuity across a vertex joining edges of opposite sign can make
    that kernel nontrivial; its dimension never exceeds the number of basis
    functions straddling both signs.
    """
    positive_values: np.ndarray
    positive_vectors: np.ndarray
    negative_values: np.ndarray
    negative_vectors: np.ndarray
    normalization: str = F_ORTHONORMAL
    infinite_vectors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def reduced_dimension(self):
        return self.positive_vectors.shape[0]

    @property
    def infinite_count(self):
        return self.infinite_vectors.shape[1] if self.infinite_vectors.size else 0

    @property
    def positive_branch(self):
        return [(n + 1, value, self.positive_vectors[:, n]) for n, value in enumerate(self.positive_values)]

    @property
    def negative_branch(self):
        return [(-(n + 1), value, self.negative_vectors[:, n]) for n, value in enumerate(self.negative_values)]

    @property
    def indices(self):
        return ([n for n, _, _ in self.positive_branch]
                + [n for n, _, _ in self.negative_branch])

    @property
    def values(self):
        return np.concatenate([self.positive_values, self.negative_values])

    @property
    def vectors(self):
        return np.hstack([self.positive_vectors, self.negative_vectors])

    def __len__(self):
        return len(self.positive_values) + len(self.negative_values)

    def _position(self, index):
        index = int(index)
        if index > 0 and index <= len(self.positive_values):
            return self.positive_values, self.positive_vectors, index - 1
        if index < 0 and -index <= len(self.negative_values):
            return self.negative_values, self.negative_vectors, -index - 1
        raise UnknownBranchIndexError("No eigenpair with branch index %d" % index)

    def eigenvalue(self, index):
        values, _, position = self._position(index)
        return float(values[position])

    def eigenvector(self, index):
        _, vectors, position = self._position(index)
        return vectors[:, position]
