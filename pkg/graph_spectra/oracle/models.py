from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np


class UnsupportedPotentialError(ValueError):
    pass


class SecularShapeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """
    Maps (y, y') at the left end of a stretch of edge to the right end, for
    y'' = c·y with c = q - b·λ constant on the stretch. Compositions keep
    ``c`` as None.
    """
    matrix: np.ndarray
    c: Optional[float]
    length: float

    @classmethod
    def identity(cls):
        return cls(np.eye(2), None, 0.0)

    @property
    def determinant(self):
        return float(np.linalg.det(self.matrix))

    def __matmul__(self, other):
        return TransferMatrix(self.matrix @ other.matrix, None, self.length + other.length)

    def apply(self, value, derivative):
        return self.matrix @ np.array([value, derivative], dtype=float)


@dataclass(frozen=True, eq=False)
class SecularSystem:
    """
    The 2K×2K endpoint system at a trial λ. Columns 2i and 2i+1 hold
    y_i(0) and y_i'(0) of the i-th edge, each pair divided by ``scales[i]``.
    ``labels`` names the vertex and the kind of every row.
    """
    lam: float
    matrix: np.ndarray
    labels: Tuple[Tuple[str, str], ...]
    scales: np.ndarray

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def determinant(self):
        return float(np.linalg.det(self.matrix))


@dataclass
class ScanResult:
    window: Tuple[float, float]
    grid: int
    roots: List[float] = field(default_factory=list)
    suspects: List[float] = field(default_factory=list)


@dataclass
class OracleCensus:
    """
    FEM eigenvalues in an open λ window paired with secular roots.

    ``missed`` are FEM values without a root within the relative tolerance,
    ``spurious`` roots without a FEM value, ``unresolved`` FEM values that
    sit on a suspected double root.
    """
    window: Tuple[float, float]
    rtol: float
    roots: List[float] = field(default_factory=list)
    fem_values: List[float] = field(default_factory=list)
    pairs: List[Tuple[float, float, float]] = field(default_factory=list)
    missed: List[float] = field(default_factory=list)
    spurious: List[float] = field(default_factory=list)
    unresolved: List[float] = field(default_factory=list)
    suspects: List[float] = field(default_factory=list)

    @property
    def oracle_count(self):
        return len(self.roots)

    @property
    def fem_count(self):
        return len(self.fem_values)

    @property
    def count_match(self):
        return self.oracle_count == self.fem_count

    @property
    def max_relative_error(self):
        return max((rel for _, _, rel in self.pairs), default=0.0)

    @property
    def passed(self):
        return not self.missed and not self.spurious

    def as_dict(self):
        return {
            'window': list(self.window),
            'rtol': self.rtol,
            'oracle_count': self.oracle_count,
            'fem_count': self.fem_count,
            'count_match': self.count_match,
            'max_relative_error': self.max_relative_error,
            'passed': self.passed,
            'pairs': [{'fem': fem, 'root': root, 'relative_error': rel} for fem, root, rel in self.pairs],
            'missed': list(self.missed),
            'spurious': list(self.spurious),
            'unresolved': list(self.unresolved),
            'suspects': list(self.suspects),
        }
