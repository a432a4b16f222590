from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np


class ConeViolationError(Exception):
    pass


class PositiveConeEmptyError(Exception):
    pass


class HalfRangeDegeneracyError(Exception):
    pass


class NormConsistencyError(Exception):
    pass


class DimensionMismatchError(ValueError):
    pass


C_PLUS = 'C+'
C_MINUS = 'C-'


class ConeEntry(NamedTuple):
    index: int
    eigenvalue: float
    krein_value: float
    tag: str


class SpectralProjections(NamedTuple):
    """
    P± act on reduced coordinates (F-orthogonal spectral projectors); Q±
    act on edge-wise coordinates (restriction to G±).
    """
    p_plus: np.ndarray
    p_minus: np.ndarray
    q_plus: np.ndarray
    q_minus: np.ndarray


@dataclass
class KreinReport:
    cone_table: List[ConeEntry] = field(default_factory=list)
    s_norm_constants: Dict[str, float] = field(default_factory=dict)
    vw_residuals: List[float] = field(default_factory=list)
    adjoint_residual: Optional[float] = None
    projection_checks: Dict[str, float] = field(default_factory=dict)
    maxmin_gaps: Dict[int, float] = field(default_factory=dict)
    gram_spectra: List[Tuple[int, float, float]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def cone_mismatches(self):
        return sum(1 for entry in self.cone_table if (entry.tag == C_PLUS) != (entry.eigenvalue > 0))

    @property
    def max_vw_residual(self):
        return max(self.vw_residuals) if self.vw_residuals else 0.0

    @property
    def max_maxmin_gap(self):
        return max(self.maxmin_gaps.values()) if self.maxmin_gaps else 0.0

    def as_dict(self):
        return {
            'cone_table': [entry._asdict() for entry in self.cone_table],
            'cone_mismatches': self.cone_mismatches,
            's_norm_constants': dict(self.s_norm_constants),
            'vw_residuals': list(self.vw_residuals),
            'max_vw_residual': self.max_vw_residual,
            'adjoint_residual': self.adjoint_residual,
            'projection_checks': dict(self.projection_checks),
            'maxmin_gaps': {str(n): gap for n, gap in sorted(self.maxmin_gaps.items())},
            'gram_spectra': [{'N': n, 'min_eig': lo, 'max_eig': hi} for n, lo, hi in self.gram_spectra],
            'notes': list(self.notes),
        }
