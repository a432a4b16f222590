from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np


class NonNestedError(Exception):
    pass


class UnconvergedError(Exception):
    pass


class DecoupledPositivityError(Exception):
    def __init__(self, edge_id, message):
        self.edge_id = edge_id
        super().__init__("edge %s: %s" % (edge_id, message))


class DecoupledKind(str, enum.Enum):
    DIRICHLET = 'dirichlet'
    NON_DIRICHLET = 'nondirichlet'


class NondSign(str, enum.Enum):
    """How the graph's f enters the decoupled non-Dirichlet edge problems."""
    FORM = 'form'      # f·y + y' = 0 at both ends, as stationarity of F gives
    PAPER = 'paper'    # y' = f·y at both ends


class Multiplicity(NamedTuple):
    value: float
    nu: int
    nu_plus: int


@dataclass(frozen=True, eq=False)
class DecoupledSpectrum:
    """
    Spectra of the edge-by-edge problems -y'' + q y = b·μ y.

    ``per_edge`` holds the ascending μ of every edge's scalar problem;
    ``merged_positive`` the multiset union over G⁺ (spectral parameter μ)
    and ``merged_negative`` over G⁻ (spectral parameter -μ, descending).
    """
    kind: DecoupledKind
    per_edge: Dict[str, np.ndarray]
    weights: Dict[str, int]
    merged_positive: np.ndarray
    merged_negative: np.ndarray
    multiplicity_table: List[Multiplicity]
    mesh_signature: Tuple[Tuple[str, int], ...]
    positivity_failures: Dict[str, str] = field(default_factory=dict)

    @property
    def verified(self):
        return not self.positivity_failures


class BracketRow(NamedTuple):
    n: int
    lambda_N: float
    value: float
    lambda_D: float
    passed: bool
    lower_slack: float
    upper_slack: float
    verified: bool


@dataclass
class AsymptoticFit:
    slope: float
    intercept: float
    max_residual: float
    target_slope: float
    positive_length: float
    n_range: Tuple[int, int]
    max_remainder: float
    points: List[Tuple[int, float, float]] = field(default_factory=list)
    mesh: int = 0

    @property
    def slope_error(self):
        return abs(self.slope - self.target_slope) / self.target_slope

    def as_dict(self):
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'max_residual': self.max_residual,
            'target_slope': self.target_slope,
            'slope_error': self.slope_error,
            'positive_length': self.positive_length,
            'n_range': list(self.n_range),
            'max_remainder': self.max_remainder,
            'mesh': self.mesh,
        }


@dataclass
class BracketReport:
    rows: List[BracketRow] = field(default_factory=list)
    tol: float = 0.0
    nested: bool = True
    truncated: bool = False
    positivity_failures: Dict[str, str] = field(default_factory=dict)
    convergence: Dict[int, float] = field(default_factory=dict)
    asymptotic_fit: Optional[AsymptoticFit] = None
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return all(row.passed for row in self.rows)

    def as_dict(self):
        return {
            'tol': self.tol,
            'nested': self.nested,
            'truncated': self.truncated,
            'passed': self.passed,
            'rows': [row._asdict() for row in self.rows],
            'positivity_failures': dict(self.positivity_failures),
            'convergence': {str(n): change for n, change in sorted(self.convergence.items())},
            'asymptotic_fit': self.asymptotic_fit.as_dict() if self.asymptotic_fit else None,
            'notes': list(self.notes),
        }
