"""
Tolerances and defaults.

A value is looked up as ``GRAPH_SPECTRA_<NAME>`` on the Django settings object
when a settings module is configured, then in the environment, and finally
falls back to the packaged default below.
"""
import os

from django.conf import settings

DEFAULTS = {
    'PENCIL_RESIDUAL_RTOL': 1e-9,
    'ORTHOGONALITY_TOL': 1e-10,
    'SINGULAR_MASS_RTOL': 1e-12,
    'POSITIVITY_RTOL': 1e-10,
    'CONE_TOL': 1e-10,
    'SYMMETRY_RTOL': 1e-12,
    'PROJECTION_TOL': 1e-10,
    'VW_RTOL': 1e-8,
    'ADJOINT_RTOL': 1e-10,
    'MAXMIN_RTOL': 1e-8,
    'BRACKET_RTOL': 1e-2,
    'ROUNDOFF_RTOL': 1e-10,
    'CONVERGENCE_RTOL': 1e-3,
    'ASYMPTOTIC_SLOPE_RTOL': 2e-2,
    'ASYMPTOTIC_MAX_MESH': 2048,
    'ORACLE_FEM_RTOL': 1e-2,
    'ORACLE_GRID': 4000,
    'ROOT_XTOL': 1e-10,
    'DOUBLE_ROOT_RTOL': 1e-6,
    'PROBES': 100,
    'SEED': 0,
    'TRUNCATIONS': (5, 10, 15, 20),
}

PREFIX = 'GRAPH_SPECTRA_'


def _coerce(raw, default):
    if isinstance(default, tuple):
        return tuple(type(default[0])(item) for item in raw.split(',') if item.strip())
    return type(default)(raw)


def get_setting(name):
    if name not in DEFAULTS:
        raise KeyError("Unknown graph_spectra setting: %s" % name)
    default = DEFAULTS[name]

    if settings.configured and hasattr(settings, PREFIX + name):
        return getattr(settings, PREFIX + name)

    raw = os.environ.get(PREFIX + name)
    if raw is not None:
        return _coerce(raw, default)
    return default
