"""
Report files written by the command line. CSV floats use ``%.17g``; JSON
floats use Python's shortest round-trip repr. Both are byte-stable for
identical input.
"""
import csv
import json
import math
import os

import numpy as np

from .spectra.tasks import eigenfunction_values

SPECTRUM_CSV = 'spectrum.csv'
KREIN_JSON = 'krein.json'
GRAM_CSV = 'gram.csv'
BRACKET_CSV = 'bracket.csv'
BRACKET_JSON = 'bracket.json'
ASYMPTOTICS_JSON = 'asymptotics.json'
ASYMPTOTICS_CSV = 'asymptotics.csv'
ORACLE_CSV = 'oracle.csv'
VERIFY_JSON = 'verify.json'


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return '%.17g' % value
    return str(value)


def make_json_safe(obj):
    """Plain Python containers and scalars; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): make_json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [make_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return make_json_safe(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(payload, path):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(make_json_safe(payload), handle, indent=2)
        handle.write('\n')
    return path


def write_csv(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    return path


def spectrum_rows(s, window=None):
    rows = [(index, value) for index, value, _ in s.positive_branch + s.negative_branch]
    if window is not None:
        lo, hi = window
        rows = [(index, value) for index, value in rows if lo < value < hi]
    return rows


def write_spectrum(s, out, window=None):
    return write_csv(os.path.join(out, SPECTRUM_CSV), ['branch_index', 'lambda'], spectrum_rows(s, window))


def write_eigenfunctions(s, d, out, count):
    """``eigenfunction_<index>.csv`` for the first ``count`` indices of each branch."""
    written = []
    indices = ([n for n in range(1, count + 1) if n <= len(s.positive_values)]
               + [-n for n in range(1, count + 1) if n <= len(s.negative_values)])
    for index in indices:
        rows = []
        for edge_id, (x, values) in eigenfunction_values(s, d, index).items():
            rows.extend((edge_id, float(a), float(b)) for a, b in zip(x, values))
        written.append(write_csv(os.path.join(out, 'eigenfunction_%d.csv' % index), ['edge_id', 'x', 'value'], rows))
    return written


def write_gram(report, out):
    return write_csv(os.path.join(out, GRAM_CSV), ['N', 'min_eig', 'max_eig'], report.gram_spectra)


def write_bracket(report, out):
    header = ['n', 'lambda_N', 'lambda', 'lambda_D', 'pass', 'lower_slack', 'upper_slack', 'verified']
    write_csv(os.path.join(out, BRACKET_CSV), header, report.rows)
    return write_json(report.as_dict(), os.path.join(out, BRACKET_JSON))


def write_asymptotics(fit, out):
    write_csv(os.path.join(out, ASYMPTOTICS_CSV), ['n', 'sqrt_lambda', 'model'], fit.points)
    return write_json(fit.as_dict(), os.path.join(out, ASYMPTOTICS_JSON))


def write_roots(roots, out):
    return write_csv(os.path.join(out, ORACLE_CSV), ['index', 'lambda'],
                     [(i + 1, root) for i, root in enumerate(roots)])
