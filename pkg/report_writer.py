"""Plain-text outputs: CSV samples and JSON reports with the resolved config embedded."""
import csv
from dataclasses import asdict, is_dataclass
import json
import logging
import math
import os

import numpy as np

from config import emit_config

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _fmt(value):
    return FLOAT_FORMAT % value


def _open_csv(path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return open(path, 'w', newline='')


def write_trajectory_csv(path, traj):
    """One row per sample time and cell: t,x,f_plus,f_minus."""
    x = traj.grid.centers
    with _open_csv(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t', 'x', 'f_plus', 'f_minus'])
        for t, state in zip(traj.times, traj.states):
            for xi, plus, minus in zip(x, state.f_plus, state.f_minus):
                writer.writerow([_fmt(t), _fmt(xi), _fmt(plus), _fmt(minus)])
    logger.info(f"Wrote {len(traj)} samples to {path}")
    return path


def write_layer_csv(path, profile, grid):
    x = grid.centers
    with _open_csv(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['tau', 'x', 'h'])
        for tau, row in zip(profile.taus, profile.values):
            for xi, h in zip(x, row):
                writer.writerow([_fmt(tau), _fmt(xi), _fmt(h)])
    logger.info(f"Wrote {len(profile.taus)} layer samples to {path}")
    return path


def write_homogeneous_csv(path, states):
    with _open_csv(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t', 'f1', 'f_minus1'])
        for state in states:
            writer.writerow([_fmt(state.t), _fmt(state.f1), _fmt(state.f_minus1)])
    return path


def _jsonable(value):
    if is_dataclass(value) and not isinstance(value, type):
        return _jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no inf/nan
        return value if math.isfinite(value) else str(value)
    return value


def write_report(path, report, config):
    """
    Write a JSON report with the fully resolved configuration under 'config'.

    Args:
        path: Output file.
        report: Mapping of results (dataclasses, arrays and numpy scalars allowed).
        config: RunConfig used for the run.
    """
    payload = _jsonable(dict(report))
    payload['config'] = json.loads(emit_config(config))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info(f"Wrote report to {path}")
    return path
