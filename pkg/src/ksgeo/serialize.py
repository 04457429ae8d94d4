"""CSV/JSON artifacts for trajectories and spectra.

Floats are written so that re-parsing gives back the identical double:
``%.17g`` in CSV, Python's shortest round-trip repr in JSON.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .geometry import ConstantsOfMotion, GeodesicState, SpacetimeParams
from .integrator import IntegrationConfig, Trajectory, normalization_deviation
from .oscillator import CLAIM_NOTE, GridSpec, OscillatorParams, SpectrumLevel, SpectrumResult

SCHEMA_VERSION = 1
TRAJECTORY_COLUMNS = (
    "tau", "t", "r", "theta", "phi", "tdot", "rdot", "thetadot", "phidot", "residual",
)
_STATE_FIELDS = TRAJECTORY_COLUMNS[:-1]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a sibling temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_dict(config: IntegrationConfig) -> dict:
    d = asdict(config)
    # JSON has no infinity; None stands for "unbounded"
    for key in ("max_step", "max_tau"):
        if math.isinf(d[key]):
            d[key] = None
    return d


def _config_from_dict(d: dict) -> IntegrationConfig:
    d = dict(d)
    for key in ("max_step", "max_tau"):
        if d.get(key) is None:
            d[key] = math.inf
    return IntegrationConfig(**d)


def trajectory_rows(traj: Trajectory) -> list[list[float]]:
    res = traj.residuals()
    return [
        [getattr(s, f) for f in _STATE_FIELDS] + [float(rv)]
        for s, rv in zip(traj.samples, np.atleast_1d(res))
    ]


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for row in trajectory_rows(traj):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def trajectory_metadata(traj: Trajectory) -> dict:
    return {
        "params": asdict(traj.params),
        "constants": asdict(traj.constants),
        "config": _config_dict(traj.config),
        "termination": traj.termination,
        "max_normalization_drift": traj.max_normalization_drift,
        "turning_radii": list(traj.turning_radii),
    }


def trajectory_to_json(traj: Trajectory) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "metadata": trajectory_metadata(traj),
        "samples": [dict(zip(TRAJECTORY_COLUMNS, row)) for row in trajectory_rows(traj)],
    }
    return json.dumps(doc, indent=1) + "\n"


def _states_from_rows(rows) -> tuple[GeodesicState, ...]:
    return tuple(GeodesicState(**{f: row[f] for f in _STATE_FIELDS}) for row in rows)


def trajectory_from_json(text: str) -> Trajectory:
    doc = json.loads(text)
    meta = doc["metadata"]
    return Trajectory(
        samples=_states_from_rows(doc["samples"]),
        constants=ConstantsOfMotion(**meta["constants"]),
        params=SpacetimeParams(**meta["params"]),
        config=_config_from_dict(meta["config"]),
        max_normalization_drift=meta["max_normalization_drift"],
        termination=meta["termination"],
        turning_radii=tuple(meta["turning_radii"]),
    )


def trajectory_from_csv(text: str, params: SpacetimeParams, consts: ConstantsOfMotion,
                        config: IntegrationConfig = IntegrationConfig(),
                        termination: str = "max_tau") -> Trajectory:
    """Rebuild a trajectory from CSV; the file carries samples only, so context is passed in."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TRAJECTORY_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    rows = [{k: float(v) for k, v in row.items()} for row in reader]
    samples = _states_from_rows(rows)
    r = np.array([s.r for s in samples])
    rdot = np.array([s.rdot for s in samples])
    drift = float(np.max(normalization_deviation(r, rdot, consts, params)))
    return Trajectory(samples, consts, params, config, drift, termination)


def spectrum_to_dict(result: SpectrumResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "grid": asdict(result.grid),
        "params": asdict(result.params),
        "levels": [asdict(level) for level in result.levels],
        "claim_comparison": result.claim_comparison,
        "claim_note": CLAIM_NOTE,
    }


def spectrum_to_json(result: SpectrumResult) -> str:
    return json.dumps(spectrum_to_dict(result), indent=1) + "\n"


def spectrum_from_json(text: str) -> SpectrumResult:
    doc = json.loads(text)
    return SpectrumResult(
        levels=tuple(SpectrumLevel(**lv) for lv in doc["levels"]),
        claim_comparison=doc["claim_comparison"],
        grid=GridSpec(**doc["grid"]),
        params=OscillatorParams(**doc["params"]),
    )
