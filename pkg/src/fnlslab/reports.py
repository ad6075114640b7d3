"""Result bundles, JSON reports, and CSV tables.

Everything written is structured text with deterministic content: JSON
with sorted keys, CSV with a header row, and floats rendered by repr
(shortest round-trip), so identical config + seed reproduces files
byte for byte.  Reports carry no wall-clock information for the same
reason; provenance records the package version, seed, and tolerances.
Every report is validated against the versioned schema shipped in
fnlslab/schema before it is written.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .config import RunConfig
from .errors import ValidationError
from .params import EPS_ANTI, EPS_FFT, EPS_REAL

SCHEMA_NAME = "report-v1"


@dataclass(frozen=True)
class ResultBundle:
    """Everything one run produced: scalars, tables, and the config echo.

    `results` holds JSON-serializable scalars and small structures;
    `tables` maps a table name to (header, rows) destined for CSV.
    """

    config: RunConfig
    command: str
    results: dict
    tables: dict = field(default_factory=dict)


def _pyify(obj):
    """Recursively convert numpy scalars/arrays for JSON emission."""
    if isinstance(obj, dict):
        return {str(k): _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def load_schema() -> dict:
    text = resources.files("fnlslab.schema").joinpath(
        f"{SCHEMA_NAME}.json").read_text(encoding="utf-8")
    return json.loads(text)


def report_dict(bundle: ResultBundle) -> dict:
    """Schema-shaped report; raises ValidationError if it does not fit."""
    cfg = bundle.config
    prob = cfg.problem
    obj = {
        "schema": SCHEMA_NAME,
        "command": bundle.command,
        "provenance": {
            "version": _package_version(),
            "seed": int(cfg.seed),
            "workers": cfg.workers,
            "tolerances": {
                "eps_fft": EPS_FFT,
                "eps_real": EPS_REAL,
                "eps_anti": EPS_ANTI,
                "profile_tol": float(cfg.solver["tol"]),
            },
        },
        "config": {
            "problem": {
                "alpha": prob.alpha,
                "sigma": prob.sigma,
                "gamma": prob.gamma,
                "half_period": prob.half_period,
            },
            "solver": _pyify(cfg.solver),
            "grid": _pyify(cfg.grid),
            "kernels": _pyify(cfg.kernels),
            "evolve": _pyify(cfg.evolve),
            "sweep": _pyify(cfg.sweep),
            "stability": _pyify(cfg.stability),
            "rearrange": _pyify(cfg.rearrange),
        },
        "results": _pyify(bundle.results),
    }
    try:
        jsonschema.validate(obj, load_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"report does not fit {SCHEMA_NAME}: "
                              f"{exc.message}") from exc
    return obj


def render_report(bundle: ResultBundle) -> str:
    return json.dumps(report_dict(bundle), sort_keys=True, indent=2) + "\n"


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def emit(bundle: ResultBundle, out_dir) -> list[Path]:
    """Write report.json, config.ini, and one CSV per table.

    Returns the written paths, sorted.  Writing is serialized; numeric
    cells use shortest round-trip formatting.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    report_path = out / "report.json"
    report_path.write_text(render_report(bundle), encoding="utf-8")
    written.append(report_path)
    echo_path = out / "config.ini"
    echo_path.write_text(bundle.config.echo, encoding="utf-8")
    written.append(echo_path)
    for name, (header, rows) in bundle.tables.items():
        path = out / f"{name}.csv"
        write_csv(path, header, rows)
        written.append(path)
    return sorted(written)


def _package_version() -> str:
    from . import __version__
    return __version__
