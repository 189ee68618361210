"""Text formats: field dumps, key = value reports and the sweep CSV.

Every file opens with ``#`` comment lines carrying provenance.  Writes go
through a temporary file and ``os.replace`` so a file is either complete or
absent.
"""
from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .grid import Grid, build_grid

SWEEP_COLUMNS = ("eps", "c_eps", "c_infty", "norm_sq", "bound_2k_cinfty", "boundary_max",
                 "exterior_sup", "a", "residual_original", "solves_original", "argmax",
                 "converged")


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance_lines(provenance: dict | None) -> list[str]:
    return [f"# {k} {v}" for k, v in (provenance or {}).items()]


def _g17(x: float) -> str:
    return format(float(x), ".17g")


# ------------------------------------------------------------------ field dump


def format_field_dump(grid: Grid, u: np.ndarray, eps: float,
                      provenance: dict | None = None) -> str:
    grid.check(u)
    lines = [f"# {grid.dim} {grid.points_per_axis} {_g17(grid.spacing)} "
             f"{_g17(grid.half_width)} {_g17(eps)}"]
    lines += _provenance_lines(provenance)
    for index in np.ndindex(*grid.shape):
        lines.append(" ".join(str(i) for i in index) + " " + _g17(u[index]))
    return "\n".join(lines) + "\n"


def write_field_dump(path, grid: Grid, u: np.ndarray, eps: float,
                     provenance: dict | None = None) -> None:
    atomic_write(path, format_field_dump(grid, u, eps, provenance))


def read_field_dump(path) -> tuple[Grid, np.ndarray, float]:
    with open(path) as fh:
        header = fh.readline().split()
        dim, n = int(header[1]), int(header[2])
        h, L, eps = float(header[3]), float(header[4]), float(header[5])
        data = np.loadtxt(fh, comments="#", ndmin=2)
    grid = Grid(dim=dim, half_width=L, spacing=h, points_per_axis=n)
    u = np.zeros(grid.shape)
    idx = tuple(data[:, i].astype(int) for i in range(dim))
    u[idx] = data[:, dim]
    return grid, u, eps


# --------------------------------------------------------------------- reports


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k} = {_toml_value(x)}" for k, x in v.items()) + "}"
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_report(sections: dict, provenance: dict | None = None) -> str:
    """TOML text: top-level scalars first, then one table per nested dict."""
    lines = _provenance_lines(provenance)
    scalars = {k: v for k, v in sections.items() if not isinstance(v, dict)}
    tables = {k: v for k, v in sections.items() if isinstance(v, dict)}
    lines += [f"{k} = {_toml_value(v)}" for k, v in scalars.items()]
    for name, table in tables.items():
        lines.append("")
        lines.append(f"[{name}]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in table.items()]
    return "\n".join(lines) + "\n"


def write_report(path, sections: dict, provenance: dict | None = None) -> None:
    atomic_write(path, format_report(sections, provenance))


# ------------------------------------------------------------------- sweep CSV


def _g12(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return format(float(x), ".12g")


def sweep_record(row) -> list[str]:
    return [
        _g12(row.eps), _g12(row.c_eps), _g12(row.c_infty), _g12(row.norm_sq),
        _g12(row.bound_2k_cinfty), _g12(row.boundary_max), _g12(row.exterior_sup),
        _g12(row.threshold_a), _g12(row.residual_original), _g12(bool(row.solves_original)),
        ";".join(_g12(c) for c in row.argmax_location), _g12(bool(row.converged)),
    ]


def format_sweep_csv(rows, summary: dict, provenance: dict | None = None) -> str:
    lines = _provenance_lines(provenance)
    lines.append(",".join(SWEEP_COLUMNS))
    lines += [",".join(sweep_record(r)) for r in rows]
    for key, value in summary.items():
        lines.append(f"# {key} {_g12(value) if isinstance(value, (bool, float, int)) else value}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(path, rows, summary: dict, provenance: dict | None = None) -> None:
    atomic_write(path, format_sweep_csv(rows, summary, provenance))


def read_sweep_csv(path) -> tuple[list[dict], dict]:
    """Rows as dicts of strings, plus the trailing ``# key value`` summary block."""
    rows, summary = [], {}
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if header is not None:
                    key, _, value = line[2:].partition(" ")
                    summary[key] = value
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(dict(zip(header, line.split(","))))
    return rows, summary
