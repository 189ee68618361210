"""Run configuration: a single TOML file with model, grid, solver, sweep and output tables."""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import tomli

from .critical_point import MPConfig
from .grid import Grid, build_grid
from .model import (Box, ModelError, Nonlinearity, Potential, catalog_potential,
                    constant_potential, gaussian_well, power_nonlinearity, region_from_dict,
                    with_sampled_sup)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Unreadable or malformed configuration (exit code 2)."""


class ResourceError(RuntimeError):
    """A run would exceed the memory guard or the computational box (exit code 2)."""


DEFAULTS = {
    "model": {
        "dim": 1,
        "potential": {"kind": "catalog", "class": 2,
                      "lambda_region": {"kind": "ball", "radius": 1.0}},
        "nonlinearity": {"kind": "power", "p": 4.0},
        "samples": 4000,
    },
    "grid": {
        "spacing": 0.02,
        "box_factor": 20.0,
        "cinf_half_width": 20.0,
        "memory_guard": 4_000_000,
    },
    "solver": {},
    "sweep": {
        "eps_list": [1.0, 0.5, 0.25, 0.125],
        "tol_level": 1e-6,
        "tol_norm": 1e-6,
        "tol_chain": 1e-6,
        "tol_residual": 1e-6,
    },
    "output": {"directory": "out", "figures": True, "dumps": True},
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "potential":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class ModelSetup:
    potential: Potential
    nonlinearity: Nonlinearity
    sample_box: Box
    samples: int


@dataclass
class RunConfig:
    raw: dict
    source: str = "<defaults>"
    digest: str = field(default="", init=False)

    def __post_init__(self):
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        self.digest = hashlib.sha256(canonical.encode()).hexdigest()[:16]

    # -- sections
    @property
    def dim(self) -> int:
        return int(self.raw["model"]["dim"])

    @property
    def grid_section(self) -> dict:
        return self.raw["grid"]

    @property
    def sweep_section(self) -> dict:
        return self.raw["sweep"]

    @property
    def output_section(self) -> dict:
        return self.raw["output"]

    @property
    def eps_list(self) -> list[float]:
        return [float(e) for e in self.sweep_section.get("eps_list", [])]

    def mp_config(self) -> MPConfig:
        solver = dict(self.raw.get("solver", {}))
        known = {f.name for f in fields(MPConfig)}
        unknown = set(solver) - known
        if unknown:
            raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
        if "bump_offset" in solver and solver["bump_offset"] is not None:
            solver["bump_offset"] = tuple(float(v) for v in solver["bump_offset"])
        try:
            return MPConfig(**solver)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver section: {exc}") from exc

    def model(self) -> ModelSetup:
        return build_model(self.raw["model"])

    def half_width_for(self, eps: float) -> float:
        g = self.grid_section
        if g.get("half_width") is not None:
            return float(g["half_width"])
        return float(g["box_factor"]) / eps

    def grid_for(self, eps: float) -> Grid:
        return self._guarded_grid(self.half_width_for(eps))

    def cinf_grid(self) -> Grid:
        return self._guarded_grid(float(self.grid_section["cinf_half_width"]))

    def _guarded_grid(self, half_width: float) -> Grid:
        h = float(self.grid_section["spacing"])
        nodes = (2 * math.ceil(half_width / h) + 1) ** self.dim
        guard = int(self.grid_section["memory_guard"])
        if nodes > guard:
            raise ResourceError(
                f"memory_guard exceeded: half_width L = {half_width:.6g} needs {nodes} nodes "
                f"(guard {guard})")
        return build_grid(self.dim, half_width, h)

    def provenance(self) -> dict:
        from . import __version__

        return {"config_sha256": self.digest, "version": __version__}


def build_model(section: dict) -> ModelSetup:
    dim = int(section["dim"])
    if dim not in (1, 2):
        raise ConfigError(f"model.dim must be 1 or 2, got {dim}")
    pspec = dict(section["potential"])
    nspec = dict(section["nonlinearity"])
    params = dict(pspec.get("params", {}))
    class_tag = int(pspec.get("class", 2))
    lam = None
    if pspec.get("lambda_region") is not None:
        region = dict(pspec["lambda_region"])
        region.setdefault("center", [0.0] * dim)
        lam = region_from_dict(region, dim)
    kind = pspec.get("kind")
    try:
        if kind == "catalog":
            pot = catalog_potential(dim, lam, class_tag)
        elif kind == "constant":
            pot = constant_potential(float(params.get("value", 1.0)), dim, class_tag, lam)
        elif kind == "gaussian":
            pot = gaussian_well(float(params["depth"]), float(params["top"]),
                                float(params.get("width", 1.0)), dim, class_tag, lam)
        else:
            raise ConfigError(f"unknown potential kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"potential params missing {exc}") from exc
    if nspec.get("kind", "power") != "power":
        raise ConfigError("only nonlinearity kind 'power' is supported")
    p = float(nspec["p"])
    nl = power_nonlinearity(p, float(nspec["theta"]) if "theta" in nspec else None)
    box_spec = section.get("sample_box") or {"kind": "box", "lower": [-20.0] * dim,
                                             "upper": [20.0] * dim}
    box = region_from_dict(dict(box_spec), dim)
    if not isinstance(box, Box):
        raise ConfigError("sample_box must be a box")
    pot = with_sampled_sup(pot, box)
    return ModelSetup(pot, nl, box, int(section.get("samples", 4000)))


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data, str(path))


def config_from_dict(data: dict, source: str = "<dict>") -> RunConfig:
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    raw = _merge(DEFAULTS, data)
    try:
        build_model(raw["model"])
    except ConfigError:
        raise
    except ModelError:
        # inadmissible constants are reported by the validator, not as parse errors
        pass
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"model section: {exc}") from exc
    if int(raw["model"]["potential"].get("class", 2)) == 1:
        log.warning("class 1 potential: the Palais-Smale condition on V is user declared, not verified")
    return RunConfig(raw, source)
