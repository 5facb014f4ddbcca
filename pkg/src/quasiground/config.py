"""Strict JSON run configuration and field CSV input/output.

A config is one JSON object with the sections ``model``, ``grid``, ``solver``
and ``sweep`` plus an integer ``seed``. Every section is optional, but
unknown keys anywhere are rejected.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DomainError
from .grid import RadialGrid
from .nonlinearity import ConstantPotential, CosinePotential, ModelSpec, TransformedPower, ZeroNonlinearity
from .solver import SolveConfig
from .transform import TransformKind, TransformSpec

__all__ = [
    "RunConfig",
    "SweepConfig",
    "load_config",
    "parse_config",
    "model_from_dict",
    "load_field_csv",
    "write_field_csv",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 42

_TOP_KEYS = {"model", "grid", "solver", "sweep", "seed"}
_GRID_KEYS = {"backend", "R", "n", "box_m", "box_side"}
_SOLVER_KEYS = {f.name for f in fields(SolveConfig)} - _GRID_KEYS


def _strict(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")
    return d


def _transform_from(d):
    if isinstance(d, str):
        d = {"kind": d}
    _strict(d, {"kind", "quadrature_tol", "table_t", "table_g"}, "model.transform")
    try:
        return TransformSpec(
            TransformKind(d.get("kind", "identity")),
            quadrature_tol=d.get("quadrature_tol", 1e-12),
            table_t=d.get("table_t"),
            table_g=d.get("table_g"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"model.transform: {exc}") from exc


def _potential_from(d):
    if isinstance(d, (int, float)):
        d = {"kind": "constant", "V0": d}
    _strict(d, {"kind", "V0", "amplitude"}, "model.potential")
    kind = d.get("kind", "constant")
    try:
        if kind == "constant":
            _strict(d, {"kind", "V0"}, "model.potential")
            return ConstantPotential(float(d.get("V0", 1.0)))
        if kind == "cosine":
            return CosinePotential(float(d.get("V0", 1.0)), float(d.get("amplitude", 0.5)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"model.potential: {exc}") from exc
    raise ConfigError(f"unknown potential kind {kind!r}")


def _nonlinearity_from(d):
    _strict(d, {"kind", "mu", "q"}, "model.nonlinearity")
    kind = d.get("kind", "transformed_power")
    try:
        if kind == "zero":
            _strict(d, {"kind"}, "model.nonlinearity")
            return ZeroNonlinearity()
        if kind in ("transformed_power", "power"):
            return TransformedPower(float(d.get("mu", 1.0)), float(d.get("q", 5.0)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"model.nonlinearity: {exc}") from exc
    raise ConfigError(f"unknown nonlinearity kind {kind!r}")


def model_from_dict(d) -> ModelSpec:
    """Build a model from the same layout ``ModelSpec.to_dict`` produces."""
    _strict(d, {"dimension", "transform", "potential", "nonlinearity", "omega_radius"}, "model")
    try:
        return ModelSpec(
            dimension=int(d.get("dimension", 3)),
            transform=_transform_from(d.get("transform", "identity")),
            potential=_potential_from(d.get("potential", {"kind": "constant", "V0": 1.0})),
            nonlinearity=_nonlinearity_from(d.get("nonlinearity", {"kind": "transformed_power"})),
            omega_radius=float(d.get("omega_radius", 1.0)),
        )
    except DomainError as exc:
        raise ConfigError(f"model: {exc}") from exc


@dataclass(frozen=True)
class SweepConfig:
    eps: tuple | None = None  # None: per-dimension default window
    rho: float = 1.0
    n: int = 4096
    mus: tuple = (1.0, 10.0, 100.0)

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("sweep.rho must be positive")
        if int(self.n) != self.n or self.n < 16:
            raise ConfigError("sweep.n must be an integer >= 16")
        if self.eps is not None and not all(e > 0 for e in self.eps):
            raise ConfigError("sweep.eps entries must be positive")

    def grid(self, dimension):
        return RadialGrid(dimension, self.rho, int(self.n))

    def to_dict(self):
        return {"eps": None if self.eps is None else list(self.eps), "rho": self.rho, "n": self.n, "mus": list(self.mus)}


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    solver: SolveConfig = field(default_factory=SolveConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = DEFAULT_SEED

    def to_dict(self):
        solver = self.solver.to_dict()
        return {
            "model": self.model.to_dict(),
            "grid": {k: solver.pop(k) for k in sorted(_GRID_KEYS)},
            "solver": solver,
            "sweep": self.sweep.to_dict(),
            "seed": self.seed,
        }


def parse_config(doc: dict) -> RunConfig:
    _strict(doc, _TOP_KEYS, "config")
    model = model_from_dict(doc.get("model", {}))
    grid = _strict(doc.get("grid", {}), _GRID_KEYS, "grid")
    solver = _strict(doc.get("solver", {}), _SOLVER_KEYS, "solver")
    try:
        solve_cfg = SolveConfig(**grid, **solver)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    sw = dict(_strict(doc.get("sweep", {}), {"eps", "rho", "n", "mus"}, "sweep"))
    for k in ("eps", "mus"):
        if sw.get(k) is not None:
            if not isinstance(sw[k], list):
                raise ConfigError(f"sweep.{k} must be a list")
            sw[k] = tuple(float(x) for x in sw[k])
    sweep = SweepConfig(**sw)
    seed = doc.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    return RunConfig(model, solve_cfg, sweep, seed)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return parse_config(doc)


# -- fields as CSV -----------------------------------------------------------------


def write_field_csv(path, grid, columns: dict):
    """Write one row per node: coordinates then the named columns."""
    if grid.backend == "radial":
        pts, coord = grid.r[:, None], ["r"]
    else:
        pts, coord = grid.points().reshape(-1, 3), ["x", "y", "z"]
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float).ravel() for k in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(coord + names)
        for i in range(pts.shape[0]):
            w.writerow([repr(float(c)) for c in pts[i]] + [repr(float(c[i])) for c in cols])


def load_field_csv(path, grid, column=None) -> np.ndarray:
    """Read nodal values written by ``write_field_csv``; the first data column by default."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read field file: {exc}") from exc
    if len(rows) < 2:
        raise ConfigError("field file has no data")
    header = rows[0]
    ncoord = 1 if header[0] == "r" else 3
    if column is None:
        if len(header) <= ncoord:
            raise ConfigError("field file has no value column")
        j = ncoord
    elif column in header:
        j = header.index(column)
    else:
        raise ConfigError(f"no column {column!r} in field file")
    try:
        vals = np.array([float(r[j]) for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad field file: {exc}") from exc
    if vals.size != int(np.prod(grid.shape)):
        raise ConfigError(f"field file has {vals.size} nodes, grid has {int(np.prod(grid.shape))}")
    return vals.reshape(grid.shape)
