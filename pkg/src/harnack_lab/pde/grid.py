"""Space-time grid fields produced by the solvers or sampled from exact solutions."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, RegionError


def uniform_axis(L: float, dx: float) -> np.ndarray:
    """Nodes ``-L, -L + dx, ..., L``; ``2L/dx`` must be an integer."""
    if not (L > 0 and dx > 0):
        raise ConfigError(f"need L > 0 and dx > 0, got L={L}, dx={dx}")
    ratio = 2.0 * L / dx
    n = int(round(ratio))
    if n < 2 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ConfigError(f"2L/dx = {ratio} must be an integer >= 2")
    return -L + dx * np.arange(n + 1)


def trapezoid_weights(shape: tuple[int, ...], dx: float) -> np.ndarray:
    w = np.ones(shape)
    for axis, n in enumerate(shape):
        edge = [slice(None)] * len(shape)
        for idx in (0, n - 1):
            edge[axis] = idx
            w[tuple(edge)] *= 0.5
    return w * dx ** len(shape)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridSolution:
    """A field ``values[k, i1, ..., id]`` at ``times[k]`` on a uniform box grid.

    ``rates`` holds the discrete time derivative (the right-hand side of the
    scheme) at each stored time, NaN where it is undefined (Dirichlet
    boundary nodes).  Arrays are read-only once constructed.
    """

    axis: np.ndarray
    d: int
    times: np.ndarray
    values: np.ndarray
    equation: dict
    rates: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "axis", _frozen(self.axis))
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.rates is not None:
            object.__setattr__(self, "rates", _frozen(self.rates))
        n = self.axis.size
        expected = (self.times.size,) + (n,) * self.d
        if self.values.shape != expected:
            raise ConfigError(f"values shape {self.values.shape} != {expected}")
        if self.rates is not None and self.rates.shape != expected:
            raise ConfigError("rates must match values")

    # ------------------------------------------------------------ geometry

    @property
    def dx(self) -> float:
        return float(self.axis[1] - self.axis[0])

    @property
    def L(self) -> float:
        return float(-self.axis[0])

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.axis.size,) * self.d

    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``(n, ..., n, d)``."""
        grids = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack(grids, axis=-1)

    def time_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise RegionError(f"t={t} is not a stored time")
        return k

    def node_index(self, x) -> tuple[int, ...]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.rint((x + self.L) / self.dx).astype(int)
        if np.any(idx < 0) or np.any(idx >= self.axis.size):
            raise RegionError(f"x={x} outside the grid")
        return tuple(int(i) for i in idx)

    # ------------------------------------------------------------ integrals

    def mass(self, k: int = -1) -> float:
        return float(np.sum(self.values[k] * trapezoid_weights(self.shape, self.dx)))

    def l1_error(self, exact, k: int = -1) -> float:
        ref = exact.u(self.mesh(), self.times[k])
        return float(np.sum(np.abs(self.values[k] - ref)) * self.dx**self.d)

    # ------------------------------------------------------------ constructors

    @classmethod
    def from_exact(cls, exact, L: float, dx: float, times, d: int = 1, equation: dict | None = None):
        """Sample an exact solution (values and analytic ``u_t``) on a grid."""
        axis = uniform_axis(L, dx)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        proto = cls(axis, d, times[:1], np.zeros((1,) + (axis.size,) * d), {})
        mesh = proto.mesh()
        vals = np.stack([exact.u(mesh, t) for t in times])
        rates = np.stack([exact.ut(mesh, t) for t in times]) if hasattr(exact, "ut") else None
        eq = equation or {"name": type(exact).__name__}
        return cls(axis, d, times, vals, eq, rates, {"source": "exact", "exact": type(exact).__name__})

    def with_field(self, values, rates=None, **meta) -> "GridSolution":
        """Same grid and times with a different field (e.g. ``lambda * u``)."""
        md = dict(self.metadata)
        md.update(meta)
        return GridSolution(self.axis, self.d, self.times, values, self.equation, rates, md)

    # ------------------------------------------------------------ export

    def csv_header(self) -> list[str]:
        xs = ["x"] if self.d == 1 else [f"x{i + 1}" for i in range(self.d)]
        return xs + ["t", "u"]

    def write_csv(self, path) -> Path:
        path = Path(path)
        mesh = self.mesh().reshape(-1, self.d)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.csv_header())
            for k, t in enumerate(self.times):
                flat = self.values[k].reshape(-1)
                for pt, val in zip(mesh, flat):
                    writer.writerow([repr(float(c)) for c in pt] + [repr(float(t)), repr(float(val))])
        return path

    def sidecar(self) -> dict:
        return {
            "grid": {"d": self.d, "L": self.L, "dx": self.dx, "nodes_per_axis": int(self.axis.size)},
            "times": {"count": int(self.times.size), "first": float(self.times[0]), "last": float(self.times[-1])},
            "equation": self.equation,
            "metadata": _jsonable(self.metadata),
        }

    def write(self, directory, stem: str = "solution") -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = self.write_csv(directory / f"{stem}.csv")
        json_path = directory / f"{stem}.json"
        json_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return csv_path, json_path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj
