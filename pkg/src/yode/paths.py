"""Uniform grids, sampled paths and the CSV path format."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .errors import DimensionError, GridMismatchError, IntervalError, PathFormatError

#: relative tolerance for the uniform-spacing check on load
SPACING_RTOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``t0 = s_0 < s_1 < ... < s_{n-1} = t1``."""

    t0: float
    t1: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)):
            raise IntervalError(f"grid ends must be finite, got [{self.t0}, {self.t1}]")
        if not self.t0 < self.t1:
            raise IntervalError(f"grid needs t0 < t1, got [{self.t0}, {self.t1}]")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise IntervalError(f"grid needs at least 2 points, got {self.n_points}")
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t1", float(self.t1))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def step(self) -> float:
        return (self.t1 - self.t0) / (self.n_points - 1)

    @property
    def length(self) -> float:
        return self.t1 - self.t0

    @cached_property
    def times(self) -> np.ndarray:
        t = np.linspace(self.t0, self.t1, self.n_points)
        t.flags.writeable = False
        return t

    def time(self, index: int) -> float:
        self.check_index(index)
        return float(self.times[index])

    def index_of(self, t: float, *, rtol: float = SPACING_RTOL) -> int:
        """Index of an on-grid time; raises if ``t`` is not a grid point."""
        x = (t - self.t0) / self.step
        i = int(round(x))
        if abs(x - i) > rtol * max(1.0, abs(x)) or not 0 <= i < self.n_points:
            raise IntervalError(f"time {t!r} is not a point of {self}")
        return i

    def steps(self, duration: float, *, rtol: float = SPACING_RTOL) -> int:
        """Number of grid steps spanning ``duration`` (must be a whole number)."""
        x = duration / self.step
        k = int(round(x))
        if abs(x - k) > rtol * max(1.0, abs(x)):
            raise IntervalError(f"duration {duration!r} is not a whole number of steps ({self.step!r})")
        return k

    def check_index(self, i: int) -> None:
        if not 0 <= i < self.n_points:
            raise IntervalError(f"index {i} outside grid of {self.n_points} points")

    def check_interval(self, i0: int, i1: int) -> None:
        if not (0 <= i0 < i1 < self.n_points):
            raise IntervalError(
                f"need 0 <= i0 < i1 < {self.n_points}, got i0={i0}, i1={i1}"
            )

    def window(self, i0: int, i1: int) -> "Grid":
        self.check_interval(i0, i1)
        return Grid(self.times[i0], self.times[i1], i1 - i0 + 1)

    def coarsen(self, stride: int) -> "Grid":
        if stride < 1 or (self.n_points - 1) % stride:
            raise IntervalError(f"stride {stride} does not divide {self.n_points - 1} steps")
        return Grid(self.t0, self.t1, (self.n_points - 1) // stride + 1)

    def same_as(self, other: "Grid") -> bool:
        return self.n_points == other.n_points and self.t0 == other.t0 and self.t1 == other.t1

    @classmethod
    def dyadic(cls, level: int, t0: float = 0.0, t1: float = 1.0) -> "Grid":
        return cls(t0, t1, 2**level + 1)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DiscretePath:
    """Vector-valued path sampled on a :class:`Grid`.

    ``values`` has shape ``(n_points, m)``; a 1-d input is read as ``m = 1``.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise DimensionError(f"path values must be (n_points, m), got shape {v.shape}")
        if v.shape[0] != self.grid.n_points:
            raise DimensionError(
                f"{v.shape[0]} values for a grid of {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(v)):
            raise PathFormatError("path values must be finite")
        if v is self.values and not v.flags.writeable and v.flags.c_contiguous:
            return
        # always own the buffer so callers cannot mutate it afterwards
        object.__setattr__(self, "values", _freeze(np.array(v, copy=True)))

    @classmethod
    def _trusted(cls, grid: Grid, values: np.ndarray) -> "DiscretePath":
        """Wrap an array already known to be finite and well shaped."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", _freeze(values))
        return obj

    @classmethod
    def from_function(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> "DiscretePath":
        return cls(grid, f(grid.times))

    @classmethod
    def constant(cls, grid: Grid, c) -> "DiscretePath":
        c = np.atleast_1d(np.asarray(c, dtype=np.float64))
        return cls(grid, np.broadcast_to(c, (grid.n_points, c.size)).copy())

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self) -> int:
        return self.grid.n_points

    def __getitem__(self, i) -> np.ndarray:
        return self.values[i]

    @property
    def initial(self) -> np.ndarray:
        return self.values[0]

    def _check_same_grid(self, other: "DiscretePath") -> None:
        if not self.grid.same_as(other.grid):
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")
        if self.dim != other.dim:
            raise DimensionError(f"dimensions differ: {self.dim} vs {other.dim}")

    def __add__(self, other: "DiscretePath") -> "DiscretePath":
        self._check_same_grid(other)
        return DiscretePath(self.grid, self.values + other.values)

    def __sub__(self, other: "DiscretePath") -> "DiscretePath":
        self._check_same_grid(other)
        return DiscretePath(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "DiscretePath":
        return DiscretePath(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def map(self, f: Callable[[np.ndarray], np.ndarray]) -> "DiscretePath":
        return DiscretePath(self.grid, f(self.values))

    def window(self, i0: int, i1: int) -> "DiscretePath":
        return DiscretePath._trusted(self.grid.window(i0, i1), self.values[i0 : i1 + 1])

    def coarsen(self, stride: int) -> "DiscretePath":
        return DiscretePath._trusted(self.grid.coarsen(stride), self.values[::stride])

    def component(self, k: int) -> "DiscretePath":
        return DiscretePath._trusted(self.grid, self.values[:, k : k + 1])

    def equals(self, other: "DiscretePath") -> bool:
        """Bitwise equality of grid and values."""
        return self.grid.same_as(other.grid) and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class LiftedPath:
    """The path frozen at ``freeze_index``: ``x -> Y[min(freeze_index, x)]``."""

    base: DiscretePath
    freeze_index: int

    def __post_init__(self):
        self.base.grid.check_index(self.freeze_index)

    def __call__(self, x_index: int) -> np.ndarray:
        self.base.grid.check_index(x_index)
        return self.base.values[min(self.freeze_index, x_index)]

    def materialize(self) -> DiscretePath:
        v = self.base.values.copy()
        v[self.freeze_index + 1 :] = v[self.freeze_index]
        return DiscretePath._trusted(self.base.grid, v)


def freeze_values(values: np.ndarray, t_index: int) -> np.ndarray:
    """Copy of ``values`` held constant after ``t_index``."""
    v = np.array(values, dtype=np.float64, copy=True)
    v[t_index + 1 :] = v[t_index]
    return v


# --------------------------------------------------------------------------
# CSV path files: header ``t,v1,...,vm``, %.17g reals, LF line endings.


def format_real(x: float) -> str:
    return "%.17g" % x


def dumps_path(path: DiscretePath) -> str:
    out = io.StringIO()
    out.write(",".join(["t"] + [f"v{k + 1}" for k in range(path.dim)]) + "\n")
    for t, row in zip(path.times, path.values):
        out.write(",".join([format_real(t)] + [format_real(x) for x in row]) + "\n")
    return out.getvalue()


def write_path(path: DiscretePath, file: str | os.PathLike) -> None:
    with open(file, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_path(path))


def loads_path(text: str, *, source: str = "<string>") -> DiscretePath:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise PathFormatError(f"{source}: empty path file")
    header = [h.strip() for h in rows[0]]
    m = len(header) - 1
    if m < 1 or header[0] != "t" or header[1:] != [f"v{k + 1}" for k in range(m)]:
        raise PathFormatError(f"{source}: header must be t,v1,...,vm; got {','.join(header)}")
    body = [r for r in rows[1:] if r]
    if len(body) < 2:
        raise PathFormatError(f"{source}: need at least 2 rows")
    try:
        data = np.array([[float(x) for x in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise PathFormatError(f"{source}: {exc}") from None
    if data.shape[1] != m + 1:
        raise PathFormatError(f"{source}: ragged rows")
    t = data[:, 0]
    dt = np.diff(t)
    if not np.all(dt > 0):
        raise PathFormatError(f"{source}: times must be strictly increasing")
    grid = Grid(t[0], t[-1], len(t))
    if np.max(np.abs(dt - grid.step)) > SPACING_RTOL * grid.step:
        raise PathFormatError(f"{source}: times are not uniformly spaced")
    return DiscretePath(grid, data[:, 1:])


def read_path(file: str | os.PathLike) -> DiscretePath:
    with open(file, encoding="utf-8") as fh:
        return loads_path(fh.read(), source=str(file))


# --------------------------------------------------------------------------
# key=value sidecars and manifests


def dumps_keyvalue(items: dict | Iterable[tuple[str, object]]) -> str:
    pairs = items.items() if isinstance(items, dict) else items
    lines = []
    for k, v in pairs:
        if isinstance(v, float):
            v = format_real(v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif v is None:
            v = ""
        lines.append(f"{k}={v}")
    return "\n".join(lines) + "\n"


def write_keyvalue(items, file: str | os.PathLike) -> None:
    with open(file, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_keyvalue(items))


def read_keyvalue(file: str | os.PathLike) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PathFormatError(f"{file}:{lineno}: expected key=value, got {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
