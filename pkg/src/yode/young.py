"""Young integration by left-point sums.

The canonical value of ``a + int_{t_i0}^{t_j} W dX`` is the running left
sum on the path's own grid,

    I_j = a + sum_{p=i0}^{j-1} W_p (X_{p+1} - X_p),

accumulated strictly left to right so that restarting from ``I_u`` at index
``u`` reproduces the same floating point numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    DivergenceError,
    DomainError,
    GridMismatchError,
    InsufficientDataError,
    IntervalError,
)
from .holder import InequalityCheck, holder_norm
from .paths import DiscretePath, Grid

#: successive differences below this are treated as exact zeros in rate fits
UNDERFLOW = 1e-14


@dataclass(frozen=True, eq=False)
class IntegrandPath:
    """Matrix-valued path ``W``: ``values[p]`` is an ``(m, n)`` matrix."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 3 or v.shape[0] != self.grid.n_points:
            raise DimensionError(
                f"integrand values must be (n_points, m, n) with n_points={self.grid.n_points}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("integrand values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]

    @classmethod
    def from_path(cls, path: DiscretePath) -> "IntegrandPath":
        """Column-vector integrand: ``(m,)`` values become ``(m, 1)`` matrices."""
        return cls(path.grid, path.values[:, :, None])

    @classmethod
    def constant(cls, grid: Grid, c) -> "IntegrandPath":
        c = np.atleast_2d(np.asarray(c, dtype=np.float64))
        return cls(grid, np.broadcast_to(c, (grid.n_points,) + c.shape))

    @classmethod
    def from_function(cls, grid: Grid, f) -> "IntegrandPath":
        v = np.asarray(f(grid.times), dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None, None]
        return cls(grid, v)

    def as_path(self) -> DiscretePath:
        """Flattened view used for Hölder norms (Euclidean = operator norm for vectors)."""
        n, r, c = self.values.shape
        return DiscretePath(self.grid, self.values.reshape(n, r * c))

    def coarsen(self, stride: int) -> "IntegrandPath":
        return IntegrandPath(self.grid.coarsen(stride), self.values[::stride])


@dataclass(frozen=True)
class YoungResult:
    integral_path: DiscretePath
    level: int | None
    k_constant: float | None


def sewing_constant(mu: float) -> float:
    """``1 / (1 - 2^(1 - mu))``; only defined for ``mu > 1``."""
    if not mu > 1.0:
        raise DivergenceError(f"sewing constant needs exponent sum > 1, got {mu!r}")
    if mu - 1.0 < 1e-8:
        # the constant blows up like 1/((mu-1) ln 2); treat this close to 1 as divergent
        raise DivergenceError(f"exponent sum {mu!r} too close to 1 for a finite sewing constant")
    return 1.0 / (1.0 - 2.0 ** (1.0 - mu))


def matrix_holder_norm(w: IntegrandPath, gamma: float, i0: int = 0, i1: int | None = None) -> float:
    """Hölder seminorm of a matrix path measured in the operator 2-norm."""
    if i1 is None:
        i1 = w.grid.n_points - 1
    if i1 == i0:
        return 0.0
    m, n = w.shape
    if min(m, n) == 1:
        return holder_norm(w.as_path(), gamma, i0, i1).norm
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"Hölder exponent must lie in (0, 1], got {gamma!r}")
    v = w.values
    step = w.grid.step
    best = 0.0
    for lag in range(1, i1 - i0 + 1):
        d = v[i0 + lag : i1 + 1] - v[i0 : i1 - lag + 1]
        s = np.linalg.norm(d, ord=2, axis=(1, 2))
        best = max(best, float(s.max()) / (lag * step) ** gamma)
    return best


def operator_norm(a: np.ndarray) -> float:
    a = np.atleast_2d(a)
    if min(a.shape) == 1:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a, ord=2))


def _check_pair(w: IntegrandPath, x: DiscretePath) -> None:
    if not w.grid.same_as(x.grid):
        raise GridMismatchError(f"integrand grid {w.grid} differs from driver grid {x.grid}")
    if w.shape[1] != x.dim:
        raise DimensionError(f"integrand maps R^{w.shape[1]} but the driver lives in R^{x.dim}")


def left_terms(w_values: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """``W_p (X_{p+1} - X_p)`` for stacked matrices ``(k, m, n)`` and increments ``(k, n)``."""
    if w_values.shape[2] == 1:
        return w_values[:, :, 0] * dx[:, 0:1]
    return np.einsum("pij,pj->pi", w_values, dx)


def running_sum(a: np.ndarray, terms: np.ndarray) -> np.ndarray:
    """``[a, a + t0, (a + t0) + t1, ...]``, accumulated sequentially."""
    return np.cumsum(np.vstack([np.reshape(a, (1, -1)), terms]), axis=0)


def _level_of(n_steps: int) -> int | None:
    if n_steps > 0 and n_steps & (n_steps - 1) == 0:
        return n_steps.bit_length() - 1
    return None


def young_integrate(w: IntegrandPath, x: DiscretePath, a=None, i0: int = 0, i1: int | None = None, *, mu: float | None = None) -> YoungResult:
    """Running left-point Young sum of ``w`` against ``x`` on ``[i0, i1]``.

    ``a`` defaults to the zero vector. The result lives on the window grid
    ``[t_i0, t_i1]`` and starts at ``a``.
    """
    _check_pair(w, x)
    if i1 is None:
        i1 = x.grid.n_points - 1
    x.grid.check_interval(i0, i1)
    m = w.shape[0]
    a = np.zeros(m) if a is None else np.atleast_1d(np.asarray(a, dtype=np.float64))
    if a.shape != (m,):
        raise DimensionError(f"initial value has shape {a.shape}, integrand codomain is R^{m}")
    dx = np.diff(x.values[i0 : i1 + 1], axis=0)
    path = running_sum(a, left_terms(w.values[i0:i1], dx))
    k = sewing_constant(mu) if mu is not None else None
    return YoungResult(DiscretePath(x.grid.window(i0, i1), path), _level_of(i1 - i0), k)


def young_sum(w: IntegrandPath, x: DiscretePath, i0: int = 0, i1: int | None = None) -> np.ndarray:
    """Final value of :func:`young_integrate` with zero start."""
    return young_integrate(w, x, None, i0, i1).integral_path.values[-1]


# --------------------------------------------------------------------------
# certificates


def young_loeve_certificate(w: IntegrandPath, x: DiscretePath, alpha: float, gamma: float, s: int, t: int) -> InequalityCheck:
    """Remainder of the one-step approximation against the sewing bound on ``[s, t]``."""
    mu = alpha + gamma
    k = sewing_constant(mu)
    _check_pair(w, x)
    x.grid.check_interval(s, t)
    dx = np.diff(x.values[s : t + 1], axis=0)
    terms = left_terms(w.values[s:t], dx)
    total = running_sum(np.zeros(w.shape[0]), terms)[-1]
    one_step = w.values[s] @ (x.values[t] - x.values[s])
    lhs = float(np.linalg.norm(total - one_step))
    span = (t - s) * x.grid.step
    rhs = k * matrix_holder_norm(w, gamma, s, t) * holder_norm(x, alpha, s, t).norm * span**mu
    scale = float(np.sum(np.linalg.norm(terms, axis=1))) + float(np.linalg.norm(one_step))
    return InequalityCheck.of(lhs, rhs, "young-loeve", scale)


def operator_norm_certificate(w: IntegrandPath, x: DiscretePath, alpha: float, gamma: float, i0: int, i1: int) -> InequalityCheck:
    """Hölder norm of the running integral against ``(k+1) ||X|| (||W|| + |W_i0|)``."""
    k = sewing_constant(alpha + gamma)
    _check_pair(w, x)
    x.grid.check_interval(i0, i1)
    span = (i1 - i0) * x.grid.step
    if span > 1.0 + 1e-12:
        raise IntervalError(f"window length {span!r} exceeds 1")
    integral = young_integrate(w, x, None, i0, i1).integral_path
    lhs = holder_norm(integral, alpha).norm
    rhs = (k + 1.0) * holder_norm(x, alpha, i0, i1).norm * (
        matrix_holder_norm(w, gamma, i0, i1) + operator_norm(w.values[i0])
    )
    return InequalityCheck.of(lhs, rhs, "operator-norm")


# --------------------------------------------------------------------------
# refinement studies


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    n_points: int
    value: float
    successive_diff: float | None
    local_rate: float | None
    dyadic_bound: float | None


@dataclass(frozen=True)
class ConvergenceTable:
    rows: list[ConvergenceRow]
    fitted_rate: float | None
    alpha: float
    gamma: float
    exact: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def diffs(self) -> list[float]:
        return [r.successive_diff for r in self.rows if r.successive_diff is not None]

    def to_csv(self) -> str:
        def fmt(x):
            return "" if x is None else "%.17g" % x

        lines = ["level,n_points,value,successive_diff,local_rate"]
        for r in self.rows:
            lines.append(
                f"{r.level},{r.n_points},{fmt(r.value)},{fmt(r.successive_diff)},{fmt(r.local_rate)}"
            )
        rate = "exact" if self.exact else fmt(self.fitted_rate) or "nan"
        lines.append(f"# fitted_rate={rate}")
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        out = ["| level | n_points | value | successive_diff | local_rate |", "|---|---|---|---|---|"]
        for r in self.rows:
            d = "" if r.successive_diff is None else f"{r.successive_diff:.3e}"
            lr = "" if r.local_rate is None else f"{r.local_rate:.3f}"
            out.append(f"| {r.level} | {r.n_points} | {r.value:.12g} | {d} | {lr} |")
        rate = "exact" if self.exact else ("n/a" if self.fitted_rate is None else f"{self.fitted_rate:.4f}")
        out.append("")
        out.append(f"fitted rate: {rate}")
        return "\n".join(out) + "\n"


def fit_rate(levels, diffs) -> float | None:
    """Least-squares slope of ``log2(diff)`` against ``-level``, ignoring underflowed diffs."""
    pts = [(-lv, math.log2(d)) for lv, d in zip(levels, diffs) if d is not None and d >= UNDERFLOW]
    if len(pts) < 2:
        return None
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)


def convergence_study(w: IntegrandPath, x: DiscretePath, alpha: float, gamma: float, levels) -> ConvergenceTable:
    """Young sums on nested dyadic subgrids of the finest grid.

    ``x`` and ``w`` are sampled at the finest level ``L`` (``2^L + 1``
    points); the sum at level ``l`` uses every ``2^(L-l)``-th point.
    """
    levels = sorted(int(lv) for lv in levels)
    if len(levels) < 3:
        raise InsufficientDataError(f"need at least 3 levels, got {levels}")
    _check_pair(w, x)
    if w.shape[0] != 1:
        raise DimensionError("convergence studies need a scalar integral (m = 1)")
    finest = _level_of(x.grid.n_points - 1)
    if finest is None:
        raise InsufficientDataError(f"grid of {x.grid.n_points} points is not dyadic")
    if levels[0] < 0 or levels[-1] > finest:
        raise InsufficientDataError(f"levels {levels} outside 0..{finest}")
    values = []
    for lv in levels:
        stride = 2 ** (finest - lv)
        values.append(float(young_sum(w.coarsen(stride), x.coarsen(stride))[0]))
    mu = alpha + gamma
    k = sewing_constant(mu) if mu > 1.0 + 1e-8 else None
    wn = matrix_holder_norm(w, gamma) if k is not None else None
    xn = holder_norm(x, alpha).norm if k is not None else None
    T = x.grid.length
    diffs: list[float | None] = []
    rows = []
    for j, lv in enumerate(levels):
        d = abs(values[j + 1] - values[j]) if j + 1 < len(levels) else None
        diffs.append(d)
    for j, lv in enumerate(levels):
        d = diffs[j]
        local = None
        if j > 0 and d is not None and diffs[j - 1] is not None:
            prev = diffs[j - 1]
            if prev >= UNDERFLOW and d >= UNDERFLOW:
                local = math.log2(prev / d) / (lv - levels[j - 1])
        bound = None
        if k is not None and d is not None:
            bound = k * wn * xn * T**mu * 2.0 ** (-lv * (mu - 1.0))
        rows.append(ConvergenceRow(lv, 2**lv + 1, values[j], d, local, bound))
    real = [d for d in diffs if d is not None]
    rate = fit_rate(levels[:-1], real)
    exact = all(d < UNDERFLOW for d in real)
    return ConvergenceTable(rows, rate, alpha, gamma, exact)
