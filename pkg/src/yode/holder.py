"""Discrete Hölder calculus on sampled paths.

All norms are exact suprema over grid pairs. Inequality checks return an
:class:`InequalityCheck` whose ``passed`` flag absorbs floating point
rounding with a relative slack of :data:`SLACK`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, IntervalError, PartitionError
from .paths import DiscretePath, LiftedPath

#: relative slack used by every certificate comparison
SLACK = 1e-12


def passes(lhs: float, rhs: float, scale: float = 0.0) -> bool:
    """``lhs <= rhs`` up to relative rounding slack.

    ``scale`` is the magnitude of the quantities that were summed to form
    ``lhs``; it lets a mathematically zero left side that picked up rounding
    noise pass against a zero right side.
    """
    return lhs <= rhs + SLACK * max(abs(rhs), scale)


@dataclass(frozen=True)
class HolderCertificate:
    alpha: float
    interval: tuple[int, int]
    norm: float
    argmax_pair: tuple[int, int]


@dataclass(frozen=True)
class InequalityCheck:
    """Both sides of an inequality ``lhs <= rhs`` and the verdict."""

    lhs: float
    rhs: float
    passed: bool
    name: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @classmethod
    def of(cls, lhs, rhs, name="", scale=0.0):
        lhs, rhs = float(lhs), float(rhs)
        return cls(lhs, rhs, passes(lhs, rhs, scale), name)


@dataclass(frozen=True)
class InterpolationCheck:
    lhs: float
    rhs_osc: float
    rhs_sup: float
    passed: bool


def _check_alpha(alpha: float, *, allow_zero: bool = False) -> None:
    lo_ok = alpha >= 0.0 if allow_zero else alpha > 0.0
    if not (lo_ok and alpha <= 1.0):
        raise DomainError(f"Hölder exponent must lie in (0, 1], got {alpha!r}")


def _resolve(path: DiscretePath, i0: int, i1: int | None) -> tuple[int, int]:
    if i1 is None:
        i1 = path.grid.n_points - 1
    if not (0 <= i0 < i1 < path.grid.n_points):
        raise IntervalError(f"need 0 <= i0 < i1 < {path.grid.n_points}, got i0={i0}, i1={i1}")
    return i0, i1


def values_holder_scan(values: np.ndarray, step: float, alpha: float, i0: int, i1: int, backend=None):
    """Raw scan on an ``(n, m)`` array; ``alpha = 0`` gives the oscillation."""
    lagpow = kernels.lag_powers(i1 - i0 + 1, step, alpha)
    # the kernels index lagpow by lag, so the table only needs i1 - i0 + 1 entries
    return kernels.holder_scan(values, lagpow, i0, i1, backend)


def holder_norm(path: DiscretePath, alpha: float, i0: int = 0, i1: int | None = None, *, backend=None) -> HolderCertificate:
    """Exact discrete ``alpha``-Hölder seminorm of ``path`` on ``[i0, i1]``."""
    _check_alpha(alpha)
    i0, i1 = _resolve(path, i0, i1)
    best, p, q = values_holder_scan(path.values, path.grid.step, alpha, i0, i1, backend)
    return HolderCertificate(float(alpha), (i0, i1), float(best), (int(p), int(q)))


def holder_value(path: DiscretePath, alpha: float, i0: int = 0, i1: int | None = None) -> float:
    """Like :func:`holder_norm` but returns only the number; empty interval gives 0."""
    if i1 is None:
        i1 = path.grid.n_points - 1
    if i1 == i0:
        _check_alpha(alpha)
        return 0.0
    return holder_norm(path, alpha, i0, i1).norm


def holder_norm_strided(path: DiscretePath, alpha: float, stride: int, i0: int = 0, i1: int | None = None) -> float:
    """Cheap lower estimate from every ``stride``-th sample (large grids only).

    Not exact, so never used inside certificates.
    """
    _check_alpha(alpha)
    i0, i1 = _resolve(path, i0, i1)
    idx = np.arange(i0, i1 + 1, stride)
    if idx[-1] != i1:
        idx = np.append(idx, i1)
    sub = path.values[idx]
    t = path.times[idx]
    best = 0.0
    for lag in range(1, len(idx)):
        d = np.linalg.norm(sub[lag:] - sub[:-lag], axis=1) / (t[lag:] - t[:-lag]) ** alpha
        best = max(best, float(d.max()))
    return best


def sup_norm(path: DiscretePath, i0: int = 0, i1: int | None = None) -> float:
    i0, i1 = _resolve(path, i0, i1)
    return float(np.max(np.linalg.norm(path.values[i0 : i1 + 1], axis=1)))


def oscillation(path: DiscretePath, i0: int = 0, i1: int | None = None) -> float:
    """``sup |W_t - W_s|`` over grid pairs in ``[i0, i1]``."""
    i0, i1 = _resolve(path, i0, i1)
    return float(values_holder_scan(path.values, path.grid.step, 0.0, i0, i1)[0])


def holder_distance(y: DiscretePath, z: DiscretePath, alpha: float, i0: int = 0, i1: int | None = None) -> float:
    """``||z - y||_{alpha;[i0,i1]} + |z_{i0} - y_{i0}|``, a metric on paths."""
    d = z - y
    i0, i1 = _resolve(d, i0, i1)
    return holder_norm(d, alpha, i0, i1).norm + float(np.linalg.norm(d.values[i0]))


# --------------------------------------------------------------------------
# frozen path


def lift(path: DiscretePath, t_index: int) -> LiftedPath:
    return LiftedPath(path, t_index)


def lift_holder_norm(path: DiscretePath, alpha: float, a: int, b: int, *, backend=None) -> HolderCertificate:
    """Discrete Hölder norm of ``t -> lift(path, t)`` in the sup norm over ``[a, b]``."""
    _check_alpha(alpha)
    a, b = _resolve(path, a, b)
    lagpow = kernels.lag_powers(b - a + 1, path.grid.step, alpha)
    best, s, t = kernels.lift_scan(path.values, lagpow, a, b, backend)
    return HolderCertificate(float(alpha), (a, b), float(best), (int(s), int(t)))


def lift_norm_check(path: DiscretePath, alpha: float, a: int, b: int) -> InequalityCheck:
    lhs = lift_holder_norm(path, alpha, a, b).norm
    rhs = holder_norm(path, alpha).norm
    return InequalityCheck.of(lhs, rhs, "lift")


# --------------------------------------------------------------------------
# gluing and interpolation


def glue_norm_bound(path: DiscretePath, alpha: float, split: int) -> InequalityCheck:
    """Full-range norm against twice the sum of the norms on both sides of ``split``."""
    n = path.grid.n_points
    if not 0 < split < n - 1:
        raise IntervalError(f"split must satisfy 0 < split < {n - 1}, got {split}")
    lhs = holder_norm(path, alpha).norm
    rhs = 2.0 * (holder_norm(path, alpha, 0, split).norm + holder_norm(path, alpha, split, n - 1).norm)
    return InequalityCheck.of(lhs, rhs, "glue")


@dataclass(frozen=True)
class MultiGlueCheck(InequalityCheck):
    window_max: float = 0.0


def multi_glue_norm_bound(path: DiscretePath, alpha: float, window: int) -> MultiGlueCheck:
    """Norm over the grid against ``4 R max(1, T^(1-a) tau^(a-1))``.

    ``R`` is the largest norm over consecutive windows of ``window`` steps
    and ``tau`` the window duration.
    """
    n_steps = path.grid.n_points - 1
    if window < 1 or n_steps % window:
        raise PartitionError(f"window of {window} steps does not divide {n_steps} steps")
    r = max(holder_norm(path, alpha, k, k + window).norm for k in range(0, n_steps, window))
    T = path.grid.length
    tau = window * path.grid.step
    rhs = 4.0 * r * max(1.0, T ** (1.0 - alpha) * tau ** (alpha - 1.0))
    lhs = holder_norm(path, alpha).norm
    return MultiGlueCheck(float(lhs), float(rhs), passes(lhs, rhs), "multi-glue", float(r))


def interpolation_bound(path: DiscretePath, alpha: float, theta: float) -> InterpolationCheck:
    """Norm at ``alpha * theta`` against the two geometric interpolation bounds."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    _check_alpha(alpha)
    lhs = holder_norm(path, alpha * theta).norm
    top = holder_norm(path, alpha).norm
    osc = oscillation(path)
    rhs_osc = osc ** (1.0 - theta) * top**theta
    rhs_sup = 2.0 ** (1.0 - theta) * sup_norm(path) ** (1.0 - theta) * top**theta
    ok = passes(lhs, rhs_osc) and passes(lhs, rhs_sup)
    return InterpolationCheck(float(lhs), float(rhs_osc), float(rhs_sup), ok)


def exponent_transport_check(path: DiscretePath, alpha: float, alpha_low: float, i0: int = 0, i1: int | None = None) -> InequalityCheck:
    """``||Y||_{alpha_low} <= ||Y||_alpha * (t_b - t_a)^(alpha - alpha_low)``."""
    if not 0.0 < alpha_low <= alpha:
        raise DomainError(f"need 0 < alpha_low <= alpha, got {alpha_low!r}, {alpha!r}")
    i0, i1 = _resolve(path, i0, i1)
    lhs = holder_norm(path, alpha_low, i0, i1).norm
    span = (i1 - i0) * path.grid.step
    rhs = holder_norm(path, alpha, i0, i1).norm * span ** (alpha - alpha_low)
    return InequalityCheck.of(lhs, rhs, "transport")
