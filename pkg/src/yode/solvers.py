"""Solvers for ``Y_t = y0 + int_0^t F(u, Y) dX_u`` on a grid.

Two constructions are offered. :func:`delta_delay_solve` is the method of
steps for fields with a delay gap; it is explicit and needs no tolerance.
:func:`picard_window_solve` marches windows left to right and iterates the
solution map inside each one until the iterates settle.
"""

from __future__ import annotations

import decimal
import math
import sys
import warnings
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from . import rng
from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    ExponentError,
    GridMismatchError,
    MissingConstantsError,
    NumericalError,
    PartitionError,
    PlanError,
    DivergenceError,
)
from .fields import FieldConstants, PathFunctional, delay_steps, delta_anticipation_probe
from .holder import holder_norm, holder_value
from .paths import DiscretePath
from .young import left_terms, operator_norm, running_sum, sewing_constant

#: windows finishing within this many iterations count as fast
FAST_ITERATIONS = 8
#: consecutive fast windows before the adaptive window doubles
FAST_STREAK = 3
#: upper end of the bracket searched for the ball radius
R_BRACKET_MAX = 2.0**60


class BallWarning(RuntimeWarning):
    """A window iterate left the ball of radius ``R``."""


# --------------------------------------------------------------------------
# exponent bookkeeping


def check_exponents(alpha: float, alpha_prime: float, beta: float, gammas=()) -> None:
    """Reject exponent combinations outside the Young regime."""
    if not 0.0 < beta <= 1.0:
        raise ExponentError(f"beta must lie in (0, 1], got {beta}")
    if not alpha > 0.5:
        raise ExponentError(f"need alpha > 1/2, got alpha = {alpha}")
    if not 0.0 < alpha_prime < alpha:
        raise ExponentError(f"need 0 < alpha' < alpha, got alpha' = {alpha_prime}, alpha = {alpha}")
    s = alpha + alpha_prime * beta
    if not s > 1.0:
        raise ExponentError(
            f"need alpha + alpha'*beta > 1, got {alpha} + {alpha_prime}*{beta} = {s:.6g} <= 1"
        )
    for g in gammas:
        if not alpha_prime + g > 1.0:
            raise ExponentError(
                f"need alpha' + gamma > 1 for each kernel, got {alpha_prime} + {g} = {alpha_prime + g:.6g} <= 1"
            )


# --------------------------------------------------------------------------
# window planning


@dataclass(frozen=True)
class WindowPlan:
    K: float
    epsilon: float
    tau: float
    R: float
    alpha: float
    alpha_prime: float
    beta: float
    T: float
    bounded: bool = False
    trivial: bool = False
    c_F: float = 0.0
    constants_source: str = ""

    def r_condition_gap(self) -> float:
        """``R - eps (1 + 5 (1 v T^(1-a') tau^(a'-1))^beta R^beta)``, nonnegative when admissible."""
        return self.R - r_condition_lhs(self.R, self.epsilon, self.T, self.tau, self.alpha_prime, self.beta)

    def as_dict(self) -> dict:
        return {
            "K": self.K,
            "epsilon": self.epsilon,
            "tau": self.tau,
            "R": self.R,
            "alpha": self.alpha,
            "alpha_prime": self.alpha_prime,
            "beta": self.beta,
            "bounded": self.bounded,
            "trivial": self.trivial,
            "c_F": self.c_F,
            "constants_source": self.constants_source,
        }


def window_length(epsilon: float, K: float, alpha: float, alpha_prime: float) -> float:
    """``(epsilon / K)^(1 / (alpha - alpha'))``, rounded once from 40-digit arithmetic.

    In plain floating point the large exponent ``1 / (alpha - alpha')``
    amplifies the rounding of the quotient by up to a few hundred ulps.
    """
    with decimal.localcontext() as ctx:
        ctx.prec = 40
        ratio = Decimal(epsilon) / Decimal(K)
        power = Decimal(1) / (Decimal(alpha) - Decimal(alpha_prime))
        return float((ratio.ln() * power).exp())


def r_condition_lhs(R, epsilon, T, tau, alpha_prime, beta) -> float:
    A = max(1.0, T ** (1.0 - alpha_prime) * tau ** (alpha_prime - 1.0))
    return epsilon * (1.0 + 5.0 * A**beta * R**beta)


def _bisect_radius(epsilon, T, tau, alpha_prime, beta) -> float:
    """Root of ``g(R) = lhs(R) - R`` on ``[0, 2^60]``; ``g`` is concave with ``g(0) > 0``."""

    def g(R):
        return r_condition_lhs(R, epsilon, T, tau, alpha_prime, beta) - R

    lo, hi = 0.0, R_BRACKET_MAX
    if g(hi) > 0.0:
        raise PlanError(
            f"no radius below 2^60 satisfies the ball condition (epsilon={epsilon!r}, beta={beta!r}); "
            "for beta = 1 it needs 5*epsilon*max(1, T^(1-a') tau^(a'-1)) < 1"
        )
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return hi


def plan_window(
    x_norm_alpha: float,
    c_F: float,
    alpha: float,
    alpha_prime: float,
    beta: float,
    T: float,
    y0_norm: float,
    epsilon: float | None = None,
    bounded_mode: bool = False,
    F_sup: float | None = None,
    constants_source: str = "",
) -> WindowPlan:
    """Window length and ball radius for the solution map.

    Unbounded fields: ``K = (k + 1) ||X||_alpha 2 c_F (1 + T^(a' beta))``.
    Bounded fields: ``K = (k + 1) ||X||_alpha (2 c_F + ||F||_inf)`` and
    ``R = 1``. Here ``k`` is the sewing constant at ``a' beta + a'``.
    """
    if not 0.0 < alpha_prime < alpha <= 1.0:
        raise ExponentError(f"need 0 < alpha' < alpha <= 1, got alpha' = {alpha_prime}, alpha = {alpha}")
    if not 0.0 < beta <= 1.0:
        raise ExponentError(f"beta must lie in (0, 1], got {beta}")
    if x_norm_alpha < 0 or c_F < 0 or T <= 0:
        raise DomainError("norms and constants must be nonnegative and T positive")
    k = sewing_constant(alpha_prime * beta + alpha_prime)
    if bounded_mode:
        if F_sup is None:
            raise DomainError("bounded mode needs the sup norm of the field")
        K = (k + 1.0) * x_norm_alpha * (2.0 * c_F + F_sup)
    else:
        K = (k + 1.0) * x_norm_alpha * 2.0 * c_F * (1.0 + T ** (alpha_prime * beta))
    if K == 0.0:
        return WindowPlan(0.0, 0.0, min(T, 1.0), max(y0_norm, 1.0 if bounded_mode else 0.0), alpha,
                          alpha_prime, beta, T, bounded_mode, True, c_F, constants_source)
    if epsilon is None:
        epsilon = min(K / 2.0, 1.0) / 2.0
    if not 0.0 < epsilon < K / 2.0 or (bounded_mode and not epsilon < 1.0):
        raise DomainError(f"epsilon must lie in (0, K/2) with K = {K!r}, got {epsilon!r}")
    tau = window_length(epsilon, K, alpha, alpha_prime)
    if tau < sys.float_info.min:
        raise PlanError(f"window length (epsilon/K)^(1/(alpha - alpha')) underflows (K={K!r}, epsilon={epsilon!r})")
    if bounded_mode:
        R = 1.0
    else:
        R = max(_bisect_radius(epsilon, T, tau, alpha_prime, beta), y0_norm)
    return WindowPlan(K, epsilon, tau, R, alpha, alpha_prime, beta, T, bounded_mode, False, c_F, constants_source)


def plan_for(
    F: PathFunctional,
    X: DiscretePath,
    y0,
    alpha: float,
    alpha_prime: float,
    *,
    constants: FieldConstants | None = None,
    epsilon: float | None = None,
    bounded: bool = False,
) -> WindowPlan:
    """Plan from a field and a driver; constants default to the analytic ones at ``alpha'``."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    source = "given"
    if constants is None:
        constants = F.constants(alpha_prime, X.grid)
        source = "analytic"
    beta = F.declared_beta
    x_norm = holder_value(X, alpha)
    if bounded:
        if F.sup_bound is None:
            raise MissingConstantsError(f"field {F.name!r} has no known sup bound")
        c_F = constants.c_time
    else:
        f00 = operator_norm(F.at_zero(X.grid, y0.size))
        c_F = max(f00, constants.c_time, constants.c_space)
    return plan_window(x_norm, c_F, alpha, alpha_prime, beta, X.grid.length, float(np.linalg.norm(y0)),
                       epsilon, bounded, F.sup_bound, source)


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class WindowRecord:
    start_index: int
    end_index: int
    iterations: int
    final_delta: float
    decay_ratio: float | None = None
    ball_norm: float | None = None
    retries: int = 0


@dataclass
class SolveReport:
    solution: DiscretePath
    residual_sup: float
    residual_holder: float
    windows: list[WindowRecord]
    converged: bool
    method: str = ""
    plan: WindowPlan | None = None
    iterates: list[DiscretePath] = field(default_factory=list)
    stabilized: bool | None = None
    warnings: list[str] = field(default_factory=list)
    residual_alpha: float = 0.5

    @property
    def iterations(self) -> int:
        return sum(w.iterations for w in self.windows)

    @property
    def decay_ratio(self) -> float | None:
        """Largest per-window geometric decay ratio of the iterate changes."""
        r = [w.decay_ratio for w in self.windows if w.decay_ratio is not None]
        return max(r) if r else None

    def metadata(self) -> dict:
        out = {
            "method": self.method,
            "converged": self.converged,
            "residual_sup": self.residual_sup,
            "residual_holder": self.residual_holder,
            "residual_alpha": self.residual_alpha,
            "windows": len(self.windows),
            "iterations": self.iterations,
            "decay_ratio": "" if self.decay_ratio is None else self.decay_ratio,
            "n_points": self.solution.grid.n_points,
        }
        if self.stabilized is not None:
            out["stabilized"] = self.stabilized
        if self.plan is not None:
            out.update({f"plan_{k}": v for k, v in self.plan.as_dict().items()})
        if self.warnings:
            out["warnings"] = " | ".join(self.warnings)
        return out


# --------------------------------------------------------------------------
# shared pieces


def _prepare(F: PathFunctional, X: DiscretePath, y0) -> tuple[np.ndarray, np.ndarray]:
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    if y0.ndim != 1:
        raise DimensionError(f"y0 must be a vector, got shape {y0.shape}")
    if not np.all(np.isfinite(y0)):
        raise DomainError("y0 must be finite")
    w = F.eval(0, DiscretePath.constant(X.grid, y0))
    if w.shape != (y0.size, X.dim):
        raise DimensionError(
            f"field {F.name!r} returns {w.shape[0]}x{w.shape[1]} matrices; "
            f"state R^{y0.size} and driver R^{X.dim} need {y0.size}x{X.dim}"
        )
    return y0, np.diff(X.values, axis=0)


def _checked(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite values in {what}; the driver may be too rough for the declared exponents")
    return values


def residual(F: PathFunctional, X: DiscretePath, Y: DiscretePath, y0, *, alpha: float = 0.5) -> tuple[float, float]:
    """Sup and ``alpha``-Hölder norms of ``Y - y0 - int F(u, Y) dX``."""
    if not X.grid.same_as(Y.grid):
        raise GridMismatchError(f"driver grid {X.grid} differs from candidate grid {Y.grid}")
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    dX = np.diff(X.values, axis=0)
    W = F.along(Y)
    integral = running_sum(y0, left_terms(W[:-1], dX))
    R = DiscretePath(Y.grid, _checked(Y.values - integral, "residual"))
    sup = float(np.max(np.linalg.norm(R.values, axis=1)))
    return sup, holder_norm(R, alpha).norm


def _report(F, X, Y, y0, alpha, **kw) -> SolveReport:
    sup, hol = residual(F, X, Y, y0, alpha=alpha)
    return SolveReport(Y, sup, hol, residual_alpha=alpha, **kw)


# --------------------------------------------------------------------------
# method of steps


def _probe_delay(F: PathFunctional, X: DiscretePath, y0: np.ndarray, delta_idx: int) -> None:
    n = X.grid.n_points
    st = rng.Stream(0, 7)
    walk = np.cumsum(st.normal(n * y0.size).reshape(n, y0.size), axis=0) * math.sqrt(X.grid.step)
    path = DiscretePath(X.grid, y0 + walk)
    for t in sorted({delta_idx, n // 2, n - 2, min(2 * delta_idx, n - 2)}):
        if 0 <= t < n - 1:
            rep = delta_anticipation_probe(F, delta_idx, t, path, n_mutations=4, seed=t)
            if not rep.passed:
                raise DomainError(
                    f"field {F.name!r} reads the path after (t - delta)+ at t index {t}; "
                    "it is not delay-type for this delta"
                )


def delta_delay_solve(
    F: PathFunctional,
    X: DiscretePath,
    y0,
    delta_idx: int | None = None,
    *,
    probe: bool = True,
    keep_iterates: bool = False,
    residual_alpha: float = 0.5,
) -> SolveReport:
    """Method of steps for a field that only reads ``Y`` up to ``(t - delta)+``.

    ``Y^0 = y0`` and ``Y^n`` is ``y0`` plus the left-sum integral of
    ``F(., Y^(n-1))`` up to ``n delta``, held constant afterwards.
    """
    if delta_idx is None:
        if F.delay is None:
            raise DomainError(f"field {F.name!r} declares no delay; pass delta_idx")
        delta_idx = delay_steps(F.delay, X.grid)
    n_steps = X.grid.n_points - 1
    if delta_idx < 1:
        raise PartitionError(f"delay must span at least one grid step, got {delta_idx}")
    if n_steps % delta_idx:
        raise PartitionError(f"delay of {delta_idx} steps does not divide {n_steps} steps")
    y0, dX = _prepare(F, X, y0)
    notes = []
    if probe:
        _probe_delay(F, X, y0, delta_idx)
    else:
        notes.append("delay probe skipped")
    N = n_steps // delta_idx
    Y = np.broadcast_to(y0, (n_steps + 1, y0.size)).copy()
    iterates = [DiscretePath(X.grid, Y)] if keep_iterates else []
    stabilized = True
    for n in range(1, N + 1):
        end = n * delta_idx
        W = _checked(F.along(DiscretePath._trusted(X.grid, Y)), f"field values at stage {n}")
        new = np.empty_like(Y)
        new[: end + 1] = running_sum(y0, left_terms(W[:end], dX[:end]))
        new[end + 1 :] = new[end]
        _checked(new, f"stage {n}")
        keep = (n - 1) * delta_idx + 1
        if not np.array_equal(new[:keep], Y[:keep]):
            stabilized = False
        Y = new
        if keep_iterates:
            iterates.append(DiscretePath(X.grid, Y))
    if not stabilized:
        notes.append("stages disagreed on their common range")
    windows = [WindowRecord(k * delta_idx, (k + 1) * delta_idx, 1, 0.0) for k in range(N)]
    return _report(
        F, X, DiscretePath(X.grid, Y), y0, residual_alpha,
        windows=windows, converged=True, method="delta", iterates=iterates,
        stabilized=stabilized, warnings=notes,
    )


# --------------------------------------------------------------------------
# windowed Picard iteration


def _decay_ratio(deltas: list[float]) -> float | None:
    """Geometric mean of successive ratios of the positive iterate changes."""
    pos = [d for d in deltas if d > 0.0]
    if len(deltas) >= 2 and deltas[-1] == 0.0 and len(pos) <= 1:
        return 0.0
    if len(pos) < 2:
        return None
    return (pos[-1] / pos[0]) ** (1.0 / (len(pos) - 1))


def _iterate_window(F, X, dX, hist, i0, i1, tol, max_iter):
    """Picard iterates on ``[i0, i1]`` from the constant extension of ``hist[i0]``."""
    eta = hist[i0].copy()
    Z = np.broadcast_to(eta, (i1 - i0 + 1, eta.size)).copy()
    full = hist.copy()
    deltas = []
    for it in range(1, max_iter + 1):
        full[i0 : i1 + 1] = Z
        full[i1 + 1 :] = Z[-1]
        W = F.along(DiscretePath._trusted(X.grid, full.copy()))
        new = running_sum(eta, left_terms(W[i0:i1], dX[i0:i1]))
        d = float(np.max(np.abs(new - Z)))
        deltas.append(d)
        Z = new
        if not math.isfinite(d) or d > 1e300:
            return Z, it, deltas, False
        if d < tol:
            return Z, it, deltas, True
    return Z, max_iter, deltas, False


def picard_window_solve(
    F: PathFunctional,
    X: DiscretePath,
    y0,
    plan: WindowPlan | str | None = "auto",
    tol: float = 1e-10,
    max_iter: int = 200,
    *,
    alpha: float | None = None,
    alpha_prime: float | None = None,
    paper_windows: bool = False,
    residual_alpha: float | None = None,
) -> SolveReport:
    """Solve window by window, iterating the solution map inside each window.

    ``plan="auto"`` builds a plan from the field's analytic constants when
    they exist. In the default adaptive mode the first window is
    ``min(tau, T/8)`` (``T/8`` without a plan); a window that does not settle
    is halved and retried, and three quick windows in a row double it, up to
    ``min(1, T)``. ``paper_windows=True`` uses ``tau`` from the plan as is.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if max_iter < 1:
        raise DomainError(f"max_iter must be at least 1, got {max_iter}")
    y0, dX = _prepare(F, X, y0)
    notes: list[str] = []
    if isinstance(plan, str):
        if plan != "auto":
            raise DomainError(f"plan must be a WindowPlan, None or 'auto', got {plan!r}")
        plan = None
        if alpha is not None and alpha_prime is not None:
            try:
                plan = plan_for(F, X, y0, alpha, alpha_prime)
            except (MissingConstantsError, DivergenceError, PlanError, DomainError) as exc:
                notes.append(f"no plan: {exc}")
    if alpha_prime is None and plan is not None:
        alpha_prime = plan.alpha_prime
    if residual_alpha is None:
        residual_alpha = alpha_prime if alpha_prime is not None else 0.5
    grid = X.grid
    n_steps = grid.n_points - 1

    if plan is not None and plan.trivial:
        Y = DiscretePath.constant(grid, y0)
        return _report(F, X, Y, y0, residual_alpha, windows=[], converged=True, method="picard",
                       plan=plan, warnings=notes + ["trivial plan: constant solution"])

    def steps_of(duration):
        return max(1, min(n_steps, int(math.floor(duration / grid.step * (1 + 1e-12)))))

    if paper_windows:
        if plan is None:
            raise DomainError("fixed planned windows need a plan")
        w = steps_of(plan.tau)
        w_cap = w
    else:
        start = grid.length / 8.0 if plan is None else min(plan.tau, grid.length / 8.0)
        w = steps_of(start)
        w_cap = steps_of(min(1.0, grid.length))

    hist = np.broadcast_to(y0, (grid.n_points, y0.size)).copy()
    records: list[WindowRecord] = []
    i0 = 0
    streak = 0
    while i0 < n_steps:
        retries = 0
        while True:
            i1 = min(i0 + w, n_steps)
            Z, its, deltas, ok = _iterate_window(F, X, dX, hist, i0, i1, tol, max_iter)
            if ok:
                break
            last = deltas[-1] if deltas else float("nan")
            if paper_windows or w == 1:
                raise ConvergenceError(
                    f"window {len(records)} starting at index {i0} did not settle in {max_iter} "
                    f"iterations (last change {last:.3e})",
                    len(records),
                    last,
                )
            w = max(1, w // 2)
            retries += 1
            streak = 0
        hist[i0 : i1 + 1] = Z
        hist[i1 + 1 :] = Z[-1]
        ball = None
        if alpha_prime is not None and i1 > i0:
            ball = holder_norm(DiscretePath._trusted(grid, hist[: i1 + 1].copy()), alpha_prime, i0, i1).norm
            if plan is not None and ball > plan.R:
                msg = f"window {len(records)} left the ball: norm {ball:.6g} > R = {plan.R:.6g}"
                notes.append(msg)
                warnings.warn(msg, BallWarning, stacklevel=2)
        records.append(WindowRecord(i0, i1, its, deltas[-1], _decay_ratio(deltas), ball, retries))
        i0 = i1
        if not paper_windows:
            streak = streak + 1 if its <= FAST_ITERATIONS else 0
            if streak >= FAST_STREAK and w < w_cap:
                w = min(2 * w, w_cap)
                streak = 0
    Y = DiscretePath(grid, _checked(hist, "solution"))
    return _report(F, X, Y, y0, residual_alpha, windows=records, converged=True, method="picard",
                   plan=plan, warnings=notes)
