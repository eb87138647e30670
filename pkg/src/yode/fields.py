"""Path-dependent vector fields ``F(t, Y)`` on discrete paths.

A :class:`PathFunctional` maps a grid index ``t`` and a path ``Y`` with
values in ``R^m`` to an ``m x n`` matrix (a linear map from the driver
space to the state space). The registry functionals all use a scalar
driver, ``n = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import rng
from .errors import DomainError, GridMismatchError, MissingConstantsError
from .holder import InequalityCheck, holder_value, oscillation, sup_norm
from .paths import DiscretePath, Grid
from .young import (
    IntegrandPath,
    matrix_holder_norm,
    operator_norm,
    running_sum,
    sewing_constant,
)

#: relative tolerance of the anticipation probes
PROBE_RTOL = 1e-12


def _as_matrix(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim == 0:
        return a.reshape(1, 1)
    if a.ndim == 1:
        return a[:, None]
    return a


@dataclass(frozen=True)
class FieldConstants:
    """Constants of the time and space moduli of a field at exponent ``alpha``."""

    c_time: float
    c_space: float
    alpha: float
    beta: float
    n_samples: int = 0
    source: str = "analytic"
    degenerate: bool = False

    def transported(self, alpha_new: float, T: float) -> "FieldConstants":
        """Constants at a larger exponent from the constants at ``self.alpha``.

        ``c * max(T^(alpha beta), 1)`` and ``c~ * max(T^((alpha_new - alpha) beta), 1)``.
        """
        return transport_constants(self, alpha_new, T)


@dataclass(frozen=True, eq=False)
class PathFunctional:
    """A vector field ``F(t, Y)`` with declared regularity.

    ``evaluate(t_index, path)`` returns the matrix ``F(t, Y)``;
    ``vectorized(path)``, when given, returns all of them at once as an
    ``(n_points, m, n)`` array and must agree with ``evaluate`` bit for bit.
    ``delay`` is a claimed gap (in time units) for delay-type fields;
    ``analytic(alpha, grid)`` returns ``(c_time, c_space)`` when known.
    """

    name: str
    evaluate: Callable[[int, DiscretePath], np.ndarray]
    declared_beta: float = 1.0
    declared_alpha_prime: float | None = None
    description: str = ""
    vectorized: Callable[[DiscretePath], np.ndarray] | None = None
    delay: float | None = None
    analytic: Callable[[float, Grid], tuple[float, float]] | None = None
    sup_bound: float | None = None
    gammas: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.declared_beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.declared_beta!r}")

    def eval(self, t_index: int, path: DiscretePath) -> np.ndarray:
        path.grid.check_index(t_index)
        return _as_matrix(self.evaluate(t_index, path))

    def along(self, path: DiscretePath) -> np.ndarray:
        """``F(t_i, Y)`` for every grid index, shape ``(n_points, m, n)``."""
        if self.vectorized is not None:
            out = np.asarray(self.vectorized(path), dtype=np.float64)
            if out.ndim == 2:
                out = out[:, :, None]
            return out
        return np.stack([self.eval(i, path) for i in range(path.grid.n_points)])

    def integrand(self, path: DiscretePath) -> IntegrandPath:
        return IntegrandPath(path.grid, self.along(path))

    def constants(self, alpha: float, grid: Grid) -> FieldConstants:
        """Analytic constants at exponent ``alpha`` on ``grid``'s horizon."""
        if self.analytic is None:
            raise MissingConstantsError(f"no analytic constants known for {self.name!r}")
        c, ct = self.analytic(alpha, grid)
        return FieldConstants(float(c), float(ct), alpha, self.declared_beta)

    def scaled(self, lam: float) -> "PathFunctional":
        """``lam * F`` with constants scaled by ``|lam|``."""
        ev, vec, an = self.evaluate, self.vectorized, self.analytic
        return replace(
            self,
            name=f"{lam!r}*{self.name}",
            evaluate=lambda t, y: lam * _as_matrix(ev(t, y)),
            vectorized=None if vec is None else (lambda y: lam * np.asarray(vec(y))),
            analytic=None if an is None else (lambda a, g: tuple(abs(lam) * c for c in an(a, g))),
            sup_bound=None if self.sup_bound is None else abs(lam) * self.sup_bound,
        )

    def at_zero(self, grid: Grid, dim: int = 1) -> np.ndarray:
        """``F(0, 0)`` on the zero path."""
        return self.eval(0, DiscretePath.constant(grid, np.zeros(dim)))


def delay_steps(delta: float, grid: Grid) -> int:
    """Grid steps spanned by a delay given in time units."""
    if delta < 0:
        raise DomainError(f"delay must be nonnegative, got {delta!r}")
    return grid.steps(delta)


# --------------------------------------------------------------------------
# Dupire-type functionals


def _dupire_constants(lipschitz: float, beta: float):
    def analytic(alpha, grid):
        T = grid.length
        return (
            lipschitz * max(1.0, T ** (1.0 - alpha)) ** beta,
            lipschitz * max(1.0, T**alpha) ** beta,
        )

    return analytic


def make_dupire(
    f: Callable[[np.ndarray], object],
    holder_beta: float,
    *,
    name: str = "dupire",
    vectorized: Callable[[DiscretePath], np.ndarray] | None = None,
    holder_constant: float | None = None,
) -> PathFunctional:
    """``F(t, Y) = f(Y restricted to [0, t])``.

    ``f`` receives the ``(t + 1, m)`` array of values up to ``t``. When
    ``holder_constant`` (the Hölder constant of ``f`` in the Dupire metric)
    is supplied, analytic field constants are attached.
    """

    def evaluate(t, path):
        return f(path.values[: t + 1])

    return PathFunctional(
        name=name,
        evaluate=evaluate,
        declared_beta=holder_beta,
        description="functional of the path stopped at t",
        vectorized=vectorized,
        analytic=None if holder_constant is None else _dupire_constants(holder_constant, holder_beta),
    )


def running_max() -> PathFunctional:
    """``max_{u <= t} Y_u`` componentwise."""
    return make_dupire(
        lambda v: v.max(axis=0),
        1.0,
        name="dupire-max",
        vectorized=lambda p: np.maximum.accumulate(p.values, axis=0),
        holder_constant=1.0,
    )


def terminal() -> PathFunctional:
    """``F(t, Y) = Y_t``."""
    return make_dupire(
        lambda v: v[-1], 1.0, name="identity", vectorized=lambda p: p.values, holder_constant=1.0
    )


def initial() -> PathFunctional:
    """``F(t, Y) = Y_0``, constant in time."""
    return PathFunctional(
        name="initial",
        evaluate=lambda t, p: p.values[0],
        vectorized=lambda p: np.broadcast_to(p.values[0], p.values.shape),
        analytic=lambda a, g: (0.0, 1.0),
    )


def zero() -> PathFunctional:
    return PathFunctional(
        name="zero",
        evaluate=lambda t, p: np.zeros((p.dim, 1)),
        vectorized=lambda p: np.zeros(p.values.shape),
        analytic=lambda a, g: (0.0, 0.0),
        sup_bound=0.0,
    )


def constant(c) -> PathFunctional:
    """Constant field; a scalar ``c`` fills an ``m x 1`` matrix."""
    c_arr = np.asarray(c, dtype=np.float64)

    def value(p):
        return np.full((p.dim, 1), float(c_arr)) if c_arr.ndim == 0 else _as_matrix(c_arr)

    def vectorized(p):
        v = value(p)
        return np.broadcast_to(v, (p.grid.n_points,) + v.shape)

    return PathFunctional(
        name=f"constant:{c!r}" if c_arr.ndim == 0 else "constant",
        evaluate=lambda t, p: value(p),
        vectorized=vectorized,
        analytic=lambda a, g: (0.0, 0.0),
        sup_bound=operator_norm(_as_matrix(c_arr)) if c_arr.ndim else abs(float(c_arr)),
    )


def anticipating() -> PathFunctional:
    """``F(t, Y) = Y_T``: reads the future, for probe testing."""
    return PathFunctional(
        name="anticipating-terminal",
        evaluate=lambda t, p: p.values[-1],
        vectorized=lambda p: np.broadcast_to(p.values[-1], p.values.shape),
    )


def _delayed_index(t: int, path: DiscretePath, delta: float) -> int:
    return max(t - delay_steps(delta, path.grid), 0)


def _delayed_positions(path: DiscretePath, delta: float) -> np.ndarray:
    d = delay_steps(delta, path.grid)
    return np.maximum(np.arange(path.grid.n_points) - d, 0)


def delayed_terminal(delta: float) -> PathFunctional:
    """``F(t, Y) = Y_{(t - delta)+}``."""
    return PathFunctional(
        name=f"delayed-terminal:{delta!r}",
        evaluate=lambda t, p: p.values[_delayed_index(t, p, delta)],
        vectorized=lambda p: p.values[_delayed_positions(p, delta)],
        delay=float(delta),
    )


def delayed_max(delta: float) -> PathFunctional:
    """``F(t, Y) = max_{u <= (t - delta)+} Y_u``."""
    return PathFunctional(
        name=f"delayed-max:{delta!r}",
        evaluate=lambda t, p: p.values[: _delayed_index(t, p, delta) + 1].max(axis=0),
        vectorized=lambda p: np.maximum.accumulate(p.values, axis=0)[_delayed_positions(p, delta)],
        delay=float(delta),
    )


# --------------------------------------------------------------------------
# Young-integral functionals

Kernel = DiscretePath | Callable[[np.ndarray], np.ndarray]


def _kernel_values(g: Kernel, grid: Grid) -> np.ndarray:
    """Scalar kernel sampled on ``grid`` as a flat array."""
    if isinstance(g, DiscretePath):
        if not g.grid.same_as(grid):
            raise GridMismatchError(f"kernel grid {g.grid} differs from path grid {grid}")
        if g.dim != 1:
            raise DomainError(f"kernels must be scalar, got dimension {g.dim}")
        return g.values[:, 0]
    v = np.asarray(g(grid.times), dtype=np.float64)
    return np.broadcast_to(v, (grid.n_points,)).copy() if v.ndim == 0 else v.reshape(-1)


def _kernel_path(g: Kernel, grid: Grid) -> DiscretePath:
    return g if isinstance(g, DiscretePath) else DiscretePath(grid, _kernel_values(g, grid))


def young_running(g: Kernel, path: DiscretePath) -> np.ndarray:
    """``int_0^t g dY`` at every grid index, shape ``(n_points, m)``."""
    gv = _kernel_values(g, path.grid)
    dy = np.diff(path.values, axis=0)
    return running_sum(np.zeros(path.dim), gv[:-1, None] * dy)


def young_kernel_constant(g: Kernel, gamma: float, alpha: float, grid: Grid) -> float:
    """``k_{alpha+gamma} ||g||_gamma T^gamma + ||g||_inf`` for a scalar kernel."""
    gp = _kernel_path(g, grid)
    k = sewing_constant(alpha + gamma)
    T = grid.length
    return k * holder_value(gp, gamma) * T**gamma + sup_norm(gp)


def make_young_functional(g: Kernel, gamma: float, *, name: str | None = None) -> PathFunctional:
    """``F_g(t, Y) = int_0^t g dY`` by left sums; ``beta = 1``."""
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"kernel exponent must lie in (0, 1], got {gamma!r}")

    def evaluate(t, path):
        gv = _kernel_values(g, path.grid)
        dy = np.diff(path.values[: t + 1], axis=0)
        return running_sum(np.zeros(path.dim), gv[:t, None] * dy)[-1]

    def analytic(alpha, grid):
        c = young_kernel_constant(g, gamma, alpha, grid)
        return c, c * grid.length**alpha

    return PathFunctional(
        name=name or "young-kernel",
        evaluate=evaluate,
        declared_beta=1.0,
        description="running Young integral of a kernel against the path",
        vectorized=lambda p: young_running(g, p),
        analytic=analytic,
        gammas=(float(gamma),),
    )


def delayed_young(g: Kernel, gamma: float, delta: float) -> PathFunctional:
    """``int_0^{(t - delta)+} g dY``."""
    return PathFunctional(
        name=f"delayed-young:{delta!r}",
        evaluate=lambda t, p: young_running_prefix(g, p, _delayed_index(t, p, delta)),
        vectorized=lambda p: young_running(g, p)[_delayed_positions(p, delta)],
        delay=float(delta),
        gammas=(float(gamma),),
    )


def young_running_prefix(g: Kernel, path: DiscretePath, j: int) -> np.ndarray:
    """``int_0^{t_j} g dY`` using only values up to index ``j``."""
    gv = _kernel_values(g, path.grid)
    dy = np.diff(path.values[: j + 1], axis=0)
    return running_sum(np.zeros(path.dim), gv[:j, None] * dy)[-1]


def make_composed(
    h: Callable[[float, np.ndarray], object],
    kernels: Sequence[tuple[Kernel, float]],
    K_h: float,
    beta: float,
    *,
    name: str = "composed",
    sup_bound: float | None = None,
) -> PathFunctional:
    """``F(t, Y) = h(t, int g_1 dY, ..., int g_N dY)`` for scalar ``Y``.

    ``h`` must satisfy ``|h(t,b) - h(s,a)| <= K_h (|t-s|^(alpha beta) + max_i |b_i - a_i|^beta)``;
    this is the caller's assertion and is only used for the analytic constants.
    """
    kernels = list(kernels)
    if not kernels:
        raise DomainError("a composed field needs at least one kernel")
    if K_h <= 0:
        raise DomainError(f"K_h must be positive, got {K_h!r}")

    def integrals(path):
        if path.dim != 1:
            raise DomainError("composed fields act on scalar paths")
        return np.column_stack([young_running(g, path)[:, 0] for g, _ in kernels])

    def vectorized(path):
        ints = integrals(path)
        t = path.times
        return np.stack([_as_matrix(h(float(t[i]), ints[i])) for i in range(len(t))])

    def evaluate(t, path):
        if path.dim != 1:
            raise DomainError("composed fields act on scalar paths")
        x = np.array([young_running_prefix(g, path, t)[0] for g, _ in kernels])
        return h(float(path.times[t]), x)

    def analytic(alpha, grid):
        T = grid.length
        cs = [young_kernel_constant(g, gm, alpha, grid) ** beta for g, gm in kernels]
        return K_h * max(1.0, max(cs)), K_h * max(cs) * T ** (alpha * beta)

    return PathFunctional(
        name=name,
        evaluate=evaluate,
        declared_beta=beta,
        description="function of finitely many running Young integrals",
        vectorized=vectorized,
        analytic=analytic,
        sup_bound=sup_bound,
        gammas=tuple(float(gm) for _, gm in kernels),
    )


# --------------------------------------------------------------------------
# constants


def transport_constants(consts: FieldConstants, alpha_new: float, T: float) -> FieldConstants:
    if alpha_new < consts.alpha:
        raise DomainError(f"can only move constants to a larger exponent, got {alpha_new} < {consts.alpha}")
    b = consts.beta
    return FieldConstants(
        consts.c_time * max(T ** (consts.alpha * b), 1.0),
        consts.c_space * max(T ** ((alpha_new - consts.alpha) * b), 1.0),
        alpha_new,
        b,
        consts.n_samples,
        consts.source + "+transport",
        consts.degenerate,
    )


Sampler = Callable[[int], DiscretePath]

# stream offsets keeping sampler draws and index draws apart
_INDEX_STREAMS = 1 << 40


def path_sampler(spec, seed: int | None = None) -> Sampler:
    """Random paths from a driver spec, ``k -> path``.

    fBm specs draw stream ``k``; every kind is then scaled by a random
    amplitude in ``[0.5, 2]`` and shifted by a standard normal offset.
    """
    from .drivers import fbm_samples, generate

    seed = spec.seed if seed is None else seed
    base = None if spec.kind == "fbm" else generate(spec).values

    def sample(k: int) -> DiscretePath:
        st = rng.Stream(seed, _INDEX_STREAMS + (1 << 20) + k)
        amp = 0.5 + 1.5 * st.uniform()
        off = st.normal()
        if base is None:
            v = fbm_samples(spec.grid, spec.params["H"], seed, [k])[0][:, None]
        else:
            v = base
        return DiscretePath(spec.grid, amp * v + off)

    return sample


def _time_ratio(Fv, Y, alpha, beta, s, t) -> float:
    num = operator_norm(Fv[t] - Fv[s])
    span = (t - s) * Y.grid.step
    den = (1.0 + holder_value(Y, alpha, s, t) ** beta) * span ** (alpha * beta)
    return num / den


def _space_ratio(Fy, Fz, Y, Z, alpha, beta, s) -> float | None:
    num = operator_norm(Fy[s] - Fz[s])
    d = Y - Z
    den = (holder_value(d, alpha, 0, s) + float(np.linalg.norm(d.values[0]))) ** beta
    if den == 0.0:
        return None
    return num / den


def estimate_constants(
    F: PathFunctional,
    alpha: float,
    beta: float,
    sampler: Sampler,
    n_samples: int,
    seed: int,
    *,
    pairs_per_sample: int = 4,
) -> FieldConstants:
    """Empirical lower bounds for the two field constants.

    Sample ``k`` uses paths ``sampler(2k)`` and ``sampler(2k + 1)`` and
    index stream ``k`` of ``seed``; the result is the running maximum over
    samples, so adding samples never lowers it.
    """
    if n_samples < 1:
        raise DomainError(f"need at least one sample, got {n_samples}")
    c_time = c_space = 0.0
    all_constant = True
    for k in range(n_samples):
        st = rng.Stream(seed, _INDEX_STREAMS + k)
        Y = sampler(2 * k)
        other = sampler(2 * k + 1)
        # mix scales so that small differences are probed too (matters for beta < 1)
        eps = 10.0 ** -st.integers(0, 3)
        Z = Y + (other - Y) * eps
        if oscillation(Y) > 0 or oscillation(Z) > 0:
            all_constant = False
        n = Y.grid.n_points
        Fy, Fz = F.along(Y), F.along(Z)
        for _ in range(pairs_per_sample):
            s = st.integers(0, n - 1)
            t = st.integers(s + 1, n)
            c_time = max(c_time, _time_ratio(Fy, Y, alpha, beta, s, t))
            r = _space_ratio(Fy, Fz, Y, Z, alpha, beta, st.integers(0, n))
            if r is not None:
                c_space = max(c_space, r)
    if all_constant:
        return FieldConstants(0.0, 0.0, alpha, beta, n_samples, "empirical", True)
    return FieldConstants(c_time, c_space, alpha, beta, n_samples, "empirical")


# --------------------------------------------------------------------------
# probes


@dataclass(frozen=True)
class ProbeReport:
    passed: bool
    t_index: int
    cutoff: int
    n_mutations: int
    max_deviation: float
    failing_mutation: int | None = None
    name: str = ""


def _mutations(path: DiscretePath, cutoff: int, n_mutations: int, seed: int):
    n = path.grid.n_points
    osc = oscillation(path)
    scale = 0.1 * osc if osc > 0 else 1.0
    st = rng.Stream(seed, _INDEX_STREAMS + (1 << 30))
    for j in range(n_mutations):
        k = cutoff + 1 if j == 0 else st.integers(cutoff + 1, n)
        v = path.values.copy()
        v[k:] += scale * st.normal(v[k:].size).reshape(v[k:].shape)
        yield j, DiscretePath(path.grid, v)


def _probe(F, t_index, cutoff, path, n_mutations, seed, name) -> ProbeReport:
    path.grid.check_index(t_index)
    if cutoff >= path.grid.n_points - 1:
        return ProbeReport(True, t_index, cutoff, 0, 0.0, None, name)
    ref = F.eval(t_index, path)
    tol = PROBE_RTOL * max(1.0, float(np.max(np.abs(ref))))
    worst, failing = 0.0, None
    for j, mutated in _mutations(path, cutoff, n_mutations, seed):
        dev = float(np.max(np.abs(F.eval(t_index, mutated) - ref)))
        if dev > worst:
            worst = dev
        if dev > tol and failing is None:
            failing = j
    return ProbeReport(failing is None, t_index, cutoff, n_mutations, worst, failing, name)


def anticipation_probe(F: PathFunctional, t_index: int, path: DiscretePath, n_mutations: int = 16, seed: int = 0) -> ProbeReport:
    """Perturb ``path`` strictly after ``t_index`` and check ``F(t, .)`` does not move."""
    return _probe(F, t_index, t_index, path, n_mutations, seed, "anticipation")


def delta_anticipation_probe(
    F: PathFunctional, delta_idx: int, t_index: int, path: DiscretePath, n_mutations: int = 16, seed: int = 0
) -> ProbeReport:
    """Perturb strictly after ``(t - delta)+`` and check ``F(t, .)`` does not move."""
    if delta_idx < 0:
        raise DomainError(f"delta_idx must be nonnegative, got {delta_idx}")
    return _probe(F, t_index, max(t_index - delta_idx, 0), path, n_mutations, seed, "delta-anticipation")


# --------------------------------------------------------------------------
# composition certificates


def _resolve_constants(F, alpha, grid, constants) -> FieldConstants:
    if constants is not None:
        return constants
    return F.constants(alpha, grid)


def composition_bound_certificate(
    F: PathFunctional,
    Y: DiscretePath,
    alpha: float,
    beta: float,
    i0: int = 0,
    i1: int | None = None,
    constants: FieldConstants | None = None,
) -> InequalityCheck:
    """``||F(., Y)||_{alpha beta; I} <= c (1 + ||Y||_{alpha; I}^beta)``."""
    if i1 is None:
        i1 = Y.grid.n_points - 1
    c = _resolve_constants(F, alpha, Y.grid, constants)
    w = F.integrand(Y)
    lhs = matrix_holder_norm(w, alpha * beta, i0, i1)
    rhs = c.c_time * (1.0 + holder_value(Y, alpha, i0, i1) ** beta)
    return InequalityCheck.of(lhs, rhs, "comp1")


def composition_difference_certificate(
    F: PathFunctional,
    Y: DiscretePath,
    Z: DiscretePath,
    alpha: float,
    beta: float,
    i0: int = 0,
    i1: int | None = None,
    theta: float = 0.5,
    constants: FieldConstants | None = None,
) -> InequalityCheck:
    """Two-path bound at exponent ``alpha beta theta`` with ``R = max`` of both norms on ``I``."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    if i1 is None:
        i1 = Y.grid.n_points - 1
    c = _resolve_constants(F, alpha, Y.grid, constants)
    diff = IntegrandPath(Y.grid, F.along(Y) - F.along(Z))
    lhs = matrix_holder_norm(diff, alpha * beta * theta, i0, i1)
    R = max(holder_value(Y, alpha, i0, i1), holder_value(Z, alpha, i0, i1))
    d = Y - Z
    gap = holder_value(d, alpha, 0, i1) + float(np.linalg.norm(d.values[0]))
    rhs = 2.0 * c.c_space ** (1 - theta) * c.c_time**theta * (1 + R**beta) ** theta * gap ** (beta * (1 - theta))
    return InequalityCheck.of(lhs, rhs, "comp2")
