"""Driving path generators.

Spec strings look like ``fbm:H=0.75,seed=42,n=4097``. Keys shared by every
kind: ``n`` (grid points), ``t0`` and ``T`` (grid ends, default ``[0, 1]``),
``dim`` (components) and ``alpha`` (declared Hölder exponent, overriding
the kind's default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rng
from .errors import SizeError, SpecError
from .paths import DiscretePath, Grid

KINDS = ("fbm", "weierstrass", "linear", "polynomial", "sine", "constant")

#: largest fBm grid accepted by the dense Cholesky generator
FBM_MAX_POINTS = 2**13
#: Weierstrass series stops once the amplitude a^k drops below this
SERIES_CUTOFF = 1e-16

_COMMON = {"n", "t0", "T", "dim", "alpha"}
_KIND_KEYS = {
    "fbm": {"H", "seed"},
    "weierstrass": {"a", "b"},
    "linear": {"slope"},
    "polynomial": set(),  # c0, c1, ... checked separately
    "sine": {"freq", "amp", "phase"},
    "constant": {"c"},
}
_DEFAULT_N = 1025


@dataclass(frozen=True)
class DriverSpec:
    kind: str
    params: dict = field(default_factory=dict)
    grid: Grid = Grid(0.0, 1.0, _DEFAULT_N)
    seed: int = 0
    dimension: int = 1

    def __post_init__(self):
        _validate(self)

    def describe(self) -> str:
        """Canonical spec string; ``parse_driver_spec(s.describe()) == s``."""
        items = dict(self.params)
        items["n"] = self.grid.n_points
        if self.grid.t0 != 0.0:
            items["t0"] = self.grid.t0
        if self.grid.t1 != 1.0:
            items["T"] = self.grid.t1
        if self.kind == "fbm":
            items["seed"] = self.seed
        if self.dimension != 1:
            items["dim"] = self.dimension
        body = ",".join(f"{k}={_fmt(v)}" for k, v in items.items())
        return f"{self.kind}:{body}"


def _fmt(v) -> str:
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _validate(spec: DriverSpec) -> None:
    p = spec.params
    if spec.kind not in KINDS:
        raise SpecError(f"unknown driver kind {spec.kind!r}; expected one of {', '.join(KINDS)}", spec.kind)
    if spec.dimension < 1:
        raise SpecError(f"dim must be a positive integer, got {spec.dimension}", "dim")
    if spec.seed < 0:
        raise SpecError(f"seed must be nonnegative, got {spec.seed}", "seed")
    if "alpha" in p and not 0.0 < p["alpha"] <= 1.0:
        raise SpecError(f"alpha must lie in (0, 1], got {p['alpha']}", "alpha")
    if spec.kind == "fbm":
        if "H" not in p:
            raise SpecError("fbm needs the Hurst parameter H", "H")
        if not 0.0 < p["H"] < 1.0:
            raise SpecError(f"H must lie in (0, 1), got {p['H']}", "H")
        if spec.grid.n_points > FBM_MAX_POINTS:
            raise SizeError(
                f"fbm grid of {spec.grid.n_points} points exceeds the Cholesky limit of {FBM_MAX_POINTS}"
            )
    elif spec.kind == "weierstrass":
        a, b = p.get("a", 0.5), p.get("b", 7)
        if not 0.0 < a < 1.0:
            raise SpecError(f"a must lie in (0, 1), got {a}", "a")
        if b != int(b) or int(b) < 3 or int(b) % 2 == 0:
            raise SpecError(f"b must be an odd integer >= 3, got {b}", "b")
    elif spec.kind == "sine":
        if p.get("freq", 1.0) < 0:
            raise SpecError(f"freq must be nonnegative, got {p['freq']}", "freq")
    if spec.dimension > 1 and spec.kind != "fbm":
        raise SpecError(f"dim > 1 is only supported for fbm, not {spec.kind}", "dim")


def _number(token: str, key: str, value: str):
    try:
        if key in ("n", "seed", "dim", "b"):
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        x = float(value)
    except ValueError:
        raise SpecError(f"bad value in {token!r}: {key} needs a number", token) from None
    if not math.isfinite(x):
        raise SpecError(f"bad value in {token!r}: {key} must be finite", token)
    return x


def parse_driver_spec(text: str) -> DriverSpec:
    """Parse ``kind:key=value,...``; every malformed token is named in the error."""
    kind, _, body = text.strip().partition(":")
    kind = kind.strip()
    if kind not in KINDS:
        raise SpecError(f"unknown driver kind {kind!r}; expected one of {', '.join(KINDS)}", kind)
    allowed = _COMMON | _KIND_KEYS[kind]
    values: dict = {}
    for token in filter(None, (t.strip() for t in body.split(","))):
        key, eq, raw = token.partition("=")
        key = key.strip()
        if not eq or not key:
            raise SpecError(f"malformed token {token!r}: expected key=value", token)
        ok = key in allowed or (kind == "polynomial" and key[:1] == "c" and key[1:].isdigit())
        if not ok:
            raise SpecError(f"unknown key {key!r} in token {token!r} for driver {kind}", token)
        if key in values:
            raise SpecError(f"duplicate key {key!r}", token)
        values[key] = _number(token, key, raw.strip())
    n = values.pop("n", _DEFAULT_N)
    t0 = values.pop("t0", 0.0)
    t1 = values.pop("T", 1.0)
    if n < 2:
        raise SpecError(f"n must be at least 2, got {n}", "n")
    if not t0 < t1:
        raise SpecError(f"need t0 < T, got t0={t0}, T={t1}", "T")
    seed = values.pop("seed", 0)
    dim = values.pop("dim", 1)
    if kind == "weierstrass":
        values.setdefault("a", 0.5)
        values.setdefault("b", 7)
    return DriverSpec(kind, values, Grid(t0, t1, n), seed, dim)


# --------------------------------------------------------------------------
# generators


def fbm_covariance(s, t, H: float):
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    h2 = 2.0 * H
    return 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)


@lru_cache(maxsize=16)
def _fbm_factor(n_points: int, length: float, H: float) -> np.ndarray:
    """Lower Cholesky factor of the covariance at the positive grid times."""
    t = np.linspace(0.0, length, n_points)[1:]
    cov = fbm_covariance(t[:, None], t[None, :], H)
    L = np.linalg.cholesky(cov)
    L.flags.writeable = False
    return L


def fbm_samples(grid: Grid, H: float, seed: int, streams) -> np.ndarray:
    """One fBm path per stream index, pinned to 0 at ``grid.t0``.

    Returns shape ``(len(streams), n_points)``. Each path is its own
    matrix-vector product, so a stream's path does not depend on which
    other streams are drawn with it.
    """
    L = _fbm_factor(grid.n_points, grid.length, float(H))
    streams = list(streams)
    out = np.zeros((len(streams), grid.n_points))
    for row, k in enumerate(streams):
        out[row, 1:] = L @ rng.normals(seed, k, grid.n_points - 1)
    return out


def weierstrass_series(times: np.ndarray, a: float, b: int) -> np.ndarray:
    """``sum_k a^k cos(b^k pi t)`` with exact reduction of ``b^k t`` modulo 2."""
    n_terms = 0
    while a**n_terms >= SERIES_CUTOFF:
        n_terms += 1
    out = np.zeros(len(times))
    for i, t in enumerate(times):
        p, q = float(t).as_integer_ratio()
        mod = 2 * q
        bk = 1
        acc = 0.0
        for k in range(n_terms):
            r = (bk * p) % mod  # b^k t = r / q  (mod 2)
            acc += a**k * math.cos(math.pi * (r / q))
            bk = (bk * b) % mod
        out[i] = acc
    return out


def generate(spec: DriverSpec) -> DiscretePath:
    g = spec.grid
    t = g.times
    p = spec.params
    if spec.kind == "fbm":
        # stationary increments: shifting the start time does not change the law
        v = fbm_samples(g, p["H"], spec.seed, range(spec.dimension)).T
    elif spec.kind == "weierstrass":
        v = weierstrass_series(t, p["a"], int(p["b"]))
    elif spec.kind == "linear":
        v = p.get("slope", 1.0) * t
    elif spec.kind == "polynomial":
        deg = max((int(k[1:]) for k in p if k[:1] == "c" and k[1:].isdigit()), default=-1)
        coeffs = [p.get(f"c{j}", 0.0) for j in range(deg + 1)]
        v = np.polynomial.polynomial.polyval(t, coeffs) if coeffs else np.zeros_like(t)
    elif spec.kind == "sine":
        v = p.get("amp", 1.0) * np.sin(2.0 * np.pi * p.get("freq", 1.0) * t + p.get("phase", 0.0))
    else:
        v = np.full_like(t, p.get("c", 0.0))
    return DiscretePath(g, v)


def declared_alpha(spec: DriverSpec) -> float:
    """Hölder exponent the generator vouches for (overridable with ``alpha=``)."""
    if "alpha" in spec.params:
        return float(spec.params["alpha"])
    if spec.kind == "fbm":
        return max(spec.params["H"] - 0.05, 0.01)
    if spec.kind == "weierstrass":
        return min(-math.log(spec.params["a"]) / math.log(spec.params["b"]), 1.0)
    return 1.0


# --------------------------------------------------------------------------
# Monte Carlo validation


@dataclass(frozen=True)
class CovariancePair:
    s: float
    t: float
    analytic: float
    empirical: float
    sigma: float

    @property
    def deviation(self) -> float:
        return abs(self.empirical - self.analytic)

    @property
    def passed(self) -> bool:
        return self.deviation <= 5.0 * self.sigma


@dataclass(frozen=True)
class CovarianceReport:
    H: float
    n_samples: int
    pairs: list
    increment: CovariancePair | None

    @property
    def max_deviation(self) -> float:
        return max(p.deviation for p in self.pairs)

    @property
    def passed(self) -> bool:
        ok = all(p.passed for p in self.pairs)
        return ok and (self.increment is None or self.increment.passed)


def default_probe_pairs(grid: Grid) -> list[tuple[float, float]]:
    fr = [(0.25, 0.25), (0.25, 0.75), (0.5, 1.0), (0.75, 1.0), (1.0, 1.0)]
    return [(grid.t0 + a * grid.length, grid.t0 + b * grid.length) for a, b in fr]


def covariance_check(spec: DriverSpec, n_samples: int, probe_times=None) -> CovarianceReport:
    """Empirical ``E[X_s X_t]`` against the fBm covariance with a 5-sigma band.

    Sample ``j`` uses stream ``j`` of ``spec.seed``. The band uses the exact
    Gaussian variance of the product, ``(c_st^2 + c_ss c_tt) / N``. The
    increment variance over the first probe pair with s != t is checked too.
    """
    if spec.kind != "fbm":
        raise SpecError(f"covariance_check needs an fbm spec, got {spec.kind}", spec.kind)
    if n_samples < 100:
        raise SpecError(f"need at least 100 samples, got {n_samples}", "n_samples")
    g = spec.grid
    H = spec.params["H"]
    probes = list(probe_times) if probe_times is not None else default_probe_pairs(g)
    X = fbm_samples(g, H, spec.seed, range(n_samples))

    def stat(s, t, xs, xt, c_st, c_ss, c_tt):
        emp = float(np.mean(xs * xt))
        sigma = math.sqrt((c_st**2 + c_ss * c_tt) / n_samples)
        return CovariancePair(s, t, float(c_st), emp, sigma)

    pairs = []
    for s, t in probes:
        i, j = g.index_of(s), g.index_of(t)
        # covariance is in elapsed time since the pinned start
        u, v = s - g.t0, t - g.t0
        pairs.append(
            stat(s, t, X[:, i], X[:, j], fbm_covariance(u, v, H), fbm_covariance(u, u, H), fbm_covariance(v, v, H))
        )
    increment = None
    gaps = [(s, t) for s, t in probes if s != t]
    if gaps:
        s, t = gaps[0]
        i, j = g.index_of(min(s, t)), g.index_of(max(s, t))
        d = X[:, j] - X[:, i]
        var = abs(t - s) ** (2 * H)
        increment = CovariancePair(s, t, var, float(np.mean(d * d)), math.sqrt(2.0 * var * var / n_samples))
    return CovarianceReport(H, n_samples, pairs, increment)
