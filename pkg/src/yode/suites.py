"""Randomized certificate suites behind ``yode verify``.

Instance ``k`` of a suite run with seed ``s`` draws everything from stream
``k`` of ``s`` (and fBm paths from their own streams), so an instance can be
recomputed alone and a run split across worker processes gives the same
rows in the same order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fields, holder, rng
from .drivers import fbm_samples, weierstrass_series
from .paths import DiscretePath, Grid
from .registry import BUILTIN_KERNELS, resolve_functional
from .young import IntegrandPath, young_loeve_certificate

SUITES = ("young-loeve", "lift", "glue", "interp", "comp", "probe")

# stream namespaces: instance draws, fBm paths, secondary paths
_DRAW = 0
_PATH = 1 << 32
_PATH2 = 2 << 32


@dataclass(frozen=True)
class Row:
    instance: int
    check: str
    lhs: float
    rhs: float
    passed: bool
    params: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


HEADER = "instance,check,lhs,rhs,margin,passed,params"


def row_csv(r: Row) -> str:
    return f"{r.instance},{r.check},{r.lhs:.17g},{r.rhs:.17g},{r.margin:.17g},{'true' if r.passed else 'false'},{r.params}"


def dumps_rows(rows) -> str:
    return HEADER + "\n" + "".join(row_csv(r) + "\n" for r in rows)


def markdown_rows(rows, limit: int = 20) -> str:
    out = ["| instance | check | lhs | rhs | margin | pass |", "|---|---|---|---|---|---|"]
    for r in rows[:limit]:
        out.append(f"| {r.instance} | {r.check} | {r.lhs:.6g} | {r.rhs:.6g} | {r.margin:.3g} | {'yes' if r.passed else 'NO'} |")
    if len(rows) > limit:
        out.append(f"| ... | {len(rows) - limit} more | | | | |")
    passed = sum(r.passed for r in rows)
    out.append("")
    out.append(f"{passed}/{len(rows)} checks passed")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# random inputs


def _fbm(grid: Grid, H: float, seed: int, stream: int) -> DiscretePath:
    return DiscretePath(grid, fbm_samples(grid, H, seed, [stream])[0])


def random_path(st: rng.Stream, seed: int, k: int, n_points: int) -> tuple[DiscretePath, float, str]:
    """A path with a plausible Hölder exponent: fBm, Weierstrass, smooth or walk."""
    grid = Grid(0.0, 1.0, n_points)
    kind = st.choice(["fbm", "fbm", "weierstrass", "smooth", "walk"])
    if kind == "fbm":
        H = st.choice([0.6, 0.75, 0.9])
        return _fbm(grid, H, seed, _PATH + k), H - 0.05, f"fbm H={H}"
    if kind == "weierstrass":
        a = st.choice([0.3, 0.5, 0.7])
        path = DiscretePath(grid, weierstrass_series(grid.times, a, 3))
        return path, min(-math.log(a) / math.log(3), 1.0), f"weierstrass a={a} b=3"
    if kind == "smooth":
        c = st.normal(3)
        return DiscretePath(grid, c[0] + c[1] * np.sin(3 * grid.times) + c[2] * grid.times**2), 1.0, "smooth"
    steps = st.normal(n_points - 1) * math.sqrt(grid.step)
    return DiscretePath(grid, np.concatenate([[0.0], np.cumsum(steps)])), 0.5, "walk"


def _interval(st: rng.Stream, n: int, min_len: int = 1) -> tuple[int, int]:
    s = st.integers(0, n - min_len)
    t = st.integers(s + min_len, n)
    return s, t


# --------------------------------------------------------------------------
# suites


def young_loeve_instance(k: int, seed: int, n_points: int = 1025, **_) -> list[Row]:
    st = rng.Stream(seed, _DRAW + k)
    H = st.choice([0.75, 0.9])
    grid = Grid(0.0, 1.0, n_points)
    X = _fbm(grid, H, seed, _PATH + k)
    alpha = H - 0.05
    if st.uniform() < 0.5:
        W = IntegrandPath.from_path(X.map(np.sin))
        kind = "sin(X)"
    else:
        g = st.choice(["one", "t", "cos"])
        kern = BUILTIN_KERNELS[g][0]
        Y = _fbm(grid, H, seed, _PATH2 + k)
        W = IntegrandPath.from_path(DiscretePath(grid, fields.young_running(kern, Y)))
        kind = f"F_{g}(Y)"
    gamma = alpha
    s, t = _interval(st, n_points)
    c = young_loeve_certificate(W, X, alpha, gamma, s, t)
    return [Row(k, "young-loeve", c.lhs, c.rhs, c.passed, f"H={H} W={kind} s={s} t={t}")]


def lift_instance(k: int, seed: int, n_points: int = 257, **_) -> list[Row]:
    st = rng.Stream(seed, _DRAW + k)
    Y, a_max, desc = random_path(st, seed, k, n_points)
    alpha = 0.05 + (a_max - 0.05) * st.uniform()
    a, b = _interval(st, n_points)
    c = holder.lift_norm_check(Y, alpha, a, b)
    return [Row(k, "lift", c.lhs, c.rhs, c.passed, f"{desc} alpha={alpha:.4f} a={a} b={b}")]


def glue_instance(k: int, seed: int, n_points: int = 257, **_) -> list[Row]:
    st = rng.Stream(seed, _DRAW + k)
    Y, a_max, desc = random_path(st, seed, k, n_points)
    alpha = 0.05 + (a_max - 0.05) * st.uniform()
    split = st.integers(1, n_points - 1)
    c1 = holder.glue_norm_bound(Y, alpha, split)
    n_steps = n_points - 1
    divisors = [d for d in range(1, n_steps + 1) if n_steps % d == 0 and d < n_steps]
    window = st.choice(divisors)
    c2 = holder.multi_glue_norm_bound(Y, alpha, window)
    return [
        Row(k, "glue", c1.lhs, c1.rhs, c1.passed, f"{desc} alpha={alpha:.4f} split={split}"),
        Row(k, "multi-glue", c2.lhs, c2.rhs, c2.passed, f"{desc} alpha={alpha:.4f} window={window}"),
    ]


def interp_instance(k: int, seed: int, n_points: int = 257, **_) -> list[Row]:
    st = rng.Stream(seed, _DRAW + k)
    Y, a_max, desc = random_path(st, seed, k, n_points)
    alpha = 0.05 + (a_max - 0.05) * st.uniform()
    theta = 0.05 + 0.9 * st.uniform()
    c = holder.interpolation_bound(Y, alpha, theta)
    return [
        Row(k, "interp-osc", c.lhs, c.rhs_osc, holder.passes(c.lhs, c.rhs_osc), f"{desc} alpha={alpha:.4f} theta={theta:.4f}"),
        Row(k, "interp-sup", c.lhs, c.rhs_sup, holder.passes(c.lhs, c.rhs_sup), f"{desc} alpha={alpha:.4f} theta={theta:.4f}"),
    ]


def _comp_field(st: rng.Stream):
    choice = st.choice(["dupire-max", "identity", "young-kernel", "composed-clamp", "composed-max"])
    if choice == "dupire-max":
        return fields.running_max(), choice
    if choice == "identity":
        return fields.terminal(), choice
    g = st.choice(["one", "t", "cos", "sin"])
    kern = BUILTIN_KERNELS[g][0]
    if choice == "young-kernel":
        return fields.make_young_functional(kern, 1.0), f"young-kernel:{g}"
    if choice == "composed-clamp":
        F = fields.make_composed(lambda t, x: min(max(x[0], -0.5), 0.5), [(kern, 1.0)], 1.0, 1.0)
        return F, f"clamp(int {g} dY)"
    g2 = st.choice(["one", "t", "cos", "sin"])
    F = fields.make_composed(lambda t, x: float(np.max(x)), [(kern, 1.0), (BUILTIN_KERNELS[g2][0], 1.0)], 1.0, 1.0)
    return F, f"max(int {g} dY, int {g2} dY)"


def comp_instance(k: int, seed: int, n_points: int = 257, **_) -> list[Row]:
    st = rng.Stream(seed, _DRAW + k)
    F, desc = _comp_field(st)
    H = st.choice([0.6, 0.75, 0.9])
    grid = Grid(0.0, 1.0, n_points)
    Y = _fbm(grid, H, seed, _PATH + k) * (0.5 + 2 * st.uniform())
    Z = Y + _fbm(grid, H, seed, _PATH2 + k) * (10.0 ** -st.integers(0, 3))
    alpha = H - 0.05
    i0, i1 = _interval(st, n_points)
    theta = 0.1 + 0.8 * st.uniform()
    c1 = fields.composition_bound_certificate(F, Y, alpha, 1.0, i0, i1)
    c2 = fields.composition_difference_certificate(F, Y, Z, alpha, 1.0, i0, i1, theta)
    p = f"{desc} H={H} i0={i0} i1={i1}"
    return [
        Row(k, "comp1", c1.lhs, c1.rhs, c1.passed, p),
        Row(k, "comp2", c2.lhs, c2.rhs, c2.passed, p + f" theta={theta:.3f}"),
    ]


def probe_instance(k: int, seed: int, n_points: int = 257, functional: str = "dupire-max", delta: float | None = None, base_dir: str = ".", **_) -> list[Row]:
    F = resolve_functional(functional, base_dir=base_dir)
    st = rng.Stream(seed, _DRAW + k)
    grid = Grid(0.0, 1.0, n_points)
    amp, off = 0.5 + 2 * st.uniform(), st.normal()
    Y = _fbm(grid, 0.75, seed, _PATH + k).map(lambda v: amp * v + off)
    t = st.integers(0, n_points - 1)
    if delta is None:
        rep = fields.anticipation_probe(F, t, Y, 8, seed=k)
    else:
        rep = fields.delta_anticipation_probe(F, fields.delay_steps(delta, grid), t, Y, 8, seed=k)
    ref = float(np.max(np.abs(F.eval(t, Y))))
    tol = fields.PROBE_RTOL * max(1.0, ref)
    return [Row(k, rep.name, rep.max_deviation, tol, rep.passed, f"{functional} t={t} cutoff={rep.cutoff}")]


INSTANCES = {
    "young-loeve": young_loeve_instance,
    "lift": lift_instance,
    "glue": glue_instance,
    "interp": interp_instance,
    "comp": comp_instance,
    "probe": probe_instance,
}


def _chunk(args):
    suite, ks, seed, opts = args
    f = INSTANCES[suite]
    out = []
    for k in ks:
        out.extend(f(k, seed, **opts))
    return out


def run_suite(suite: str, n: int, seed: int, *, jobs: int = 1, **opts) -> list[Row]:
    """All rows of ``n`` instances, in instance order whatever ``jobs`` is."""
    if suite not in INSTANCES:
        raise KeyError(suite)
    ks = list(range(n))
    if jobs <= 1 or n < 2:
        return _chunk((suite, ks, seed, opts))
    size = max(1, math.ceil(n / (4 * jobs)))
    chunks = [(suite, ks[i : i + size], seed, opts) for i in range(0, n, size)]
    rows: list[Row] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_chunk, chunks):
            rows.extend(part)
    return rows


__all__ = ["SUITES", "Row", "run_suite", "dumps_rows", "markdown_rows", "random_path"]
