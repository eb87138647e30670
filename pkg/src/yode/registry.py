"""Named fields for the command line.

=========================  =============================================
name                       field
=========================  =============================================
``zero``                   ``0``
``constant:<c>``           ``c``
``identity``               ``Y_t`` (alias ``dupire-terminal``)
``dupire-max``             ``max_{u <= t} Y_u``
``anticipating-terminal``  ``Y_T`` (reads the future)
``delayed-terminal:<d>``   ``Y_{(t-d)+}``
``delayed-max:<d>``        ``max_{u <= (t-d)+} Y_u``
``young-kernel:<g>``       ``int_0^t g dY``
``composed:<file>``        ``h(t, int g_1 dY, ..., int g_N dY)``
=========================  =============================================

Delays are in time units and must be whole multiples of the grid step.
A kernel ``<g>`` is a path CSV file or one of the built-in kernels
``one``, ``t``, ``sin``, ``cos``.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np

from . import fields
from .errors import SpecError
from .paths import read_keyvalue, read_path

BUILTIN_KERNELS = {
    "one": (lambda t: np.ones_like(t), 1.0),
    "t": (lambda t: np.asarray(t, dtype=float).copy(), 1.0),
    "sin": (np.sin, 1.0),
    "cos": (np.cos, 1.0),
}

#: default Hölder exponent assumed for kernels read from files
DEFAULT_KERNEL_GAMMA = 0.6

H_NAMES = ("identity", "clamp", "max", "min", "sum", "tanh")


def _kernel(ref: str, base: Path, gamma: float | None):
    ref = ref.strip()
    if ref in BUILTIN_KERNELS:
        g, g_gamma = BUILTIN_KERNELS[ref]
        return g, g_gamma if gamma is None else gamma
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise SpecError(f"kernel {ref!r} is neither a built-in ({', '.join(BUILTIN_KERNELS)}) nor a file", ref)
    return read_path(path), DEFAULT_KERNEL_GAMMA if gamma is None else gamma


def _real(text: str, token: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise SpecError(f"{token!r} needs a number, got {text!r}", token) from None
    if not math.isfinite(x):
        raise SpecError(f"{token!r} must be finite", token)
    return x


def _h(name: str, n: int, lo: float, hi: float):
    if name == "identity":
        return (lambda t, x: x[0]), 1.0, None
    if name == "clamp":
        return (lambda t, x: min(max(x[0], lo), hi)), 1.0, max(abs(lo), abs(hi))
    if name == "max":
        return (lambda t, x: float(np.max(x))), 1.0, None
    if name == "min":
        return (lambda t, x: float(np.min(x))), 1.0, None
    if name == "sum":
        return (lambda t, x: float(np.sum(x))), float(n), None
    if name == "tanh":
        return (lambda t, x: math.tanh(x[0])), 1.0, 1.0
    raise SpecError(f"unknown h {name!r}; expected one of {', '.join(H_NAMES)}", name)


def load_composed(file: str | os.PathLike) -> fields.PathFunctional:
    """Build a composed field from a key=value spec file.

    Keys: ``h`` (one of identity, clamp, max, min, sum, tanh), ``kernels``
    (comma separated), ``gammas`` (comma separated, optional), ``K``
    (defaults to the Lipschitz constant of ``h``), ``beta`` (default 1),
    ``clamp_lo`` and ``clamp_hi`` (defaults -1 and 1).
    """
    file = Path(file)
    if not file.exists():
        raise SpecError(f"composed spec file {str(file)!r} not found", str(file))
    kv = read_keyvalue(file)
    known = {"h", "kernels", "gammas", "K", "beta", "clamp_lo", "clamp_hi"}
    for key in kv:
        if key not in known:
            raise SpecError(f"unknown key {key!r} in {file.name}", key)
    if "kernels" not in kv:
        raise SpecError(f"{file.name} needs a 'kernels' line", "kernels")
    refs = [r for r in (s.strip() for s in kv["kernels"].split(",")) if r]
    if not refs:
        raise SpecError("kernels list is empty", "kernels")
    gammas: list[float | None] = [None] * len(refs)
    if "gammas" in kv:
        gs = [s.strip() for s in kv["gammas"].split(",") if s.strip()]
        if len(gs) != len(refs):
            raise SpecError(f"{len(gs)} gammas for {len(refs)} kernels", "gammas")
        gammas = [_real(g, "gammas") for g in gs]
    kernels = [_kernel(r, file.parent, g) for r, g in zip(refs, gammas)]
    lo = _real(kv.get("clamp_lo", "-1"), "clamp_lo")
    hi = _real(kv.get("clamp_hi", "1"), "clamp_hi")
    if not lo < hi:
        raise SpecError(f"need clamp_lo < clamp_hi, got {lo}, {hi}", "clamp_lo")
    h, K_default, sup = _h(kv.get("h", "identity").strip(), len(kernels), lo, hi)
    K = _real(kv["K"], "K") if "K" in kv else K_default
    beta = _real(kv.get("beta", "1"), "beta")
    if not 0.0 < beta <= 1.0:
        raise SpecError(f"beta must lie in (0, 1], got {beta}", "beta")
    return fields.make_composed(h, kernels, K, beta, name=f"composed:{file.name}", sup_bound=sup)


def resolve_functional(name: str, *, base_dir: str | os.PathLike = ".", gamma: float | None = None) -> fields.PathFunctional:
    """Look up a field by its command-line name."""
    kind, _, arg = name.strip().partition(":")
    base = Path(base_dir)
    if kind == "zero" and not arg:
        return fields.zero()
    if kind in ("identity", "dupire-terminal") and not arg:
        return fields.terminal()
    if kind == "dupire-max" and not arg:
        return fields.running_max()
    if kind == "anticipating-terminal" and not arg:
        return fields.anticipating()
    if kind == "constant":
        return fields.constant(_real(arg or "1", name))
    if kind in ("delayed-terminal", "delayed-max"):
        if not arg:
            raise SpecError(f"{kind} needs a delay, e.g. {kind}:0.25", name)
        d = _real(arg, name)
        if d < 0:
            raise SpecError(f"delay must be nonnegative, got {d}", name)
        return fields.delayed_terminal(d) if kind == "delayed-terminal" else fields.delayed_max(d)
    if kind == "young-kernel":
        if not arg:
            raise SpecError("young-kernel needs a kernel, e.g. young-kernel:cos", name)
        g, g_gamma = _kernel(arg, base, gamma)
        return fields.make_young_functional(g, g_gamma, name=name)
    if kind == "composed":
        if not arg:
            raise SpecError("composed needs a spec file", name)
        p = Path(arg)
        return load_composed(p if p.is_absolute() else base / p)
    raise SpecError(f"unknown functional {name!r}", name)
