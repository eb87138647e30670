"""Command line interface: ``yode gen | verify | solve | converge | constants | rerun``.

Exit codes: 0 success, 1 certificate failure, 2 usage or exponent error,
3 numerical failure. Relative output paths are placed under the output
directory (``--out-dir``, else ``$YODE_OUTPUT_DIR``, else the working
directory). Every run writes ``<artifact>.manifest`` next to its main
artifact.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__, drivers, kernels, rng
from .errors import NumericalError, YodeError
from .fields import estimate_constants, path_sampler
from .paths import DiscretePath, read_keyvalue, read_path, write_keyvalue, write_path
from .registry import resolve_functional
from .solvers import check_exponents, delta_delay_solve, picard_window_solve, plan_for
from .suites import SUITES, dumps_rows, markdown_rows, run_suite
from .young import IntegrandPath, convergence_study

OUTPUT_ENV = "YODE_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(YodeError):
    pass


# --------------------------------------------------------------------------
# helpers


def _out_dir(args) -> Path:
    d = args.out_dir or os.environ.get(OUTPUT_ENV) or "."
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _resolve_out(args, name: str) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = _out_dir(args) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _manifest(args, artifact: Path, extra: dict) -> Path:
    items = {
        "command": args.command,
        "argv": shlex.join(args.argv),
        "yode_version": __version__,
        "numpy_version": np.__version__,
        "kernel_backend": kernels.BACKEND,
        "rng": rng.VERSION,
        "artifact": artifact.name,
    }
    items.update(extra)
    path = artifact.with_name(artifact.name + ".manifest")
    write_keyvalue(items, path)
    return path


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_driver(args) -> tuple[DiscretePath, float, str]:
    """Driver path, its declared exponent and a description."""
    if args.driver_file:
        X = read_path(args.driver_file)
        alpha = args.alpha
        if alpha is None:
            raise UsageError("--driver-file needs --alpha (the exponent cannot be measured from one sample)")
        return X, alpha, f"file:{args.driver_file}"
    spec = drivers.parse_driver_spec(args.driver)
    alpha = args.alpha if args.alpha is not None else drivers.declared_alpha(spec)
    return drivers.generate(spec), alpha, spec.describe()


def _parse_levels(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = text.split("-", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --levels {text!r}; use e.g. 6-12 or 6,8,10") from None


def _y0(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")], dtype=np.float64)
    except ValueError:
        raise UsageError(f"bad --y0 {text!r}; use a number or a comma separated vector") from None


# --------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    spec = drivers.parse_driver_spec(args.spec)
    X = drivers.generate(spec)
    out = _resolve_out(args, args.out)
    write_path(X, out)
    _manifest(args, out, {"spec": spec.describe(), "declared_alpha": drivers.declared_alpha(spec)})
    print(f"wrote {X.grid.n_points} points to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    opts = {"functional": args.functional, "delta": args.delta, "base_dir": str(Path.cwd())}
    if args.points is not None:
        opts["n_points"] = args.points
    rows = run_suite(args.suite, args.n, args.seed, jobs=args.jobs, **opts)
    out = _resolve_out(args, args.out or f"verify-{args.suite}.csv")
    _write_text(out, dumps_rows(rows))
    n_pass = sum(r.passed for r in rows)
    extra = {"suite": args.suite, "n": args.n, "seed": args.seed, "jobs": args.jobs,
             "rows": len(rows), "passed": n_pass}
    if args.suite == "probe":
        extra["functional"] = args.functional
        extra["delta"] = "" if args.delta is None else args.delta
    _manifest(args, out, extra)
    if args.markdown:
        print(markdown_rows(rows), end="")
    else:
        print(f"{args.suite}: {n_pass}/{len(rows)} checks passed; rows in {out}")
    return EXIT_OK if n_pass == len(rows) else EXIT_FAIL


def cmd_solve(args) -> int:
    X, alpha, driver_desc = _load_driver(args)
    F = resolve_functional(args.functional, gamma=args.gamma)
    alpha_prime = args.alpha_prime if args.alpha_prime is not None else alpha - 0.05
    check_exponents(alpha, alpha_prime, F.declared_beta, F.gammas)
    y0 = _y0(args.y0)
    if args.method == "delta":
        delta_idx = None
        if args.delta is not None:
            delta_idx = X.grid.steps(args.delta)
        rep = delta_delay_solve(F, X, y0, delta_idx, probe=not args.skip_probe, residual_alpha=alpha_prime)
    else:
        if args.plan or args.paper_windows:
            plan = plan_for(F, X, y0, alpha, alpha_prime, epsilon=args.epsilon, bounded=args.bounded)
        else:
            plan = "auto"
        rep = picard_window_solve(
            F, X, y0, plan, args.tol, args.max_iter,
            alpha=alpha, alpha_prime=alpha_prime, paper_windows=args.paper_windows,
        )
    out = _resolve_out(args, args.out or "solution.csv")
    write_path(rep.solution, out)
    meta = rep.metadata()
    meta.update({"functional": args.functional, "driver": driver_desc, "alpha": alpha,
                 "alpha_prime": alpha_prime, "beta": F.declared_beta, "y0": args.y0})
    if args.method == "picard":
        meta.update({"tol": args.tol, "max_iter": args.max_iter, "paper_windows": args.paper_windows})
        meta["window_log"] = ";".join(f"{w.start_index}:{w.iterations}:{w.final_delta:.3g}" for w in rep.windows)
    write_keyvalue(meta, out.with_name(out.name + ".meta"))
    _manifest(args, out, {"functional": args.functional, "driver": driver_desc, "method": args.method})
    final = ",".join(f"{v:.12g}" for v in rep.solution.values[-1])
    if args.markdown:
        print("| quantity | value |\n|---|---|")
        for k in ("residual_sup", "residual_holder", "windows", "iterations", "decay_ratio"):
            print(f"| {k} | {meta[k]} |")
        print(f"| Y_T | {final} |")
    else:
        print(f"Y_T={final}")
        print(f"residual_sup={rep.residual_sup:.6g} residual_holder={rep.residual_holder:.6g}")
        print(f"windows={len(rep.windows)} iterations={rep.iterations}"
              + ("" if rep.decay_ratio is None else f" decay_ratio={rep.decay_ratio:.6g}"))
    for w in rep.warnings:
        print(f"note: {w}", file=sys.stderr)
    return EXIT_OK


def _integrand(name: str, X: DiscretePath) -> IntegrandPath:
    if name == "u":
        return IntegrandPath.from_function(X.grid, lambda t: t)
    if name == "x":
        return IntegrandPath.from_path(X)
    if name == "sin-x":
        return IntegrandPath.from_path(X.map(np.sin))
    if name.startswith("const:"):
        try:
            c = float(name[6:])
        except ValueError:
            raise UsageError(f"bad constant integrand {name!r}") from None
        return IntegrandPath.constant(X.grid, [[c]])
    if name.startswith("young-kernel:"):
        F = resolve_functional(name)
        return F.integrand(X)
    raise UsageError(f"unknown integrand {name!r}; use u, x, sin-x, const:<c> or young-kernel:<g>")


def cmd_converge(args) -> int:
    X, alpha, driver_desc = _load_driver(args)
    W = _integrand(args.integrand, X)
    gamma = args.gamma if args.gamma is not None else alpha
    table = convergence_study(W, X, alpha, gamma, _parse_levels(args.levels))
    out = _resolve_out(args, args.out or "converge.csv")
    _write_text(out, table.to_csv())
    rate = "exact" if table.exact else ("" if table.fitted_rate is None else table.fitted_rate)
    _manifest(args, out, {"driver": driver_desc, "integrand": args.integrand, "alpha": alpha,
                          "gamma": gamma, "levels": args.levels, "fitted_rate": rate})
    print(table.to_markdown() if args.markdown else table.to_csv(), end="")
    if args.min_rate is not None and not table.exact:
        if table.fitted_rate is None or table.fitted_rate < args.min_rate:
            print(f"fitted rate {table.fitted_rate} below required {args.min_rate}", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


def cmd_constants(args) -> int:
    F = resolve_functional(args.functional, gamma=args.gamma)
    spec = drivers.parse_driver_spec(args.sampler)
    beta = args.beta if args.beta is not None else F.declared_beta
    c = estimate_constants(F, args.alpha, beta, path_sampler(spec, args.seed), args.n_samples, args.seed)
    out = _resolve_out(args, args.out or "constants.txt")
    items = {"functional": args.functional, "c_time": c.c_time, "c_space": c.c_space, "alpha": c.alpha,
             "beta": c.beta, "n_samples": c.n_samples, "seed": args.seed, "sampler": spec.describe(),
             "degenerate": c.degenerate}
    try:
        a = F.constants(args.alpha, spec.grid)
        items.update({"analytic_c_time": a.c_time, "analytic_c_space": a.c_space})
    except YodeError:
        pass
    write_keyvalue(items, out)
    _manifest(args, out, {"functional": args.functional, "sampler": spec.describe()})
    if args.markdown:
        print("| constant | empirical | analytic |\n|---|---|---|")
        print(f"| c_time | {c.c_time:.6g} | {items.get('analytic_c_time', '')} |")
        print(f"| c_space | {c.c_space:.6g} | {items.get('analytic_c_space', '')} |")
    else:
        print(f"c_time={c.c_time:.17g} c_space={c.c_space:.17g}" + (" (degenerate sampler)" if c.degenerate else ""))
    return EXIT_OK


def cmd_rerun(args) -> int:
    kv = read_keyvalue(args.manifest)
    if "argv" not in kv:
        raise UsageError(f"{args.manifest} has no argv entry")
    return main(shlex.split(kv["argv"]))


# --------------------------------------------------------------------------
# parser


def _driver_args(p, default="linear:n=1025"):
    p.add_argument("--driver", default=default, help="driver spec, e.g. fbm:H=0.75,seed=1,n=1025")
    p.add_argument("--driver-file", help="driver path CSV (overrides --driver; needs --alpha)")
    p.add_argument("--alpha", type=float, help="declared Hölder exponent of the driver")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="yode", description="Young integration and path-dependent Young ODEs.")
    parser.add_argument("--version", action="version", version=f"yode {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("--markdown", action="store_true", help="print a markdown table instead of plain text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a driver path")
    p.add_argument("spec")
    p.add_argument("out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", parents=[common], help="run a randomized certificate suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--n", type=int, default=100, help="number of instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, help="grid points per instance")
    p.add_argument("--functional", default="dupire-max", help="field for the probe suite")
    p.add_argument("--delta", type=float, help="delay for the probe suite (time units)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", parents=[common], help="solve Y = y0 + int F(u, Y) dX")
    p.add_argument("method", choices=("delta", "picard"))
    p.add_argument("--functional", required=True)
    _driver_args(p)
    p.add_argument("--alpha-prime", type=float, help="lower exponent (default alpha - 0.05)")
    p.add_argument("--gamma", type=float, help="Hölder exponent of a file kernel")
    p.add_argument("--y0", default="0")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--delta", type=float, help="delay in time units (default: the field's own)")
    p.add_argument("--skip-probe", action="store_true", help="do not probe the delay claim")
    p.add_argument("--paper-windows", action="store_true", help="use the planned window length as is")
    p.add_argument("--plan", action="store_true", help="require a window plan (fails without constants)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--bounded", action="store_true", help="plan with the bounded-field formula")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", parents=[common], help="dyadic refinement study of a Young sum")
    _driver_args(p, "linear:n=4097")
    p.add_argument("--integrand", default="u", help="u, x, sin-x, const:<c> or young-kernel:<g>")
    p.add_argument("--gamma", type=float, help="integrand exponent (default alpha)")
    p.add_argument("--levels", default="6-12")
    p.add_argument("--min-rate", type=float, help="exit 1 if the fitted rate is lower")
    p.add_argument("--out")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("constants", parents=[common], help="estimate field constants")
    p.add_argument("--functional", required=True)
    p.add_argument("--sampler", default="fbm:H=0.75,n=257")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--n-samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("rerun", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    args.argv = argv
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"yode: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (YodeError, OSError) as exc:
        print(f"yode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
