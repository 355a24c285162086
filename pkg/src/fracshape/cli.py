"""Command line interface: ``fracshape <command> ...``.

Exit codes: 0 when every check passes, 1 on check failures, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_SOLVER_KEYS = ("s", "m", "mode", "mu", "K", "tau0", "backtrack", "tol", "max_iter", "window",
                "n_starts", "seed", "perturbation", "start")


class UsageError(Exception):
    pass


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def solve_config_from_dict(data: dict):
    from .potentials import potential_from_dict
    from .solver import SolveConfig

    kw = {k: data[k] for k in _SOLVER_KEYS if k in data}
    if "start" in kw and kw["start"] is not None:
        kw["start"] = tuple(kw["start"])
    if "potential" in data:
        kw["potential"] = potential_from_dict(data["potential"])
    return SolveConfig(**kw)


def _sweep_volumes(data: dict) -> list:
    if "m_list" in data:
        return [float(m) for m in data["m_list"]]
    if "m_over_pi" in data:
        return [float(f) * math.pi for f in data["m_over_pi"]]
    raise UsageError("sweep config needs m_list or m_over_pi")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_perimeter(args) -> int:
    from .fractional import QuadratureSpec, fractional_perimeter, fractional_perimeter_mc
    from .shapes import load_shape

    E = load_shape(args.shape)
    q = QuadratureSpec(args.s, depth=args.depth)
    if args.method == "mc":
        P = fractional_perimeter_mc(E, q, seed=args.seed, n_samples=args.samples)
    else:
        P = fractional_perimeter(E, q)
    print(json.dumps({"s": args.s, "perimeter": P.value, "error": P.error}))
    return EXIT_OK


def cmd_curvature(args) -> int:
    from .fractional import QuadratureSpec, fractional_mean_curvature, mean_curvature_radial
    from .shapes import IntervalUnion, RadialShape, load_shape

    E = load_shape(args.shape)
    out = csv.writer(sys.stdout, lineterminator="\n")
    if args.all_boundary:
        if isinstance(E, RadialShape):
            H, err = mean_curvature_radial(E, args.s, with_error=True)
            out.writerow(["theta", "x", "y", "H", "error"])
            for t, p, h, e in zip(E.theta, E.boundary, H, err):
                out.writerow([repr(float(t)), repr(float(p[0])), repr(float(p[1])), repr(float(h)), repr(float(e))])
            return EXIT_OK
        if isinstance(E, IntervalUnion):
            out.writerow(["x", "H", "error"])
            for x in E.endpoints()[0]:
                v = fractional_mean_curvature(E, x, QuadratureSpec(args.s))
                out.writerow([repr(float(x)), repr(v.value), repr(v.error)])
            return EXIT_OK
        raise UsageError("--all-boundary needs a radial or interval shape")
    if args.point is None:
        raise UsageError("give --point or --all-boundary")
    v = fractional_mean_curvature(E, np.asarray(args.point, dtype=float), QuadratureSpec(args.s))
    print(json.dumps({"s": args.s, "point": args.point, "H": v.value, "error": v.error}))
    return EXIT_OK


def cmd_minimize(args) -> int:
    from .shapes import save_shape
    from .solver import lagrange_multiplier, minimize, write_trace

    cfg = solve_config_from_dict(_load_json(args.config))
    res = minimize(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_shape(res.physical_shape, out / "minimizer.json")
    write_trace(res, out / "trace.csv")
    summary = {
        "m": cfg.m,
        "s": cfg.s,
        "converged": res.converged,
        "iterations": res.iterations,
        "energy": res.physical_energy,
        "lambda_m": res.lambda_m,
        "el_residual": res.el_residual,
        "volume_deviation": res.volume_deviation,
        "x_m": [float(v) for v in res.x_m],
        "starts_disagree": res.starts_disagree,
    }
    if res.converged:
        summary["lambda_identity"] = lagrange_multiplier(res).identity
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    print(json.dumps(summary))
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_sweep(args) -> int:
    from .harness import (deficit_envelope, emit_report, fit_power_law, r0_envelope, run_sweep)

    data = _load_json(args.config)
    cfg = solve_config_from_dict(data)
    records = run_sweep(cfg, _sweep_volumes(data))
    env = r0_envelope(records, cfg.s)
    denv = deficit_envelope(records, cfg.s, cfg.potential)
    fits = {"r0": env, "delta": denv}
    conv = [r for r in records if r.converged and r.r0 > 0]
    if len(conv) >= 3:
        fits["r0_power_law"] = fit_power_law([r.m for r in conv], [r.r0 for r in conv])
    emit_report(records, args.out, fits, s=cfg.s)
    gaps = [r.lagrange_gap for r in records if r.converged]
    checks = {
        "r0_envelope": env.passed,
        "deficit_envelope": denv.passed,
        "lagrange_gap_below_5pct": all(g < 0.05 for g in gaps),
    }
    (Path(args.out) / "checks.json").write_text(json.dumps(
        {"checks": checks, "r0_C": env.C, "delta_C": denv.C}, indent=1) + "\n")
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def _isoperimetry_suite(s: float) -> list:
    from .isoperimetry import quantitative_check, random_fourier_corpus, symmetric_rearrangement_check
    from .lemmas import LemmaResult
    from .potentials import Potential

    corpus = random_fourier_corpus(50, seed=0)
    q = quantitative_check(corpus, s)
    rows = [LemmaResult(f"quantitative isoperimetry s={s:g} (50 shapes)", 0.0, q.c_lower, 0.0,
                        "pass" if q.passed else "fail", f"C_fit = {q.c_fit:.6g}")]
    g = Potential("power", 2.0)
    for i, E in enumerate(random_fourier_corpus(20, seed=1)):
        r = symmetric_rearrangement_check(E, g, s)
        rows.append(LemmaResult(f"rearrangement shape {i}", r.perimeter_star.value, r.perimeter.value,
                                r.perimeter.error + r.perimeter_star.error, "pass" if r.passed else "fail"))
    return rows


def cmd_verify(args) -> int:
    from .lemmas import run_lemma_suite

    rows = run_lemma_suite() if args.suite == "lemmas" else _isoperimetry_suite(args.s)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"verify_{args.suite}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "lhs", "rhs", "error", "status", "detail"])
        for r in rows:
            w.writerow([r.name, repr(float(r.lhs)), repr(float(r.rhs)), repr(float(r.error)), r.status, r.detail])
    failed = [r for r in rows if r.status == "fail"]
    print(f"{len(rows) - len(failed)}/{len(rows)} checks pass")
    for r in failed:
        print(f"FAIL {r.name}: lhs={r.lhs!r} rhs={r.rhs!r} error={r.error!r}")
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracshape", description="Fractional perimeters and small-volume minimizers.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("perimeter", help="fractional perimeter of a shape")
    a.add_argument("--shape", required=True)
    a.add_argument("--s", type=float, required=True)
    a.add_argument("--method", choices=("auto", "mc"), default="auto")
    a.add_argument("--depth", type=int, default=3)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--samples", type=int, default=None)
    a.set_defaults(func=cmd_perimeter)

    a = sub.add_parser("curvature", help="fractional mean curvature on the boundary")
    a.add_argument("--shape", required=True)
    a.add_argument("--s", type=float, required=True)
    g = a.add_mutually_exclusive_group()
    g.add_argument("--all-boundary", action="store_true")
    g.add_argument("--point", type=float, nargs="+")
    a.set_defaults(func=cmd_curvature)

    for name, func, helptext in (("minimize", cmd_minimize, "solve at one volume"),
                                 ("sweep", cmd_sweep, "solve over a list of volumes")):
        a = sub.add_parser(name, help=helptext)
        a.add_argument("--config", required=True)
        a.add_argument("--out", required=True)
        a.set_defaults(func=func)

    a = sub.add_parser("verify", help="run a verification suite")
    a.add_argument("--suite", choices=("lemmas", "isoperimetry"), required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--s", type=float, default=0.5)
    a.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (UsageError, ValueError, TypeError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
