"""Volume sweeps of the minimization problem, envelope fits and reports.

A sweep solves the problem at a decreasing geometric list of volumes and
records, per volume, the ball sandwich ``r0`` of the rescaled minimizer, its
asymmetry and deficit, both Lagrange multiplier estimates, the convexity
defect and the distance of the optimal center to the zero set of ``g``.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .isoperimetry import wulff_deficit, fraenkel_asymmetry
from .potentials import Potential
from .shapes import ball_sandwich_radii, convexity_defect
from .solver import SolveConfig, StarShapeError, lagrange_multiplier, minimize

log = logging.getLogger(__name__)

__all__ = [
    "CSV_COLUMNS",
    "SweepRecord",
    "PowerLawFit",
    "EnvelopeCheck",
    "thread_cap",
    "solve_record",
    "run_sweep",
    "fit_power_law",
    "r0_envelope",
    "deficit_envelope",
    "monotone_with_slack",
    "emit_report",
    "read_sweep_csv",
]

CSV_COLUMNS = (
    "m", "sigma", "r0", "A", "delta_s", "lambda_flow", "lambda_identity",
    "convexity_defect", "dist_xm", "energy", "converged",
)

# values below these are numerical zero for a ball-like minimizer
R0_FLOOR = 1e-8
DIST_FLOOR = 1e-6


@dataclass(frozen=True)
class SweepRecord:
    """Diagnostics of the minimizer at one volume ``m``."""

    m: float
    sigma: float
    r0: float = math.nan
    A: float = math.nan
    delta_s: float = math.nan
    lambda_flow: float = math.nan
    lambda_identity: float = math.nan
    convexity_defect: float = math.nan
    dist_xm: float = math.nan
    energy: float = math.nan
    converged: bool = False
    x_m: tuple = (math.nan, math.nan)
    delta_error: float = math.nan
    note: str = ""

    def row(self) -> list:
        out = [repr(float(getattr(self, c))) for c in CSV_COLUMNS[:-1]]
        return out + ["true" if self.converged else "false"]

    @property
    def lagrange_gap(self) -> float:
        return abs(self.lambda_flow - self.lambda_identity) / abs(self.lambda_identity)


def thread_cap(default: int | None = None) -> int:
    """Worker count: ``FRACSHAPE_THREADS`` if set, else the CPU count."""
    env = os.environ.get("FRACSHAPE_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("FRACSHAPE_THREADS must be >= 1")
        return n
    return default or os.cpu_count() or 1


def solve_record(cfg: SolveConfig) -> SweepRecord:
    """Solve at ``cfg.m`` and reduce the result to a :class:`SweepRecord`.

    Failures are recorded (``converged=False``) rather than raised.
    """
    sigma = cfg.sigma
    try:
        res = minimize(cfg)
    except (StarShapeError, FloatingPointError, ValueError) as exc:
        log.warning("solve at m=%g failed: %s", cfg.m, exc)
        return SweepRecord(cfg.m, sigma, note=str(exc))
    g = cfg.potential
    x_m = np.asarray(res.x_m, dtype=float)
    unit = res.rescaled_about_xm
    r0 = ball_sandwich_radii(unit, np.zeros(2)).r0
    A = fraenkel_asymmetry(unit).asymmetry
    d = wulff_deficit(unit, cfg.s)
    if res.converged:
        lam = lagrange_multiplier(res)
        flow, ident = lam.flow, lam.identity
    else:
        flow, ident = res.lambda_m, math.nan
    return SweepRecord(
        m=cfg.m,
        sigma=sigma,
        r0=float(r0),
        A=float(A),
        delta_s=float(d.deficit),
        lambda_flow=float(flow),
        lambda_identity=float(ident),
        convexity_defect=float(convexity_defect(res.physical_shape)),
        dist_xm=float(g.distance_to_zero_set(x_m)),
        energy=float(res.physical_energy),
        converged=bool(res.converged),
        x_m=tuple(float(v) for v in x_m),
        delta_error=float(d.deficit_error),
    )


def _validate_m_list(m_list) -> list:
    ms = [float(m) for m in m_list]
    if len(ms) < 5:
        raise ValueError("m_list needs at least 5 volumes")
    if any(not m > 0 for m in ms):
        raise ValueError("volumes must be positive")
    if any(b >= a for a, b in zip(ms, ms[1:])):
        raise ValueError("m_list must be strictly decreasing")
    if ms[0] / ms[-1] < 10 * (1 - 1e-12):
        raise ValueError("m_list must span at least one decade")
    return ms


def run_sweep(base: SolveConfig, m_list, workers: int | None = None) -> list:
    """Solve at every volume of ``m_list`` (decreasing, >= 5 points, >= 1 decade).

    Solves are independent and run in a process pool capped by
    ``FRACSHAPE_THREADS``; results do not depend on the worker count.

    Raises
    ------
    RuntimeError
        When every solve fails.
    """
    ms = _validate_m_list(m_list)
    cfgs = [replace(base, m=m) for m in ms]
    n = min(workers or thread_cap(), len(cfgs))
    if n <= 1:
        records = [solve_record(c) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            records = list(pool.map(solve_record, cfgs))
    if not any(r.converged for r in records):
        raise RuntimeError("all solves in the sweep failed")
    return records


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through ``(log x, log y)``."""

    slope: float
    intercept: float
    r2: float
    residuals: tuple

    def __call__(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_power_law(xs, ys) -> PowerLawFit:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ValueError("need at least 3 paired points")
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise ValueError("power-law fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss == 0 else min(1.0, max(0.0, 1.0 - float(np.sum(resid**2)) / ss))
    return PowerLawFit(float(slope), float(intercept), r2, tuple(float(r) for r in resid))


@dataclass(frozen=True)
class EnvelopeCheck:
    """An upper-bound envelope ``y <= C * bound`` fitted with one constant."""

    C: float
    exponent: float
    passed: bool
    detail: str = ""


def monotone_with_slack(values, slack: float = 0.1, floor: float = 0.0, increasing: bool = False) -> bool:
    """Non-increasing (or non-decreasing) along the list, up to relative slack.

    Values below ``floor`` count as zero.
    """
    v = [0.0 if abs(x) < floor else x for x in values]
    for a, b in zip(v, v[1:]):
        if increasing and b < a - slack * abs(a):
            return False
        if not increasing and b > a + slack * abs(a) + floor:
            return False
    return True


def r0_envelope(records, s: float, N: int = 2) -> EnvelopeCheck:
    """``r0(m) <= C m^{s^2/(2N^2)}`` with ``C`` the max over converged rows."""
    e = s * s / (2 * N * N)
    rows = [r for r in records if r.converged]
    if not rows:
        return EnvelopeCheck(math.nan, e, False, "no converged rows")
    C = max(max(r.r0, 0.0) * r.m ** (-e) for r in rows)
    ok = math.isfinite(C) and all(r.r0 <= C * r.m**e * (1 + 1e-12) + R0_FLOOR for r in rows)
    return EnvelopeCheck(C, e, ok, f"C = {C:.6g}")


def _sup_on_ball(g: Potential, radius: float, n: int = 720) -> float:
    t = 2 * np.pi * np.arange(n) / n
    rs = radius * np.linspace(0.0, 1.0, 9)
    pts = rs[:, None, None] * np.stack([np.cos(t), np.sin(t)], axis=-1)[None]
    return float(np.max(g(pts)))


def deficit_envelope(records, s: float, g: Potential) -> EnvelopeCheck:
    """``delta_s <= C sigma^s sup_{B_sigma} g`` with a single fitted ``C``."""
    rows = [r for r in records if r.converged]
    if not rows:
        return EnvelopeCheck(math.nan, s, False, "no converged rows")
    bound = [r.sigma**s * _sup_on_ball(g, r.sigma) for r in rows]
    if any(not b > 0 for b in bound):
        return EnvelopeCheck(math.nan, s, False, "bound vanishes")
    C = max(max(r.delta_s, 0.0) / b for r, b in zip(rows, bound))
    return EnvelopeCheck(C, s, math.isfinite(C), f"C = {C:.6g}")


def emit_report(records, outdir, fits: dict | None = None, s: float | None = None) -> list:
    """Write ``sweep.csv`` and, when fits are given, log-log SVG plots.

    Returns the list of written paths. Without fits only the CSV is written
    and a warning is issued.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to report")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    paths = [out / "sweep.csv"]
    with open(paths[0], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.row())
    if not fits:
        warnings.warn("no fits supplied: wrote sweep.csv only", stacklevel=2)
        return paths
    from .plotting import loglog_svg

    m = np.array([r.m for r in records])
    conv = np.array([r.converged for r in records])
    col = lambda name: np.where(conv, [getattr(r, name) for r in records], np.nan)
    env = fits.get("r0")
    series = [("r0", col("r0"), "o-")]
    if isinstance(env, EnvelopeCheck) and math.isfinite(env.C) and env.C > 0:
        series.append((f"{env.C:.3g} m^{env.exponent:.4g}", env.C * m**env.exponent, "k--"))
    plots = [
        ("r0_vs_m.svg", series, "r0"),
        ("lambda_vs_m.svg", [("lambda (flow)", col("lambda_flow"), "o-"),
                             ("lambda (identity)", col("lambda_identity"), "x--")], "lambda_m"),
        ("delta_vs_m.svg", [("delta_s", col("delta_s"), "o-")], "delta_s"),
    ]
    for name, ser, ylabel in plots:
        p = out / name
        title = f"s = {s:g}" if s is not None else ""
        if loglog_svg(p, m, ser, "m", ylabel, title):
            paths.append(p)
        else:
            log.warning("%s: nothing positive to plot", name)
    return paths


def read_sweep_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        kw = {k: float(row[k]) for k in CSV_COLUMNS[:-1]}
        out.append(SweepRecord(converged=row["converged"] == "true", **kw))
    return out


def records_as_dicts(records) -> list:
    return [asdict(r) for r in records]
