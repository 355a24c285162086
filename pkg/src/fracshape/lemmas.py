"""Numerical checks of the fractional-derivative bound and the comparison lemma.

Fractional-derivative bound, non-increasing case: for ``f`` on ``[a, inf)``
with ``f(inf) = 0``,

    -(1-s) int_a^b dr int_r^inf f'(t) (t-r)^{-s} dt <= (b-a)^{1-s} f(a),

and the non-decreasing case on ``[0, b]`` with ``f(0) = 0``,

    (1-s) int_a^b dr int_0^r f'(t) (r-t)^{-s} dt <= (b-a)^{1-s} f(b).

The substitution ``t = r +- u^{1/(1-s)}`` turns the inner integrals into
``int f'(r +- u^kappa) du`` with no singularity.

Comparison lemma: a non-increasing ``u`` with
``2c int_rho^b u^{(N-s)/N} <= u(rho)`` vanishes at
``a + (2u(a))^{s/N} N / (s c)``; the auxiliary profile
``h(rho) = [(2u(a))^{s/N} - c (s/N)(rho - a)]_+^{N/s}`` satisfies
``c int_rho^b h^{(N-s)/N} = h(rho)``.

All functions come from a closed registry with analytic derivatives and
tails, so absolute continuity is guaranteed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma as Gamma
from scipy.special import beta as Beta
from scipy.special import betainc, gammaincc

__all__ = [
    "Family",
    "LemmaResult",
    "LemmaProbe",
    "FAMILIES",
    "make_family",
    "frac_derivative_bound_check",
    "aux_h",
    "aux_h_identity",
    "comparison_profile",
    "comparison_lemma_check",
    "default_probes",
    "run_lemma_suite",
]

_TAIL_EPS = 1e-12
_GRADE = 4


@dataclass(frozen=True)
class Family:
    """A registered function with its derivative.

    ``support_end`` is where ``f'`` vanishes identically beyond (or ``inf``);
    ``tail`` returns ``int_U^inf f'(r + u^kappa) du`` in closed form for the
    decreasing families (``None`` when not needed).
    """

    name: str
    f: Callable
    df: Callable
    monotone: str  # "decreasing" or "increasing"
    support_end: float = math.inf
    cutoff: Callable | None = None
    tail: Callable | None = None


def _zero():
    z = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return Family("zero", z, z, "decreasing", support_end=0.0)


def _exp_decay(alpha: float = 1.0):
    if not alpha > 0:
        raise ValueError("alpha must be positive")

    def tail(r, U, kappa):
        # int_U^inf -alpha e^{-alpha (r + u^kappa)} du
        p = 1.0 / kappa
        return -alpha * math.exp(-alpha * r) * p * alpha ** (-p) * Gamma(p) * gammaincc(p, alpha * U**kappa)

    return Family(
        f"exp(-{alpha:g} t)",
        lambda t: np.exp(-alpha * np.asarray(t, dtype=float)),
        lambda t: -alpha * np.exp(-alpha * np.asarray(t, dtype=float)),
        "decreasing",
        cutoff=lambda a: a - math.log(_TAIL_EPS) / alpha,
        tail=tail,
    )


def _hat(T: float = 1.0, q: float = 1.0):
    if not (T > 0 and q >= 1):
        raise ValueError("hat family needs T > 0 and q >= 1")

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(0.0, 1.0 - t / T) ** q

    def df(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t < T)
        return np.where(inside, -q / T * np.maximum(0.0, 1.0 - t / T) ** (q - 1), 0.0)

    return Family(f"max(0, 1 - t/{T:g})^{q:g}", f, df, "decreasing", support_end=T)


def _power(p: float = 2.0):
    if not p >= 1:
        raise ValueError("power family needs p >= 1")
    return Family(
        f"t^{p:g}",
        lambda t: np.maximum(np.asarray(t, dtype=float), 0.0) ** p,
        lambda t: p * np.maximum(np.asarray(t, dtype=float), 0.0) ** (p - 1),
        "increasing",
    )


def _saturating(alpha: float = 1.0):
    return Family(
        f"1 - exp(-{alpha:g} t)",
        lambda t: 1.0 - np.exp(-alpha * np.asarray(t, dtype=float)),
        lambda t: alpha * np.exp(-alpha * np.asarray(t, dtype=float)),
        "increasing",
    )


FAMILIES = {"zero": _zero, "exp": _exp_decay, "hat": _hat, "power": _power, "saturating": _saturating}


def make_family(name: str, **params) -> Family:
    try:
        return FAMILIES[name](**params)
    except KeyError:
        raise ValueError(f"unknown family {name!r}") from None


@dataclass(frozen=True)
class LemmaProbe:
    """Inputs of one fractional-derivative check."""

    family: Family
    a: float
    b: float
    s: float
    n: int = 32

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        if self.family.monotone == "increasing" and self.a < 0:
            raise ValueError("the non-decreasing case lives on [0, b]")


@dataclass(frozen=True)
class LemmaResult:
    """``status`` is ``pass``, ``fail`` or ``vacuous`` (hypothesis not satisfied)."""

    name: str
    lhs: float
    rhs: float
    error: float
    status: str
    detail: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def _status(lhs, rhs, err, factor=3.0) -> str:
    return "fail" if lhs - rhs > factor * err else "pass"


def _check_monotone(fam: Family, lo: float, hi: float, n: int = 2001) -> None:
    t = np.linspace(lo, hi, n)
    v = fam.f(t)
    d = np.diff(v)
    tol = 1e-14 * max(1.0, float(np.max(np.abs(v))))
    if np.any(v < -tol):
        raise ValueError(f"{fam.name} is negative on [{lo}, {hi}]")
    if fam.monotone == "decreasing" and np.any(d > tol):
        raise ValueError(f"monotonicity violated: {fam.name} is not non-increasing")
    if fam.monotone == "increasing" and np.any(d < -tol):
        raise ValueError(f"monotonicity violated: {fam.name} is not non-decreasing")


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _composite(lo, hi, n, panels):
    """Composite Gauss-Legendre nodes/weights on [lo, hi], graded toward both ends.

    The map ``v -> I_v(4, 4)`` (regularized incomplete beta) has a fourth-order
    zero of its derivative at each end, which absorbs the ``(end - r)^{1-s}``
    type endpoint behaviour of the integrands.
    """
    x, w = _gl(n)
    edges = np.linspace(0.0, 1.0, panels + 1)
    width = np.diff(edges)
    v = (edges[:-1, None] + width[:, None] * x[None, :]).ravel()
    wv = (width[:, None] * w[None, :]).ravel()
    k = _GRADE
    phi = betainc(k, k, v)
    dphi = v ** (k - 1) * (1 - v) ** (k - 1) / Beta(k, k)
    return lo + (hi - lo) * phi, (hi - lo) * wv * dphi


def _frac_lhs(probe: LemmaProbe, n: int) -> float:
    fam, a, b, s = probe.family, probe.a, probe.b, probe.s
    kappa = 1.0 / (1.0 - s)
    total = []
    if fam.monotone == "decreasing":
        # f' vanishes beyond a finite support end, so the outer range stops there
        hi = min(b, fam.support_end)
        if hi <= a:
            return 0.0
        end = fam.support_end if fam.cutoff is None else fam.cutoff(a)
        rn, rw = _composite(a, hi, n, 4)
        for r, wr in zip(rn, rw):
            if end <= r:
                continue
            U = (end - r) ** (1.0 / kappa)
            un, uw = _composite(0.0, U, n, 8)
            inner = float(np.dot(uw, fam.df(r + un**kappa)))
            if fam.tail is not None:
                inner += fam.tail(r, U, kappa)
            total.append(-wr * inner)
    else:
        rn, rw = _composite(a, b, n, 4)
        for r, wr in zip(rn, rw):
            U = r ** (1.0 / kappa)
            un, uw = _composite(0.0, U, n, 8)
            total.append(wr * float(np.dot(uw, fam.df(r - un**kappa))))
    return math.fsum(total)


def frac_derivative_bound_check(probe: LemmaProbe) -> LemmaResult:
    """Check the fractional-derivative bound for one probe.

    The double integral is evaluated by tensor Gauss-Legendre quadrature after
    the singularity-removing substitution; the error bar is the change under
    doubling the node count.
    """
    fam, a, b, s = probe.family, probe.a, probe.b, probe.s
    if fam.monotone == "decreasing":
        end = fam.support_end if math.isfinite(fam.support_end) else fam.cutoff(a)
        _check_monotone(fam, a, max(end, b))
        rhs = (b - a) ** (1 - s) * float(fam.f(a))
        name = f"frac-derivative (non-increasing) {fam.name} on [{a:g},{b:g}] s={s:g}"
    else:
        _check_monotone(fam, 0.0, b)
        if abs(float(fam.f(0.0))) > 1e-14:
            raise ValueError("the non-decreasing case needs f(0) = 0")
        rhs = (b - a) ** (1 - s) * float(fam.f(b))
        name = f"frac-derivative (non-decreasing) {fam.name} on [{a:g},{b:g}] s={s:g}"
    lhs = _frac_lhs(probe, probe.n)
    fine = _frac_lhs(probe, 2 * probe.n)
    err = abs(fine - lhs) + 1e-14 * max(abs(rhs), 1.0)
    return LemmaResult(name, fine, rhs, err, _status(fine, rhs, err))


# ---------------------------------------------------------------------------
# comparison lemma
# ---------------------------------------------------------------------------


def _root(u_a: float, a: float, s: float, c: float, N: int) -> float:
    return a + (2 * u_a) ** (s / N) * N / (s * c)


def aux_h(rho, u_a: float, a: float, s: float, c: float, N: int):
    """``h(rho) = [(2u(a))^{s/N} - c (s/N)(rho - a)]_+^{N/s}``."""
    rho = np.asarray(rho, dtype=float)
    base = (2 * u_a) ** (s / N) - c * (s / N) * (rho - a)
    return np.maximum(base, 0.0) ** (N / s)


def aux_h_identity(u_a: float, a: float, b: float, s: float, c: float, N: int,
                   n_probe: int = 50, rtol: float = 1e-6) -> LemmaResult:
    """Verify ``c int_rho^b h^{(N-s)/N} dr = h(rho)`` at ``n_probe`` points of ``[a, b]``."""
    R = _root(u_a, a, s, c, N)
    if b < R:
        raise ValueError("support condition violated: b < a + (2u(a))^{s/N} N/(s c)")
    p = (N - s) / N
    worst, err_bar = 0.0, 0.0
    lhs_at, rhs_at = 0.0, 0.0
    for rho in np.linspace(a, b, n_probe):
        hi = min(b, R)
        if rho >= hi:
            val, e = 0.0, 0.0
        else:
            val, e = integrate.quad(lambda r: aux_h(r, u_a, a, s, c, N) ** p, rho, hi,
                                    epsabs=1e-14, epsrel=1e-12, limit=200)
        lhs = c * val
        rhs = float(aux_h(rho, u_a, a, s, c, N))
        scale = max(abs(rhs), 2 * u_a, 1e-300)
        dev = abs(lhs - rhs) / scale
        if dev >= worst:
            worst, lhs_at, rhs_at = dev, lhs, rhs
            err_bar = (c * e + 1e-15 * scale) / scale
    h_a = float(aux_h(a, u_a, a, s, c, N))
    exact_start = abs(h_a - 2 * u_a) <= 1e-12 * max(2 * u_a, 1e-300)
    status = "pass" if worst <= max(rtol, 3 * err_bar) and exact_start else "fail"
    name = f"auxiliary identity u(a)={u_a:g} a={a:g} b={b:g} s={s:g} c={c:g} N={N}"
    return LemmaResult(name, lhs_at, rhs_at, err_bar, status, f"max relative deviation {worst:.3e}")


def comparison_profile(amplitude: float, a: float, b: float, s: float, c: float, N: int,
                       kappa: float = 2.0, theta: float = 1.0, variant: str = "decreasing"):
    """Test profiles for the comparison lemma.

    ``theta * [A^{s/N} - kappa c (s/N) d]_+^{N/s}`` with ``d = rho - a``
    (decreasing) or ``d = b - rho`` (increasing). With ``theta = 1`` the
    hypothesis holds iff ``kappa >= 2`` (equality at 2); with ``kappa = 1`` it
    holds iff ``theta >= 2^{N/s}``.
    """
    def u(rho):
        rho = np.asarray(rho, dtype=float)
        d = rho - a if variant == "decreasing" else b - rho
        return theta * np.maximum(amplitude ** (s / N) - kappa * c * (s / N) * d, 0.0) ** (N / s)

    return u


def comparison_lemma_check(u: Callable, a: float, b: float, s: float, c: float, N: int,
                           variant: str = "decreasing", n_grid: int = 400, name: str = "") -> LemmaResult:
    """Check the comparison lemma for a profile ``u`` on ``[a, b]``.

    The hypothesis is tested on a grid of ``rho`` values; when it fails the
    result is ``vacuous`` rather than a failure. Otherwise the profile must
    vanish at the predicted point (within the grid tolerance).
    """
    grid = np.linspace(a, b, n_grid + 1)
    vals = u(grid)
    if np.any(vals < 0):
        raise ValueError("profile must be non-negative")
    d = np.diff(vals)
    tol = 1e-13 * max(1.0, float(np.max(vals)))
    if (variant == "decreasing" and np.any(d > tol)) or (variant == "increasing" and np.any(d < -tol)):
        raise ValueError("monotonicity violated")
    end_val = float(u(a if variant == "decreasing" else b))
    R = _root(end_val, a, s, c, N)
    point = R if variant == "decreasing" else b - (R - a)
    label = name or f"comparison ({variant}) s={s:g} c={c:g} N={N}"
    if (variant == "decreasing" and R > b) or (variant == "increasing" and point < a):
        return LemmaResult(label, math.nan, 0.0, 0.0, "vacuous", "support condition not satisfied")
    p = (N - s) / N
    worst = -math.inf
    for rho in grid[1:-1]:
        lo, hi = (rho, b) if variant == "decreasing" else (a, rho)
        val, e = integrate.quad(lambda r: u(r) ** p, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=200)
        gap = 2 * c * val - float(u(rho)) - 2 * c * e
        worst = max(worst, gap / max(float(u(rho)), tol))
    if worst > 1e-9:
        return LemmaResult(label, math.nan, 0.0, 0.0, "vacuous",
                           f"hypothesis not satisfied (worst relative excess {worst:.3e})")
    at = float(u(point))
    grid_tol = tol + 1e-12
    status = "pass" if at <= grid_tol else "fail"
    return LemmaResult(label, at, 0.0, grid_tol / 3, status, f"u at predicted root {at:.3e}")


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def default_probes(s_values=(0.2, 0.5, 0.8)) -> list:
    probes = []
    for s in s_values:
        probes += [
            LemmaProbe(make_family("zero"), 0.0, 1.0, s),
            LemmaProbe(make_family("exp", alpha=1.0), 0.0, 1.0, s),
            LemmaProbe(make_family("exp", alpha=3.0), 0.5, 2.0, s),
            LemmaProbe(make_family("hat", T=1.0, q=1.0), 0.0, 1.0, s),
            LemmaProbe(make_family("hat", T=2.0, q=2.0), 0.0, 1.0, s),
            LemmaProbe(make_family("power", p=1.0), 0.0, 1.0, s),
            LemmaProbe(make_family("power", p=2.0), 0.5, 1.5, s),
            LemmaProbe(make_family("saturating", alpha=2.0), 0.2, 1.0, s),
        ]
    return probes


def run_lemma_suite(s_values=(0.2, 0.5, 0.8)) -> list:
    """Every registered lemma probe; returns a list of :class:`LemmaResult`."""
    out = [frac_derivative_bound_check(p) for p in default_probes(s_values)]
    for s in s_values:
        for N in (1, 2):
            c = 1.0
            u_a = 0.1
            R = _root(u_a, 0.0, s, c, N)
            out.append(aux_h_identity(u_a, 0.0, R + 0.5, s, c, N))
            for kappa, theta in ((2.0, 1.0), (3.0, 1.0), (1.0, 2 ** (N / s)), (1.0, 0.5)):
                b = _root(0.2 * theta, 0.0, s, c, N) + 0.25
                for variant in ("decreasing", "increasing"):
                    u = comparison_profile(0.2, 0.0, b, s, c, N, kappa=kappa, theta=theta, variant=variant)
                    out.append(comparison_lemma_check(
                        u, 0.0, b, s, c, N, variant=variant, n_grid=60,
                        name=f"comparison ({variant}) kappa={kappa:g} theta={theta:g} s={s:g} N={N}"))
    return out
