"""Volume-constrained minimization of ``P_s(E) + int_E g`` over star-shaped sets.

Work happens in rescaled coordinates ``y = (x - x_ref) / sigma`` where
``sigma = (m / pi)^{1/2}``, so the constraint reads ``|F| = pi`` and the
potential becomes ``g_m(y) = sigma^s g(sigma y + x_ref)``. A set is a radial
profile ``rho`` about a movable star center ``c``.

Each iteration takes

* a preconditioned gradient step on ``rho``: the L2 gradient of the energy is
  ``(H_s + g_m) rho``; the Fourier preconditioner ``1 / (1 + |k|^{1+s})``
  matches the order of the fractional curvature operator;
* in projected mode, the multiplier removes the volume component of the step
  and a uniform scaling restores ``|F| = pi`` exactly;
* in penalized mode, the step includes ``mu sign(|F| - pi)`` and is followed
  by an exact one-dimensional minimization over uniform scalings;
* a Newton step on the star center (translations only change the potential
  term).

Step sizes use Armijo backtracking, so accepted energies strictly decrease.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .fractional import QuadratureSpec, _radial_curvature, _radial_perimeter_value, fractional_perimeter
from .isoperimetry import fraenkel_asymmetry
from .potentials import Potential, RescaledPotential
from .shapes import (
    GridSet,
    RadialShape,
    RescaleMap,
    Shape,
    descale,
    hausdorff_distance,
    integrate_over,
    rescale_to_unit,
    volume,
)

log = logging.getLogger(__name__)

__all__ = [
    "StarShapeError",
    "SolveConfig",
    "SolveResult",
    "PenaltyConfig",
    "EnergyBreakdown",
    "LagrangeEstimate",
    "total_energy",
    "penalized_energy",
    "minimize",
    "lagrange_multiplier",
    "calibrate_penalty",
    "write_trace",
]

UNIT_VOLUME = math.pi
_STALL = 10


class StarShapeError(RuntimeError):
    """The iterate stopped being a (non-degenerate) star-shaped set."""


@dataclass(frozen=True)
class SolveConfig:
    """Configuration of one minimization.

    Attributes
    ----------
    s : float
        Fractional order.
    m : float
        Target volume of the physical set.
    potential : Potential
    mode : {"projected", "penalized"}
    mu : float
        Penalty weight (penalized mode).
    K : int
        Angular resolution.
    tau0 : float
        Initial step size.
    backtrack : float
        Step reduction factor on rejection.
    tol : float
        Relative energy decrease below which a step counts as stalled; the
        run stops after 10 consecutive stalled steps.
    max_iter : int
    window : float
        Rescaled sets must stay in the ball of this radius about the frame origin.
    n_starts : int
        Number of starts: the ball plus ``n_starts - 1`` seeded perturbations.
    seed : int
    perturbation : float
        Amplitude of the seeded starting perturbations (modes 2 to 5).
    start : tuple or None
        Physical point where the frame is anchored initially (origin by default).
    """

    s: float = 0.5
    m: float = math.pi
    potential: Potential = field(default_factory=Potential)
    mode: str = "projected"
    mu: float = 0.0
    K: int = 256
    tau0: float = 0.2
    backtrack: float = 0.5
    tol: float = 1e-10
    max_iter: int = 400
    window: float = 3.0
    n_starts: int = 4
    seed: int = 0
    perturbation: float = 0.05
    start: tuple | None = None

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        if not self.m > 0:
            raise ValueError("volume m must be positive")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.mode not in ("projected", "penalized"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.K < 16:
            raise ValueError("K must be >= 16")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.m / UNIT_VOLUME)


@dataclass(frozen=True)
class EnergyBreakdown:
    perimeter: float
    potential: float
    penalty: float = 0.0
    perimeter_error: float = 0.0

    @property
    def total(self) -> float:
        return self.perimeter + self.potential + self.penalty


@dataclass
class SolveResult:
    """Outcome of :func:`minimize`.

    ``shape`` is the rescaled set in the frame anchored at ``x_ref``; the
    physical set is ``sigma * shape + x_ref`` (see :attr:`physical_shape`).
    """

    config: SolveConfig
    shape: RadialShape
    x_ref: np.ndarray
    energy: EnergyBreakdown
    lambda_tilde: float
    el_residual: float
    iterations: int
    converged: bool
    trace: list = field(repr=False, default_factory=list)
    start_energies: tuple = ()
    starts_disagree: bool = False
    x_m: np.ndarray | None = None

    @property
    def sigma(self) -> float:
        return self.config.sigma

    @property
    def rescale_map(self) -> RescaleMap:
        return RescaleMap(self.config.m, tuple(self.x_ref), 2)

    @property
    def physical_shape(self) -> RadialShape:
        return descale(self.shape, self.rescale_map)

    @property
    def lambda_m(self) -> float:
        return self.sigma ** (-self.config.s) * self.lambda_tilde

    @property
    def physical_energy(self) -> float:
        return self.sigma ** (2 - self.config.s) * (self.energy.perimeter + self.energy.potential)

    @property
    def volume_deviation(self) -> float:
        return abs(self.shape.volume - UNIT_VOLUME) / UNIT_VOLUME

    @property
    def rescaled_about_xm(self) -> RadialShape:
        """The set ``(E_m - x_m) / sigma`` with ``x_m`` the optimal Fraenkel center."""
        return rescale_to_unit(self.physical_shape, RescaleMap(self.config.m, tuple(self.x_m), 2), rtol=1e-3)


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


def total_energy(E: Shape, g, s: float, q: QuadratureSpec | None = None) -> EnergyBreakdown:
    """``P_s(E)`` and ``int_E g`` reported separately."""
    q = QuadratureSpec(s) if q is None else q
    P = fractional_perimeter(E, q)
    return EnergyBreakdown(float(P.value), integrate_over(E, g), 0.0, float(P.error))


def _check_window(F: Shape, window: float) -> None:
    if isinstance(F, RadialShape):
        reach = float(np.max(np.linalg.norm(F.boundary, axis=1)))
    elif isinstance(F, GridSet):
        reach = float(np.max(np.linalg.norm(F.occupied_centers(), axis=1))) + F.h * math.sqrt(F.dim)
    else:
        reach = max(abs(a) for pair in F.pairs for a in pair)
    if reach > window:
        raise ValueError(f"set escapes the window B_{window:g}")


def penalized_energy(F: Shape, g_m, s: float, mu: float, window: float = 3.0) -> EnergyBreakdown:
    """``P_s(F) + int_F g_m + mu | |F| - |B_1| |`` for ``F`` inside ``B_window``."""
    _check_window(F, window)
    base = total_energy(F, g_m, s)
    unit = UNIT_VOLUME if F.dim == 2 else 2.0
    return replace(base, penalty=mu * abs(volume(F) - unit))


# ---------------------------------------------------------------------------
# the flow
# ---------------------------------------------------------------------------


class _Problem:
    """Energy and gradients of a radial profile in a fixed frame."""

    def __init__(self, cfg: SolveConfig, x_ref):
        self.cfg = cfg
        self.s = cfg.s
        self.set_frame(x_ref)
        k = np.fft.rfftfreq(cfg.K, 1.0 / cfg.K)
        self.precond = 1.0 / (1.0 + k ** (1 + cfg.s))
        self.dtheta = 2 * np.pi / cfg.K

    def set_frame(self, x_ref):
        self.x_ref = np.asarray(x_ref, dtype=float)
        self.g = RescaledPotential(self.cfg.potential, RescaleMap(self.cfg.m, tuple(self.x_ref), 2), self.cfg.s)

    def apply_precond(self, f):
        return np.fft.irfft(np.fft.rfft(f) * self.precond, self.cfg.K)

    def potential(self, F: RadialShape) -> float:
        return integrate_over(F, self.g)

    def penalty(self, F: RadialShape) -> float:
        if self.cfg.mode != "penalized":
            return 0.0
        return self.cfg.mu * abs(F.volume - UNIT_VOLUME)

    def energy(self, F: RadialShape) -> EnergyBreakdown:
        return EnergyBreakdown(_radial_perimeter_value(F, self.s), self.potential(F), self.penalty(F))

    def curvature(self, F: RadialShape) -> np.ndarray:
        return _radial_curvature(F, self.s)

    def potential_gradient(self, F: RadialShape) -> np.ndarray:
        return np.array([integrate_over(F, lambda p, i=i: self.g.gradient(p)[..., i]) for i in range(2)])


def _check_star(F: RadialShape) -> None:
    r = F.radii
    if not np.all(np.isfinite(r)) or r.min() <= 0.05 * r.mean():
        raise StarShapeError("profile degenerated (radius collapsed toward the star center)")


def _maybe_recenter(F: RadialShape) -> RadialShape:
    b = F.barycenter()
    if np.linalg.norm(b - F.center) > 0.1 * F.radii.mean():
        try:
            return F.recentered(b)
        except ValueError as exc:
            raise StarShapeError("barycenter is no longer a star center") from exc
    return F


def _scale_to_volume(F: RadialShape) -> RadialShape:
    return F.scaled(math.sqrt(UNIT_VOLUME / F.volume))


def _penalized_scaling(prob: _Problem, F: RadialShape, window: float) -> RadialShape:
    """Best uniform dilation ``t F`` (about the star center) for the penalized energy."""
    s, mu = prob.s, prob.cfg.mu
    P, V = _radial_perimeter_value(F, s), F.volume
    t_star = math.sqrt(UNIT_VOLUME / V)
    reach = float(np.max(np.linalg.norm(F.boundary, axis=1))) / 1.0
    t_hi = max(t_star, 1.0) * 2.0
    if reach > 0:
        t_hi = min(t_hi, window / reach * 0.999)
    t_lo = 1e-2 * t_star

    def J(t):
        G = F.scaled(t)
        return t ** (2 - s) * P + prob.potential(G) + mu * abs(t * t * V - UNIT_VOLUME)

    cands = [(J(1.0), 1.0)]
    if t_lo < t_star <= t_hi:
        cands.append((J(t_star), t_star))
    for a, b in ((t_lo, min(t_star, t_hi)), (max(t_star, t_lo), t_hi)):
        if b > a:
            r = minimize_scalar(J, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
            cands.append((float(r.fun), float(r.x)))
    best = min(cands)
    return F.scaled(best[1])


def _center_step(prob: _Problem, F: RadialShape, E0: float) -> tuple:
    """Newton step on the star center for the potential term, with backtracking."""
    grad = prob.potential_gradient(F)
    if not np.all(np.isfinite(grad)) or np.linalg.norm(grad) < 1e-15:
        return F, E0
    d = 1e-4
    Hm = np.empty((2, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = d
        Hm[:, i] = (prob.potential_gradient(F.translated(e)) - prob.potential_gradient(F.translated(-e))) / (2 * d)
    Hm = 0.5 * (Hm + Hm.T)
    try:
        ok = np.linalg.eigvalsh(Hm).min() > 0
    except np.linalg.LinAlgError:
        ok = False
    step = -np.linalg.solve(Hm, grad) if ok else -grad
    base_pot = prob.potential(F)
    for _ in range(30):
        G = F.translated(step)
        pot = prob.potential(G)
        if pot < base_pot - 1e-4 * abs(float(grad @ step)):
            return G, E0 - base_pot + pot
        step = 0.5 * step
    return F, E0


def _reanchor(prob: _Problem, F: RadialShape) -> RadialShape:
    """Move the frame origin onto the star center (energies are unchanged)."""
    c = F.center
    if np.linalg.norm(c) <= 0.5:
        return F
    prob.set_frame(prob.x_ref + prob.cfg.sigma * c)
    return RadialShape((0.0, 0.0), F.radii)


def _initial_shapes(cfg: SolveConfig) -> list:
    th = 2 * np.pi * np.arange(cfg.K) / cfg.K
    shapes = [RadialShape.ball(1.0, K=cfg.K)]
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.n_starts - 1):
        a = rng.normal(size=4)
        a *= cfg.perturbation / np.linalg.norm(a)
        phi = rng.uniform(0, 2 * np.pi, size=4)
        rho = 1 + sum(a[i] * np.cos((i + 2) * th + phi[i]) for i in range(4))
        shapes.append(_scale_to_volume(RadialShape((0.0, 0.0), rho)))
    return shapes


def _run(cfg: SolveConfig, F: RadialShape) -> tuple:
    x0 = np.zeros(2) if cfg.start is None else np.asarray(cfg.start, dtype=float)
    prob = _Problem(cfg, x0)
    w = prob.dtheta
    E = prob.energy(F).total
    F, E = _center_step(prob, F, E)
    F = _reanchor(prob, F)
    tau = cfg.tau0
    stalled = 0
    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        H = prob.curvature(F)
        gb = prob.g(F.boundary)
        rho = F.radii
        v = H + gb
        prho = prob.apply_precond(rho)
        lam = float(np.dot(v * rho, prho) / np.dot(rho, prho))
        if cfg.mode == "projected":
            grad = (v - lam) * rho
        else:
            dv = F.volume - UNIT_VOLUME
            if abs(dv) <= 1e-10 * UNIT_VOLUME:
                # on the kink: minimal-norm element of the subdifferential
                grad = (v - min(max(lam, -cfg.mu), cfg.mu)) * rho
            else:
                grad = (v + cfg.mu * math.copysign(1.0, dv)) * rho
            lam = float(np.sum(v * F.speed) / np.sum(F.speed))
        direction = prob.apply_precond(grad)
        slope = float(np.dot(grad, direction)) * w
        resid = float(np.max(np.abs(v - float(np.sum(v * F.speed) / np.sum(F.speed)))))
        accepted = False
        while tau > 1e-14:
            new = rho - tau * direction
            if new.min() > 0:
                G = RadialShape(F.center, new)
                if cfg.mode == "projected":
                    G = _scale_to_volume(G)
                E_new = prob.energy(G).total
                if E_new <= E - 1e-4 * tau * slope and E_new < E:
                    accepted = True
                    break
            tau *= cfg.backtrack
        if not accepted:
            # no descent possible at machine resolution
            converged = True
            trace.append((it, E, F.volume, lam, resid, 0.0))
            break
        step_taken = tau
        tau = min(tau / cfg.backtrack ** 0.5, 50 * cfg.tau0)
        if cfg.mode == "penalized":
            G = _penalized_scaling(prob, G, cfg.window)
            E_new = prob.energy(G).total
        _check_star(G)
        G = _maybe_recenter(G)
        G, E_new = _center_step(prob, G, prob.energy(G).total)
        G = _reanchor(prob, G)
        _check_window(G, cfg.window)
        dec = (E - E_new) / max(abs(E), 1e-300)
        stalled = stalled + 1 if dec < cfg.tol else 0
        F, E = G, E_new
        trace.append((it, E, F.volume, lam, resid, step_taken))
        if stalled >= _STALL:
            converged = True
            break
    return F, prob.x_ref, E, it, converged, trace


def _summarize(cfg: SolveConfig, F: RadialShape, x_ref, it, converged, trace, energies, disagree) -> SolveResult:
    prob = _Problem(cfg, x_ref)
    H = prob.curvature(F)
    v = H + prob.g(F.boundary)
    lam = float(np.sum(v * F.speed) / np.sum(F.speed))
    res = SolveResult(
        config=cfg,
        shape=F,
        x_ref=np.asarray(x_ref, dtype=float),
        energy=prob.energy(F),
        lambda_tilde=lam,
        el_residual=float(np.max(np.abs(v - lam))),
        iterations=it,
        converged=converged,
        trace=trace,
        start_energies=tuple(energies),
        starts_disagree=disagree,
    )
    center = fraenkel_asymmetry(res.physical_shape).center
    res.x_m = np.asarray(center, dtype=float)
    return res


def minimize(cfg: SolveConfig) -> SolveResult:
    """Minimize the energy at volume ``cfg.m``; best of several starts.

    Raises
    ------
    StarShapeError
        When every start loses star-shapedness.
    """
    runs = []
    errors = []
    for F0 in _initial_shapes(cfg):
        try:
            runs.append(_run(cfg, F0))
        except StarShapeError as exc:
            log.warning("start aborted: %s", exc)
            errors.append(exc)
    if not runs:
        raise errors[0]
    energies = [r[2] for r in runs]
    best = min(range(len(runs)), key=lambda i: (energies[i], i))
    F, x_ref, E, it, converged, trace = runs[best]
    # starts that reach a different energy found another critical point
    disagree = any(abs(e - E) > 1e-6 * abs(E) for e in energies) or len(errors) > 0
    if disagree:
        log.info("multi-start energies disagree: %s", energies)
    return _summarize(cfg, F, x_ref, it, converged, trace, energies, disagree)


# ---------------------------------------------------------------------------
# Lagrange multiplier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LagrangeEstimate:
    """Two estimates of ``lambda_m`` for the physical set ``E_m``."""

    flow: float
    identity: float

    @property
    def gap(self) -> float:
        return abs(self.flow - self.identity) / max(abs(self.identity), 1.0)


def lagrange_multiplier(res: SolveResult, g: Potential | None = None, s: float | None = None,
                        m: float | None = None) -> LagrangeEstimate:
    """``lambda_m`` from the boundary mean of ``H_s + g`` and from the dilation identity.

    The identity reads ``N m lambda = (N - s) P_s(E_m) + int x.grad g + N int g``
    over the physical set ``E_m``.
    """
    if not res.converged:
        raise ValueError("non-converged result")
    g = res.config.potential if g is None else g
    s = res.config.s if s is None else s
    m = res.config.m if m is None else m
    N = 2
    E = res.physical_shape
    P = _radial_perimeter_value(E, s)
    dil = integrate_over(E, lambda p: np.sum(g.gradient(p) * p, axis=-1))
    pot = integrate_over(E, g)
    lam_id = ((N - s) * P + dil + N * pot) / (N * m)
    return LagrangeEstimate(res.lambda_m, lam_id)


# ---------------------------------------------------------------------------
# penalty calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PenaltyConfig:
    """Calibrated penalty threshold and the doubling history ``(mu, deviation, energy)``."""

    mu0: float
    history: tuple

    def __post_init__(self):
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")


def calibrate_penalty(cfg: SolveConfig, mu_start: float = 1.0, mu_max: float = 2.0**20,
                      vol_tol: float = 1e-3, energy_rtol: float = 1e-4) -> PenaltyConfig:
    """Double ``mu`` until two consecutive penalized solves agree.

    Agreement means both have volume deviation below ``vol_tol`` and energies
    within ``energy_rtol``; ``mu0`` is the first of the two.
    """
    mu = float(mu_start)
    history = []
    prev = None
    while mu <= mu_max:
        try:
            res = minimize(replace(cfg, mode="penalized", mu=mu))
            dev, e = res.volume_deviation, res.energy.total
        except StarShapeError:
            dev, e = math.inf, math.nan
        history.append((mu, dev, e))
        if prev is not None:
            pmu, pdev, pe = prev
            if pdev < vol_tol and dev < vol_tol and abs(pe - e) <= energy_rtol * abs(e):
                return PenaltyConfig(pmu, tuple(history))
        prev = (mu, dev, e)
        mu *= 2
    raise RuntimeError(f"penalty calibration did not converge up to mu = {mu_max:g}")


def write_trace(res: SolveResult, path) -> None:
    """Iteration trace as CSV: iter, energy, volume, lambda, residual, step."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "energy", "volume", "lambda", "residual", "step"])
        for row in res.trace:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
