"""Coercive, locally Lipschitz potentials and their volume-rescaled forms.

Three closed families with analytic gradients:

* ``power``: ``g(x) = |x - x0|^p``
* ``quadratic_form``: ``g(x) = (x - x0)^T Q (x - x0)`` with ``Q`` positive definite
* ``shifted_power``: ``g(x) = max(|x - x0| - r_min, 0)^p``, vanishing on a ball

The rescaled potential is ``g_m(x) = sigma^s g(sigma x + x_m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .shapes import RescaleMap

__all__ = [
    "Potential",
    "RescaledPotential",
    "eval_potential",
    "potential_gradient",
    "lipschitz_bound",
    "rescaled_potential",
    "operator_norm",
    "potential_from_dict",
    "potential_to_dict",
]

KINDS = ("power", "quadratic_form", "shifted_power")


def operator_norm(Q, iters: int = 200, tol: float = 1e-14) -> float:
    """Spectral norm of a symmetric matrix by power iteration."""
    Q = np.asarray(Q, dtype=float)
    v = np.ones(Q.shape[0]) / math.sqrt(Q.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = Q @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - lam) <= tol * nw:
            return nw
        lam = nw
    return lam


@dataclass(frozen=True, eq=False)
class Potential:
    """A registered potential ``g >= 0`` with ``min g = 0``.

    Parameters
    ----------
    kind : str
        One of ``power``, ``quadratic_form``, ``shifted_power``.
    p : float
        Exponent (``p >= 1``); unused for ``quadratic_form``.
    center : array_like
        The point ``x0`` (a minimizer of ``g``).
    Q : array_like, optional
        Positive definite matrix for ``quadratic_form``.
    r_min : float
        Radius of the zero set for ``shifted_power``.
    """

    kind: str = "power"
    p: float = 2.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    Q: np.ndarray | None = None
    r_min: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        c = np.array(self.center, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if self.kind != "quadratic_form" and not self.p >= 1:
            raise ValueError("exponent p must be >= 1")
        if self.kind == "quadratic_form":
            if self.Q is None:
                raise ValueError("quadratic_form needs Q")
            Q = np.array(self.Q, dtype=float)
            if Q.shape != (c.size, c.size) or not np.allclose(Q, Q.T):
                raise ValueError("Q must be symmetric and match the dimension")
            if np.linalg.eigvalsh(Q).min() <= 0:
                raise ValueError("Q must be positive definite")
            Q.setflags(write=False)
            object.__setattr__(self, "Q", Q)
        if self.kind == "shifted_power" and self.r_min < 0:
            raise ValueError("r_min must be non-negative")

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def is_radial(self) -> bool:
        """Radially symmetric and non-decreasing in ``|x - x0|``."""
        if self.kind != "quadratic_form":
            return True
        ev = np.linalg.eigvalsh(self.Q)
        return bool(np.isclose(ev.min(), ev.max()))

    def _offset(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        return x - self.center

    def __call__(self, x) -> np.ndarray:
        d = self._offset(x)
        if self.kind == "quadratic_form":
            return np.einsum("...i,ij,...j->...", d, self.Q, d)
        r = np.sqrt(np.sum(d * d, axis=-1))
        if self.kind == "shifted_power":
            r = np.maximum(r - self.r_min, 0.0)
        return r**self.p

    def gradient(self, x) -> np.ndarray:
        d = self._offset(x)
        if self.kind == "quadratic_form":
            return 2.0 * d @ self.Q
        r = np.sqrt(np.sum(d * d, axis=-1))
        rr = np.maximum(r - self.r_min, 0.0) if self.kind == "shifted_power" else r
        safe = np.where(r > 0, r, 1.0)
        coef = np.where(rr > 0, self.p * rr ** (self.p - 1) / safe, 0.0)
        return coef[..., None] * d

    def distance_to_zero_set(self, x) -> np.ndarray:
        d = self._offset(x)
        r = np.sqrt(np.sum(d * d, axis=-1))
        if self.kind == "shifted_power":
            return np.maximum(r - self.r_min, 0.0)
        return r

    def lipschitz_bound(self, R: float) -> float:
        """Lipschitz constant of ``g`` on the ball ``B_R(0)``."""
        if not R > 0:
            raise ValueError("R must be positive")
        reach = R + float(np.linalg.norm(self.center))
        if self.kind == "quadratic_form":
            return 2.0 * operator_norm(self.Q) * reach
        if self.kind == "shifted_power":
            reach = max(reach - self.r_min, 0.0)
        if self.p == 1:
            return 1.0
        return self.p * reach ** (self.p - 1)


@dataclass(frozen=True, eq=False)
class RescaledPotential:
    """``g_m(x) = sigma^s g(sigma x + x_m)`` for a rescale map and order ``s``."""

    base: Potential
    map: RescaleMap
    s: float

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def factor(self) -> float:
        return self.map.sigma**self.s

    def __call__(self, x) -> np.ndarray:
        return self.factor * self.base(self.map.inverse(x))

    def gradient(self, x) -> np.ndarray:
        return self.factor * self.map.sigma * self.base.gradient(self.map.inverse(x))

    def lipschitz_bound(self, R: float) -> float:
        reach = self.map.sigma * R + float(np.linalg.norm(self.map.center))
        return self.factor * self.map.sigma * self.base.lipschitz_bound(reach)

    @property
    def is_radial(self) -> bool:
        return self.base.is_radial


def eval_potential(g, x) -> np.ndarray:
    return g(x)


def potential_gradient(g, x) -> np.ndarray:
    return g.gradient(x)


def lipschitz_bound(g, R: float) -> float:
    return g.lipschitz_bound(R)


def rescaled_potential(g: Potential, rmap: RescaleMap, s: float) -> RescaledPotential:
    return RescaledPotential(g, rmap, float(s))


def coercivity_probe(g: Potential, radius: float = 1e3, n_rays: int = 64) -> bool:
    """Check ``g`` grows without bound along a fan of rays out to ``radius``."""
    if g.dim == 1:
        dirs = np.array([[-1.0], [1.0]])
    else:
        a = 2 * np.pi * np.arange(n_rays) / n_rays
        dirs = np.stack([np.cos(a), np.sin(a)], axis=1)
    rs = np.geomspace(1.0, radius, 16)
    vals = g(rs[:, None, None] * dirs[None, :, :])
    return bool(np.all(np.diff(vals[-4:], axis=0) > 0) and vals[-1].min() > vals[0].max())


def potential_from_dict(data: dict) -> Potential:
    """Build a potential from ``{"kind": ..., "p": ..., "center": [...], ...}``."""
    data = dict(data.get("potential", data))
    kind = data.pop("kind", "power")
    center = data.pop("center", [0.0, 0.0])
    Q = data.pop("Q", None)
    p = float(data.pop("p", 2.0))
    r_min = float(data.pop("r_min", 0.0))
    if data:
        raise ValueError(f"unknown potential keys {sorted(data)}")
    return Potential(kind=kind, p=p, center=np.asarray(center, dtype=float), Q=Q, r_min=r_min)


def potential_to_dict(g: Potential) -> dict:
    out = {"kind": g.kind, "p": g.p, "center": g.center.tolist()}
    if g.Q is not None:
        out["Q"] = g.Q.tolist()
    if g.kind == "shifted_power":
        out["r_min"] = g.r_min
    return out
