"""Set representations and geometric measurements.

Three carriers are supported:

* :class:`RadialShape` -- a star-shaped planar set ``{c + r e(theta) : r < rho(theta)}``
  sampled at ``K`` uniform angles; the profile is the trigonometric
  interpolant of the samples.
* :class:`GridSet` -- an occupancy mask on a uniform lattice (N = 1 or 2).
* :class:`IntervalUnion` -- a finite union of disjoint open intervals (N = 1).

All values are immutable; every function in this module is pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np
from scipy.spatial import ConvexHull

__all__ = [
    "RadialShape",
    "GridSet",
    "IntervalUnion",
    "RescaleMap",
    "SandwichResult",
    "Shape",
    "unit_ball_volume",
    "volume",
    "rescale_to_unit",
    "descale",
    "ball_sandwich_radii",
    "convexity_defect",
    "symmetric_difference_volume",
    "hausdorff_distance",
    "rasterize",
    "shape_to_dict",
    "shape_from_dict",
    "load_shape",
    "save_shape",
]

DEFAULT_K = 512
_FINE_SAMPLES = 8192


def unit_ball_volume(dim: int) -> float:
    """Lebesgue measure of the unit ball in dimension 1 or 2."""
    if dim == 1:
        return 2.0
    if dim == 2:
        return math.pi
    raise ValueError(f"unsupported dimension {dim}")


def _readonly(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _wavenumbers(K: int) -> np.ndarray:
    return np.fft.fftfreq(K, 1.0 / K)


def _upsampling_coefficients(samples: np.ndarray) -> np.ndarray:
    # Nyquist mode is split evenly between +K/2 and -K/2 before zero padding.
    c = np.fft.rfft(samples)
    if samples.size % 2 == 0:
        c[-1] *= 0.5
    return c


@dataclass(frozen=True, eq=False)
class RadialShape:
    """Star-shaped planar set given by radii sampled at uniform angles.

    Parameters
    ----------
    center : array_like, shape (2,)
        Star center.
    radii : array_like, shape (K,)
        Strictly positive samples ``rho_k`` at ``theta_k = 2 pi k / K``.
    """

    center: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        center = _readonly(self.center)
        radii = _readonly(self.radii)
        if center.shape != (2,) or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite point in R^2")
        if radii.ndim != 1 or radii.size < 16:
            raise ValueError("need at least 16 radial samples")
        if not np.all(np.isfinite(radii)) or np.any(radii <= 0):
            raise ValueError("radii must be finite and strictly positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radii", radii)

    dim = 2

    # constructors -----------------------------------------------------

    @classmethod
    def ball(cls, radius=1.0, center=(0.0, 0.0), K=DEFAULT_K) -> "RadialShape":
        return cls(center, np.full(K, float(radius)))

    @classmethod
    def from_function(cls, func, center=(0.0, 0.0), K=DEFAULT_K) -> "RadialShape":
        """Sample ``func(theta)`` at ``K`` uniform angles."""
        theta = 2 * np.pi * np.arange(K) / K
        return cls(center, func(theta))

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0), K=DEFAULT_K) -> "RadialShape":
        """Axis-aligned ellipse with semi-axes ``a`` (x) and ``b`` (y)."""
        return cls.from_function(
            lambda t: a * b / np.sqrt(b**2 * np.cos(t) ** 2 + a**2 * np.sin(t) ** 2),
            center,
            K,
        )

    # geometry ---------------------------------------------------------

    @property
    def K(self) -> int:
        return self.radii.size

    @cached_property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.K) / self.K

    @cached_property
    def _derivatives(self):
        K = self.K
        k = _wavenumbers(K)
        c = np.fft.fft(self.radii)
        k1 = k.copy()
        if K % 2 == 0:
            k1[K // 2] = 0.0
        d1 = np.fft.ifft(1j * k1 * c).real
        d2 = np.fft.ifft(-(k**2) * c).real
        return d1, d2

    @cached_property
    def boundary(self) -> np.ndarray:
        """Boundary points, shape (K, 2)."""
        ct, st = np.cos(self.theta), np.sin(self.theta)
        return self.center + np.stack([self.radii * ct, self.radii * st], axis=1)

    @cached_property
    def tangent(self) -> np.ndarray:
        """d(gamma)/d(theta) at the samples (counter-clockwise)."""
        d1, _ = self._derivatives
        rho = self.radii
        ct, st = np.cos(self.theta), np.sin(self.theta)
        return np.stack([d1 * ct - rho * st, d1 * st + rho * ct], axis=1)

    @cached_property
    def second_derivative(self) -> np.ndarray:
        d1, d2 = self._derivatives
        rho = self.radii
        ct, st = np.cos(self.theta), np.sin(self.theta)
        return np.stack(
            [(d2 - rho) * ct - 2 * d1 * st, (d2 - rho) * st + 2 * d1 * ct], axis=1
        )

    @cached_property
    def speed(self) -> np.ndarray:
        """|gamma'(theta)|, the arc-length density."""
        t = self.tangent
        return np.hypot(t[:, 0], t[:, 1])

    @cached_property
    def normal(self) -> np.ndarray:
        """Outward unit normals at the samples."""
        t = self.tangent
        return np.stack([t[:, 1], -t[:, 0]], axis=1) / self.speed[:, None]

    @property
    def volume(self) -> float:
        return 0.5 * float(np.sum(self.radii**2)) * (2 * np.pi / self.K)

    @cached_property
    def _fine(self):
        K = self.K
        M = max(_FINE_SAMPLES, K)
        M -= M % K
        c = _upsampling_coefficients(self.radii)
        fine = np.fft.irfft(c, M) * (M / K)
        ang = 2 * np.pi * np.arange(M + 1) / M
        return ang, np.append(fine, fine[0])

    def radius_at(self, angles) -> np.ndarray:
        """Profile at arbitrary angles (fine trigonometric resampling + linear interpolation)."""
        ang, fine = self._fine
        return np.interp(np.mod(angles, 2 * np.pi), ang, fine)

    @cached_property
    def _series(self):
        K = self.K
        c = np.fft.rfft(self.radii) / K
        w = np.full(c.size, 2.0)
        w[0] = 1.0
        if K % 2 == 0:
            w[-1] = 1.0
        c = w * c
        # drop modes below rounding level
        keep = np.nonzero(np.abs(c) > 1e-17 * np.abs(c).max())[0]
        top = int(keep.max()) + 1
        return np.arange(top), c[:top]

    def radius_exact(self, angles) -> np.ndarray:
        """Profile at arbitrary angles by direct evaluation of the trigonometric interpolant."""
        angles = np.asarray(angles, dtype=float)
        k, c = self._series
        phase = np.exp(1j * np.multiply.outer(angles, k))
        return (phase * c).real.sum(axis=-1)

    def contains(self, points, exact: bool = False) -> np.ndarray:
        """Membership test; ``exact`` evaluates the trigonometric profile directly."""
        p = np.asarray(points, dtype=float) - self.center
        r = np.hypot(p[..., 0], p[..., 1])
        ang = np.arctan2(p[..., 1], p[..., 0])
        return r < (self.radius_exact(ang) if exact else self.radius_at(ang))

    def resampled(self, K: int) -> "RadialShape":
        """Trigonometric resampling to ``K`` nodes (exact for band-limited profiles)."""
        if K == self.K:
            return self
        n = K // 2 + 1
        if K > self.K:
            c = _upsampling_coefficients(self.radii)
        else:
            c = np.fft.rfft(self.radii)[:n].copy()
            if K % 2 == 0:
                c[-1] = c[-1].real
        return RadialShape(self.center, np.fft.irfft(c, K) * (K / self.K))

    def translated(self, shift) -> "RadialShape":
        return RadialShape(self.center + np.asarray(shift, dtype=float), self.radii)

    def scaled(self, factor: float) -> "RadialShape":
        """Dilation about the star center."""
        return RadialShape(self.center, self.radii * factor)

    def bounding_radius(self) -> float:
        return float(self.radii.max()) * 1.0001 + 1e-12

    def barycenter(self) -> np.ndarray:
        # (1/3) \oint rho^3 e(theta) dtheta / area
        w = self.radii**3 / 3.0
        mx = np.sum(w * np.cos(self.theta))
        my = np.sum(w * np.sin(self.theta))
        area = 0.5 * np.sum(self.radii**2)
        return self.center + np.array([mx, my]) / area

    def polar_about(self, point, K=None) -> np.ndarray:
        """Radial function of the set about ``point``.

        Raises ``ValueError("not star center")`` when ``point`` is outside the
        set or some ray from it crosses the boundary more than once.
        """
        K = self.K if K is None else K
        point = np.asarray(point, dtype=float)
        offset = point - self.center
        if np.allclose(offset, 0.0, rtol=0, atol=1e-14) and K == self.K:
            return np.array(self.radii)
        if not self.contains(point[None, :])[0]:
            raise ValueError("not star center")
        alpha = 2 * np.pi * np.arange(K) / K
        e = np.stack([np.cos(alpha), np.sin(alpha)], axis=1)
        rmax = np.linalg.norm(offset) + self.radii.max() * 1.01 + 1e-12

        def gap(r):
            q = offset + r[:, None] * e
            return np.hypot(q[:, 0], q[:, 1]) - self.radius_at(np.arctan2(q[:, 1], q[:, 0]))

        n_coarse = 64
        rs = np.linspace(0.0, rmax, n_coarse)
        vals = np.stack([gap(np.full(K, r)) for r in rs], axis=1)
        sign = vals > 0
        crossings = np.sum(sign[:, 1:] != sign[:, :-1], axis=1)
        if np.any(crossings != 1):
            raise ValueError("not star center")
        j = np.argmax(sign, axis=1)
        lo = rs[j - 1].copy()
        hi = rs[j].copy()
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            out = gap(mid) > 0
            hi = np.where(out, mid, hi)
            lo = np.where(out, lo, mid)
        return 0.5 * (lo + hi)

    def recentered(self, point, K=None) -> "RadialShape":
        """Re-parametrize the same set about a new star center."""
        return RadialShape(point, self.polar_about(point, K))


@dataclass(frozen=True, eq=False)
class GridSet:
    """Occupancy mask on a uniform lattice.

    Cell ``i`` covers ``[origin + i h, origin + (i + 1) h]`` along each axis.
    """

    origin: np.ndarray
    h: float
    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=bool)
        origin = _readonly(np.atleast_1d(self.origin))
        if occ.ndim not in (1, 2):
            raise ValueError("occupancy must be 1D or 2D")
        if origin.shape != (occ.ndim,):
            raise ValueError("origin dimension does not match occupancy")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError("spacing h must be positive")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "h", float(self.h))

    @property
    def dim(self) -> int:
        return self.occupancy.ndim

    @property
    def count(self) -> int:
        return int(self.occupancy.sum())

    @property
    def volume(self) -> float:
        n = self.count
        if n == 0:
            raise ValueError("empty set")
        return self.h**self.dim * n

    @property
    def shape(self):
        return self.occupancy.shape

    def cell_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.h * (np.arange(self.occupancy.shape[axis]) + 0.5)

    def occupied_centers(self) -> np.ndarray:
        idx = np.argwhere(self.occupancy)
        return self.origin + self.h * (idx + 0.5)

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.dim == 1 and p.ndim >= 1 and p.shape[-1] != 1:
            p = p[..., None]
        idx = np.floor((p - self.origin) / self.h).astype(np.int64)
        shape = np.array(self.occupancy.shape)
        ok = np.all((idx >= 0) & (idx < shape), axis=-1)
        idx = np.where(ok[..., None], idx, 0)
        return ok & self.occupancy[tuple(np.moveaxis(idx, -1, 0))]

    def barycenter(self) -> np.ndarray:
        return self.occupied_centers().mean(axis=0)

    def bounding_radius(self) -> float:
        c = self.occupied_centers()
        mid = 0.5 * (c.min(axis=0) + c.max(axis=0))
        return float(np.max(np.linalg.norm(c - mid, axis=1))) + self.h * math.sqrt(self.dim)

    def diameter_bound(self) -> float:
        """Upper bound for the diameter of the occupied region."""
        c = self.occupied_centers()
        ext = c.max(axis=0) - c.min(axis=0) + self.h
        return float(np.linalg.norm(ext))

    def translated(self, shift) -> "GridSet":
        return GridSet(self.origin + np.asarray(shift, dtype=float), self.h, self.occupancy)

    @classmethod
    def from_shape(cls, shape, h, window=None) -> "GridSet":
        """Rasterize ``shape`` (cell occupied iff its center is inside)."""
        return rasterize(shape, h, window)


@dataclass(frozen=True, eq=False)
class IntervalUnion:
    """Finite union of pairwise disjoint open intervals, sorted."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple(sorted((float(a), float(b)) for a, b in self.pairs))
        for a, b in pairs:
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise ValueError(f"invalid interval ({a}, {b})")
        for (a0, b0), (a1, b1) in zip(pairs, pairs[1:]):
            if a1 < b0:
                raise ValueError("overlapping intervals")
        object.__setattr__(self, "pairs", pairs)

    dim = 1

    @property
    def volume(self) -> float:
        if not self.pairs:
            raise ValueError("empty set")
        return math.fsum(b - a for a, b in self.pairs)

    def endpoints(self):
        """Boundary points with outward normals (-1 at left ends, +1 at right ends)."""
        pts, nrm = [], []
        for a, b in self.pairs:
            pts += [a, b]
            nrm += [-1.0, 1.0]
        return np.array(pts), np.array(nrm)

    def contains(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.ndim >= 1 and x.shape[-1] == 1:
            x = x[..., 0]
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.pairs:
            out |= (x > a) & (x < b)
        return out

    def barycenter(self) -> np.ndarray:
        m = self.volume
        return np.array([math.fsum((b * b - a * a) / 2 for a, b in self.pairs) / m])

    def translated(self, shift) -> "IntervalUnion":
        t = float(np.ravel(shift)[0])
        return IntervalUnion(tuple((a + t, b + t) for a, b in self.pairs))

    def affine(self, scale: float, shift: float) -> "IntervalUnion":
        return IntervalUnion(tuple((scale * a + shift, scale * b + shift) for a, b in self.pairs))


Shape = Union[RadialShape, GridSet, IntervalUnion]


@dataclass(frozen=True)
class RescaleMap:
    """Pair (sigma(m), x_m) linking a set of volume ``m`` to its unit-volume-ball rescaling."""

    m: float
    x_m: tuple = (0.0, 0.0)
    dim: int = 2

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("volume m must be positive")
        x = tuple(float(v) for v in np.atleast_1d(self.x_m))
        if len(x) != self.dim:
            raise ValueError("x_m dimension mismatch")
        object.__setattr__(self, "x_m", x)

    @property
    def sigma(self) -> float:
        return (self.m / unit_ball_volume(self.dim)) ** (1.0 / self.dim)

    @property
    def center(self) -> np.ndarray:
        return np.array(self.x_m)

    def forward(self, x):
        """Rescaled coordinates of physical points: (x - x_m) / sigma."""
        return (np.asarray(x, dtype=float) - self.center) / self.sigma

    def inverse(self, y):
        return self.sigma * np.asarray(y, dtype=float) + self.center


@dataclass(frozen=True)
class SandwichResult:
    r_inner: float
    r_outer: float

    @property
    def r0(self) -> float:
        return max(1.0 - self.r_inner, self.r_outer - 1.0)


def volume(shape: Shape) -> float:
    """Lebesgue measure of ``shape``."""
    v = shape.volume
    if not v > 0:
        raise ValueError("empty set")
    return v


def _affine(shape: Shape, scale: float, shift: np.ndarray) -> Shape:
    if isinstance(shape, RadialShape):
        return RadialShape(scale * shape.center + shift, scale * shape.radii)
    if isinstance(shape, GridSet):
        return GridSet(scale * shape.origin + shift, scale * shape.h, shape.occupancy)
    if isinstance(shape, IntervalUnion):
        return shape.affine(scale, float(shift[0]))
    raise TypeError(f"unsupported shape {type(shape).__name__}")


def rescale_to_unit(shape: Shape, rmap: RescaleMap, rtol: float = 1e-6) -> Shape:
    """Map ``E`` to ``(E - x_m) / sigma(m)``; the result has the unit ball's volume."""
    if shape.dim != rmap.dim:
        raise ValueError("dimension mismatch between shape and rescale map")
    v = volume(shape)
    if abs(v - rmap.m) > rtol * rmap.m:
        raise ValueError(f"volume mismatch: |E| = {v!r}, m = {rmap.m!r}")
    sig = rmap.sigma
    return _affine(shape, 1.0 / sig, -rmap.center / sig)


def descale(shape: Shape, rmap: RescaleMap) -> Shape:
    """Inverse of :func:`rescale_to_unit`."""
    return _affine(shape, rmap.sigma, rmap.center)


def ball_sandwich_radii(shape: RadialShape, center=None, K=None) -> SandwichResult:
    """Largest inner and smallest outer radius of balls about ``center``."""
    center = shape.center if center is None else np.asarray(center, dtype=float)
    rho = shape.polar_about(center, K)
    return SandwichResult(float(rho.min()), float(rho.max()))


def _shoelace(p: np.ndarray) -> float:
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def convexity_defect(shape: RadialShape) -> float:
    """Relative area gap between the boundary polygon and its convex hull."""
    p = shape.boundary - shape.center
    area = _shoelace(p)
    hull = ConvexHull(p).volume
    return max(0.0, (hull - area) / area)


def _raster_window(shapes, h):
    lo, hi = [], []
    for sh in shapes:
        if isinstance(sh, RadialShape):
            r = sh.bounding_radius()
            lo.append(sh.center - r)
            hi.append(sh.center + r)
        elif isinstance(sh, GridSet):
            lo.append(sh.origin)
            hi.append(sh.origin + sh.h * np.array(sh.shape))
        else:
            lo.append(np.array([sh.pairs[0][0]]))
            hi.append(np.array([sh.pairs[-1][1]]))
    return np.min(lo, axis=0), np.max(hi, axis=0)


def rasterize(shape: Shape, h: float, window=None) -> GridSet:
    """Cell-center rasterization onto a lattice of spacing ``h``.

    ``window`` is ``(lo, hi)``; the lattice origin is snapped to a multiple of ``h``.
    """
    if isinstance(shape, GridSet) and window is None:
        return shape
    lo, hi = _raster_window([shape], h) if window is None else map(np.asarray, window)
    lo = np.floor(np.asarray(lo, dtype=float) / h) * h
    n = np.ceil((np.asarray(hi, dtype=float) - lo) / h).astype(int) + 1
    axes = [lo[i] + h * (np.arange(n[i]) + 0.5) for i in range(lo.size)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    occ = shape.contains(pts)
    return GridSet(lo, h, occ)


def _interval_measure(pairs) -> float:
    return math.fsum(b - a for a, b in pairs)


def _interval_intersection(A, B):
    out = []
    i = j = 0
    while i < len(A) and j < len(B):
        lo = max(A[i][0], B[j][0])
        hi = min(A[i][1], B[j][1])
        if lo < hi:
            out.append((lo, hi))
        if A[i][1] < B[j][1]:
            i += 1
        else:
            j += 1
    return out


def symmetric_difference_volume(A: Shape, B: Shape, h=None) -> float:
    """|A symmetric-difference B|.

    Exact for two interval unions; polar (angular trapezoid) for two radial
    shapes sharing a star center; otherwise both sets are rasterized onto the
    finer of the input lattices (cell occupied iff its center is inside).
    """
    if A.dim != B.dim:
        raise ValueError("incompatible windows: dimension mismatch")
    if isinstance(A, IntervalUnion) and isinstance(B, IntervalUnion):
        inter = _interval_measure(_interval_intersection(A.pairs, B.pairs))
        return max(0.0, A.volume + B.volume - 2 * inter)
    if isinstance(A, RadialShape) and isinstance(B, RadialShape):
        K = max(A.K, B.K, 1024)
        try:
            ra = A.polar_about(A.center, K) if K != A.K else np.array(A.radii)
            rb = B.polar_about(A.center, K)
        except ValueError:
            pass
        else:
            return 0.5 * float(np.sum(np.abs(ra**2 - rb**2))) * (2 * np.pi / K)
    if h is None:
        hs = [s.h for s in (A, B) if isinstance(s, GridSet)]
        if hs:
            h = min(hs)
        else:
            lo, hi = _raster_window([A, B], 1.0)
            h = float(np.max(hi - lo)) / 1024
    window = _raster_window([A, B], h)
    ga, gb = rasterize(A, h, window), rasterize(B, h, window)
    if ga.shape != gb.shape:
        raise ValueError("incompatible windows")
    return float(np.count_nonzero(ga.occupancy ^ gb.occupancy)) * h**A.dim


def hausdorff_distance(A: RadialShape, B: RadialShape) -> float:
    """Hausdorff distance between the boundaries (dense trigonometric resampling)."""
    from scipy.spatial import cKDTree

    pa = A.resampled(max(A.K, 1024)).boundary
    pb = B.resampled(max(B.K, 1024)).boundary
    da, _ = cKDTree(pb).query(pa)
    db, _ = cKDTree(pa).query(pb)
    return float(max(da.max(), db.max()))


# persistence ----------------------------------------------------------------


def shape_to_dict(shape: Shape) -> dict:
    if isinstance(shape, RadialShape):
        return {
            "kind": "radial",
            "center": [float(v) for v in shape.center],
            "radii": [float(v) for v in shape.radii],
        }
    if isinstance(shape, GridSet):
        occ = shape.occupancy
        rows = ["".join("1" if v else "0" for v in row) for row in np.atleast_2d(occ)]
        return {
            "kind": "grid",
            "origin": [float(v) for v in shape.origin],
            "h": shape.h,
            "rows": rows,
        }
    if isinstance(shape, IntervalUnion):
        return {"kind": "intervals", "pairs": [[a, b] for a, b in shape.pairs]}
    raise TypeError(f"unsupported shape {type(shape).__name__}")


def shape_from_dict(data: dict) -> Shape:
    kind = data.get("kind")
    if kind == "radial":
        return RadialShape(data["center"], data["radii"])
    if kind == "grid":
        occ = np.array([[c == "1" for c in row] for row in data["rows"]], dtype=bool)
        origin = np.atleast_1d(np.asarray(data["origin"], dtype=float))
        if origin.size == 1:
            occ = occ.reshape(-1)
        return GridSet(origin, float(data["h"]), occ)
    if kind == "intervals":
        return IntervalUnion(tuple(tuple(p) for p in data["pairs"]))
    raise ValueError(f"unknown shape kind {kind!r}")


def load_shape(path) -> Shape:
    return shape_from_dict(json.loads(Path(path).read_text()))


def save_shape(shape: Shape, path) -> None:
    Path(path).write_text(json.dumps(shape_to_dict(shape), indent=1) + "\n")


# quadrature over sets -------------------------------------------------------


def integrate_over(shape: Shape, func, n_radial: int = 24, sub: int = 2) -> float:
    """``int_E func(x) dx`` for a vectorized integrand ``func`` (points on the last axis).

    Radial shapes: Gauss-Legendre in ``r`` on ``[0, rho(theta)]`` about the
    star center, trapezoid in ``theta``. Grids: ``sub x sub`` midpoint samples
    per occupied cell. Intervals: Gauss-Legendre per interval.
    """
    xg, wg = np.polynomial.legendre.leggauss(n_radial)
    xg, wg = 0.5 * (xg + 1), 0.5 * wg
    if isinstance(shape, RadialShape):
        th = shape.theta
        e = np.stack([np.cos(th), np.sin(th)], axis=1)
        r = shape.radii[:, None] * xg[None, :]
        pts = shape.center + r[..., None] * e[:, None, :]
        vals = func(pts) * r * (shape.radii[:, None] * wg[None, :])
        return math.fsum(vals.ravel()) * (2 * np.pi / shape.K)
    if isinstance(shape, IntervalUnion):
        total = []
        for a, b in shape.pairs:
            x = a + (b - a) * xg
            total.extend((func(x[:, None]) * wg * (b - a)).tolist())
        return math.fsum(total)
    if isinstance(shape, GridSet):
        c = shape.occupied_centers()
        offs = (np.arange(sub) + 0.5) / sub - 0.5
        grid = np.stack(np.meshgrid(*([offs] * shape.dim), indexing="ij"), axis=-1).reshape(-1, shape.dim)
        pts = c[:, None, :] + shape.h * grid[None, :, :]
        vals = func(pts)
        return math.fsum(vals.ravel()) * shape.h**shape.dim / grid.shape[0]
    raise TypeError(f"unsupported shape {type(shape).__name__}")
