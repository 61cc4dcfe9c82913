"""Surface profiles, the quartic spline basis and the graded boundary mesh.

The contour of the bounded region below the perturbed surface and inside the
disc of radius ``R`` is made of two arcs that meet at the corners
``x_A = (-R, 0)`` and ``x_B = (R, 0)``:

* the lower semicircle, traversed from ``x_A`` to ``x_B``;
* the surface piece ``Gamma_R``, traversed from ``x_B`` back to ``x_A``.

Together they form a counter-clockwise closed curve parameterised over
``[0, 2*pi)``, with the corners at ``s = 0`` and ``s = pi``. Each arc is
reparameterised with a polynomial grading substitution so that all
derivatives up to the grading order vanish at the corners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SEMICIRCLE = 0
SURFACE = 1

_SPLINE_BINOM = np.array([math.comb(5, j) for j in range(6)], dtype=float)


class ConfigurationError(ValueError):
    """Inconsistent geometric or numerical configuration."""


# ---------------------------------------------------------------------------
# Quartic spline and the basis built from it
# ---------------------------------------------------------------------------

def quartic_spline(t, deriv=0):
    """Centred quartic B-spline and its first two derivatives.

    Support is ``(-2.5, 2.5)``; outside it the value is exactly zero.
    """
    if deriv not in (0, 1, 2):
        raise ValueError(f"deriv must be 0, 1 or 2, got {deriv}")
    t = np.asarray(t, dtype=float)
    power = 4 - deriv
    scale = math.factorial(4) / math.factorial(power)
    out = np.zeros_like(t)
    for j in range(6):
        z = np.maximum(t + 2.5 - j, 0.0)
        out += (-1) ** j * _SPLINE_BINOM[j] * z ** power
    out *= scale / 24.0
    out[np.abs(t) >= 2.5] = 0.0
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SplineBasis:
    """``M`` translated, scaled quartic splines supported inside ``(-R, R)``.

    Knot spacing ``h = 2R/(M+5)``, centres ``t_i = (i+2)h - R`` for
    ``i = 1..M``.
    """

    M: int
    R: float = 1.0

    def __post_init__(self):
        if self.M < 1:
            raise ConfigurationError("spline basis needs M >= 1")
        if self.R <= 0:
            raise ConfigurationError("support radius must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.M + 5)

    @property
    def centers(self) -> np.ndarray:
        i = np.arange(1, self.M + 1)
        return (i + 2) * self.h - self.R

    def eval(self, i: int, t, deriv: int = 0):
        """Basis function ``i`` (1-based) or its derivative at ``t``."""
        if not 1 <= i <= self.M:
            raise IndexError(f"basis index {i} outside 1..{self.M}")
        c = self.centers[i - 1]
        return quartic_spline((np.asarray(t, dtype=float) - c) / self.h, deriv) / self.h ** deriv

    def matrix(self, t, deriv: int = 0) -> np.ndarray:
        """Collocation matrix, shape ``(len(t), M)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        arg = (t[:, None] - self.centers[None, :]) / self.h
        return quartic_spline(arg, deriv) / self.h ** deriv


def basis_eval(i: int, M: int, R: float, t, deriv: int = 0):
    return SplineBasis(M, R).eval(i, t, deriv)


# ---------------------------------------------------------------------------
# Surface profiles
# ---------------------------------------------------------------------------

class SurfaceProfile:
    """A compactly supported surface height ``x2 = h(x1)``.

    Subclasses implement :meth:`_raw` and set ``support`` to an open interval
    containing the closure of ``{h != 0}``.
    """

    support: tuple[float, float]

    def evaluate(self, x1, deriv: int = 0):
        if deriv not in (0, 1, 2):
            raise ValueError(f"deriv must be 0, 1 or 2, got {deriv}")
        x1 = np.asarray(x1, dtype=float)
        out = np.zeros(x1.shape)
        lo, hi = self.support
        inside = (x1 > lo) & (x1 < hi)
        if np.any(inside):
            out[inside] = self._raw(x1[inside], deriv)
        return out if out.ndim else float(out)

    def _raw(self, x1: np.ndarray, deriv: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def support_radius(self) -> float:
        return max(abs(self.support[0]), abs(self.support[1]))

    def shifted(self, ell: float) -> "SurfaceProfile":
        return ShiftedProfile(self, float(ell))

    def describe(self) -> str:
        return type(self).__name__

    def is_flat(self) -> bool:
        return False


@dataclass(frozen=True)
class FlatProfile(SurfaceProfile):
    support: tuple[float, float] = (0.0, 0.0)

    def _raw(self, x1, deriv):
        return np.zeros_like(x1)

    def describe(self):
        return "flat"

    def is_flat(self):
        return True


@dataclass(frozen=True, eq=False)
class SplineProfile(SurfaceProfile):
    """``h = sum_i a_i phi_{i,M}`` over a :class:`SplineBasis`."""

    basis: SplineBasis
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float).copy()
        if a.shape != (self.basis.M,):
            raise ConfigurationError(f"expected {self.basis.M} coefficients, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ConfigurationError("spline coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "coeffs", a)

    @property
    def support(self):
        b = self.basis
        return (b.centers[0] - 2.5 * b.h, b.centers[-1] + 2.5 * b.h)

    def _raw(self, x1, deriv):
        return self.basis.matrix(x1, deriv) @ self.coeffs

    def describe(self):
        vals = ",".join(repr(float(a)) for a in self.coeffs)
        return f"spline M={self.basis.M} R={self.basis.R!r} coeffs={vals}"

    def is_flat(self):
        return not np.any(self.coeffs)


@dataclass(frozen=True)
class BumpProfile(SurfaceProfile):
    """``height * phi((x1 - center)/width)`` with the quartic spline ``phi``."""

    center: float = -0.2
    width: float = 0.3
    height: float = 1.0

    @property
    def support(self):
        return (self.center - 2.5 * self.width, self.center + 2.5 * self.width)

    def _raw(self, x1, deriv):
        t = (x1 - self.center) / self.width
        return self.height * quartic_spline(t, deriv) / self.width ** deriv

    def describe(self):
        return f"bump center={self.center!r} width={self.width!r} height={self.height!r}"


@dataclass(frozen=True)
class MultiscaleProfile(SurfaceProfile):
    """``exp(16/(25 x^2 - 16)) (0.5 + 0.1 sin(16 pi x))``, optionally times
    ``sin(pi x)``, on ``|x| < 4/5``."""

    odd: bool = False
    support: tuple[float, float] = (-0.8, 0.8)

    def _raw(self, x1, deriv):
        x = x1
        d = 25.0 * x * x - 16.0
        g = 16.0 / d
        g1 = -800.0 * x / d ** 2
        g2 = -800.0 / d ** 2 + 80000.0 * x * x / d ** 3
        e = np.exp(g)
        # e underflows to 0 well before g1, g2 overflow matters
        e1 = np.where(e > 0, g1 * e, 0.0)
        e2 = np.where(e > 0, (g2 + g1 * g1) * e, 0.0)
        w = 16.0 * np.pi
        m0 = 0.5 + 0.1 * np.sin(w * x)
        m1 = 0.1 * w * np.cos(w * x)
        m2 = -0.1 * w * w * np.sin(w * x)
        f = [e * m0, e1 * m0 + e * m1, e2 * m0 + 2.0 * e1 * m1 + e * m2]
        if not self.odd:
            return f[deriv]
        s0 = np.sin(np.pi * x)
        s1 = np.pi * np.cos(np.pi * x)
        s2 = -np.pi ** 2 * s0
        if deriv == 0:
            return f[0] * s0
        if deriv == 1:
            return f[1] * s0 + f[0] * s1
        return f[2] * s0 + 2.0 * f[1] * s1 + f[0] * s2

    def describe(self):
        return "example5-multiscale" if self.odd else "example4-multiscale"


# Stand-in polyline for the piecewise-linear examples; the exact vertices are
# only shown graphically in the source experiments.
DEFAULT_POLYLINE = ((-0.7, 0.0), (-0.4, 0.3), (-0.1, 0.3), (0.2, 0.0), (0.45, 0.25), (0.7, 0.0))


@dataclass(frozen=True)
class PolylineProfile(SurfaceProfile):
    """Piecewise-linear profile through ``vertices``; zero at both ends.

    The second derivative is taken as zero between kinks.
    """

    vertices: tuple = DEFAULT_POLYLINE

    def __post_init__(self):
        v = tuple((float(a), float(b)) for a, b in self.vertices)
        if len(v) < 3:
            raise ConfigurationError("polyline needs at least three vertices")
        xs = [a for a, _ in v]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigurationError("polyline abscissae must increase strictly")
        if v[0][1] != 0.0 or v[-1][1] != 0.0:
            raise ConfigurationError("polyline must start and end at height 0")
        object.__setattr__(self, "vertices", v)

    @property
    def support(self):
        return (self.vertices[0][0], self.vertices[-1][0])

    def _raw(self, x1, deriv):
        xs = np.array([a for a, _ in self.vertices])
        ys = np.array([b for _, b in self.vertices])
        if deriv == 0:
            return np.interp(x1, xs, ys)
        if deriv == 2:
            return np.zeros_like(x1)
        slopes = np.diff(ys) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, x1, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    def describe(self):
        pts = ";".join(f"{a!r}:{b!r}" for a, b in self.vertices)
        return f"example3-piecewise vertices={pts}"


@dataclass(frozen=True)
class ShiftedProfile(SurfaceProfile):
    """``base`` translated by ``ell`` along x1."""

    base: SurfaceProfile
    ell: float

    @property
    def support(self):
        lo, hi = self.base.support
        return (lo + self.ell, hi + self.ell)

    def _raw(self, x1, deriv):
        return np.asarray(self.base.evaluate(x1 - self.ell, deriv))

    def describe(self):
        return f"{self.base.describe()} shifted by {self.ell!r}"

    def is_flat(self):
        return self.base.is_flat()


PRESETS = ("flat", "example1", "example3-piecewise", "example4-multiscale", "example5-multiscale")


def make_preset(name: str, vertices: Sequence[tuple[float, float]] | None = None) -> SurfaceProfile:
    """Closed-form profiles used by the experiments."""
    if name == "flat":
        return FlatProfile()
    if name == "example1":
        return BumpProfile(center=-0.2, width=0.3, height=1.0)
    if name == "example3-piecewise":
        return PolylineProfile(tuple(vertices) if vertices else DEFAULT_POLYLINE)
    if name == "example4-multiscale":
        return MultiscaleProfile(odd=False)
    if name == "example5-multiscale":
        return MultiscaleProfile(odd=True)
    raise ConfigurationError(f"unknown profile preset {name!r}; known: {', '.join(PRESETS)}")


def profile_eval(p: SurfaceProfile, x1, deriv: int = 0):
    return p.evaluate(x1, deriv)


def reflect(x):
    """Mirror image ``(x1, -x2)`` about the x1 axis."""
    x = np.array(x, dtype=float)
    x[..., 1] = -x[..., 1]
    return x


# ---------------------------------------------------------------------------
# Graded mesh
# ---------------------------------------------------------------------------

def _grading(sigma, p):
    """Polynomial grading ``w: [0, 2pi] -> [0, 2pi]`` and ``w'``.

    Also returns ``2pi - w`` computed from the mirrored argument, which keeps
    full relative precision near the upper end.
    """
    def v(s):
        a = (np.pi - s) / np.pi
        return (1.0 / p - 0.5) * a ** 3 + (1.0 / p) * (s - np.pi) / np.pi + 0.5

    def dv(s):
        a = (np.pi - s) / np.pi
        return -(3.0 / np.pi) * (1.0 / p - 0.5) * a ** 2 + 1.0 / (p * np.pi)

    va = v(sigma)
    vb = v(2.0 * np.pi - sigma)
    pa = va ** p
    pb = vb ** p
    den = pa + pb
    w = 2.0 * np.pi * pa / den
    w_rev = 2.0 * np.pi * pb / den
    dw = 2.0 * np.pi * p * (va ** (p - 1) * dv(sigma) * pb + pa * vb ** (p - 1) * dv(2.0 * np.pi - sigma)) / den ** 2
    return w, w_rev, dw


@dataclass(frozen=True, eq=False)
class BoundaryMesh:
    """Graded Nystrom discretisation of the closed contour.

    Arrays prefixed ``full_`` live on the complete periodic grid of ``2n``
    points ``s_j = j*pi/n`` (corners at ``j = 0`` and ``j = n``). The
    collocation nodes are the ``2n - 2`` non-corner points; ``active`` holds
    their grid indices.
    """

    profile: SurfaceProfile
    R: float
    n: int
    grading: int
    s: np.ndarray
    full_points: np.ndarray      # (2n, 2)
    full_deriv: np.ndarray       # (2n, 2) dx/ds
    full_curv: np.ndarray        # (2n,) diagonal double-layer term n.x''/|x'|^2
    full_tags: np.ndarray        # (2n,) SEMICIRCLE / SURFACE; corners tagged -1
    active: np.ndarray

    @property
    def size(self) -> int:
        return self.active.size

    @property
    def points(self) -> np.ndarray:
        return self.full_points[self.active]

    @property
    def deriv(self) -> np.ndarray:
        return self.full_deriv[self.active]

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.deriv[:, 0], self.deriv[:, 1])

    @property
    def normals(self) -> np.ndarray:
        """Unit normals pointing out of the bounded region."""
        d = self.deriv
        nrm = np.stack([d[:, 1], -d[:, 0]], axis=1)
        return nrm / self.speed[:, None]

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid arc-length weights ``(pi/n) |x'(s_j)|``."""
        return (np.pi / self.n) * self.speed

    @property
    def tags(self) -> np.ndarray:
        return self.full_tags[self.active]

    @property
    def on_surface(self) -> np.ndarray:
        return self.tags == SURFACE

    @property
    def corners(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([-self.R, 0.0]), np.array([self.R, 0.0])

    def arclength(self) -> float:
        return float(np.sum(self.weights))

    def min_spacing_near(self, idx: np.ndarray) -> np.ndarray:
        pts = self.full_points
        prev = pts[(self.active[idx] - 1) % pts.shape[0]]
        nxt = pts[(self.active[idx] + 1) % pts.shape[0]]
        here = pts[self.active[idx]]
        return np.maximum(np.linalg.norm(here - prev, axis=1), np.linalg.norm(nxt - here, axis=1))


def build_mesh(profile: SurfaceProfile, R: float = 1.0, n: int = 64, grading: int = 8) -> BoundaryMesh:
    """Discretise the contour below ``profile`` inside the disc of radius ``R``.

    ``n`` is the number of grid intervals per arc (``n - 1`` collocation
    nodes on each arc).
    """
    if n < 8 or n % 2:
        raise ConfigurationError(f"n must be even and >= 8, got {n}")
    if grading < 2:
        raise ConfigurationError("grading order must be >= 2")
    lo, hi = profile.support
    if not profile.is_flat() and not (-R < lo and hi < R):
        raise ConfigurationError(
            f"profile support ({lo:.4g}, {hi:.4g}) is not strictly inside (-{R}, {R})")
    if not profile.is_flat():
        xs = np.linspace(lo, hi, 2001)
        if np.any(np.hypot(xs, profile.evaluate(xs)) >= R):
            raise ConfigurationError(f"surface leaves the disc of radius {R}")

    j = np.arange(n + 1)
    sigma = 2.0 * np.pi * j / n
    w, w_rev, dw = _grading(sigma, grading)
    u = w / (2.0 * np.pi)
    u_rev = w_rev / (2.0 * np.pi)
    du = dw / np.pi                       # du/ds on the global grid (ds = dsigma/2)

    # lower semicircle, theta from pi to 2 pi
    theta = np.pi + np.pi * u
    half = 0.5 * np.pi * u
    half_rev = 0.5 * np.pi * u_rev
    cx = np.where(u < 0.5, -R + 2.0 * R * np.sin(half) ** 2, R - 2.0 * R * np.sin(half_rev) ** 2)
    cy = -R * np.sin(np.pi * np.minimum(u, u_rev))
    z1 = np.pi * R * np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    circ_pts = np.stack([cx, cy], axis=1)
    circ_der = z1 * du[:, None]
    circ_curv = -np.pi * du

    # surface piece, x1 from R down to -R
    x1 = np.where(u < 0.5, R - 2.0 * R * u, -R + 2.0 * R * u_rev)
    h0 = np.asarray(profile.evaluate(x1, 0), dtype=float)
    h1 = np.asarray(profile.evaluate(x1, 1), dtype=float)
    h2 = np.asarray(profile.evaluate(x1, 2), dtype=float)
    surf_pts = np.stack([x1, h0], axis=1)
    zs1 = -2.0 * R * np.stack([np.ones_like(x1), h1], axis=1)
    zs2 = 4.0 * R * R * np.stack([np.zeros_like(x1), h2], axis=1)
    surf_der = zs1 * du[:, None]
    rot = np.stack([zs1[:, 1], -zs1[:, 0]], axis=1)
    surf_curv = du * np.sum(rot * zs2, axis=1) / np.sum(zs1 * zs1, axis=1)

    full_points = np.concatenate([circ_pts[:n], surf_pts[:n]])
    full_deriv = np.concatenate([circ_der[:n], surf_der[:n]])
    full_curv = np.concatenate([circ_curv[:n], surf_curv[:n]]) / (2.0 * np.pi)
    full_tags = np.concatenate([np.full(n, SEMICIRCLE), np.full(n, SURFACE)])
    full_tags[0] = full_tags[n] = -1
    # exact corner coordinates
    full_points[0] = (-R, 0.0)
    full_points[n] = (R, 0.0)
    active = np.concatenate([np.arange(1, n), np.arange(n + 1, 2 * n)])
    s = np.pi * np.arange(2 * n) / n
    return BoundaryMesh(profile=profile, R=float(R), n=n, grading=grading, s=s,
                        full_points=full_points, full_deriv=full_deriv, full_curv=full_curv,
                        full_tags=full_tags, active=active)
