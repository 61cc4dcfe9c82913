"""Hankel functions of the first kind (orders 0 and 1) and the 2-D Helmholtz
fundamental solution.

Real, positive arguments only. Three regimes:

* ``z <= 8``: ascending power series for J0, J1, Y0, Y1.
* ``8 < z <= 25``: Miller backward recurrence for J_n, normalised with
  ``J0 + 2 sum J_2k = 1``; Y0 and Y1 from the Neumann series in the J_n.
* ``z > 25``: Hankel asymptotic expansion, truncated once the terms drop
  below double precision.

All routines are vectorised over numpy arrays.
"""

from __future__ import annotations

import numpy as np

EULER_GAMMA = 0.57721566490153286061

_SERIES_MAX = 8.0
_MILLER_MAX = 25.0
_SERIES_TERMS = 34
_MILLER_START = 72


class DomainError(ValueError):
    """Argument outside the supported domain (non-positive z)."""


class SingularityError(ValueError):
    """Kernel evaluated at coincident source and target points."""


def _check_positive(z):
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("Hankel functions are only defined here for z > 0")
    return z


def _series(z):
    q = 0.25 * z * z
    j0 = np.zeros_like(z)
    j1 = np.zeros_like(z)
    y0s = np.zeros_like(z)
    y1s = np.zeros_like(z)
    t0 = np.ones_like(z)      # (-q)^m / (m!)^2
    t1 = np.ones_like(z)      # (-q)^m / (m! (m+1)!)
    harm = 0.0
    for m in range(_SERIES_TERMS):
        if m > 0:
            t0 = t0 * (-q) / (m * m)
            t1 = t1 * (-q) / (m * (m + 1))
            harm += 1.0 / m
        j0 += t0
        j1 += t1
        y0s += harm * t0
        y1s += (2.0 * harm + 1.0 / (m + 1)) * t1
    j1 *= 0.5 * z
    lg = np.log(0.5 * z) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (lg * j0 - y0s)
    y1 = (2.0 / np.pi) * lg * j1 - 2.0 / (np.pi * z) - (0.5 * z / np.pi) * y1s
    return j0, j1, y0, y1


def _miller(z):
    n_top = _MILLER_START
    jp1 = np.zeros_like(z)
    jn = np.full_like(z, 1e-30)
    norm = np.zeros_like(z)
    y0s = np.zeros_like(z)
    y1s = np.zeros_like(z)
    # unnormalised J_n, n = n_top-1 .. 0
    vals = {}
    for n in range(n_top, 0, -1):
        jm1 = (2.0 * n / z) * jn - jp1
        jp1, jn = jn, jm1
        vals[n - 1] = jn
    for n in range(2, n_top, 2):
        norm += vals[n]
        kk = n // 2
        sgn = -1.0 if kk % 2 else 1.0
        y0s += sgn * vals[n] / kk
        y1s += sgn * (vals[n - 1] - vals[n + 1]) / kk
    scale = 1.0 / (vals[0] + 2.0 * norm)
    j0 = vals[0] * scale
    j1 = vals[1] * scale
    lg = np.log(0.5 * z) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (lg * j0 - 2.0 * y0s * scale)
    y1 = (2.0 / np.pi) * (lg * j1 - j0 / z + y1s * scale)
    return j0, j1, y0, y1


def _asymptotic(z):
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        total = np.ones(z.shape, dtype=complex)
        term = np.ones(z.shape, dtype=complex)
        for m in range(1, 40):
            term = term * 1j * (mu - (2 * m - 1) ** 2) / (m * 8.0 * z)
            total += term
            if np.max(np.abs(term)) < 1e-18:
                break
        phase = z - (0.5 * nu + 0.25) * np.pi
        out.append(np.sqrt(2.0 / (np.pi * z)) * np.exp(1j * phase) * total)
    h0, h1 = out
    return h0.real, h1.real, h0.imag, h1.imag


def bessel_jy01(z):
    """Return ``(J0, J1, Y0, Y1)`` evaluated at positive real ``z``."""
    z = _check_positive(z)
    shape = z.shape
    z = z.ravel()
    res = [np.empty_like(z) for _ in range(4)]
    for lo, hi, fn in ((0.0, _SERIES_MAX, _series),
                       (_SERIES_MAX, _MILLER_MAX, _miller),
                       (_MILLER_MAX, np.inf, _asymptotic)):
        sel = (z > lo) & (z <= hi)
        if np.any(sel):
            for r, v in zip(res, fn(z[sel])):
                r[sel] = v
    return tuple(r.reshape(shape) for r in res)


def hankel1_0(z):
    """H_0^(1)(z) = J0(z) + i Y0(z) for z > 0."""
    j0, _, y0, _ = bessel_jy01(z)
    return j0 + 1j * y0


def hankel1_1(z):
    """H_1^(1)(z) = J1(z) + i Y1(z) for z > 0."""
    _, j1, _, y1 = bessel_jy01(z)
    return j1 + 1j * y1


def hankel1_01(z):
    """Both orders at once, sharing the series / recurrence work."""
    j0, j1, y0, y1 = bessel_jy01(z)
    return j0 + 1j * y0, j1 + 1j * y1


def _separation(x, y):
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(r == 0.0):
        raise SingularityError("fundamental solution evaluated at x == y")
    return diff, r


def phi(k, x, y):
    """Fundamental solution ``(i/4) H_0^(1)(k|x - y|)``.

    ``x`` and ``y`` are arrays with a trailing axis of length 2; they
    broadcast against each other.
    """
    _, r = _separation(x, y)
    return 0.25j * hankel1_0(k * r)


def grad_phi(k, x, y):
    """Gradient of :func:`phi` with respect to the source point ``y``.

    Returns a complex array with a trailing axis of length 2.
    """
    diff, r = _separation(x, y)
    coef = 0.25j * k * hankel1_1(k * r) / r
    return coef[..., None] * diff
