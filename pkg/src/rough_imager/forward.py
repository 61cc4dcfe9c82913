"""Nystrom solver for the reflected-kernel combined-field integral equation.

The scattered field above the surface is represented as the combined
potential

    u_s(x) = int [dPhi(x,y)/dnu(y) - i eta Phi(x,y)] phi(y) ds(y)

over the closed contour of :mod:`rough_imager.geometry`. Collocation rows on
the surface piece carry the doubled direct operator (the reflected kernel
coincides with the direct one there); rows on the lower semicircle add the
kernel evaluated at the mirror image ``(x1, -x2)`` of the collocation point.

Matrices follow the Kress normalisation (kernels carry a factor 2), so both
row types read ``phi + A phi (+ A_re phi) = g``.

Log-singular direct kernels use the Kussmaul-Martensen split with the
trigonometric weights ``R_j``; the mirror kernels are smooth and use the
plain trapezoid rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geometry import SEMICIRCLE, BoundaryMesh, ConfigurationError, SurfaceProfile, _grading, build_mesh
from .special_fn import EULER_GAMMA, hankel1_01
from .waves import IncidentConfig, grad_incident_plus_reflected, incident_plus_reflected, reflected

logger = logging.getLogger(__name__)

POINTS_PER_WAVELENGTH = 10.0
MIN_NODES_PER_ARC = 64
_EVAL_CHUNK = 4096


class SolverError(RuntimeError):
    """The discrete system could not be solved (signals a discretisation bug)."""


def default_eta(k: float) -> float:
    return max(1.0, float(k))


def nodes_per_arc(k: float, R: float = 1.0, profile: SurfaceProfile | None = None,
                  ppw: float = POINTS_PER_WAVELENGTH, grading: int = 8, scale: float = 1.0) -> int:
    """Grid intervals per arc giving at least ``ppw`` points per wavelength
    where the graded grid is coarsest.

    ``scale`` multiplies the count after the floor of 64 is applied, so two
    meshes built with different scales never coincide.
    """
    length = math.pi * R
    if profile is not None and not profile.is_flat():
        x = np.linspace(-R, R, 2001)
        slope = np.asarray(profile.evaluate(x, 1))
        length = max(length, float(np.trapezoid(np.sqrt(1.0 + slope ** 2), x)))
    sig = np.linspace(0.0, 2.0 * np.pi, 401)
    stretch = float(np.max(_grading(sig, grading)[2]))
    n = max(float(MIN_NODES_PER_ARC), ppw * k * length * stretch / (2.0 * math.pi))
    n = int(math.ceil(scale * n))
    return n + (n % 2)


def _log_weights(n: int) -> np.ndarray:
    """``R_m`` for ``m = 0..2n-1``: trigonometric weights of the log factor
    ``ln(4 sin^2((t - tau)/2))`` at grid offset ``m``."""
    m = np.arange(2 * n)
    q = np.arange(1, n)
    ang = np.outer(m, q) * (math.pi / n)
    return -(2.0 * math.pi / n) * (np.cos(ang) / q).sum(axis=1) - (math.pi / n ** 2) * np.cos(m * math.pi)


@dataclass(eq=False)
class _DirectKernels:
    """Direct (unreflected) kernel pieces on the full periodic grid."""

    diff: np.ndarray      # x_i - y_j
    r: np.ndarray
    h0: np.ndarray
    h1: np.ndarray
    logterm: np.ndarray
    rw: np.ndarray        # R_{i-j}
    zero: np.ndarray      # off-diagonal coincident pairs (round-off at corners)


def _direct_kernels(mesh: BoundaryMesh, k: float) -> _DirectKernels:
    n = mesh.n
    pts = mesh.full_points
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    idx = np.arange(2 * n)
    off = (idx[:, None] - idx[None, :]) % (2 * n)
    zero = (r == 0.0)
    np.fill_diagonal(zero, False)
    rs = np.where(r > 0.0, r, 1.0)
    h0, h1 = hankel1_01(k * rs)
    h0[r == 0.0] = 0.0
    h1[r == 0.0] = 0.0
    with np.errstate(divide="ignore"):
        logterm = np.log(4.0 * np.sin(0.5 * off * math.pi / n) ** 2)
    np.fill_diagonal(logterm, 0.0)
    rw = _log_weights(n)[off]
    return _DirectKernels(diff=diff, r=rs, h0=h0, h1=h1, logterm=logterm, rw=rw, zero=zero)


@dataclass(eq=False)
class SystemOperator:
    """Assembled Nystrom matrix with its LU factorisation.

    Immutable after construction; the factorisation is reused for every
    right-hand side at this ``(mesh, k, eta)``.
    """

    mesh: BoundaryMesh
    k: float
    eta: float
    matrix: np.ndarray
    lu: tuple = field(repr=False)
    _kern: _DirectKernels = field(repr=False)
    _traces: dict = field(default_factory=dict, repr=False)

    def solve(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=complex)
        if g.shape[0] != self.matrix.shape[0]:
            raise ValueError(f"right-hand side has {g.shape[0]} rows, system has {self.matrix.shape[0]}")
        return scipy.linalg.lu_solve(self.lu, g)


@dataclass(eq=False)
class DensitySolution:
    """Solved boundary density, reusable for field evaluation."""

    op: SystemOperator
    phi: np.ndarray
    residual: float = 0.0

    @property
    def mesh(self) -> BoundaryMesh:
        return self.op.mesh

    @property
    def k(self) -> float:
        return self.op.k

    @property
    def eta(self) -> float:
        return self.op.eta


def _flat_surface_nodes(mesh: BoundaryMesh) -> np.ndarray:
    """Mask of collocation nodes on the part of the surface lying on the axis."""
    surf = mesh.on_surface
    if mesh.profile.is_flat():
        return surf
    lo, hi = mesh.profile.support
    x1 = mesh.points[:, 0]
    return surf & ((x1 <= lo) | (x1 >= hi))


def assemble_system(mesh: BoundaryMesh, k: float, eta: float | None = None) -> SystemOperator:
    """Assemble and LU-factorise ``P`` on ``mesh`` at wavenumber ``k``."""
    if not k > 0:
        raise ConfigurationError("wavenumber must be positive")
    eta = default_eta(k) if eta is None else float(eta)
    if eta == 0.0:
        raise ConfigurationError("coupling parameter eta must be nonzero")
    n = mesh.n
    ker = _direct_kernels(mesh, k)
    d = mesh.full_deriv
    speed = np.hypot(d[:, 0], d[:, 1])
    nrm = np.stack([d[:, 1], -d[:, 0]], axis=1)          # |nrm| = speed

    ndot = np.einsum("ijc,jc->ij", ker.diff, nrm)
    big_l = 0.5j * k * ndot * ker.h1 / ker.r
    l1 = -(k / (2 * math.pi)) * ndot * ker.h1.real / ker.r
    big_m = 0.5j * ker.h0 * speed[None, :]
    m1 = -(1.0 / (2 * math.pi)) * ker.h0.real * speed[None, :]
    l2 = big_l - l1 * ker.logterm
    m2 = big_m - m1 * ker.logterm
    diag = np.arange(2 * n)
    l1[diag, diag] = 0.0
    l2[diag, diag] = mesh.full_curv
    m1[diag, diag] = -speed / (2 * math.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        m2[diag, diag] = (0.5j - EULER_GAMMA / math.pi - np.log(0.5 * k * speed) / math.pi) * speed
    l_full = ker.rw * l1 + (math.pi / n) * l2
    m_full = ker.rw * m1 + (math.pi / n) * m2
    l_full[ker.zero] = 0.0
    m_full[ker.zero] = 0.0
    a_full = l_full - 1j * eta * m_full

    act = mesh.active
    a = a_full[np.ix_(act, act)]
    a[np.diag_indices_from(a)] += 1.0

    rows = np.flatnonzero(mesh.tags == SEMICIRCLE)
    if rows.size:
        x_re = mesh.points[rows].copy()
        x_re[:, 1] *= -1.0
        y = mesh.points
        diff = x_re[:, None, :] - y[None, :, :]
        r = np.hypot(diff[..., 0], diff[..., 1])
        h0, h1 = hankel1_01(k * r)
        nd = np.einsum("ijc,jc->ij", diff, nrm[act])
        kre = (math.pi / n) * (0.5j * k * nd * h1 / r - 1j * eta * 0.5j * h0 * speed[act][None, :])
        # Near a corner the mirror point approaches the flat part of the
        # surface. There the mirror kernel equals the direct one with the
        # double-layer sign reversed, so the log-split entries apply.
        close = r.min(axis=1) < 2.0 * mesh.min_spacing_near(rows)
        flat = _flat_surface_nodes(mesh)
        if np.any(close):
            sub = np.ix_(act[rows[close]], act[flat])
            block = kre[close]
            block[:, flat] = -l_full[sub] - 1j * eta * m_full[sub]
            kre[close] = block
            rough_cols = mesh.on_surface & ~flat
            rough = close & (r[:, rough_cols].min(axis=1, initial=np.inf)
                             < 2.0 * mesh.min_spacing_near(rows))
            if np.any(rough):
                logger.warning("surface passes within two node spacings of the mirrored semicircle; "
                               "increase R or n for accurate results")
        a[rows] += kre

    if not np.all(np.isfinite(a)):
        raise SolverError("non-finite entries in the Nystrom matrix")
    try:
        lu = scipy.linalg.lu_factor(a, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverError(f"LU factorisation failed: {exc}") from exc
    pivots = np.abs(np.diag(lu[0]))
    if pivots.min() <= 1e-13 * pivots.max():
        raise SolverError("Nystrom matrix is numerically singular")
    return SystemOperator(mesh=mesh, k=float(k), eta=eta, matrix=a, lu=lu, _kern=ker)


def assemble_rhs(mesh: BoundaryMesh, cfg: IncidentConfig | None = None, *, data=None) -> np.ndarray:
    """Right-hand side ``g``.

    With ``cfg``: ``g = -2 (u_i + u_r)`` on surface rows. With ``data``
    (a Dirichlet datum ``f`` on the surface nodes, possibly several columns):
    ``g = 2 f``. Semicircle rows are zero in both cases.
    """
    surf = mesh.on_surface
    if (cfg is None) == (data is None):
        raise ValueError("pass exactly one of cfg or data")
    if cfg is not None:
        f = -incident_plus_reflected(cfg, mesh.points[surf])
    else:
        f = np.asarray(data, dtype=complex)
    g = np.zeros((mesh.size,) + f.shape[1:], dtype=complex)
    g[surf] = 2.0 * f
    return g


def solve_density(op: SystemOperator, g: np.ndarray) -> DensitySolution:
    phi = op.solve(g)
    gn = np.max(np.abs(g)) if g.size else 0.0
    res = float(np.max(np.abs(op.matrix @ phi - g)) / gn) if gn > 0 else 0.0
    if res > 1e-10:
        logger.warning("density residual %.2e above 1e-10", res)
    return DensitySolution(op=op, phi=phi, residual=res)


def solve_forward(profile: SurfaceProfile, cfg: IncidentConfig, R: float = 1.0, n: int | None = None,
                  eta: float | None = None, grading: int = 8) -> DensitySolution:
    """Mesh, assemble and solve in one call."""
    if n is None:
        n = nodes_per_arc(cfg.k, R, profile, grading=grading)
    mesh = build_mesh(profile, R, n, grading)
    op = assemble_system(mesh, cfg.k, eta)
    return solve_density(op, assemble_rhs(mesh, cfg))


# ---------------------------------------------------------------------------
# Field evaluation
# ---------------------------------------------------------------------------

def _layer_matrix(mesh: BoundaryMesh, k: float, eta: float, x: np.ndarray) -> np.ndarray:
    y = mesh.points
    d = mesh.deriv
    nrm = np.stack([d[:, 1], -d[:, 0]], axis=1)
    diff = x[:, None, :] - y[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    h0, h1 = hankel1_01(k * r)
    nd = np.einsum("ijc,jc->ij", diff, nrm)
    ker = 0.25j * k * nd * h1 / r + 0.25 * eta * h0 * mesh.speed[None, :]
    return (math.pi / mesh.n) * ker


def eval_scattered(sol: DensitySolution, x) -> np.ndarray:
    """Scattered field at points ``x`` (shape ``(..., 2)``) above the surface.

    Accurate only a few node spacings away from the contour.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1]
    pts = x.reshape(-1, 2)
    phi = sol.phi
    out = np.empty((pts.shape[0],) + phi.shape[1:], dtype=complex)
    for start in range(0, pts.shape[0], _EVAL_CHUNK):
        blk = pts[start:start + _EVAL_CHUNK]
        out[start:start + blk.shape[0]] = _layer_matrix(sol.mesh, sol.k, sol.eta, blk) @ phi
    return out.reshape(shape + phi.shape[1:])


def far_field_matrix(mesh: BoundaryMesh, k: float, eta: float, angles) -> np.ndarray:
    t = np.asarray(angles, dtype=float)
    xhat = np.stack([np.cos(t), np.sin(t)], axis=1)
    d = mesh.deriv
    nrm = np.stack([d[:, 1], -d[:, 0]], axis=1)
    amp = k * (xhat @ nrm.T) + eta * mesh.speed[None, :]
    phase = np.exp(-1j * k * (xhat @ mesh.points.T))
    const = np.exp(-0.25j * math.pi) / math.sqrt(8.0 * math.pi * k)
    return const * (math.pi / mesh.n) * amp * phase


def eval_far_field(sol: DensitySolution, angles) -> np.ndarray:
    """Far-field pattern at observation angles in ``(0, pi)``."""
    return far_field_matrix(sol.mesh, sol.k, sol.eta, angles) @ sol.phi


def near_grid(H: float = 1.0, L: float = 1.0, m: int = 200) -> np.ndarray:
    """``m`` equidistant points on the segment ``{(x1, H): |x1| <= L}``."""
    if m < 2:
        raise ConfigurationError("near-field grid needs m >= 2")
    x1 = np.linspace(-L, L, m)
    return np.stack([x1, np.full(m, float(H))], axis=1)


def eval_near_field(sol: DensitySolution, cfg: IncidentConfig, H: float = 1.0, L: float = 1.0,
                    m: int = 200) -> np.ndarray:
    """``u_r + u_s`` on the measurement segment."""
    pts = near_grid(H, L, m)
    prof = sol.mesh.profile
    top = float(np.max(prof.evaluate(np.linspace(-L, L, 4001)))) if not prof.is_flat() else 0.0
    if H <= top:
        raise ConfigurationError(f"measurement height {H} is not above the surface maximum {top:.4g}")
    return reflected(cfg, pts) + eval_scattered(sol, pts)


# ---------------------------------------------------------------------------
# Normal derivative on the surface
# ---------------------------------------------------------------------------

def _trace_operators(op: SystemOperator):
    """Full-grid matrices for the normal-derivative trace: the single-layer
    kernel without arc-length factor (for the Maue form of the hypersingular
    operator), its k^2 normal-normal companion, and the adjoint double layer."""
    if op._traces:
        return op._traces
    mesh, k, n = op.mesh, op.k, op.mesh.n
    ker = op._kern
    d = mesh.full_deriv
    speed = np.hypot(d[:, 0], d[:, 1])
    safe = np.where(speed > 0, speed, 1.0)
    nrm = np.stack([d[:, 1], -d[:, 0]], axis=1)
    diag = np.arange(2 * n)

    p1 = -ker.h0.real / (4 * math.pi)
    p2 = 0.25j * ker.h0 - p1 * ker.logterm
    p1[diag, diag] = -1.0 / (4 * math.pi)
    with np.errstate(divide="ignore"):
        p2[diag, diag] = 0.25j - EULER_GAMMA / (2 * math.pi) - np.log(0.5 * k * safe) / (2 * math.pi)
    s_free = ker.rw * p1 + (math.pi / n) * p2
    s_free[ker.zero] = 0.0
    tt = (d @ d.T) / safe[:, None]
    s_nn = s_free * tt

    # adjoint double layer (Kress-normalised), unit normal at the target
    nd = -np.einsum("ijc,ic->ij", ker.diff, nrm) / safe[:, None]
    lp = 0.5j * k * nd * ker.h1 / ker.r * speed[None, :]
    lp1 = -(k / (2 * math.pi)) * nd * ker.h1.real / ker.r * speed[None, :]
    lp2 = lp - lp1 * ker.logterm
    lp1[diag, diag] = 0.0
    lp2[diag, diag] = mesh.full_curv
    kp = ker.rw * lp1 + (math.pi / n) * lp2
    kp[ker.zero] = 0.0
    op._traces.update(s_free=s_free, s_nn=s_nn, kp=kp, speed=safe)
    return op._traces


def _fourier_derivative(v: np.ndarray) -> np.ndarray:
    m = v.shape[0]
    freq = np.fft.fftfreq(m, d=1.0 / m)
    freq[m // 2] = 0.0
    mult = (1j * freq).reshape((m,) + (1,) * (v.ndim - 1))
    return np.fft.ifft(mult * np.fft.fft(v, axis=0), axis=0)


CORNER_WINDOW = 1e-6


def _corner_windows(mesh: BoundaryMesh) -> tuple[np.ndarray, np.ndarray]:
    """Grid indices lying within ``CORNER_WINDOW * R`` of a corner and, for
    each, the nearest grid index on the same arc outside that window.

    Graded nodes that close to a corner cannot be told apart from it in
    double precision, so density values there are dominated by round-off.
    """
    n = mesh.n
    tol = CORNER_WINDOW * mesh.R
    idx = np.arange(2 * n)
    bad, repl = [], []
    for corner, pos in zip(mesh.corners, (0, n)):
        dist = np.hypot(*(mesh.full_points - corner).T)
        for step in (1, -1):
            j = pos
            run = []
            while dist[idx[j % (2 * n)]] < tol and len(run) < n // 2:
                run.append(j % (2 * n))
                j += step
            bad.extend(run)
            repl.extend([j % (2 * n)] * len(run))
    return np.asarray(bad, dtype=int), np.asarray(repl, dtype=int)


def _full_density(mesh: BoundaryMesh, phi: np.ndarray) -> np.ndarray:
    """Density on the full periodic grid with the corner windows filled in
    from the nearest resolved node (the density is continuous and flat in
    the graded parameter there)."""
    n = mesh.n
    full = np.zeros((2 * n,) + phi.shape[1:], dtype=complex)
    full[mesh.active] = phi
    bad, repl = _corner_windows(mesh)
    full[bad] = full[repl]
    return full


def scattered_normal_derivative(sol: DensitySolution) -> np.ndarray:
    """Exterior normal derivative of the scattered field at the surface nodes.

    Uses ``T phi - i eta (K' phi - phi/2)`` with the hypersingular ``T`` in
    Maue form ``d/ds S d/ds + k^2 nu.S nu``; tangential derivatives are taken
    spectrally on the graded periodic grid. Nodes inside the corner windows
    take the value of the nearest resolved surface node.
    """
    mesh, k, eta = sol.mesh, sol.k, sol.eta
    tr = _trace_operators(sol.op)
    full = _full_density(mesh, sol.phi)
    dphi = _fourier_derivative(full)
    psi = tr["s_free"] @ dphi
    speed = tr["speed"].reshape((-1,) + (1,) * (full.ndim - 1))
    t_phi = _fourier_derivative(psi) / speed + k * k * (tr["s_nn"] @ full)
    kp_phi = 0.5 * (tr["kp"] @ full)
    dn = t_phi - 1j * eta * (kp_phi - 0.5 * full)
    bad, repl = _corner_windows(mesh)
    dn[bad] = dn[repl]
    surf_full = mesh.active[mesh.on_surface]
    return dn[surf_full]


def total_normal_derivative(sol: DensitySolution, cfg: IncidentConfig) -> np.ndarray:
    """``du/dnu`` of the total field at the surface nodes (normal into the
    upper domain)."""
    mesh = sol.mesh
    surf = mesh.on_surface
    grad = grad_incident_plus_reflected(cfg, mesh.points[surf])
    dn_inc = np.sum(grad * mesh.normals[surf], axis=-1)
    return dn_inc + scattered_normal_derivative(sol)
