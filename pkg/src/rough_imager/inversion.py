"""Phaseless forward maps, their Frechet derivatives and the multi-frequency
Levenberg-Marquardt reconstruction.

The unknown surface is ``h = sum_i a_i phi_{i,M}`` over a
:class:`~rough_imager.geometry.SplineBasis`. At each wavenumber the driver
repeats regularised Gauss-Newton steps until the relative data misfit drops
below ``tau * delta``, then moves on to the next wavenumber with the current
coefficients as the initial guess.

Derivatives w.r.t. ``a_i`` are computed from an auxiliary scattering problem
whose Dirichlet datum is ``-(phi_{i,M} nu_2) du/dnu`` on the surface. It shares
the factorised operator of the base solve, so a full Jacobian costs one
factorisation plus ``M`` extra back-substitutions per incident configuration.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.optimize

from .forward import (DensitySolution, SolverError, assemble_rhs, eval_scattered, far_field_matrix,
                      near_grid, nodes_per_arc, total_normal_derivative)
from .geometry import ConfigurationError, SplineBasis, SplineProfile
from .synth import FAR, MeasurementGrid, MeasurementSet, Simulation, far_grid, simulate
from .waves import IncidentConfig

logger = logging.getLogger(__name__)

# Flags attached to iteration records and stage summaries.
CONVERGED = "converged"
ITERATION_CAP = "iteration_cap"
DIVERGING = "diverging"
TARGET_UNREACHABLE = "target_unreachable"
BETA_RAISED = "beta_raised"

# Iterates must keep the surface height below this fraction of the disc height.
ADMISSIBLE_FRACTION = 0.9
_MAX_INCREASES_BETA = 60


class DegenerateDataError(ValueError):
    """Measured intensities are identically zero, so relative errors are undefined."""


class InversionError(RuntimeError):
    """A forward solve failed during the reconstruction; ``state`` holds the
    iterate at the time of failure."""

    def __init__(self, message: str, state: "InversionState"):
        super().__init__(message)
        self.state = state


# ---------------------------------------------------------------------------
# Forward maps
# ---------------------------------------------------------------------------

def spline_profile(a, R: float = 1.0) -> SplineProfile:
    a = np.asarray(a, dtype=float)
    return SplineProfile(SplineBasis(a.size, R), a)


def _simulate(a, configs, grid, R, n, eta, grading) -> Simulation:
    return simulate(spline_profile(a, R=R), configs, grid, R=R, n=n, eta=eta, grading=grading)


def forward_map_far(a, cfg: IncidentConfig, grid: MeasurementGrid | int = 200, *, R: float = 1.0,
                    n: int | None = None, eta: float | None = None, grading: int = 8) -> np.ndarray:
    """``|u_inf|^2`` on the far-field grid for the surface with coefficients ``a``."""
    if isinstance(grid, int):
        grid = MeasurementGrid(FAR, n_f=grid)
    return _simulate(a, [cfg], grid, R, n, eta, grading).intensity[0]


def forward_map_near(a, cfg: IncidentConfig, H: float = 1.0, L: float = 1.0, m: int = 200, *,
                     R: float = 1.0, n: int | None = None, eta: float | None = None,
                     grading: int = 8) -> np.ndarray:
    """``|u_r + u_s|^2`` at ``m`` points on the segment at height ``H``."""
    grid = MeasurementGrid("near", H=H, L=L, m=m)
    return _simulate(a, [cfg], grid, R, n, eta, grading).intensity[0]


def boundary_normal_derivative(sol: DensitySolution, cfg: IncidentConfig) -> np.ndarray:
    """``du/dnu`` of the total field at the surface nodes, ``nu`` pointing up."""
    return total_normal_derivative(sol, cfg)


def derivative_fields(sim: Simulation, basis: SplineBasis) -> np.ndarray:
    """Fields ``u'`` for ``Delta h = phi_{i,M}``, ``i = 1..M``, sampled on the
    measurement grid. Shape ``(n_d, grid size, M)``, complex."""
    mesh = sim.mesh
    surf = mesh.on_surface
    x1 = mesh.points[surf, 0]
    nu2 = mesh.normals[surf, 1]
    dh = basis.matrix(x1)                                   # (n_surf, M)
    if sim.grid.kind == FAR:
        sampler = far_field_matrix(mesh, sim.op.k, sim.op.eta, far_grid(sim.grid.n_f))
    else:
        pts = near_grid(sim.grid.H, sim.grid.L, sim.grid.m)
    out = np.empty((len(sim.configs), sim.grid.size, basis.M), dtype=complex)
    for l, (sol, cfg) in enumerate(zip(sim.solutions, sim.configs)):
        dudn = boundary_normal_derivative(sol, cfg)
        datum = -(dh * nu2[:, None]) * dudn[:, None]
        dphi = sim.op.solve(assemble_rhs(mesh, data=datum))
        if sim.grid.kind == FAR:
            out[l] = sampler @ dphi
        else:
            out[l] = eval_scattered(DensitySolution(sim.op, dphi), pts)
    return out


def jacobian(sim: Simulation, basis: SplineBasis) -> np.ndarray:
    """Derivative of the intensities w.r.t. the spline coefficients, rows
    stacked over configurations then grid points: ``2 Re(conj(u) u')``."""
    du = derivative_fields(sim, basis)
    blocks = 2.0 * np.real(np.conj(sim.fields)[:, :, None] * du)
    return blocks.reshape(-1, basis.M)


def frechet_column(a, cfg: IncidentConfig, grid: MeasurementGrid, i: int, *, R: float = 1.0,
                   n: int | None = None, eta: float | None = None, grading: int = 8,
                   sim: Simulation | None = None) -> np.ndarray:
    """Column ``i`` (1-based) of the Jacobian for a single configuration.

    Pass ``sim`` to reuse a cached forward solution.
    """
    a = np.asarray(a, dtype=float)
    basis = SplineBasis(a.size, R)
    if not 1 <= i <= basis.M:
        raise IndexError(f"spline index {i} outside 1..{basis.M}")
    if sim is None:
        sim = _simulate(a, [cfg], grid, R, n, eta, grading)
    return jacobian(sim, _SingleColumn(basis, i))[:, 0]


@dataclass(frozen=True)
class _SingleColumn:
    """View of one basis function with the :class:`SplineBasis` matrix API."""

    basis: SplineBasis
    i: int

    @property
    def M(self) -> int:
        return 1

    def matrix(self, t, deriv: int = 0) -> np.ndarray:
        return self.basis.matrix(t, deriv)[:, self.i - 1:self.i]


# ---------------------------------------------------------------------------
# Regularised step
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LMStep:
    delta: np.ndarray
    beta: float
    unreachable: bool = False
    linear_residual: float = 0.0


def lm_step(J, r, rho: float = 0.8) -> LMStep:
    """Minimiser of ``||r + J da||^2 + beta ||da||^2`` with ``beta`` chosen so
    that ``||r + J da|| = rho ||r||``.

    The linearised residual increases monotonically from its Gauss-Newton
    value at ``beta = 0`` to ``||r||`` as ``beta`` grows, so the root is
    bracketed and found in ``log beta``. When even the Gauss-Newton step
    cannot reach ``rho ||r||`` the minimal-norm Gauss-Newton step is returned
    and flagged.
    """
    J = np.asarray(J, dtype=float)
    r = np.asarray(r, dtype=float).ravel()
    if not 0 < rho < 1:
        raise ConfigurationError(f"rho must lie in (0, 1), got {rho}")
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(r))):
        raise ValueError("non-finite entries in the Jacobian or residual")
    if J.shape[0] != r.size:
        raise ValueError(f"Jacobian has {J.shape[0]} rows, residual has {r.size}")
    rnorm = float(np.linalg.norm(r))
    if rnorm == 0.0:
        return LMStep(np.zeros(J.shape[1]), 0.0, False, 0.0)
    u, s, vt = np.linalg.svd(J, full_matrices=False)
    c = u.T @ r
    perp2 = max(rnorm ** 2 - float(c @ c), 0.0)
    target = rho * rnorm
    smax = float(s[0]) if s.size else 0.0
    tol = max(J.shape) * np.finfo(float).eps * smax
    live = s > tol

    def resid(beta):
        ratio = np.where(live, beta / (s * s + beta), 1.0)
        return math.sqrt(perp2 + float(np.sum((ratio * c) ** 2)))

    gn = math.sqrt(perp2 + float(np.sum(c[~live] ** 2)))
    if gn >= target or not np.any(live):
        inv = np.where(live, 1.0 / np.where(live, s, 1.0), 0.0)
        step = -(vt.T @ (inv * c))
        floor = np.finfo(float).eps * smax * smax
        return LMStep(step, floor, True, gn)

    def eq(t):
        return resid(math.exp(t)) / rnorm - rho

    lo = 2.0 * math.log(max(smax, 1e-300)) - 40.0
    hi = 2.0 * math.log(max(smax, 1e-300)) + 40.0
    while eq(lo) > 0:
        lo -= 20.0
    while eq(hi) < 0:
        hi += 20.0
    t = scipy.optimize.brentq(eq, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    beta = math.exp(t)
    filt = np.where(live, s / (s * s + beta), 0.0)
    step = -(vt.T @ (filt * c))
    return LMStep(step, beta, False, resid(beta))


# ---------------------------------------------------------------------------
# Misfit
# ---------------------------------------------------------------------------

def relative_errors(predicted: np.ndarray, data: np.ndarray) -> np.ndarray:
    predicted = np.atleast_2d(predicted)
    data = np.atleast_2d(data)
    den = np.linalg.norm(data, axis=1)
    if np.any(den == 0.0):
        raise DegenerateDataError("measured intensities vanish identically")
    return np.linalg.norm(predicted - data, axis=1) / den


def err_k(predicted, data) -> float:
    """Mean over incident configurations of the relative l2 misfit."""
    return float(np.mean(relative_errors(predicted, data)))


# ---------------------------------------------------------------------------
# Multi-frequency driver
# ---------------------------------------------------------------------------

def default_initial_guess(M: int, kind: str, value: float = 0.1, window: tuple[int, int] = (2, 4)) -> np.ndarray:
    """Zero for near-field data; ``value`` on basis indices ``window`` (1-based,
    inclusive) for far-field data, whose Jacobian vanishes at the flat surface."""
    a = np.zeros(M)
    if kind == FAR:
        lo, hi = window
        if not 1 <= lo <= hi <= M:
            raise ConfigurationError(f"initial-guess window {window} outside 1..{M}")
        a[lo - 1:hi] = value
    return a


@dataclass(frozen=True)
class InversionConfig:
    """Parameters of the reconstruction.

    ``max_inner`` caps the Newton steps per wavenumber, ``max_increases`` is
    the number of consecutive misfit increases after which a stage is
    abandoned. ``a0 = None`` selects :func:`default_initial_guess` with
    ``initial_value`` on the basis indices ``initial_window``.
    """

    M: int = 10
    R: float = 1.0
    rho: float = 0.8
    tau: float = 1.5
    delta: float = 0.05
    max_inner: int = 25
    max_increases: int = 3
    grading: int = 8
    mesh_scale: float = 1.0
    eta: float | None = None
    a0: tuple[float, ...] | None = None
    initial_value: float = 0.1
    initial_window: tuple[int, int] = (2, 4)

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ConfigurationError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.tau > 1:
            raise ConfigurationError(f"tau must exceed 1, got {self.tau}")
        if not self.delta >= 0:
            raise ConfigurationError(f"delta must be non-negative, got {self.delta}")
        if self.M < 1 or self.max_inner < 0 or self.max_increases < 1:
            raise ConfigurationError("M >= 1, max_inner >= 0 and max_increases >= 1 required")
        if self.a0 is not None and len(self.a0) != self.M:
            raise ConfigurationError(f"initial guess has {len(self.a0)} entries, M = {self.M}")

    @property
    def threshold(self) -> float:
        return self.tau * self.delta

    @property
    def basis(self) -> SplineBasis:
        return SplineBasis(self.M, self.R)

    def initial_guess(self, kind: str) -> np.ndarray:
        if self.a0 is not None:
            return np.array(self.a0, dtype=float)
        return default_initial_guess(self.M, kind, self.initial_value, self.initial_window)


@dataclass(frozen=True)
class IterationRecord:
    k: float
    iteration: int
    err: float
    beta: float = float("nan")
    step_norm: float = float("nan")
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class StageSummary:
    k: float
    iterations: int
    err: float
    status: str
    mesh_n: int
    coeffs: np.ndarray = field(repr=False)


@dataclass
class InversionState:
    a: np.ndarray
    stage: int = 0
    iteration: int = 0
    history: list[IterationRecord] = field(default_factory=list)
    stages: list[StageSummary] = field(default_factory=list)

    def profile(self, R: float = 1.0) -> SplineProfile:
        return spline_profile(self.a, R=R)


def is_admissible(a, R: float = 1.0) -> bool:
    """Whether ``|h(x1)|`` stays below a fixed fraction of the disc height
    ``sqrt(R^2 - x1^2)``, keeping the surface away from the semicircle and
    its mirror image."""
    prof = spline_profile(a, R=R)
    x = np.linspace(-R, R, 801)
    return bool(np.all(np.abs(prof.evaluate(x)) <= ADMISSIBLE_FRACTION * np.sqrt(R * R - x * x)))


def regularised_step(J, r, beta: float) -> np.ndarray:
    """``(J^T J + beta I)^{-1} J^T (-r)`` for a given ``beta > 0``."""
    u, s, vt = np.linalg.svd(J, full_matrices=False)
    return -(vt.T @ (s / (s * s + beta) * (u.T @ r)))


def _admissible_step(a, J, r, step: LMStep, R: float):
    """Raise ``beta`` by factors of 4 until ``a + da(beta)`` is admissible.

    Returns the step, the ``beta`` used and whether it had to be raised.
    """
    da, beta = step.delta, step.beta
    if is_admissible(a + da, R):
        return da, beta, False
    beta = max(beta, np.finfo(float).eps * np.linalg.norm(J, 2) ** 2)
    for _ in range(_MAX_INCREASES_BETA):
        beta *= 4.0
        da = regularised_step(J, r, beta)
        if is_admissible(a + da, R):
            return da, beta, True
    return np.zeros_like(da), math.inf, True


def _stage(state: InversionState, ms: MeasurementSet, cfg: InversionConfig, on_stage=None) -> None:
    basis = cfg.basis
    k = ms.k
    prof = spline_profile(state.a, R=cfg.R)
    n = nodes_per_arc(k, cfg.R, prof, grading=cfg.grading, scale=cfg.mesh_scale)
    data = ms.values
    best_a, best_err = state.a.copy(), math.inf
    prev_err = math.inf
    increases = unreachable = 0
    status = ITERATION_CAP
    it = 0
    while True:
        state.iteration = it
        try:
            sim = _simulate(state.a, ms.incident, ms.grid, cfg.R, n, cfg.eta, cfg.grading)
        except (SolverError, ConfigurationError) as exc:
            raise InversionError(f"forward solve failed at k={k:g}, iteration {it}: {exc}", state) from exc
        pred = sim.intensity
        err = err_k(pred, data)
        if err < best_err:
            best_a, best_err = state.a.copy(), err
        increases = increases + 1 if err > prev_err else 0
        prev_err = err
        if err < cfg.threshold:
            status = CONVERGED
            state.history.append(IterationRecord(k, it, err, flags=(CONVERGED,)))
            break
        if increases >= cfg.max_increases:
            status = DIVERGING
            state.history.append(IterationRecord(k, it, err, flags=(DIVERGING,)))
            break
        if it >= cfg.max_inner:
            state.history.append(IterationRecord(k, it, err, flags=(ITERATION_CAP,)))
            break
        J = jacobian(sim, basis)
        resid = (pred - data).ravel()
        step = lm_step(J, resid, cfg.rho)
        unreachable = unreachable + 1 if step.unreachable else 0
        flags = (TARGET_UNREACHABLE,) if step.unreachable else ()
        if unreachable >= 2:
            status = TARGET_UNREACHABLE
            state.history.append(IterationRecord(k, it, err, step.beta, float("nan"), flags))
            break
        da, beta, raised = _admissible_step(state.a, J, resid, step, cfg.R)
        if raised:
            flags += (BETA_RAISED,)
        state.history.append(IterationRecord(k, it, err, beta, float(np.linalg.norm(da)), flags))
        logger.debug("k=%g it=%d err=%.4e beta=%.3e |da|=%.3e", k, it, err, beta, np.linalg.norm(da))
        state.a = state.a + da
        it += 1
    if status != CONVERGED and best_err < prev_err:
        # keep the best iterate of a stage that did not reach the threshold
        state.a = best_a
        err = best_err
    logger.info("k=%g: %s after %d steps, Err=%.4e", k, status, it, err)
    state.stages.append(StageSummary(k, it, err, status, n, state.a.copy()))
    if on_stage is not None:
        on_stage(state)


def recursive_newton(datasets: Sequence[MeasurementSet], config: InversionConfig | None = None, *,
                     on_stage=None) -> InversionState:
    """Reconstruct the spline coefficients from phaseless data at increasing
    wavenumbers.

    ``on_stage`` is called with the state after every wavenumber (useful for
    checkpointing).
    """
    config = config or InversionConfig()
    sets = sorted(datasets, key=lambda ms: ms.k)
    if not sets:
        raise ConfigurationError("no measurement sets given")
    kinds = {ms.kind for ms in sets}
    if len(kinds) != 1:
        raise ConfigurationError("far- and near-field data cannot be mixed")
    kind = kinds.pop()
    a0 = config.initial_guess(kind)
    if kind == FAR and not np.any(a0):
        raise ConfigurationError("far-field inversion needs a nonzero initial guess: "
                                 "the derivative of the far-field intensity vanishes at the flat surface")
    state = InversionState(a=a0)
    for idx, ms in enumerate(sets):
        state.stage = idx
        _stage(state, ms, config, on_stage)
    return state


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def write_run_log(path, history: Sequence[IterationRecord]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("# one record per inner iteration\n")
        w = csv.writer(fh)
        w.writerow(["k", "iteration", "err", "beta", "step_norm", "flags"])
        for rec in history:
            w.writerow([f"{rec.k:g}", rec.iteration, f"{rec.err:.16e}", f"{rec.beta:.16e}",
                        f"{rec.step_norm:.16e}", ";".join(rec.flags)])
    return path


def write_profile_csv(path, a, R: float = 1.0, points: int = 401, truth=None, initial=None,
                      header: dict | None = None) -> Path:
    """Reconstructed profile sampled on ``[-R, R]``; optional true and initial
    profiles as extra columns."""
    path = Path(path)
    x = np.linspace(-R, R, points)
    cols = {"x1": x, "h_rec": spline_profile(a, R=R).evaluate(x)}
    if truth is not None:
        cols["h_true"] = truth.evaluate(x)
    if initial is not None:
        cols["h_init"] = spline_profile(initial, R=R).evaluate(x)
    with path.open("w", newline="") as fh:
        for key, val in (header or {}).items():
            fh.write(f"# {key} = {val}\n")
        fh.write(f"# coeffs = {' '.join(repr(float(v)) for v in a)}\n")
        w = csv.writer(fh)
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([f"{v:.16e}" for v in row])
    return path
