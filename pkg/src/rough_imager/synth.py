"""Synthetic phaseless measurements: grids, forward simulation, noise and I/O.

A :class:`MeasurementSet` holds intensities ``|u|^2`` at one wavenumber for
every incident configuration of an experiment, either on observation angles
in ``(0, pi)`` (far field) or on a horizontal segment ``{(x1, H): |x1| <= L}``
(near field). The inversion reuses :func:`simulate` so that predicted and
synthetic data share one code path.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .forward import (DensitySolution, SystemOperator, assemble_rhs, assemble_system,
                      eval_far_field, eval_near_field, near_grid, nodes_per_arc, solve_density)
from .geometry import ConfigurationError, SurfaceProfile, build_mesh
from .waves import IncidentConfig

logger = logging.getLogger(__name__)

FAR = "far"
NEAR = "near"
KINDS = (FAR, NEAR)
NOISE_DISTRIBUTIONS = ("normal", "uniform")

# Resolution of the mesh used for synthetic data relative to the inversion mesh.
DATA_MESH_SCALE = 1.5


def far_grid(n_f: int) -> np.ndarray:
    """``n_f`` equidistant angles ``t_j = pi (j - 1/2) / n_f``, ``j = 1..n_f``."""
    if n_f < 2:
        raise ConfigurationError("far-field grid needs n_f >= 2")
    return math.pi * (np.arange(1, n_f + 1) - 0.5) / n_f


def frequencies(N: int) -> np.ndarray:
    """The odd wavenumbers ``1, 3, ..., 2N - 1``."""
    if N < 1:
        raise ConfigurationError("number of frequencies must be at least 1")
    return np.arange(1, 2 * N, 2, dtype=float)


@dataclass(frozen=True)
class MeasurementGrid:
    """Where the data live: ``n_f`` far-field angles or ``m`` points at height ``H``."""

    kind: str = FAR
    n_f: int = 200
    H: float = 1.0
    L: float = 1.0
    m: int = 200

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"measurement kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == FAR and self.n_f < 2:
            raise ConfigurationError("far-field grid needs n_f >= 2")
        if self.kind == NEAR and (self.m < 2 or not self.L > 0):
            raise ConfigurationError("near-field grid needs m >= 2 and L > 0")

    @property
    def size(self) -> int:
        return self.n_f if self.kind == FAR else self.m

    def coordinates(self) -> np.ndarray:
        """The scalar grid value written next to each datum: angle or ``x1``."""
        if self.kind == FAR:
            return far_grid(self.n_f)
        return near_grid(self.H, self.L, self.m)[:, 0]

    def header(self) -> dict:
        if self.kind == FAR:
            return {"n_f": self.n_f}
        return {"H": self.H, "L": self.L, "m": self.m}


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative noise ``|u|^2 (1 + delta zeta)`` with ``zeta`` in ``[-1, 1]``."""

    delta: float = 0.0
    seed: int = 0
    distribution: str = "normal"

    def __post_init__(self):
        if not self.delta >= 0:
            raise ConfigurationError(f"noise level must be non-negative, got {self.delta}")
        if self.distribution not in NOISE_DISTRIBUTIONS:
            raise ConfigurationError(f"noise distribution must be one of {NOISE_DISTRIBUTIONS}")


def _zeta(rng: np.random.Generator, size: int, distribution: str) -> np.ndarray:
    if distribution == "uniform":
        return rng.uniform(-1.0, 1.0, size)
    return np.clip(rng.standard_normal(size), -1.0, 1.0)


def add_noise(exact, delta: float, seed, distribution: str = "normal") -> np.ndarray:
    """Multiply each entry by ``1 + delta * zeta_j``.

    ``zeta_j`` is a standard normal draw clamped to ``[-1, 1]`` (or uniform on
    ``[-1, 1]``), one draw per entry. ``seed`` is anything accepted by
    :func:`numpy.random.default_rng`.
    """
    if not delta >= 0:
        raise ConfigurationError(f"noise level must be non-negative, got {delta}")
    if distribution not in NOISE_DISTRIBUTIONS:
        raise ConfigurationError(f"noise distribution must be one of {NOISE_DISTRIBUTIONS}")
    exact = np.asarray(exact, dtype=float)
    if delta == 0:
        return exact.copy()
    rng = np.random.default_rng(seed)
    zeta = _zeta(rng, exact.size, distribution).reshape(exact.shape)
    return exact * (1.0 + delta * zeta)


def vector_seed(seed: int, k_index: int, config_index: int) -> np.random.SeedSequence:
    """Independent stream per data vector, stable under reordering and threading."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(k_index), int(config_index)))


@dataclass(eq=False)
class Simulation:
    """Forward solutions for every incident configuration at one wavenumber."""

    op: SystemOperator
    configs: tuple[IncidentConfig, ...]
    solutions: list[DensitySolution]
    grid: MeasurementGrid
    fields: np.ndarray        # (n_d, grid size), complex

    @property
    def mesh(self):
        return self.op.mesh

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.fields) ** 2


def simulate(profile: SurfaceProfile, configs: Sequence[IncidentConfig], grid: MeasurementGrid, *,
             R: float = 1.0, n: int | None = None, eta: float | None = None, grading: int = 8,
             mesh_scale: float = 1.0) -> Simulation:
    """Solve once per configuration on a shared factorised operator and sample
    the far or near field on ``grid``."""
    configs = tuple(configs)
    if not configs:
        raise ConfigurationError("at least one incident configuration is required")
    k = configs[0].k
    if any(c.k != k for c in configs):
        raise ConfigurationError("all configurations of one simulation must share k")
    if n is None:
        n = nodes_per_arc(k, R, profile, grading=grading, scale=mesh_scale)
    mesh = build_mesh(profile, R, n, grading)
    op = assemble_system(mesh, k, eta)
    sols = [solve_density(op, assemble_rhs(mesh, c)) for c in configs]
    if grid.kind == FAR:
        angles = far_grid(grid.n_f)
        fields = np.array([eval_far_field(s, angles) for s in sols])
    else:
        fields = np.array([eval_near_field(s, c, grid.H, grid.L, grid.m) for s, c in zip(sols, configs)])
    return Simulation(op=op, configs=configs, solutions=sols, grid=grid, fields=fields)


@dataclass(eq=False)
class MeasurementSet:
    """Intensities at one wavenumber; row ``l`` of ``values`` belongs to ``incident[l]``."""

    kind: str
    k: float
    incident: tuple[IncidentConfig, ...]
    grid: MeasurementGrid
    values: np.ndarray
    noise: NoiseSpec | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape != (len(self.incident), self.grid.size):
            raise ValueError(f"values have shape {self.values.shape}, expected "
                             f"({len(self.incident)}, {self.grid.size})")

    @property
    def n_d(self) -> int:
        return len(self.incident)


def make_dataset(profile: SurfaceProfile, angle_sets: Sequence[Sequence[float]], ks: Sequence[float],
                 grid: MeasurementGrid, noise: NoiseSpec | None = None, *, R: float = 1.0,
                 eta: float | None = None, grading: int = 8,
                 mesh_scale: float = DATA_MESH_SCALE) -> list[MeasurementSet]:
    """One :class:`MeasurementSet` per wavenumber.

    ``angle_sets`` lists the incident configurations: one angle each for
    single waves, two angles for a superposition. Noise uses a separate seeded
    stream per (wavenumber, configuration) pair.
    """
    noise = noise or NoiseSpec()
    out = []
    for ik, k in enumerate(ks):
        configs = tuple(IncidentConfig(float(k), tuple(a)) for a in angle_sets)
        sim = simulate(profile, configs, grid, R=R, eta=eta, grading=grading, mesh_scale=mesh_scale)
        exact = sim.intensity
        values = np.array([add_noise(row, noise.delta, vector_seed(noise.seed, ik, l), noise.distribution)
                           for l, row in enumerate(exact)])
        prov = {"profile": profile.describe(), "R": R, "eta": sim.op.eta, "mesh_n": sim.mesh.n,
                "grading": grading, "noise_draws": "one per measurement point"}
        logger.info("k=%g: %d configurations, mesh n=%d", k, len(configs), sim.mesh.n)
        out.append(MeasurementSet(kind=grid.kind, k=float(k), incident=configs, grid=grid,
                                  values=values, noise=noise, provenance=prov))
    return out


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def write_measurements(path, ms: MeasurementSet) -> Path:
    """Delimited text: ``#`` header lines with JSON values, then rows
    ``index, grid_value, intensity_1 .. intensity_nd``."""
    path = Path(path)
    head = {"kind": ms.kind, "k": ms.k, "theta": [list(c.angles) for c in ms.incident]}
    head.update(ms.grid.header())
    if ms.noise is not None:
        head.update(delta=ms.noise.delta, seed=ms.noise.seed, distribution=ms.noise.distribution)
    head.update(ms.provenance)
    lines = [f"# {key} = {json.dumps(val)}" for key, val in head.items()]
    cols = ", ".join(f"intensity_{l + 1}" for l in range(ms.n_d))
    lines.append(f"# columns = index, {'angle' if ms.kind == FAR else 'x1'}, {cols}")
    coords = ms.grid.coordinates()
    for j in range(ms.grid.size):
        vals = ", ".join(f"{v:.16e}" for v in ms.values[:, j])
        lines.append(f"{j}, {coords[j]:.16e}, {vals}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_measurements(path) -> MeasurementSet:
    path = Path(path)
    head = {}
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            key = key.strip()
            if key != "columns":
                head[key] = json.loads(val)
        elif line.strip():
            rows.append([float(v) for v in line.split(",")])
    try:
        kind = head.pop("kind")
        k = float(head.pop("k"))
        theta = head.pop("theta")
    except KeyError as exc:
        raise ConfigurationError(f"{path}: missing header key {exc}") from None
    if kind == FAR:
        grid = MeasurementGrid(FAR, n_f=int(head.pop("n_f")))
    else:
        grid = MeasurementGrid(NEAR, H=float(head.pop("H")), L=float(head.pop("L")), m=int(head.pop("m")))
    noise = None
    if "delta" in head:
        noise = NoiseSpec(float(head.pop("delta")), int(head.pop("seed")), head.pop("distribution"))
    data = np.array(rows)
    return MeasurementSet(kind=kind, k=k, incident=tuple(IncidentConfig(k, tuple(t)) for t in theta),
                          grid=grid, values=data[:, 2:].T, noise=noise, provenance=head)


def dataset_filename(ms: MeasurementSet, index: int) -> str:
    return f"{ms.kind}_{index:02d}_k{ms.k:g}.dat"


def write_dataset(directory, sets: Sequence[MeasurementSet]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_measurements(directory / dataset_filename(ms, i), ms) for i, ms in enumerate(sets)]


def read_dataset(directory) -> list[MeasurementSet]:
    """All measurement files in ``directory``, sorted by wavenumber."""
    files = sorted(Path(directory).glob("*.dat"))
    if not files:
        raise ConfigurationError(f"no measurement files found in {directory}")
    return sorted((read_measurements(f) for f in files), key=lambda ms: ms.k)


__all__ = ["FAR", "NEAR", "MeasurementGrid", "MeasurementSet", "NoiseSpec", "Simulation", "add_noise",
           "far_grid", "frequencies", "make_dataset", "read_dataset", "read_measurements",
           "simulate", "vector_seed", "write_dataset", "write_measurements"]
