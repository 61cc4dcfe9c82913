"""Incident plane waves and their mirror images in the plane x2 = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class IncidentConfig:
    """Wavenumber plus one or two incidence angles in ``(-pi/2, pi/2)``.

    Direction ``d = (sin t, -cos t)`` points downward; its mirror image is
    ``d' = (sin t, cos t)``. Several angles mean a superposition of
    unit-amplitude plane waves.
    """

    k: float
    angles: tuple[float, ...]

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(self.angles))
        object.__setattr__(self, "angles", angles)
        if not self.k > 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if not 1 <= len(angles) <= 2:
            raise ValueError("one or two incidence angles expected")
        if any(not -math.pi / 2 < a < math.pi / 2 for a in angles):
            raise ValueError("incidence angles must lie in (-pi/2, pi/2)")
        if len(angles) == 2 and angles[0] == angles[1]:
            raise ValueError("the two incidence directions must differ")

    @property
    def directions(self) -> np.ndarray:
        a = np.array(self.angles)
        return np.stack([np.sin(a), -np.cos(a)], axis=1)

    @property
    def reflected_directions(self) -> np.ndarray:
        a = np.array(self.angles)
        return np.stack([np.sin(a), np.cos(a)], axis=1)

    def with_k(self, k: float) -> "IncidentConfig":
        return IncidentConfig(k, self.angles)

    def single(self) -> list["IncidentConfig"]:
        """The individual plane waves making up this superposition."""
        return [IncidentConfig(self.k, (a,)) for a in self.angles]


def _phases(cfg: IncidentConfig, x, dirs: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.exp(1j * cfg.k * (x @ dirs.T))


def incident(cfg: IncidentConfig, x) -> np.ndarray:
    return _phases(cfg, x, cfg.directions).sum(axis=-1)


def reflected(cfg: IncidentConfig, x) -> np.ndarray:
    return -_phases(cfg, x, cfg.reflected_directions).sum(axis=-1)


def incident_plus_reflected(cfg: IncidentConfig, x) -> np.ndarray:
    """Field of the unperturbed plane; vanishes identically on x2 = 0."""
    return incident(cfg, x) + reflected(cfg, x)


def grad_incident_plus_reflected(cfg: IncidentConfig, x) -> np.ndarray:
    """Analytic gradient of :func:`incident_plus_reflected`, shape ``(..., 2)``."""
    d = cfg.directions
    dr = cfg.reflected_directions
    e = _phases(cfg, x, d)
    er = _phases(cfg, x, dr)
    return 1j * cfg.k * (e @ d - er @ dr)


def make_config(k: float, angles: Sequence[float] | float) -> IncidentConfig:
    return IncidentConfig(float(k), tuple(np.atleast_1d(angles)))
