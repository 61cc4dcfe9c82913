"""Phaseless imaging of locally rough surfaces.

Forward solver for time-harmonic Dirichlet scattering by a locally perturbed
plane, plus a multi-frequency regularised Newton reconstruction from
intensity-only far-field or near-field data.
"""

__version__ = "0.1.0"
