"""Reference coil and fit values used for reproduction checks.

Units are SI unless the field name says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RabiFitRow:
    z_mm: float
    amplitude: float
    offset: float
    decay: float  # s
    frequency: float  # Hz
    phase: float


# barrel inductor: T in us, f in kHz
BARREL_RABI_FITS = tuple(
    RabiFitRow(z, a, b, t * 1e-6, f * 1e3, q)
    for z, a, b, t, f, q in [
        (0.00, 5.07, -8.98, 4.37, 690, 0.61),
        (0.25, 5.69, -8.26, 6.04, 683, 0.30),
        (0.50, 4.00, -6.48, 2.17, 689, 0.56),
        (0.75, 6.60, -10.21, 5.61, 690, 0.33),
        (1.00, 5.43, -7.42, 4.74, 667, 0.33),
        (1.25, 6.92, -8.90, 2.50, 607, 0.43),
        (1.50, 6.24, -7.87, 3.56, 583, 0.22),
        (1.75, 6.08, -7.21, 2.39, 458, 0.36),
        (2.00, 5.61, -6.46, 2.89, 404, 0.31),
        (2.25, 3.53, -5.08, 2.58, 283, 0.46),
        (2.50, 2.66, -3.97, 3.14, 222, 0.29),
    ]
)

# planar system: T in ns, f in MHz
PLANAR_RABI_FITS = tuple(
    RabiFitRow(z, a, b, t * 1e-9, f * 1e6, q)
    for z, a, b, t, f, q in [
        (0.00, 133.5, -123.7, 78.6, 6.54, 0.36),
        (0.25, 191.4, -101.5, 77.9, 4.83, 0.31),
        (0.50, 121.4, -83.7, 132.2, 3.68, 0.17),
        (0.75, 98.9, -67.1, 199.5, 2.26, 0.37),
        (1.00, 61.8, -56.7, 349.3, 1.58, 0.35),
    ]
)

# (frequency Hz, frequency error %, amplitude error %)
WAVEFORM_ERRORS = ((2.838e9, 0.41, 0.67), (2.995e9, 0.41, 0.68))

# ODMR Gaussian fits: (center Hz, width Hz, branch)
ODMR_BARREL = (2.838e9, 4.732e6, "lower")
ODMR_PLANAR = (2.995e9, 7.401e6, "upper")


@dataclass(frozen=True)
class CoilComparisonRow:
    geometry: str
    n_w: int
    d_mm: float
    h_mm: float
    sigma_025: float
    sigma_060: float


COIL_COMPARISON = (
    CoilComparisonRow("A", 1, 7.8, 0.018, 3.4, 20.0),
    CoilComparisonRow("B", 1, 30.0, 3.0, 0.34, 2.9),  # dielectric resonator, comparison only
    CoilComparisonRow("C", 3, 3.0, 3.0, 0.4, 2.6),
    CoilComparisonRow("D", 2, 3.0, 1.5, 0.2, 1.49),
    CoilComparisonRow("E", 6, 4.0, 3.0, 0.1, 0.735),
    CoilComparisonRow("F", 12, 5.0, 4.0, 0.4, 2.8),
)
