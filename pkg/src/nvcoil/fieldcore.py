"""Quasi-static field of circular current filaments.

Each filament carries a sinusoidal current represented as a phasor
``I * exp(1j * phase)``; fields are complex phasors in tesla. The
off-axis loop field uses complete elliptic integrals evaluated with the
arithmetic-geometric mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from nvcoil.geometry import CoilGeometry

MU0 = 4.0e-7 * math.pi
LIGHTSPEED = 2.99792458e8
LIGHTSPEED_ROUNDED = 3.0e8

SINGULAR_DISTANCE = 1e-9


class DomainError(ValueError):
    """Input outside the domain of a formula."""


class SingularityError(DomainError):
    """Field requested on (or within 1 nm of) a current filament."""


@dataclass(frozen=True)
class LoopTurn:
    """One circular current filament coaxial with the z axis."""

    radius: float
    z_pos: float = 0.0
    current: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainError(f"radius must be positive, got {self.radius!r}")
        if not (self.current >= 0 and math.isfinite(self.current)):
            raise DomainError(f"current must be >= 0, got {self.current!r}")
        if not (math.isfinite(self.phase) and math.isfinite(self.z_pos)):
            raise DomainError("z_pos and phase must be finite")

    @property
    def phasor(self) -> complex:
        return self.current * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class FieldSample:
    """Field phasor at a single point (r, z)."""

    r: float
    z: float
    br: complex
    bz: complex

    @property
    def magnitude(self) -> float:
        # peak amplitude of the phasor, not RMS
        return math.hypot(abs(self.br), abs(self.bz))


@dataclass(frozen=True)
class DriveSpec:
    """Source parameters shared by all turns of a geometry."""

    power: float = 10.0
    impedance: float = 50.0
    frequency: float = 2.87e9
    lightspeed: float = LIGHTSPEED

    def __post_init__(self):
        if not self.power >= 0:
            raise DomainError(f"power must be >= 0, got {self.power!r}")
        for name in ("impedance", "frequency", "lightspeed"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @property
    def wavelength(self) -> float:
        return self.lightspeed / self.frequency

    @property
    def current(self) -> float:
        return source_current(self.power, self.impedance)


# ---------------------------------------------------------------------------
# elliptic integrals


def _agm(m, tol=1e-16, max_iter=40):
    """Return K(m) and the tail sum ``S' = sum_{n>=1} 2**(n-1) c_n**2``.

    ``E = K * (1 - m/2 - S')``. Keeping the tail separate avoids the
    cancellation in ``E - K`` for small ``m``.
    """
    m = np.asarray(m, dtype=float)
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m)
    c = m / (2.0 * (1.0 + b))  # (a0 - b0)/2 without cancellation
    tail = np.zeros_like(m)
    weight = 1.0
    for _ in range(max_iter):
        tail = tail + weight * c * c
        a_next = 0.5 * (a + b)
        b = np.sqrt(a * b)
        a = a_next
        c = c * c / (2.0 * (a + b))
        weight *= 2.0
        # c_n = (a_{n-1} - b_{n-1}) / 2 shrinks quadratically; a is exact to ~c
        if np.all(c <= tol * a):
            break
    else:  # pragma: no cover - quadratic convergence makes this unreachable
        raise RuntimeError("AGM did not converge")
    k = math.pi / (2.0 * a)
    return k, tail


def elliptic_ke(m):
    """Complete elliptic integrals K(m) and E(m), parameter convention ``m = k**2``.

    Accepts scalars or arrays. Raises DomainError outside ``0 <= m < 1``.
    """
    arr = np.asarray(m, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr >= 1):
        raise DomainError("elliptic parameter m must satisfy 0 <= m < 1")
    k, tail = _agm(arr)
    e = k * (1.0 - 0.5 * arr - tail)
    if arr.ndim == 0:
        return float(k), float(e)
    return k, e


# ---------------------------------------------------------------------------
# loop fields


def loop_field_arrays(turn: LoopTurn, r, z):
    """Vectorised loop field: returns complex arrays (br, bz) with the shape of r, z.

    Raises SingularityError if any point lies within 1 nm of the filament.
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    r, z = np.broadcast_arrays(r, z)
    if np.any(r < 0):
        raise DomainError("radial coordinate must be >= 0")
    a = turn.radius
    dz = z - turn.z_pos
    dist2 = (r - a) ** 2 + dz**2
    if np.any(dist2 <= SINGULAR_DISTANCE**2):
        raise SingularityError(
            f"evaluation point on the filament at r={a:g} m, z={turn.z_pos:g} m"
        )
    s = a * a + r * r + dz * dz
    beta2 = s + 2.0 * a * r
    beta = np.sqrt(beta2)
    m = 4.0 * a * r / beta2
    k, tail = _agm(m)
    c = MU0 * turn.current / math.pi

    bz = c * k / (2.0 * dist2 * beta) * ((a * a - r * r - dz * dz) * (1.0 - 0.5 * m - tail) + dist2)
    with np.errstate(invalid="ignore", divide="ignore"):
        br = c * dz * k / (2.0 * dist2 * beta) * (m * a - s * tail / r)
    br = np.where(r > 0, br, 0.0)

    rot = complex(math.cos(turn.phase), math.sin(turn.phase))
    return br * rot, bz * rot


def loop_field(turn: LoopTurn, r: float, z: float) -> FieldSample:
    """Field of one filament at the point (r, z)."""
    br, bz = loop_field_arrays(turn, r, z)
    return FieldSample(float(r), float(z), complex(br), complex(bz))


def on_axis_bz(turn: LoopTurn, z):
    """Closed-form axial field on r = 0 (phase applied)."""
    a = turn.radius
    dz = np.asarray(z, dtype=float) - turn.z_pos
    return MU0 * turn.phasor * a * a / (2.0 * (a * a + dz * dz) ** 1.5)


def superpose_arrays(turns, r, z):
    """Complex phasor sum of all turns on broadcast arrays r, z."""
    r, z = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(z, dtype=float))
    br = np.zeros(r.shape, dtype=complex)
    bz = np.zeros(r.shape, dtype=complex)
    for turn in turns:
        dbr, dbz = loop_field_arrays(turn, r, z)
        br += dbr
        bz += dbz
    return br, bz


def field_magnitude(geometry: CoilGeometry, r, z):
    """Peak field magnitude |B| of a geometry on broadcast arrays r, z."""
    br, bz = superpose_arrays(geometry.turns, r, z)
    return np.hypot(np.abs(br), np.abs(bz))


def superpose(geometry: CoilGeometry, r: float, z: float) -> FieldSample:
    """Field of a whole geometry at one point."""
    br, bz = superpose_arrays(geometry.turns, r, z)
    return FieldSample(float(r), float(z), complex(br), complex(bz))


# ---------------------------------------------------------------------------
# RF bookkeeping


def source_current(power: float, impedance: float) -> float:
    """Peak drive current ``sqrt(2 P / Z)`` in amperes."""
    if not impedance > 0:
        raise DomainError(f"impedance must be positive, got {impedance!r}")
    if not power >= 0:
        raise DomainError(f"power must be >= 0, got {power!r}")
    return math.sqrt(2.0 * power / impedance)


def phase_lag(turn_radius: float, wavelength: float) -> float:
    """Phase lag of a winding of radius R: ``(2 pi R / wavelength) * 2 pi``."""
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength!r}")
    if not turn_radius >= 0:
        raise DomainError(f"turn radius must be >= 0, got {turn_radius!r}")
    return (2.0 * math.pi * turn_radius / wavelength) * 2.0 * math.pi


def rf_constants(f0: float, delta_f: float, lightspeed: float = LIGHTSPEED):
    """Return ``(Q, tau_c, wavelength)`` for centre frequency f0 and bandwidth delta_f.

    ``Q = f0 / delta_f``, ``tau_c = Q / (pi f0)``, ``wavelength = c / f0``.
    """
    for name, value in (("f0", f0), ("delta_f", delta_f), ("lightspeed", lightspeed)):
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value!r}")
    q = f0 / delta_f
    return q, q / (math.pi * f0), lightspeed / f0
