"""Ensemble Rabi signals, resonance/bias conversion and reference subtraction.

The ensemble signal averages ``cos(Omega(zeta) t)`` with
``Omega(zeta) = Omega0 (1 + zeta)``. A Lorentzian ``p(zeta)`` of half-width
``delta_zeta`` integrates to the exponentially damped cosine
``A exp(-t/T_R) cos(Omega0 t)`` with ``T_R = 1 / (Omega0 delta_zeta)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from nvcoil.fieldcore import DomainError

DEFAULT_TRUNCATION = 1000.0
DEFAULT_NODES = 200_001


@dataclass(frozen=True)
class NvConstants:
    zero_field_split: float = 2.87e9
    gyromagnetic: float = 2.8024e10  # gamma / 2pi, Hz/T

    def __post_init__(self):
        if not (self.zero_field_split > 0 and self.gyromagnetic > 0):
            raise DomainError("NV constants must be positive")


@dataclass(frozen=True)
class RabiModel:
    omega0: float
    delta_zeta: float = 0.0
    amplitude: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError("omega0 must be positive")
        if not self.delta_zeta >= 0:
            raise DomainError("delta_zeta must be >= 0")

    @property
    def decay_time(self) -> float:
        """T_R = 1 / (omega0 * delta_zeta); infinite for delta_zeta = 0."""
        if self.delta_zeta == 0:
            return math.inf
        return 1.0 / (self.omega0 * self.delta_zeta)

    @classmethod
    def from_fit(cls, frequency, decay, amplitude=1.0, offset=0.0):
        """Model with Rabi frequency ``frequency`` (Hz) and decay constant ``decay`` (s)."""
        omega0 = 2 * math.pi * frequency
        return cls(omega0, 1.0 / (omega0 * decay), amplitude, offset)


def rabi_closed_form(model: RabiModel, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    envelope = np.exp(-t * model.omega0 * model.delta_zeta)
    return model.amplitude * envelope * np.cos(model.omega0 * t) + model.offset


def rabi_lorentzian_numeric(
    model: RabiModel,
    times,
    truncation: float = DEFAULT_TRUNCATION,
    n_nodes: int = DEFAULT_NODES,
) -> np.ndarray:
    """Quadrature of the Lorentzian ensemble over ``|zeta| <= truncation * delta_zeta``.

    The density is renormalised over the truncated interval, so clipping the
    tails biases the signal upward by about ``2 / (pi * truncation)`` of the
    envelope: a truncation of 1000 keeps the bias below 1e-3.
    """
    if truncation < 10:
        raise DomainError("truncation must be >= 10 half-widths")
    if n_nodes < 1001 or n_nodes % 2 == 0:
        raise DomainError("n_nodes must be odd and >= 1001")
    if not model.delta_zeta > 0:
        raise DomainError("numeric Lorentzian ensemble needs delta_zeta > 0")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    width = model.delta_zeta
    zeta = np.linspace(-truncation * width, truncation * width, n_nodes)
    density = (width / math.pi) / (zeta**2 + width**2)
    density /= simpson(density, x=zeta)

    out = np.empty_like(t)
    # chunk over time to bound memory at large node counts
    chunk = max(1, 4_000_000 // n_nodes)
    for start in range(0, t.size, chunk):
        tt = t[start : start + chunk, None]
        out[start : start + chunk] = simpson(density * np.cos(model.omega0 * (1.0 + zeta) * tt), x=zeta, axis=1)
    result = model.amplitude * out + model.offset
    return result.reshape(np.shape(times)) if np.ndim(times) else result[0]


def _field_map_frequencies(samples, constants, drive_scale, nv_axis_angle):
    if nv_axis_angle is None:
        mags = np.array([s.magnitude for s in samples], dtype=float)
    else:
        # field component perpendicular to an NV axis lying in the r-z plane
        sn, cs = math.sin(nv_axis_angle), math.cos(nv_axis_angle)
        br = np.array([s.br for s in samples])
        bz = np.array([s.bz for s in samples])
        par = br * sn + bz * cs
        mags = np.hypot(np.abs(br - par * sn), np.abs(bz - par * cs))
    return 2 * math.pi * constants.gyromagnetic * drive_scale * mags


def _check_weights(samples, weights):
    if weights is None:
        weights = np.ones(len(samples))
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(samples),):
        raise DomainError("weights and samples must have matching lengths")
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")
    total = w.sum()
    if not total > 0:
        raise DomainError("total weight must be positive")
    return w / total


def rabi_from_field_map(
    samples,
    weights=None,
    constants: NvConstants | None = None,
    drive_scale: float = 1.0,
    times=(),
    nv_axis_angle: float | None = None,
) -> np.ndarray:
    """Weighted ensemble ``sum w_i cos(Omega_i t) / sum w_i`` with ``Omega_i = 2 pi gamma |B_i|``.

    ``nv_axis_angle`` (radians from the z axis, in the r-z plane) switches from
    the full magnitude to the component perpendicular to that axis.
    """
    constants = constants or NvConstants()
    w = _check_weights(samples, weights)
    omega = _field_map_frequencies(samples, constants, drive_scale, nv_axis_angle)
    t = np.asarray(times, dtype=float)
    return np.cos(np.multiply.outer(t, omega)) @ w


def field_map_envelope(samples, weights=None, constants=None, drive_scale=1.0, times=(), nv_axis_angle=None):
    """Envelope ``|sum w_i exp(i Omega_i t)| / sum w_i`` of the ensemble signal."""
    constants = constants or NvConstants()
    w = _check_weights(samples, weights)
    omega = _field_map_frequencies(samples, constants, drive_scale, nv_axis_angle)
    t = np.asarray(times, dtype=float)
    return np.abs(np.exp(1j * np.multiply.outer(t, omega)) @ w)


def resonance_to_bias(resonance: float, branch: str = "lower", constants: NvConstants | None = None) -> float:
    """Bias field B_z (tesla) from an ODMR resonance: ``f = D -+ gamma B_z``."""
    constants = constants or NvConstants()
    d = constants.zero_field_split
    if branch == "lower":
        if resonance > d:
            raise DomainError(f"lower branch needs resonance <= D ({d:g} Hz)")
    elif branch == "upper":
        if resonance < d:
            raise DomainError(f"upper branch needs resonance >= D ({d:g} Hz)")
    else:
        raise DomainError(f"branch must be 'lower' or 'upper', got {branch!r}")
    return abs(resonance - d) / constants.gyromagnetic


def bias_to_resonance(bias: float, branch: str = "lower", constants: NvConstants | None = None) -> float:
    constants = constants or NvConstants()
    if not bias >= 0:
        raise DomainError("bias field must be >= 0")
    sign = -1.0 if branch == "lower" else 1.0
    return constants.zero_field_split + sign * constants.gyromagnetic * bias


def baseline_correct(signal, reference) -> np.ndarray:
    """Subtract a reference trace (measured without microwaves) from a signal."""
    s = np.asarray(signal, dtype=float)
    r = np.asarray(reference, dtype=float)
    if s.shape != r.shape:
        raise DomainError("signal and reference must have equal lengths")
    return s - r


def signal_csv(times, values) -> str:
    """CSV ``t_us,signal``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_us", "signal"])
    for t, v in zip(times, values):
        w.writerow([repr(float(t) * 1e6), repr(float(v))])
    return buf.getvalue()
