"""Decaying-cosine and Gaussian-dip fits.

Rabi traces are fitted with ``A exp(-t/T) cos(2 pi f t + q) + B``; ODMR
dips with ``baseline - contrast * exp(-(f - center)**2 / (2 width**2))``
(``width`` is the Gaussian standard deviation).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import hilbert

from nvcoil.fieldcore import DomainError

MAX_ITERATIONS = 200
STEP_TOLERANCE = 1e-10


class FitError(DomainError):
    """Fit failed; ``best`` holds the best-so-far parameters when available."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NoOscillationError(FitError):
    pass


class NoDipError(FitError):
    pass


@dataclass(frozen=True)
class FitResult:
    amplitude: float
    offset: float
    decay: float
    frequency: float
    phase: float
    residual_rms: float
    converged: bool = True
    iterations: int = 0

    @property
    def delta_zeta(self) -> float:
        return delta_zeta(self.frequency, self.decay)

    def to_dict(self) -> dict:
        return {
            "a": self.amplitude,
            "b": self.offset,
            "t_us": self.decay * 1e6,
            "f_mhz": self.frequency * 1e-6,
            "q_rad": self.phase,
            "residual_rms": self.residual_rms,
            "delta_zeta": self.delta_zeta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class OdmrFit:
    center: float
    width: float
    contrast: float
    baseline: float
    residual_rms: float
    width_convention: str = field(default="sigma")

    @property
    def fwhm(self) -> float:
        return 2.0 * math.sqrt(2.0 * math.log(2.0)) * self.width

    def to_dict(self) -> dict:
        return {
            "center_ghz": self.center * 1e-9,
            "width_mhz": self.width * 1e-6,
            "width_convention": self.width_convention,
            "fwhm_mhz": self.fwhm * 1e-6,
            "contrast": self.contrast,
            "baseline": self.baseline,
            "residual_rms": self.residual_rms,
        }


def delta_zeta(frequency: float, decay: float) -> float:
    """Lorentzian width ``1 / (2 pi f T)`` of the relative Rabi-frequency spread."""
    if not (frequency > 0 and decay > 0):
        raise DomainError("frequency and decay must be positive")
    if math.isinf(decay):
        return 0.0
    return 1.0 / (2.0 * math.pi * frequency * decay)


def damped_cosine(t, amplitude, offset, decay, frequency, phase):
    t = np.asarray(t, dtype=float)
    return amplitude * np.exp(-t / decay) * np.cos(2 * np.pi * frequency * t + phase) + offset


def _prepare(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DomainError("x and y must have equal lengths")
    if x.size < 8:
        raise DomainError("need at least 8 samples")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise DomainError("non-finite input")
    order = np.argsort(x, kind="stable")
    return x[order], y[order]


def _spectral_seed(u, v):
    """Peak of the zero-padded spectrum on a uniform resampling of (u, v).

    No taper is applied: a decaying signal carries most of its energy at the
    start of the record, which a symmetric window would suppress.
    """
    n = u.size
    grid = np.linspace(u[0], u[-1], n)
    vg = np.interp(grid, u, v) - np.mean(v)
    dt = grid[1] - grid[0]
    nfft = 1 << int(math.ceil(math.log2(16 * n)))
    spec = np.fft.rfft(vg, nfft)
    freqs = np.fft.rfftfreq(nfft, dt)
    power = np.abs(spec) ** 2
    power[0] = 0.0
    k = int(np.argmax(power))
    # parabolic interpolation on log power
    if 0 < k < power.size - 1 and np.all(power[k - 1 : k + 2] > 0):
        lp = np.log(power[k - 1 : k + 2])
        denom = lp[0] - 2 * lp[1] + lp[2]
        shift = 0.5 * (lp[0] - lp[2]) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return (k + shift) * (freqs[1] - freqs[0]), power, k


def _envelope_decay(u, v, offset):
    """Decay constant from a line fit to the log of the analytic-signal envelope."""
    env = np.abs(hilbert(v - offset))
    n = u.size
    lo, hi = n // 10, n - n // 10
    uu, ee = u[lo:hi], env[lo:hi]
    good = ee > 1e-12 * max(ee.max(), 1e-300)
    if good.sum() < 3:
        return None
    slope, _ = np.polyfit(uu[good], np.log(ee[good]), 1)
    if slope >= 0:
        return None
    return -1.0 / slope


def fit_decaying_cosine(times, values) -> FitResult:
    """Least-squares fit of ``A exp(-t/T) cos(2 pi f t + q) + B``.

    Seeds: f from the spectral peak, T from the log-envelope slope, q and A
    from a linear solve at the seeded (f, T), B from the mean. Times and
    values are rescaled to unit span internally; the result is reported with
    ``A > 0`` and ``q`` in ``(-pi, pi]``.
    """
    t, y = _prepare(times, values)
    t0, span = float(t[0]), float(t[-1] - t[0])
    if not span > 0:
        raise DomainError("times must span a positive interval")
    y_center = float(np.mean(y))
    y_scale = float(np.max(np.abs(y - y_center)))
    if not y_scale > 0:
        raise NoOscillationError("constant signal: no oscillation")
    u = (t - t0) / span
    v = (y - y_center) / y_scale

    f_seed, power, k = _spectral_seed(u, v)
    noise_floor = np.median(power[1:]) if power.size > 2 else 0.0
    if power[k] <= 5.0 * noise_floor:
        raise NoOscillationError("no spectral peak above the noise floor")
    if f_seed < 1.0:
        raise NoOscillationError("spectral peak below one period per record: no oscillation")

    decay_seed = _envelope_decay(u, v, float(np.mean(v)))
    if decay_seed is None or not np.isfinite(decay_seed):
        decay_seed = 1.0
    decay_seed = float(np.clip(decay_seed, 0.05, 1e3))

    # amplitude, phase and offset are linear once (f, T) are fixed
    env = np.exp(-u / decay_seed)
    basis = np.column_stack(
        [env * np.cos(2 * np.pi * f_seed * u), -env * np.sin(2 * np.pi * f_seed * u), np.ones_like(u)]
    )
    (c1, c2, b0), *_ = np.linalg.lstsq(basis, v, rcond=None)
    a0 = math.hypot(c1, c2)
    q0 = math.atan2(c2, c1)
    # log decay rate keeps T positive
    p0 = np.array([a0, b0, -math.log(decay_seed), f_seed, q0])

    def residual(p):
        a, b, log_rate, f, q = p
        return a * np.exp(-u * np.exp(log_rate)) * np.cos(2 * np.pi * f * u + q) + b - v

    def jacobian(p):
        a, b, log_rate, f, q = p
        rate = np.exp(log_rate)
        e = np.exp(-u * rate)
        arg = 2 * np.pi * f * u + q
        c, s = np.cos(arg), np.sin(arg)
        return np.column_stack([e * c, np.ones_like(u), -a * e * c * u * rate, -a * e * s * 2 * np.pi * u, -a * e * s])

    sol = least_squares(
        residual,
        p0,
        jac=jacobian,
        method="lm",
        xtol=STEP_TOLERANCE,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=MAX_ITERATIONS * (p0.size + 1),
        x_scale="jac",
    )
    a, b, log_rate, f, q = (float(val) for val in sol.x)
    if a < 0:
        a, q = -a, q + math.pi
    q = math.remainder(q, 2 * math.pi)
    decay = span * math.exp(-log_rate) if log_rate > -700 else math.inf
    frequency = f / span
    # undo the t0 shift: cos(2 pi f (t - t0) + q) = cos(2 pi f t + q')
    q = math.remainder(q - 2 * math.pi * frequency * t0, 2 * math.pi)
    amplitude = a * y_scale * math.exp(t0 / decay) if t0 else a * y_scale
    result = FitResult(
        amplitude,
        b * y_scale + y_center,
        decay,
        frequency,
        q,
        float(np.sqrt(np.mean(sol.fun**2)) * y_scale),
        bool(sol.success and frequency > 0 and 0 < decay < math.inf and math.isfinite(amplitude)),
        int(sol.nfev),
    )
    if not result.converged:
        raise FitError(f"decaying-cosine fit did not converge: {sol.message}", best=result)
    return result


def gaussian_dip(f, center, width, contrast, baseline):
    f = np.asarray(f, dtype=float)
    return baseline - contrast * np.exp(-0.5 * ((f - center) / width) ** 2)


def fit_gaussian_dip(frequencies, values) -> OdmrFit:
    """Fit a single Gaussian ODMR dip (width = Gaussian sigma, FWHM also reported)."""
    x, y = _prepare(frequencies, values)
    mid, half = float(0.5 * (x[0] + x[-1])), float(0.5 * (x[-1] - x[0]))
    if not half > 0:
        raise DomainError("frequencies must span a positive interval")
    u = (x - mid) / half
    n_edge = max(2, x.size // 10)
    edges = np.concatenate([y[:n_edge], y[-n_edge:]])
    baseline0 = float(np.median(edges))
    scale = float(np.max(np.abs(y - baseline0)))
    if not scale > 0:
        raise NoDipError("flat data: no dip")
    depth = (baseline0 - y) / scale
    noise = float(np.std(np.diff(edges)) / math.sqrt(2)) / scale
    if depth.max() <= max(3.0 * noise, 1e-9):
        raise NoDipError("no dip below the baseline above noise")

    weight = np.clip(depth, 0.0, None)
    center0 = float(np.sum(weight * u) / np.sum(weight))
    contrast0 = float(depth.max())
    du = np.gradient(u)
    width0 = float(np.sum(weight * du) / (contrast0 * math.sqrt(2 * math.pi)))
    width0 = min(max(width0, 2 * float(np.min(np.diff(u)))), 1.0)
    v = (y - baseline0) / scale

    def residual(p):
        c, log_w, a, b = p
        return b - a * np.exp(-0.5 * ((u - c) / np.exp(log_w)) ** 2) - v

    def jacobian(p):
        c, log_w, a, b = p
        w = np.exp(log_w)
        g = np.exp(-0.5 * ((u - c) / w) ** 2)
        return np.column_stack([-a * g * (u - c) / w**2, -a * g * ((u - c) / w) ** 2, -g, np.ones_like(u)])

    sol = least_squares(
        residual,
        np.array([center0, math.log(width0), contrast0, 0.0]),
        jac=jacobian,
        method="lm",
        xtol=STEP_TOLERANCE,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=MAX_ITERATIONS * 5,
        x_scale="jac",
    )
    c, log_w, a, b = (float(val) for val in sol.x)
    fit = OdmrFit(
        mid + c * half,
        math.exp(log_w) * half,
        a * scale,
        baseline0 + b * scale,
        float(np.sqrt(np.mean(sol.fun**2)) * scale),
    )
    if not sol.success or a <= 0:
        raise FitError(f"Gaussian dip fit did not converge: {sol.message}", best=fit)
    return fit


def waveform_error_stats(cycles):
    """Amplitude and frequency errors (percent) of a sampled waveform.

    ``cycles`` is a sequence of ``(peak_to_peak, period)`` pairs; each error is
    ``100 * std / mean`` (sample standard deviation) of its series, with the
    frequency series taken as ``1 / period``.
    """
    arr = np.asarray(cycles, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("cycles must be (peak_to_peak, period) pairs")
    if arr.shape[0] < 2:
        raise DomainError("need at least 2 cycles")
    if np.any(arr[:, 1] <= 0):
        raise DomainError("periods must be positive")
    amp = arr[:, 0]
    freq = 1.0 / arr[:, 1]
    out = []
    for series in (amp, freq):
        mean = series.mean()
        if mean == 0:
            raise DomainError("zero mean")
        out.append(float(100.0 * series.std(ddof=1) / abs(mean)))
    return out[0], out[1]


def read_signal_csv(path, x_column=None):
    """Read a two-column CSV with a header (``t_us,signal`` or ``f_ghz,signal``).

    Returns ``(x_si, values, column_name)`` with x converted to seconds or hertz.
    """
    scales = {"t_us": 1e-6, "f_ghz": 1e9, "t_s": 1.0, "f_hz": 1.0}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DomainError(f"{path}: empty file") from None
        if len(header) < 2 or header[0] not in scales or header[1] != "signal":
            raise DomainError(f"{path}: expected header t_us,signal or f_ghz,signal, got {','.join(header)}")
        if x_column is not None and header[0] != x_column:
            raise DomainError(f"{path}: expected first column {x_column}, got {header[0]}")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except (ValueError, IndexError):
                raise DomainError(f"{path}:{lineno}: malformed row {row!r}") from None
    return np.array(xs) * scales[header[0]], np.array(ys), header[0]
