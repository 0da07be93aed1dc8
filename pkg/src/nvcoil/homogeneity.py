"""Peak-to-peak inhomogeneity over the inner cylindrical domain (ICD).

The ICD is the cylinder of diameter ``D_MF`` and half-length ``h`` centred on
the coil axis. ``sigma_pp = 2 * 100% * (Bmax - Bmin) / (Bmax + Bmin)`` is
evaluated over a uniform (z, r) grid covering it.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from nvcoil.fieldcore import DomainError, field_magnitude
from nvcoil.geometry import CoilGeometry

TABLE_EXTENTS = (0.25e-3, 0.6e-3)


@dataclass(frozen=True)
class IcdSpec:
    diameter: float = 50e-6
    half_length: float = 0.25e-3
    n_axial: int = 101
    n_radial: int = 11

    def __post_init__(self):
        if not self.diameter > 0:
            raise DomainError("ICD diameter must be positive")
        if not self.half_length > 0:
            raise DomainError("ICD half_length must be positive")
        if self.n_axial < 3 or self.n_axial % 2 == 0:
            raise DomainError(f"n_axial must be odd and >= 3, got {self.n_axial}")
        if self.n_radial < 2:
            raise DomainError(f"n_radial must be >= 2, got {self.n_radial}")

    def refined(self) -> IcdSpec:
        """Grid with every interval halved (2n - 1 points per axis)."""
        return IcdSpec(self.diameter, self.half_length, 2 * self.n_axial - 1, 2 * self.n_radial - 1)


@dataclass(frozen=True)
class HomogeneityProfile:
    axis: str
    half_lengths: tuple[float, ...]
    sigma_pp: tuple[float, ...]
    b_center: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["half_length_mm", "sigma_pp_percent"])
        for h, s in zip(self.half_lengths, self.sigma_pp):
            w.writerow([f"{h * 1e3:.6g}", f"{s:.9g}"])
        return buf.getvalue()


def sigma_pp(magnitudes) -> float:
    """Peak-to-peak spread of field magnitudes, in percent."""
    b = np.asarray(magnitudes, dtype=float).ravel()
    if b.size == 0:
        raise DomainError("sigma_pp needs at least one magnitude")
    if not np.all(b > 0):
        raise DomainError("sigma_pp needs strictly positive magnitudes")
    hi, lo = b.max(), b.min()
    return float(200.0 * (hi - lo) / (hi + lo))


def icd_samples(spec: IcdSpec) -> np.ndarray:
    """(n_axial * n_radial, 2) array of (r, z) points, z-major order."""
    z = np.linspace(-spec.half_length, spec.half_length, spec.n_axial)
    z[spec.n_axial // 2] = 0.0
    r = np.linspace(0.0, spec.diameter / 2, spec.n_radial)
    zz, rr = np.meshgrid(z, r, indexing="ij")
    return np.column_stack([rr.ravel(), zz.ravel()])


def icd_sigma(geometry: CoilGeometry, spec: IcdSpec) -> float:
    pts = icd_samples(spec)
    return sigma_pp(field_magnitude(geometry, pts[:, 0], pts[:, 1]))


def _nested_grid(step, extents):
    """Nonnegative coordinates k*step up to max(extents), merged with the extents."""
    top = max(extents)
    n = int(np.floor(top / step * (1 + 1e-12))) + 1
    pts = np.concatenate([np.arange(n) * step, np.asarray(extents, dtype=float)])
    pts = np.unique(pts)
    # drop near-duplicates created by the merge
    keep = np.concatenate([[True], np.diff(pts) > 1e-12 * top])
    return pts[keep]


def homogeneity_profile(
    geometry: CoilGeometry,
    spec: IcdSpec,
    axis: str = "axial",
    extents=None,
    on_axis: bool = False,
) -> HomogeneityProfile:
    """sigma_pp of the ICD truncated to each extent.

    A single sample grid is built at the spacing of ``spec`` and covering the
    largest extent; each extent uses the subset of that grid inside it, so
    the profile is nondecreasing by construction.

    Parameters
    ----------
    axis : {"axial", "radial"}
        ``axial`` truncates the cylinder to ``|z| <= extent`` (all radii up to
        ``spec.diameter / 2``, or only r = 0 if ``on_axis``); ``radial`` samples
        the line z = 0 with ``r <= extent``.
    extents : sequence of float
        Positive, ascending, in metres. Defaults to ``spec.half_length``.
    """
    if extents is None:
        extents = [spec.half_length]
    extents = [float(e) for e in extents]
    if not extents or any(e <= 0 for e in extents):
        raise DomainError("extents must be positive")
    if any(b <= a for a, b in zip(extents, extents[1:])):
        raise DomainError("extents must be strictly ascending")

    if axis == "axial":
        dz = 2 * spec.half_length / (spec.n_axial - 1)
        zpos = _nested_grid(dz, extents)
        z = np.concatenate([-zpos[:0:-1], zpos])
        r = np.array([0.0]) if on_axis else np.linspace(0.0, spec.diameter / 2, spec.n_radial)
        zz, rr = np.meshgrid(z, r, indexing="ij")
        b = field_magnitude(geometry, rr, zz)
        coord = np.abs(z)
    elif axis == "radial":
        dr = (spec.diameter / 2) / (spec.n_radial - 1)
        r = _nested_grid(dr, extents)
        b = field_magnitude(geometry, r, np.zeros_like(r))[:, None]
        coord = r
    else:
        raise DomainError(f"axis must be 'axial' or 'radial', got {axis!r}")

    b_center = float(field_magnitude(geometry, 0.0, 0.0))
    sig = []
    for e in extents:
        mask = coord <= e * (1 + 1e-12)
        sig.append(sigma_pp(b[mask]))
    return HomogeneityProfile(axis, tuple(extents), tuple(sig), b_center)


@dataclass(frozen=True)
class ReportRow:
    name: str
    n_w: int
    d_mm: float
    h_mm: float
    sigma_025: float
    sigma_060: float
    b_center: float


def table_report(geometries, spec: IcdSpec | None = None) -> list[ReportRow]:
    """Comparison rows: sigma_pp over the ICD for |z| < 0.25 mm and |z| < 0.6 mm."""
    geometries = list(geometries)
    if not geometries:
        raise DomainError("table_report needs at least one geometry")
    spec = spec or IcdSpec()
    rows = []
    for g in geometries:
        s025, s060 = (icd_sigma(g, IcdSpec(spec.diameter, h, spec.n_axial, spec.n_radial)) for h in TABLE_EXTENTS)
        rows.append(
            ReportRow(
                g.name,
                g.n_windings,
                g.envelope[0] * 1e3,
                g.envelope[1] * 1e3,
                s025,
                s060,
                float(field_magnitude(g, 0.0, 0.0)),
            )
        )
    return rows


REPORT_HEADER = ["name", "n_w", "d_mm", "h_mm", "sigma_025", "sigma_060"]


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for row in rows:
        w.writerow([row.name, row.n_w, f"{row.d_mm:g}", f"{row.h_mm:g}", f"{row.sigma_025:.6g}", f"{row.sigma_060:.6g}"])
    return buf.getvalue()


def report_text(rows) -> str:
    lines = [f"{'geometry':<10}{'N_w':>5}{'D x H, mm':>14}{'|z|<0.25 mm, %':>17}{'|z|<0.6 mm, %':>16}{'B(0,0), mT':>13}"]
    for row in rows:
        dims = f"{row.d_mm:g}x{row.h_mm:g}"
        lines.append(
            f"{row.name:<10}{row.n_w:>5}{dims:>14}{row.sigma_025:>17.4f}{row.sigma_060:>16.4f}{row.b_center * 1e3:>13.4f}"
        )
    return "\n".join(lines) + "\n"
