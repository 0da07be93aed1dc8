"""Catalog field-forming systems as filament stacks, plus JSON geometry configs.

Catalog ids:

A  planar annulus antenna (3 - 7.8 mm), one physical turn as coplanar rings
C  cylindrical inductor, three foil strips, each strip an axial filament stack
D  Helmholtz pair
E  barrel coil: two mirrored three-turn cones, large bases facing the centre
F  nested barrel: geometry E plus an outer barrel pair

Geometry B (dielectric resonator) needs a full-wave solver and is not built.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace

from nvcoil.fieldcore import DomainError, DriveSpec, LoopTurn, phase_lag

BORE_RADIUS = 1.5e-3
WIRE_DIAMETER = 252e-6
TAPE_THICKNESS = 60e-6
FOIL_PITCH = 15e-6 + 65e-6  # copper foil + polyimide insulation

CATALOG_IDS = ("A", "C", "D", "E", "F")
OUT_OF_SCOPE_IDS = {"B": "geometry B requires full-wave solver: out of scope"}

# overall envelopes D x H in metres and physical winding counts
_ENVELOPES = {
    "A": (7.8e-3, 0.018e-3),
    "C": (3e-3, 3e-3),
    "D": (3e-3, 1.5e-3),
    "E": (4e-3, 3e-3),
    "F": (5e-3, 4e-3),
}
_WINDINGS = {"A": 1, "C": 3, "D": 2, "E": 6, "F": 12}


class GeometryError(DomainError):
    """Invalid geometry definition or catalog request.

    ``path`` names the offending field for config documents, e.g.
    ``turns[0].radius_mm``.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class CoilGeometry:
    name: str
    turns: tuple[LoopTurn, ...]
    drive: DriveSpec = field(default_factory=DriveSpec)
    envelope: tuple[float, float] = (0.0, 0.0)
    n_windings: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if self.n_windings is None:
            object.__setattr__(self, "n_windings", len(self.turns))

    @property
    def n_filaments(self) -> int:
        return len(self.turns)

    @property
    def min_radius(self) -> float:
        return min(t.radius for t in self.turns)

    def scaled(self, k: float) -> CoilGeometry:
        """Copy with every turn current multiplied by k."""
        return replace(self, turns=tuple(replace(t, current=t.current * k) for t in self.turns))


@dataclass(frozen=True)
class BarrelParams:
    """Cone parameterisation of a barrel winding (lengths in metres).

    The innermost radius ``r_in`` sits farthest from the centre plane; each
    turn towards the centre grows by ``dr`` (one tape thickness plus one wire
    diameter per roll layer). The largest turn sits at ``z = +-z0``, the
    next ones at ``+-(z0 + k*pitch)``.
    """

    r_in: float = BORE_RADIUS
    dr: float = (TAPE_THICKNESS + WIRE_DIAMETER) / 2
    z0: float = 0.375e-3
    pitch: float = 0.375e-3
    turns_per_cone: int = 3
    nested_offset: float = 0.406e-3
    height: float = 3e-3

    def validate(self):
        if self.r_in < BORE_RADIUS * (1 - 1e-9):
            raise GeometryError(f"r_in {self.r_in:g} m obstructs the {2 * BORE_RADIUS:g} m bore", "r_in")
        if not self.dr > 0:
            raise GeometryError("dr must be positive", "dr")
        if not self.z0 > 0:
            raise GeometryError("z0 must be positive", "z0")
        if not self.pitch > 0:
            raise GeometryError("pitch must be positive", "pitch")
        if self.turns_per_cone < 1:
            raise GeometryError("turns_per_cone must be >= 1", "turns_per_cone")
        if self.nested_offset < 0:
            raise GeometryError("nested_offset must be >= 0", "nested_offset")
        top = self.z0 + (self.turns_per_cone - 1) * self.pitch
        if top > self.height / 2 * (1 + 1e-12):
            raise GeometryError(
                f"outermost turn at {top:g} m exceeds half height {self.height / 2:g} m", "pitch"
            )
        return self


def barrel_turns(params: BarrelParams, current: float, wavelength: float, radial_offset: float = 0.0):
    """Two mirrored cones; the largest turn of each cone faces the centre plane."""
    n = params.turns_per_cone
    turns = []
    for k in range(n):
        radius = params.r_in + radial_offset + (n - 1 - k) * params.dr
        z = params.z0 + k * params.pitch
        phase = phase_lag(radius, wavelength)
        for sign in (-1.0, 1.0):
            turns.append(LoopTurn(radius, sign * z, current, phase))
    return sorted(turns, key=lambda t: (t.z_pos, t.radius))


_ALLOWED = {
    "A": {"n_rings", "inner_radius", "outer_radius"},
    "C": {"n_filaments", "height", "radius"},
    "D": {"radius", "spacing"},
    "E": {"r_in", "dr", "z0", "pitch", "turns_per_cone", "height"},
    "F": {"r_in", "dr", "z0", "pitch", "turns_per_cone", "height", "nested_offset", "outer_z0", "outer_pitch"},
}


def build_catalog(geometry_id: str, drive: DriveSpec | None = None, **overrides) -> CoilGeometry:
    """Build a catalog geometry as a filament stack.

    Parameters
    ----------
    geometry_id : str
        One of ``A, C, D, E, F``.
    drive : DriveSpec, optional
        Source parameters; every filament of a physical conductor shares the
        drive current (split evenly across the filaments that discretise it).
    **overrides
        Geometry-specific parameters in SI units, e.g. ``spacing`` and
        ``radius`` for D or ``z0`` and ``pitch`` for E/F.
    """
    gid = str(geometry_id).upper()
    if gid in OUT_OF_SCOPE_IDS:
        raise GeometryError(OUT_OF_SCOPE_IDS[gid])
    if gid not in _ALLOWED:
        raise GeometryError(f"unknown geometry id {geometry_id!r}; expected one of {', '.join(CATALOG_IDS)}")
    unknown = set(overrides) - _ALLOWED[gid]
    if unknown:
        raise GeometryError(f"unsupported override(s) for {gid}: {', '.join(sorted(unknown))}")
    drive = drive or DriveSpec()
    current = drive.current
    lam = drive.wavelength
    builder = {"A": _planar, "C": _strip_cylinder, "D": _helmholtz, "E": _barrel, "F": _nested_barrel}[gid]
    turns = builder(current, lam, **overrides)
    if min(t.radius for t in turns) < BORE_RADIUS * (1 - 1e-9):
        raise GeometryError("a turn obstructs the 3 mm diamond bore")
    return CoilGeometry(gid, tuple(turns), drive, _ENVELOPES[gid], _WINDINGS[gid])


def _planar(current, lam, n_rings=8, inner_radius=BORE_RADIUS, outer_radius=3.9e-3):
    if n_rings < 1 or not outer_radius > inner_radius:
        raise GeometryError("planar antenna needs n_rings >= 1 and outer_radius > inner_radius")
    width = (outer_radius - inner_radius) / n_rings
    # one physical conductor: a single phase from its mean radius
    phase = phase_lag(0.5 * (inner_radius + outer_radius), lam)
    return [
        LoopTurn(inner_radius + (j + 0.5) * width, 0.0, current / n_rings, phase)
        for j in range(n_rings)
    ]


def _strip_cylinder(current, lam, n_filaments=15, height=3e-3, radius=BORE_RADIUS):
    if n_filaments < 1 or not height > 0:
        raise GeometryError("strip cylinder needs n_filaments >= 1 and height > 0")
    dz = height / n_filaments
    turns = []
    for k in range(3):
        a = radius + k * FOIL_PITCH
        phase = phase_lag(a, lam)
        for j in range(n_filaments):
            turns.append(LoopTurn(a, -height / 2 + (j + 0.5) * dz, current / n_filaments, phase))
    return turns


def _helmholtz(current, lam, radius=BORE_RADIUS, spacing=None):
    spacing = radius if spacing is None else spacing
    if not spacing > 0:
        raise GeometryError("spacing must be positive", "spacing")
    phase = phase_lag(radius, lam)
    return [LoopTurn(radius, s * spacing / 2, current, phase) for s in (-1.0, 1.0)]


def _barrel(current, lam, **kw):
    params = BarrelParams(**kw).validate()
    return barrel_turns(params, current, lam)


def _nested_barrel(current, lam, outer_z0=0.5e-3, outer_pitch=0.5e-3, nested_offset=0.406e-3, **kw):
    inner = BarrelParams(**kw).validate()
    outer = replace(inner, z0=outer_z0, pitch=outer_pitch, nested_offset=nested_offset, height=4e-3).validate()
    turns = barrel_turns(inner, current, lam) + barrel_turns(outer, current, lam, nested_offset)
    return sorted(turns, key=lambda t: (t.z_pos, t.radius))


# ---------------------------------------------------------------------------
# JSON config documents (lengths in mm, frequency in GHz)


def geometry_to_dict(geometry: CoilGeometry) -> dict:
    d = geometry.drive
    doc = {
        "name": geometry.name,
        "drive": {
            "power_w": d.power,
            "impedance_ohm": d.impedance,
            "frequency_ghz": d.frequency / 1e9,
            "lightspeed_mps": d.lightspeed,
        },
        "turns": [
            {"radius_mm": t.radius * 1e3, "z_mm": t.z_pos * 1e3, "current_a": t.current, "phase": t.phase}
            for t in geometry.turns
        ],
        "envelope": {"d_mm": geometry.envelope[0] * 1e3, "h_mm": geometry.envelope[1] * 1e3},
    }
    if geometry.n_windings != len(geometry.turns):
        doc["n_windings"] = geometry.n_windings
    return doc


def serialize_geometry(geometry: CoilGeometry) -> str:
    return json.dumps(geometry_to_dict(geometry), indent=2)


def _number(obj, key, path, *, required=True, default=None):
    if key not in obj:
        if required:
            raise GeometryError("missing required field", f"{path}.{key}" if path else key)
        return default
    value = obj[key]
    where = f"{path}.{key}" if path else key
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise GeometryError(f"expected a finite number, got {value!r}", where)
    return float(value)


def parse_geometry_config(document) -> CoilGeometry:
    """Parse and validate a geometry document (JSON text or an already-decoded dict)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise GeometryError(f"malformed JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise GeometryError("document must be a JSON object")

    name = document.get("name")
    if not isinstance(name, str) or not name:
        raise GeometryError("expected a non-empty string", "name")

    drive_doc = document.get("drive")
    if not isinstance(drive_doc, dict):
        raise GeometryError("missing or invalid object", "drive")
    power = _number(drive_doc, "power_w", "drive")
    impedance = _number(drive_doc, "impedance_ohm", "drive")
    freq = _number(drive_doc, "frequency_ghz", "drive")
    c = _number(drive_doc, "lightspeed_mps", "drive", required=False, default=DriveSpec.lightspeed)
    if power < 0:
        raise GeometryError("must be >= 0", "drive.power_w")
    for key, value in (("impedance_ohm", impedance), ("frequency_ghz", freq), ("lightspeed_mps", c)):
        if value <= 0:
            raise GeometryError("must be positive", f"drive.{key}")
    drive = DriveSpec(power, impedance, freq * 1e9, c)

    turns_doc = document.get("turns")
    if not isinstance(turns_doc, list) or not turns_doc:
        raise GeometryError("expected a non-empty list", "turns")
    turns = []
    for i, t in enumerate(turns_doc):
        path = f"turns[{i}]"
        if not isinstance(t, dict):
            raise GeometryError("expected an object", path)
        radius = _number(t, "radius_mm", path) * 1e-3
        if radius <= 0:
            raise GeometryError("must be positive", f"{path}.radius_mm")
        z = _number(t, "z_mm", path) * 1e-3
        current = _number(t, "current_a", path, required=False, default=drive.current)
        if current < 0:
            raise GeometryError("must be >= 0", f"{path}.current_a")
        phase = t.get("phase", "auto")
        if phase == "auto":
            phase = phase_lag(radius, drive.wavelength)
        else:
            phase = _number(t, "phase", path)
        turns.append(LoopTurn(radius, z, current, phase))

    env = document.get("envelope", {"d_mm": 0.0, "h_mm": 0.0})
    if not isinstance(env, dict):
        raise GeometryError("expected an object", "envelope")
    d_mm = _number(env, "d_mm", "envelope")
    h_mm = _number(env, "h_mm", "envelope")
    if d_mm < 0 or h_mm < 0:
        raise GeometryError("envelope dimensions must be >= 0", "envelope")

    n_windings = document.get("n_windings", len(turns))
    if isinstance(n_windings, bool) or not isinstance(n_windings, int) or n_windings < 1:
        raise GeometryError("expected a positive integer", "n_windings")
    return CoilGeometry(name, tuple(turns), drive, (d_mm * 1e-3, h_mm * 1e-3), n_windings)


def load_geometry(path) -> CoilGeometry:
    with open(path, encoding="utf-8") as fh:
        return parse_geometry_config(fh.read())


def geometries_equal(g1: CoilGeometry, g2: CoilGeometry, rtol=1e-12) -> bool:
    """Field-by-field comparison with relative tolerance on floats."""

    def close(x, y):
        return x == y or math.isclose(x, y, rel_tol=rtol)

    if g1.name != g2.name or g1.n_windings != g2.n_windings or len(g1.turns) != len(g2.turns):
        return False
    for f in fields(DriveSpec):
        if not close(getattr(g1.drive, f.name), getattr(g2.drive, f.name)):
            return False
    if not all(close(x, y) for x, y in zip(g1.envelope, g2.envelope)):
        return False
    for t1, t2 in zip(g1.turns, g2.turns):
        for f in fields(LoopTurn):
            if not close(getattr(t1, f.name), getattr(t2, f.name)):
                return False
    return True
