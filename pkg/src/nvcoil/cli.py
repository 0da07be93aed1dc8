"""Command-line front end.

Units on the command line are mm, us, MHz and GHz; everything is converted
to SI at this boundary. Exit codes: 0 success, 1 usage, 2 domain error,
3 I/O error. Errors are written to stderr as a single line
``nvcoil: error[<kind>]: <message>``.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from nvcoil import fieldcore, fitting, geometry, homogeneity, optimizer, spinsim
from nvcoil.fieldcore import DomainError

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3
VERBS = ("report", "profile", "field", "sweep", "refine", "rabi-synth", "rabi-fit", "odmr-fit", "constants")
INTEGER_PARAMS = {"turns_per_cone", "n_rings", "n_filaments"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Command:
    verb: str
    options: dict = field(default_factory=dict)
    in_path: str | None = None
    out_path: str | None = None


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text, name):
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if not step > 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step * (1 + 1e-12))) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected 'a,b,c' or 'start:stop:step', got {text!r}") from None


def _param_spec(text):
    try:
        name, rng = text.split("=", 1)
        parts = [float(p) for p in rng.split(":")]
        if len(parts) not in (2, 3):
            raise ValueError
    except ValueError:
        raise UsageError(f"--param: expected NAME=LO:HI[:INIT], got {text!r}") from None
    return name.strip(), parts


def _fixed_spec(text):
    try:
        name, value = text.split("=", 1)
        return name.strip(), float(value)
    except ValueError:
        raise UsageError(f"--fix: expected NAME=VALUE, got {text!r}") from None


def _build_parser():
    parser = _Parser(prog="nvcoil", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", metavar="verb", parser_class=_Parser)

    def add(verb, help_text, formats=("csv", "json")):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=formats, default=formats[0])
        return p

    def geometry_source(p):
        p.add_argument("--geometry", help="catalog id (A, C, D, E, F)")
        p.add_argument("--config", help="geometry JSON file")
        p.add_argument("--raw-barrel", action="store_true", help="use default barrel coordinates without calibration")

    def icd(p):
        p.add_argument("--icd-diameter-um", type=float, default=50.0)
        p.add_argument("--n-axial", type=int, default=101)
        p.add_argument("--n-radial", type=int, default=11)

    p = add("report", "homogeneity comparison table", ("csv", "text", "json"))
    p.add_argument("--geometries", default="A,C,D,E,F")
    p.add_argument("--config", action="append", default=[], help="extra geometry JSON file (repeatable)")
    p.add_argument("--raw-barrel", action="store_true")
    icd(p)

    p = add("profile", "sigma_pp versus ICD extent")
    geometry_source(p)
    p.add_argument("--axis", choices=("axial", "radial"), default="axial")
    p.add_argument("--extents-mm")
    p.add_argument("--on-axis", action="store_true", help="axial profile along r = 0 only")
    p.add_argument("--svg", help="also write a minimal SVG line plot")
    icd(p)

    p = add("field", "field phasors at points")
    geometry_source(p)
    p.add_argument("--r-mm", default="0")
    p.add_argument("--z-mm", default="0")

    for verb in ("sweep", "refine"):
        p = add(verb, "grid sweep" if verb == "sweep" else "coordinate-descent refinement", ("json",))
        p.add_argument("--template", required=True, help="catalog id to parameterise")
        p.add_argument("--param", action="append", default=[], type=_param_spec, help="NAME=LO:HI[:INIT] in mm")
        p.add_argument("--fix", action="append", default=[], type=_fixed_spec, help="NAME=VALUE in mm")
        p.add_argument("--extent-mm", type=float, default=0.25)
        p.add_argument("--trace", help="write the evaluation trace CSV here")
        icd(p)
        if verb == "sweep":
            p.add_argument("--steps", type=int, default=11)
            p.add_argument("--budget", type=int, default=optimizer.DEFAULT_BUDGET)
        else:
            p.add_argument("--tolerance", type=float, default=1e-6, help="percent")
            p.add_argument("--max-iters", type=int, default=200)

    p = add("rabi-synth", "synthesise an ensemble Rabi trace", ("csv",))
    p.add_argument("--model", choices=("closed", "lorentzian", "fieldmap"), default="closed")
    p.add_argument("--f-mhz", type=float, default=0.69)
    p.add_argument("--decay-us", type=float)
    p.add_argument("--delta-zeta", type=float)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--t-max-us", type=float, default=10.0)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--noise", type=float, default=0.0, help="additive Gaussian noise standard deviation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truncation", type=float, default=spinsim.DEFAULT_TRUNCATION)
    p.add_argument("--nodes", type=int, default=20_001)
    p.add_argument("--geometry")
    p.add_argument("--config")
    p.add_argument("--raw-barrel", action="store_true")
    p.add_argument("--extent-mm", type=float, default=0.25)
    p.add_argument("--drive-scale", type=float, default=1.0)

    p = add("rabi-fit", "fit a decaying cosine to t_us,signal CSV", ("json",))
    p.add_argument("--in", dest="in_path", required=True)

    p = add("odmr-fit", "fit a Gaussian dip to f_ghz,signal CSV", ("json",))
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--branch", choices=("lower", "upper"))

    p = add("constants", "Q, ring-down time, wavelength, drive current", ("text", "json"))
    p.add_argument("--f0-ghz", type=float, default=2.87)
    p.add_argument("--df-mhz", type=float, default=20.0)
    p.add_argument("--rounded-c", "--paper-c", dest="rounded_c", action="store_true", help="use c = 3.0e8 m/s")
    p.add_argument("--power-w", type=float, default=10.0)
    p.add_argument("--impedance-ohm", type=float, default=50.0)
    p.add_argument("--radius-mm", type=float, default=1.5)
    return parser


def _catalog_id(text):
    gid = text.strip().upper()
    if gid in geometry.OUT_OF_SCOPE_IDS:
        raise UsageError(geometry.OUT_OF_SCOPE_IDS[gid])
    if gid not in geometry.CATALOG_IDS:
        raise UsageError(f"unknown geometry {text!r}; expected one of {','.join(geometry.CATALOG_IDS)}")
    return gid


def _attach_negative_values(argv):
    # argparse reads "-0.1:0.1:0.05" as a flag; bind such values to the preceding option
    out = []
    for token in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and re.match(r"^-[\d.]", token):
            out[-1] = f"{out[-1]}={token}"
        else:
            out.append(token)
    return out


def parse_args(argv) -> Command:
    """Parse and validate argv (without the program name) into a Command."""
    argv = _attach_negative_values(list(argv))
    if not argv:
        raise UsageError(f"missing verb; expected one of {', '.join(VERBS)}")
    if argv[0] not in VERBS and not argv[0].startswith("-"):
        raise UsageError(f"unknown verb {argv[0]!r}; expected one of {', '.join(VERBS)}")
    ns = _build_parser().parse_args(argv)
    if ns.verb is None:
        raise UsageError("missing verb")
    opts = vars(ns)
    verb = opts.pop("verb")
    out_path = opts.pop("out", None)
    in_path = opts.pop("in_path", None)

    if verb == "report":
        opts["geometries"] = [_catalog_id(g) for g in opts["geometries"].split(",") if g.strip()]
        if not opts["geometries"] and not opts["config"]:
            raise UsageError("report needs at least one geometry")
    if verb in ("profile", "field") or (verb == "rabi-synth" and opts["model"] == "fieldmap"):
        if opts.get("geometry") and opts.get("config"):
            raise UsageError("--geometry and --config are mutually exclusive")
        if not opts.get("geometry") and not opts.get("config"):
            raise UsageError("one of --geometry or --config is required")
        if opts.get("geometry"):
            opts["geometry"] = _catalog_id(opts["geometry"])
    if verb == "profile" and opts["extents_mm"] is not None:
        opts["extents_mm"] = _float_list(opts["extents_mm"], "--extents-mm")
    if verb == "field":
        opts["r_mm"] = _float_list(opts["r_mm"], "--r-mm")
        opts["z_mm"] = _float_list(opts["z_mm"], "--z-mm")
    if verb in ("sweep", "refine"):
        opts["template"] = _catalog_id(opts["template"])
        if not opts["param"]:
            raise UsageError("at least one --param is required")
    if verb == "rabi-synth":
        if opts["decay_us"] is not None and opts["delta_zeta"] is not None:
            raise UsageError("--decay-us and --delta-zeta are mutually exclusive")
        if opts["points"] < 2:
            raise UsageError("--points must be >= 2")
    return Command(verb, opts, in_path, out_path)


# ---------------------------------------------------------------------------
# execution


def _icd(opts, half_length=0.25e-3):
    return homogeneity.IcdSpec(opts["icd_diameter_um"] * 1e-6, half_length, opts["n_axial"], opts["n_radial"])


def _resolve_geometry(gid=None, config=None, raw_barrel=False):
    if config:
        return geometry.load_geometry(config)
    if gid == "E" and not raw_barrel:
        return optimizer.calibrate_barrel("E")[0]
    return geometry.build_catalog(gid)


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


def _svg_plot(xs, ys, xlabel, ylabel, width=480, height=320):
    pad = 48
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    pts = " ".join(
        f"{pad + (x - x0) / (x1 - x0) * (width - 2 * pad):.2f},{height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad):.2f}"
        for x, y in zip(xs, ys)
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#888"/>\n'
        f'<polyline points="{pts}" fill="none" stroke="#c00" stroke-width="1.5"/>\n'
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">{xlabel}</text>\n'
        f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle" font-size="12">{ylabel}</text>\n'
        f'<text x="{pad}" y="{pad - 6}" font-size="10">{y1:.4g}</text>\n'
        f'<text x="{pad}" y="{height - pad + 14}" font-size="10">{x0:.4g}</text>\n'
        f'<text x="{width - pad}" y="{height - pad + 14}" text-anchor="end" font-size="10">{x1:.4g}</text>\n'
        "</svg>\n"
    )


def _run_report(cmd):
    o = cmd.options
    geoms = [_resolve_geometry(g, raw_barrel=o["raw_barrel"]) for g in o["geometries"]]
    geoms += [geometry.load_geometry(path) for path in o["config"]]
    rows = homogeneity.table_report(geoms, _icd(o))
    if o["format"] == "csv":
        return homogeneity.report_csv(rows)
    if o["format"] == "text":
        return homogeneity.report_text(rows)
    return _json([{k: getattr(r, k) for k in homogeneity.REPORT_HEADER} for r in rows])


def _run_profile(cmd):
    o = cmd.options
    g = _resolve_geometry(o["geometry"], o["config"], o["raw_barrel"])
    extents_mm = o["extents_mm"]
    if extents_mm is None:
        if o["axis"] == "axial":
            extents_mm = [round(0.05 * k, 10) for k in range(1, 31)]
        else:
            extents_mm = [round(0.0025 * k, 10) for k in range(1, 11)]
    base = _icd(o, 0.25e-3)
    prof = homogeneity.homogeneity_profile(g, base, o["axis"], [e * 1e-3 for e in extents_mm], o["on_axis"])
    if o["svg"]:
        with open(o["svg"], "w", encoding="utf-8") as fh:
            fh.write(_svg_plot([h * 1e3 for h in prof.half_lengths], list(prof.sigma_pp), "half_length_mm", "sigma_pp_percent"))
    if o["format"] == "csv":
        return prof.to_csv()
    return _json(
        {
            "geometry": g.name,
            "axis": prof.axis,
            "b_center_t": prof.b_center,
            "half_length_mm": [h * 1e3 for h in prof.half_lengths],
            "sigma_pp_percent": list(prof.sigma_pp),
        }
    )


def _run_field(cmd):
    o = cmd.options
    g = _resolve_geometry(o["geometry"], o["config"], o["raw_barrel"])
    rows = []
    for z in o["z_mm"]:
        for r in o["r_mm"]:
            s = fieldcore.superpose(g, r * 1e-3, z * 1e-3)
            rows.append((r, z, s))
    if o["format"] == "json":
        return _json(
            [
                {"r_mm": r, "z_mm": z, "br_re": s.br.real, "br_im": s.br.imag, "bz_re": s.bz.real, "bz_im": s.bz.imag, "b_abs_t": s.magnitude}
                for r, z, s in rows
            ]
        )
    lines = ["r_mm,z_mm,br_re,br_im,bz_re,bz_im,b_abs_t"]
    for r, z, s in rows:
        lines.append(",".join(repr(float(v)) for v in (r, z, s.br.real, s.br.imag, s.bz.real, s.bz.imag, s.magnitude)))
    return "\n".join(lines) + "\n"


def _space_from(o):
    params = []
    for name, parts in o["param"]:
        scale = 1.0 if name in INTEGER_PARAMS else 1e-3
        lo, hi = parts[0] * scale, parts[1] * scale
        init = parts[2] * scale if len(parts) == 3 else 0.5 * (lo + hi)
        params.append(optimizer.Parameter(name, lo, hi, init))
    return optimizer.SearchSpace(params, o["extent_mm"] * 1e-3, _icd(o, o["extent_mm"] * 1e-3))


def _template_from(o):
    fixed = {}
    for name, value in o["fix"]:
        fixed[name] = int(value) if name in INTEGER_PARAMS else value * 1e-3
    return optimizer.Template(o["template"], fixed)


def _search_output(result, o):
    if o["trace"]:
        with open(o["trace"], "w", encoding="utf-8") as fh:
            fh.write(result.trace_csv(scale=1e3, suffix="_mm"))
    doc = json.loads(result.to_json())
    doc["best_params_mm"] = {k: v * 1e3 for k, v in doc.pop("best_params").items()}
    return _json(doc)


def _run_sweep(cmd):
    o = cmd.options
    result = optimizer.sweep(_template_from(o), _space_from(o), o["steps"], o["budget"])
    return _search_output(result, o)


def _run_refine(cmd):
    o = cmd.options
    result = optimizer.refine(_template_from(o), _space_from(o), o["tolerance"], o["max_iters"])
    return _search_output(result, o)


def _run_rabi_synth(cmd):
    o = cmd.options
    times = np.linspace(0.0, o["t_max_us"] * 1e-6, o["points"])
    if o["model"] == "fieldmap":
        g = _resolve_geometry(o["geometry"], o["config"], o["raw_barrel"])
        pts = homogeneity.icd_samples(homogeneity.IcdSpec(half_length=o["extent_mm"] * 1e-3))
        samples = [fieldcore.superpose(g, r, z) for r, z in pts]
        values = o["amplitude"] * spinsim.rabi_from_field_map(samples, None, None, o["drive_scale"], times) + o["offset"]
    else:
        omega0 = 2 * math.pi * o["f_mhz"] * 1e6
        if o["delta_zeta"] is not None:
            dz = o["delta_zeta"]
        elif o["decay_us"] is not None:
            dz = 1.0 / (omega0 * o["decay_us"] * 1e-6)
        else:
            dz = 0.0
        model = spinsim.RabiModel(omega0, dz, o["amplitude"], o["offset"])
        if o["model"] == "closed":
            values = spinsim.rabi_closed_form(model, times)
        else:
            values = spinsim.rabi_lorentzian_numeric(model, times, o["truncation"], o["nodes"])
    if o["noise"] > 0:
        values = values + np.random.default_rng(o["seed"]).normal(0.0, o["noise"], times.size)
    return spinsim.signal_csv(times, values)


def _run_rabi_fit(cmd):
    t, y, _ = fitting.read_signal_csv(cmd.in_path, "t_us")
    return _json(fitting.fit_decaying_cosine(t, y).to_dict())


def _run_odmr_fit(cmd):
    f, y, _ = fitting.read_signal_csv(cmd.in_path, "f_ghz")
    fit = fitting.fit_gaussian_dip(f, y)
    doc = fit.to_dict()
    if cmd.options["branch"]:
        doc["bias_mt"] = spinsim.resonance_to_bias(fit.center, cmd.options["branch"]) * 1e3
    return _json(doc)


def _run_constants(cmd):
    o = cmd.options
    c = fieldcore.LIGHTSPEED_ROUNDED if o["rounded_c"] else fieldcore.LIGHTSPEED
    q, tau, lam = fieldcore.rf_constants(o["f0_ghz"] * 1e9, o["df_mhz"] * 1e6, c)
    current = fieldcore.source_current(o["power_w"], o["impedance_ohm"])
    phi = fieldcore.phase_lag(o["radius_mm"] * 1e-3, lam)
    values = {
        "Q": q,
        "tau_c_ns": tau * 1e9,
        "lambda_mm": lam * 1e3,
        "I_max_a": current,
        "phase_lag_rad": phi,
    }
    if o["format"] == "json":
        return _json(values)
    return (
        f"Q={q:.6g}\n"
        f"tau_c={tau * 1e9:.4g} ns\n"
        f"lambda={lam * 1e3:.2f} mm\n"
        f"I_max={current:.4f} A\n"
        f"phase_lag={phi:.4f} rad (R = {o['radius_mm']:g} mm)\n"
    )


_RUNNERS = {
    "report": _run_report,
    "profile": _run_profile,
    "field": _run_field,
    "sweep": _run_sweep,
    "refine": _run_refine,
    "rabi-synth": _run_rabi_synth,
    "rabi-fit": _run_rabi_fit,
    "odmr-fit": _run_odmr_fit,
    "constants": _run_constants,
}


def _fail(kind, message, stderr):
    text = " ".join(str(message).split())
    print(f"nvcoil: error[{kind}]: {text}", file=stderr)


def execute(cmd: Command, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        text = _RUNNERS[cmd.verb](cmd)
        if cmd.out_path:
            with open(cmd.out_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            stdout.write(text)
    except OSError as exc:
        _fail("io", exc, stderr)
        return EXIT_IO
    except DomainError as exc:
        _fail("domain", exc, stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd = parse_args(argv)
    except UsageError as exc:
        _fail("usage", exc, sys.stderr)
        return EXIT_USAGE
    return execute(cmd)


if __name__ == "__main__":
    sys.exit(main())
