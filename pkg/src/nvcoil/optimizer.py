"""Deterministic search over winding parameters minimising ICD sigma_pp.

``sweep`` evaluates an exhaustive grid; ``refine`` runs coordinate descent
with step halving from the space's initial point. Candidates whose geometry
is invalid (bore obstruction, envelope overflow) are skipped and logged.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from nvcoil.fieldcore import DomainError
from nvcoil.geometry import BORE_RADIUS, CoilGeometry, GeometryError, build_catalog
from nvcoil.homogeneity import IcdSpec, icd_sigma

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 20_000


class BudgetError(DomainError):
    """Requested sweep needs more evaluations than the configured budget."""


@dataclass(frozen=True)
class Parameter:
    name: str
    lower: float
    upper: float
    initial: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError(f"parameter {self.name!r}: lower bound must be < upper bound")
        if not self.lower <= self.initial <= self.upper:
            raise DomainError(f"parameter {self.name!r}: initial value outside bounds")

    @property
    def span(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class SearchSpace:
    parameters: tuple[Parameter, ...]
    objective_extent: float = 0.25e-3
    grid: IcdSpec = field(default_factory=IcdSpec)

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if not self.parameters:
            raise DomainError("search space needs at least one parameter")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise DomainError("duplicate parameter names")
        if not self.objective_extent > 0:
            raise DomainError("objective_extent must be positive")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def with_initial(self, values: dict) -> SearchSpace:
        params = tuple(replace(p, initial=float(values.get(p.name, p.initial))) for p in self.parameters)
        return replace(self, parameters=params)

    @property
    def icd(self) -> IcdSpec:
        g = self.grid
        return IcdSpec(g.diameter, self.objective_extent, g.n_axial, g.n_radial)


@dataclass(frozen=True)
class Template:
    """A catalog geometry with fixed overrides; search parameters fill the rest."""

    geometry_id: str
    overrides: dict = field(default_factory=dict)

    def build(self, params: dict) -> CoilGeometry:
        return build_catalog(self.geometry_id, **{**self.overrides, **params})


@dataclass
class SearchResult:
    names: tuple[str, ...]
    best_params: dict
    best_sigma: float
    evaluations: int
    trace: list = field(default_factory=list)
    skipped: int = 0
    iterations: int = 0

    def to_json(self) -> str:
        doc = {
            "best_params": {k: self.best_params[k] for k in self.names},
            "best_sigma": self.best_sigma,
            "evaluations": self.evaluations,
            "skipped": self.skipped,
            "iterations": self.iterations,
        }
        return json.dumps(doc, indent=2)

    def trace_csv(self, scale: float = 1.0, suffix: str = "") -> str:
        """Trace as CSV ``param1,...,paramN,sigma_pp_percent``; values multiplied by ``scale``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([n + suffix for n in self.names] + ["sigma_pp_percent"])
        for params, sigma in self.trace:
            w.writerow([repr(params[n] * scale) for n in self.names] + [repr(sigma)])
        return buf.getvalue()


class _Objective:
    """Evaluates sigma_pp with a cache; records trace entries in call order."""

    def __init__(self, template: Template, space: SearchSpace):
        self.template = template
        self.space = space
        self.icd = space.icd
        self.cache = {}
        self.trace = []
        self.skipped = 0

    def __call__(self, values):
        key = tuple(float(v) for v in values)
        if key in self.cache:
            return self.cache[key]
        params = dict(zip(self.space.names, key))
        try:
            geometry = self.template.build(params)
        except GeometryError as exc:
            log.info("skipping candidate %s: %s", params, exc)
            self.skipped += 1
            self.cache[key] = None
            return None
        if geometry.min_radius < BORE_RADIUS * (1 - 1e-9):
            log.info("skipping candidate %s: bore obstructed", params)
            self.skipped += 1
            self.cache[key] = None
            return None
        sigma = icd_sigma(geometry, self.icd)
        self.cache[key] = sigma
        self.trace.append((params, sigma))
        return sigma


def _better(sigma, key, best_sigma, best_key):
    # ties go to the lexicographically smaller parameter vector
    if best_sigma is None:
        return True
    return sigma < best_sigma or (sigma == best_sigma and key < best_key)


def sweep(template: Template, space: SearchSpace, steps, budget: int = DEFAULT_BUDGET) -> SearchResult:
    """Exhaustive grid search.

    ``steps`` is an int (same count per axis) or a sequence with one count per
    parameter. The initial point is evaluated first, so the result is never
    worse than it.
    """
    if np.isscalar(steps):
        steps = [int(steps)] * len(space.parameters)
    steps = [int(s) for s in steps]
    if len(steps) != len(space.parameters):
        raise DomainError("one step count per parameter required")
    if any(s < 2 for s in steps):
        raise DomainError("sweep needs at least 2 steps per axis")
    total = int(np.prod(steps)) + 1
    if total > budget:
        raise BudgetError(f"sweep needs {total} evaluations, budget is {budget}")

    objective = _Objective(template, space)
    axes = [np.linspace(p.lower, p.upper, s) for p, s in zip(space.parameters, steps)]
    candidates = [tuple(p.initial for p in space.parameters)]
    candidates += [tuple(float(v) for v in c) for c in itertools.product(*axes)]

    best_sigma, best_key = None, None
    for key in candidates:
        sigma = objective(key)
        if sigma is not None and _better(sigma, key, best_sigma, best_key):
            best_sigma, best_key = sigma, key
    if best_key is None:
        raise DomainError("no valid candidate in the search space")
    return SearchResult(
        space.names,
        dict(zip(space.names, best_key)),
        best_sigma,
        len(objective.trace),
        objective.trace,
        objective.skipped,
        1,
    )


def refine(
    template: Template,
    space: SearchSpace,
    tolerance: float = 1e-6,
    max_iters: int = 200,
    initial_step: float = 0.25,
) -> SearchResult:
    """Coordinate descent with step halving.

    Each iteration is one cycle over the parameters: ``x_i +- step_i`` (clipped
    to bounds) is tried and the better point kept if it improves the
    objective; an axis with no improvement halves its step. Stops after
    ``max_iters`` cycles, when every step is below ``1e-3`` of its span, or
    when a cycle that moved improved by less than ``tolerance`` (percent).
    """
    if max_iters < 1:
        raise DomainError("max_iters must be >= 1")
    objective = _Objective(template, space)
    params = space.parameters
    x = [p.initial for p in params]
    best = objective(tuple(x))
    if best is None:
        raise DomainError("initial point is not a valid geometry")
    steps = [initial_step * p.span for p in params]
    floor = [1e-3 * p.span for p in params]

    iterations = 0
    while iterations < max_iters:
        iterations += 1
        start = best
        moved = False
        for i, p in enumerate(params):
            trial_best, trial_key = None, None
            for direction in (-1.0, 1.0):
                value = min(max(x[i] + direction * steps[i], p.lower), p.upper)
                if value == x[i]:
                    continue
                key = tuple(x[:i] + [value] + x[i + 1 :])
                sigma = objective(key)
                if sigma is not None and _better(sigma, key, trial_best, trial_key):
                    trial_best, trial_key = sigma, key
            if trial_best is not None and trial_best < best:
                best = trial_best
                x = list(trial_key)
                moved = True
            else:
                steps[i] *= 0.5
        if all(s < f for s, f in zip(steps, floor)):
            break
        if moved and start - best < tolerance:
            break

    return SearchResult(
        space.names,
        dict(zip(space.names, x)),
        best,
        len(objective.trace),
        objective.trace,
        objective.skipped,
        iterations,
    )


def barrel_space(extent: float = 0.25e-3, lower: float = 0.1e-3, upper: float = 0.8e-3, grid: IcdSpec | None = None):
    """z0 and pitch of geometry E free in [lower, upper], starting at the catalog defaults."""
    params = (Parameter("z0", lower, upper, 0.375e-3), Parameter("pitch", lower, upper, 0.375e-3))
    return SearchSpace(params, extent, grid or IcdSpec())


def calibrate_barrel(geometry_id: str = "E", extent: float = 0.25e-3, sweep_steps: int = 8, **fixed):
    """Sweep then refine z0/pitch of a barrel geometry; returns (geometry, SearchResult)."""
    template = Template(geometry_id, fixed)
    space = barrel_space(extent)
    coarse = sweep(template, space, sweep_steps)
    fine = refine(template, space.with_initial(coarse.best_params), tolerance=1e-9)
    result = fine if fine.best_sigma <= coarse.best_sigma else coarse
    return template.build(result.best_params), result
