"""Monte-Carlo parameter sweeps over channel realizations.

Realization ``i`` uses seed ``base_seed + i`` at every axis value and for
every scheme, so all comparisons are paired.
"""

import dataclasses
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import SchemeId, solve_realization
from .channel import generate_channels, mrt_precoders
from .config import SystemConfig
from .solver import SolverError, SolverOptions
from .validation import ConfigError, check_positive_int, db_to_linear

__all__ = [
    "AXES",
    "DEFAULT_GRIDS",
    "ExperimentSpec",
    "ExperimentError",
    "CellStats",
    "SweepResult",
    "axis_config",
    "run_experiment",
    "format_csv",
    "emit_csv",
    "parse_csv",
]

logger = logging.getLogger(__name__)

AXES = ("noise_var", "strength_sd", "distortion", "power")
_AXIS_ALIASES = {"noise": "noise_var", "direct": "strength_sd", "rho_sd": "strength_sd"}

#: Sweep grids used when no values are given (dB for all axes except power).
DEFAULT_GRIDS = {
    "noise_var": (-60.0, -50.0, -40.0, -30.0, -20.0),
    "strength_sd": (-40.0, -30.0, -20.0, -10.0),
    "distortion": (-50.0, -40.0, -30.0, -20.0, -10.0),
    "power": (0.25, 0.5, 1.0, 2.0, 4.0),
}

FAILURE_LIMIT = 0.10
CSV_HEADER = "axis_value,scheme,mean_rate,std_rate,n_ok,n_fail"


class ExperimentError(RuntimeError):
    """Too many solves failed; ``result`` holds the partial sweep."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


def canonical_axis(axis):
    name = _AXIS_ALIASES.get(axis, axis)
    if name not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(AXES)}")
    return name


def axis_config(config, axis, value):
    """``config`` with the sweep parameter set to ``value``."""
    axis = canonical_axis(axis)
    if axis == "noise_var":
        noise = db_to_linear(value)
        return dataclasses.replace(config, noise_var_relay=noise, noise_var_dest=noise)
    if axis == "strength_sd":
        return dataclasses.replace(config, strength_sd=db_to_linear(value))
    if axis == "distortion":
        level = db_to_linear(value)
        return dataclasses.replace(
            config, kappa_relay=level, beta_relay=level, beta_dest=level, theta_tx_source=level
        )
    return dataclasses.replace(config, power_source=float(value), power_relay=float(value))


@dataclass(frozen=True)
class ExperimentSpec:
    config: SystemConfig = field(default_factory=SystemConfig)
    axis: str = "noise_var"
    values: tuple = None
    num_realizations: int = 100
    schemes: tuple = tuple(SchemeId)
    base_seed: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        axis = canonical_axis(self.axis)
        object.__setattr__(self, "axis", axis)
        values = DEFAULT_GRIDS[axis] if self.values is None else self.values
        values = tuple(float(v) for v in values)
        if not values or not all(np.isfinite(values)):
            raise ConfigError("sweep values must be a nonempty list of finite numbers")
        object.__setattr__(self, "values", values)
        check_positive_int(self.num_realizations, "num_realizations")
        try:
            schemes = tuple(dict.fromkeys(SchemeId(s) for s in self.schemes))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not schemes:
            raise ConfigError("at least one scheme is required")
        object.__setattr__(self, "schemes", schemes)
        object.__setattr__(self, "base_seed", int(self.base_seed))

    def configs(self):
        return [axis_config(self.config, self.axis, v) for v in self.values]


@dataclass(frozen=True, eq=False)
class CellStats:
    """Per-realization sum rates of one (axis value, scheme); ``nan`` marks a failed solve."""

    values: np.ndarray
    iterations: np.ndarray

    @property
    def ok(self):
        return ~np.isnan(self.values)

    @property
    def n_ok(self):
        return int(self.ok.sum())

    @property
    def n_fail(self):
        return int(self.values.size - self.n_ok)

    @property
    def mean(self):
        return float(np.mean(self.values[self.ok])) if self.n_ok else float("nan")

    @property
    def std(self):
        return float(np.std(self.values[self.ok])) if self.n_ok else float("nan")

    @property
    def mean_iterations(self):
        return float(np.mean(self.iterations[self.ok])) if self.n_ok else float("nan")


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis: str
    values: tuple
    schemes: tuple
    cells: dict

    def cell(self, value_index, scheme):
        return self.cells[(value_index, SchemeId(scheme))]

    def means(self, scheme):
        return np.array([self.cell(i, scheme).mean for i in range(len(self.values))])

    def rows(self):
        for i, value in enumerate(self.values):
            for scheme in self.schemes:
                yield value, scheme, self.cell(i, scheme)


def _solve_one(task):
    """One realization at one axis value; returns rates and iteration counts per scheme."""
    config, seed, schemes, opts = task
    channels = generate_channels(config, seed)
    rates = {s: np.nan for s in schemes}
    iters = {s: 0 for s in schemes}
    try:
        precoders = mrt_precoders(channels)
        counts = {}
        results = solve_realization(channels, precoders, config, schemes, opts, iterations=counts)
    except (SolverError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.warning("seed %d failed: %s", seed, exc)
        return rates, iters
    for s in schemes:
        rates[s] = results[s][1].r_total
        iters[s] = counts[s]
    return rates, iters


def run_experiment(spec, jobs=1):
    """Run every (axis value, realization) pair; ``jobs > 1`` uses worker processes."""
    configs = spec.configs()
    for config in configs:
        # surface configuration errors before spending any solver time
        generate_channels(config, spec.base_seed)
    tasks = [
        (config, spec.base_seed + i, spec.schemes, spec.solver)
        for config in configs
        for i in range(spec.num_realizations)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_solve_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = [_solve_one(t) for t in tasks]

    R = spec.num_realizations
    cells = {}
    for v in range(len(configs)):
        chunk = outcomes[v * R : (v + 1) * R]
        for s in spec.schemes:
            cells[(v, s)] = CellStats(
                np.array([rates[s] for rates, _ in chunk], dtype=float),
                np.array([iters[s] for _, iters in chunk], dtype=float),
            )
    result = SweepResult(spec.axis, spec.values, spec.schemes, cells)
    worst = max(cell.n_fail for cell in cells.values()) / R
    if worst > FAILURE_LIMIT:
        raise ExperimentError(
            f"{worst:.0%} of solves failed in at least one cell (limit {FAILURE_LIMIT:.0%})", result
        )
    return result


def _fmt(x):
    return format(float(x), ".9g")


def format_csv(result):
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for value, scheme, cell in result.rows():
        out.write(f"{_fmt(value)},{scheme.value},{_fmt(cell.mean)},{_fmt(cell.std)},{cell.n_ok},{cell.n_fail}\n")
    return out.getvalue()


def emit_csv(result, path):
    """Write the sweep summary as UTF-8 CSV with ``\\n`` line endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_csv(result))


def parse_csv(text):
    """Rows of a summary CSV as ``(axis_value, scheme, mean, std, n_ok, n_fail)`` tuples."""
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a sweep summary CSV")
    rows = []
    for line in lines[1:]:
        value, scheme, mean, std, n_ok, n_fail = line.split(",")
        rows.append((float(value), SchemeId(scheme), float(mean), float(std), int(n_ok), int(n_fail)))
    return rows
