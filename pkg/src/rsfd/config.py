"""System configuration and the flat ``key = value`` config file format."""

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .validation import (
    ConfigError,
    check_nonnegative,
    check_per_subcarrier,
    check_positive_int,
    check_unit_interval,
    db_to_linear,
)

__all__ = ["SystemConfig", "default_config", "parse_config", "load_config", "format_config"]

_PER_SUBCARRIER = (
    "noise_var_relay",
    "noise_var_dest",
    "err_var_sr",
    "err_var_rd",
    "err_var_sd",
    "err_var_rr",
)
_SCALARS = (
    "power_source",
    "power_relay",
    "strength_sr",
    "strength_rd",
    "strength_sd",
    "strength_si",
    "rician_k",
)
_DISTORTION = ("kappa_relay", "beta_relay", "beta_dest")


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """All scalar parameters of the relay system, in linear units.

    Distortion coefficients (``kappa_relay``, ``beta_relay``, ``beta_dest``,
    ``theta_tx_source``) are given before division by the number of
    subcarriers; the normalized values are exposed as cached properties.
    ``theta_tx_source`` defaults to ``kappa_relay`` on every BS chain.
    """

    num_subcarriers: int = 4
    num_bs_antennas: int = 32
    power_source: float = 1.0
    power_relay: float = 1.0
    strength_sr: float = 0.1
    strength_rd: float = 0.1
    strength_sd: float = 1e-4
    strength_si: float = 1.0
    rician_k: float = 10.0
    noise_var_relay: np.ndarray = 1e-4
    noise_var_dest: np.ndarray = 1e-4
    err_var_sr: np.ndarray = 1e-5
    err_var_rd: np.ndarray = 1e-5
    err_var_sd: np.ndarray = 1e-5
    err_var_rr: np.ndarray = 1e-5
    kappa_relay: float = 1e-3
    beta_relay: float = 1e-3
    beta_dest: float = 1e-3
    theta_tx_source: np.ndarray = field(default=None)
    rate_prefactor: float = 1.0

    def __post_init__(self):
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        K = check_positive_int(self.num_subcarriers, "num_subcarriers")
        N = check_positive_int(self.num_bs_antennas, "num_bs_antennas")
        set_("num_subcarriers", K)
        set_("num_bs_antennas", N)
        for name in _SCALARS:
            set_(name, check_nonnegative(getattr(self, name), name))
        for name in _PER_SUBCARRIER:
            set_(name, check_per_subcarrier(getattr(self, name), K, name))
        for name in _DISTORTION:
            set_(name, check_unit_interval(getattr(self, name), name))
        theta = self.theta_tx_source
        if theta is None:
            theta = np.full(N, self.kappa_relay)
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 0:
            theta = np.full(N, float(theta))
        if theta.shape != (N,):
            raise ConfigError(f"theta_tx_source must have length {N}, got shape {theta.shape}")
        for i, value in enumerate(theta):
            check_unit_interval(value, f"theta_tx_source[{i}]")
        theta.setflags(write=False)
        set_("theta_tx_source", theta)
        rate_prefactor = float(self.rate_prefactor)
        if not np.isfinite(rate_prefactor) or rate_prefactor <= 0:
            raise ConfigError(f"rate_prefactor must be positive, got {self.rate_prefactor!r}")
        set_("rate_prefactor", rate_prefactor)

    # normalized distortion coefficients (divided by K)
    @cached_property
    def kappa_r(self):
        return self.kappa_relay / self.num_subcarriers

    @cached_property
    def beta_r(self):
        return self.beta_relay / self.num_subcarriers

    @cached_property
    def beta_d(self):
        return self.beta_dest / self.num_subcarriers

    @cached_property
    def theta(self):
        out = self.theta_tx_source / self.num_subcarriers
        out.setflags(write=False)
        return out

    def without_distortion(self):
        """Same system with every hardware-distortion coefficient set to zero."""
        return dataclasses.replace(
            self, kappa_relay=0.0, beta_relay=0.0, beta_dest=0.0, theta_tx_source=0.0
        )

    def without_impairments(self):
        """No distortion and perfect CSI."""
        return dataclasses.replace(
            self.without_distortion(), err_var_sr=0.0, err_var_rd=0.0, err_var_sd=0.0, err_var_rr=0.0
        )

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out

    def __eq__(self, other):
        if not isinstance(other, SystemConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def default_config(**overrides):
    """The default simulation setup (K=4, N_BS=32, -30 dB distortion, ...)."""
    return SystemConfig(**overrides)


# ---------------------------------------------------------------------------
# config file format
# ---------------------------------------------------------------------------

_ALIASES = {
    "noise_var": ("noise_var_relay", "noise_var_dest"),
    "err_var": ("err_var_sr", "err_var_rd", "err_var_sd", "err_var_rr"),
    "distortion": ("kappa_relay", "beta_relay", "beta_dest", "theta_tx_source"),
    "strength": ("strength_sr", "strength_rd"),
}
_INT_KEYS = ("num_subcarriers", "num_bs_antennas")
_FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SystemConfig))


def _parse_value(raw, as_db, where):
    try:
        items = [float(tok) for tok in raw.split(",")]
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as a number or comma-separated list")
    arr = np.array(items)
    if as_db:
        arr = db_to_linear(arr)
    return float(arr[0]) if arr.size == 1 else arr


def parse_config(text, source="<string>"):
    """Parse ``key = value`` lines into a :class:`SystemConfig`.

    Blank lines and ``#`` comments are ignored. A key ending in ``_db`` is
    read in decibels and converted to linear scale. Values may be
    comma-separated lists for per-subcarrier fields. Aliases ``noise_var``,
    ``err_var``, ``distortion`` and ``strength`` set several fields at once.
    Errors are reported as ``source:line: message``.
    """
    values = {}
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        where = f"{source}:{lineno}"
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{where}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if not raw:
            raise ConfigError(f"{where}: missing value for {key!r}")
        as_db = key.endswith("_db")
        base = key[:-3] if as_db else key
        if base in _INT_KEYS:
            if as_db:
                raise ConfigError(f"{where}: {base} cannot be given in dB")
            try:
                values[base] = int(raw)
            except ValueError:
                raise ConfigError(f"{where}: {base} must be an integer, got {raw!r}")
            targets = (base,)
        elif base in _ALIASES:
            parsed = _parse_value(raw, as_db, where)
            targets = _ALIASES[base]
            for name in targets:
                values[name] = parsed
        elif base in _FIELD_NAMES:
            values[base] = _parse_value(raw, as_db, where)
            targets = (base,)
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")
        for name in targets:
            seen[name] = where
    try:
        return SystemConfig(**values)
    except ConfigError as exc:
        name = next((n for n in seen if str(exc).startswith(n)), None)
        prefix = seen[name] if name else source
        raise ConfigError(f"{prefix}: {exc}") from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    return parse_config(text, source=str(path))


def format_config(config):
    """Render a config in the file format; ``parse_config`` reads it back."""
    lines = []
    for name, value in config.to_dict().items():
        if isinstance(value, list):
            text = ", ".join(repr(float(v)) for v in value)
        else:
            text = repr(value)
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n"
