"""Small input-validation helpers shared by the public entry points."""

import numbers

import numpy as np


class ConfigError(ValueError):
    """Raised when a system configuration or config file is invalid."""


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_nonnegative(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ConfigError(f"{name} must be a finite nonnegative real, got {value!r}")
    return value


def check_unit_interval(value, name):
    """Distortion coefficients live in [0, 1)."""
    value = check_nonnegative(value, name)
    if value >= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1), got {value!r}")
    return value


def check_per_subcarrier(value, num_subcarriers, name):
    """Broadcast a scalar or validate a length-K array of nonnegative reals."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(num_subcarriers, float(arr))
    if arr.shape != (num_subcarriers,):
        raise ConfigError(
            f"{name} must be a scalar or have length {num_subcarriers}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ConfigError(f"{name} must contain finite nonnegative reals")
    arr.setflags(write=False)
    return arr


def check_powers(values, num_subcarriers, name):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (num_subcarriers,):
        raise ValueError(f"{name} must have shape ({num_subcarriers},), got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    return arr
