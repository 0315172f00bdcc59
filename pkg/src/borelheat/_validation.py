"""Small input-validation helpers shared by the functional API and estimators."""

import numbers

import numpy as np

from .exceptions import InputError


def check_positive(value, name, *, allow_zero=False):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise InputError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = "nonnegative" if allow_zero else "positive"
        raise InputError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_int(value, name, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InputError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise InputError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_interval(interval, name="interval"):
    try:
        lo, hi = (float(v) for v in interval)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a pair (lo, hi), got {interval!r}") from None
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise InputError(f"{name} must satisfy lo < hi, got {interval!r}")
    return lo, hi


def check_window(window, n_values):
    lo, hi = (int(v) for v in window)
    if lo < 0 or hi < lo + 2:
        raise InputError(f"fit window must hold at least 3 orders, got {window!r}")
    if hi >= n_values:
        raise InputError(f"fit window {window!r} exceeds the {n_values} available values")
    return lo, hi


def as_points(x, d):
    """Coerce evaluation points to shape ``(n, d)``; returns (array, squeeze shape)."""
    arr = np.asarray(x, dtype=float)
    if d == 1:
        shape = arr.shape
        return arr.reshape(-1, 1), shape
    if arr.shape[-1] != d:
        raise InputError(f"points must have trailing dimension {d}, got shape {arr.shape}")
    shape = arr.shape[:-1]
    return arr.reshape(-1, d), shape
