"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .errors import NonFinite

MAX_DIM = 8


def check_square_matrix(m, *, max_dim=MAX_DIM, name="matrix"):
    """Return ``m`` as a finite float64 square array of dimension 1..max_dim."""
    a = np.array(m, dtype=float, copy=True)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    n = a.shape[0]
    if n < 1 or n > max_dim:
        raise ValueError(f"{name} dimension must be in 1..{max_dim}, got {n}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} has non-finite entries")
    return a


def check_vector(x, dim=None, *, name="x"):
    v = np.array(x, dtype=float, copy=True).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise NonFinite(f"{name} has non-finite entries")
    return v


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_positive(value, name):
    v = float(value)
    if not np.isfinite(v) or v <= 0:
        raise ValueError(f"{name} must be a positive real, got {value!r}")
    return v
