"""Input validation helpers shared by the library and the estimator API."""

import numbers

import numpy as np

from .exceptions import InputError


def check_tensor3(A, min_dim=1, name="tensor"):
    """Validate and coerce a degree-3 tensor to a float64 ndarray.

    Parameters
    ----------
    A : array-like of shape (n1, n2, n3)
    min_dim : int
        Smallest admissible size along every mode.
    name : str
        Label used in error messages.

    Returns
    -------
    ndarray of shape (n1, n2, n3), dtype float64, C-contiguous.
    """
    A = np.ascontiguousarray(np.asarray(A, dtype=np.float64))
    if A.ndim != 3:
        raise InputError(f"{name} must have exactly 3 modes, got shape {A.shape}")
    if min(A.shape) < min_dim:
        raise InputError(
            f"{name} needs every mode of size >= {min_dim}, got dims {A.shape}"
        )
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite entries")
    return A


def check_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} contains non-finite entries")
    return M


def check_vector(x, name="vector"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InputError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} contains non-finite entries")
    return x


def check_seed(seed, name="seed"):
    """Validate an integer seed (None allowed, mapped to 0)."""
    if seed is None:
        return 0
    if isinstance(seed, (bool, np.bool_)) or not isinstance(
        seed, (numbers.Integral, np.integer)
    ):
        raise InputError(f"{name} must be an integer or None, got {seed!r}")
    return int(seed)


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise InputError(f"{name} must be a finite number, got {value!r}")
    if strict and value <= 0:
        raise InputError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise InputError(f"{name} must be >= 0, got {value}")
    return value
