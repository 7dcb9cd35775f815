"""Input validation helpers used by the public entry points."""

from __future__ import annotations

import numpy as np

from .exceptions import ContractViolationError

SYMMETRY_TOL = 1e-10


def as_float_array(x, name="array", ndim=None):
    """Convert to a float64 ndarray, optionally enforcing dimensionality."""
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ContractViolationError(
            f"{name} must be {ndim}-dimensional, got shape {arr.shape}"
        )
    return arr


def check_square(M, name="matrix"):
    M = as_float_array(M, name, ndim=2)
    if M.shape[0] != M.shape[1]:
        raise ContractViolationError(f"{name} must be square, got shape {M.shape}")
    return M


def check_symmetric(M, name="matrix", tol=SYMMETRY_TOL):
    M = check_square(M, name)
    scale = max(1.0, float(np.abs(M).max()) if M.size else 1.0)
    if not np.all(np.abs(M - M.T) <= tol * scale):
        raise ContractViolationError(f"{name} must be symmetric")
    return M


def check_adjacency(A, name="adjacency"):
    """Validate a symmetric, hollow, non-negative adjacency matrix."""
    A = check_symmetric(A, name)
    if A.shape[0] < 1:
        raise ContractViolationError(f"{name} must have at least one node")
    if np.any(np.diag(A) != 0.0):
        raise ContractViolationError(f"{name} must have a zero diagonal")
    if np.any(A < 0.0):
        raise ContractViolationError(f"{name} must have non-negative weights")
    if not np.all(np.isfinite(A)):
        raise ContractViolationError(f"{name} must be finite")
    return A


def check_vector(x, n=None, name="vector"):
    x = as_float_array(x, name, ndim=1)
    if n is not None and x.shape[0] != n:
        raise ContractViolationError(f"{name} must have length {n}, got {x.shape[0]}")
    return x


def check_prob(value, name, closed_right=False):
    """Check a probability-like scalar lies in (0, 1) or (0, 1]."""
    value = float(value)
    hi_ok = value <= 1.0 if closed_right else value < 1.0
    if not (0.0 < value and hi_ok):
        bracket = "(0, 1]" if closed_right else "(0, 1)"
        raise ContractViolationError(f"{name} must lie in {bracket}, got {value}")
    return value
