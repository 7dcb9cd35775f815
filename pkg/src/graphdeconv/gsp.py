"""Graph-shift operators, spectral decompositions and graph filters.

The blind deconvolution pipeline works in the eigenbasis of a symmetric
graph-shift operator S = V diag(lambda) V^T.  A graph filter is either a
polynomial in S with coefficients h (so its action is sum_l h_l S^l) or,
equivalently, a pointwise frequency response applied in the eigenbasis.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import (
    ContractViolationError,
    DegenerateDegreeError,
    InvertibilityError,
)
from .validation import as_float_array, check_adjacency, check_symmetric, check_vector


class GsoKind(str, Enum):
    """Which shift operator to derive from an adjacency matrix."""

    ADJACENCY = "adjacency"
    NORMALIZED_ADJACENCY = "normalized-adjacency"
    LAPLACIAN = "laplacian"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        aliases = {
            "adj": cls.ADJACENCY,
            "adjacency": cls.ADJACENCY,
            "norm-adj": cls.NORMALIZED_ADJACENCY,
            "normalized-adjacency": cls.NORMALIZED_ADJACENCY,
            "laplacian": cls.LAPLACIAN,
        }
        key = str(text).strip().lower()
        if key not in aliases:
            raise ContractViolationError(
                f"unknown shift operator kind {text!r}; "
                f"expected one of {sorted(set(aliases))}"
            )
        return aliases[key]


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph held as a symmetric, hollow adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        A = check_adjacency(self.adjacency).copy()
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def n_nodes(self):
        return self.adjacency.shape[0]

    @property
    def degrees(self):
        return self.adjacency.sum(axis=1)

    def is_connected(self):
        """Breadth-first reachability from node 0."""
        n = self.n_nodes
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.nonzero(self.adjacency[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        return bool(seen.all())


@dataclass(frozen=True)
class ShiftOperator:
    """A symmetric shift matrix together with the rule that produced it."""

    matrix: np.ndarray
    kind: GsoKind

    def __post_init__(self):
        M = check_symmetric(self.matrix, "shift matrix").copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def n_nodes(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Orthonormal eigenvectors (columns of V) and eigenvalues, descending."""

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n_nodes(self):
        return self.eigenvectors.shape[0]


def shift_operator(graph, kind=GsoKind.NORMALIZED_ADJACENCY):
    """Build a graph-shift operator from ``graph``.

    ``adjacency`` uses A itself; ``normalized-adjacency`` uses
    D^{-1/2} A D^{-1/2} and requires every degree to be positive;
    ``laplacian`` uses the combinatorial Laplacian D - A.  (Some texts
    define the Laplacian with the opposite sign; this library uses the
    positive-semidefinite convention.)
    """
    kind = GsoKind.parse(kind) if not isinstance(kind, GsoKind) else kind
    A = graph.adjacency
    if kind is GsoKind.ADJACENCY:
        S = A.copy()
    elif kind is GsoKind.NORMALIZED_ADJACENCY:
        d = A.sum(axis=1)
        if np.any(d <= 0):
            bad = np.nonzero(d <= 0)[0]
            raise DegenerateDegreeError(
                f"normalized adjacency undefined: zero-degree nodes {bad.tolist()}"
            )
        inv_sqrt = 1.0 / np.sqrt(d)
        S = A * np.outer(inv_sqrt, inv_sqrt)
    else:
        S = np.diag(A.sum(axis=1)) - A
    S = (S + S.T) / 2.0  # clear rounding asymmetry
    return ShiftOperator(S, kind)


def spectral_decomposition(shift):
    """Symmetric eigendecomposition with eigenvalues sorted descending.

    Accepts a ShiftOperator or a raw symmetric matrix.  Eigenvectors are
    orthonormal columns; the sign of each column is whatever the LAPACK
    driver returns, which is deterministic for a fixed input.
    """
    M = shift.matrix if isinstance(shift, ShiftOperator) else shift
    M = check_symmetric(M, "shift matrix")
    eigvals, eigvecs = np.linalg.eigh(M)
    order = slice(None, None, -1)  # eigh is ascending; reverse it
    return SpectralDecomposition(
        eigenvectors=eigvecs[:, order].copy(),
        eigenvalues=eigvals[order].copy(),
    )


def vandermonde(eigenvalues, order):
    """N x order matrix with entry (i, l) = eigenvalue_i ** l, l = 0..order-1."""
    eigenvalues = check_vector(eigenvalues, name="eigenvalues")
    order = int(order)
    if order < 1:
        raise ContractViolationError(f"filter order must be >= 1, got {order}")
    return np.vander(eigenvalues, order, increasing=True)


def frequency_response(coeffs, eigenvalues):
    """Evaluate the polynomial filter's response at each eigenvalue."""
    coeffs = check_vector(coeffs, name="coeffs")
    return vandermonde(eigenvalues, coeffs.shape[0]) @ coeffs


def apply_polynomial_filter(shift, coeffs, X):
    """Apply sum_l coeffs[l] * S^l to the columns of X via Horner's rule.

    Never forms powers of S explicitly; cost is order-1 matrix products.
    """
    S = shift.matrix if isinstance(shift, ShiftOperator) else as_float_array(shift, "shift", 2)
    coeffs = check_vector(coeffs, name="coeffs")
    if coeffs.shape[0] < 1:
        raise ContractViolationError("filter must have at least one coefficient")
    X = as_float_array(X, "X")
    out = coeffs[-1] * X
    for c in coeffs[-2::-1]:
        out = S @ out + c * X
    return out


def apply_spectral_filter(eigenvectors, response, X):
    """Apply V diag(response) V^T to the columns of X."""
    V = as_float_array(eigenvectors, "eigenvectors", 2)
    response = check_vector(response, V.shape[1], "response")
    X = as_float_array(X, "X")
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    out = V @ (response[:, None] * (V.T @ X))
    return out[:, 0] if squeeze else out


def is_invertible_response(response, tol=None):
    """True when every response entry is safely away from zero.

    The default tolerance is 1e-8 times the largest response magnitude.
    """
    response = check_vector(response, name="response")
    if tol is None:
        tol = 1e-8 * float(np.abs(response).max()) if response.size else 0.0
    elif tol <= 0:
        raise ContractViolationError(f"tol must be positive, got {tol}")
    return bool(np.abs(response).min(initial=np.inf) > tol)


def inverse_response(response, tol=None):
    """Pointwise reciprocal of a frequency response, guarded against zeros."""
    response = check_vector(response, name="response")
    if not is_invertible_response(response, tol):
        raise InvertibilityError(
            "frequency response has entries too close to zero to invert"
        )
    return 1.0 / response


def khatri_rao_design(Y, eigenvectors):
    """Columnwise Khatri-Rao product (Y^T V) kr V, shaped (N*P, N).

    Column k equals kron(Y^T v_k, v_k), so for any response g the product
    equals vec(V diag(g) V^T Y) with column-major (Fortran) vectorization:
    row p*N + n corresponds to entry (n, p) of the filtered matrix.
    """
    V = as_float_array(eigenvectors, "eigenvectors", 2)
    Y = as_float_array(Y, "Y", 2)
    n = V.shape[0]
    if Y.shape[0] != n:
        raise ContractViolationError(
            f"Y has {Y.shape[0]} rows but eigenvectors have {n}"
        )
    B = Y.T @ V  # (P, N)
    return (B[:, None, :] * V[None, :, :]).reshape(Y.shape[1] * n, n)
