"""Random problem instances: graphs, sparse sources, filters, noise.

All generators draw from a SeedStream, a splittable wrapper around
numpy's SeedSequence.  Two streams with different paths are statistically
independent, and a stream's output never depends on how many other
streams exist — so running realizations in parallel, or skipping some,
reproduces identical draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import ContractViolationError, GenerationError
from .gsp import Graph
from .validation import as_float_array, check_prob


@dataclass(frozen=True)
class SeedStream:
    """A reproducible, splittable random stream (master seed + path)."""

    master_seed: int
    path: Tuple[int, ...] = ()

    def child(self, *indices):
        """Derive an independent sub-stream by extending the path."""
        return SeedStream(self.master_seed, self.path + tuple(int(i) for i in indices))

    def generator(self):
        """Fresh numpy Generator for this stream (same stream, same draws)."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.default_rng(seq)


def as_stream(seed):
    """Accept a SeedStream or a plain int master seed."""
    if isinstance(seed, SeedStream):
        return seed
    return SeedStream(int(seed))


@dataclass(frozen=True)
class SourceMatrix:
    """Sparse source matrix with its exact support and activation level."""

    values: np.ndarray
    support: frozenset
    theta: float

    @property
    def support_mask(self):
        mask = np.zeros(self.values.shape, dtype=bool)
        for i, p in self.support:
            mask[i, p] = True
        return mask


def erdos_renyi_graph(n_nodes, edge_prob, seed, max_attempts=1000):
    """Connected Erdos-Renyi graph; resamples until connected.

    Raises GenerationError when max_attempts consecutive draws are all
    disconnected (likely for small edge_prob).
    """
    n = int(n_nodes)
    if n < 2:
        raise ContractViolationError(f"need at least 2 nodes, got {n}")
    p = check_prob(edge_prob, "edge_prob", closed_right=True)
    rng = as_stream(seed).generator()
    iu = np.triu_indices(n, k=1)
    for _ in range(int(max_attempts)):
        A = np.zeros((n, n))
        A[iu] = (rng.random(len(iu[0])) < p).astype(float)
        A = A + A.T
        g = Graph(A)
        if g.is_connected():
            return g
    raise GenerationError(
        f"no connected graph in {max_attempts} attempts (n={n}, p={p})"
    )


def bernoulli_gaussian_sources(n_nodes, n_signals, theta, seed):
    """Sparse sources: each entry is active w.p. theta, value N(0,1)/sqrt(theta).

    The 1/sqrt(theta) scaling gives every column unit expected energy
    regardless of the activation level.
    """
    n, p = int(n_nodes), int(n_signals)
    if n < 1 or p < 1:
        raise ContractViolationError("n_nodes and n_signals must be >= 1")
    theta = check_prob(theta, "theta", closed_right=True)
    rng = as_stream(seed).generator()
    active = rng.random((n, p)) < theta
    gauss = rng.standard_normal((n, p))
    values = np.where(active, gauss, 0.0) / np.sqrt(theta)
    support = frozenset(
        (int(i), int(j)) for i, j in zip(*np.nonzero(values))
    )
    return SourceMatrix(values=values, support=support, theta=theta)


def perturbed_inverse_response(n_nodes, alpha, seed):
    """Inverse frequency response 1 + alpha * b with b centered, ||b||_2 = n.

    alpha = 0 reproduces the identity filter exactly; the component of the
    result orthogonal to the all-ones vector has norm alpha * n.
    """
    n = int(n_nodes)
    if n < 2:
        raise ContractViolationError(f"need at least 2 nodes, got {n}")
    alpha = float(alpha)
    if alpha < 0:
        raise ContractViolationError(f"alpha must be >= 0, got {alpha}")
    rng = as_stream(seed).generator()
    while True:
        b = rng.standard_normal(n)
        b -= b.mean()
        norm = np.linalg.norm(b)
        if norm > 1e-12:
            break
    b *= n / norm
    return 1.0 + alpha * b


def perturbed_filter_coeffs(order, beta, seed):
    """Polynomial filter coefficients: leading 1, remaining N(0, beta^2)."""
    order = int(order)
    if order < 1:
        raise ContractViolationError(f"order must be >= 1, got {order}")
    beta = float(beta)
    if beta < 0:
        raise ContractViolationError(f"beta must be >= 0, got {beta}")
    h = np.zeros(order)
    h[0] = 1.0
    if order > 1:
        h[1:] = beta * as_stream(seed).generator().standard_normal(order - 1)
    return h


def add_noise(Y, eta, seed):
    """Additive white Gaussian noise with entrywise standard deviation eta."""
    Y = as_float_array(Y, "Y")
    eta = float(eta)
    if eta < 0:
        raise ContractViolationError(f"eta must be >= 0, got {eta}")
    if eta == 0.0:
        return Y.copy()
    rng = as_stream(seed).generator()
    return Y + eta * rng.standard_normal(Y.shape)
