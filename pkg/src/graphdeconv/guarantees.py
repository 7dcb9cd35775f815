"""Recovery certificates for blind deconvolution on graphs.

Under the Bernoulli-Gaussian source model, the constrained l1 program
recovers the true inverse response exactly (with high probability) when
the response's deviation from the constraint direction is small relative
to a margin constant that depends only on the sparsity level, a handful
of concentration parameters, and how evenly the shift operator's
eigenvector energy spreads over the graph.  This module evaluates that
margin, the exact-recovery certificate, and the companion stability
bounds for noisy observations.

All norms: ``entrywise_l1`` is sum of absolute entries; the 1->2 operator
norm of a matrix is the largest column l2 norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ContractViolationError
from .gsp import apply_spectral_filter
from .validation import as_float_array, check_vector

ROOT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def max_sparsity_level():
    """Largest admissible activation probability for the certificate.

    Unique root of sqrt(pi)*t^2 + 2*t + (sqrt(pi)/2)*t^(3/2) - 1 on
    (0, 1/e]; the margin constant stays positive for theta below it
    (given in-range concentration parameters).  Approximately 0.32464.
    """

    def f(t):
        return math.sqrt(math.pi) * t * t + 2.0 * t + 0.5 * math.sqrt(math.pi) * t ** 1.5 - 1.0

    lo, hi = 1e-12, math.exp(-1.0)
    if f(hi) < 0:  # pragma: no cover - cannot happen, f(1/e) > 0
        raise RuntimeError("root bracketing failed")
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return (lo + hi) / 2.0


_THETA_CAP = max_sparsity_level()


@dataclass(frozen=True)
class CertificateParams:
    """Concentration parameters entering the recovery margin.

    theta   : source activation probability, in (0, ~0.32464].
    sigma1  : row-sum concentration slack, in (0, sqrt(pi)*theta^1.5 / 2].
    sigma2  : on-support concentration slack, in (0, sqrt(pi)*theta / 2].
    sigma3  : objective concentration slack, > 0.
    sigma4  : worst-row mean-deficit bound, in (0, 1).
    sigma5  : alignment between the response offset and the optimal
              perturbation direction, in [0, 1]; 1 is the conservative
              choice (smallest stability coefficient when the exact
              certificate holds).
    failure_prob : certificate failure probability delta, in (0, 1).
    """

    theta: float
    sigma1: float
    sigma2: float
    sigma3: float = 0.1
    sigma4: float = 0.1
    sigma5: float = 1.0
    failure_prob: float = 0.05

    def __post_init__(self):
        t = float(self.theta)
        if not (0.0 < t <= _THETA_CAP):
            raise ContractViolationError(
                f"theta must lie in (0, {_THETA_CAP:.5f}], got {t}"
            )
        s1_cap = math.sqrt(math.pi) * t ** 1.5 / 2.0
        s2_cap = math.sqrt(math.pi) * t / 2.0
        if not (0.0 < self.sigma1 <= s1_cap):
            raise ContractViolationError(
                f"sigma1 must lie in (0, {s1_cap:.6g}] for theta={t}, got {self.sigma1}"
            )
        if not (0.0 < self.sigma2 <= s2_cap):
            raise ContractViolationError(
                f"sigma2 must lie in (0, {s2_cap:.6g}] for theta={t}, got {self.sigma2}"
            )
        if not self.sigma3 > 0.0:
            raise ContractViolationError(f"sigma3 must be > 0, got {self.sigma3}")
        if not (0.0 < self.sigma4 < 1.0):
            raise ContractViolationError(f"sigma4 must lie in (0, 1), got {self.sigma4}")
        if not (0.0 <= self.sigma5 <= 1.0):
            raise ContractViolationError(f"sigma5 must lie in [0, 1], got {self.sigma5}")
        if not (0.0 < self.failure_prob < 1.0):
            raise ContractViolationError(
                f"failure_prob must lie in (0, 1), got {self.failure_prob}"
            )

    @classmethod
    def for_theta(cls, theta, **overrides):
        """Defaults: sigma1 and sigma2 at their largest admissible values."""
        t = float(theta)
        params = dict(
            theta=t,
            sigma1=math.sqrt(math.pi) * t ** 1.5 / 2.0,
            sigma2=math.sqrt(math.pi) * t / 2.0,
        )
        params.update(overrides)
        return cls(**params)

    @property
    def sigma_min(self):
        return min(self.sigma1, self.sigma2, self.sigma3, self.sigma4)


@dataclass(frozen=True)
class RecoveryCertificate:
    """Outcome of the exact-recovery check: offset vs. scaled margin."""

    offset_norm: float  # l2 norm of the centered, r-weighted response
    threshold: float  # c * margin
    margin: float
    coherence: Optional[float]
    satisfied: bool


@dataclass(frozen=True)
class StabilityReport:
    """Error bounds for the noisy program, in l1 and l2 norms.

    Both bounds share a denominator; when it is not positive the noise is
    too large for the guarantee and the bounds are +inf.
    """

    bound_l1: float
    bound_l2: float
    coefficient: float  # the Q factor multiplying P in the denominator
    noise_l1: float  # entrywise l1 norm of the off-support filtered noise
    denominator: float


def entrywise_l1(M):
    return float(np.abs(np.asarray(M, dtype=float)).sum())


def max_column_l2(M):
    """Operator norm from (l1, columns) to l2: largest column l2 norm."""
    M = as_float_array(M, "matrix", ndim=2)
    if M.shape[1] == 0:
        return 0.0
    return float(np.sqrt((M * M).sum(axis=0)).max())


def eigenvector_coherence(eigenvectors):
    """Largest singular value of the centered squared-eigenvector matrix.

    Rows of the matrix hold each node's energy across eigenvectors;
    centering removes the constant component.  Values near 0 mean the
    eigenvector energy is spread evenly over nodes (favorable for
    recovery); values near 1 mean some eigenvector is localized.
    """
    V = as_float_array(eigenvectors, "eigenvectors", ndim=2)
    W = V * V
    W = W - W.mean(axis=1, keepdims=True)
    return float(np.linalg.svd(W, compute_uv=False)[0])


def recovery_margin(params, coherence):
    """Margin constant gating exact recovery.

    sqrt(1 - coherence^2) * [(1 - sigma1) - 2*theta*(1 + sigma2)]
      * (1 - sigma4) / ((1 + sigma3) * sqrt(theta))

    Positive whenever coherence < 1 and the parameters are in range; a
    larger value tolerates responses further from the constraint
    direction.
    """
    coherence = float(coherence)
    if not (0.0 <= coherence <= 1.0):
        raise ContractViolationError(
            f"coherence must lie in [0, 1], got {coherence}"
        )
    p = params
    spread = math.sqrt(max(0.0, 1.0 - coherence * coherence))
    gap = (1.0 - p.sigma1) - 2.0 * p.theta * (1.0 + p.sigma2)
    return spread * gap * (1.0 - p.sigma4) / ((1.0 + p.sigma3) * math.sqrt(p.theta))


def response_offset(g0, r, n=None):
    """Centered, r-weighted inverse response: (r o g0) minus its mean."""
    g0 = check_vector(g0, n, "g0")
    r = check_vector(r, g0.shape[0], "r")
    d = r * g0
    return d - d.mean()


def check_exact_recovery(g0, r, c, margin, coherence=None):
    """Certificate: ||centered r o g0||_2 <= c * margin.

    When satisfied (and the sample size requirement holds), the true
    inverse response is the unique program solution with probability at
    least 1 - failure_prob.
    """
    c = float(c)
    offset = float(np.linalg.norm(response_offset(g0, r)))
    threshold = c * float(margin)
    return RecoveryCertificate(
        offset_norm=offset,
        threshold=threshold,
        margin=float(margin),
        coherence=None if coherence is None else float(coherence),
        satisfied=bool(offset <= threshold),
    )


def stability_coefficient(params, margin, offset_norm, c):
    """Q factor of the stability bound.

    (1 + sigma3) * sqrt(theta) / c
      * [ sqrt(c^2 margin^2 - (1 - sigma5)^2 offset^2) - sigma5 * offset ]

    Requires c * margin >= (1 - sigma5) * offset so the root is real;
    that holds whenever the exact-recovery certificate is satisfied.
    """
    c = float(c)
    offset_norm = float(offset_norm)
    inner = (c * margin) ** 2 - ((1.0 - params.sigma5) * offset_norm) ** 2
    if inner < 0:
        raise ContractViolationError(
            "stability coefficient undefined: offset exceeds the scaled margin"
        )
    return (
        (1.0 + params.sigma3)
        * math.sqrt(params.theta)
        / c
        * (math.sqrt(inner) - params.sigma5 * offset_norm)
    )


def offsupport_filtered_noise(g0, eigenvectors, noise, support_mask):
    """Noise as seen by the sources, restricted off the true support.

    Applies the true inverse response to the raw observation noise and
    zeroes the entries on the source support.
    """
    filtered = apply_spectral_filter(eigenvectors, g0, noise)
    mask = np.asarray(support_mask, dtype=bool)
    if mask.shape != filtered.shape:
        raise ContractViolationError(
            f"support mask shape {mask.shape} != noise shape {filtered.shape}"
        )
    return np.where(mask, 0.0, filtered)


def stable_recovery_bound(g0, r, c, noise_offsupport, eigenvectors, params, margin):
    """Error bounds on the estimated inverse response under noise.

    numerator_l =
        2 * || diag(g0) (I - ones (r o g0)^T / c) ||_{l->2} * ||N_C||_1,1
    denominator =
        sqrt(2/pi) * P * Q - margin * ||N_C||_1,1
          - max_k || N_C^T v_k ||_2

    where N_C is the off-support filtered noise, Q the stability
    coefficient, and v_k the eigenvectors.  Returns +inf bounds when the
    denominator is not positive (noise too large for the guarantee).
    """
    V = as_float_array(eigenvectors, "eigenvectors", ndim=2)
    n = V.shape[0]
    g0 = check_vector(g0, n, "g0")
    r = check_vector(r, n, "r")
    c = float(c)
    N_C = as_float_array(noise_offsupport, "noise_offsupport", ndim=2)
    if N_C.shape[0] != n:
        raise ContractViolationError(
            f"noise has {N_C.shape[0]} rows, expected {n}"
        )
    n_signals = N_C.shape[1]

    offset = float(np.linalg.norm(response_offset(g0, r)))
    q_value = stability_coefficient(params, margin, offset, c)
    noise_l1 = entrywise_l1(N_C)
    khatri = _khatri_rao_column_norms(N_C, V)
    denominator = (
        ROOT_2_OVER_PI * n_signals * q_value - margin * noise_l1 - khatri
    )

    M = np.diag(g0) - np.outer(g0, r * g0) / c
    col_norms = np.sqrt((M * M).sum(axis=0))
    op_1_to_2 = float(col_norms.max())
    op_2_to_2 = float(np.linalg.svd(M, compute_uv=False)[0])

    if denominator <= 0.0:
        b1 = b2 = float("inf")
    else:
        b1 = 2.0 * op_1_to_2 * noise_l1 / denominator
        b2 = 2.0 * op_2_to_2 * noise_l1 / denominator
    return StabilityReport(
        bound_l1=b1,
        bound_l2=b2,
        coefficient=q_value,
        noise_l1=noise_l1,
        denominator=float(denominator),
    )


def _khatri_rao_column_norms(B, V):
    """Largest column l2 norm of the Khatri-Rao product (B^T V) kr V.

    Column k of the product is kron(B^T v_k, v_k); with unit-norm v_k its
    l2 norm is ||B^T v_k||_2, so the max can be computed without forming
    the product.
    """
    BtV = B.T @ V
    return float(np.sqrt((BtV * BtV).sum(axis=0)).max())


def noise_tolerance(noise_offsupport, eigenvectors, q_value, margin, n_signals=None):
    """Largest tolerable Frobenius norm of the off-support filtered noise.

    sqrt(2/pi) * P * Q / (margin * ||N_bar||_1,1 + max column l2 of
    N_bar^T V kr V), where N_bar is the noise normalized to unit
    Frobenius norm — only the noise *shape* matters here.
    """
    V = as_float_array(eigenvectors, "eigenvectors", ndim=2)
    N_C = as_float_array(noise_offsupport, "noise_offsupport", ndim=2)
    fro = float(np.linalg.norm(N_C))
    if fro == 0.0:
        return float("inf")
    N_bar = N_C / fro
    p = int(n_signals) if n_signals is not None else N_C.shape[1]
    denom = margin * entrywise_l1(N_bar) + _khatri_rao_column_norms(N_bar, V)
    return ROOT_2_OVER_PI * p * float(q_value) / denom


def mean_deficit_bound(alpha, theta):
    """Deficit bound on the expected magnitude of a sparse combination.

    For a unit-l2 hollow mixing row with peak entry alpha, the expected
    absolute value of its Bernoulli-Gaussian combination is at least
    sqrt(2/pi) * (1 - bound).  Piecewise in alpha:

        alpha <= sqrt(theta):  alpha^2 / theta
        alpha >  sqrt(theta):  1 - sqrt(theta) * alpha
                                 * (1 + (1 - alpha^2) * theta^2
                                        / (2 * alpha^2 * (1 - theta)))

    The two branches do not meet at alpha = sqrt(theta): the first tends
    to 1 while the second starts at 1 - theta - theta^2/2, so the bound
    jumps downward as alpha crosses the threshold.
    """
    alpha = float(alpha)
    theta = float(theta)
    if not (0.0 < alpha <= 1.0):
        raise ContractViolationError(f"alpha must lie in (0, 1], got {alpha}")
    if not (0.0 < theta <= math.exp(-1.0)):
        raise ContractViolationError(
            f"theta must lie in (0, 1/e], got {theta}"
        )
    if alpha <= math.sqrt(theta):
        return alpha * alpha / theta
    correction = 1.0 + (1.0 - alpha * alpha) * theta * theta / (
        2.0 * alpha * alpha * (1.0 - theta)
    )
    return 1.0 - math.sqrt(theta) * alpha * correction


def min_sample_size(sigma_min, failure_prob, scale_constant=1.0):
    """Observations needed for the certificate's probability guarantee.

    ceil(scale_constant * sigma_min^-2 * log(4 / failure_prob)).  The
    scale constant is not pinned by the theory; 1.0 gives the right
    growth law for comparisons.
    """
    sigma_min = float(sigma_min)
    if sigma_min <= 0:
        raise ContractViolationError(f"sigma_min must be > 0, got {sigma_min}")
    failure_prob = float(failure_prob)
    if not (0.0 < failure_prob < 1.0):
        raise ContractViolationError(
            f"failure_prob must lie in (0, 1), got {failure_prob}"
        )
    if scale_constant <= 0:
        raise ContractViolationError("scale_constant must be > 0")
    return math.ceil(
        scale_constant * sigma_min ** -2 * math.log(4.0 / failure_prob)
    )
