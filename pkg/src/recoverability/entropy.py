"""Scalar information measures, all in nats.

``math.inf`` is returned as an explicit sentinel where a quantity is
infinite by convention (support violations); it never arises from overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, ShapeError, SupportError
from .numerics import (
    CompositeLabels,
    as_matrix,
    dagger,
    embed,
    kron,
    log_schatten_norm,
    power_on_support,
    psd_eig,
    reduced,
    schatten_norm,
    support_projector,
)
from .quantum import QuantumMap, StinespringIsometry, stinespring

#: supp(omega) in supp(tau) iff ||(I - P_tau) omega (I - P_tau)|| <= dim * SUPPORT_TOL * ||omega||
SUPPORT_TOL = 1e-10


@dataclass(frozen=True)
class RenyiParam:
    """Renyi order ``alpha`` (``!= 1``) with ``alpha' = (alpha - 1) / alpha`` cached."""

    alpha: float
    alpha_prime: float = None

    def __post_init__(self):
        a = float(self.alpha)
        if not (a > 0 and math.isfinite(a)) or a == 1:
            raise InvalidParameter(f"alpha must lie in (0,1) or (1,inf), got {a}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "alpha_prime", (a - 1) / a)


def _alpha(a) -> RenyiParam:
    return a if isinstance(a, RenyiParam) else RenyiParam(a)


def _dims_of(rho, dims):
    if dims is not None:
        return CompositeLabels.from_dims(dims) if not isinstance(dims, CompositeLabels) else dims
    labels = getattr(rho, "labels", None)
    if labels is None:
        raise ShapeError("subsystem dims are required (pass dims= or a labelled operator)")
    return labels


def _psd(M):
    w, V, mask = psd_eig(as_matrix(M))
    return np.clip(w, 0, None), V, mask


def von_neumann(rho) -> float:
    """``-Tr rho log rho``, summed over the support."""
    w, _, mask = _psd(rho)
    lam = w[mask]
    return float(-np.sum(lam * np.log(lam)))


def support_contained(omega, tau, tol: float = SUPPORT_TOL) -> bool:
    """Numerical test of ``supp(omega) <= supp(tau)``."""
    W = as_matrix(omega)
    Q = np.eye(W.shape[0]) - support_projector(tau)
    leak = np.linalg.norm(Q @ W @ Q, 2)
    return bool(leak <= W.shape[0] * tol * max(np.linalg.norm(W, 2), np.finfo(float).tiny))


def relative_entropy(omega, tau) -> float:
    """``D(omega||tau) = Tr omega (log omega - log tau)``; ``inf`` if the support condition fails."""
    W, T = as_matrix(omega), as_matrix(tau)
    if W.shape != T.shape:
        raise ShapeError(f"shape mismatch {W.shape} vs {T.shape}")
    if not support_contained(W, T):
        return math.inf
    w, _, wmask = _psd(W)
    lam = w[wmask]
    first = float(np.sum(lam * np.log(lam)))
    u, V, umask = _psd(T)
    Vs = V[:, umask]
    diag = np.einsum("ij,ik,kj->j", Vs.conj(), W, Vs).real
    second = float(np.sum(np.log(u[umask]) * diag))
    return first - second


def max_relative_entropy(omega, tau) -> float:
    """``log ||omega^{1/2} tau^+ omega^{1/2}||_inf``; ``inf`` if the support condition fails."""
    W, T = as_matrix(omega), as_matrix(tau)
    if not support_contained(W, T):
        return math.inf
    half = power_on_support(W, 0.5)
    M = half @ power_on_support(T, -1) @ half
    top = np.linalg.eigvalsh((M + dagger(M)) / 2)[-1]
    return float(math.log(top))


def fidelity(rho, sigma) -> float:
    """``F = ||sqrt(rho) sqrt(sigma)||_1^2``."""
    root = schatten_norm(power_on_support(rho, 0.5) @ power_on_support(sigma, 0.5), 1)
    return root * root


def root_fidelity_with(sqrt_rho: np.ndarray, tau: np.ndarray) -> float:
    """``sqrt(F)(rho, tau)`` given ``sqrt(rho)`` precomputed."""
    return root_fidelity_factor(sqrt_rho, power_on_support(tau, 0.5))


def root_fidelity_factor(sqrt_rho: np.ndarray, factor: np.ndarray) -> float:
    """``sqrt(F)(rho, X X^dag) = ||sqrt(rho) X||_1`` for any factor ``X``.

    Singular values are accurate to roundoff even where ``rho`` and
    ``X X^dag`` are nearly orthogonal, unlike square roots of the
    eigenvalues of ``sqrt(rho) tau sqrt(rho)``.
    """
    return float(np.sum(np.linalg.svd(sqrt_rho @ factor, compute_uv=False)))


def conditional_entropy(rho, dims, conditioning) -> float:
    """``H(rest | conditioning) = H(all) - H(conditioning)``."""
    labels = _dims_of(rho, dims)
    return von_neumann(rho) - von_neumann(reduced(rho, labels, conditioning))


def rel_ent_difference(rho, sigma, channel: QuantumMap) -> float:
    """``D(rho||sigma) - D(N(rho)||N(sigma))``.

    Raises:
        SupportError: if ``supp(rho)`` is not inside ``supp(sigma)``.
    """
    R, S = as_matrix(rho), as_matrix(sigma)
    if not support_contained(R, S):
        raise SupportError("supp(rho) is not contained in supp(sigma)")
    return relative_entropy(R, S) - relative_entropy(channel(R), channel(S))


def cmi(rho, dims=None) -> float:
    """``I(A;B|C) = H(AC) + H(BC) - H(C) - H(ABC)`` for a state on (A, B, C)."""
    labels = _dims_of(rho, dims)
    if len(labels) != 3:
        raise ShapeError(f"cmi needs three subsystems, got {labels.dims}")
    H = lambda keep: von_neumann(reduced(rho, labels, keep))
    return H([0, 2]) + H([1, 2]) - H([2]) - von_neumann(rho)


def multipartite_info(rho, dims=None) -> float:
    """``I(B_1:...:B_l) = sum_i H(B_i) - H(B_1...B_l)``."""
    labels = _dims_of(rho, dims)
    return sum(von_neumann(reduced(rho, labels, [i])) for i in range(len(labels))) - von_neumann(rho)


def cond_multipartite_info(rho, dims=None) -> float:
    """``I(A_1:...:A_l|C) = sum_i H(A_i|C) - H(A_1...A_l|C)``; C is the last subsystem."""
    labels = _dims_of(rho, dims)
    n = len(labels)
    if n < 3:
        raise ShapeError(f"need at least two A systems and C, got {labels.dims}")
    c = n - 1
    H = lambda keep: von_neumann(reduced(rho, labels, keep))
    h_c = H([c])
    total = sum(H([i, c]) - h_c for i in range(c))
    return total - (von_neumann(rho) - h_c)


def delta_tilde(rho, sigma, channel: QuantumMap, alpha, dilation: StinespringIsometry | None = None) -> float:
    """Renyi relative-entropy difference.

    ``(2a/(a-1)) log ||(N(rho)^{(1-a)/2a} N(sigma)^{(a-1)/2a} (x) I_E) V sigma^{(1-a)/2a} rho^{1/2}||_{2a}``
    with ``V`` an isometric extension of ``N`` and every power taken on its
    operator's support. The value does not depend on which dilation is used.
    """
    a = _alpha(alpha).alpha
    R, S = as_matrix(rho), as_matrix(sigma)
    if not support_contained(R, S):
        raise SupportError("supp(rho) is not contained in supp(sigma)")
    iso = stinespring(channel) if dilation is None else dilation
    e = (1 - a) / (2 * a)
    NR, NS = channel(R), channel(S)
    left = kron(power_on_support(NR, e) @ power_on_support(NS, -e), np.eye(iso.env_dim))
    X = left @ iso.V @ power_on_support(S, e) @ power_on_support(R, 0.5)
    return _scaled_log_norm(X, a)


def _scaled_log_norm(X, a):
    lg = log_schatten_norm(X, 2 * a)
    if lg == -math.inf:
        return math.inf if a < 1 else -math.inf
    return 2 * a / (a - 1) * lg


def renyi_cmi(rho, alpha, dims=None) -> float:
    """Renyi conditional mutual information of a state on (A, B, C).

    ``(2a/(a-1)) log ||rho_BC^{(1-a)/2a} rho_C^{(a-1)/2a} rho_AC^{(1-a)/2a} rho_ABC^{1/2}||_{2a}``
    with each marginal padded by identities in the (A, B, C) ordering.
    """
    a = _alpha(alpha).alpha
    labels = _dims_of(rho, dims)
    if len(labels) != 3:
        raise ShapeError(f"renyi_cmi needs three subsystems, got {labels.dims}")
    dims3 = labels.dims
    R = as_matrix(rho)
    e = (1 - a) / (2 * a)
    op = lambda keep, z: embed(power_on_support(reduced(R, labels, keep), z), dims3, keep)
    X = op([1, 2], e) @ op([2], -e) @ op([0, 2], e) @ power_on_support(R, 0.5)
    return _scaled_log_norm(X, a)


def renyi_cond_multipartite(rho, alpha, dims=None) -> float:
    """Renyi conditional multipartite information ``I_a(A_1:...:A_l|C)``.

    ``(2/a') log ||rho^{1/2} rho_{A_l C}^{-a'/2} rho_C^{a'/2} ... rho_{A_2 C}^{-a'/2} rho_C^{a'/2} rho_{A_1 C}^{-a'/2}||_{2a}``
    with ``a' = (a - 1)/a``; C is the last subsystem.
    """
    param = _alpha(alpha)
    a, ap = param.alpha, param.alpha_prime
    labels = _dims_of(rho, dims)
    n = len(labels)
    if n < 3:
        raise ShapeError(f"need at least two A systems and C, got {labels.dims}")
    c = n - 1
    R = as_matrix(rho)
    op = lambda keep, z: embed(power_on_support(reduced(R, labels, keep), z), labels.dims, keep)
    rho_c = op([c], ap / 2)
    X = power_on_support(R, 0.5)
    for i in range(c - 1, 0, -1):
        X = X @ op([i, c], -ap / 2) @ rho_c
    X = X @ op([0, c], -ap / 2)
    return _scaled_log_norm(X, a)
