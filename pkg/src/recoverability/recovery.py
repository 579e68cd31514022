"""Recovery maps: Petz, rotated Petz, and their special cases.

Every map is returned in Kraus form. The rotations ``omega^{it}`` are folded
directly into the Kraus operators, so the rotated Petz map

    U_{sigma,t} o R^P_{sigma,N} o U_{N(sigma),-t}

has Kraus operators ``sigma^{1/2+it} K_k^dag N(sigma)^{-1/2-it}``. All
powers act on supports, so the maps annihilate anything outside
``supp(N(sigma))`` and land inside ``supp(sigma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidChannel, ShapeError
from .numerics import (
    CompositeLabels,
    as_matrix,
    dagger,
    kron,
    power_on_support,
    reduced,
    support_mask,
    herm_eig,
)
from .quantum import Ensemble, QuantumMap, RankOneMeasurement, choi, partial_trace_channel

PROVENANCES = ("petz", "rotated_petz", "cmi", "sequential", "eb", "pgm")


@dataclass(frozen=True, eq=False)
class RecoveryMap:
    """A recovery channel together with its rotation parameter and origin."""

    base: QuantumMap
    t: float = 0.0
    provenance: str = "petz"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __call__(self, X) -> np.ndarray:
        return self.base(X)

    @property
    def in_dim(self) -> int:
        return self.base.in_dim

    @property
    def out_dim(self) -> int:
        return self.base.out_dim

    @property
    def kraus(self) -> np.ndarray:
        return self.base.kraus

    def choi(self) -> np.ndarray:
        return choi(self.base)

    def compose(self, first) -> QuantumMap:
        first = first.base if isinstance(first, RecoveryMap) else first
        return self.base.compose(first)


def _require_tp(channel: QuantumMap):
    if not channel.trace_preserving:
        raise InvalidChannel("Petz recovery requires a trace-preserving channel")


def rotated_petz_kraus(sigma, channel: QuantumMap, t: float) -> np.ndarray:
    S = as_matrix(sigma)
    left = power_on_support(S, 0.5 + 1j * t)
    right = power_on_support(channel(S), -0.5 - 1j * t)
    return left @ dagger(channel.kraus) @ right


def petz(sigma, channel: QuantumMap) -> RecoveryMap:
    """``sigma^{1/2} N^dag(N(sigma)^{-1/2} (.) N(sigma)^{-1/2}) sigma^{1/2}``."""
    _require_tp(channel)
    return RecoveryMap(QuantumMap(rotated_petz_kraus(sigma, channel, 0.0)), 0.0, "petz")


def rotated_petz(sigma, channel: QuantumMap, t: float) -> RecoveryMap:
    _require_tp(channel)
    t = float(t)
    return RecoveryMap(QuantumMap(rotated_petz_kraus(sigma, channel, t)), t, "rotated_petz")


def rotation(omega, t: float) -> QuantumMap:
    """``X -> omega^{it} X omega^{-it}`` (partial isometry on ``supp(omega)``)."""
    return QuantumMap(power_on_support(omega, 1j * float(t))[None])


class RotatedPetzFamily:
    """The one-parameter family ``t -> R^{P,t}_{sigma,N}`` with eigendecompositions cached.

    ``output(t, X)`` evaluates ``R^{P,t}(X)`` with two diagonal phase
    multiplications instead of rebuilding Kraus operators, which is what the
    t-search needs.
    """

    def __init__(self, sigma, channel: QuantumMap):
        _require_tp(channel)
        S = as_matrix(sigma)
        self.channel = channel
        self.sigma = S
        w, V = herm_eig(S)
        m = support_mask(w)
        self._sv, self._slog = V[:, m], np.log(w[m])
        NS = channel(S)
        u, W = herm_eig(NS)
        n = support_mask(u)
        self._nv, self._nlog = W[:, n], np.log(u[n])
        self.petz = petz(S, channel)

    def output(self, t: float, X) -> np.ndarray:
        """``U_{sigma,t}(R^P(U_{N(sigma),-t}(X)))``."""
        Wn = self._nv
        # U_{N(sigma),-t}: conjugate the support block by exp(-i t log mu)
        ph = np.exp(-1j * t * self._nlog)
        Y = Wn @ (ph[:, None] * (dagger(Wn) @ X @ Wn) * ph.conj()[None, :]) @ dagger(Wn)
        Z = self.petz(Y)
        Vs = self._sv
        ph = np.exp(1j * t * self._slog)
        return Vs @ (ph[:, None] * (dagger(Vs) @ Z @ Vs) * ph.conj()[None, :]) @ dagger(Vs)

    def output_factor(self, t: float, L) -> np.ndarray:
        """``X_t`` with ``X_t X_t^dag = R^{P,t}(L L^dag)``: Kraus operators applied to ``L``, side by side."""
        Wn = self._nv
        Y = Wn @ (np.exp(-1j * t * self._nlog)[:, None] * (dagger(Wn) @ L))
        Z = np.concatenate(list(self.petz.kraus @ Y), axis=1)
        Vs = self._sv
        return Vs @ (np.exp(1j * t * self._slog)[:, None] * (dagger(Vs) @ Z))

    def map(self, t: float) -> RecoveryMap:
        return RecoveryMap(
            QuantumMap(rotated_petz_kraus(self.sigma, self.channel, t)), float(t), "rotated_petz"
        )


def cmi_recovery(rho_ac, t: float = 0.0, dims=None) -> RecoveryMap:
    """Rotated Petz map ``C -> A (x) C`` for the conditional mutual information.

    ``X -> rho_AC^{it} rho_AC^{1/2} (I_A (x) rho_C^{-1/2} rho_C^{-it} X rho_C^{it} rho_C^{-1/2}) rho_AC^{1/2} rho_AC^{-it}``
    """
    labels = _labels(rho_ac, dims, 2)
    dA, dC = labels.dims
    R = as_matrix(rho_ac)
    rho_c = reduced(R, labels, [1])
    left = power_on_support(R, 0.5 + 1j * t)
    right = power_on_support(rho_c, -0.5 - 1j * t)
    eye_a = np.eye(dA)
    K = np.stack([left @ kron(eye_a[:, a : a + 1], right) for a in range(dA)])
    return RecoveryMap(QuantumMap(K), float(t), "cmi")


def sequential_recovery(rho, t: float = 0.0, dims=None) -> RecoveryMap:
    """``R^{P,t}_{C->A_l C} o ... o R^{P,t}_{C->A_2 C}``, mapping ``A_1 C -> A_1...A_l C``.

    Step ``i`` uses ``cmi_recovery`` of the marginal ``rho_{A_i C}`` and acts
    with the identity on the systems ``A_1 ... A_{i-1}`` already present.
    C is the last subsystem of ``rho``.
    """
    labels = _labels(rho, dims, None)
    n = len(labels)
    if n < 3:
        raise ShapeError(f"sequential recovery needs A_1, A_2 and C, got {labels.dims}")
    c = n - 1
    R = as_matrix(rho)
    total = None
    for i in range(1, c):
        step = cmi_recovery(reduced(R, labels, [i, c]), t, dims=(labels.dims[i], labels.dims[c])).base
        d_prev = math.prod(labels.dims[:i])
        step = QuantumMap(np.stack([kron(np.eye(d_prev), K) for K in step.kraus]))
        total = step if total is None else step.compose(total)
    return RecoveryMap(total, float(t), "sequential")


def eb_map(rho_a, m: RankOneMeasurement, cutoff: float | None = None) -> QuantumMap:
    """Measure-and-prepare map ``X -> sum_x <phi_x|X|phi_x> rho^{1/2}|phi_x><phi_x|rho^{1/2} / <phi_x|rho|phi_x>``.

    Outcomes with ``<phi_x|rho|phi_x>`` at or below ``cutoff`` contribute no term.
    """
    A = as_matrix(rho_a)
    if A.shape[0] != m.dim:
        raise ShapeError(f"state dim {A.shape[0]} vs measurement dim {m.dim}")
    half = power_on_support(A, 0.5)
    q = np.einsum("xi,ij,xj->x", m.vectors.conj(), A, m.vectors).real
    if cutoff is None:
        cutoff = m.num_outcomes * max(q.max(), 0) * 1e-12
    kraus = []
    for x in range(m.num_outcomes):
        if q[x] <= cutoff:
            continue
        phi = m.vectors[x][:, None]
        kraus.append(half @ phi @ dagger(phi) / math.sqrt(q[x]))
    if not kraus:
        kraus.append(np.zeros_like(A))
    return QuantumMap(np.stack(kraus))


def pgm_elements(ensemble: Ensemble, t: float = 0.0) -> np.ndarray:
    """POVM elements ``avg^{it} avg^{-1/2} p_x s_x avg^{-1/2} avg^{-it}``, summing to ``Pi_avg``."""
    avg = ensemble.average()
    left = power_on_support(avg, -0.5 + 1j * t)
    return np.stack([left @ (p * s.matrix) @ dagger(left) for p, s in zip(ensemble.probs, ensemble.members)])


def pgm(ensemble: Ensemble, t: float = 0.0) -> QuantumMap:
    """Rotated pretty-good measurement as a quantum-to-classical map ``X -> sum_x Tr(E_x X)|x><x|``."""
    E = pgm_elements(ensemble, t)
    n, d = E.shape[0], E.shape[1]
    kraus = []
    for x in range(n):
        w, V = herm_eig(E[x])
        for j in np.nonzero(support_mask(w))[0]:
            K = np.zeros((n, d), dtype=complex)
            K[x] = math.sqrt(w[j]) * V[:, j].conj()
            kraus.append(K)
    if not kraus:
        kraus.append(np.zeros((n, d), dtype=complex))
    return QuantumMap(np.stack(kraus))


def local_petz_product(rho, pairs, t: float = 0.0, dims=None) -> RecoveryMap:
    """``R^{P,t}_{rho_{A_1 A_1'}, Tr_{A_1}} (x) ... (x) R^{P,t}_{rho_{A_l A_l'}, Tr_{A_l}}``.

    ``pairs`` lists ``(a_i, a_i')`` subsystem indices of ``rho``; each factor
    maps ``A_i' -> A_i A_i'``. The result maps ``A_1'...A_l'`` to
    ``A_1 A_1' ... A_l A_l'`` with the factors in pair order.
    """
    labels = _labels(rho, dims, None)
    R = as_matrix(rho)
    total = None
    for a, ap in pairs:
        sub = reduced(R, labels, [a, ap])
        factor = rotated_petz(sub, partial_trace_channel((labels.dims[a], labels.dims[ap]), [0]), t).base
        total = factor if total is None else total.tensor(factor)
    return RecoveryMap(total, float(t), "rotated_petz")


def _labels(rho, dims, n):
    if dims is None:
        labels = getattr(rho, "labels", None)
        if labels is None:
            raise ShapeError("subsystem dims are required")
    else:
        labels = dims if isinstance(dims, CompositeLabels) else CompositeLabels.from_dims(dims)
    if n is not None and len(labels) != n:
        raise ShapeError(f"expected {n} subsystems, got {labels.dims}")
    return labels
