"""Validated quantum objects and seeded random samplers.

States carry a :class:`CompositeLabels` so that marginals can be taken by
subsystem name. Channels are stored in Kraus form, stacked as an array of
shape ``(k, out_dim, in_dim)``; Stinespring isometries and Choi matrices
are derived on demand.

Samplers take an explicit :class:`numpy.random.Generator`; nothing here
touches global random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    InvalidChannel,
    InvalidMeasurement,
    InvalidParameter,
    InvalidState,
    ShapeError,
)
from .numerics import (
    PSD_TOL,
    CompositeLabels,
    as_matrix,
    dagger,
    kron,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    permutation_matrix,
    psd_eig,
    check_hermitian,
    reduced,
)

#: completeness tolerance for sum_k K^dag K
KRAUS_TOL = 1e-9
TRACE_TOL = 1e-10


def _labels_for(dim, labels):
    if labels is None:
        return CompositeLabels(("S",), (dim,))
    if not isinstance(labels, CompositeLabels):
        labels = CompositeLabels.from_dims(labels)
    if labels.total != dim:
        raise ShapeError(f"labels {labels.dims} do not match operator dimension {dim}")
    return labels


@dataclass(frozen=True, eq=False)
class PSDOperator:
    """Positive semi-definite operator with subsystem labels."""

    matrix: np.ndarray
    labels: CompositeLabels = None

    def __post_init__(self):
        M = check_hermitian(self.matrix)
        w, _, _ = psd_eig(M)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "labels", _labels_for(M.shape[0], self.labels))
        self._extra_checks(w)

    def _extra_checks(self, eigenvalues):
        pass

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def marginal(self, kept):
        """Reduced operator on the named (or indexed) subsystems ``kept``."""
        M = reduced(self.matrix, self.labels, kept)
        return type(self)(M, self.labels.subset(kept))


@dataclass(frozen=True, eq=False)
class DensityOperator(PSDOperator):
    """Unit-trace PSD operator."""

    def _extra_checks(self, eigenvalues):
        tr = float(np.sum(eigenvalues))
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(
                f"trace {tr:.12g} != 1: DensityOperator requires Tr = 1 within {TRACE_TOL:g}"
            )


@dataclass(frozen=True, eq=False)
class QuantumMap:
    """Completely positive map ``X -> sum_k K_k X K_k^dag``."""

    kraus: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.kraus, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[0] == 0:
            raise ShapeError(f"Kraus operators must stack to (k, out, in), got {K.shape}")
        if not np.all(np.isfinite(K)):
            raise InvalidParameter("Kraus operators contain NaN or Inf")
        object.__setattr__(self, "kraus", K)

    @property
    def in_dim(self) -> int:
        return self.kraus.shape[2]

    @property
    def out_dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def num_kraus(self) -> int:
        return self.kraus.shape[0]

    def completeness(self) -> np.ndarray:
        """``sum_k K_k^dag K_k``."""
        K = self.kraus
        return np.einsum("kji,kjl->il", K.conj(), K)

    @property
    def trace_preserving(self) -> bool:
        return bool(np.linalg.norm(self.completeness() - np.eye(self.in_dim), 2) <= KRAUS_TOL)

    @property
    def trace_nonincreasing(self) -> bool:
        return bool(np.linalg.eigvalsh(self.completeness())[-1] <= 1 + KRAUS_TOL)

    def __call__(self, X) -> np.ndarray:
        return apply_map(self, X)

    def adjoint(self) -> "QuantumMap":
        return QuantumMap(dagger(self.kraus))

    def compose(self, first: "QuantumMap") -> "QuantumMap":
        """``self o first``: apply ``first``, then ``self``."""
        if first.out_dim != self.in_dim:
            raise ShapeError(f"cannot compose: {first.out_dim}-dim output into {self.in_dim}-dim input")
        K = np.einsum("aij,bjk->abik", self.kraus, first.kraus)
        return QuantumMap(K.reshape(-1, self.out_dim, first.in_dim))

    def tensor(self, other: "QuantumMap") -> "QuantumMap":
        K = np.einsum("aij,bkl->abikjl", self.kraus, other.kraus)
        return QuantumMap(
            K.reshape(-1, self.out_dim * other.out_dim, self.in_dim * other.in_dim)
        )

    def permuted(self, in_dims=None, in_perm=None, out_dims=None, out_perm=None) -> "QuantumMap":
        """Relabel the tensor factors of input and/or output.

        With ``P_in`` and ``P_out`` the permutation unitaries, the new map is
        ``X -> P_out N(P_in^dag X P_in) P_out^dag``: it accepts inputs in the
        permuted order and returns outputs in the permuted order.
        """
        K = self.kraus
        if out_perm is not None:
            K = permutation_matrix(out_dims, out_perm) @ K
        if in_perm is not None:
            K = K @ dagger(permutation_matrix(in_dims, in_perm))
        return QuantumMap(K)

    def choi(self) -> np.ndarray:
        return choi(self)

    def stinespring(self) -> "StinespringIsometry":
        return stinespring(self)


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    """Isometry ``V: S -> B (x) E`` (output first, environment second)."""

    V: np.ndarray
    env_dim: int

    def __post_init__(self):
        V = as_matrix(self.V)
        if V.shape[0] % self.env_dim:
            raise ShapeError(f"{V.shape[0]} rows not divisible by env_dim {self.env_dim}")
        err = np.linalg.norm(dagger(V) @ V - np.eye(V.shape[1]), 2)
        if err > 1e-10:
            raise InvalidChannel(f"V^dag V deviates from identity by {err:.3e}")
        object.__setattr__(self, "V", V)

    @property
    def out_dim(self) -> int:
        return self.V.shape[0] // self.env_dim

    @property
    def in_dim(self) -> int:
        return self.V.shape[1]

    def channel(self) -> QuantumMap:
        """Kraus form ``K_e = (I (x) <e|) V``."""
        T = self.V.reshape(self.out_dim, self.env_dim, self.in_dim)
        return QuantumMap(T.transpose(1, 0, 2))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Probabilities ``p_x`` with member operators of one common dimension."""

    probs: np.ndarray
    members: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        members = tuple(
            m if isinstance(m, PSDOperator) else PSDOperator(as_matrix(m)) for m in self.members
        )
        if p.ndim != 1 or len(p) != len(members) or len(p) == 0:
            raise ShapeError(f"{p.size} probabilities for {len(members)} members")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise InvalidParameter(f"probabilities must be nonnegative and sum to 1, got {p}")
        if len({m.dim for m in members}) != 1:
            raise ShapeError("ensemble members must share one dimension")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "members", members)

    def __len__(self):
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def average(self) -> np.ndarray:
        return sum(p * m.matrix for p, m in zip(self.probs, self.members))


@dataclass(frozen=True, eq=False)
class RankOneMeasurement:
    """Vectors ``phi_x`` (rows of ``vectors``) with ``sum_x |phi_x><phi_x| = I``."""

    vectors: np.ndarray

    def __post_init__(self):
        Phi = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        completeness = Phi.T @ Phi.conj()
        err = np.linalg.norm(completeness - np.eye(Phi.shape[1]), 2)
        if err > 1e-10:
            raise InvalidMeasurement(f"sum_x |phi_x><phi_x| deviates from I by {err:.3e}")
        object.__setattr__(self, "vectors", Phi)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def num_outcomes(self) -> int:
        return self.vectors.shape[0]


# -- constructors -------------------------------------------------------------


def channel_from_kraus(kraus: Sequence) -> QuantumMap:
    mats = [as_matrix(K) for K in kraus]
    if not mats:
        raise ShapeError("need at least one Kraus operator")
    if len({K.shape for K in mats}) != 1:
        raise ShapeError(f"Kraus operators have mixed shapes {sorted({K.shape for K in mats})}")
    return QuantumMap(np.stack(mats))


def apply_map(channel: QuantumMap, X) -> np.ndarray:
    X = as_matrix(X)
    if X.shape != (channel.in_dim, channel.in_dim):
        raise ShapeError(f"input shape {X.shape} does not match map input dim {channel.in_dim}")
    K = channel.kraus
    return np.sum(K @ X @ dagger(K), axis=0)


def adjoint_map(channel: QuantumMap) -> QuantumMap:
    return channel.adjoint()


def stinespring(channel: QuantumMap) -> StinespringIsometry:
    """Isometric extension with environment dimension = number of Kraus operators."""
    if not channel.trace_preserving:
        raise InvalidChannel("stinespring dilation requires a trace-preserving map")
    V = channel.kraus.transpose(1, 0, 2).reshape(-1, channel.in_dim)
    return StinespringIsometry(V, channel.num_kraus)


def choi(channel: QuantumMap) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) N(|i><j|)``, input factor first."""
    # vec of (I (x) K)|Gamma> has entry (i, o) = K[o, i]
    vecs = channel.kraus.transpose(0, 2, 1).reshape(channel.num_kraus, -1)
    return vecs.T @ vecs.conj()


def identity_channel(dim: int) -> QuantumMap:
    return QuantumMap(np.eye(dim, dtype=complex)[None])


def unitary_channel(U) -> QuantumMap:
    return QuantumMap(as_matrix(U)[None])


def partial_trace_channel(dims, traced) -> QuantumMap:
    """``Tr_traced`` as a Kraus map; kept subsystems retain their order."""
    labels = dims if isinstance(dims, CompositeLabels) else CompositeLabels.from_dims(dims)
    drop = sorted({labels.index(k) for k in traced})
    keep = [i for i in range(len(labels)) if i not in drop]
    d_drop = math.prod(labels.dims[i] for i in drop)
    d_keep = math.prod(labels.dims[i] for i in keep)
    P = permutation_matrix(labels.dims, drop + keep)
    eye_keep = np.eye(d_keep)
    K = [kron(np.eye(d_drop)[j : j + 1], eye_keep) @ P for j in range(d_drop)]
    return QuantumMap(np.stack(K))


def measurement_channel(m: RankOneMeasurement) -> QuantumMap:
    """``X -> sum_x <phi_x|X|phi_x> |x><x|`` with Kraus ``|x><phi_x|``."""
    n = m.num_outcomes
    K = np.zeros((n, n, m.dim), dtype=complex)
    for x in range(n):
        K[x, x, :] = m.vectors[x].conj()
    return QuantumMap(K)


def computational_measurement(dim: int) -> RankOneMeasurement:
    return RankOneMeasurement(np.eye(dim, dtype=complex))


def dephasing_channel(dim: int) -> QuantumMap:
    return measurement_channel(computational_measurement(dim))


def cq_state(ensemble: Ensemble, names=("X", "B")):
    """Flagged operator ``sum_x p_x |x><x| (x) omega_x`` on (X, B)."""
    n, d = len(ensemble), ensemble.dim
    M = np.zeros((n * d, n * d), dtype=complex)
    for x, (p, member) in enumerate(zip(ensemble.probs, ensemble.members)):
        M[x * d : (x + 1) * d, x * d : (x + 1) * d] = p * member.matrix
    labels = CompositeLabels(tuple(names), (n, d))
    if all(isinstance(m, DensityOperator) for m in ensemble.members):
        return DensityOperator(M, labels)
    return PSDOperator(M, labels)


# -- samplers -----------------------------------------------------------------


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2)


def random_density(dim: int, rank: int | None, rng: np.random.Generator, labels=None) -> DensityOperator:
    """``G G^dag / Tr(G G^dag)`` with ``G`` a ``dim x rank`` complex Gaussian draw."""
    rank = dim if rank is None else int(rank)
    if not 1 <= rank <= dim:
        raise InvalidParameter(f"need 1 <= rank <= dim, got rank={rank}, dim={dim}")
    G = _ginibre(rng, dim, rank)
    M = G @ dagger(G)
    M = (M + dagger(M)) / 2
    return DensityOperator(M / np.trace(M).real, labels)


def random_psd(dim: int, rank: int | None, rng: np.random.Generator, labels=None) -> PSDOperator:
    """Unnormalized Wishart-type PSD operator with trace drawn around 1."""
    rank = dim if rank is None else int(rank)
    if not 1 <= rank <= dim:
        raise InvalidParameter(f"need 1 <= rank <= dim, got rank={rank}, dim={dim}")
    G = _ginibre(rng, dim, rank)
    M = G @ dagger(G) / (dim * rank)
    return PSDOperator((M + dagger(M)) / 2, labels)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return random_isometry(dim, dim, rng)


def random_isometry(in_dim: int, out_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed isometry (``out_dim x in_dim``) via phase-corrected QR."""
    if out_dim < in_dim or in_dim < 1:
        raise InvalidParameter(f"isometry needs out_dim >= in_dim >= 1, got {in_dim}->{out_dim}")
    Q, R = np.linalg.qr(_ginibre(rng, out_dim, in_dim))
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_channel(in_dim: int, out_dim: int, env_dim: int, rng: np.random.Generator) -> QuantumMap:
    """Channel with Kraus ``K_e = (I (x) <e|) V`` for a random isometry ``V``."""
    if out_dim * env_dim < in_dim:
        raise InvalidParameter(f"out*env = {out_dim * env_dim} < in = {in_dim}")
    V = random_isometry(in_dim, out_dim * env_dim, rng)
    return StinespringIsometry(V, env_dim).channel()


def random_probabilities(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the probability simplex."""
    p = rng.dirichlet(np.ones(n))
    return p / p.sum()


def random_measurement(dim: int, num_outcomes: int | None, rng: np.random.Generator) -> RankOneMeasurement:
    """Rank-one POVM from the rows of a random isometry ``dim -> num_outcomes``."""
    n = dim if num_outcomes is None else int(num_outcomes)
    V = random_isometry(dim, n, rng)
    return RankOneMeasurement(V.conj())


# -- JSON interchange ---------------------------------------------------------


def channel_to_json(channel: QuantumMap) -> dict:
    return {
        "in": channel.in_dim,
        "out": channel.out_dim,
        "kraus": [matrix_to_json(K) for K in channel.kraus],
    }


def channel_from_json(obj) -> QuantumMap:
    try:
        d_in, d_out, kraus = int(obj["in"]), int(obj["out"]), obj["kraus"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeError(f"malformed channel object: {exc}") from exc
    ch = channel_from_kraus([matrix_from_json(K) for K in kraus])
    if (ch.in_dim, ch.out_dim) != (d_in, d_out):
        raise ShapeError(f"declared {d_in}->{d_out} but Kraus operators are {ch.in_dim}->{ch.out_dim}")
    return ch
