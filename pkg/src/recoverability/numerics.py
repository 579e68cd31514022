"""Dense complex-matrix kernel.

Hermitian eigendecomposition, matrix functions restricted to the support of
a positive semi-definite operator, Schatten norms, tensor products, partial
traces and subsystem permutations. Everything here is a pure function of
its inputs; matrices are plain ``numpy`` arrays of dtype ``complex128``.

The support convention matters throughout: for a PSD operator
``A = sum_i l_i |i><i|`` a function ``f(A)`` sums only over ``l_i > cutoff``,
so negative and imaginary powers act as pseudo-inverses / partial
isometries on ``supp(A)`` and annihilate its kernel.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidParameter,
    NotHermitian,
    NotPSD,
    NumericsError,
    ShapeError,
)

#: eigenvalue l is treated as zero iff l <= dim * l_max * RANK_CUTOFF
RANK_CUTOFF = 1e-12
#: relative tolerance on ||A - A^dag||_inf
HERM_TOL = 1e-10
#: relative tolerance on the most negative eigenvalue of a PSD operator
PSD_TOL = 1e-10


@dataclass(frozen=True)
class CompositeLabels:
    """Names and dimensions of the tensor factors of a composite system."""

    names: tuple
    dims: tuple

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        dims = tuple(int(d) for d in self.dims)
        if len(names) != len(dims):
            raise ShapeError(f"{len(names)} names for {len(dims)} dims")
        if len(set(names)) != len(names):
            raise InvalidParameter(f"subsystem names must be unique, got {names}")
        if any(d < 1 for d in dims):
            raise InvalidParameter(f"subsystem dims must be >= 1, got {dims}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_dims(cls, dims, names=None):
        dims = tuple(dims)
        if names is None:
            names = tuple(f"S{i}" for i in range(len(dims)))
        return cls(tuple(names), dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self):
        return len(self.dims)

    def index(self, key) -> int:
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < len(self.dims):
                raise InvalidParameter(f"subsystem index {key} out of range")
            return int(key)
        try:
            return self.names.index(str(key))
        except ValueError:
            raise InvalidParameter(f"unknown subsystem {key!r}; have {self.names}") from None

    def subset(self, keys) -> "CompositeLabels":
        idx = [self.index(k) for k in keys]
        return CompositeLabels(tuple(self.names[i] for i in idx), tuple(self.dims[i] for i in idx))

    def permuted(self, perm) -> "CompositeLabels":
        return self.subset(perm)


class EigenSystem(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_labels(labels) -> CompositeLabels:
    if isinstance(labels, CompositeLabels):
        return labels
    if hasattr(labels, "dims") and hasattr(labels, "names"):
        return CompositeLabels(labels.names, labels.dims)
    return CompositeLabels.from_dims(labels)


def as_matrix(A) -> np.ndarray:
    """Return ``A`` as a finite 2-D complex array (no copy when possible)."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidParameter("matrix contains NaN or Inf entries")
    return M


def dagger(A) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2))


def _fingerprint(M: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(M).tobytes()).hexdigest()[:16]


def check_hermitian(A, tol: float = HERM_TOL) -> np.ndarray:
    """Validate Hermiticity and return the symmetrized matrix ``(A + A^dag)/2``."""
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"Hermitian operator must be square, got {M.shape}")
    scale = np.linalg.norm(M, 2) if M.size else 0.0
    skew = np.linalg.norm(M - dagger(M), 2) if M.size else 0.0
    if skew > tol * max(scale, np.finfo(float).tiny):
        raise NotHermitian(f"||A - A^dag|| = {skew:.3e} exceeds {tol:g} * ||A|| = {tol * scale:.3e}")
    return (M + dagger(M)) / 2


def herm_eig(A, tol: float = HERM_TOL) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and orthonormal eigenvector columns,
    so that ``V @ diag(w) @ V^dag`` reconstructs ``A``.
    """
    M = check_hermitian(A, tol)
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(
            f"eigh failed on {M.shape[0]}x{M.shape[1]} matrix (fingerprint {_fingerprint(M)}): {exc}"
        ) from exc
    return EigenSystem(w, V)


def support_mask(eigenvalues, rel_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Boolean mask of the eigenvalues that belong to the support."""
    w = np.asarray(eigenvalues, dtype=float)
    if w.size == 0:
        return np.zeros(0, dtype=bool)
    top = w.max()
    if top <= 0:
        return np.zeros(w.shape, dtype=bool)
    return w > w.size * top * rel_cutoff


def psd_eig(A, psd_tol: float = PSD_TOL, rel_cutoff: float = RANK_CUTOFF):
    """Eigendecomposition of a PSD operator plus its support mask.

    Raises:
        NotPSD: if an eigenvalue is below ``-psd_tol * ||A||_inf``.
    """
    w, V = herm_eig(A)
    if w.size:
        scale = max(abs(w[0]), abs(w[-1]))
        if w[0] < -psd_tol * scale:
            raise NotPSD(f"minimum eigenvalue {w[0]:.3e} below -{psd_tol:g} * {scale:.3e}")
    return w, V, support_mask(w, rel_cutoff)


def function_on_support(A, f, *, rel_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """``sum_{l_i > cutoff} f(l_i) |i><i|`` for a PSD operator ``A``."""
    w, V, mask = psd_eig(A, rel_cutoff=rel_cutoff)
    Vs = V[:, mask]
    fw = np.asarray(f(w[mask]), dtype=complex)
    return (Vs * fw) @ dagger(Vs)


def power_on_support(A, z, *, rel_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Complex power ``A^z`` restricted to the support of PSD ``A``.

    Zero eigenvalues are excluded, so ``z < 0`` gives a pseudo-inverse power
    and purely imaginary ``z`` gives a partial isometry on ``supp(A)``.

    >>> power_on_support(np.diag([4.0, 9.0]), 0.5).real
    array([[2., 0.],
           [0., 3.]])
    """
    z = complex(z)
    return function_on_support(A, lambda w: np.exp(z * np.log(w)), rel_cutoff=rel_cutoff)


def support_projector(A, *, rel_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Orthogonal projector onto ``supp(A)``."""
    return function_on_support(A, np.ones_like, rel_cutoff=rel_cutoff)


def log_on_support(A, *, rel_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    return function_on_support(A, np.log, rel_cutoff=rel_cutoff)


def schatten_norm(A, p: float = 2.0) -> float:
    """Schatten p-norm ``(sum_i s_i^p)^(1/p)``; ``p=inf`` is the largest singular value.

    Raises:
        InvalidParameter: for ``p < 1``.
    """
    p = float(p)
    if not p >= 1:
        raise InvalidParameter(f"Schatten norm needs p >= 1, got {p}")
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if s.size == 0:
        return 0.0
    if math.isinf(p):
        return float(s[0])
    top = s[0]
    if top == 0:
        return 0.0
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def log_schatten_norm(A, p: float) -> float:
    """``log ||A||_p`` for any ``p > 0``, evaluated without overflow.

    For ``p < 1`` this is the log of the Schatten quasi-norm. Returns
    ``-inf`` for the zero matrix.
    """
    p = float(p)
    if not p > 0:
        raise InvalidParameter(f"need p > 0, got {p}")
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return -math.inf
    top = s[0]
    if math.isinf(p):
        return float(math.log(top))
    return float(math.log(top) + math.log(np.sum((s / top) ** p)) / p)


def kron(A, B, *more) -> np.ndarray:
    """Kronecker product of two or more matrices."""
    out = np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))
    for C in more:
        out = np.kron(out, np.asarray(C, dtype=complex))
    return out


def _square_tensor(M, labels):
    labels = _as_labels(labels)
    M = as_matrix(M)
    if M.shape != (labels.total, labels.total):
        raise ShapeError(f"matrix shape {M.shape} does not match subsystem dims {labels.dims}")
    return M.reshape(labels.dims + labels.dims), labels


def partial_trace(M, labels, traced) -> np.ndarray:
    """Trace out the subsystems ``traced`` (indices or names) of ``M``.

    The remaining subsystems keep their relative order.
    """
    T, labels = _square_tensor(M, labels)
    n = len(labels)
    drop = sorted({labels.index(k) for k in traced})
    keep = [i for i in range(n) if i not in drop]
    dk = math.prod(labels.dims[i] for i in keep)
    dt = math.prod(labels.dims[i] for i in drop)
    T = T.transpose(keep + drop + [n + i for i in keep] + [n + i for i in drop])
    return np.einsum("ajbj->ab", T.reshape(dk, dt, dk, dt))


def reduced(M, labels, kept) -> np.ndarray:
    """Marginal on the subsystems ``kept``, in the order given."""
    labels = _as_labels(labels)
    idx = [labels.index(k) for k in kept]
    traced = [i for i in range(len(labels)) if i not in idx]
    R = partial_trace(M, labels, traced)
    order = sorted(idx)
    if idx != order:
        R = permute_systems(R, labels.subset(order), [order.index(i) for i in idx])
    return R


def _check_perm(perm, n):
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise InvalidParameter(f"{perm} is not a permutation of range({n})")
    return perm


def permute_systems(M, labels, perm) -> np.ndarray:
    """Reorder tensor factors: subsystem ``i`` of the result is ``perm[i]`` of ``M``."""
    T, labels = _square_tensor(M, labels)
    n = len(labels)
    perm = _check_perm(perm, n)
    T = T.transpose(perm + [n + p for p in perm])
    return T.reshape(labels.total, labels.total)


def permutation_matrix(dims, perm) -> np.ndarray:
    """Unitary ``P`` with ``P M P^dag == permute_systems(M, dims, perm)``."""
    dims = tuple(int(d) for d in dims)
    perm = _check_perm(perm, len(dims))
    D = math.prod(dims)
    P = np.eye(D, dtype=complex).reshape(dims + (D,))
    return P.transpose(perm + [len(dims)]).reshape(D, D)


def embed(op, dims, targets) -> np.ndarray:
    """Act with ``op`` on subsystems ``targets`` (in that order), identity elsewhere."""
    dims = tuple(int(d) for d in dims)
    targets = [int(t) for t in targets]
    rest = [i for i in range(len(dims)) if i not in targets]
    d_rest = math.prod(dims[i] for i in rest)
    full = kron(op, np.eye(d_rest))
    order = targets + rest
    # full acts on the ordering `order`; bring it back to the natural one
    inv = list(np.argsort(order))
    return permute_systems(full, [dims[i] for i in order], inv)


def trace_distance_norm(A, B) -> float:
    """``||A - B||_1``."""
    return schatten_norm(as_matrix(A) - as_matrix(B), 1)


# -- JSON interchange ---------------------------------------------------------


def matrix_to_json(M) -> dict:
    """``{"rows", "cols", "re", "im"}`` with row-major entry lists."""
    M = as_matrix(M)
    flat = M.reshape(-1)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * len(obj["re"])), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeError(f"malformed matrix object: {exc}") from exc
    if re.shape != (rows * cols,) or im.shape != (rows * cols,):
        raise ShapeError(f"expected {rows * cols} entries for a {rows}x{cols} matrix")
    return as_matrix((re + 1j * im).reshape(rows, cols))
