"""Dense symmetric linear algebra with explicit tolerance contracts.

Everything here is small-dimensional (a few hundred at most) and pure:
matrices are immutable once built and every function returns fresh data.

Tolerances
----------
TOL_PD
    Eigenvalue ``lam`` of ``A`` counts as positive when
    ``lam > TOL_PD * max(1, ||A||_F)``, negative when below the negated
    threshold, zero otherwise.
TOL_RANK
    Singular values at or below ``TOL_RANK * max(1, sigma_max)`` count as
    zero, so a set of rounding-level vectors has rank 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

TOL_PD = 1e-9
TOL_PSD = 1e-9
TOL_RANK = 1e-10
TOL_EIGEN = 1e-9
TOL_ORTHO = 1e-9

JACOBI_MAX_SWEEPS = 100
FINSLER_MAX_DOUBLINGS = 60


class NumkitError(Exception):
    """Base class for linear-algebra contract failures."""


class EigenConvergenceError(NumkitError):
    pass


class DimensionError(NumkitError, ValueError):
    pass


class NotPSDError(NumkitError, ValueError):
    pass


class SymmetricMatrix:
    """Immutable dense symmetric matrix.

    The input is symmetrized as ``(A + A.T) / 2`` so that entries are
    exactly mirrored. A 0x0 matrix is allowed only as the result of
    restricting to an empty subspace.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim == 0 or a.size == 0:
            a = np.zeros((0, 0))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self._a = a

    @classmethod
    def zero_dimensional(cls) -> "SymmetricMatrix":
        return cls(np.zeros((0, 0)))

    @classmethod
    def zeros(cls, dim: int) -> "SymmetricMatrix":
        return cls(np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._a

    def to_array(self) -> np.ndarray:
        return self._a.copy()

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self._a)) if self.dim else 0.0

    @property
    def scale(self) -> float:
        return max(1.0, self.frobenius)

    def __add__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"cannot add {self.dim}x{self.dim} and {other.dim}x{other.dim}")
        return SymmetricMatrix(self._a + other._a)

    def __sub__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "SymmetricMatrix":
        return SymmetricMatrix(float(scalar) * self._a)

    __rmul__ = __mul__

    def __neg__(self) -> "SymmetricMatrix":
        return SymmetricMatrix(-self._a)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymmetricMatrix) and np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash(self._a.tobytes())

    def __repr__(self) -> str:
        return f"SymmetricMatrix({self._a.tolist()!r})"


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis, stored as the columns of ``vectors``."""

    ambient_dim: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float).reshape(self.ambient_dim, -1)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        if v.shape[1] > self.ambient_dim:
            raise DimensionError("more basis vectors than the ambient dimension")

    @classmethod
    def full(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(ambient_dim, np.eye(ambient_dim))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def basis(self) -> list[np.ndarray]:
        return [self.vectors[:, k].copy() for k in range(self.dim)]

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def distance(self, x) -> float:
        """Euclidean distance from ``x`` to the span."""
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.projector() @ x))

    def contains(self, other: "SubspaceBasis", tol: float = TOL_ORTHO) -> bool:
        return all(self.distance(v) <= tol for v in other.basis)


class Definiteness(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    POSITIVE_SEMIDEFINITE = "PositiveSemidefinite"
    NEGATIVE_SEMIDEFINITE = "NegativeSemidefinite"
    INDEFINITE = "Indefinite"
    ZERO_DIMENSIONAL = "ZeroDimensional"

    @property
    def is_definite(self) -> bool:
        return self in (Definiteness.POSITIVE_DEFINITE, Definiteness.NEGATIVE_DEFINITE)

    @property
    def sign(self) -> int | None:
        if self is Definiteness.POSITIVE_DEFINITE:
            return 1
        if self is Definiteness.NEGATIVE_DEFINITE:
            return -1
        return None


def _jacobi(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0 or n == 1:
        return np.diag(a).copy(), v
    eps = np.finfo(float).eps
    skip = eps * norm / n
    for _ in range(max_sweeps):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off <= 10 * n * eps * norm:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise EigenConvergenceError(
        f"cyclic Jacobi did not converge after {max_sweeps} sweeps "
        f"(||A||_F = {norm:.6g}, dim = {n})"
    )


def symmetric_eigen(A: SymmetricMatrix, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors via cyclic Jacobi."""
    if A.dim == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    w, v = _jacobi(A.entries, max_sweeps)
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


def eigenvalues(A: SymmetricMatrix) -> np.ndarray:
    return symmetric_eigen(A).eigenvalues


def classify_eigenvalues(eigs: Sequence[float], scale: float, tol: float = TOL_PD) -> Definiteness:
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size == 0:
        return Definiteness.ZERO_DIMENSIONAL
    thresh = tol * scale
    pos = int(np.sum(eigs > thresh))
    neg = int(np.sum(eigs < -thresh))
    n = eigs.size
    if pos == n:
        return Definiteness.POSITIVE_DEFINITE
    if neg == n:
        return Definiteness.NEGATIVE_DEFINITE
    if pos and neg:
        return Definiteness.INDEFINITE
    if neg:
        return Definiteness.NEGATIVE_SEMIDEFINITE
    # all zero counts as positive semidefinite
    return Definiteness.POSITIVE_SEMIDEFINITE


def classify_definiteness(A: SymmetricMatrix) -> Definiteness:
    if A.dim == 0:
        return Definiteness.ZERO_DIMENSIONAL
    return classify_eigenvalues(eigenvalues(A), A.scale)


def margin(A: SymmetricMatrix) -> float:
    """Smallest ``|eigenvalue|`` relative to ``max(1, ||A||_F)``; 0 when empty."""
    if A.dim == 0:
        return 0.0
    return float(np.min(np.abs(eigenvalues(A))) / A.scale)


def _as_rows(vectors, ambient_dim: int) -> np.ndarray:
    rows = [np.asarray(v, dtype=float).ravel() for v in vectors]
    for r in rows:
        if r.size != ambient_dim:
            raise DimensionError(f"vector of length {r.size} in ambient dimension {ambient_dim}")
    return np.array(rows).reshape(len(rows), ambient_dim)


def _rank(s: np.ndarray, tol: float) -> int:
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def matrix_rank(vectors, ambient_dim: int, tol: float = TOL_RANK) -> int:
    m = _as_rows(vectors, ambient_dim)
    if m.shape[0] == 0:
        return 0
    return _rank(np.linalg.svd(m, compute_uv=False), tol)


def null_space(vectors, ambient_dim: int, tol: float = TOL_RANK) -> SubspaceBasis:
    """Orthonormal basis of ``{x : v.x = 0 for every v in vectors}``."""
    m = _as_rows(vectors, ambient_dim)
    if m.shape[0] == 0:
        return SubspaceBasis.full(ambient_dim)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    return SubspaceBasis(ambient_dim, vh[_rank(s, tol):].T.copy())


def least_squares_minnorm(columns, target, tol: float = TOL_RANK) -> tuple[np.ndarray, float]:
    """Minimum-norm solution of ``sum_j c_j * columns[j] ~= target``.

    Returns the coefficients and ``||sum_j c_j columns[j] - target||_2``.
    """
    b = np.asarray(target, dtype=float).ravel()
    if len(columns) == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    a = _as_rows(columns, b.size).T
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    r = _rank(s, tol)
    coef = vh[:r].T @ ((u[:, :r].T @ b) / s[:r])
    residual = float(np.linalg.norm(a @ coef - b))
    return coef, residual


def restrict_quadratic_form(A: SymmetricMatrix, B: SubspaceBasis) -> SymmetricMatrix:
    if B.ambient_dim != A.dim:
        raise DimensionError(f"basis lives in R^{B.ambient_dim} but the form is {A.dim}x{A.dim}")
    if B.dim == 0:
        return SymmetricMatrix.zero_dimensional()
    return SymmetricMatrix(B.vectors.T @ A.entries @ B.vectors)


class FinslerCertificate(NamedTuple):
    alpha: float
    min_eigenvalue: float


def finsler_schedule(max_doublings: int = FINSLER_MAX_DOUBLINGS) -> list[float]:
    return [0.0] + [float(2**k) for k in range(max_doublings + 1)]


def finsler_alpha_search(
    P: SymmetricMatrix,
    Q: SymmetricMatrix,
    sign: int = 1,
    max_doublings: int = FINSLER_MAX_DOUBLINGS,
) -> FinslerCertificate | None:
    """Smallest ``|alpha|`` in ``0, 1, 2, 4, ...`` making ``sign * (P + alpha Q)`` positive definite.

    The search runs on ``sign * P + a Q`` with ``a >= 0`` and returns
    ``alpha = sign * a``, so a negative-definite certificate carries a
    non-positive curvature. ``None`` means the schedule ran out: no certificate was found, which is
    not a proof that none exists.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if P.dim != Q.dim:
        raise DimensionError(f"P is {P.dim}x{P.dim} but Q is {Q.dim}x{Q.dim}")
    if Q.dim == 0:
        return None
    q_min = eigenvalues(Q)[0]
    if q_min < -TOL_PSD * Q.scale:
        raise NotPSDError(f"Q is not positive semidefinite (min eigenvalue {q_min:.3e})")
    base = sign * P
    for a in finsler_schedule(max_doublings):
        M = base + a * Q
        mu = float(eigenvalues(M)[0])
        if mu > TOL_PD * M.scale:
            return FinslerCertificate(sign * a, mu)
    return None
