"""Exact multivariate polynomial fields.

A :class:`PolyScalarField` is a sparse map from exponent vectors to real
coefficients. Differentiation is exact (term-wise), so gradients and
Hessians carry no discretization error; only the final floating-point
evaluation rounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .numkit import DimensionError, SymmetricMatrix

TOL_CONSERVATION = 1e-12
TOL_EQUILIBRIUM = 1e-9

Exponents = tuple[int, ...]


class PolyScalarField:
    """Polynomial ``sum_t c_t * prod_k x_k ** e_tk`` in ``dim`` variables.

    Terms with equal exponent vectors are merged on construction and exact
    zeros are dropped. Instances are immutable.
    """

    def __init__(self, dim: int, terms: Iterable[tuple[float, Sequence[int]]] | Mapping[Exponents, float] = ()):
        if dim < 1:
            raise DimensionError("a polynomial field needs at least one variable")
        items = terms.items() if isinstance(terms, Mapping) else ((e, c) for c, e in terms)
        merged: dict[Exponents, float] = {}
        for exps, coef in items:
            exps = tuple(int(p) for p in exps)
            if len(exps) != dim:
                raise DimensionError(f"exponent vector {exps} has length {len(exps)}, expected {dim}")
            if any(p < 0 for p in exps):
                raise ValueError(f"negative exponent in {exps}")
            merged[exps] = merged.get(exps, 0.0) + float(coef)
        self.dim = dim
        self._terms = {e: c for e, c in sorted(merged.items()) if c != 0.0}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value: float, dim: int) -> "PolyScalarField":
        return cls(dim, [(value, (0,) * dim)])

    @classmethod
    def variable(cls, k: int, dim: int) -> "PolyScalarField":
        """The coordinate function ``x_k`` (0-based)."""
        exps = [0] * dim
        exps[k] = 1
        return cls(dim, [(1.0, exps)])

    @classmethod
    def quadratic(cls, A, b=None, c: float = 0.0, center=None) -> "PolyScalarField":
        """``1/2 (x-x0)^T A (x-x0) + b^T (x-x0) + c`` expanded into monomials."""
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        x0 = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        y = [cls.variable(k, n) - cls.constant(x0[k], n) for k in range(n)]
        out = cls.constant(c, n)
        for i in range(n):
            out = out + b[i] * y[i]
            for j in range(n):
                if A[i, j] != 0.0:
                    out = out + (0.5 * A[i, j]) * (y[i] * y[j])
        return out

    # -- structure ---------------------------------------------------------------

    @property
    def terms(self) -> list[tuple[float, Exponents]]:
        return [(c, e) for e, c in self._terms.items()]

    def as_dict(self) -> dict[Exponents, float]:
        return dict(self._terms)

    def coefficient(self, exps: Sequence[int]) -> float:
        return self._terms.get(tuple(exps), 0.0)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self._terms.values())

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # -- algebra --------------------------------------------------------------

    def _coerce(self, other) -> "PolyScalarField":
        if isinstance(other, PolyScalarField):
            if other.dim != self.dim:
                raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        return PolyScalarField.constant(float(other), self.dim)

    def __add__(self, other) -> "PolyScalarField":
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0.0) + c
        return PolyScalarField(self.dim, out)

    __radd__ = __add__

    def __neg__(self) -> "PolyScalarField":
        return PolyScalarField(self.dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "PolyScalarField":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PolyScalarField":
        return self._coerce(other) - self

    def __mul__(self, other) -> "PolyScalarField":
        if not isinstance(other, PolyScalarField):
            s = float(other)
            return PolyScalarField(self.dim, {e: s * c for e, c in self._terms.items()})
        other = self._coerce(other)
        out: dict[Exponents, float] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return PolyScalarField(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PolyScalarField":
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        out = PolyScalarField.constant(1.0, self.dim)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyScalarField) and self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, tuple(self._terms.items())))

    def __repr__(self) -> str:
        return f"PolyScalarField(dim={self.dim}, terms={self.terms!r})"

    def derivative(self, k: int) -> "PolyScalarField":
        out = {}
        for e, c in self._terms.items():
            if e[k]:
                d = list(e)
                d[k] -= 1
                out[tuple(d)] = c * e[k]
        return PolyScalarField(self.dim, out)

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _packed(self) -> tuple[np.ndarray, np.ndarray]:
        if not self._terms:
            return np.zeros((0, self.dim), dtype=int), np.zeros(0)
        exps = np.array(list(self._terms), dtype=int)
        coefs = np.array(list(self._terms.values()))
        return exps, coefs

    @cached_property
    def _gradient_fields(self) -> list["PolyScalarField"]:
        return [self.derivative(k) for k in range(self.dim)]

    @cached_property
    def _hessian_fields(self) -> list[list["PolyScalarField"]]:
        g = self._gradient_fields
        return [[g[i].derivative(j) for j in range(self.dim)] for i in range(self.dim)]

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"point has length {x.shape[-1]}, field has dimension {self.dim}")
        return x

    def eval_batch(self, X) -> np.ndarray:
        """Evaluate at each row of ``X`` (shape ``(m, dim)``)."""
        X = self._check(X)
        exps, coefs = self._packed
        if coefs.size == 0:
            return np.zeros(X.shape[0])
        monomials = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        return monomials @ coefs

    def __call__(self, x) -> float:
        return float(self.eval_batch(self._check(x)[None, :])[0])

    def gradient_field(self) -> list["PolyScalarField"]:
        return list(self._gradient_fields)

    def gradient(self, x) -> np.ndarray:
        x = self._check(x)[None, :]
        return np.array([g.eval_batch(x)[0] for g in self._gradient_fields])

    def hessian(self, x) -> SymmetricMatrix:
        x = self._check(x)[None, :]
        n = self.dim
        h = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                h[i, j] = h[j, i] = self._hessian_fields[i][j].eval_batch(x)[0]
        return SymmetricMatrix(h)


def eval(field: PolyScalarField, x) -> float:  # noqa: A001 - mirrors the operation name
    return field(x)


def gradient(field: PolyScalarField, x) -> np.ndarray:
    return field.gradient(x)


def hessian(field: PolyScalarField, x) -> SymmetricMatrix:
    return field.hessian(x)


class PolyVectorField:
    """Vector field ``x' = f(x)`` with one polynomial per component."""

    def __init__(self, components: Sequence[PolyScalarField]):
        components = list(components)
        if not components:
            raise DimensionError("a vector field needs at least one component")
        dim = len(components)
        for k, c in enumerate(components):
            if c.dim != dim:
                raise DimensionError(f"component {k} has dimension {c.dim}, expected {dim}")
        self.dim = dim
        self.components = tuple(components)

    @classmethod
    def zero(cls, dim: int) -> "PolyVectorField":
        return cls([PolyScalarField(dim) for _ in range(dim)])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.eval_batch(x[None, :])[0]

    def eval_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack([c.eval_batch(X) for c in self.components], axis=1)

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyVectorField) and self.components == other.components

    def __repr__(self) -> str:
        return f"PolyVectorField({list(self.components)!r})"


def lie_derivative(field: PolyScalarField, vf: PolyVectorField) -> PolyScalarField:
    """Exact ``sum_k (d field / d x_k) * vf_k``."""
    if field.dim != vf.dim:
        raise DimensionError(f"field has dimension {field.dim}, vector field {vf.dim}")
    out = PolyScalarField(field.dim)
    for dk, fk in zip(field.gradient_field(), vf.components):
        out = out + dk * fk
    return out


@dataclass(frozen=True)
class ConservationResult:
    index: int
    name: str
    lie_derivative: PolyScalarField
    offending: list[tuple[float, Exponents]]

    @property
    def passed(self) -> bool:
        return not self.offending


@dataclass(frozen=True)
class ConservationReport:
    results: list[ConservationResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[ConservationResult]:
        return [r for r in self.results if not r.passed]

    def describe(self) -> str:
        lines = []
        for r in self.results:
            if r.passed:
                lines.append(f"{r.name}: conserved")
            else:
                mons = ", ".join(f"{c:+.6g}*{format_monomial(e)}" for c, e in r.offending)
                lines.append(f"{r.name}: NOT conserved, residual monomials {mons}")
        return "\n".join(lines)


def format_monomial(exps: Sequence[int], names: Sequence[str] | None = None) -> str:
    names = names or [f"x{k + 1}" for k in range(len(exps))]
    parts = [n if p == 1 else f"{n}^{p}" for n, p in zip(names, exps) if p]
    return "*".join(parts) or "1"


def validate_conservation(
    vf: PolyVectorField,
    fields: Sequence[PolyScalarField],
    names: Sequence[str] | None = None,
    tol: float = TOL_CONSERVATION,
) -> ConservationReport:
    """Symbolic check that ``L_f C == 0`` coefficient-wise for each field."""
    names = list(names) if names is not None else [f"C{j + 1}" for j in range(len(fields))]
    results = []
    for j, (c, name) in enumerate(zip(fields, names)):
        ld = lie_derivative(c, vf)
        bad = [(coef, e) for coef, e in ld.terms if abs(coef) > tol]
        results.append(ConservationResult(j, name, ld, bad))
    return ConservationReport(results)


class EquilibriumError(ValueError):
    pass


@dataclass(frozen=True)
class EquilibriumPoint:
    coords: np.ndarray
    residual: float

    @classmethod
    def of(cls, vf: PolyVectorField, coords, tol: float = TOL_EQUILIBRIUM) -> "EquilibriumPoint":
        x = np.array(coords, dtype=float).ravel()
        if x.size != vf.dim:
            raise DimensionError(f"equilibrium has length {x.size}, vector field dimension {vf.dim}")
        residual = float(np.linalg.norm(vf(x)))
        if residual > tol * (1.0 + np.linalg.norm(x)):
            raise EquilibriumError(f"||f(x_e)|| = {residual:.3e} exceeds the equilibrium tolerance")
        x.setflags(write=False)
        return cls(x, residual)

    @property
    def dim(self) -> int:
        return self.coords.size
