"""Random problem generators and independent oracles for the test suite."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from equistab.fields import EquilibriumPoint, PolyScalarField, PolyVectorField
from equistab.methods import AnalysisProblem


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def exact_rank(rows) -> int:
    """Rank by fraction-exact Gaussian elimination (rows of ints/Fractions)."""
    m = [[Fraction(v) for v in row] for row in rows]
    if not m:
        return 0
    rank, ncols = 0, len(m[0])
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / m[rank][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def random_polynomial(rng, dim, max_degree=4, n_terms=6) -> PolyScalarField:
    terms = []
    for _ in range(n_terms):
        deg = rng.integers(0, max_degree + 1)
        e = np.zeros(dim, dtype=int)
        for _ in range(deg):
            e[rng.integers(dim)] += 1
        terms.append((rng.uniform(-2, 2), e.tolist()))
    return PolyScalarField(dim, terms)


def random_spectrum_matrix(rng, n, kind=None):
    """Symmetric matrix with a randomly chosen spectrum flavor."""
    kind = kind or rng.choice(["pd", "nd", "indef", "psd", "random"])
    if kind == "random":
        a = rng.standard_normal((n, n))
        return a + a.T
    if kind == "pd":
        ev = rng.uniform(0.2, 2.0, n)
    elif kind == "nd":
        ev = -rng.uniform(0.2, 2.0, n)
    elif kind == "psd":
        ev = rng.uniform(0.2, 2.0, n)
        ev[rng.integers(n)] = 0.0
    else:
        ev = rng.uniform(-2.0, 2.0, n)
    r = random_orthogonal(rng, n)
    return r @ np.diag(ev) @ r.T


def poisson_problem(rng, n=None, k=None) -> AnalysisProblem:
    """Problem whose field is ``J grad H`` for a constant antisymmetric ``J``.

    The remaining constants are Casimirs: functions of coordinates along
    ``ker J``, so every declared constant is conserved by construction.
    """
    n = int(n or rng.integers(2, 6))
    k = int(k or rng.integers(1, min(3, n) + 1))
    m = int(rng.integers(1 if k > 1 else 0, n))  # dim ker J, leaves >= 1 dimension for J
    R = random_orthogonal(rng, n)
    K, S = R[:, :m], R[:, m:]
    A = rng.standard_normal((n - m, n - m))
    J = S @ (A - A.T) @ S.T
    x_e = rng.uniform(-1, 1, n)

    casimirs, b_list = [], []
    for _ in range(k - 1):
        Aj = random_spectrum_matrix(rng, m)
        bj = np.zeros(m) if rng.random() < 0.2 else rng.standard_normal(m)
        b_list.append(bj)
        casimirs.append(PolyScalarField.quadratic(K @ Aj @ K.T, K @ bj, rng.uniform(-1, 1), center=x_e))

    if b_list and rng.random() < 0.7:
        g = K @ sum(rng.standard_normal() * b for b in b_list)
    elif m:
        g = K @ rng.standard_normal(m) if rng.random() < 0.5 else np.zeros(n)
    else:
        g = np.zeros(n)
    H = PolyScalarField.quadratic(random_spectrum_matrix(rng, n), g, rng.uniform(-1, 1), center=x_e)

    comps = []
    grad_H = H.gradient_field()
    for a in range(n):
        comp = PolyScalarField(n)
        for b in range(n):
            if J[a, b] != 0.0:
                comp = comp + J[a, b] * grad_H[b]
        comps.append(comp)
    vf = PolyVectorField(comps)

    constants = [H] + casimirs
    order = rng.permutation(k)
    constants = [constants[i] for i in order]
    pivot = int(rng.integers(1, k + 1))
    return AnalysisProblem(vf, tuple(constants), pivot, EquilibriumPoint.of(vf, x_e))


def cross_product_problem(rng) -> AnalysisProblem:
    """3-D field ``grad C1 x grad C2`` for random quadratics, at a generalized eigenvector."""
    A = random_spectrum_matrix(rng, 3, "random")
    B = random_spectrum_matrix(rng, 3, "pd")
    C1 = PolyScalarField.quadratic(A)
    C2 = PolyScalarField.quadratic(B)
    g1, g2 = C1.gradient_field(), C2.gradient_field()
    vf = PolyVectorField(
        [
            g1[1] * g2[2] - g1[2] * g2[1],
            g1[2] * g2[0] - g1[0] * g2[2],
            g1[0] * g2[1] - g1[1] * g2[0],
        ]
    )
    # A x = mu B x  <=>  L^-1 A L^-T y = mu y with B = L L^T, x = L^-T y
    L = np.linalg.cholesky(B)
    Li = np.linalg.inv(L)
    _, Y = np.linalg.eigh(Li @ A @ Li.T)
    x = Li.T @ Y[:, rng.integers(3)]
    x *= rng.uniform(0.5, 2.0) / np.linalg.norm(x)
    pivot = int(rng.integers(1, 3))
    return AnalysisProblem(vf, (C1, C2), pivot, EquilibriumPoint.of(vf, x, tol=1e-8))


def random_problem(rng) -> AnalysisProblem:
    if rng.random() < 0.25:
        return cross_product_problem(rng)
    return poisson_problem(rng)


def finsler_pair(rng, n=None):
    """(P, Q) with Q PSD and P positive definite on ker Q."""
    n = int(n or rng.integers(1, 7))
    r = int(rng.integers(0, n + 1))  # rank of Q
    R = random_orthogonal(rng, n)
    Q = R[:, :r] @ np.diag(rng.uniform(0.1, 2.0, r)) @ R[:, :r].T
    Pt = rng.uniform(-3, 3, (n, n))
    Pt = Pt + Pt.T
    if n - r:
        K = random_orthogonal(rng, n - r)
        Pt[r:, r:] = K @ np.diag(rng.uniform(0.1, 2.0, n - r)) @ K.T
    P = R @ Pt @ R.T
    return P, Q
