import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equistab import numkit
from equistab.numkit import (
    Definiteness,
    DimensionError,
    EigenConvergenceError,
    NotPSDError,
    SubspaceBasis,
    SymmetricMatrix,
    classify_definiteness,
    finsler_alpha_search,
    least_squares_minnorm,
    null_space,
    restrict_quadratic_form,
    symmetric_eigen,
)

from helpers import exact_rank, finsler_pair, random_orthogonal

seeds = st.integers(0, 2**32 - 1)


def same_span(a: SubspaceBasis, vectors) -> bool:
    b = np.array(vectors, dtype=float).reshape(len(vectors), -1).T
    pb = b @ np.linalg.pinv(b) if b.size else np.zeros((a.ambient_dim, a.ambient_dim))
    return np.allclose(a.projector(), pb, atol=1e-12)


def test_symmetrized_on_construction():
    A = SymmetricMatrix([[1.0, 2.0], [4.0, 3.0]])
    assert A.entries[0, 1] == A.entries[1, 0] == 3.0
    with pytest.raises(ValueError):
        A.entries[0, 0] = 5.0


def test_non_square_rejected():
    with pytest.raises(DimensionError):
        SymmetricMatrix(np.zeros((2, 3)))


class TestEigen:
    def test_diagonal(self):
        dec = symmetric_eigen(SymmetricMatrix(np.diag([3.0, 2.0])))
        np.testing.assert_allclose(dec.eigenvalues, [2.0, 3.0])
        np.testing.assert_allclose(np.abs(dec.eigenvectors), [[0, 1], [1, 0]])

    def test_swap(self):
        dec = symmetric_eigen(SymmetricMatrix([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(dec.eigenvalues, [-1.0, 1.0], atol=1e-15)

    def test_lorenz_hessian(self):
        dec = symmetric_eigen(SymmetricMatrix(np.diag([1.0, 1.0, 0.0, 0.0, 0.0])))
        np.testing.assert_allclose(dec.eigenvalues, [0, 0, 0, 1, 1])

    def test_sweep_cap_reports_norm(self):
        a = np.array([[1.0, 2.0, 0.5], [2.0, -1.0, 0.3], [0.5, 0.3, 2.0]])
        with pytest.raises(EigenConvergenceError, match=r"1 sweeps.*\|\|A\|\|_F"):
            symmetric_eigen(SymmetricMatrix(a), max_sweeps=1)

    @settings(max_examples=200, deadline=None)
    @given(seeds, st.integers(1, 8), st.floats(1e-3, 1e3))
    def test_residual_contract(self, seed, n, scale):
        rng = np.random.default_rng(seed)
        a = scale * rng.standard_normal((n, n))
        A = SymmetricMatrix(a)
        w, v = symmetric_eigen(A)
        bound = 1e-9 * (1 + A.frobenius)
        for k in range(n):
            assert np.linalg.norm(A.entries @ v[:, k] - w[k] * v[:, k]) <= bound
        np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-9)
        assert np.all(np.diff(w) >= 0)
        # independent LAPACK route
        np.testing.assert_allclose(w, np.linalg.eigvalsh(A.entries), atol=1e-9 * (1 + A.frobenius))


class TestDefiniteness:
    @pytest.mark.parametrize(
        "diag, expected",
        [
            ([1 / 6, 2 / 3], Definiteness.POSITIVE_DEFINITE),
            ([1.0, 1.0, 0.0, 0.0], Definiteness.POSITIVE_SEMIDEFINITE),
            ([1.0, -3.0], Definiteness.INDEFINITE),
            ([-1.0, -2.0], Definiteness.NEGATIVE_DEFINITE),
            ([-1.0, 0.0], Definiteness.NEGATIVE_SEMIDEFINITE),
            ([0.0, 0.0], Definiteness.POSITIVE_SEMIDEFINITE),
        ],
    )
    def test_examples(self, diag, expected):
        assert classify_definiteness(SymmetricMatrix(np.diag(diag))) is expected

    def test_zero_dimensional(self):
        assert classify_definiteness(SymmetricMatrix.zero_dimensional()) is Definiteness.ZERO_DIMENSIONAL

    def test_threshold_is_scale_relative(self):
        # 1e-7 is above 1e-9 * max(1, ||A||) for a unit matrix but not for a 1e3 one
        assert classify_definiteness(SymmetricMatrix(np.diag([1.0, 1e-7]))) is Definiteness.POSITIVE_DEFINITE
        assert classify_definiteness(SymmetricMatrix(np.diag([1e3, 1e-7]))) is Definiteness.POSITIVE_SEMIDEFINITE


class TestNullSpace:
    def test_rigid_body_W(self):
        B = null_space([[1.0, 0.0, 0.0]], 3)
        assert B.dim == 2
        assert same_span(B, [[0, 1, 0], [0, 0, 1]])

    def test_lorenz_W(self):
        B = null_space([[0.0, 0.0, 1.0, 0.0, 0.0]], 5)
        assert same_span(B, [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]])

    def test_trivial_kernel(self):
        assert null_space(np.eye(3), 3).dim == 0

    def test_empty_input_is_full_space(self):
        assert null_space([], 4).dim == 4

    def test_rounding_level_vectors_have_rank_zero(self):
        assert null_space([[1e-17, -3e-17]], 2).dim == 2

    @settings(max_examples=200, deadline=None)
    @given(seeds)
    def test_rank_nullity_against_exact_elimination(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        m = int(rng.integers(0, 7))
        basis = rng.integers(-4, 5, (int(rng.integers(1, n + 1)), n))
        rows = [rng.integers(-3, 4, basis.shape[0]) @ basis for _ in range(m)]
        B = null_space(rows, n)
        assert B.dim == n - exact_rank(rows)
        np.testing.assert_allclose(B.vectors.T @ B.vectors, np.eye(B.dim), atol=1e-9)
        for r in rows:
            assert np.all(np.abs(B.vectors.T @ r) <= 1e-9 * (1 + np.linalg.norm(r)))


class TestLeastSquares:
    def test_rigid_body_multiplier(self):
        lam, res = least_squares_minnorm([[1.0, 0.0, 0.0]], [1 / 3, 0.0, 0.0])
        np.testing.assert_allclose(lam, [1 / 3], atol=1e-15)
        assert res == 0.0

    def test_lorenz_impossible(self):
        lam, res = least_squares_minnorm([[0.0] * 5], [0.0, 0.0, 1.0, 0.0, 0.0])
        np.testing.assert_array_equal(lam, [0.0])
        assert res == pytest.approx(1.0)

    def test_min_norm_on_solution_line(self):
        # oracle: brute-force grid over the solution line l1 + l2 = 2
        grid = np.linspace(-5, 5, 10001)
        best = grid[np.argmin(grid**2 + (2 - grid) ** 2)]
        assert best == pytest.approx(1.0)
        lam, res = least_squares_minnorm([[1.0, 0.0], [1.0, 0.0]], [2.0, 0.0])
        np.testing.assert_allclose(lam, [1.0, 1.0], atol=1e-12)
        assert res <= 1e-15

    def test_no_columns(self):
        lam, res = least_squares_minnorm([], [3.0, 4.0])
        assert lam.size == 0 and res == 5.0

    def test_residual_is_minimal(self):
        rng = np.random.default_rng(7)
        cols = rng.standard_normal((3, 6))
        target = rng.standard_normal(6)
        lam, res = least_squares_minnorm(cols, target)
        A = cols.T
        np.testing.assert_allclose(res, np.linalg.norm(A @ lam - target))
        cloud = lam + rng.normal(scale=0.1, size=(1000, 3))
        residuals = np.linalg.norm(cloud @ cols - target, axis=1)
        assert np.all(residuals >= res - 1e-12)


class TestRestriction:
    def test_rigid_body(self):
        I1, I2, I3 = 3.0, 2.0, 1.0
        A = SymmetricMatrix(np.diag([0.0, 1 / I2 - 1 / I1, 1 / I3 - 1 / I1]))
        B = SubspaceBasis(3, np.eye(3)[:, 1:])
        np.testing.assert_allclose(restrict_quadratic_form(A, B).entries, np.diag([1 / 6, 2 / 3]))

    def test_identity_basis(self):
        a = np.array([[2.0, 1.0], [1.0, -1.0]])
        assert restrict_quadratic_form(SymmetricMatrix(a), SubspaceBasis.full(2)) == SymmetricMatrix(a)

    def test_lorenz(self):
        A = SymmetricMatrix(np.diag([1.0, 1, 0, 0, 0]))
        B = SubspaceBasis(5, np.eye(5)[:, [0, 1, 3, 4]])
        R = restrict_quadratic_form(A, B)
        np.testing.assert_array_equal(R.entries, np.diag([1.0, 1, 0, 0]))
        assert classify_definiteness(R) is Definiteness.POSITIVE_SEMIDEFINITE

    def test_empty_basis(self):
        R = restrict_quadratic_form(SymmetricMatrix(np.eye(2)), SubspaceBasis(2, np.zeros((2, 0))))
        assert R.dim == 0 and classify_definiteness(R) is Definiteness.ZERO_DIMENSIONAL

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            restrict_quadratic_form(SymmetricMatrix(np.eye(2)), SubspaceBasis.full(3))

    @settings(max_examples=200, deadline=None)
    @given(seeds)
    def test_congruence_interlacing(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 8))
        d = int(rng.integers(1, n + 1))
        A = SymmetricMatrix(rng.standard_normal((n, n)))
        B = SubspaceBasis(n, random_orthogonal(rng, n)[:, :d])
        R = restrict_quadratic_form(A, B)
        assert np.array_equal(R.entries, R.entries.T)
        wa, wr = numkit.eigenvalues(A), numkit.eigenvalues(R)
        tol = 1e-9 * (1 + A.frobenius)
        assert wa[0] <= wr[0] + tol and wr[-1] <= wa[-1] + tol


class TestFinsler:
    def test_needs_alpha_four(self):
        # oracle: diag(1, -3 + a) is PD iff a > 3; first schedule entry is 4
        schedule = numkit.finsler_schedule()
        first = next(a for a in schedule if min(1.0, -3.0 + a) > 0)
        assert first == 4.0
        cert = finsler_alpha_search(SymmetricMatrix(np.diag([1.0, -3.0])), SymmetricMatrix(np.diag([0.0, 1.0])))
        assert cert.alpha == 4.0 and cert.min_eigenvalue == pytest.approx(1.0)

    def test_already_definite(self):
        cert = finsler_alpha_search(SymmetricMatrix(np.eye(2)), SymmetricMatrix.zeros(2))
        assert cert.alpha == 0.0

    def test_hypothesis_violated(self):
        # P + aQ = diag(1 + a, -1) has the entry -1 for every a
        assert finsler_alpha_search(SymmetricMatrix(np.diag([1.0, -1.0])), SymmetricMatrix(np.diag([1.0, 0.0]))) is None

    def test_negative_sign_returns_negative_curvature(self):
        P = SymmetricMatrix(np.diag([-1.0, 3.0]))
        Q = SymmetricMatrix(np.diag([0.0, 1.0]))
        cert = finsler_alpha_search(P, Q, sign=-1)
        assert cert.alpha == -4.0
        assert numkit.eigenvalues(P + cert.alpha * Q)[-1] < 0

    def test_q_must_be_psd(self):
        with pytest.raises(NotPSDError):
            finsler_alpha_search(SymmetricMatrix(np.eye(2)), SymmetricMatrix(np.diag([1.0, -1.0])))

    @settings(max_examples=200, deadline=None)
    @given(seeds, st.sampled_from([1, -1]))
    def test_soundness(self, seed, sign):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        P = SymmetricMatrix(rng.standard_normal((n, n)))
        g = rng.standard_normal((int(rng.integers(0, n + 1)), n))
        Q = SymmetricMatrix(g.T @ g)
        cert = finsler_alpha_search(P, Q, sign)
        if cert is not None:
            M = sign * (P + cert.alpha * Q)
            mu = np.linalg.eigvalsh(M.entries)[0]
            assert abs(mu - cert.min_eigenvalue) <= 1e-9 * M.scale
            assert mu > numkit.TOL_PD * M.scale

    @settings(max_examples=200, deadline=None)
    @given(seeds)
    def test_completeness_on_hypothesis_class(self, seed):
        P, Q = finsler_pair(np.random.default_rng(seed))
        assert finsler_alpha_search(SymmetricMatrix(P), SymmetricMatrix(Q)) is not None
