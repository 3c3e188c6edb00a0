"""Arnold, Energy-Casimir and Ortega-Ratiu stability checks.

All three checks share the same ingredients, evaluated at the
equilibrium ``x_e`` for a chosen pivot constant ``C_i``:

* multipliers ``lambda_j`` solving ``grad C_i = sum_{j != i} lambda_j grad C_j``,
* ``P = hess C_i - sum_j lambda_j hess C_j``,
* ``Q = sum_j grad C_j grad C_j^T`` (positive semidefinite),
* ``W``, the common kernel of the ``grad C_j``.

Arnold asks for definiteness of ``P`` on ``W``. Energy-Casimir reshapes
each ``C_j`` with ``phi_j(t) = -lambda_j t + alpha/2 (t - C_j(x_e))^2``,
whose Hessian at ``x_e`` is ``P + alpha Q``, and asks for full-space
definiteness. Ortega-Ratiu asks for definiteness of the same matrix on the
(possibly larger) kernel ``W~`` of the reshaped differentials.

Every check is a sufficient condition. A failure is reported as
``Indecisive`` and never as instability.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import numkit
from .fields import (
    EquilibriumPoint,
    PolyScalarField,
    PolyVectorField,
    validate_conservation,
)
from .numkit import Definiteness, SubspaceBasis, SymmetricMatrix

TOL_GRAD = 1e-9
TOL_SLOPE = 1e-12


class Method(enum.Enum):
    ARNOLD = "arnold"
    ENERGY_CASIMIR = "energy_casimir"
    ORTEGA_RATIU = "ortega_ratiu"


class Outcome(enum.Enum):
    STABLE = "stable"
    INDECISIVE = "indecisive"


class FailureStage(enum.Enum):
    CONDITION_I = "condition_i"
    CONDITION_II = "condition_ii"


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisProblem:
    """The tuple ``(f, C_1..C_k, i, x_e)``; ``pivot`` is 1-based."""

    vf: PolyVectorField
    constants: tuple[PolyScalarField, ...]
    pivot: int
    x_e: EquilibriumPoint
    names: tuple[str, ...] = ()
    check_conservation: bool = True

    def __post_init__(self):
        object.__setattr__(self, "constants", tuple(self.constants))
        k = len(self.constants)
        if k < 1:
            raise ProblemError("at least one constant of motion is required")
        if not 1 <= self.pivot <= k:
            raise ProblemError(f"pivot {self.pivot} outside 1..{k}")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"C{j + 1}" for j in range(k)))
        if len(self.names) != k:
            raise ProblemError("one name per constant is required")
        for c in self.constants:
            if c.dim != self.vf.dim:
                raise ProblemError(f"constant of dimension {c.dim} for a {self.vf.dim}-dimensional field")
        if self.x_e.dim != self.vf.dim:
            raise ProblemError("equilibrium dimension does not match the vector field")
        if self.check_conservation:
            report = validate_conservation(self.vf, self.constants, self.names)
            if not report.passed:
                raise ProblemError("declared constants are not conserved:\n" + report.describe())

    @classmethod
    def build(cls, vf, constants, pivot, x_e, names=(), check_conservation=True) -> "AnalysisProblem":
        """Like the constructor but accepts raw equilibrium coordinates."""
        if not isinstance(x_e, EquilibriumPoint):
            x_e = EquilibriumPoint.of(vf, x_e)
        return cls(vf, tuple(constants), pivot, x_e, tuple(names), check_conservation)

    def with_pivot(self, pivot: int) -> "AnalysisProblem":
        return AnalysisProblem(self.vf, self.constants, pivot, self.x_e, self.names, check_conservation=False)

    @property
    def dim(self) -> int:
        return self.vf.dim

    @property
    def k(self) -> int:
        return len(self.constants)

    @property
    def pivot_constant(self) -> PolyScalarField:
        return self.constants[self.pivot - 1]

    @property
    def other_indices(self) -> list[int]:
        """0-based indices of the non-pivot constants, in order."""
        return [j for j in range(self.k) if j != self.pivot - 1]

    def other_gradients(self) -> list[np.ndarray]:
        x = self.x_e.coords
        return [self.constants[j].gradient(x) for j in self.other_indices]

    def summary(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "constants": list(self.names),
            "pivot": self.pivot,
            "pivot_name": self.names[self.pivot - 1],
            "equilibrium": self.x_e.coords.tolist(),
            "equilibrium_residual": self.x_e.residual,
        }


@dataclass(frozen=True)
class MultiplierSolution:
    lambdas: np.ndarray
    residual_norm: float
    unique: bool
    threshold: float

    @property
    def satisfied(self) -> bool:
        return self.residual_norm <= self.threshold


@dataclass(frozen=True)
class CurvatureProfile:
    """Quadratic reshaping ``phi_j(t) = s_j (t - C_j(x_e)) + alpha/2 (t - C_j(x_e))^2``.

    ``slopes[j] = phi_j'(C_j(x_e)) = -lambda_j``; every ``phi_j`` shares the
    curvature ``alpha``. Up to an additive constant this matches
    ``-lambda_j t + alpha/2 (t - C_j(x_e))^2``.
    """

    slopes: np.ndarray
    alpha: float = 0.0

    @classmethod
    def from_multipliers(cls, sol: MultiplierSolution, alpha: float = 0.0) -> "CurvatureProfile":
        return cls(-np.asarray(sol.lambdas, dtype=float), float(alpha))

    @property
    def multipliers(self) -> np.ndarray:
        return -self.slopes

    def describe(self, problem: AnalysisProblem) -> list[str]:
        out = []
        x = problem.x_e.coords
        for s, j in zip(self.slopes, problem.other_indices):
            c0 = problem.constants[j](x)
            out.append(
                f"phi_{problem.names[j]}(t) = {s:.12g}*(t - {c0:.12g}) + {self.alpha / 2:.12g}*(t - {c0:.12g})^2"
            )
        return out


@dataclass
class MethodVerdict:
    method: Method
    outcome: Outcome
    sign: int | None = None
    failure_stage: FailureStage | None = None
    multipliers: MultiplierSolution | None = None
    subspace: SubspaceBasis | None = None
    eigenvalues: np.ndarray | None = None
    alpha: float | None = None
    margin: float = 0.0
    note: str = ""

    @property
    def stable(self) -> bool:
        return self.outcome is Outcome.STABLE

    def to_dict(self) -> dict[str, Any]:
        m = self.multipliers
        return {
            "method": self.method.value,
            "outcome": self.outcome.value,
            "sign": self.sign,
            "failure_stage": self.failure_stage.value if self.failure_stage else None,
            "multipliers": None
            if m is None
            else {
                "lambdas": [float(v) for v in m.lambdas],
                "residual_norm": m.residual_norm,
                "unique": m.unique,
                "satisfied": m.satisfied,
            },
            "subspace": None if self.subspace is None else [list(map(float, v)) for v in self.subspace.basis],
            "subspace_dim": None if self.subspace is None else self.subspace.dim,
            "eigenvalues": None if self.eigenvalues is None else [float(v) for v in self.eigenvalues],
            "alpha": self.alpha,
            "margin": self.margin,
            "note": self.note,
        }


# -- shared ingredients ---------------------------------------------------


def solve_multipliers(problem: AnalysisProblem, lambdas: Sequence[float] | None = None) -> MultiplierSolution:
    """Minimum-norm multipliers for the stationarity condition at ``x_e``.

    A caller-supplied ``lambdas`` replaces the min-norm representative; the
    residual is still recomputed.
    """
    x = problem.x_e.coords
    target = problem.pivot_constant.gradient(x)
    cols = problem.other_gradients()
    if lambdas is None:
        lam, residual = numkit.least_squares_minnorm(cols, target)
        lam = lam + 0.0  # drop negative zeros
    else:
        lam = np.asarray(lambdas, dtype=float).ravel()
        if lam.size != len(cols):
            raise ProblemError(f"expected {len(cols)} multipliers, got {lam.size}")
        combo = sum((l * c for l, c in zip(lam, cols)), np.zeros(problem.dim))
        residual = float(np.linalg.norm(combo - target))
    rank = numkit.matrix_rank(cols, problem.dim)
    threshold = TOL_GRAD * (1.0 + float(np.linalg.norm(target)))
    return MultiplierSolution(np.asarray(lam, dtype=float), float(residual), rank == len(cols), threshold)


def build_hessian_P(problem: AnalysisProblem, multipliers: MultiplierSolution) -> SymmetricMatrix:
    x = problem.x_e.coords
    P = problem.pivot_constant.hessian(x)
    for lam, j in zip(multipliers.lambdas, problem.other_indices):
        if lam != 0.0:
            P = P - float(lam) * problem.constants[j].hessian(x)
    return P


def build_gram_sum(problem: AnalysisProblem) -> SymmetricMatrix:
    Q = np.zeros((problem.dim, problem.dim))
    for g in problem.other_gradients():
        Q += np.outer(g, g)
    return SymmetricMatrix(Q)


def subspace_W(problem: AnalysisProblem) -> SubspaceBasis:
    return numkit.null_space(problem.other_gradients(), problem.dim)


def _active_slopes(profile: CurvatureProfile) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(profile.slopes), initial=0.0)))
    return np.abs(profile.slopes) > TOL_SLOPE * scale


def subspace_W_tilde(problem: AnalysisProblem, profile: CurvatureProfile) -> SubspaceBasis:
    """Kernel of the reshaped differentials; constraints with zero slope drop out."""
    grads = problem.other_gradients()
    rows = [s * g for s, g, on in zip(profile.slopes, grads, _active_slopes(profile)) if on]
    return numkit.null_space(rows, problem.dim)


def _condition_i_failure(method: Method, sol: MultiplierSolution) -> MethodVerdict:
    return MethodVerdict(
        method,
        Outcome.INDECISIVE,
        failure_stage=FailureStage.CONDITION_I,
        multipliers=sol,
        note=f"no multipliers make x_e critical (residual {sol.residual_norm:.3e} > {sol.threshold:.3e})",
    )


_EMPTY_W_NOTE = "W is zero-dimensional; a vacuous definiteness check certifies nothing"


# -- the three checks -----------------------------------------------------


def arnold_check(problem: AnalysisProblem, lambdas: Sequence[float] | None = None) -> MethodVerdict:
    sol = solve_multipliers(problem, lambdas)
    if not sol.satisfied:
        return _condition_i_failure(Method.ARNOLD, sol)
    W = subspace_W(problem)
    R = numkit.restrict_quadratic_form(build_hessian_P(problem, sol), W)
    eigs = numkit.eigenvalues(R)
    kind = numkit.classify_eigenvalues(eigs, R.scale) if R.dim else Definiteness.ZERO_DIMENSIONAL
    margin = numkit.margin(R)
    if kind.is_definite:
        return MethodVerdict(Method.ARNOLD, Outcome.STABLE, kind.sign, None, sol, W, eigs, margin=margin)
    note = _EMPTY_W_NOTE if kind is Definiteness.ZERO_DIMENSIONAL else f"restricted Hessian is {kind.value}"
    return MethodVerdict(
        Method.ARNOLD, Outcome.INDECISIVE, None, FailureStage.CONDITION_II, sol, W, eigs, margin=margin, note=note
    )


def energy_casimir_check(problem: AnalysisProblem, lambdas: Sequence[float] | None = None) -> MethodVerdict:
    sol = solve_multipliers(problem, lambdas)
    if not sol.satisfied:
        return _condition_i_failure(Method.ENERGY_CASIMIR, sol)
    W = subspace_W(problem)
    if W.dim == 0:
        return MethodVerdict(
            Method.ENERGY_CASIMIR, Outcome.INDECISIVE, None, FailureStage.CONDITION_II, sol, W, note=_EMPTY_W_NOTE
        )
    P = build_hessian_P(problem, sol)
    Q = build_gram_sum(problem)
    for sign in (1, -1):
        cert = numkit.finsler_alpha_search(P, Q, sign)
        if cert is not None:
            M = P + cert.alpha * Q
            eigs = numkit.eigenvalues(M)
            return MethodVerdict(
                Method.ENERGY_CASIMIR,
                Outcome.STABLE,
                sign,
                None,
                sol,
                None,
                eigs,
                alpha=cert.alpha,
                margin=numkit.margin(M),
                note="; ".join(CurvatureProfile.from_multipliers(sol, cert.alpha).describe(problem)),
            )
    return MethodVerdict(
        Method.ENERGY_CASIMIR,
        Outcome.INDECISIVE,
        None,
        FailureStage.CONDITION_II,
        sol,
        None,
        numkit.eigenvalues(P),
        note="no curvature in the search schedule makes the reshaped Hessian definite",
    )


def ortega_ratiu_check(problem: AnalysisProblem, lambdas: Sequence[float] | None = None) -> MethodVerdict:
    sol = solve_multipliers(problem, lambdas)
    if not sol.satisfied:
        return _condition_i_failure(Method.ORTEGA_RATIU, sol)
    if subspace_W(problem).dim == 0:
        return MethodVerdict(
            Method.ORTEGA_RATIU, Outcome.INDECISIVE, None, FailureStage.CONDITION_II, sol, note=_EMPTY_W_NOTE
        )
    P = build_hessian_P(problem, sol)
    Wt = subspace_W_tilde(problem, CurvatureProfile.from_multipliers(sol))
    if Wt.dim == 0:
        return MethodVerdict(
            Method.ORTEGA_RATIU,
            Outcome.INDECISIVE,
            None,
            FailureStage.CONDITION_II,
            sol,
            Wt,
            note="W~ is zero-dimensional",
        )
    # On W~ only the dropped (zero-slope) gradients contribute to Q; the others
    # vanish there exactly, and their rounding residue must not be scaled by alpha.
    profile = CurvatureProfile.from_multipliers(sol)
    Pw = numkit.restrict_quadratic_form(P, Wt)
    projected = [Wt.vectors.T @ g for g, on in zip(problem.other_gradients(), _active_slopes(profile)) if not on]
    Qw = SymmetricMatrix(sum((np.outer(g, g) for g in projected), np.zeros((Wt.dim, Wt.dim))))
    schedule = numkit.finsler_schedule() if projected else [0.0]
    first_eigs = None
    for alpha in (sa for a in schedule for sa in ((a,) if a == 0 else (a, -a))):
        R = Pw + alpha * Qw
        eigs = numkit.eigenvalues(R)
        if first_eigs is None:
            first_eigs = eigs
        kind = numkit.classify_eigenvalues(eigs, R.scale)
        if kind.is_definite:
            return MethodVerdict(
                Method.ORTEGA_RATIU,
                Outcome.STABLE,
                kind.sign,
                None,
                sol,
                Wt,
                eigs,
                alpha=alpha,
                margin=numkit.margin(R),
            )
    return MethodVerdict(
        Method.ORTEGA_RATIU,
        Outcome.INDECISIVE,
        None,
        FailureStage.CONDITION_II,
        sol,
        Wt,
        first_eigs,
        note="restricted reshaped Hessian is not definite for any curvature in the schedule",
    )


CHECKS = {
    Method.ARNOLD: arnold_check,
    Method.ENERGY_CASIMIR: energy_casimir_check,
    Method.ORTEGA_RATIU: ortega_ratiu_check,
}


# -- certificates ---------------------------------------------------------


def lyapunov_function(
    problem: AnalysisProblem, multipliers: Sequence[float], alpha: float, sign: int = 1
) -> PolyScalarField:
    """``V = sign * (L(x) - L(x_e))`` with ``L = C_i - sum lambda_j C_j + alpha/2 sum (C_j - C_j(x_e))^2``.

    ``V`` is a polynomial constant of motion vanishing at ``x_e``; when the
    certificate holds its Hessian there is positive definite.
    """
    x = problem.x_e.coords
    L = problem.pivot_constant
    for lam, j in zip(multipliers, problem.other_indices):
        Cj = problem.constants[j]
        shifted = Cj - Cj(x)
        L = L - float(lam) * Cj + (0.5 * alpha) * (shifted * shifted)
    return float(sign) * (L - L(x))


@dataclass
class StabilityCertificate:
    problem: dict[str, Any]
    verdicts: list[MethodVerdict]
    agreement: bool | None
    margin: float | None
    lyapunov_note: str = ""
    lyapunov: PolyScalarField | None = field(default=None, repr=False)

    @property
    def outcome(self) -> Outcome:
        return Outcome.STABLE if any(v.stable for v in self.verdicts) else Outcome.INDECISIVE

    @property
    def inconsistent(self) -> bool:
        return self.agreement is False

    @property
    def status(self) -> str:
        if self.inconsistent:
            return "INCONSISTENT"
        return self.outcome.value

    def verdict(self, method: Method) -> MethodVerdict | None:
        return next((v for v in self.verdicts if v.method is method), None)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "problem": self.problem,
            "status": self.status,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "margin": self.margin,
            "lyapunov_note": self.lyapunov_note,
        }
        if self.agreement is not None:
            out["agreement"] = self.agreement
        if self.lyapunov is not None:
            out["lyapunov"] = [{"c": c, "e": list(e)} for c, e in self.lyapunov.terms]
        return out


def _arnold_margin(problem: AnalysisProblem, sol: MultiplierSolution) -> float | None:
    if not sol.satisfied:
        return None
    R = numkit.restrict_quadratic_form(build_hessian_P(problem, sol), subspace_W(problem))
    return numkit.margin(R)


def _lyapunov_note(problem: AnalysisProblem, lam: np.ndarray, alpha: float, sign: int) -> str:
    ci = problem.names[problem.pivot - 1]
    pieces = [f"V(x) = {'+' if sign > 0 else '-'}[ {ci}(x)"]
    for l, j in zip(lam, problem.other_indices):
        pieces.append(f" - ({l:.12g})*{problem.names[j]}(x)")
    if problem.other_indices:
        terms = " + ".join(f"({problem.names[j]}(x) - {problem.names[j]}(x_e))^2" for j in problem.other_indices)
        pieces.append(f" + ({alpha / 2:.12g})*[{terms}]")
    pieces.append(" ] - V0, positive definite at x_e and conserved along trajectories")
    return "".join(pieces)


def run_methods(
    problem: AnalysisProblem,
    methods: Sequence[Method] = tuple(Method),
    lambdas: Sequence[float] | None = None,
) -> StabilityCertificate:
    """Run a subset of the checks; ``agreement`` is only set when all three ran."""
    verdicts = [CHECKS[m](problem, lambdas) for m in methods]
    sol = verdicts[0].multipliers or solve_multipliers(problem, lambdas)
    agreement = None
    if set(methods) == set(Method):
        agreement = len({v.outcome for v in verdicts}) == 1
    note, V = "", None
    stable = [v for v in verdicts if v.stable]
    if stable:
        ec = next((v for v in stable if v.method is Method.ENERGY_CASIMIR), None)
        if ec is not None:
            alpha, sign = ec.alpha, ec.sign
        else:
            cert = None
            for s in (stable[0].sign, -stable[0].sign):
                cert = numkit.finsler_alpha_search(build_hessian_P(problem, sol), build_gram_sum(problem), s)
                if cert is not None:
                    alpha, sign = cert.alpha, s
                    break
        if ec is not None or cert is not None:
            note = _lyapunov_note(problem, sol.lambdas, alpha, sign)
            V = lyapunov_function(problem, sol.lambdas, alpha, sign)
    return StabilityCertificate(problem.summary(), verdicts, agreement, _arnold_margin(problem, sol), note, V)


def equivalence_harness(problem: AnalysisProblem, lambdas: Sequence[float] | None = None) -> StabilityCertificate:
    """All three checks plus the agreement flag; disagreement is flagged, not raised."""
    return run_methods(problem, tuple(Method), lambdas)


def analyze_all_pivots(problem: AnalysisProblem, methods: Sequence[Method] = tuple(Method)) -> list[StabilityCertificate]:
    return [run_methods(problem.with_pivot(i), methods) for i in range(1, problem.k + 1)]


@dataclass(frozen=True)
class IndependenceReport:
    rank: int
    k: int
    note: str

    @property
    def independent(self) -> bool:
        return self.rank == self.k


def gradient_independence_report(problem: AnalysisProblem) -> IndependenceReport:
    x = problem.x_e.coords
    grads = [c.gradient(x) for c in problem.constants]
    rank = numkit.matrix_rank(grads, problem.dim)
    if rank == problem.k:
        note = (
            "gradients of all constants are linearly independent at x_e: the stationarity "
            "condition fails for every pivot. Consider reducing to the common level set of "
            "the constants and studying the reduced dynamics (not a bifurcation point)."
        )
    else:
        note = f"gradients span a {rank}-dimensional space (k = {problem.k}); some pivot may satisfy stationarity"
    return IndependenceReport(rank, problem.k, note)
