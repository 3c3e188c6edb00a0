"""Fixed-step RK4 integration and an empirical stability probe.

The probe is falsification evidence only. It never overrides a method
verdict.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fields import PolyScalarField, PolyVectorField

SAMPLER = "numpy.random.default_rng(seed) [PCG64]: standard_normal, normalized to the sphere"


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-2
    horizon: float = 50.0
    method: str = "rk4"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.step > self.horizon:
            raise ValueError("step exceeds the horizon")
        if self.method != "rk4":
            raise ValueError(f"unsupported integrator {self.method!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, dim)
    diverged: bool = False

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def rk4_step(vf: PolyVectorField, X: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step for a batch of states (rows of ``X``).

    Overflow yields non-finite rows instead of warnings; callers flag them.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = vf.eval_batch(X)
        k2 = vf.eval_batch(X + 0.5 * h * k1)
        k3 = vf.eval_batch(X + 0.5 * h * k2)
        k4 = vf.eval_batch(X + h * k3)
        return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(vf: PolyVectorField, x0, config: IntegratorConfig) -> Trajectory:
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != vf.dim:
        raise ValueError(f"initial state has length {x0.size}, vector field dimension {vf.dim}")
    n = config.n_steps
    states = np.empty((n + 1, vf.dim))
    states[0] = x0
    X = x0[None, :]
    for s in range(1, n + 1):
        X = rk4_step(vf, X, config.step)
        if not np.all(np.isfinite(X)):
            return Trajectory(np.arange(s) * config.step, states[:s].copy(), diverged=True)
        states[s] = X[0]
    return Trajectory(np.arange(n + 1) * config.step, states)


class DivergedError(RuntimeError):
    pass


def conservation_drift(
    vf: PolyVectorField, constants: Sequence[PolyScalarField], x0, config: IntegratorConfig
) -> np.ndarray:
    """Per-constant ``max_t |C(x(t)) - C(x0)|`` over the sampled trajectory."""
    traj = integrate(vf, x0, config)
    if traj.diverged:
        raise DivergedError(f"trajectory left the finite range at t = {traj.times[-1] + config.step:g}")
    out = np.empty(len(constants))
    for j, c in enumerate(constants):
        values = c.eval_batch(traj.states)
        out[j] = np.max(np.abs(values - values[0]))
    return out


@dataclass(frozen=True)
class ProbeReport:
    sample_count: int
    delta: float
    epsilon: float
    max_deviation: float
    escapes: int
    diverged: int
    max_conservation_drift: list[float] = field(default_factory=list)
    seed: int | None = None
    step: float = 0.0
    horizon: float = 0.0
    sampler: str = SAMPLER

    def to_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "max_deviation": self.max_deviation,
            "escapes": self.escapes,
            "diverged": self.diverged,
            "max_conservation_drift": list(self.max_conservation_drift),
            "seed": self.seed,
            "step": self.step,
            "horizon": self.horizon,
            "sampler": self.sampler,
        }


def sphere_samples(dim: int, n: int, radius: float, seed: int | None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return radius * g / norms


def stability_probe(
    vf: PolyVectorField,
    x_e,
    delta: float,
    epsilon: float,
    n_samples: int,
    config: IntegratorConfig,
    seed: int | None = 0,
    constants: Sequence[PolyScalarField] = (),
) -> ProbeReport:
    """Integrate ``n_samples`` starts on the ``delta``-sphere around ``x_e``.

    A sample escapes when its distance to ``x_e`` exceeds ``epsilon`` at any
    step or the state stops being finite. All samples advance together as
    one batch, which keeps results bit-identical for a fixed seed.
    """
    if not 0 < delta < epsilon:
        raise ValueError("need 0 < delta < epsilon")
    x_e = np.asarray(x_e, dtype=float).ravel()
    X = x_e[None, :] + sphere_samples(vf.dim, n_samples, delta, seed)
    c0 = [c.eval_batch(X) for c in constants]
    drift = np.zeros(len(constants))
    dev = np.linalg.norm(X - x_e, axis=1)
    max_dev = dev.copy()
    escaped = dev > epsilon
    dead = np.zeros(n_samples, dtype=bool)
    for _ in range(config.n_steps):
        live = ~dead
        if not live.any():
            break
        Y = rk4_step(vf, X[live], config.step)
        finite = np.all(np.isfinite(Y), axis=1)
        idx = np.flatnonzero(live)
        dead[idx[~finite]] = True
        X[idx[finite]] = Y[finite]
        dev = np.linalg.norm(X[idx[finite]] - x_e, axis=1)
        max_dev[idx[finite]] = np.maximum(max_dev[idx[finite]], dev)
        escaped[idx[finite]] |= dev > epsilon
        for j, c in enumerate(constants):
            d = np.abs(c.eval_batch(X[idx[finite]]) - c0[j][idx[finite]])
            if d.size:
                drift[j] = max(drift[j], float(d.max()))
    escaped |= dead
    finite_dev = max_dev[~dead]
    return ProbeReport(
        sample_count=n_samples,
        delta=delta,
        epsilon=epsilon,
        max_deviation=float(finite_dev.max()) if finite_dev.size else float("inf"),
        escapes=int(escaped.sum()),
        diverged=int(dead.sum()),
        max_conservation_drift=[float(d) for d in drift],
        seed=seed,
        step=config.step,
        horizon=config.horizon,
    )
