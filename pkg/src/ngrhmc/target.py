"""Unconstrained target densities, standardization and running moments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NonFiniteEvaluation

SCALE_FLOOR = 1e-8


@dataclass(frozen=True)
class TargetModel:
    """Log-density kernel of the (untruncated) target and its gradient.

    ``monitors`` are scalar functions of the ORIGINAL coordinates whose
    expectations are estimated by time integration along the trajectory.
    Everything stored here must be picklable if chains run in worker
    processes, so prefer bound methods of module-level classes to closures.
    """

    dim: int
    log_density: Callable[[np.ndarray], float]
    grad_log_density: Callable[[np.ndarray], np.ndarray]
    monitors: Sequence[Callable[[np.ndarray], float]] = ()
    monitor_names: Sequence[str] = ()
    param_names: Sequence[str] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.monitor_names and len(self.monitor_names) != len(self.monitors):
            raise ValueError("monitor_names must match monitors")

    @property
    def n_monitors(self) -> int:
        return len(self.monitors)

    def monitor_values(self, q: np.ndarray) -> np.ndarray:
        return np.array([m(q) for m in self.monitors], dtype=float)

    def names(self) -> list[str]:
        if self.param_names:
            return list(self.param_names)
        return [f"q{i + 1}" for i in range(self.dim)]

    def with_monitors(self, monitors, names=()) -> "TargetModel":
        return TargetModel(
            self.dim,
            self.log_density,
            self.grad_log_density,
            tuple(monitors),
            tuple(names),
            self.param_names,
        )


@dataclass(frozen=True)
class Standardization:
    """Affine map ``q = m + S * qbar`` with diagonal positive ``S``."""

    m: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(-1)
        S = np.array(self.S, dtype=float).reshape(-1)
        if m.shape != S.shape:
            raise ValueError("m and S must have the same length")
        if not np.all(S > 0.0):
            raise ValueError("all scales must be strictly positive")
        m.setflags(write=False)
        S.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "S", S)

    @classmethod
    def identity(cls, dim: int) -> "Standardization":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.m.size

    def map(self, qbar: np.ndarray) -> np.ndarray:
        return self.m + self.S * qbar

    def unmap(self, q: np.ndarray) -> np.ndarray:
        return (q - self.m) / self.S


def standardized_log_grad(
    model: TargetModel, std: Standardization, qbar: np.ndarray
) -> tuple[float, np.ndarray]:
    """Log density and its gradient with respect to the standardized coordinates."""
    q = std.map(qbar)
    lp = float(model.log_density(q))
    g = np.asarray(model.grad_log_density(q), dtype=float)
    if not np.isfinite(lp):
        raise NonFiniteEvaluation("log density", q)
    if not np.all(np.isfinite(g)):
        raise NonFiniteEvaluation("gradient", q)
    return lp, std.S * g


@dataclass
class RunningMoments:
    """One-pass (Welford) mean and variance accumulator."""

    dim: int
    count: int = 0
    mean: np.ndarray = field(default=None)
    m2: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        if self.m2 is None:
            self.m2 = np.zeros(self.dim)

    def update(self, q) -> "RunningMoments":
        q = np.asarray(q, dtype=float)
        self.count += 1
        delta = q - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (q - self.mean)
        return self

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.full(self.dim, np.nan)
        return self.m2 / (self.count - 1)

    def finalize(self, floor: float = SCALE_FLOOR) -> Standardization:
        """Standardization from the accumulated moments.

        With fewer than two inputs the scales fall back to 1.
        """
        if self.count < 2:
            return Standardization(self.mean.copy(), np.ones(self.dim))
        sd = np.sqrt(np.maximum(self.variance, 0.0))
        return Standardization(self.mean.copy(), np.maximum(sd, floor))


def welford_update(acc: RunningMoments, q) -> RunningMoments:
    return acc.update(q)


def finite_difference_gradient(f: Callable[[np.ndarray], float], q, rel_step: float = 1e-6):
    """Central differences with step ``rel_step * (1 + |q_i|)``. Testing aid only."""
    q = np.asarray(q, dtype=float)
    g = np.empty_like(q)
    for i in range(q.size):
        h = rel_step * (1.0 + abs(q[i]))
        qp = q.copy()
        qm = q.copy()
        qp[i] += h
        qm[i] -= h
        g[i] = (f(qp) - f(qm)) / (qp[i] - qm[i])
    return g


def curvature_scales(model: TargetModel, q, rel_step: float = 1e-5) -> np.ndarray:
    """Marginal scales ``1/sqrt(-d^2 log pi / dq_i^2)`` from differenced gradients.

    Coordinates with non-negative curvature fall back to 1. Used only to pick
    the initial standardization before the burn-in estimate exists.
    """
    q = np.asarray(q, dtype=float)
    out = np.ones(q.size)
    for i in range(q.size):
        h = rel_step * (1.0 + abs(q[i]))
        qp = q.copy()
        qm = q.copy()
        qp[i] += h
        qm[i] -= h
        hii = (model.grad_log_density(qp)[i] - model.grad_log_density(qm)[i]) / (2.0 * h)
        if np.isfinite(hii) and hii < 0.0:
            out[i] = 1.0 / np.sqrt(-hii)
    return np.maximum(out, SCALE_FLOOR)


def initial_standardization(
    model: TargetModel, q0, mode: str = "curvature", scale: Optional[Sequence[float]] = None
) -> Standardization:
    q0 = np.asarray(q0, dtype=float)
    if scale is not None:
        return Standardization(q0, np.asarray(scale, dtype=float))
    if mode == "unit":
        return Standardization(q0, np.ones(q0.size))
    if mode == "curvature":
        return Standardization(q0, curvature_scales(model, q0))
    raise ValueError(f"unknown initial scale mode {mode!r}")
