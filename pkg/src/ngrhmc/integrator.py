"""Bogacki-Shampine 3(2) integration of the augmented Hamiltonian ODE.

State layout of the augmented vector ``y`` (``d`` = dimension, ``K`` = user
monitors)::

    y[0:d]          qbar    position, standardized coordinates
    y[d:2d]         pbar    momentum
    y[2d]           Lambda  integrated refresh rate
    y[2d+1:3d+1]    int qbar dt        (only when moments are tracked)
    y[3d+1:4d+1]    int qbar**2 dt     (only when moments are tracked)
    y[...:]         int M_k(q) dt      user monitors, original coordinates

The coordinate moments are integrated in standardized coordinates so the
time-averaged variance does not suffer cancellation when |m| >> S.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteEvaluation, OutOfStepRange, StepSizeUnderflow
from .target import Standardization, TargetModel

# Bogacki & Shampine (1989), FSAL form
_A21 = 0.5
_A32 = 0.75
_B1, _B2, _B3 = 2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0
# difference between the 3rd and 2nd order solutions
_E1, _E2, _E3, _E4 = -5.0 / 72.0, 1.0 / 12.0, 1.0 / 9.0, -1.0 / 8.0


@dataclass
class StepControl:
    abs_tol: float = 1e-4
    rel_tol: float = 1e-4
    h_init: float = 0.1
    h_min: float = 1e-9
    h_max: float = 10.0
    safety: float = 0.9

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.h_min < self.h_max):
            raise ValueError("need 0 < h_min < h_max")
        if not (0 < self.safety <= 1):
            raise ValueError("safety must lie in (0, 1]")


class StateLayout:
    """Index bookkeeping for the augmented state vector."""

    def __init__(self, dim: int, n_monitors: int, moments: bool = True):
        d = dim
        self.dim = d
        self.n_monitors = n_monitors
        self.moments = moments
        self.q = slice(0, d)
        self.p = slice(d, 2 * d)
        self.lam = 2 * d
        off = 2 * d + 1
        if moments:
            self.r_q = slice(off, off + d)
            self.r_q2 = slice(off + d, off + 2 * d)
            off += 2 * d
        else:
            self.r_q = self.r_q2 = None
        self.r_mon = slice(off, off + n_monitors)
        self.integrals = slice(2 * d + 1, off + n_monitors)
        self.size = off + n_monitors

    def pack(self, qbar, pbar, lam=0.0, integrals=None) -> np.ndarray:
        y = np.zeros(self.size)
        y[self.q] = qbar
        y[self.p] = pbar
        y[self.lam] = lam
        if integrals is not None:
            y[self.integrals] = integrals
        return y


class AugmentedFlow:
    """Right-hand side ``dy/dt`` of the augmented ODE.

    ``dqbar = pbar``, ``dpbar = S * grad log pi(m + S qbar)``,
    ``dLambda = lam`` and ``dR_k = M_k(m + S qbar)``.
    """

    def __init__(
        self,
        model: TargetModel,
        std: Standardization,
        lam: float,
        moments: bool = True,
    ):
        self.model = model
        self.std = std
        self.lam = float(lam)
        self.layout = StateLayout(model.dim, model.n_monitors, moments)
        self._m = std.m
        self._S = std.S
        self._grad = model.grad_log_density
        self._monitors = tuple(model.monitors)
        self._lam_arr = np.array([self.lam])
        self.n_evals = 0

    def __call__(self, y: np.ndarray) -> np.ndarray:
        d = self.layout.dim
        qbar = y[:d]
        q = self._m + self._S * qbar
        g = self._grad(q)
        parts = [y[d : 2 * d], self._S * g, self._lam_arr]
        if self.layout.moments:
            parts.append(qbar)
            parts.append(qbar * qbar)
        if self._monitors:
            parts.append(np.array([m(q) for m in self._monitors], dtype=float))
        dy = np.concatenate(parts)
        self.n_evals += 1
        if not np.isfinite(dy).all():
            raise NonFiniteEvaluation("gradient or monitor", q)
        return dy


def rhs(model, std, constraints_unused, y, lam, moments: bool = False) -> np.ndarray:
    """Functional form of :class:`AugmentedFlow` for one-off evaluations."""
    return AugmentedFlow(model, std, lam, moments)(np.asarray(y, dtype=float))


class DenseStep:
    """An accepted step with cubic Hermite dense output on ``[t0, t1]``."""

    __slots__ = ("t0", "t1", "y0", "y1", "f0", "f1")

    def __init__(self, t0, t1, y0, y1, f0, f1):
        if not t1 > t0:
            raise ValueError("need t1 > t0")
        self.t0 = t0
        self.t1 = t1
        self.y0 = y0
        self.y1 = y1
        self.f0 = f0
        self.f1 = f1

    @property
    def dt(self) -> float:
        return self.t1 - self.t0

    def eval_frac(self, s: float, sl=slice(None)) -> np.ndarray:
        """Interpolant at fractional position ``s`` in ``[0, 1]``."""
        if s == 0.0:
            return self.y0[sl].copy()
        if s == 1.0:
            return self.y1[sl].copy()
        dt = self.t1 - self.t0
        s2 = s * s
        s3 = s2 * s
        h00 = 2.0 * s3 - 3.0 * s2 + 1.0
        h10 = s3 - 2.0 * s2 + s
        h01 = -2.0 * s3 + 3.0 * s2
        h11 = s3 - s2
        return (
            h00 * self.y0[sl]
            + (h10 * dt) * self.f0[sl]
            + h01 * self.y1[sl]
            + (h11 * dt) * self.f1[sl]
        )

    def eval(self, t: float, sl=slice(None)) -> np.ndarray:
        if t < self.t0 or t > self.t1:
            raise OutOfStepRange(f"t={t} outside [{self.t0}, {self.t1}]")
        if t == self.t0:
            return self.y0[sl].copy()
        if t == self.t1:
            return self.y1[sl].copy()
        return self.eval_frac((t - self.t0) / (self.t1 - self.t0), sl)

    def derivative(self, t: float, sl=slice(None)) -> np.ndarray:
        """Time derivative of the interpolant."""
        if t < self.t0 or t > self.t1:
            raise OutOfStepRange(f"t={t} outside [{self.t0}, {self.t1}]")
        dt = self.t1 - self.t0
        s = (t - self.t0) / dt
        s2 = s * s
        d00 = (6.0 * s2 - 6.0 * s) / dt
        d10 = 3.0 * s2 - 4.0 * s + 1.0
        d01 = -d00
        d11 = 3.0 * s2 - 2.0 * s
        return d00 * self.y0[sl] + d10 * self.f0[sl] + d01 * self.y1[sl] + d11 * self.f1[sl]

    def coefficients(self, sl=slice(None)) -> np.ndarray:
        """Monomial coefficients ``(4, n)`` of the interpolant in ``s = (t-t0)/dt``."""
        dt = self.t1 - self.t0
        y0 = self.y0[sl]
        y1 = self.y1[sl]
        g0 = dt * self.f0[sl]
        g1 = dt * self.f1[sl]
        dy = y1 - y0
        return np.stack((y0, g0, 3.0 * dy - 2.0 * g0 - g1, g0 + g1 - 2.0 * dy))

    def truncated(self, s: float) -> "DenseStep":
        """The step cut at fraction ``s`` (endpoint values from the interpolant)."""
        t = self.t0 + s * self.dt
        return DenseStep(self.t0, t, self.y0, self.eval_frac(s), self.f0, self.derivative(t))


def hermite_eval(step: DenseStep, t: float) -> np.ndarray:
    return step.eval(t)


def error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, ctrl: StepControl) -> float:
    scale = ctrl.abs_tol + ctrl.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def next_step_size(h: float, err: float, ctrl: StepControl) -> float:
    if err == 0.0:
        factor = 5.0
    else:
        factor = min(5.0, max(0.2, ctrl.safety * err ** (-1.0 / 3.0)))
    return min(ctrl.h_max, max(ctrl.h_min, h * factor))


def attempt_step(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    f0: np.ndarray,
    t: float,
    h: float,
    ctrl: StepControl,
):
    """One Bogacki-Shampine step of size ``h`` from ``(t, y0)``.

    ``f0`` must equal ``f(y0)``; accepted steps return ``f1 = f(y1)`` inside
    the :class:`DenseStep` for reuse as the next ``f0`` (FSAL).

    Returns ``(accepted, step_or_None, h_next, err)``.
    """
    k1 = f0
    k2 = f(y0 + (h * _A21) * k1)
    k3 = f(y0 + (h * _A32) * k2)
    y1 = y0 + h * (_B1 * k1 + _B2 * k2 + _B3 * k3)
    k4 = f(y1)
    err_vec = h * (_E1 * k1 + _E2 * k2 + _E3 * k3 + _E4 * k4)
    err = error_norm(err_vec, y0, y1, ctrl)
    h_next = next_step_size(h, err, ctrl)
    if err <= 1.0:
        return True, DenseStep(t, t + h, y0, y1, k1, k4), h_next, err
    if h <= ctrl.h_min:
        raise StepSizeUnderflow(f"error {err:.3g} > 1 at minimum step size {h:.3g} (t={t:.6g})")
    return False, None, h_next, err


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    y0,
    t_end: float,
    ctrl: Optional[StepControl] = None,
    t0: float = 0.0,
):
    """Plain adaptive integration from ``t0`` to ``t_end``; returns ``(y, steps)``."""
    ctrl = ctrl or StepControl()
    y = np.asarray(y0, dtype=float)
    fy = f(y)
    t = t0
    h = min(ctrl.h_init, ctrl.h_max)
    steps = []
    while t < t_end:
        h = max(ctrl.h_min, min(h, t_end - t))
        ok, step, h_next, _ = attempt_step(f, y, fy, t, h, ctrl)
        if ok:
            steps.append(step)
            y, fy, t = step.y1, step.f1, step.t1
        h = h_next
    return y, steps
