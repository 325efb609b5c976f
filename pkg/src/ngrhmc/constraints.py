"""Inequality constraints ``c(q) >= 0`` and boundary-collision search.

Every constraint sees the trajectory inside one integrator step as a cubic
in the step fraction ``s in [0, 1]``: ``q(s) = Q[0] + Q[1] s + Q[2] s^2 +
Q[3] s^3`` in ORIGINAL coordinates, restricted to the constraint's active
columns. Collision search returns the smallest ``s`` at which ``c`` crosses
zero going downwards (an exit), or ``None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import polysolve
from .errors import AmbiguousSign, DegenerateNormal, DegeneratePoly, InfeasibleStart, NonFiniteEvaluation
from .target import Standardization

ROOT_H_MIN = 1e-10  # ignore roots this close to the step start (the boundary we just left)
SIGN_TOL = 1e-12
START_TOL = 1e-8
NORMAL_TOL = 1e-12
ROOT_TOL = 1e-13


@dataclass(frozen=True)
class NormalVector:
    n: np.ndarray
    active: np.ndarray


def _as_dense(A) -> np.ndarray:
    if sp.issparse(A):
        return np.asarray(A.toarray(), dtype=float)
    return np.atleast_2d(np.asarray(A, dtype=float))


def _active_columns(A: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.any(A != 0.0, axis=0))


def _exit_roots_cubic(c, lo: float, hi: float) -> Optional[float]:
    """First downward crossing of the cubic ``c`` in ``(max(lo, ROOT_H_MIN), hi]``."""
    try:
        roots = polysolve.cubic_roots(c)
    except DegeneratePoly:
        return None
    lo = max(lo, ROOT_H_MIN)
    for r in roots:
        if r <= lo or r > hi:
            continue
        _, dc = polysolve.horner2(c, r)
        if dc < 0.0:
            return r
    return None


def _bisect_exit(g: Callable[[float], float], lo: float, hi: float, width: float = 1e-12) -> float:
    """Shrink ``[lo, hi]`` with ``g(lo) >= 0 > g(hi)``; returns the feasible end."""
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return lo


class Constraint:
    """Base class. Subclasses set ``dim`` and ``active``."""

    dim: int
    active: np.ndarray
    kind = "constraint"

    def evaluate(self, q):
        raise NotImplementedError

    def gradient(self, q, strict: bool = True) -> np.ndarray:
        raise NotImplementedError

    def path_values(self, Q: np.ndarray, s):
        """``c`` along the cubic path at fractions ``s`` (``Q`` over active columns)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        qa = Q[0] + s[:, None] * (Q[1] + s[:, None] * (Q[2] + s[:, None] * Q[3]))
        return self._evaluate_active(qa)

    def _evaluate_active(self, qa: np.ndarray):
        raise NotImplementedError

    def _endpoint_values(self, Q: np.ndarray) -> tuple[float, float]:
        v = self._evaluate_active(np.stack((Q[0], Q.sum(axis=0))))
        return float(v[0]), float(v[1])

    def _first_exit(self, Q: np.ndarray) -> Optional[float]:
        raise NotImplementedError

    def first_exit(self, Q: np.ndarray) -> Optional[float]:
        """Collision fraction for path coefficients ``Q`` of shape ``(4, len(active))``.

        Falls back to bisection if the variant-specific search misses an exit
        that the endpoint value proves exists.
        """
        c0, c1 = self._endpoint_values(Q)
        if c0 < -START_TOL:
            raise InfeasibleStart(-1, c0, where="step start")
        s = self._first_exit(Q)
        if s is not None:
            return s
        if c1 < 0.0:
            r = _bisect_exit(lambda x: float(self.path_values(Q, x)[0]), 0.0, 1.0)
            if r > ROOT_H_MIN:
                return r
        return None

    def active_set(self) -> np.ndarray:
        return self.active

    def describe(self) -> dict:
        return {"type": self.kind}


class Linear(Constraint):
    """``a^T q + b >= 0``."""

    kind = "linear"

    def __init__(self, a, b: float):
        a = np.asarray(a.toarray() if sp.issparse(a) else a, dtype=float).reshape(-1)
        self.a = a
        self.b = float(b)
        self.dim = a.size
        self.active = np.flatnonzero(a)
        if self.active.size == 0:
            raise ValueError("linear constraint with zero coefficient vector")
        self._a_act = a[self.active]

    def evaluate(self, q):
        q = np.asarray(q, dtype=float)
        return q @ self.a + self.b if q.ndim > 1 else float(q @ self.a + self.b)

    def _evaluate_active(self, qa):
        return qa @ self._a_act + self.b

    def gradient(self, q, strict: bool = True) -> np.ndarray:
        return self.a.copy()

    def path_poly(self, Q) -> list[float]:
        c = (Q @ self._a_act).tolist()
        c[0] += self.b
        return c

    def first_exit(self, Q):
        c = self.path_poly(Q)
        if c[0] < -START_TOL:
            raise InfeasibleStart(-1, c[0], where="step start")
        if c[0] - abs(c[1]) - abs(c[2]) - abs(c[3]) > 0.0:
            return None
        s = _exit_roots_cubic(c, 0.0, 1.0)
        if s is None and sum(c) < 0.0:
            r = _bisect_exit(lambda x: polysolve.horner(c, x), 0.0, 1.0)
            if r > ROOT_H_MIN:
                return r
        return s

    def describe(self):
        return {"type": self.kind, "a": self.a.tolist(), "b": self.b}


class _NormBase(Constraint):
    def __init__(self, A, b, v: float):
        A = _as_dense(A)
        if np.any(~np.any(A != 0.0, axis=1)):
            raise ValueError("A has an all-zero row")
        if not v > 0:
            raise ValueError("norm bound v must be positive")
        self.A = A
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.b.size != A.shape[0]:
            raise ValueError("b must have one entry per row of A")
        self.v = float(v)
        self.dim = A.shape[1]
        self.active = _active_columns(A)
        self._A_act = A[:, self.active]

    def w(self, q):
        q = np.asarray(q, dtype=float)
        return q @ self.A.T + self.b

    def path_w(self, Q) -> np.ndarray:
        W = Q @ self._A_act.T
        W[0] += self.b
        return W

    def describe(self):
        return {"type": self.kind, "A": self.A.tolist(), "b": self.b.tolist(), "v": self.v}


class L1Norm(_NormBase):
    """``v - ||A q + b||_1 >= 0``."""

    kind = "l1"

    def evaluate(self, q):
        w = self.w(q)
        return self.v - np.abs(w).sum(axis=-1) if w.ndim > 1 else float(self.v - np.abs(w).sum())

    def _evaluate_active(self, qa):
        w = qa @ self._A_act.T + self.b
        return self.v - np.abs(w).sum(axis=-1)

    def gradient(self, q, strict: bool = True) -> np.ndarray:
        w = self.w(q)
        if strict and np.any(np.abs(w) < SIGN_TOL):
            raise AmbiguousSign(f"|w_i| < {SIGN_TOL} at an l1 collision (corner)")
        return -(self.A.T @ np.sign(w))

    def _first_exit(self, Q):
        W = self.path_w(Q)
        if self.v - np.abs(W).sum() > 0.0:
            return None
        cols = W.T.tolist()
        breaks = []
        for wc in cols:
            try:
                breaks.extend(r for r in polysolve.cubic_roots(wc) if 0.0 < r < 1.0)
            except DegeneratePoly:
                pass
        breaks.sort()
        edges = [0.0] + breaks + [1.0]
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi <= lo:
                continue
            mid = 0.5 * (lo + hi)
            sgn = [math.copysign(1.0, polysolve.horner(wc, mid)) for wc in cols]
            c = [0.0, 0.0, 0.0, 0.0]
            c[0] = self.v
            for s_i, wc in zip(sgn, cols):
                for k in range(4):
                    c[k] -= s_i * wc[k]
            r = _exit_roots_cubic(c, lo, hi)
            if r is not None:
                for bpt in breaks:
                    if abs(r - bpt) <= SIGN_TOL:
                        raise AmbiguousSign(f"l1 collision at a sign change (s={r:.15g})")
                return r
        return None


class L2Norm(_NormBase):
    """``v^2 - ||A q + b||_2^2 >= 0``."""

    kind = "l2"

    def evaluate(self, q):
        w = self.w(q)
        return self.v**2 - (w * w).sum(axis=-1) if w.ndim > 1 else float(self.v**2 - w @ w)

    def _evaluate_active(self, qa):
        w = qa @ self._A_act.T + self.b
        return self.v**2 - (w * w).sum(axis=-1)

    def gradient(self, q, strict: bool = True) -> np.ndarray:
        return -2.0 * (self.A.T @ self.w(q))

    def path_poly(self, Q) -> list[float]:
        W = self.path_w(Q)
        G = W @ W.T
        c = [0.0] * 7
        for j in range(4):
            for k in range(4):
                c[j + k] -= G[j, k]
        c[0] += self.v**2
        return c

    def _first_exit(self, Q):
        W = self.path_w(Q)
        bound = np.abs(W).sum(axis=0)
        if bound @ bound < self.v**2:
            return None
        c = self.path_poly(Q)
        try:
            seq = polysolve.sturm_sequence(c)
        except DegeneratePoly:
            return None
        p = seq[0]
        lo = ROOT_H_MIN
        for _ in range(7):
            if lo >= 1.0:
                break
            r = polysolve.first_root(p, lo, 1.0, ROOT_TOL, seq=seq)
            if r is None:
                return None
            _, dc = polysolve.horner2(p, r)
            if dc < 0.0:
                return r
            lo = r + 1e-12
        return None


class NonlinearAffine(Constraint):
    """``F(A q + b) >= 0`` for a piecewise-smooth ``F``.

    ``F`` (and ``gradF``) take ``w`` of shape ``(d_F,)``; with
    ``vectorized=True`` ``F`` must also accept a stack ``(n, d_F)``.
    Collision search samples ``F`` on ``grid_n`` interior points of the step,
    brackets the first sign change and bisects it to ``1e-12`` in ``s``.
    """

    kind = "nonlinear"

    def __init__(
        self,
        A,
        b,
        F: Callable,
        gradF: Callable,
        grid_n: int = 8,
        vectorized: bool = False,
        name: str = "F",
    ):
        A = _as_dense(A)
        if np.any(~np.any(A != 0.0, axis=1)):
            raise ValueError("A has an all-zero row")
        self.A = A
        self.b = np.asarray(b, dtype=float).reshape(-1)
        self.F = F
        self.gradF = gradF
        self.grid_n = int(grid_n)
        if self.grid_n < 1:
            raise ValueError("grid_n must be >= 1")
        self.vectorized = vectorized
        self.name = name
        self.dim = A.shape[1]
        self.active = _active_columns(A)
        self._A_act = A[:, self.active]
        self._grid = np.linspace(0.0, 1.0, self.grid_n + 2)

    def w(self, q):
        return np.asarray(q, dtype=float) @ self.A.T + self.b

    def _F_many(self, w: np.ndarray) -> np.ndarray:
        if self.vectorized:
            out = np.asarray(self.F(w), dtype=float)
        else:
            out = np.array([self.F(wi) for wi in w], dtype=float)
        return out

    def evaluate(self, q):
        w = self.w(q)
        if w.ndim > 1:
            return self._F_many(w)
        val = float(self.F(w))
        if not math.isfinite(val):
            raise NonFiniteEvaluation("constraint function", q)
        return val

    def _evaluate_active(self, qa):
        return self._F_many(qa @ self._A_act.T + self.b)

    def gradient(self, q, strict: bool = True) -> np.ndarray:
        return self.A.T @ np.asarray(self.gradF(self.w(q)), dtype=float)

    def _first_exit(self, Q):
        W = Q @ self._A_act.T
        W[0] += self.b
        s = self._grid
        wg = W[0] + s[:, None] * (W[1] + s[:, None] * (W[2] + s[:, None] * W[3]))
        g = self._F_many(wg)
        neg = np.flatnonzero(g[1:] < 0.0)
        if neg.size == 0:
            return None
        k = neg[0] + 1

        def gfun(x):
            wx = W[0] + x * (W[1] + x * (W[2] + x * W[3]))
            return float(self.F(wx[None, :])[0]) if self.vectorized else float(self.F(wx))

        r = _bisect_exit(gfun, float(s[k - 1]), float(s[k]))
        return r if r > ROOT_H_MIN else None

    def describe(self):
        return {"type": self.kind, "F": self.name, "A": self.A.tolist(), "b": self.b.tolist()}


# --------------------------------------------------------------------------
# functional interface
# --------------------------------------------------------------------------

def evaluate(c: Constraint, q) -> float:
    return c.evaluate(q)


def inward_normal(c: Constraint, std: Standardization, qbar, strict: bool = True) -> NormalVector:
    """Inward normal ``S * grad_q c`` at ``q = m + S qbar``.

    With ``strict=False`` an l1 corner is resolved by treating the ambiguous
    components as zero instead of raising :class:`AmbiguousSign`.
    """
    q = std.map(np.asarray(qbar, dtype=float))
    n = std.S * c.gradient(q, strict=strict)
    if not np.all(np.isfinite(n)):
        raise NonFiniteEvaluation("constraint gradient", q)
    if math.sqrt(float(n @ n)) < NORMAL_TOL:
        raise DegenerateNormal(f"|n| < {NORMAL_TOL} at q={q.tolist()}")
    return NormalVector(n, c.active)


def path_coefficients(step, std: Standardization, d: int) -> np.ndarray:
    """Cubic coefficients ``(4, d)`` of ``q(s)`` in original coordinates."""
    Qbar = step.coefficients(slice(0, d))
    Q = Qbar * std.S
    Q[0] += std.m
    return Q


def locate_collision(c: Constraint, step, std: Standardization) -> Optional[float]:
    Q = path_coefficients(step, std, c.dim)
    return c.first_exit(Q[:, c.active])
