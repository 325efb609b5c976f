"""Momentum updates applied when the position hits a constraint boundary.

All kernels reverse the normal component of the momentum exactly,
``p^T n = -p'^T n``. The randomized kernels additionally replace the
tangential part by fresh Gaussian noise so the update leaves ``N(0, I)``
invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .constraints import NormalVector
from .errors import DegenerateNormal

NORMAL_TOL = 1e-12


class Kernel(str, Enum):
    DETERMINISTIC = "deterministic"
    RANDOMIZED = "randomized"
    SPARSE_RANDOMIZED = "sparse-randomized"


@dataclass
class CollisionEvent:
    time: float
    constraint_index: int
    position: np.ndarray
    incoming_momentum: np.ndarray
    normal: NormalVector

    def inner(self) -> float:
        return float(self.incoming_momentum @ self.normal.n)

    def is_outgoing(self) -> bool:
        """True if the incoming momentum crosses the boundary outwards (up to rounding)."""
        n = self.normal.n
        p = self.incoming_momentum
        tol = 1e-12 * math.sqrt(float(p @ p)) * math.sqrt(float(n @ n))
        return self.inner() < tol


def _check(n: np.ndarray) -> float:
    nn = float(n @ n)
    if not math.sqrt(nn) >= NORMAL_TOL:
        raise DegenerateNormal(f"|n| = {math.sqrt(nn):.3g} below {NORMAL_TOL}")
    return nn


def reflect_deterministic(p_in: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Mirror the momentum in the tangent plane: ``p' - 2 (p'^T n / n^T n) n``."""
    nn = _check(n)
    p = p_in - (2.0 * float(p_in @ n) / nn) * n
    # reflection is an isometry; rescaling removes the rounding drift in the norm
    a, b = math.sqrt(float(p @ p)), math.sqrt(float(p_in @ p_in))
    if a > 0.0 and a != b:
        p *= b / a
    return p


def reflect_randomized(p_in: np.ndarray, n: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``z - ((p' + z)^T n / n^T n) n`` for a standard normal ``z``."""
    nn = _check(n)
    return z - (float((p_in + z) @ n) / nn) * n


def reflect_sparse_randomized(
    p_in: np.ndarray, n: np.ndarray, active: np.ndarray, z_active: np.ndarray
) -> np.ndarray:
    """Randomized update restricted to the coordinates in ``active``.

    Entries outside ``active`` are copied unchanged; ``n`` must vanish there.
    """
    if len(active) == 0:
        raise DegenerateNormal("empty active set")
    out = p_in.copy()
    out[active] = reflect_randomized(p_in[active], n[active], z_active)
    return out


def apply_kernel(
    kind: Kernel,
    p_in: np.ndarray,
    normal: NormalVector,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Dispatch on ``kind`` and guarantee the result points inwards.

    Reversal is exact in exact arithmetic; if rounding leaves the outgoing
    momentum with a non-positive normal component while the incoming one was
    strictly outward, the normal component is reset to minus the incoming one.
    """
    kind = Kernel(kind)
    n = normal.n
    if kind is Kernel.DETERMINISTIC:
        p = reflect_deterministic(p_in, n)
    elif kind is Kernel.RANDOMIZED:
        p = reflect_randomized(p_in, n, rng.standard_normal(n.size))
    else:
        act = normal.active
        p = reflect_sparse_randomized(p_in, n, act, rng.standard_normal(len(act)))
    inner_in = float(p_in @ n)
    inner_out = float(p @ n)
    if inner_in < 0.0 and inner_out <= 0.0:
        # push the normal component to -inner_in, or to a few ulps of |p||n| when
        # -inner_in is itself below rounding level, so the move really points inwards
        nn = float(n @ n)
        floor = 8.0 * np.finfo(float).eps * math.sqrt(float(p @ p) * nn)
        p = p + ((max(-inner_in, floor) - inner_out) / nn) * n
    return p


def reflect(ev: CollisionEvent, kind: Kernel, rng=None) -> np.ndarray:
    return apply_kernel(kind, ev.incoming_momentum, ev.normal, rng)
