"""Independent reference computations used to check the sampler.

Nothing here shares code with the event loop: rejection sampling draws from
an exact unconstrained sampler, truncated-normal moments are closed form and
the root oracle is a brute-force grid scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erfcx

from .errors import OracleInfeasible

MIN_ACCEPTANCE = 1e-5
_SQRT2 = math.sqrt(2.0)
_SQRT2_OVER_PI = math.sqrt(2.0 / math.pi)
ASYMPTOTIC_ALPHA = 8.0


@dataclass
class RejectionResult:
    draws: np.ndarray
    acceptance: float
    n_proposals: int

    @property
    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)

    @property
    def mean_se(self) -> np.ndarray:
        return self.draws.std(axis=0, ddof=1) / math.sqrt(len(self.draws))

    @property
    def var(self) -> np.ndarray:
        return self.draws.var(axis=0, ddof=1)

    @property
    def var_se(self) -> np.ndarray:
        """Delta-method standard error of the sample variance."""
        c = self.draws - self.mean
        return (c**2).std(axis=0, ddof=1) / math.sqrt(len(self.draws))

    def moment(self, f: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
        """Mean and standard error of ``f`` applied row-wise (``f`` takes ``(n, d)``)."""
        v = np.asarray(f(self.draws), dtype=float)
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def rejection_sample(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    constraints: Sequence,
    n_proposals: int,
    rng: np.random.Generator,
    batch: int = 200_000,
) -> RejectionResult:
    """Keep the draws of an exact unconstrained sampler that satisfy every constraint.

    ``sampler(rng, n)`` returns an ``(n, d)`` array.

    Raises
    ------
    OracleInfeasible
        If the acceptance rate falls below ``1e-5``; the caller should fall
        back to analytic moments.
    """
    kept = []
    done = 0
    while done < n_proposals:
        n = min(batch, n_proposals - done)
        q = np.asarray(sampler(rng, n), dtype=float)
        ok = np.ones(n, dtype=bool)
        for c in constraints:
            ok &= np.asarray(c.evaluate(q)) >= 0.0
        kept.append(q[ok])
        done += n
    draws = np.concatenate(kept)
    rate = len(draws) / n_proposals
    if rate < MIN_ACCEPTANCE:
        raise OracleInfeasible(
            f"acceptance rate {rate:.3g} below {MIN_ACCEPTANCE:g} after {n_proposals} proposals"
        )
    return RejectionResult(draws, rate, n_proposals)


def _inverse_mills_gap(alpha: float) -> tuple[float, float]:
    """``delta = lambda(alpha) - alpha`` and ``g`` with ``delta = 1/(alpha + g)``.

    Uses the continued fraction ``lambda = alpha + 1/(alpha + 2/(alpha + 3/...))``
    of the inverse Mills ratio, which converges quickly for large ``alpha``
    and avoids the cancellation in ``1 + alpha*lambda - lambda**2``.
    """
    t = alpha
    for k in range(80, 2, -1):
        t = alpha + k / t
    g = 2.0 / t
    return 1.0 / (alpha + g), g


def truncated_normal_moments(mu: float, sigma: float, lo: float) -> tuple[float, float]:
    """Mean and variance of ``N(mu, sigma^2)`` conditioned on ``x >= lo``.

    ``lo = -inf`` means no truncation. For ``lo`` more than 8 standard
    deviations above ``mu`` a continued-fraction form keeps full precision.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if lo == -math.inf:
        return float(mu), float(sigma**2)
    alpha = (lo - mu) / sigma
    if alpha > ASYMPTOTIC_ALPHA:
        delta, g = _inverse_mills_gap(alpha)
        lam = alpha + delta
        var = delta * (g - delta)
    else:
        lam = _SQRT2_OVER_PI / erfcx(alpha / _SQRT2)
        var = 1.0 + alpha * lam - lam * lam
    return float(mu + sigma * lam), float(sigma**2 * var)


def grid_scan_first_exit(constraint, Q: np.ndarray, n: int = 100_000) -> Optional[float]:
    """First downward zero crossing of ``c`` along the cubic path, by brute force.

    ``Q`` holds the path coefficients over the constraint's active columns.
    Returns the midpoint of the first grid cell ``[s_k, s_{k+1}]`` with
    ``c(s_k) >= 0 > c(s_{k+1})`` (ignoring cells starting below ``1e-10``),
    or ``None``.
    """
    s = np.linspace(0.0, 1.0, n + 1)
    c = np.asarray(constraint.path_values(Q, s), dtype=float)
    cross = np.flatnonzero((c[:-1] >= 0.0) & (c[1:] < 0.0))
    cross = cross[s[cross + 1] > 1e-10]
    if cross.size == 0:
        return None
    k = cross[0]
    # linear interpolation inside the cell
    c0, c1 = c[k], c[k + 1]
    return float(s[k] + (s[k + 1] - s[k]) * c0 / (c0 - c1))


def build_example(name: str):
    """Catalog lookup; see :mod:`ngrhmc.catalog`."""
    from .catalog import build_example as _build

    return _build(name)
