"""Effective sample size, split-Rhat and cross-chain summaries."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ConstantSeriesWarning(UserWarning):
    """A diagnostic was asked about a series with zero variance."""


def autocovariance(x) -> np.ndarray:
    """Biased (``1/N``) autocovariance at all lags via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n]
    return acov / n


def ess_geyer(series, clamp: bool = True) -> float:
    """Effective sample size with Geyer's initial monotone sequence estimator.

    Autocorrelations are summed in consecutive pairs
    ``Gamma_k = rho_{2k} + rho_{2k+1}`` while the pairs stay positive, and
    the pair sums are forced to be non-increasing.

    Parameters
    ----------
    series : array_like, shape (N,)
    clamp : bool
        Cap the result at ``N``. Antithetic series (negative lag-1
        autocorrelation) have a raw ESS above ``N``; pass ``False`` to see it.

    Returns
    -------
    float
        ``N`` for a constant series, with a :class:`ConstantSeriesWarning`.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 10:
        raise ValueError("ESS needs at least 10 values")
    if not np.all(np.isfinite(x)):
        raise ValueError("ESS input contains non-finite values")
    acov = autocovariance(x)
    if acov[0] <= 0.0 or np.ptp(x) == 0.0:
        warnings.warn("constant series; ESS reported as N", ConstantSeriesWarning, stacklevel=2)
        return float(n)
    rho = acov / acov[0]
    n_pairs = (n - 1) // 2
    pairs = rho[0 : 2 * n_pairs : 2] + rho[1 : 2 * n_pairs + 1 : 2]
    positive = pairs > 0.0
    stop = int(np.argmin(positive)) if not positive.all() else n_pairs
    gam = np.minimum.accumulate(pairs[: max(stop, 1)])
    tau = -1.0 + 2.0 * float(gam.sum())
    tau = max(tau, 1.0 / math.log10(n))
    ess = n / tau
    return min(ess, float(n)) if clamp else ess


def split_rhat(chains: Sequence, rank_normalize: bool = False) -> float:
    """Classic potential scale reduction over split chains.

    Every chain is cut into two halves and the usual between/within variance
    ratio is computed over the ``2 * len(chains)`` halves. A single chain is
    accepted and gives the two-halves comparison.
    """
    arrs = [np.asarray(c, dtype=float) for c in chains]
    n = min(a.size for a in arrs)
    if n < 4:
        raise ValueError("each chain needs at least 4 values")
    half = n // 2
    parts = []
    for a in arrs:
        a = a[:n]
        parts.append(a[:half])
        parts.append(a[n - half :])
    x = np.stack(parts)
    if rank_normalize:
        from scipy.stats import norm, rankdata

        r = rankdata(x, method="average").reshape(x.shape)
        x = norm.ppf((r - 0.375) / (x.size + 0.25))
    m, n_h = x.shape
    means = x.mean(axis=1)
    W = x.var(axis=1, ddof=1).mean()
    B = n_h * means.var(ddof=1)
    if W == 0.0:
        if B == 0.0:
            warnings.warn("constant chains; Rhat undefined", ConstantSeriesWarning, stacklevel=2)
            return float("nan")
        return float("inf")
    var_plus = (n_h - 1) / n_h * W + B / n_h
    return float(math.sqrt(var_plus / W))


def mcsd(estimates) -> float:
    """Sample standard deviation of independent per-chain estimates."""
    e = np.asarray(estimates, dtype=float)
    if e.size < 2:
        raise ValueError("need at least two estimates")
    return float(e.std(ddof=1))


def combined_se(ses) -> float:
    """Standard error of the average of independent estimates with standard errors ``ses``."""
    s = np.asarray(ses, dtype=float)
    return float(math.sqrt(float(np.sum(s**2))) / s.size)


def mean_se(series) -> float:
    """Standard error of a series mean based on its Geyer ESS."""
    x = np.asarray(series, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantSeriesWarning)
        ess = ess_geyer(x)
    return float(x.std(ddof=1) / math.sqrt(ess))


def within_se(estimate_a, se_a, estimate_b, se_b, k: float = 3.0) -> bool:
    """``|a - b| <= k * sqrt(se_a^2 + se_b^2)`` elementwise, all true."""
    a = np.asarray(estimate_a, dtype=float)
    b = np.asarray(estimate_b, dtype=float)
    s = np.sqrt(np.asarray(se_a, dtype=float) ** 2 + np.asarray(se_b, dtype=float) ** 2)
    return bool(np.all(np.abs(a - b) <= k * s))


@dataclass
class ChainStats:
    """Summary of one monitored quantity over one or several chains."""

    name: str
    mean: float
    sd: float
    ess: float
    ess_per_sec: float
    rhat: float
    mcsd: float
    quantiles: dict = field(default_factory=dict)
    wall_seconds: float = 0.0

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "mean": self.mean,
            "sd": self.sd,
            "ess": self.ess,
            "ess_per_sec": self.ess_per_sec,
            "rhat": self.rhat,
            "mcsd": self.mcsd,
            "quantiles": {str(k): v for k, v in self.quantiles.items()},
        }


def summarize(
    name: str,
    draws: Sequence,
    wall_seconds: float,
    probs: Sequence[float] = (0.025, 0.5, 0.975),
) -> ChainStats:
    """ESS (summed over chains), ESS per sampling-phase second, split-Rhat and MCSD.

    ``draws`` is a list of per-chain series of one scalar quantity.
    """
    arrs = [np.asarray(c, dtype=float) for c in draws]
    pooled = np.concatenate(arrs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantSeriesWarning)
        ess = float(sum(ess_geyer(a) for a in arrs))
        rhat = split_rhat(arrs)
    m = mcsd([a.mean() for a in arrs]) if len(arrs) > 1 else float("nan")
    q = np.quantile(pooled, probs)
    return ChainStats(
        name=name,
        mean=float(pooled.mean()),
        sd=float(pooled.std(ddof=1)),
        ess=ess,
        ess_per_sec=ess / wall_seconds if wall_seconds > 0 else float("inf"),
        rhat=rhat,
        mcsd=m,
        quantiles={float(p): float(v) for p, v in zip(probs, q)},
        wall_seconds=wall_seconds,
    )


def summarize_outputs(outputs, names: Optional[Sequence[str]] = None) -> list[ChainStats]:
    """One :class:`ChainStats` per coordinate from a list of trajectory outputs."""
    d = outputs[0].samples.shape[1]
    names = list(names) if names else [f"q{i + 1}" for i in range(d)]
    wall = float(sum(o.wall_sampling for o in outputs))
    return [summarize(names[i], [o.samples[:, i] for o in outputs], wall) for i in range(d)]
