"""Reproducible experiment drivers: the ellipse pathology, the four bivariate
panels and the toy-model comparison grid.

Each driver returns plain data (arrays and dataclasses); the CLI and the
scripts in ``scripts/`` write them to disk.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .boundary import Kernel
from .catalog import ELLIPSE, build_example
from .diagnostics import ConstantSeriesWarning, combined_se, ess_geyer, mcsd, mean_se
from .sampler import SamplerConfig, Trajectory, run_chains
from .target import Standardization

DEMOS = ("fig1", "fig2", "toy-table")
FIG2_PANELS = ("linear", "l1", "l2", "spectral")
TOY_MODELS = ("iid", "ar1", "mixture")


# --------------------------------------------------------------------------
# ellipse pathology
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipseStart:
    """Point just inside the ellipse boundary with a nearly tangential velocity.

    ``theta`` is the boundary angle in the parametrization
    ``(a cos theta, b sin theta)``; the momentum has length ``speed``, runs
    along the clockwise tangent and tilts outwards by ``tilt`` radians.
    """

    theta: float = 2.0
    tilt: float = 1e-3
    speed: float = 2.5
    inset: float = 0.9999

    def axes(self) -> tuple[float, float]:
        const, (w1, w2) = ELLIPSE
        return math.sqrt(const / w1), math.sqrt(const / w2)

    def position(self) -> np.ndarray:
        a, b = self.axes()
        return self.inset * np.array([a * math.cos(self.theta), b * math.sin(self.theta)])

    def momentum(self) -> np.ndarray:
        a, b = self.axes()
        th = self.theta
        tangent = np.array([a * math.sin(th), -b * math.cos(th)])
        outward = np.array([math.cos(th) / a, math.sin(th) / b])
        tangent /= np.linalg.norm(tangent)
        outward /= np.linalg.norm(outward)
        return self.speed * (math.cos(self.tilt) * tangent + math.sin(self.tilt) * outward)


FIG1_START = EllipseStart()


@dataclass
class CollisionLog:
    """Collision times and positions of one ellipse run."""

    kernel: str
    seed: int
    times: np.ndarray
    positions: np.ndarray
    wall: float = 0.0

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def median_gap(self) -> float:
        return float(np.median(self.gaps))

    def trend(self) -> float:
        """Spearman correlation between gap length and collision index (negative = clustering)."""
        g = self.gaps
        return float(spearmanr(np.arange(g.size), g)[0])

    def end_ratio(self, k: int = 25) -> float:
        """Mean of the last ``k`` gaps over the mean of the first ``k``."""
        g = self.gaps
        return float(g[-k:].mean() / g[:k].mean())


def ellipse_collisions(
    kernel: Kernel | str,
    seed: int = 1,
    n_collisions: int = 100,
    horizon: float = 5000.0,
    refresh: bool = False,
    start: EllipseStart = FIG1_START,
    max_events_per_unit_time: int = 10_000,
) -> CollisionLog:
    """Run on the ellipse from ``start`` until ``n_collisions`` collisions (or ``horizon``).

    The run uses the identity standardization so that both kernels see the
    same geometry, and no burn-in.
    """
    ex = build_example("fig1-ellipse")
    cfg = SamplerConfig(
        T=horizon,
        N=2,
        kernel=kernel,
        refresh=refresh,
        seed=seed,
        record_positions=True,
        max_events_per_unit_time=max_events_per_unit_time,
    )
    traj = Trajectory(ex.model, ex.constraints, cfg, np.random.default_rng(seed))
    phase = traj.run_phase(
        Standardization.identity(2),
        start.position(),
        start.momentum(),
        horizon,
        2,
        phase="sampling",
        stop_after_collisions=n_collisions,
    )
    hits = [e for e in phase.events if e.kind == "collision"]
    times = np.array([e.time for e in hits])
    pos = np.array([e.position for e in hits]).reshape(-1, 2)
    return CollisionLog(Kernel(kernel).value, seed, times, pos, phase.wall)


@dataclass
class Fig1Result:
    deterministic: list[CollisionLog]
    randomized: list[CollisionLog]

    def gap_ratios(self) -> np.ndarray:
        """Randomized over deterministic median gap, seed by seed."""
        return np.array(
            [r.median_gap / d.median_gap for d, r in zip(self.deterministic, self.randomized)]
        )


def fig1_demo(seeds: Sequence[int] = (1, 2, 3), n_collisions: int = 100) -> Fig1Result:
    """Deterministic vs. randomized reflections from the same start, seed by seed.

    The deterministic run has refreshes switched off so that only the
    reflection dynamics act. The randomized run keeps them: without
    refreshes a randomized bounce can leave the particle on an oscillation
    that never reaches the boundary again.
    """
    det = [ellipse_collisions(Kernel.DETERMINISTIC, s, n_collisions, refresh=False) for s in seeds]
    ran = [ellipse_collisions(Kernel.RANDOMIZED, s, n_collisions, refresh=True) for s in seeds]
    return Fig1Result(det, ran)


# --------------------------------------------------------------------------
# bivariate panels
# --------------------------------------------------------------------------

def fig2_demo(
    T: float = 10_000.0,
    N: int = 2000,
    chains: int = 1,
    seed: int = 0,
    panels: Sequence[str] = FIG2_PANELS,
    workers: Optional[int] = None,
) -> dict:
    """One batch of chains per constraint panel; returns ``{panel: [TrajectoryOutput]}``."""
    out = {}
    for i, panel in enumerate(panels):
        ex = build_example(f"fig2-{panel}")
        cfg = SamplerConfig(T=T, N=N, chains=chains, seed=seed + i)
        out[panel] = run_chains(ex.model, ex.constraints, cfg, ex.q0, workers=workers)
    return out


# --------------------------------------------------------------------------
# toy-model grid
# --------------------------------------------------------------------------

@dataclass
class ToyRow:
    """Per-parameter summary of one (model, method) cell over independent chains."""

    model: str
    method: str
    parameter: str
    ess: float
    ess_per_sec: float
    mcsd_d: float
    mcsd_c: float
    mean_d: float
    mean_c: float
    se_d: float
    se_c: float

    def d_vs_c(self, k: float = 3.0) -> bool:
        return abs(self.mean_d - self.mean_c) <= k * math.hypot(self.se_d, self.se_c)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ToyTable:
    rows: list[ToyRow] = field(default_factory=list)
    wall: dict = field(default_factory=dict)

    def cell(self, model: str, method: str) -> list[ToyRow]:
        return [r for r in self.rows if r.model == model and r.method == method]

    def methods_agree(self, model: str, k: float = 3.0) -> bool:
        """Constrained and transformed posterior means agree (time-integrated estimates)."""
        a = self.cell(model, "constrained")
        b = self.cell(model, "transformed")
        return all(
            abs(x.mean_c - y.mean_c) <= k * math.hypot(x.se_c, y.se_c) for x, y in zip(a, b)
        )

    def mean_ess_per_sec(self, model: str, method: str) -> float:
        return float(np.mean([r.ess_per_sec for r in self.cell(model, method)]))


def monitor_draws(model, samples: np.ndarray) -> np.ndarray:
    """Monitor values at each discrete sample, shape ``(N, K)``."""
    return np.array([[m(q) for m in model.monitors] for q in samples])


def summarize_cell(name: str, method: str, model, outputs) -> list[ToyRow]:
    draws = [monitor_draws(model, o.samples) for o in outputs]
    names = list(model.monitor_names)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantSeriesWarning)
        for k, pname in enumerate(names):
            d_est = [float(dr[:, k].mean()) for dr in draws]
            d_se = [mean_se(dr[:, k]) for dr in draws]
            c_est = [float(o.time_averages[k]) for o in outputs]
            c_se = [float(o.time_averages_se[k]) for o in outputs]
            ess = [ess_geyer(dr[:, k]) for dr in draws]
            eps = [e / o.wall_sampling for e, o in zip(ess, outputs)]
            rows.append(
                ToyRow(
                    model=name,
                    method=method,
                    parameter=pname,
                    ess=float(np.mean(ess)),
                    ess_per_sec=float(np.mean(eps)),
                    mcsd_d=mcsd(d_est) if len(outputs) > 1 else float("nan"),
                    mcsd_c=mcsd(c_est) if len(outputs) > 1 else float("nan"),
                    mean_d=float(np.mean(d_est)),
                    mean_c=float(np.mean(c_est)),
                    se_d=combined_se(d_se),
                    se_c=combined_se(c_se),
                )
            )
    return rows


def toy_table(
    chains: int = 10,
    T: float = 10_000.0,
    N: int = 1000,
    seed: int = 0,
    models: Sequence[str] = TOY_MODELS,
    workers: Optional[int] = None,
) -> ToyTable:
    """Constrained vs. reparametrized unconstrained sampling of the toy posteriors."""
    table = ToyTable()
    for i, kind in enumerate(models):
        for j, (method, suffix) in enumerate((("constrained", ""), ("transformed", "-transformed"))):
            ex = build_example(f"toy-{kind}{suffix}")
            cfg = SamplerConfig(T=T, N=N, chains=chains, seed=seed + 10 * i + j)
            outs = run_chains(ex.model, ex.constraints, cfg, ex.q0, workers=workers)
            table.rows.extend(summarize_cell(kind, method, ex.model, outs))
            table.wall[f"{kind}/{method}"] = float(sum(o.wall_burn_in + o.wall_sampling for o in outs))
    return table
