"""Event-driven NGRHMC trajectories with refreshes and boundary collisions.

A trajectory integrates the augmented Hamiltonian ODE step by step. Inside
every accepted step it looks for the earliest of

* a momentum refresh, where the integrated rate ``Lambda`` reaches an
  ``Exp(1)`` threshold ``u``;
* a boundary exit of any constraint.

The step is cut at the earliest event, the momentum is updated (fresh
Gaussian draw, or a boundary kernel) and integration restarts from the cut.
Discrete samples on an equispaced clock are read off the dense output.

The total process time ``T`` is split into a burn-in phase and a sampling
phase. Burn-in samples feed a Welford accumulator whose moments define the
standardization used, unchanged, for the whole sampling phase.
"""

from __future__ import annotations

import math
import os
import time
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import polysolve
from .boundary import Kernel, apply_kernel
from .constraints import Constraint, inward_normal, path_coefficients
from .errors import (
    AmbiguousSign,
    ChainFailures,
    DegeneratePoly,
    EventStorm,
    InfeasibleStart,
    NGRHMCError,
)
from .integrator import AugmentedFlow, DenseStep, StepControl, attempt_step
from .target import RunningMoments, Standardization, TargetModel, initial_standardization

MAX_SIGN_RETRIES = 8
COINCIDENT_TOL = 1e-9


@dataclass
class SamplerConfig:
    """Tuning parameters of one trajectory (and of a batch of chains).

    ``T`` is the TOTAL process time; the first ``burn_in_fraction * T`` is
    burn-in. ``N`` discrete samples are taken on an equispaced clock over the
    sampling phase (and, for the Welford estimate, over burn-in as well).
    """

    T: float = 10000.0
    burn_in_fraction: float = 0.5
    N: int = 1000
    lam: float = 0.5
    kernel: Kernel = Kernel.SPARSE_RANDOMIZED
    ctrl: StepControl = field(default_factory=StepControl)
    seed: int = 0
    chains: int = 1
    refresh: bool = True
    adapt: bool = True
    init_scale: str = "curvature"
    max_events_per_unit_time: int = 10_000
    record_events: bool = True
    record_positions: bool = False
    trace_stride: int = 0
    n_batches: int = 25

    def __post_init__(self):
        self.kernel = Kernel(self.kernel)
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.chains < 1:
            raise ValueError("chains must be positive")
        if self.n_batches < 2:
            raise ValueError("n_batches must be at least 2")

    @property
    def burn_in_time(self) -> float:
        return self.T * self.burn_in_fraction

    @property
    def sampling_time(self) -> float:
        return self.T - self.burn_in_time


@dataclass
class EventRecord:
    time: float
    kind: str  # "refresh" | "collision"
    constraint: int  # -1 for refreshes
    phase: str
    position: Optional[np.ndarray] = None


@dataclass
class PhaseResult:
    duration: float
    sample_times: np.ndarray
    samples_bar: np.ndarray
    checkpoints: np.ndarray  # integrals R at every sample time
    final_q: np.ndarray
    final_p: np.ndarray
    events: list
    stats: Counter
    trace: list
    wall: float
    stopped_early: bool = False


@dataclass
class TrajectoryOutput:
    """Everything one trajectory produces (original coordinates throughout)."""

    samples: np.ndarray
    sample_times: np.ndarray
    time_mean: np.ndarray
    time_var: np.ndarray
    time_mean_se: np.ndarray
    time_var_se: np.ndarray
    time_averages: np.ndarray
    time_averages_se: np.ndarray
    monitor_names: list
    events: list
    stats: dict
    standardization: Standardization
    initial_standardization: Standardization
    wall_burn_in: float
    wall_sampling: float
    chain: int = 0
    trace: Optional[np.ndarray] = None

    @property
    def discrete_mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def discrete_var(self) -> np.ndarray:
        return self.samples.var(axis=0, ddof=1)

    def collision_times(self, constraint: Optional[int] = None) -> np.ndarray:
        return np.array(
            [
                e.time
                for e in self.events
                if e.kind == "collision" and (constraint is None or e.constraint == constraint)
            ]
        )

    def refresh_times(self) -> np.ndarray:
        return np.array([e.time for e in self.events if e.kind == "refresh"])


# --------------------------------------------------------------------------
# event-time helpers
# --------------------------------------------------------------------------

def refresh_event_time(step: DenseStep, u: float, lam_index: int) -> Optional[float]:
    """Fraction ``h`` in ``(0, 1]`` where ``Lambda`` first reaches ``u``, else ``None``."""
    l0 = step.y0[lam_index]
    l1 = step.y1[lam_index]
    if l1 < u:
        return None
    if l0 >= u:
        return None
    c = step.coefficients(slice(lam_index, lam_index + 1))[:, 0].tolist()
    c[0] -= u
    try:
        roots = polysolve.cubic_roots(c)
    except DegeneratePoly:
        return None
    for r in roots:
        if 0.0 < r <= 1.0:
            return r
    # rounding put the crossing marginally outside the step
    return 1.0


def check_feasible(constraints: Sequence[Constraint], q, where: str = "q0") -> None:
    for r, c in enumerate(constraints):
        v = c.evaluate(q)
        if not v > 0.0:
            raise InfeasibleStart(r, v, where=where)


def feasible_search(
    constraints: Sequence[Constraint],
    m,
    S,
    rng: np.random.Generator,
    max_tries: int = 100_000,
) -> np.ndarray:
    """Draw ``N(m, S^2)`` proposals until one is strictly feasible."""
    m = np.asarray(m, dtype=float)
    S = np.asarray(S, dtype=float)
    for _ in range(max_tries):
        q = m + S * rng.standard_normal(m.size)
        if all(c.evaluate(q) > 0.0 for c in constraints):
            return q
    raise InfeasibleStart(-1, float("nan"), where=f"feasible search ({max_tries} proposals)")


def batch_means(checkpoints: np.ndarray, times: np.ndarray, n_batches: int) -> np.ndarray:
    """Per-batch time averages of integrated quantities.

    ``checkpoints[k]`` holds the integrals at ``times[k]``; batches are
    formed from contiguous runs of checkpoints.
    """
    n = len(times)
    n_batches = max(2, min(n_batches, n - 1))
    edges = np.linspace(0, n - 1, n_batches + 1).round().astype(int)
    edges = np.unique(edges)
    dR = np.diff(checkpoints[edges], axis=0)
    dt = np.diff(times[edges])
    return dR / dt[:, None]


# --------------------------------------------------------------------------
# one trajectory
# --------------------------------------------------------------------------

class Trajectory:
    """Stateful driver of a single trajectory. Not thread-safe; use one per chain."""

    def __init__(
        self,
        model: TargetModel,
        constraints: Sequence[Constraint],
        cfg: SamplerConfig,
        rng: np.random.Generator,
    ):
        self.model = model
        self.constraints = list(constraints)
        self.cfg = cfg
        self.rng = rng
        for c in self.constraints:
            if c.dim != model.dim:
                raise ValueError(f"constraint dimension {c.dim} != model dimension {model.dim}")

    # -- per-phase machinery -------------------------------------------------

    def _earliest_collision(self, step: DenseStep, std: Standardization):
        if not self.constraints:
            return None, -1
        Q = path_coefficients(step, std, self.model.dim)
        best, who = None, -1
        for r, c in enumerate(self.constraints):
            try:
                s = c.first_exit(Q[:, c.active])
            except InfeasibleStart as exc:
                raise InfeasibleStart(r, exc.value, where=f"step start t={step.t0:.9g}") from None
            if s is not None and (best is None or s < best):
                best, who = s, r
        return best, who

    def _bounce(self, r: int, q_bar: np.ndarray, p_bar: np.ndarray, std, strict: bool) -> np.ndarray:
        nv = inward_normal(self.constraints[r], std, q_bar, strict=strict)
        p = apply_kernel(self.cfg.kernel, p_bar, nv, self.rng)
        # other constraints sitting on their boundary with outward momentum
        if len(self.constraints) > 1:
            q = std.map(q_bar)
            for _ in range(2 * len(self.constraints)):
                fixed = True
                for k, c in enumerate(self.constraints):
                    if k == r or abs(c.evaluate(q)) > COINCIDENT_TOL:
                        continue
                    nk = inward_normal(c, std, q_bar, strict=False)
                    if float(p @ nk.n) < 0.0:
                        p = apply_kernel(self.cfg.kernel, p, nk, self.rng)
                        fixed = False
                if fixed:
                    break
        return p

    def run_phase(
        self,
        std: Standardization,
        q_bar: np.ndarray,
        p_bar: np.ndarray,
        duration: float,
        n_samples: int,
        phase: str = "sampling",
        t_offset: float = 0.0,
        stop_after_collisions: Optional[int] = None,
    ) -> PhaseResult:
        cfg = self.cfg
        ctrl = cfg.ctrl
        rng = self.rng
        flow = AugmentedFlow(self.model, std, cfg.lam, moments=True)
        lay = flow.layout
        lam_i = lay.lam
        d = self.model.dim
        T = float(duration)

        sample_times = np.linspace(0.0, T, n_samples)
        samples = np.empty((n_samples, d))
        checkpoints = np.empty((n_samples, lay.size - (2 * d + 1)))
        y = lay.pack(q_bar, p_bar, 0.0)
        fy = flow(y)
        samples[0] = y[lay.q]
        checkpoints[0] = 0.0
        k_next = 1

        stats = Counter()
        events: list = []
        trace: list = []
        window: deque = deque()
        u = rng.exponential() if cfg.refresh else math.inf
        t = 0.0
        h = min(ctrl.h_init, ctrl.h_max)
        sign_retries = 0
        n_collisions = 0
        stopped = False
        wall0 = time.perf_counter()

        while t < T:
            remaining = T - t
            hh = max(ctrl.h_min, min(h, remaining))
            clipped = hh >= remaining
            ok, step, h_next, _ = attempt_step(flow, y, fy, t, hh, ctrl)
            if not ok:
                stats["rejected"] += 1
                h = h_next
                continue
            if clipped:
                step.t1 = T
            try:
                s_col, r_col = self._earliest_collision(step, std)
            except AmbiguousSign:
                if sign_retries < MAX_SIGN_RETRIES:
                    sign_retries += 1
                    stats["sign_retries"] += 1
                    h = 0.5 * hh
                    continue
                raise
            s_ref = refresh_event_time(step, u, lam_i) if cfg.refresh else None

            if s_ref is None and s_col is None:
                event = None
                cut = step
            else:
                if s_col is not None and (s_ref is None or s_col <= s_ref):
                    event, s_ev = "collision", s_col
                else:
                    event, s_ev = "refresh", s_ref
                cut = step.truncated(s_ev) if s_ev < 1.0 else step

            # harvest samples
            t1 = cut.t1
            while k_next < n_samples and sample_times[k_next] <= t1:
                ts = sample_times[k_next]
                ys = cut.eval(min(max(ts, cut.t0), t1))
                samples[k_next] = ys[lay.q]
                checkpoints[k_next] = ys[lay.integrals]
                k_next += 1
            stats["steps"] += 1
            if cfg.trace_stride and stats["steps"] % cfg.trace_stride == 0:
                trace.append((t_offset + t1, *std.map(cut.y1[lay.q])))

            if event is None:
                y, fy, t = step.y1, step.f1, step.t1
                h = h_next
                sign_retries = 0
                continue

            y = cut.y1.copy()
            t = cut.t1
            q_ev = y[lay.q]
            if event == "refresh":
                y[lay.p] = rng.standard_normal(d)
                y[lam_i] = 0.0
                u = rng.exponential()
                stats["refreshes"] += 1
                idx = -1
            else:
                try:
                    y[lay.p] = self._bounce(r_col, q_ev, y[lay.p], std, strict=True)
                except AmbiguousSign:
                    stats["sign_fallbacks"] += 1
                    y[lay.p] = self._bounce(r_col, q_ev, y[lay.p], std, strict=False)
                stats["collisions"] += 1
                stats[f"collisions_{r_col}"] += 1
                idx = r_col
                n_collisions += 1
            sign_retries = 0
            fy = flow(y)
            gt = t_offset + t
            if cfg.record_events:
                pos = std.map(q_ev) if cfg.record_positions else None
                events.append(EventRecord(gt, event, idx, phase, pos))
            window.append((gt, idx))
            while window and window[0][0] < gt - 1.0:
                window.popleft()
            if len(window) > cfg.max_events_per_unit_time:
                worst, _ = Counter(i for _, i in window).most_common(1)[0]
                raise EventStorm(gt, len(window), None if worst < 0 else worst)
            h = max(ctrl.h_min, hh * (1.0 - s_ev))
            if stop_after_collisions is not None and n_collisions >= stop_after_collisions:
                stopped = True
                break

        stats["evaluations"] = flow.n_evals
        if stopped:
            samples = samples[:k_next]
            checkpoints = checkpoints[:k_next]
            sample_times = sample_times[:k_next]
        return PhaseResult(
            duration=t,
            sample_times=sample_times,
            samples_bar=samples,
            checkpoints=checkpoints,
            final_q=y[lay.q].copy(),
            final_p=y[lay.p].copy(),
            events=events,
            stats=stats,
            trace=trace,
            wall=time.perf_counter() - wall0,
            stopped_early=stopped,
        )

    # -- whole run ---------------------------------------------------------

    def run(self, q0, std0: Optional[Standardization] = None, chain: int = 0) -> TrajectoryOutput:
        cfg = self.cfg
        model = self.model
        d = model.dim
        q0 = np.asarray(q0, dtype=float).reshape(-1)
        if q0.size != d:
            raise ValueError(f"q0 has length {q0.size}, model dimension is {d}")
        check_feasible(self.constraints, q0)
        std = std0 or initial_standardization(model, q0, cfg.init_scale)
        std_init = std

        stats = Counter()
        events: list = []
        trace: list = []
        wall_burn = 0.0
        q_bar = std.unmap(q0)
        t_burn = cfg.burn_in_time
        if t_burn > 0:
            burn = self.run_phase(
                std, q_bar, self.rng.standard_normal(d), t_burn, cfg.N, phase="burn-in"
            )
            stats.update({f"burn_in_{k}": v for k, v in burn.stats.items()})
            events.extend(burn.events)
            trace.extend(burn.trace)
            wall_burn = burn.wall
            q_end = std.map(burn.final_q)
            if cfg.adapt:
                acc = RunningMoments(d)
                for qb in burn.samples_bar:
                    acc.update(std.map(qb))
                std = acc.finalize()
            q_bar = std.unmap(q_end)

        main = self.run_phase(
            std, q_bar, self.rng.standard_normal(d), cfg.sampling_time, cfg.N,
            phase="sampling", t_offset=t_burn,
        )
        stats.update(main.stats)
        events.extend(main.events)
        trace.extend(main.trace)
        return self._summarize(main, std, std_init, stats, events, trace, wall_burn, chain)

    def _summarize(self, main: PhaseResult, std, std_init, stats, events, trace, wall_burn, chain):
        d = self.model.dim
        K = self.model.n_monitors
        T = main.duration
        R = main.checkpoints
        Rend = R[-1]
        m_bar = Rend[:d] / T
        m2_bar = Rend[d : 2 * d] / T
        var_bar = np.maximum(m2_bar - m_bar**2, 0.0)
        time_mean = std.map(m_bar)
        time_var = std.S**2 * var_bar
        mon = Rend[2 * d : 2 * d + K] / T

        B = batch_means(R, main.sample_times, self.cfg.n_batches)
        nb = B.shape[0]
        se_mean_bar = B[:, :d].std(axis=0, ddof=1) / math.sqrt(nb)
        g = B[:, d : 2 * d] - 2.0 * m_bar * B[:, :d]
        se_var_bar = g.std(axis=0, ddof=1) / math.sqrt(nb)
        se_mon = B[:, 2 * d : 2 * d + K].std(axis=0, ddof=1) / math.sqrt(nb)

        return TrajectoryOutput(
            samples=np.array([std.map(qb) for qb in main.samples_bar]).reshape(-1, d),
            sample_times=main.sample_times,
            time_mean=time_mean,
            time_var=time_var,
            time_mean_se=std.S * se_mean_bar,
            time_var_se=std.S**2 * se_var_bar,
            time_averages=mon,
            time_averages_se=se_mon,
            monitor_names=list(self.model.monitor_names)
            or [f"M{k + 1}" for k in range(K)],
            events=events,
            stats=dict(sorted(stats.items())),
            standardization=std,
            initial_standardization=std_init,
            wall_burn_in=wall_burn,
            wall_sampling=main.wall,
            chain=chain,
            trace=np.array(trace) if trace else None,
        )


def run_trajectory(
    model: TargetModel,
    constraints: Sequence[Constraint],
    cfg: SamplerConfig,
    q0,
    rng: Optional[np.random.Generator] = None,
    chain: int = 0,
) -> TrajectoryOutput:
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    return Trajectory(model, constraints, cfg, rng).run(q0, chain=chain)


def chain_rngs(seed: int, chains: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(chains)]


def _chain_job(args):
    model, constraints, cfg, q0, seed_seq, chain = args
    try:
        out = Trajectory(model, constraints, cfg, np.random.default_rng(seed_seq)).run(q0, chain=chain)
        return chain, out, None
    except NGRHMCError as exc:
        return chain, None, exc


def default_workers() -> int:
    env = os.environ.get("NGRHMC_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def run_chains(
    model: TargetModel,
    constraints: Sequence[Constraint],
    cfg: SamplerConfig,
    q0,
    workers: Optional[int] = None,
) -> list[TrajectoryOutput]:
    """Run ``cfg.chains`` independent trajectories.

    Chain ``i`` draws from the ``i``-th child of ``SeedSequence(cfg.seed)``,
    so results depend only on ``(seed, chains)`` and never on ``workers``.
    ``q0`` is either one starting point or one per chain. If any chain fails
    the others still run to completion and :class:`ChainFailures` is raised
    with the successful outputs attached.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    q0 = np.asarray(q0, dtype=float)
    starts = [q0[i] for i in range(cfg.chains)] if q0.ndim == 2 else [q0] * cfg.chains
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    jobs = [(model, constraints, cfg, starts[i], seeds[i], i) for i in range(cfg.chains)]
    if workers == 1 or cfg.chains == 1:
        results = [_chain_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.chains)) as pool:
            results = list(pool.map(_chain_job, jobs))
    outputs = [None] * cfg.chains
    errors = {}
    for i, out, err in results:
        outputs[i] = out
        if err is not None:
            errors[i] = err
    if errors:
        raise ChainFailures(outputs, errors)
    return outputs
