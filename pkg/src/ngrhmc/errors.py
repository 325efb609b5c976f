"""Exception hierarchy shared by all modules."""

from __future__ import annotations

import numpy as np


class NGRHMCError(Exception):
    """Base class for sampler errors."""

    module = "ngrhmc"

    def diagnostic(self) -> str:
        return f"[{self.module}] {type(self).__name__}: {self}"


class NonFiniteEvaluation(NGRHMCError):
    module = "target"

    def __init__(self, what: str, q):
        self.q = np.array(q, dtype=float, copy=True)
        super().__init__(f"non-finite {what} at q={self.q.tolist()}")


class DegenerateNormal(NGRHMCError):
    module = "constraints"


class AmbiguousSign(NGRHMCError):
    """An l1 collision sits on a corner where some |w_i| is below the sign tolerance."""

    module = "constraints"


class InfeasibleStart(NGRHMCError):
    module = "sampler"

    def __init__(self, index: int, value: float, where: str = "q0"):
        self.index = index
        self.value = value
        super().__init__(
            f"{where} violates constraint {index} (c = {value:.6g}); strict feasibility required"
        )


class DegeneratePoly(NGRHMCError):
    module = "polysolve"


class OutOfStepRange(NGRHMCError):
    module = "integrator"


class StepSizeUnderflow(NGRHMCError):
    module = "integrator"


class EventStorm(NGRHMCError):
    module = "sampler"

    def __init__(self, time: float, count: int, constraint: int | None):
        self.time = time
        self.count = count
        self.constraint = constraint
        who = "refresh events" if constraint is None else f"collisions with constraint {constraint}"
        super().__init__(
            f"{count} events within one unit of process time ending at t={time:.6g}, "
            f"mostly {who}"
        )


class UnknownExample(NGRHMCError, KeyError):
    module = "oracles"

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class OracleInfeasible(NGRHMCError):
    module = "oracles"


class ChainFailures(NGRHMCError):
    """Raised after all chains finish when at least one of them failed."""

    module = "sampler"

    def __init__(self, outputs: list, errors: dict[int, BaseException]):
        self.outputs = outputs
        self.errors = errors
        lines = [f"chain {i}: {type(e).__name__}: {e}" for i, e in sorted(errors.items())]
        super().__init__(f"{len(errors)} of {len(outputs)} chains failed; " + "; ".join(lines))


class UnknownDemo(NGRHMCError, KeyError):
    module = "cli"

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""
